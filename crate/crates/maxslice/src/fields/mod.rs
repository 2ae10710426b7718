//! Uniform Cartesian grids on a single Euclidean end, masked field arrays,
//! finite-difference stencils, quadrature and interpolation.
//!
//! Everything downstream (norms, geometry, evolution, the elliptic solver)
//! is built on the types here. Fields are immutable after construction and
//! all operations are pure readers, so they can be used from parallel code
//! without synchronization. Cells outside a field's valid mask hold a
//! quiet-NaN sentinel; consumers must consult the mask, never the sentinel.

mod deriv;
mod field;
mod grid;
mod interp;
mod io;
mod quad;
mod slab;

pub use deriv::{derivative, derivative_masked, gradient, DiffScheme};
pub use field::{
    sym3, sym4, Field, Mask, ScalarField, SymTensorField3, SymTensorField4, VectorField3,
};
pub use grid::Grid3;
pub use interp::{interp_weights, CubicInterp};
pub use io::{read_mxsf, write_mxsf};
pub use quad::{gauss_legendre, sphere_integral, sphere_integral_sampler, SphereRule};
pub use slab::{SlabLevel, SlabSample, SpacetimeSlab};

/// Deterministic sum of per-chunk partial sums.
///
/// Chunks are fixed-size, partials are combined in index order, so the
/// result is bitwise reproducible regardless of thread count.
pub fn ordered_par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 8192;
    let nchunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        })
        .collect();
    partials.iter().sum()
}

/// Deterministic max over indexed values (NaN entries are skipped).
pub fn ordered_par_max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 8192;
    let nchunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut m = f64::NEG_INFINITY;
            for i in lo..hi {
                let v = f(i);
                if v > m {
                    m = v;
                }
            }
            m
        })
        .collect();
    partials.into_iter().fold(f64::NEG_INFINITY, f64::max)
}
