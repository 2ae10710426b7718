//! Numerical toolkit for deforming asymptotically flat vacuum initial data
//! with small trace into maximal data.
//!
//! The pipeline: generate or load constraint-checked initial data `(g, k)`
//! on a Cartesian grid, evolve it through a harmonic-gauge boost evolution
//! into a cone-masked spacetime slab, solve the maximal surface equation
//! `H_u = 0` for a height function `u` by a frozen-derivative contraction
//! iteration, pull back the induced data of the graph, and verify that the
//! ADM mass, the angular momentum (flux and Komar forms) and the inequality
//! `m >= sqrt(|J|)` survive the deformation.
//!
//! Modules mirror the layers of that pipeline:
//! - [`fields`]: grids, masked field arrays, stencils, quadrature, file I/O
//! - [`sobolev`]: weighted Sobolev / weighted sup norms
//! - [`geometry`]: 3+1 metric algebra and spacelike-graph geometry
//! - [`physics`]: constraint residuals, mass, angular momentum, verdicts
//! - [`datasets`]: exact and constructed initial-data families
//! - [`evolution`]: reduced vacuum evolution, gauge and energy monitors
//! - [`maximal`]: the linearized operator and the fixed-point solver
//! - [`cli`]: batch driver, config, reports

pub mod cli;
pub mod datasets;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod geometry;
pub mod maximal;
pub mod physics;
pub mod sobolev;

pub use error::MxError;

/// Install the global thread pool honoring `MAXSLICE_THREADS`.
///
/// Safe to call more than once; only the first call takes effect.
pub fn init_threads() {
    use std::sync::Once;
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        if let Ok(v) = std::env::var("MAXSLICE_THREADS") {
            if let Ok(n) = v.parse::<usize>() {
                if n > 0 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    });
}
