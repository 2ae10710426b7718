//! Fixed-point sampling of residual fields.
//!
//! Cell-centered grids do not co-locate under 2x refinement, so refinement
//! ratios of pointwise sups are noisy wherever the truncation-error profile
//! varies steeply. Sampling the field by interpolation at a fixed,
//! deterministic set of physical points removes that artifact.

use crate::fields::{CubicInterp, Field};

/// Deterministic probe points inside the shell `r_min <= |x| <= r_max`.
pub fn probe_points(r_min: f64, r_max: f64, count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut rand = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..count)
        .map(|_| {
            let r = r_min + (r_max - r_min) * rand();
            let ct: f64 = 2.0 * rand() - 1.0;
            let st = (1.0 - ct * ct).sqrt();
            let ph = std::f64::consts::TAU * rand();
            [r * st * ph.cos(), r * st * ph.sin(), r * ct]
        })
        .collect()
}

/// Sup of |field| (all components) over the probe points that interpolate;
/// points whose stencil leaves the valid region are skipped.
pub fn probe_sup(field: &Field, points: &[[f64; 3]]) -> f64 {
    let interp = CubicInterp::new(field);
    let mut sup = 0.0f64;
    for &p in points {
        for c in 0..field.ncomp {
            if let Ok(v) = interp.value(c, p) {
                sup = sup.max(v.abs());
            }
        }
    }
    sup
}

/// Sup of |field| over grid cells with radius at least `r_min`.
pub fn sup_outside(field: &Field, r_min: f64) -> f64 {
    let grid = &field.grid;
    let mut sup = 0.0f64;
    for idx in 0..grid.len() {
        if field.mask.active[idx] && grid.radius_of(idx) >= r_min {
            for c in 0..field.ncomp {
                let v = field.at(c, idx).abs();
                if v > sup {
                    sup = v;
                }
            }
        }
    }
    sup
}
