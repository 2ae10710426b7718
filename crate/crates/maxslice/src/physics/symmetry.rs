//! Axisymmetry residuals: sup norms of Lie derivatives along the axial
//! Killing field.

use super::invariants::axial_killing_field;
use crate::fields::{gradient, DiffScheme, ScalarField, SymTensorField3};
use crate::geometry::lie_derivative_metric;

/// `sup |(L_xi T)_ij|` for a symmetric tensor field.
pub fn axisymmetry_residual_tensor(t: &SymTensorField3) -> f64 {
    let xi = axial_killing_field(t.grid.clone());
    lie_derivative_metric(t, &xi, DiffScheme::Fourth).sup()
}

/// `sup |xi . grad u|` for a scalar field.
pub fn axisymmetry_residual_scalar(u: &ScalarField) -> f64 {
    let du = gradient(u, 0, DiffScheme::Fourth);
    let grid = du.grid.clone();
    let mut worst = 0.0f64;
    for idx in 0..grid.len() {
        if !du.mask.active[idx] {
            continue;
        }
        let p = grid.pos_of(idx);
        let v = -p[1] * du.at(0, idx) + p[0] * du.at(1, idx);
        worst = worst.max(v.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Field, Grid3};
    use std::sync::Arc;

    #[test]
    fn flat_metric_is_axisymmetric() {
        let grid = Arc::new(Grid3::cube(12, 6.0, 2).unwrap());
        let g = Field::from_fn(grid, 6, |_, c| match c {
            0 | 3 | 5 => 1.0,
            _ => 0.0,
        });
        assert!(axisymmetry_residual_tensor(&g) < 1e-12);
    }

    #[test]
    fn spherical_metric_residual_is_fd_noise() {
        // Spherically symmetric smooth conformal factor: exactly
        // axisymmetric, so the residual is pure stencil noise.
        let res_at = |n: usize| -> f64 {
            let grid = Arc::new(Grid3::cube(n, 6.0, 2).unwrap());
            let g = Field::from_fn(grid, 6, |p, c| {
                let sg = (1.0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                let phi4 = (1.0 + 0.5 / sg).powi(4);
                match c {
                    0 | 3 | 5 => phi4,
                    _ => 0.0,
                }
            });
            axisymmetry_residual_tensor(&g)
        };
        let coarse = res_at(16);
        let fine = res_at(32);
        let finer = res_at(48);
        assert!(
            coarse / fine > 3.0 && fine / finer > 2.0,
            "noise not shrinking: {coarse} -> {fine} -> {finer}"
        );
        assert!(finer < 1e-2, "residual not noise-sized: {finer}");
    }

    #[test]
    fn angular_bump_residual_scales_linearly() {
        let res_with = |eps: f64| -> f64 {
            let grid = Arc::new(Grid3::cube(20, 5.0, 2).unwrap());
            let g = Field::from_fn(grid, 6, |p, c| {
                let rho2 = p[0] * p[0] + p[1] * p[1];
                let phi = p[1].atan2(p[0]);
                let bump = eps * phi.cos() * (-(rho2 + p[2] * p[2]) / 4.0).exp();
                match c {
                    0 | 3 | 5 => 1.0 + bump,
                    _ => 0.0,
                }
            });
            axisymmetry_residual_tensor(&g)
        };
        let r1 = res_with(1e-2);
        let r2 = res_with(1e-3);
        let slope = (r1 / r2).log10();
        assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
    }
}
