//! Discrete weighted Sobolev and weighted sup norms on the one-end slice,
//! plus the restriction norm over slab slices `t = tau * sigma(x)`.
//!
//! Norms over the noncompact slice are necessarily truncated at the grid
//! boundary, so every value is reported together with the contribution of
//! the outermost radial shell (last 10% of the covered radius). A norm whose
//! shell share is not small has not converged on this domain.

use crate::error::{MxError, Result};
use crate::fields::{
    derivative_masked, ordered_par_max, ordered_par_sum, sym4, DiffScheme, Field, Mask,
    ScalarField, SpacetimeSlab, SymTensorField4,
};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Weight parameters `(s, delta)`: derivative order and radial weight.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightParams {
    pub s: usize,
    pub delta: f64,
}

impl WeightParams {
    pub fn new(s: usize, delta: f64) -> Self {
        WeightParams { s, delta }
    }
}

/// A truncated norm value together with its outer-shell contribution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// Portion of the norm carried by the outermost 10% of the radius;
    /// for sup norms, the sup restricted to that shell.
    pub shell: f64,
}

/// Radial weight function `sigma(x) = (1 + |x|^2)^(1/2)`.
///
/// With a single Euclidean end this is also the manifold weight.
#[inline]
pub fn sigma(x: [f64; 3]) -> f64 {
    (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// All distinct derivative fields of orders `1..=s` of every component,
/// each tagged with its order and multiplicity (mixed partials appear
/// twice among multi-indices).
fn derivative_stack(field: &Field, s: usize) -> Vec<(usize, f64, Field)> {
    let mut out = Vec::new();
    if s == 0 {
        return out;
    }
    let mut firsts = Vec::new();
    for axis in 0..3 {
        let d = derivative_masked(field, axis, 1, DiffScheme::Second);
        out.push((1, 1.0, d.clone()));
        firsts.push(d);
    }
    if s >= 2 {
        for (axis_a, da) in firsts.iter().enumerate() {
            for axis_b in axis_a..3 {
                let dd = derivative_masked(da, axis_b, 1, DiffScheme::Second);
                let mult = if axis_b == axis_a { 1.0 } else { 2.0 };
                out.push((2, mult, dd));
            }
        }
    }
    out
}

fn check_margin(field: &Field, s: usize) -> Result<()> {
    if s > 2 || s > field.grid.margin.max(2) {
        return Err(MxError::WeightOrderTooLarge { s, margin: field.grid.margin.min(2) });
    }
    Ok(())
}

fn shell_threshold(grid: &crate::fields::Grid3) -> f64 {
    0.9 * grid.half_extent()
}

/// Weighted Sobolev norm
/// `( sum_{|alpha|<=s} int sigma^(2(delta+|alpha|)) |D^alpha u|^2 )^(1/2)`
/// over the field's valid region with the cell measure `h^3`.
pub fn h_norm(field: &Field, w: WeightParams) -> Result<NormValue> {
    h_norm_on(field, w, None)
}

/// As [`h_norm`] but integrated over `region` intersected with the valid
/// region, which lets different derivative orders be compared on one domain.
pub fn h_norm_on(field: &Field, w: WeightParams, region: Option<&Mask>) -> Result<NormValue> {
    check_margin(field, w.s)?;
    let grid = field.grid.clone();
    let len = grid.len();
    let hh = grid.h * grid.h * grid.h;
    let r_shell = shell_threshold(&grid);

    let mut pieces: Vec<(usize, f64, Field)> = vec![(0, 1.0, field.clone())];
    pieces.extend(derivative_stack(field, w.s));

    let mut mask = field.mask.clone();
    for (_, _, f) in &pieces {
        mask = mask.intersect(&f.mask);
    }
    if let Some(r) = region {
        mask = mask.intersect(r);
    }

    let mut total = 0.0;
    let mut shell = 0.0;
    for (order, mult, f) in &pieces {
        let exponent = 2.0 * (w.delta + *order as f64);
        let term = |i: usize| -> f64 {
            if !mask.active[i] {
                return 0.0;
            }
            let p = grid.pos_of(i);
            let wgt = sigma(p).powf(exponent);
            let mut sq = 0.0;
            for c in 0..f.ncomp {
                let v = f.data[c * len + i];
                sq += v * v;
            }
            wgt * sq
        };
        total += mult * hh * ordered_par_sum(len, &term);
        shell += mult
            * hh
            * ordered_par_sum(len, |i| {
                if mask.active[i] && grid.radius_of(i) >= r_shell {
                    term(i)
                } else {
                    0.0
                }
            });
    }
    Ok(NormValue { value: total.sqrt(), shell: shell.sqrt() })
}

/// Weighted sup norm `sup sum_{|alpha|<=s} sigma^(delta+|alpha|) |D^alpha u|`.
pub fn c_norm(field: &Field, w: WeightParams) -> Result<NormValue> {
    check_margin(field, w.s)?;
    let grid = field.grid.clone();
    let len = grid.len();
    let r_shell = shell_threshold(&grid);

    let mut pieces: Vec<(usize, f64, Field)> = vec![(0, 1.0, field.clone())];
    pieces.extend(derivative_stack(field, w.s));
    let mut mask = field.mask.clone();
    for (_, _, f) in &pieces {
        mask = mask.intersect(&f.mask);
    }

    let point_sum = |i: usize| -> f64 {
        let p = grid.pos_of(i);
        let sg = sigma(p);
        let mut acc = 0.0;
        for (order, mult, f) in &pieces {
            let wgt = sg.powf(w.delta + *order as f64);
            for c in 0..f.ncomp {
                acc += mult * wgt * f.data[c * len + i].abs();
            }
        }
        acc
    };
    let value = ordered_par_max(len, |i| {
        if mask.active[i] {
            point_sum(i)
        } else {
            f64::NEG_INFINITY
        }
    });
    let shell = ordered_par_max(len, |i| {
        if mask.active[i] && grid.radius_of(i) >= r_shell {
            point_sum(i)
        } else {
            f64::NEG_INFINITY
        }
    });
    Ok(NormValue {
        value: if value.is_finite() { value } else { 0.0 },
        shell: if shell.is_finite() { shell } else { 0.0 },
    })
}

/// Restriction norm of the slab's deviation from the flat reference on the
/// slice `Sigma_tau = { t = tau * sigma(x) }`:
/// `( sum_{k<=s} |D_t^k u|_{Sigma_tau}|^2_{H_{s-k, delta+k}} )^(1/2)`.
pub fn restriction_norm(slab: &SpacetimeSlab, tau: f64, w: WeightParams) -> Result<NormValue> {
    if tau.abs() >= slab.theta_eff.max(f64::MIN_POSITIVE) {
        return Err(MxError::TauOutsideSlab { tau, theta: slab.theta_eff });
    }
    if w.s > 2 {
        return Err(MxError::WeightOrderTooLarge { s: w.s, margin: 2 });
    }
    let mut total = 0.0;
    let mut shell = 0.0;
    for k in 0..=w.s {
        let restricted = restrict_time_derivative(slab, tau, k)?;
        let nv = h_norm(&restricted, WeightParams::new(w.s - k, w.delta + k as f64))?;
        total += nv.value * nv.value;
        shell += nv.shell * nv.shell;
    }
    Ok(NormValue { value: total.sqrt(), shell: shell.sqrt() })
}

/// Sample `D_t^k (gamma - eta~)` on the slice `t = tau sigma(x)` as a field.
pub fn restrict_time_derivative(
    slab: &SpacetimeSlab,
    tau: f64,
    k: usize,
) -> Result<SymTensorField4> {
    let grid = slab.grid.clone();
    let len = grid.len();
    let eta = flat_inverse_components();
    let mut out = Field::zeros(grid.clone(), 10);
    let mut active = vec![false; len];
    for i in 0..len {
        let x = grid.pos_of(i);
        let t = tau * sigma(x);
        let sampled: Result<[f64; 10]> = match k {
            0 => slab.sample(x, t).map(|s| {
                let mut v = s.gamma;
                for (c, e) in eta.iter().enumerate() {
                    v[c] -= e;
                }
                v
            }),
            1 => slab.sample(x, t).map(|s| s.dgamma_t),
            _ => second_time_derivative(slab, x, t),
        };
        match sampled {
            Ok(vals) => {
                active[i] = true;
                for (c, v) in vals.iter().enumerate() {
                    out.set(c, i, *v);
                }
            }
            Err(MxError::OutOfCone { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let mask = Mask { grid: grid.clone(), active };
    if mask.count() == 0 {
        return Err(MxError::TauOutsideSlab { tau, theta: slab.theta_eff });
    }
    Ok(out.with_mask(mask))
}

fn second_time_derivative(slab: &SpacetimeSlab, x: [f64; 3], t: f64) -> Result<[f64; 10]> {
    let dt = slab.dt;
    let plus = slab.sample(x, t + 0.5 * dt)?;
    let minus = slab.sample(x, t - 0.5 * dt)?;
    let mut out = [0.0; 10];
    for c in 0..10 {
        out[c] = (plus.dgamma_t[c] - minus.dgamma_t[c]) / dt;
    }
    Ok(out)
}

/// Upper-triangle components of the flat reference inverse metric.
pub fn flat_inverse_components() -> [f64; 10] {
    let mut eta = [0.0; 10];
    eta[sym4(0, 0)] = -1.0;
    eta[sym4(1, 1)] = 1.0;
    eta[sym4(2, 2)] = 1.0;
    eta[sym4(3, 3)] = 1.0;
    eta
}

/// Scalar field sampled from an analytic profile.
pub fn field_from_profile<F: Fn([f64; 3]) -> f64>(
    grid: Arc<crate::fields::Grid3>,
    f: F,
) -> ScalarField {
    Field::from_fn(grid, 1, |p, _| f(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid3;

    fn grid(n: usize, hw: f64) -> Arc<Grid3> {
        Arc::new(Grid3::cube(n, hw, 2).unwrap())
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma([0.0, 0.0, 0.0]), 1.0);
        assert!((sigma([0.0, 0.0, 3.0f64.sqrt()]) - 2.0).abs() < 1e-15);
        let x = [10.0 / 3.0f64.sqrt(); 3];
        assert!((sigma(x) - 101.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = grid(12, 4.0);
        let f = Field::zeros(g, 1);
        let nv = h_norm(&f, WeightParams::new(2, -1.25)).unwrap();
        assert_eq!(nv.value, 0.0);
    }

    #[test]
    fn s0_matches_direct_quadrature_oracle() {
        let g = grid(16, 4.0);
        let f = Field::from_fn(g.clone(), 1, |p, _| {
            (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp()
        });
        let delta = -1.25;
        let nv = h_norm(&f, WeightParams::new(0, delta)).unwrap();
        let mut oracle = 0.0;
        for i in 0..g.len() {
            let p = g.pos_of(i);
            let v = (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
            oracle += sigma(p).powf(2.0 * delta) * v * v * g.h.powi(3);
        }
        let oracle = oracle.sqrt();
        assert!((nv.value - oracle).abs() < 1e-10 * oracle.max(1.0));
    }

    #[test]
    fn inverse_sigma_integrable_iff_weight_negative_enough() {
        // u = 1/sigma: with delta = -1.2 the norm converges as the domain
        // grows; with delta = 0 it diverges. Radial oracle confirms.
        let norm_at = |hw: f64, delta: f64| -> f64 {
            let g = Arc::new(Grid3::cube(24, hw, 2).unwrap());
            let f = Field::from_fn(g, 1, |p, _| 1.0 / sigma(p));
            h_norm(&f, WeightParams::new(0, delta)).unwrap().value
        };
        // Compare squared norms (the integrals themselves).
        let sq = |v: f64| v * v;
        let conv_growth = (sq(norm_at(18.0, -1.2)) - sq(norm_at(6.0, -1.2))) / sq(norm_at(6.0, -1.2));
        let div_growth = (sq(norm_at(18.0, 0.0)) - sq(norm_at(6.0, 0.0))) / sq(norm_at(6.0, 0.0));
        assert!(conv_growth < 0.4, "convergent growth {conv_growth}");
        assert!(div_growth > 1.5, "divergent growth {div_growth}");
        let radial = |rmax: f64, delta: f64| -> f64 {
            let n = 4000;
            let dr = rmax / n as f64;
            (0..n)
                .map(|i| {
                    let r = (i as f64 + 0.5) * dr;
                    let s = (1.0 + r * r).sqrt();
                    s.powf(2.0 * delta - 2.0) * r * r * dr
                })
                .sum::<f64>()
        };
        assert!(radial(18.0, -1.2) / radial(6.0, -1.2) < 1.3);
        assert!(radial(18.0, 0.0) / radial(6.0, 0.0) > 2.0);
    }

    #[test]
    fn c_norm_constant_and_exact_cancellation() {
        let g = grid(12, 4.0);
        let f = Field::constant(g.clone(), 1, -3.5);
        let nv = c_norm(&f, WeightParams::new(0, 0.0)).unwrap();
        assert!((nv.value - 3.5).abs() < 1e-14);
        let f = Field::from_fn(g, 1, |p, _| 1.0 / sigma(p));
        let nv = c_norm(&f, WeightParams::new(0, 1.0)).unwrap();
        assert!((nv.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn scaling_and_triangle_inequality() {
        let g = grid(12, 4.0);
        let u = Field::from_fn(g.clone(), 1, |p, _| (p[0] + 0.5 * p[1]).sin());
        let v = Field::from_fn(g.clone(), 1, |p, _| (0.3 * p[2]).cos());
        let w = WeightParams::new(1, -1.0);
        let nu = h_norm(&u, w).unwrap().value;
        let mut u_scaled = u.clone();
        for x in u_scaled.data.iter_mut() {
            *x *= -2.5;
        }
        let n_scaled = h_norm(&u_scaled, w).unwrap().value;
        assert!((n_scaled - 2.5 * nu).abs() < 1e-12 * nu.max(1.0));
        let n_sum = h_norm(&u.axpy(1.0, &v), w).unwrap().value;
        let n_v = h_norm(&v, w).unwrap().value;
        assert!(n_sum <= nu + n_v + 1e-12);
    }

    #[test]
    fn monotone_in_s_on_common_region() {
        let g = grid(12, 4.0);
        let u = Field::from_fn(g, 1, |p, _| (p[0] * 0.7).sin() * (p[1] * 0.4).cos());
        let d = -1.25;
        // Fix the region to the s=2 valid region, then norms are nested sums.
        let region = u.mask.erode(2);
        let n0 = h_norm_on(&u, WeightParams::new(0, d), Some(&region)).unwrap().value;
        let n1 = h_norm_on(&u, WeightParams::new(1, d), Some(&region)).unwrap().value;
        let n2 = h_norm_on(&u, WeightParams::new(2, d), Some(&region)).unwrap().value;
        assert!(n1 >= n0);
        assert!(n2 >= n1);
    }

    #[test]
    fn s_beyond_margin_rejected() {
        let g = grid(12, 4.0);
        let u = Field::zeros(g, 1);
        assert!(matches!(
            h_norm(&u, WeightParams::new(3, 0.0)),
            Err(MxError::WeightOrderTooLarge { .. })
        ));
    }

    #[test]
    fn discrete_embedding_constant_stable_under_refinement() {
        // c_norm(u; 0, delta') <= C * h_norm(u; 2, delta) for delta' < delta + 3/2,
        // with C stable on a fixed field family as the grid refines.
        let delta = -1.25;
        let dprime = delta + 1.5 - 0.26;
        let ratio_at = |n: usize| -> f64 {
            let g = Arc::new(Grid3::cube(n, 6.0, 2).unwrap());
            let mut worst: f64 = 0.0;
            for (ax, ay, k) in [(1.0, 0.5, 0.7), (0.3, 1.1, 1.3), (0.9, 0.2, 0.4)] {
                let u = Field::from_fn(g.clone(), 1, |p, _| {
                    (ax * p[0] + ay * p[1]).sin() * (-k * (p[2] * p[2])).exp() / sigma(p)
                });
                let c = c_norm(&u, WeightParams::new(0, dprime)).unwrap().value;
                let h = h_norm(&u, WeightParams::new(2, delta)).unwrap().value;
                worst = worst.max(c / h);
            }
            worst
        };
        let c_coarse = ratio_at(16);
        let c_fine = ratio_at(32);
        // Calibrated once: the observed constant for this family is ~0.5;
        // assert the frozen bound and its refinement stability.
        let frozen_c = 1.0;
        assert!(c_coarse < frozen_c, "embedding constant {c_coarse}");
        assert!(c_fine < frozen_c, "embedding constant {c_fine}");
        assert!((c_fine / c_coarse) < 1.5 && (c_fine / c_coarse) > 0.5);
    }
}
