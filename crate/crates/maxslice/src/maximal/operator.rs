//! The linearized mean-curvature operator and its iterative inverse.
//!
//! `L0 v = Lap_g v - |k|^2_g v` is discretized in divergence form with the
//! same composed fourth-order first-derivative stencils the graph pipeline
//! uses, so at flat data the operator matches the pipeline's own
//! linearization to rounding. The outer closure extends `v` past the solve
//! region with the radial-decay rule `v -> v * r_in / r_ghost` (inward
//! holes are extended by copy), the discrete surrogate of the decaying
//! weighted-space membership that excludes the constant kernel direction.

use crate::error::{MxError, Result};
use crate::fields::{ordered_par_sum, sym3, Field, Grid3, Mask, ScalarField};
use crate::geometry::inv3_sym;
use crate::physics::InitialData;
use crate::sobolev::sigma;
use rayon::prelude::*;
use std::sync::Arc;

/// Assembled operator: flux weights, volume weights, zeroth-order diagonal,
/// solve region and the analytic kernel basis (constants on one end).
pub struct LinearOperator {
    pub grid: Arc<Grid3>,
    /// Solve region.
    pub region: Mask,
    /// `sqrt(det g) g^{ij}` (flux weights).
    pub flux: Field,
    /// `1 / sqrt(det g)`.
    pub inv_vol: ScalarField,
    /// `sqrt(det g)` (volume weights for the g-inner product).
    pub vol: ScalarField,
    /// `-|k|^2_g` diagonal.
    pub diag: ScalarField,
    /// Weight exponent of the kernel-projection inner product
    /// (`2 (delta - 1/2)` over sigma).
    pub kernel_weight: f64,
}

/// Assemble `L0` from data on `region` (a mask well inside the data mask).
pub fn assemble_l0(d: &InitialData, region: Mask, delta: f64) -> Result<LinearOperator> {
    let grid = d.grid();
    let len = grid.len();
    let mut flux = Field::zeros(grid.clone(), 6);
    let mut inv_vol = Field::zeros(grid.clone(), 1);
    let mut vol = Field::zeros(grid.clone(), 1);
    let mut diag = Field::zeros(grid.clone(), 1);
    // Coefficients are needed a few cells beyond the region for the
    // composed stencils; use the data mask there.
    let coef_mask = d.mask();
    if !region.subset_of(&coef_mask) {
        return Err(MxError::MarginExhausted(
            "solve region exceeds the data's valid region".into(),
        ));
    }
    for idx in 0..len {
        if !coef_mask.active[idx] {
            continue;
        }
        let mut g = [0.0; 6];
        let mut k = [0.0; 6];
        for c in 0..6 {
            g[c] = d.g.at(c, idx);
            k[c] = d.k.at(c, idx);
        }
        let (gi, det) = inv3_sym(&g);
        let sq = det.max(1e-30).sqrt();
        for c in 0..6 {
            flux.set(c, idx, sq * gi[c]);
        }
        inv_vol.set(0, idx, 1.0 / sq);
        vol.set(0, idx, sq);
        let mut ksq = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        ksq += gi[sym3(i, a)] * gi[sym3(j, b)] * k[sym3(i, j)] * k[sym3(a, b)];
                    }
                }
            }
        }
        diag.set(0, idx, -ksq);
    }
    Ok(LinearOperator {
        grid,
        region,
        flux: flux.with_mask(coef_mask.clone()),
        inv_vol: inv_vol.with_mask(coef_mask.clone()),
        vol: vol.with_mask(coef_mask.clone()),
        diag: diag.with_mask(coef_mask),
        kernel_weight: 2.0 * (delta - 0.5),
    })
}

impl LinearOperator {
    /// Extend `v` by `layers` cells past the region: radial decay outward,
    /// copy inward. The rule is linear in `v`, so it is part of the
    /// operator.
    pub fn extend(&self, v: &[f64], layers: usize) -> (Vec<f64>, Mask) {
        let grid = &self.grid;
        let mut vals = v.to_vec();
        let mut cur = self.region.active.clone();
        for _ in 0..layers {
            let prev = cur.clone();
            let mut updates = Vec::new();
            for i in 0..grid.n[0] {
                for j in 0..grid.n[1] {
                    for k in 0..grid.n[2] {
                        let idx = grid.idx(i, j, k);
                        if prev[idx] {
                            continue;
                        }
                        let coords = [i as isize, j as isize, k as isize];
                        let r_g = grid.radius_of(idx);
                        let mut acc = 0.0;
                        let mut hits = 0usize;
                        for axis in 0..3 {
                            for dir in [-1isize, 1] {
                                let mut c1 = coords;
                                c1[axis] += dir;
                                if c1[axis] < 0 || c1[axis] >= grid.n[axis] as isize {
                                    continue;
                                }
                                let n1 = grid.idx(
                                    c1[0] as usize,
                                    c1[1] as usize,
                                    c1[2] as usize,
                                );
                                if !prev[n1] {
                                    continue;
                                }
                                let r_n = grid.radius_of(n1);
                                let scale = if r_g > r_n { r_n / r_g.max(1e-12) } else { 1.0 };
                                acc += vals[n1] * scale;
                                hits += 1;
                            }
                        }
                        if hits > 0 {
                            updates.push((idx, acc / hits as f64));
                        }
                    }
                }
            }
            for (idx, val) in updates {
                vals[idx] = val;
                cur[idx] = true;
            }
        }
        (vals, Mask { grid: self.region.grid.clone(), active: cur })
    }

    /// Apply `L0` to values over the region; the result is zero outside.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let len = grid.len();
        let h = grid.h;
        let strides = [grid.stride(0), grid.stride(1), grid.stride(2)];
        let (ext, ext_mask) = self.extend(v, 4);
        // First derivatives on region dilated by 2.
        let d4 = |arr: &[f64], idx: usize, s: usize| -> f64 {
            (-arr[idx + 2 * s] + 8.0 * arr[idx + s] - 8.0 * arr[idx - s] + arr[idx - 2 * s])
                / (12.0 * h)
        };
        let inner2 = {
            // Cells of the extension with full 2-cell margins.
            let mut active = vec![false; len];
            for i in 0..grid.n[0] {
                for j in 0..grid.n[1] {
                    for k in 0..grid.n[2] {
                        let idx = grid.idx(i, j, k);
                        if ext_mask.stencil_fits(idx, 2) {
                            active[idx] = true;
                        }
                    }
                }
            }
            active
        };
        // Flux F^i = W^{ij} D_j v, on inner2 cells.
        let mut fluxes = vec![0.0f64; 3 * len];
        let flux_results: Vec<(usize, [f64; 3])> = (0..len)
            .into_par_iter()
            .filter_map(|idx| {
                if !inner2[idx] {
                    return None;
                }
                let mut dv = [0.0; 3];
                for (a, s) in strides.iter().enumerate() {
                    dv[a] = d4(&ext, idx, *s);
                }
                let mut f = [0.0; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        f[i] += self.flux.at(sym3(i, j), idx) * dv[j];
                    }
                }
                Some((idx, f))
            })
            .collect();
        for (idx, f) in flux_results {
            for a in 0..3 {
                fluxes[a * len + idx] = f[a];
            }
        }
        // Divergence on the region.
        let region = &self.region;
        let out: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|idx| {
                if !region.active[idx] {
                    return 0.0;
                }
                let mut acc = 0.0;
                for (a, s) in strides.iter().enumerate() {
                    let arr = &fluxes[a * len..(a + 1) * len];
                    acc += d4(arr, idx, *s);
                }
                acc * self.inv_vol.at(0, idx) + self.diag.at(0, idx) * v[idx]
            })
            .collect();
        out
    }

    /// Weighted kernel inner product `<u, v> = sum sigma^w u v h^3` over the
    /// region.
    pub fn kernel_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let grid = &self.grid;
        let hh = grid.h.powi(3);
        let w = self.kernel_weight;
        ordered_par_sum(grid.len(), |i| {
            if self.region.active[i] {
                sigma(grid.pos_of(i)).powf(w) * u[i] * v[i] * hh
            } else {
                0.0
            }
        })
    }

    /// Project off the constant kernel direction in the weighted inner
    /// product; returns the removed coefficient.
    pub fn project_kernel(&self, v: &mut [f64]) -> f64 {
        let ones = vec![1.0; v.len()];
        let num = self.kernel_inner(v, &ones);
        let den = self.kernel_inner(&ones, &ones);
        let c = num / den;
        for (i, val) in v.iter_mut().enumerate() {
            if self.region.active[i] {
                *val -= c;
            }
        }
        c
    }

    /// g-volume inner product over the region.
    pub fn vol_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let grid = &self.grid;
        let hh = grid.h.powi(3);
        ordered_par_sum(grid.len(), |i| {
            if self.region.active[i] {
                self.vol.at(0, i) * u[i] * v[i] * hh
            } else {
                0.0
            }
        })
    }
}

/// Convergence report of [`solve_l0`].
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// Kernel coefficient removed from the solution.
    pub kernel_coefficient: f64,
}

/// Solve `L0 u = rhs` by BiCGStab to the relative residual `tol`, then
/// project the solution off the constant kernel direction.
pub fn solve_l0(
    op: &LinearOperator,
    rhs: &ScalarField,
    tol: f64,
    max_iters: usize,
) -> Result<(ScalarField, SolveStats)> {
    let grid = op.grid.clone();
    let len = grid.len();
    let region = &op.region;
    let mut b = vec![0.0f64; len];
    for idx in 0..len {
        if region.active[idx] {
            if !rhs.mask.active[idx] {
                return Err(MxError::MarginExhausted(
                    "right-hand side does not cover the solve region".into(),
                ));
            }
            b[idx] = rhs.at(0, idx);
        }
    }
    let dot = |u: &[f64], v: &[f64]| -> f64 {
        ordered_par_sum(len, |i| if region.active[i] { u[i] * v[i] } else { 0.0 })
    };
    let b_norm = dot(&b, &b).sqrt();
    if b_norm == 0.0 {
        let zero = Field::zeros(grid.clone(), 1).with_mask(region.clone());
        return Ok((
            zero,
            SolveStats { iterations: 0, relative_residual: 0.0, kernel_coefficient: 0.0 },
        ));
    }

    let mut x = vec![0.0f64; len];
    let mut r: Vec<f64> = b.clone();
    let r0 = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0f64; len];
    let mut p = vec![0.0f64; len];
    let mut iterations = 0;
    let mut res_norm = b_norm;
    let mut stagnation = 0usize;

    for iter in 0..max_iters {
        iterations = iter + 1;
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            return Err(MxError::NearSingularOperator(res_norm / b_norm));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..len {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = op.apply(&p);
        let r0v = dot(&r0, &v);
        if r0v.abs() < 1e-300 {
            return Err(MxError::NearSingularOperator(res_norm / b_norm));
        }
        alpha = rho / r0v;
        let mut s = r.clone();
        for i in 0..len {
            s[i] -= alpha * v[i];
        }
        let s_norm = dot(&s, &s).sqrt();
        if s_norm / b_norm < tol {
            for i in 0..len {
                x[i] += alpha * p[i];
            }
            res_norm = s_norm;
            break;
        }
        let t = op.apply(&s);
        let tt = dot(&t, &t);
        if tt.abs() < 1e-300 {
            return Err(MxError::NearSingularOperator(res_norm / b_norm));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..len {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        let new_norm = dot(&r, &r).sqrt();
        if new_norm > 0.999 * res_norm {
            stagnation += 1;
            if stagnation > 50 {
                return Err(MxError::NearSingularOperator(new_norm / b_norm));
            }
        } else {
            stagnation = 0;
        }
        res_norm = new_norm;
        if res_norm / b_norm < tol {
            break;
        }
    }
    if res_norm / b_norm >= tol {
        return Err(MxError::SolveNonConvergence {
            residual: res_norm / b_norm,
            iters: iterations,
        });
    }
    let kernel_coefficient = op.project_kernel(&mut x);
    let mut out = Field::zeros(grid, 1);
    out.comp_mut(0).copy_from_slice(&x);
    Ok((
        out.with_mask(region.clone()),
        SolveStats {
            iterations,
            relative_residual: res_norm / b_norm,
            kernel_coefficient,
        },
    ))
}

/// Rayleigh-quotient estimate of the smallest eigenvalue of `-L0` on the
/// kernel complement, by inverse power iteration (a few solves).
pub fn smallest_projected_eigenvalue(
    op: &LinearOperator,
    iters: usize,
    tol: f64,
) -> Result<f64> {
    let grid = op.grid.clone();
    let len = grid.len();
    // Deterministic seed vector, kernel-projected.
    let mut v = vec![0.0f64; len];
    let mut state = 0x9E3779B97F4A7C15u64;
    for (i, val) in v.iter_mut().enumerate() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        if op.region.active[i] {
            *val = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        }
    }
    op.project_kernel(&mut v);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let norm = op.vol_inner(&v, &v).sqrt();
        for val in v.iter_mut() {
            *val /= norm;
        }
        let mut rhs = Field::zeros(grid.clone(), 1);
        rhs.comp_mut(0).copy_from_slice(&v);
        let rhs = rhs.with_mask(op.region.clone());
        let (sol, _) = solve_l0(op, &rhs, tol, 20000)?;
        let mut w: Vec<f64> = sol.comp(0).to_vec();
        for (i, val) in w.iter_mut().enumerate() {
            if !op.region.active[i] {
                *val = 0.0;
            }
        }
        // v ~ -L0^-1 v (operator is negative definite); Rayleigh quotient
        // of -L0 at the new direction.
        let lv = op.apply(&w);
        let num = -op.vol_inner(&w, &lv);
        let den = op.vol_inner(&w, &w);
        lambda = num / den;
        v = w;
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::make_flat;
    use crate::fields::Grid3;

    fn flat_op(n: usize, hw: f64, delta: f64) -> (InitialData, LinearOperator) {
        let grid = Arc::new(Grid3::cube(n, hw, 2).unwrap());
        let d = make_flat(grid.clone());
        let region = d.mask().erode(3);
        let op = assemble_l0(&d, region, delta).unwrap();
        (d, op)
    }

    #[test]
    fn flat_operator_on_quadratic_is_two() {
        let (_, op) = flat_op(16, 4.0, -1.25);
        let grid = op.grid.clone();
        let v: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = grid.pos_of(i);
                p[0] * p[0]
            })
            .collect();
        let lv = op.apply(&v);
        // Interior cells (away from the extension closure).
        let interior = op.region.erode(5);
        for i in 0..grid.len() {
            if interior.active[i] {
                assert!((lv[i] - 2.0).abs() < 1e-10, "L(x^2) = {} at {i}", lv[i]);
            }
        }
    }

    #[test]
    fn constant_trace_shift_is_exact() {
        // g = e, k = c e: diagonal shift -3 c^2 exactly.
        let grid = Arc::new(Grid3::cube(12, 3.0, 2).unwrap());
        let mut d = make_flat(grid.clone());
        let c = 0.4;
        for idx in 0..grid.len() {
            for comp in [0usize, 3, 5] {
                d.k.set(comp, idx, c);
            }
        }
        let region = d.mask().erode(3);
        let op = assemble_l0(&d, region, -1.25).unwrap();
        let ones = vec![1.0; grid.len()];
        let lv = op.apply(&ones);
        let interior = op.region.erode(5);
        for i in 0..grid.len() {
            if interior.active[i] {
                assert!((lv[i] + 3.0 * c * c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discrete_self_adjointness_on_compact_support() {
        let grid = Arc::new(Grid3::cube(20, 5.0, 2).unwrap());
        let mut d = make_flat(grid.clone());
        // Non-trivial but smooth metric.
        for idx in 0..grid.len() {
            let p = grid.pos_of(idx);
            let b = 0.1 * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 4.0).exp();
            d.g.set(0, idx, 1.0 + b);
            d.g.set(3, idx, 1.0 + 0.5 * b);
            d.g.set(1, idx, 0.2 * b);
        }
        let region = d.mask().erode(2);
        let op = assemble_l0(&d, region, -1.25).unwrap();
        let bump = |p: [f64; 3], c: [f64; 3]| -> f64 {
            let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
            if r2 < 4.0 {
                (1.0 - r2 / 4.0).powi(4)
            } else {
                0.0
            }
        };
        let u: Vec<f64> = (0..grid.len()).map(|i| bump(grid.pos_of(i), [1.0, 0.0, 0.0])).collect();
        let v: Vec<f64> = (0..grid.len()).map(|i| bump(grid.pos_of(i), [-0.8, 0.5, 0.0])).collect();
        let lu = op.apply(&u);
        let lv = op.apply(&v);
        let a = op.vol_inner(&lu, &v);
        let b = op.vol_inner(&u, &lv);
        assert!(
            (a - b).abs() < 1e-10 * a.abs().max(1.0),
            "asymmetry {} vs {}",
            a,
            b
        );
    }

    #[test]
    fn newtonian_potential_recovered() {
        // rhs = Lap(1/sigma) = -3 sigma^-5; solution 1/sigma up to the
        // closure error O(1/R) and a kernel constant.
        let (d, op) = flat_op(24, 6.0, -1.25);
        let grid = op.grid.clone();
        let rhs_field = Field::from_fn(grid.clone(), 1, |p, _| {
            -3.0 * crate::sobolev::sigma(p).powf(-5.0)
        })
        .with_mask(op.region.clone());
        let (sol, stats) = solve_l0(&op, &rhs_field, 1e-10, 20000).unwrap();
        assert!(stats.relative_residual < 1e-10);
        // Compare modulo constants against the exact solution.
        let exact: Vec<f64> = (0..grid.len())
            .map(|i| 1.0 / crate::sobolev::sigma(grid.pos_of(i)))
            .collect();
        let mut diff_sum = 0.0;
        let mut count = 0.0;
        for i in 0..grid.len() {
            if op.region.active[i] {
                diff_sum += sol.at(0, i) - exact[i];
                count += 1.0;
            }
        }
        let shift = diff_sum / count;
        let mut worst = 0.0f64;
        for i in 0..grid.len() {
            if op.region.active[i] {
                worst = worst.max((sol.at(0, i) - exact[i] - shift).abs());
            }
        }
        // Domain radius ~6: closure error O(1/R) with a modest constant.
        assert!(worst < 0.08, "potential error {worst}");
        // Kernel direction removed.
        let ones = vec![1.0; grid.len()];
        let solv: Vec<f64> = sol.comp(0).to_vec();
        let overlap = op.kernel_inner(&solv, &ones).abs();
        let norm = op.kernel_inner(&solv, &solv).sqrt() * op.kernel_inner(&ones, &ones).sqrt();
        assert!(overlap / norm < 1e-8, "kernel overlap {}", overlap / norm);
        let _ = d;
        // Convolution oracle at a few points: -(1/4 pi) int rhs / |x - y|.
        let mut oracle_worst = 0.0f64;
        for probe in [[0.9, 0.3, -1.2], [2.1, -0.7, 0.4]] {
            let mut conv = 0.0;
            for i in 0..grid.len() {
                let p = grid.pos_of(i);
                let r = ((p[0] - probe[0]).powi(2)
                    + (p[1] - probe[1]).powi(2)
                    + (p[2] - probe[2]).powi(2))
                .sqrt();
                if r > 1e-9 {
                    let rhs_v = -3.0 * crate::sobolev::sigma(p).powf(-5.0);
                    conv += -rhs_v / (4.0 * std::f64::consts::PI * r) * grid.h.powi(3);
                }
            }
            let exact_v = 1.0 / crate::sobolev::sigma(probe);
            oracle_worst = oracle_worst.max((conv - exact_v).abs());
        }
        // The truncated convolution misses the far field ~ int_R^inf ~ 1/R.
        assert!(oracle_worst < 0.1, "convolution oracle mismatch {oracle_worst}");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (_, op) = flat_op(12, 3.0, -1.25);
        let rhs = Field::zeros(op.grid.clone(), 1).with_mask(op.region.clone());
        let (sol, _) = solve_l0(&op, &rhs, 1e-10, 1000).unwrap();
        assert!(sol.sup() == 0.0);
    }
}
