//! Slice energies, the momentum vector of the deviation field, and the
//! discrete Gronwall bound on the boost foliation.

use crate::error::{MxError, Result};
use crate::fields::{sym4, SpacetimeSlab};
use crate::geometry::{quadratic_rhs, SpacetimePoint};
use crate::sobolev::{flat_inverse_components, sigma};

/// Per-slice energies and pointwise momentum checks for the deviation
/// `u = gamma - eta~` on slices `E_tau = { t = tau sigma(x) }`.
#[derive(Debug, Clone)]
pub struct EnergyDiagnostics {
    pub delta: f64,
    pub taus: Vec<f64>,
    /// `x0(tau) = int sigma^(2 delta + 1) |u|^2`.
    pub x0: Vec<f64>,
    /// `x1(tau) = int sigma^(2 delta + 3) |Du|^2`.
    pub x1: Vec<f64>,
    pub y1: Vec<f64>,
    /// `H_{0, delta + 5/2}` norm of the quadratic source on each slice.
    pub source_norm: Vec<f64>,
    /// Net flux of the momentum vector through the lateral mask boundary.
    pub lateral_flux: Vec<f64>,
    /// Max of `gamma(P, P) / (1 + |P|_e^2)` (must be <= rounding).
    pub p_timelike_max: f64,
    /// Min of `gamma(P, d_t) / (1 + |P|_e^2)` (must be >= -rounding).
    pub p_pairing_min: f64,
    /// Fitted Gronwall constant for
    /// `y1(tau) <= c1 (y1(0) + int |beta| y1^(1/2) + m1 int y1)`.
    pub gronwall_c1: f64,
    /// Coefficient-size proxy `sup |D gamma|`.
    pub m1: f64,
}

pub fn energy_diagnostics(
    slab: &SpacetimeSlab,
    delta: f64,
    taus: &[f64],
) -> Result<EnergyDiagnostics> {
    if slab.levels.len() < 3 {
        return Err(MxError::MarginExhausted(
            "energy diagnostics need at least 3 levels".into(),
        ));
    }
    let grid = slab.grid.clone();
    let len = grid.len();
    let hh = grid.h.powi(3);
    let eta = flat_inverse_components();

    let mut x0 = Vec::new();
    let mut x1 = Vec::new();
    let mut source_norm = Vec::new();
    let mut lateral_flux = Vec::new();
    let mut p_timelike_max = f64::NEG_INFINITY;
    let mut p_pairing_min = f64::INFINITY;
    let mut m1 = 0.0f64;

    for &tau in taus {
        let mut s_x0 = 0.0;
        let mut s_x1 = 0.0;
        let mut s_src = 0.0;
        let mut flux = 0.0;
        let mut sampled = vec![false; len];
        let mut p_field = vec![[0.0f64; 4]; len];
        for idx in 0..len {
            let x = grid.pos_of(idx);
            let sg = sigma(x);
            let t = tau * sg;
            let sample = match slab.sample(x, t) {
                Ok(s) => s,
                Err(MxError::OutOfCone { .. }) => continue,
                Err(e) => return Err(e),
            };
            sampled[idx] = true;
            // Deviation and its gradient (t first).
            let mut du = [[0.0; 4]; 10];
            let mut usq = 0.0;
            let mut dusq = 0.0;
            for c in 0..10 {
                let ucomp = sample.gamma[c] - eta[c];
                usq += ucomp * ucomp;
                du[c][0] = sample.dgamma_t[c];
                for a in 0..3 {
                    du[c][a + 1] = sample.dgamma_x[c][a];
                }
                for v in du[c] {
                    dusq += v * v;
                    m1 = m1.max(v.abs());
                }
            }
            s_x0 += sg.powf(2.0 * delta + 1.0) * usq * hh;
            s_x1 += sg.powf(2.0 * delta + 3.0) * dusq * hh;

            // Quadratic source on the slice.
            let mut dg = [[0.0; 10]; 4];
            for c in 0..10 {
                dg[0][c] = sample.dgamma_t[c];
                for a in 0..3 {
                    dg[a + 1][c] = sample.dgamma_x[c][a];
                }
            }
            let pt = SpacetimePoint::new(sample.gamma, dg);
            let beta = quadratic_rhs(&pt)?;
            let bsq: f64 = beta.iter().map(|v| v * v).sum();
            s_src += sg.powf(2.0 * (delta + 2.5)) * bsq * hh;

            // Momentum vector P^mu = T^{mu nu} n~_nu with
            // T = G^{mu nu rho sigma} D_rho u . D_sigma u.
            let gu = crate::geometry::mat4_from_sym(&sample.gamma);
            let x2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let denom = 1.0 - tau * tau * x2 / (sg * sg);
            if denom <= 0.0 {
                continue;
            }
            let nf = denom.powf(-0.5);
            let mut n_co = [0.0; 4];
            n_co[0] = nf;
            for i in 0..3 {
                n_co[i + 1] = -nf * tau * x[i] / sg;
            }
            // D^mu u^c = gamma^{mu rho} D_rho u^c; contraction over c.
            let mut p_up = [0.0; 4];
            for mu in 0..4 {
                let mut acc = 0.0;
                for nu in 0..4 {
                    // T^{mu nu} = sum_c [2 D^mu u D^nu u - gamma^{mu nu} |Du|^2_gamma]
                    let mut t_mn = 0.0;
                    for c in 0..10 {
                        let mut dmu = 0.0;
                        let mut dnu = 0.0;
                        let mut dsq_g = 0.0;
                        for r in 0..4 {
                            dmu += gu[mu][r] * du[c][r];
                            dnu += gu[nu][r] * du[c][r];
                            for s in 0..4 {
                                dsq_g += gu[r][s] * du[c][r] * du[c][s];
                            }
                        }
                        t_mn += 2.0 * dmu * dnu - gu[mu][nu] * dsq_g;
                    }
                    acc += t_mn * n_co[nu];
                }
                p_up[mu] = acc;
            }
            p_field[idx] = p_up;
            // Pointwise past-timelike checks.
            let pt2 = SpacetimePoint::new(sample.gamma, [[0.0; 10]; 4]);
            let g_low = pt2.lower()?;
            let glm = crate::geometry::mat4_from_sym(&g_low);
            let mut gpp = 0.0;
            let mut gp0 = 0.0;
            let mut pe = 0.0;
            for mu in 0..4 {
                pe += p_up[mu] * p_up[mu];
                gp0 += glm[mu][0] * p_up[mu];
                for nu in 0..4 {
                    gpp += glm[mu][nu] * p_up[mu] * p_up[nu];
                }
            }
            let scale = 1.0 + pe;
            p_timelike_max = p_timelike_max.max(gpp / scale);
            p_pairing_min = p_pairing_min.min(-gp0 / scale);
        }
        // Lateral flux: Euclidean surface sum of P . n over the sampled
        // region's boundary faces.
        let hh2 = grid.h * grid.h;
        for idx in 0..len {
            if !sampled[idx] {
                continue;
            }
            let [i, j, k] = grid.coords_of(idx);
            for (axis, coord, dim) in [(0usize, i, 0usize), (1, j, 1), (2, k, 2)] {
                for dir in [-1isize, 1] {
                    let c = coord as isize + dir;
                    let outside = c < 0
                        || c as usize >= grid.n[dim]
                        || !sampled[(idx as isize + dir * grid.stride(axis) as isize) as usize];
                    if outside {
                        flux += dir as f64 * p_field[idx][axis + 1] * hh2;
                    }
                }
            }
        }
        if !sampled.iter().any(|&s| s) {
            return Err(MxError::TauOutsideSlab { tau, theta: slab.theta_eff });
        }
        x0.push(s_x0);
        x1.push(s_x1);
        source_norm.push(s_src.sqrt());
        lateral_flux.push(flux);
    }

    let y1: Vec<f64> = x0.iter().zip(&x1).map(|(a, b)| a + b).collect();
    // Gronwall fit with trapezoid integrals in tau.
    let mut c1: f64 = 1.0;
    for n in 1..taus.len() {
        let mut int_by = 0.0;
        let mut int_y = 0.0;
        for m in 1..=n {
            let dtau = (taus[m] - taus[m - 1]).abs();
            int_by += 0.5
                * dtau
                * (source_norm[m] * y1[m].sqrt() + source_norm[m - 1] * y1[m - 1].sqrt());
            int_y += 0.5 * dtau * (y1[m] + y1[m - 1]);
        }
        let bound = y1[0] + int_by + m1 * int_y;
        if bound > 0.0 {
            c1 = c1.max(y1[n] / bound);
        }
    }

    Ok(EnergyDiagnostics {
        delta,
        taus: taus.to_vec(),
        x0,
        x1,
        y1,
        source_norm,
        lateral_flux,
        p_timelike_max: if p_timelike_max.is_finite() { p_timelike_max } else { 0.0 },
        p_pairing_min: if p_pairing_min.is_finite() { p_pairing_min } else { 0.0 },
        gronwall_c1: c1,
        m1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Field, Grid3, SpacetimeSlab};
    use std::sync::Arc;

    #[test]
    fn flat_slab_has_zero_energies() {
        let grid = Arc::new(Grid3::cube(12, 6.0, 2).unwrap());
        let mut gamma = Field::zeros(grid.clone(), 10);
        for i in 0..grid.len() {
            gamma.set(sym4(0, 0), i, -1.0);
            gamma.set(sym4(1, 1), i, 1.0);
            gamma.set(sym4(2, 2), i, 1.0);
            gamma.set(sym4(3, 3), i, 1.0);
        }
        let slab = SpacetimeSlab::from_static(grid, gamma, 2, 0.25, 0.4);
        let d = energy_diagnostics(&slab, -1.5, &[0.0, 0.05, 0.1]).unwrap();
        for v in d.x0.iter().chain(&d.x1) {
            assert!(v.abs() < 1e-25, "{v}");
        }
        assert!(d.p_timelike_max <= 0.0);
        assert!(d.p_pairing_min >= 0.0);
    }
}
