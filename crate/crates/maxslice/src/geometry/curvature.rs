//! Pointwise spacetime curvature from the inverse metric and its
//! derivatives.
//!
//! The evolution unknown is `gamma^{mu nu}`; everything here is expressed
//! through it. Second derivatives enter Ricci and the gauge terms linearly,
//! and they cancel identically in the combination
//! `gamma^{ab} d_a d_b gamma^{mu nu} - 2 Ric^{mu nu} + gamma^{mu a} d_a Gamma^nu
//!  + gamma^{nu a} d_a Gamma^mu`,
//! which is what makes the quadratic source and the solved-for second time
//! derivative computable from whichever second-derivative slots are known.

use super::linalg::{inv4, mat4_from_sym, sym_from_mat4};
use crate::error::{MxError, Result};
use crate::fields::{sym4, DiffScheme, Field, SlabLevel};

/// Inverse metric and its first and (partial) second derivatives at a point.
///
/// `d2` is indexed by the symmetric derivative pair `sym4(rho, sigma)`;
/// slots the caller cannot supply (for example `d_t d_t` while solving for
/// it) are left zero and the cancellation above keeps results exact.
#[derive(Debug, Clone)]
pub struct SpacetimePoint {
    pub g_up: [f64; 10],
    /// `d[sigma][comp]`, sigma = t, x, y, z.
    pub dg_up: [[f64; 10]; 4],
    /// `d2[sym4(rho, sigma)][comp]`.
    pub d2g_up: [[f64; 10]; 10],
}

/// All intermediates needed by consumers of a [`SpacetimePoint`].
pub struct Curvature {
    pub g_low: [f64; 10],
    pub dg_low: [[f64; 10]; 4],
    /// Christoffel of the second kind `Gamma^l_{mn}` as `[l][sym4(m, n)]`.
    pub gamma2: [[f64; 10]; 4],
    /// Contracted `Gamma^l = gamma^{mn} Gamma^l_{mn}`.
    pub contracted: [f64; 4],
    /// Ricci with indices up.
    pub ricci_up: [f64; 10],
    /// `gamma^{mu a} d_a Gamma^nu + gamma^{nu a} d_a Gamma^mu`.
    pub gauge_term: [f64; 10],
}

impl SpacetimePoint {
    pub fn new(g_up: [f64; 10], dg_up: [[f64; 10]; 4]) -> Self {
        SpacetimePoint { g_up, dg_up, d2g_up: [[0.0; 10]; 10] }
    }

    pub fn with_second(mut self, d2g_up: [[f64; 10]; 10]) -> Self {
        self.d2g_up = d2g_up;
        self
    }

    pub fn lower(&self) -> Result<[f64; 10]> {
        let m = mat4_from_sym(&self.g_up);
        let inv = inv4(&m).ok_or(MxError::SlicingBroken {
            value: self.g_up[sym4(0, 0)],
            index: 0,
        })?;
        Ok(sym_from_mat4(&inv))
    }

    /// Everything derived: lowered metric, Christoffels, Ricci, gauge terms.
    pub fn curvature(&self) -> Result<Curvature> {
        let g_low = self.lower()?;
        let gl = mat4_from_sym(&g_low);
        let gu = mat4_from_sym(&self.g_up);

        // d_s gamma_{mn} = - gamma_{ma} gamma_{nb} d_s G^{ab}
        let mut dg_low = [[0.0; 10]; 4];
        for s in 0..4 {
            let dgu = mat4_from_sym(&self.dg_up[s]);
            for m in 0..4 {
                for n in m..4 {
                    let mut acc = 0.0;
                    for a in 0..4 {
                        for b in 0..4 {
                            acc -= gl[m][a] * gl[n][b] * dgu[a][b];
                        }
                    }
                    dg_low[s][sym4(m, n)] = acc;
                }
            }
        }

        // d_r d_s gamma_{mn}: product rule through the inverse.
        // d2 gamma_{mn} = -(d_r gamma_{ma}) gamma_{nb} dG - gamma_{ma} (d_r gamma_{nb}) dG
        //                 - gamma_{ma} gamma_{nb} d2 G^{ab}
        let mut d2g_low = [[0.0; 10]; 10];
        for r in 0..4 {
            for s in r..4 {
                let pair = sym4(r, s);
                let dgu_s = mat4_from_sym(&self.dg_up[s]);
                let d2gu = mat4_from_sym(&self.d2g_up[pair]);
                let dgl_r = mat4_from_sym(&dg_low[r]);
                for m in 0..4 {
                    for n in m..4 {
                        let mut acc = 0.0;
                        for a in 0..4 {
                            for b in 0..4 {
                                acc -= dgl_r[m][a] * gl[n][b] * dgu_s[a][b]
                                    + gl[m][a] * dgl_r[n][b] * dgu_s[a][b]
                                    + gl[m][a] * gl[n][b] * d2gu[a][b];
                            }
                        }
                        d2g_low[pair][sym4(m, n)] = acc;
                    }
                }
            }
        }

        // Gamma^l_{mn} = 1/2 G^{ls} (d_m gamma_{sn} + d_n gamma_{sm} - d_s gamma_{mn})
        let mut gamma2 = [[0.0; 10]; 4];
        for l in 0..4 {
            for m in 0..4 {
                for n in m..4 {
                    let mut acc = 0.0;
                    for s in 0..4 {
                        acc += gu[l][s]
                            * (dg_low[m][sym4(s, n)] + dg_low[n][sym4(s, m)]
                                - dg_low[s][sym4(m, n)]);
                    }
                    gamma2[l][sym4(m, n)] = 0.5 * acc;
                }
            }
        }

        // d_r Gamma^l_{mn} = 1/2 d_r G^{ls} (...) + 1/2 G^{ls} d_r (...)
        let mut dgamma2 = [[[0.0; 10]; 4]; 4]; // [r][l][sym4(m,n)]
        for r in 0..4 {
            let dgu_r = mat4_from_sym(&self.dg_up[r]);
            for l in 0..4 {
                for m in 0..4 {
                    for n in m..4 {
                        let mut acc = 0.0;
                        for s in 0..4 {
                            let bracket = dg_low[m][sym4(s, n)] + dg_low[n][sym4(s, m)]
                                - dg_low[s][sym4(m, n)];
                            let dbracket = d2g_low[sym4(r, m)][sym4(s, n)]
                                + d2g_low[sym4(r, n)][sym4(s, m)]
                                - d2g_low[sym4(r, s)][sym4(m, n)];
                            acc += dgu_r[l][s] * bracket + gu[l][s] * dbracket;
                        }
                        dgamma2[r][l][sym4(m, n)] = 0.5 * acc;
                    }
                }
            }
        }

        // Ricci: R_{mn} = d_l Gamma^l_{mn} - d_n Gamma^l_{lm}
        //               + Gamma^l_{ls} Gamma^s_{mn} - Gamma^l_{ns} Gamma^s_{lm}
        let mut ricci_low = [0.0; 10];
        for m in 0..4 {
            for n in m..4 {
                let mut acc = 0.0;
                for l in 0..4 {
                    acc += dgamma2[l][l][sym4(m, n)] - dgamma2[n][l][sym4(l, m)];
                    for s in 0..4 {
                        acc += gamma2[l][sym4(l, s)] * gamma2[s][sym4(m, n)]
                            - gamma2[l][sym4(n, s)] * gamma2[s][sym4(l, m)];
                    }
                }
                ricci_low[sym4(m, n)] = acc;
            }
        }
        let rl = mat4_from_sym(&ricci_low);
        let mut ricci_up = [0.0; 10];
        for m in 0..4 {
            for n in m..4 {
                let mut acc = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        acc += gu[m][a] * gu[n][b] * rl[a][b];
                    }
                }
                ricci_up[sym4(m, n)] = acc;
            }
        }

        // Contracted Gamma^l and its derivative; then the gauge term.
        let mut contracted = [0.0; 4];
        for l in 0..4 {
            let mut acc = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    acc += gu[m][n] * gamma2[l][sym4(m, n)];
                }
            }
            contracted[l] = acc;
        }
        let mut dcontracted = [[0.0; 4]; 4]; // [r][l]
        for r in 0..4 {
            let dgu_r = mat4_from_sym(&self.dg_up[r]);
            for l in 0..4 {
                let mut acc = 0.0;
                for m in 0..4 {
                    for n in 0..4 {
                        acc += dgu_r[m][n] * gamma2[l][sym4(m, n)]
                            + gu[m][n] * dgamma2[r][l][sym4(m, n)];
                    }
                }
                dcontracted[r][l] = acc;
            }
        }
        let mut gauge_term = [0.0; 10];
        for m in 0..4 {
            for n in m..4 {
                let mut acc = 0.0;
                for a in 0..4 {
                    acc += gu[m][a] * dcontracted[a][n] + gu[n][a] * dcontracted[a][m];
                }
                gauge_term[sym4(m, n)] = acc;
            }
        }

        Ok(Curvature { g_low, dg_low, gamma2, contracted, ricci_up, gauge_term })
    }
}

/// Christoffel symbols of the first kind
/// `Gamma_{mn, s} = 1/2 (d_m gamma_{ns} + d_n gamma_{ms} - d_s gamma_{mn})`
/// from the lowered-metric derivatives, as `[s][sym4(m, n)]`.
pub fn christoffel_first(dg_low: &[[f64; 10]; 4]) -> [[f64; 10]; 4] {
    let mut out = [[0.0; 10]; 4];
    for s in 0..4 {
        for m in 0..4 {
            for n in m..4 {
                out[s][sym4(m, n)] = 0.5
                    * (dg_low[m][sym4(n, s)] + dg_low[n][sym4(m, s)] - dg_low[s][sym4(m, n)]);
            }
        }
    }
    out
}

/// Solved second time derivative of the reduced vacuum system:
/// `d2_t G^{mu nu} = (G^{00})^{-1} [ -2 Ric + gauge ]` with the `d2_t` slot
/// of the supplied point set to zero and true spatial/mixed slots filled.
pub fn wave_rhs(point: &SpacetimePoint) -> Result<[f64; 10]> {
    let g00 = point.g_up[sym4(0, 0)];
    if g00 >= 0.0 {
        return Err(MxError::SlicingBroken { value: g00, index: 0 });
    }
    let c = point.curvature()?;
    let mut out = [0.0; 10];
    for i in 0..10 {
        out[i] = (-2.0 * c.ricci_up[i] + c.gauge_term[i]) / g00;
    }
    Ok(out)
}

/// The quadratic source `B^{mu nu}(gamma, D gamma)`: the combination
/// `G^{ab} d2_{ab} G - 2 Ric + gauge`, which is independent of the
/// second-derivative slots supplied.
pub fn quadratic_rhs(point: &SpacetimePoint) -> Result<[f64; 10]> {
    let c = point.curvature()?;
    let gu = mat4_from_sym(&point.g_up);
    let mut out = [0.0; 10];
    for comp in 0..10 {
        let mut principal = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                principal += gu[a][b] * point.d2g_up[sym4(a, b)][comp];
            }
        }
        out[comp] = principal - 2.0 * c.ricci_up[comp] + c.gauge_term[comp];
    }
    Ok(out)
}

/// Harmonic gauge vector `f^mu = Gamma^mu` (flat reference) at a point.
pub fn harmonic_gauge_vector(point: &SpacetimePoint) -> Result<[f64; 4]> {
    Ok(point.curvature()?.contracted)
}

/// Christoffel fields of a slab level: first kind (`[s][mn]` packed as
/// `s * 10 + sym4(m, n)`), second kind (same packing with `s` the upper
/// index), and the contracted `Gamma^mu` (4 components).
///
/// Spatial derivatives by finite differences of the stored level, time
/// derivatives from the stored state.
pub fn christoffel_fields(level: &SlabLevel, scheme: DiffScheme) -> Result<(Field, Field, Field)> {
    let grid = level.gamma.grid.clone();
    let len = grid.len();
    let spatial: Vec<Field> = (0..3)
        .map(|axis| crate::fields::derivative_masked(&level.gamma, axis, 1, scheme))
        .collect();
    let mut mask = level.gamma.mask.clone();
    for d in &spatial {
        mask = mask.intersect(&d.mask);
    }
    let mut first = Field::zeros(grid.clone(), 40);
    let mut second = Field::zeros(grid.clone(), 40);
    let mut contracted = Field::zeros(grid.clone(), 4);
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        let mut g_up = [0.0; 10];
        let mut dg = [[0.0; 10]; 4];
        for c in 0..10 {
            g_up[c] = level.gamma.at(c, idx);
            dg[0][c] = level.dt_gamma.at(c, idx);
            for (axis, d) in spatial.iter().enumerate() {
                dg[axis + 1][c] = d.at(c, idx);
            }
        }
        let pt = SpacetimePoint::new(g_up, dg);
        let curv = pt.curvature()?;
        let gamma1 = christoffel_first(&curv.dg_low);
        for s in 0..4 {
            for mn in 0..10 {
                first.set(s * 10 + mn, idx, gamma1[s][mn]);
                second.set(s * 10 + mn, idx, curv.gamma2[s][mn]);
            }
        }
        for l in 0..4 {
            contracted.set(l, idx, curv.contracted[l]);
        }
    }
    Ok((
        first.with_mask(mask.clone()),
        second.with_mask(mask.clone()),
        contracted.with_mask(mask),
    ))
}

/// Upper-triangle flat inverse metric (time first).
pub fn eta_upper() -> [f64; 10] {
    crate::sobolev::flat_inverse_components()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded_rand(seed: u64) -> impl FnMut() -> f64 {
        // Small deterministic LCG for reproducible samples.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    fn random_point(rand: &mut impl FnMut() -> f64, with_second: bool) -> SpacetimePoint {
        let mut g = eta_upper();
        for v in g.iter_mut() {
            *v += 0.08 * rand();
        }
        let mut dg = [[0.0; 10]; 4];
        for row in dg.iter_mut() {
            for v in row.iter_mut() {
                *v = 0.1 * rand();
            }
        }
        let mut pt = SpacetimePoint::new(g, dg);
        if with_second {
            let mut d2 = [[0.0; 10]; 10];
            for row in d2.iter_mut() {
                for v in row.iter_mut() {
                    *v = 0.1 * rand();
                }
            }
            pt = pt.with_second(d2);
        }
        pt
    }

    #[test]
    fn flat_point_is_flat() {
        let pt = SpacetimePoint::new(eta_upper(), [[0.0; 10]; 4]);
        let c = pt.curvature().unwrap();
        for v in c.ricci_up {
            assert_eq!(v, 0.0);
        }
        for v in c.contracted {
            assert_eq!(v, 0.0);
        }
        let rhs = wave_rhs(&pt).unwrap();
        for v in rhs {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn quadratic_source_independent_of_second_derivatives() {
        // The defining cancellation: B computed with two different sets of
        // second-derivative slots must agree to rounding.
        let mut rand = seeded_rand(7);
        for _ in 0..20 {
            let base = random_point(&mut rand, false);
            let mut d2a = [[0.0; 10]; 10];
            let mut d2b = [[0.0; 10]; 10];
            for r in 0..10 {
                for c in 0..10 {
                    d2a[r][c] = 0.3 * rand();
                    d2b[r][c] = 0.3 * rand();
                }
            }
            let ba = quadratic_rhs(&base.clone().with_second(d2a)).unwrap();
            let bb = quadratic_rhs(&base.clone().with_second(d2b)).unwrap();
            for c in 0..10 {
                assert!(
                    (ba[c] - bb[c]).abs() < 1e-10,
                    "component {c}: {} vs {}",
                    ba[c],
                    bb[c]
                );
            }
        }
    }

    #[test]
    fn linearized_rhs_is_spatial_laplacian_symbol() {
        // gamma = eta + eps * H with a single Fourier mode: the solved
        // second time derivative must match -|k|^2-free spatial part, i.e.
        // d2_t H = sum_i ki^2-free... verified against the exact linear
        // wave operator: d2_t H^{mn} = Delta H^{mn} + O(eps^2).
        let eps = 1e-6;
        let kvec = [0.7, -0.4, 1.1];
        // H^{mn} amplitude pattern, phase = 0 point, second derivatives of
        // sin(k.x) at phase 0: value 0, d = k cos = k, d2 = 0. Use phase
        // pi/2: value 1, d = 0, d2 = -k_i k_j.
        let mut amp = [0.0; 10];
        amp[sym4(1, 2)] = 1.0;
        amp[sym4(0, 0)] = 0.4;
        let mut g = eta_upper();
        for c in 0..10 {
            g[c] += eps * amp[c];
        }
        let dg = [[0.0; 10]; 4];
        let mut d2 = [[0.0; 10]; 10];
        for i in 0..3 {
            for j in 0..3 {
                for c in 0..10 {
                    d2[sym4(i + 1, j + 1)][c] = -eps * kvec[i] * kvec[j] * amp[c];
                }
            }
        }
        let pt = SpacetimePoint::new(g, dg).with_second(d2);
        let rhs = wave_rhs(&pt).unwrap();
        let k2 = kvec[0] * kvec[0] + kvec[1] * kvec[1] + kvec[2] * kvec[2];
        for c in 0..10 {
            let expect = -eps * k2 * amp[c]; // Delta H = -|k|^2 H at the crest
            assert!(
                (rhs[c] - expect).abs() < 20.0 * eps * eps + 1e-14,
                "comp {c}: {} vs {expect}",
                rhs[c]
            );
        }
    }
}
