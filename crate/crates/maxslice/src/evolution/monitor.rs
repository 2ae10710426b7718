//! Gauge and hyperbolicity monitors on slab levels.

use crate::error::Result;
use crate::fields::{derivative_masked, sym4, DiffScheme, Field, SlabLevel};
use crate::geometry::{harmonic_gauge_vector, SpacetimePoint};
use crate::sobolev::{h_norm, sigma, WeightParams};

/// Harmonic gauge vector norms on one level.
#[derive(Debug, Clone)]
pub struct MonitorReport {
    pub field: Field,
    pub sup: f64,
    /// Weighted `H_{0, delta+2}` norm (delta = -1.25 convention).
    pub weighted: f64,
}

/// `f^mu = Gamma^mu` of the slab metric (flat reference), discretized with
/// the compact second-order stencils used by all gating diagnostics.
pub fn harmonic_monitor(level: &SlabLevel) -> Result<MonitorReport> {
    let grid = level.gamma.grid.clone();
    let len = grid.len();
    let spatial: Vec<Field> = (0..3)
        .map(|axis| derivative_masked(&level.gamma, axis, 1, DiffScheme::Second))
        .collect();
    let mut mask = level.gamma.mask.clone();
    for d in &spatial {
        mask = mask.intersect(&d.mask);
    }
    let mut out = Field::zeros(grid.clone(), 4);
    let mut sup = 0.0f64;
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        let mut g = [0.0; 10];
        let mut dg = [[0.0; 10]; 4];
        for c in 0..10 {
            g[c] = level.gamma.at(c, idx);
            dg[0][c] = level.dt_gamma.at(c, idx);
            for a in 0..3 {
                dg[a + 1][c] = spatial[a].at(c, idx);
            }
        }
        let f = harmonic_gauge_vector(&SpacetimePoint::new(g, dg))?;
        for mu in 0..4 {
            out.set(mu, idx, f[mu]);
            sup = sup.max(f[mu].abs());
        }
    }
    let field = out.with_mask(mask);
    let weighted = h_norm(&field, WeightParams::new(0, -1.25 + 2.0))?.value;
    Ok(MonitorReport { field, sup, weighted })
}

/// Regular-hyperbolicity constants of a level: `a`, `b`, `C` and
/// `h = max(1/a, 1/b, C)`.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolicityReport {
    pub a: f64,
    pub b: f64,
    pub c_bound: f64,
    pub h_coeff: f64,
}

/// Evaluate the hyperbolicity constants against the boost-foliation
/// co-normal `n~ = N~ (dt - (tau/sigma) x_i dx^i)`.
pub fn hyperbolicity_report(level: &SlabLevel) -> Result<HyperbolicityReport> {
    let grid = level.gamma.grid.clone();
    let len = grid.len();
    let t = level.t;
    let mut a_min = f64::INFINITY;
    let mut b_min = f64::INFINITY;
    let mut c_max = 0.0f64;
    for idx in 0..len {
        if !level.gamma.mask.active[idx] {
            continue;
        }
        let p = grid.pos_of(idx);
        let sg = sigma(p);
        let tau = t / sg;
        let x2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let denom = 1.0 - tau * tau * x2 / (sg * sg);
        if denom <= 0.0 {
            continue;
        }
        let nfac = denom.powf(-0.5);
        let mut n_co = [0.0; 4];
        n_co[0] = nfac;
        for i in 0..3 {
            n_co[i + 1] = -nfac * tau * p[i] / sg;
        }
        let mut g = [[0.0; 4]; 4];
        for m in 0..4 {
            for n in 0..4 {
                g[m][n] = level.gamma.at(sym4(m, n), idx);
            }
        }
        // a: -gamma(n~, n~)
        let mut gnn = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                gnn += g[m][n] * n_co[m] * n_co[n];
            }
        }
        a_min = a_min.min(-gnn);
        // C: Frobenius norm bound.
        let mut frob = 0.0;
        for row in &g {
            for v in row {
                frob += v * v;
            }
        }
        c_max = c_max.max(frob.sqrt());
        // b: min of gamma(z, z)/|z|^2 over covectors z with gamma(z, n~) = 0.
        // Basis: w_a = dx^a - (gamma(dx^a, n~)/gamma(n~, n~)) n~.
        let mut w = [[0.0; 4]; 3];
        for axis in 0..3 {
            let mut gan = 0.0;
            for m in 0..4 {
                gan += g[axis + 1][m] * n_co[m];
            }
            let f = gan / gnn;
            for m in 0..4 {
                w[axis][m] = -f * n_co[m];
            }
            w[axis][axis + 1] += 1.0;
        }
        // Generalized eigenproblem M z = lambda S z with S the Euclidean
        // Gram matrix of the basis.
        let mut m_mat = [0.0f64; 6];
        let mut s_mat = [0.0f64; 6];
        let sym = |i: usize, j: usize| crate::fields::sym3(i, j);
        for i in 0..3 {
            for j in i..3 {
                let mut mg = 0.0;
                let mut se = 0.0;
                for mm in 0..4 {
                    se += w[i][mm] * w[j][mm];
                    for nn in 0..4 {
                        mg += g[mm][nn] * w[i][mm] * w[j][nn];
                    }
                }
                m_mat[sym(i, j)] = mg;
                s_mat[sym(i, j)] = se;
            }
        }
        // Cholesky of S, then smallest eigenvalue of L^-1 M L^-T.
        if let Some(lam) = min_generalized_eig(&m_mat, &s_mat) {
            b_min = b_min.min(lam);
        }
    }
    let h_coeff = (1.0 / a_min).max(1.0 / b_min).max(c_max);
    Ok(HyperbolicityReport { a: a_min, b: b_min, c_bound: c_max, h_coeff })
}

fn min_generalized_eig(m: &[f64; 6], s: &[f64; 6]) -> Option<f64> {
    // Cholesky S = L L^T.
    let s11 = s[0];
    if s11 <= 0.0 {
        return None;
    }
    let l11 = s11.sqrt();
    let l21 = s[1] / l11;
    let l31 = s[2] / l11;
    let d22 = s[3] - l21 * l21;
    if d22 <= 0.0 {
        return None;
    }
    let l22 = d22.sqrt();
    let l32 = (s[4] - l31 * l21) / l22;
    let d33 = s[5] - l31 * l31 - l32 * l32;
    if d33 <= 0.0 {
        return None;
    }
    let l33 = d33.sqrt();
    let l = [[l11, 0.0, 0.0], [l21, l22, 0.0], [l31, l32, l33]];
    // Solve L X = M, then L Y^T = X^T, Y = L^-1 M L^-T.
    let mfull = [
        [m[0], m[1], m[2]],
        [m[1], m[3], m[4]],
        [m[2], m[4], m[5]],
    ];
    let fwd = |l: &[[f64; 3]; 3], b: [f64; 3]| -> [f64; 3] {
        let x0 = b[0] / l[0][0];
        let x1 = (b[1] - l[1][0] * x0) / l[1][1];
        let x2 = (b[2] - l[2][0] * x0 - l[2][1] * x1) / l[2][2];
        [x0, x1, x2]
    };
    let mut x = [[0.0; 3]; 3];
    for col in 0..3 {
        let b = [mfull[0][col], mfull[1][col], mfull[2][col]];
        let sol = fwd(&l, b);
        for row in 0..3 {
            x[row][col] = sol[row];
        }
    }
    let mut y = [[0.0; 3]; 3];
    for row in 0..3 {
        let b = [x[row][0], x[row][1], x[row][2]];
        let sol = fwd(&l, b);
        y[row] = sol;
    }
    let sym = [
        y[0][0],
        0.5 * (y[0][1] + y[1][0]),
        0.5 * (y[0][2] + y[2][0]),
        y[1][1],
        0.5 * (y[1][2] + y[2][1]),
        y[2][2],
    ];
    Some(crate::geometry::min_eig3_sym(&sym))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid3, SpacetimeSlab};
    use std::sync::Arc;

    #[test]
    fn minkowski_hyperbolicity_constants() {
        let grid = Arc::new(Grid3::cube(12, 6.0, 2).unwrap());
        let mut gamma = Field::zeros(grid.clone(), 10);
        for i in 0..grid.len() {
            gamma.set(sym4(0, 0), i, -1.0);
            gamma.set(sym4(1, 1), i, 1.0);
            gamma.set(sym4(2, 2), i, 1.0);
            gamma.set(sym4(3, 3), i, 1.0);
        }
        let slab = SpacetimeSlab::from_static(grid, gamma, 1, 0.25, 0.4);
        // At t = 0 the foliation normal is dt: a = 1, b = 1, C = 2.
        let rep = hyperbolicity_report(slab.level(0).unwrap()).unwrap();
        assert!((rep.a - 1.0).abs() < 1e-12, "a = {}", rep.a);
        assert!((rep.b - 1.0).abs() < 1e-12, "b = {}", rep.b);
        assert!((rep.c_bound - 2.0).abs() < 1e-12, "C = {}", rep.c_bound);
        // Off the initial slice the slices tilt: a decreases but stays
        // positive well inside the cone.
        let rep1 = hyperbolicity_report(slab.level(1).unwrap()).unwrap();
        assert!(rep1.a > 0.5 && rep1.a <= 1.0 + 1e-12);
        assert!(rep1.b > 0.5);
        // Monitor vanishes on flat data.
        let mon = harmonic_monitor(slab.level(0).unwrap()).unwrap();
        assert!(mon.sup < 1e-14);
    }
}
