//! Vacuum constraint residuals and the trace of the second fundamental form.
//!
//! Residuals are discretized with uniform compact second-order stencils so
//! that their refinement behavior is clean O(h^2) over the whole evaluation
//! region; an extra quality collar is eroded near excision boundaries where
//! strong gradients would otherwise dominate the sup.

use crate::error::Result;
use crate::fields::{
    derivative_masked, sym3, DiffScheme, Field, Grid3, Mask, ScalarField, SymTensorField3,
    VectorField3,
};
use crate::geometry::{inv3_sym, min_eig3_sym};
use crate::sobolev::{h_norm, NormValue, WeightParams};
use std::sync::Arc;

/// An initial data pair `(g, k)` over a grid, flat reference understood.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub g: SymTensorField3,
    pub k: SymTensorField3,
}

impl InitialData {
    pub fn grid(&self) -> Arc<Grid3> {
        self.g.grid.clone()
    }

    pub fn mask(&self) -> Mask {
        self.g.mask.intersect(&self.k.mask)
    }

    /// Uniform ellipticity check: smallest eigenvalue of `g` against the
    /// flat reference, sampled over the valid region. Returns
    /// `(min_eig, max_eig_proxy)`.
    pub fn ellipticity(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for idx in 0..self.g.grid.len() {
            if !self.g.mask.active[idx] {
                continue;
            }
            let mut g = [0.0; 6];
            for c in 0..6 {
                g[c] = self.g.at(c, idx);
            }
            let e = min_eig3_sym(&g);
            lo = lo.min(e);
            let tr = g[0] + g[3] + g[5];
            hi = hi.max(tr);
        }
        (lo, hi)
    }

    /// Inverse spatial metric as a field.
    pub fn g_inv(&self) -> SymTensorField3 {
        let grid = self.grid();
        let mut out = Field::zeros(grid.clone(), 6);
        for idx in 0..grid.len() {
            if !self.g.mask.active[idx] {
                continue;
            }
            let mut g = [0.0; 6];
            for c in 0..6 {
                g[c] = self.g.at(c, idx);
            }
            let (gi, _) = inv3_sym(&g);
            for c in 0..6 {
                out.set(c, idx, gi[c]);
            }
        }
        out.with_mask(self.g.mask.clone())
    }
}

/// Spatial Christoffel symbols `Gamma^k_{ij}` of `g`, packed as
/// `k * 6 + sym3(i, j)` (18 components).
pub fn spatial_christoffels(
    g: &SymTensorField3,
    g_inv: &SymTensorField3,
    scheme: DiffScheme,
) -> Field {
    let grid = g.grid.clone();
    let len = grid.len();
    let dg: Vec<Field> = (0..3).map(|a| derivative_masked(g, a, 1, scheme)).collect();
    let mut mask = g.mask.clone();
    for d in &dg {
        mask = mask.intersect(&d.mask);
    }
    let mut out = Field::zeros(grid, 18);
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        for kk in 0..3 {
            for i in 0..3 {
                for j in i..3 {
                    let mut acc = 0.0;
                    for l in 0..3 {
                        let bracket = dg[i].at(sym3(l, j), idx) + dg[j].at(sym3(l, i), idx)
                            - dg[l].at(sym3(i, j), idx);
                        acc += g_inv.at(sym3(kk, l), idx) * bracket;
                    }
                    out.set(kk * 6 + sym3(i, j), idx, 0.5 * acc);
                }
            }
        }
    }
    out.with_mask(mask)
}

/// Scalar curvature of `g` by finite differences:
/// `R = g^{ij} (d_k Gamma^k_{ij} - d_i Gamma^k_{kj} + Gamma Gamma - Gamma Gamma)`.
pub fn ricci_scalar_field(d: &InitialData, collar: usize) -> ScalarField {
    let scheme = DiffScheme::Second;
    let g_inv = d.g_inv();
    let gamma = spatial_christoffels(&d.g, &g_inv, scheme);
    let dgamma: Vec<Field> = (0..3)
        .map(|a| derivative_masked(&gamma, a, 1, scheme))
        .collect();
    let grid = d.grid();
    let len = grid.len();
    let mut mask = gamma.mask.clone();
    for dg in &dgamma {
        mask = mask.intersect(&dg.mask);
    }
    if collar > 0 {
        mask = mask.erode(collar);
    }
    let mut out = Field::zeros(grid, 1);
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        let mut r = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let mut ricci_ij = 0.0;
                for kk in 0..3 {
                    ricci_ij += dgamma[kk].at(kk * 6 + sym3(i, j), idx);
                    ricci_ij -= dgamma[i].at(kk * 6 + sym3(kk, j), idx);
                    for l in 0..3 {
                        ricci_ij += gamma.at(kk * 6 + sym3(kk, l), idx)
                            * gamma.at(l * 6 + sym3(i, j), idx);
                        ricci_ij -= gamma.at(kk * 6 + sym3(i, l), idx)
                            * gamma.at(l * 6 + sym3(kk, j), idx);
                    }
                }
                r += g_inv.at(sym3(i, j), idx) * ricci_ij;
            }
        }
        out.set(0, idx, r);
    }
    out.with_mask(mask)
}

/// Hamiltonian constraint residual `R_g - |k|^2_g + (tr_g k)^2`.
pub fn hamiltonian_residual(d: &InitialData, collar: usize) -> Result<ScalarField> {
    let r = ricci_scalar_field(d, collar);
    let g_inv = d.g_inv();
    let grid = d.grid();
    let mask = r.mask.intersect(&d.k.mask);
    let mut out = Field::zeros(grid.clone(), 1);
    for idx in 0..grid.len() {
        if !mask.active[idx] {
            continue;
        }
        let mut ksq = 0.0;
        let mut tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tr += g_inv.at(sym3(i, j), idx) * d.k.at(sym3(i, j), idx);
                for a in 0..3 {
                    for b in 0..3 {
                        ksq += g_inv.at(sym3(i, a), idx)
                            * g_inv.at(sym3(j, b), idx)
                            * d.k.at(sym3(i, j), idx)
                            * d.k.at(sym3(a, b), idx);
                    }
                }
            }
        }
        out.set(0, idx, r.at(0, idx) - ksq + tr * tr);
    }
    Ok(out.with_mask(mask))
}

/// Momentum constraint residual `(div_g (k - (tr_g k) g))_j`.
pub fn momentum_residual(d: &InitialData, collar: usize) -> Result<VectorField3> {
    let scheme = DiffScheme::Second;
    let g_inv = d.g_inv();
    let grid = d.grid();
    let len = grid.len();

    // pi_ij = k_ij - (tr k) g_ij
    let mut pi = Field::zeros(grid.clone(), 6);
    let base_mask = d.mask();
    for idx in 0..len {
        if !base_mask.active[idx] {
            continue;
        }
        let mut tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tr += g_inv.at(sym3(i, j), idx) * d.k.at(sym3(i, j), idx);
            }
        }
        for c in 0..6 {
            pi.set(c, idx, d.k.at(c, idx) - tr * d.g.at(c, idx));
        }
    }
    let pi = pi.with_mask(base_mask);
    divergence_sym(&pi, d, &g_inv, scheme, collar)
}

/// Covariant divergence of a symmetric 2-tensor:
/// `(div T)_j = g^{ik} (d_k T_ij - Gamma^l_{ki} T_lj - Gamma^l_{kj} T_il)`.
pub fn divergence_sym(
    t: &SymTensorField3,
    d: &InitialData,
    g_inv: &SymTensorField3,
    scheme: DiffScheme,
    collar: usize,
) -> Result<VectorField3> {
    let grid = t.grid.clone();
    let len = grid.len();
    let gamma = spatial_christoffels(&d.g, g_inv, scheme);
    let dt: Vec<Field> = (0..3).map(|a| derivative_masked(t, a, 1, scheme)).collect();
    let mut mask = gamma.mask.intersect(&t.mask);
    for f in &dt {
        mask = mask.intersect(&f.mask);
    }
    if collar > 0 {
        mask = mask.erode(collar);
    }
    let mut out = Field::zeros(grid, 3);
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        for j in 0..3 {
            let mut acc = 0.0;
            for i in 0..3 {
                for kk in 0..3 {
                    let gik = g_inv.at(sym3(i, kk), idx);
                    let mut term = dt[kk].at(sym3(i, j), idx);
                    for l in 0..3 {
                        term -= gamma.at(l * 6 + sym3(kk, i), idx) * t.at(sym3(l, j), idx);
                        term -= gamma.at(l * 6 + sym3(kk, j), idx) * t.at(sym3(i, l), idx);
                    }
                    acc += gik * term;
                }
            }
            out.set(j, idx, acc);
        }
    }
    Ok(out.with_mask(mask))
}

/// Pointwise trace `tr_g k = g^{ij} k_ij`.
pub fn trace_field(d: &InitialData) -> ScalarField {
    let g_inv = d.g_inv();
    let grid = d.grid();
    let mask = d.mask();
    let mut out = Field::zeros(grid.clone(), 1);
    for idx in 0..grid.len() {
        if !mask.active[idx] {
            continue;
        }
        let mut tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tr += g_inv.at(sym3(i, j), idx) * d.k.at(sym3(i, j), idx);
            }
        }
        out.set(0, idx, tr);
    }
    out.with_mask(mask)
}

/// Weighted norm of the trace.
pub fn trace_norm(d: &InitialData, w: WeightParams) -> Result<NormValue> {
    h_norm(&trace_field(d), w)
}
