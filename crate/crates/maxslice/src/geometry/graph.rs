//! Spacelike graphs over the initial slice: state, induced metric, co-frame,
//! second fundamental form and mean curvature, all evaluated from slab data
//! interpolated at `(x, u(x))`.
//!
//! The mean curvature is computed from the local-coordinates expansion of
//! `H_u = (g_M)^{ij} < nabla_{alpha_i} N, alpha_j >`: the composite field
//! `W(x) = (U + T)(x, u(x))` is formed pointwise and differentiated with
//! grid stencils, which realizes `(d_i + u_i d_t) W` exactly by the chain
//! rule for the height-independent extension `d_t u = 0`.

use super::curvature::christoffel_first;
use super::linalg::mat4_from_sym;
use super::pointwise::{pair4, AdmPoint, GraphFrame};
use crate::error::{MxError, Result};
use crate::fields::{
    derivative_masked, gradient, sym3, sym4, DiffScheme, Field, Mask, ScalarField, SpacetimeSlab,
    SymTensorField3, VectorField3,
};
use crate::sobolev::sigma;

/// Height-function state: gradient, tilt, Lorentz factor, gauge denominator.
#[derive(Debug, Clone)]
pub struct GraphState {
    pub u: ScalarField,
    pub du: VectorField3,
    /// Tilt vector `U^i` at the graph.
    pub tilt: VectorField3,
    pub nu: ScalarField,
    pub denom: ScalarField,
    /// Max `|U|_g` seen (must stay <= 1/2).
    pub max_tilt: f64,
    /// Max `|<N,N> + 1|` over the region.
    pub normal_check: f64,
}

/// Full set of graph fields used by the solver and the induced-data pull
/// back.
#[derive(Debug, Clone)]
pub struct GraphQuantities {
    pub state_mask: Mask,
    /// Induced metric `(g_M)_ij` in base coordinates.
    pub gm: SymTensorField3,
    /// Closed-form inverse `(g_M)^ij`.
    pub gm_inv: SymTensorField3,
    /// Symmetrized second fundamental form of the graph.
    pub k_m: SymTensorField3,
    /// Mean curvature from the local-coordinates expansion.
    pub h: ScalarField,
    /// Mean curvature as `tr_{g_M} k_M` (second code path).
    pub h_trace: ScalarField,
    /// Max asymmetry of the raw second form (diagnostic, O(h^2)).
    pub k_asym: f64,
    /// Max `|<N,N>+1|`.
    pub normal_check: f64,
    /// Max `|(g_M)^{ik} (g_M)_{kj} - delta|`.
    pub inverse_check: f64,
    /// Max co-frame identity violation `|alpha^i(alpha_k) - delta|, |alpha^i(N)|`.
    pub coframe_check: f64,
}

/// Condition bounds for admissible heights.
#[derive(Debug, Clone, Copy)]
pub struct GraphBounds {
    /// Height bound `|u| <= (theta/2) sigma^{-kappa}`.
    pub theta: f64,
    pub kappa: f64,
}

impl GraphBounds {
    pub fn from_slab(slab: &SpacetimeSlab, kappa: f64) -> Self {
        GraphBounds { theta: slab.theta_eff, kappa }
    }
}

fn check_height_bound(u: &ScalarField, slab: &SpacetimeSlab, b: &GraphBounds) -> Result<()> {
    let grid = &u.grid;
    let t_cap = slab.t_max().min(-slab.t_min()) - slab.dt;
    for idx in 0..grid.len() {
        if !u.mask.active[idx] {
            continue;
        }
        let val = u.at(0, idx).abs();
        let bound = 0.5 * b.theta * sigma(grid.pos_of(idx)).powf(-b.kappa);
        if val > bound {
            return Err(MxError::GraphExitsSlab { umax: val, bound });
        }
        if val > t_cap {
            return Err(MxError::GraphExitsSlab { umax: val, bound: t_cap });
        }
    }
    Ok(())
}

/// Per-point graph frame sampled from the slab at `(x, u(x))`, plus the data
/// needed to differentiate through the graph: `W = U + T`, the lowered
/// metric, and its first-kind Christoffels.
struct GraphPointFields {
    mask: Mask,
    w: Field,          // 4 comps
    gamma_low: Field,  // 10 comps
    gamma1: Field,     // 40 comps, [sigma*10 + sym4(m,n)]
    gm: Field,         // 6
    gm_inv: Field,     // 6
    nu: Field,         // 1
    tilt: Field,       // 3
    denom: Field,      // 1
    max_tilt: f64,
    normal_check: f64,
    inverse_check: f64,
    coframe_check: f64,
}

fn graph_point_fields(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    du: &VectorField3,
) -> Result<GraphPointFields> {
    let grid = u.grid.clone();
    let len = grid.len();
    let mut w = Field::zeros(grid.clone(), 4);
    let mut gamma_low = Field::zeros(grid.clone(), 10);
    let mut gamma1 = Field::zeros(grid.clone(), 40);
    let mut gm = Field::zeros(grid.clone(), 6);
    let mut gm_inv = Field::zeros(grid.clone(), 6);
    let mut nu = Field::zeros(grid.clone(), 1);
    let mut tilt = Field::zeros(grid.clone(), 3);
    let mut denom = Field::zeros(grid.clone(), 1);
    let mut active = vec![false; len];
    let mut max_tilt = 0.0f64;
    let mut normal_check = 0.0f64;
    let mut inverse_check = 0.0f64;
    let mut coframe_check = 0.0f64;

    for idx in 0..len {
        if !du.mask.active[idx] {
            continue;
        }
        let x = grid.pos_of(idx);
        let t = u.at(0, idx);
        let sample = match slab.sample(x, t) {
            Ok(s) => s,
            Err(MxError::OutOfCone { .. }) => continue,
            Err(e) => return Err(e),
        };
        let adm = AdmPoint::from_four_upper(&sample.gamma)?;
        let du_p = [du.at(0, idx), du.at(1, idx), du.at(2, idx)];
        let frame = GraphFrame::new(adm, du_p)?;
        active[idx] = true;
        max_tilt = max_tilt.max(frame.u_sq.sqrt());

        let wv = frame.w_vector();
        for c in 0..4 {
            w.set(c, idx, wv[c]);
        }
        // Lowered metric and Christoffels of the first kind at the event;
        // derivative array in (t, x, y, z) order.
        let mut dg = [[0.0; 10]; 4];
        for c in 0..10 {
            dg[0][c] = sample.dgamma_t[c];
            for a in 0..3 {
                dg[a + 1][c] = sample.dgamma_x[c][a];
            }
        }
        let pt = super::curvature::SpacetimePoint::new(sample.gamma, dg);
        let curv_low = pt.lower()?;
        let gl = mat4_from_sym(&curv_low);
        let mut dg_low = [[0.0; 10]; 4];
        for s in 0..4 {
            let dgu = mat4_from_sym(&dg[s]);
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
        let g1 = christoffel_first(&dg_low);
        for s in 0..4 {
            for mn in 0..10 {
                gamma1.set(s * 10 + mn, idx, g1[s][mn]);
            }
        }
        for c in 0..10 {
            gamma_low.set(c, idx, curv_low[c]);
        }
        for c in 0..6 {
            gm.set(c, idx, frame.gm[c]);
            gm_inv.set(c, idx, frame.gm_inv[c]);
        }
        nu.set(0, idx, frame.nu);
        for c in 0..3 {
            tilt.set(c, idx, frame.u_vec[c]);
        }
        denom.set(0, idx, frame.denom);

        // Machine checks of the frame identities.
        normal_check = normal_check.max((pair4(&curv_low, &frame.normal, &frame.normal) + 1.0).abs());
        for i in 0..3 {
            for j in 0..3 {
                let mut prod = 0.0;
                for k in 0..3 {
                    prod += frame.gm_inv[sym3(i, k)] * frame.gm[sym3(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                inverse_check = inverse_check.max((prod - expect).abs());
                let dual = frame.coframe_apply(i, &frame.frame_vector(j));
                coframe_check = coframe_check.max((dual - expect).abs());
            }
            coframe_check = coframe_check.max(frame.coframe_apply(i, &frame.normal).abs());
        }
    }
    let mask = Mask { grid: grid.clone(), active };
    if mask.count() == 0 {
        return Err(MxError::MaskEmpty(0));
    }
    Ok(GraphPointFields {
        w: w.with_mask(mask.clone()),
        gamma_low: gamma_low.with_mask(mask.clone()),
        gamma1: gamma1.with_mask(mask.clone()),
        gm: gm.with_mask(mask.clone()),
        gm_inv: gm_inv.with_mask(mask.clone()),
        nu: nu.with_mask(mask.clone()),
        tilt: tilt.with_mask(mask.clone()),
        denom: denom.with_mask(mask.clone()),
        mask,
        max_tilt,
        normal_check,
        inverse_check,
        coframe_check,
    })
}

/// Graph state (tilt, Lorentz factor, denominators) with diagnostics.
pub fn graph_state(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    bounds: &GraphBounds,
) -> Result<GraphState> {
    check_height_bound(u, slab, bounds)?;
    let du = gradient(u, 0, DiffScheme::Fourth);
    let pf = graph_point_fields(slab, u, &du)?;
    Ok(GraphState {
        u: u.clone(),
        du,
        tilt: pf.tilt,
        nu: pf.nu,
        denom: pf.denom,
        max_tilt: pf.max_tilt,
        normal_check: pf.normal_check,
    })
}

/// Induced metric and inverse only (cheaper than the full quantities).
pub fn graph_metric(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    bounds: &GraphBounds,
) -> Result<(SymTensorField3, SymTensorField3, f64)> {
    check_height_bound(u, slab, bounds)?;
    let du = gradient(u, 0, DiffScheme::Fourth);
    let pf = graph_point_fields(slab, u, &du)?;
    Ok((pf.gm, pf.gm_inv, pf.inverse_check))
}

/// Co-frame identity diagnostics (duality and normal annihilation).
pub fn graph_coframe(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    bounds: &GraphBounds,
) -> Result<f64> {
    check_height_bound(u, slab, bounds)?;
    let du = gradient(u, 0, DiffScheme::Fourth);
    let pf = graph_point_fields(slab, u, &du)?;
    Ok(pf.coframe_check)
}

/// Everything: induced metric, second form, mean curvature (two paths) and
/// identity diagnostics.
pub fn graph_quantities(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    bounds: &GraphBounds,
) -> Result<GraphQuantities> {
    check_height_bound(u, slab, bounds)?;
    let grid = u.grid.clone();
    let len = grid.len();
    let du = gradient(u, 0, DiffScheme::Fourth);
    let pf = graph_point_fields(slab, u, &du)?;

    // Spatial derivatives of the composite W field: these are the frame
    // derivatives (d_i + u_i d_t) W by the chain rule.
    let dw: Vec<Field> = (0..3)
        .map(|axis| derivative_masked(&pf.w, axis, 1, DiffScheme::Fourth))
        .collect();
    let mut mask = pf.mask.clone();
    for d in &dw {
        mask = mask.intersect(&d.mask);
    }

    let mut k_m = Field::zeros(grid.clone(), 6);
    let mut h = Field::zeros(grid.clone(), 1);
    let mut h_trace = Field::zeros(grid.clone(), 1);
    let mut k_asym = 0.0f64;

    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        let nu_v = pf.nu.at(0, idx);
        let du_p = [du.at(0, idx), du.at(1, idx), du.at(2, idx)];
        let mut glow = [0.0; 10];
        for c in 0..10 {
            glow[c] = pf.gamma_low.at(c, idx);
        }
        let mut wv = [0.0; 4];
        for c in 0..4 {
            wv[c] = pf.w.at(c, idx);
        }
        // Raw (unsymmetrized) bracket:
        //   b_ij = (d_i W)^mu (gamma_{mu j} + u_j gamma_{mu t})
        //        + W^mu (G_{i mu, j} + u_i G_{t mu, j}
        //                + u_j G_{i mu, t} + u_i u_j G_{t mu, t})
        let mut raw = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for mu in 0..4 {
                    let dwi = dw[i].at(mu, idx);
                    acc += dwi * (glow[sym4(mu, j + 1)] + du_p[j] * glow[sym4(mu, 0)]);
                    let c1 = pf.gamma1.at((j + 1) * 10 + sym4(i + 1, mu), idx);
                    let c2 = pf.gamma1.at((j + 1) * 10 + sym4(0, mu), idx);
                    let c3 = pf.gamma1.at(sym4(i + 1, mu), idx); // sigma = t
                    let c4 = pf.gamma1.at(sym4(0, mu), idx);
                    acc += wv[mu] * (c1 + du_p[i] * c2 + du_p[j] * c3 + du_p[i] * du_p[j] * c4);
                }
                raw[i][j] = acc;
            }
        }
        // Second form: nu * symmetrized bracket.
        for i in 0..3 {
            for j in i..3 {
                let sym = 0.5 * (raw[i][j] + raw[j][i]);
                k_m.set(sym3(i, j), idx, nu_v * sym);
                k_asym = k_asym.max(nu_v * (raw[i][j] - raw[j][i]).abs());
            }
        }
        // Mean curvature, direct expansion (unsymmetrized bracket):
        let mut h_direct = 0.0;
        let mut h_tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let gmij = pf.gm_inv.at(sym3(i, j), idx);
                h_direct += gmij * raw[i][j];
                h_tr += gmij * k_m.at(sym3(i, j), idx);
            }
        }
        h.set(0, idx, nu_v * h_direct);
        h_trace.set(0, idx, h_tr);
    }

    Ok(GraphQuantities {
        gm: pf.gm.clone().with_mask(mask.clone()),
        gm_inv: pf.gm_inv.clone().with_mask(mask.clone()),
        k_m: k_m.with_mask(mask.clone()),
        h: h.with_mask(mask.clone()),
        h_trace: h_trace.with_mask(mask.clone()),
        state_mask: mask,
        k_asym,
        normal_check: pf.normal_check,
        inverse_check: pf.inverse_check,
        coframe_check: pf.coframe_check,
    })
}

/// Mean curvature of `Graph_u` only.
pub fn graph_mean_curvature(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    bounds: &GraphBounds,
) -> Result<ScalarField> {
    Ok(graph_quantities(slab, u, bounds)?.h)
}
