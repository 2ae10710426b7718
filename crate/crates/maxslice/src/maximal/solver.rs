//! Frozen-derivative contraction iteration for the maximal surface
//! equation, plus the linearization check and the induced-data pull back.

use super::operator::{assemble_l0, solve_l0, LinearOperator};
use crate::error::{MxError, Result};
use crate::fields::{Field, Mask, ScalarField, SpacetimeSlab};
use crate::geometry::{graph_quantities, GraphBounds, GraphQuantities};
use crate::physics::{trace_field, InitialData};
use crate::sobolev::{h_norm, WeightParams};
use serde::Serialize;

/// Configuration of the fixed-point solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub delta: f64,
    /// Sup-norm residual target for `H(u)`.
    pub tol_h_sup: f64,
    /// Weighted-norm residual target (`H_{0, delta + 3/2}`).
    pub tol_h_norm: f64,
    /// Trust radius on `sup |u|`.
    pub trust_radius: f64,
    pub max_iters: usize,
    pub contraction_ceiling: f64,
    pub linear_tol: f64,
    pub linear_max_iters: usize,
    /// Height-bound exponent for the admissible ball.
    pub kappa: f64,
    /// Entry gate on `sup |tr_g k|`.
    pub smallness_gate: f64,
    /// Margin (cells) between the data mask and the solve region.
    pub solve_margin: usize,
    /// Exclude `|x| < r` from the solve region (used when the data carries
    /// a compact interior defect, e.g. a stuffed excision ball).
    pub inner_exclusion: Option<f64>,
    /// Smoothly taper the residual to zero inside `(r0, r1)`: weight 0 for
    /// `|x| <= r0`, 1 for `|x| >= r1`. The equation is solved exactly
    /// outside `r1`; a compact interior defect is masked without
    /// introducing an artificial inner boundary.
    pub residual_taper: Option<(f64, f64)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            delta: -1.25,
            tol_h_sup: 1e-8,
            tol_h_norm: 1e-7,
            trust_radius: 0.05,
            max_iters: 20,
            contraction_ceiling: 0.5,
            linear_tol: 1e-10,
            linear_max_iters: 20000,
            kappa: 0.2,
            smallness_gate: 0.2,
            solve_margin: 4,
            inner_exclusion: None,
            residual_taper: None,
        }
    }
}

/// One iteration record.
#[derive(Debug, Clone, Serialize)]
pub struct IftStep {
    pub h_sup: f64,
    pub h_norm: f64,
    pub step_sup: f64,
    pub contraction_ratio: Option<f64>,
    pub kernel_overlap: f64,
    pub linear_iters: usize,
    pub linear_residual: f64,
}

/// Full iteration log.
#[derive(Debug, Clone, Serialize)]
pub struct IftLog {
    pub steps: Vec<IftStep>,
    pub converged: bool,
    pub final_h_sup: f64,
    pub final_h_norm: f64,
    pub u_sup: f64,
}

/// Mean curvature of `Graph_u` via the graph pipeline (the map whose zero
/// the iteration hunts).
pub fn evaluate_h(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    bounds: &GraphBounds,
) -> Result<ScalarField> {
    Ok(graph_quantities(slab, u, bounds)?.h)
}

/// Extend `u` (defined on the solve region) outward so the graph pipeline
/// has stencil room, then evaluate `H`.
fn evaluate_h_extended(
    slab: &SpacetimeSlab,
    op: &LinearOperator,
    u_vals: &[f64],
    bounds: &GraphBounds,
) -> Result<ScalarField> {
    let (ext, ext_mask) = op.extend(u_vals, 6);
    let mut u = Field::zeros(op.grid.clone(), 1);
    u.comp_mut(0).copy_from_slice(&ext);
    let u = u.with_mask(ext_mask);
    evaluate_h(slab, &u, bounds)
}

/// Solve the maximal surface equation by the frozen-derivative iteration
/// `u <- u - L0^{-1} H(u)` with the derivative assembled once at `u = 0`.
pub fn ift_solve(
    slab: &SpacetimeSlab,
    d: &InitialData,
    cfg: &SolverConfig,
) -> Result<(ScalarField, IftLog)> {
    // Entry gate: the unperturbed residual is the trace.
    let trace = trace_field(d);
    let trace_sup = trace.sup();
    if trace_sup > cfg.smallness_gate {
        return Err(MxError::SmallnessGate { value: trace_sup, gate: cfg.smallness_gate });
    }

    let bounds = GraphBounds::from_slab(slab, cfg.kappa);
    // Solve region: inside the data mask and inside where H(0) can be
    // evaluated.
    let h0 = {
        let u0 = Field::zeros(d.grid(), 1);
        evaluate_h(slab, &u0, &bounds)?
    };
    let mut region = h0.mask.intersect(&d.mask()).erode(cfg.solve_margin);
    if let Some(r_excl) = cfg.inner_exclusion {
        let grid = d.grid();
        for idx in 0..grid.len() {
            if region.active[idx] && grid.radius_of(idx) < r_excl {
                region.active[idx] = false;
            }
        }
    }
    if region.count() == 0 {
        return Err(MxError::MaskEmpty(0));
    }
    let op = assemble_l0(d, region.clone(), cfg.delta)?;

    let len = d.grid().len();
    let grid = d.grid();
    // Residual weights: smoothstep taper around a compact interior defect.
    let taper: Vec<f64> = (0..len)
        .map(|i| match cfg.residual_taper {
            None => 1.0,
            Some((r0, r1)) => {
                let t = ((grid.radius_of(i) - r0) / (r1 - r0)).clamp(0.0, 1.0);
                t * t * (3.0 - 2.0 * t)
            }
        })
        .collect();
    let mut u = vec![0.0f64; len];
    let mut steps: Vec<IftStep> = Vec::new();
    let mut prev_step_sup: Option<f64> = None;
    let norm_w = WeightParams::new(0, cfg.delta + 1.5);
    let mut converged = false;
    let mut final_h_sup = f64::NAN;
    let mut final_h_norm = f64::NAN;

    for iter in 0..cfg.max_iters {
        let h_field = evaluate_h_extended(slab, &op, &u, &bounds)?;
        let mut h_on_region = restrict_to(&h_field, &region)?;
        for i in 0..len {
            if region.active[i] {
                let v = h_on_region.at(0, i) * taper[i];
                h_on_region.set(0, i, v);
            }
        }
        let h_sup = h_on_region.sup();
        let h_nv = h_norm(&h_on_region, norm_w)?;
        final_h_sup = h_sup;
        final_h_norm = h_nv.value;
        if h_sup <= cfg.tol_h_sup && h_nv.value <= cfg.tol_h_norm {
            converged = true;
            break;
        }
        let (du, stats) = solve_l0(&op, &h_on_region, cfg.linear_tol, cfg.linear_max_iters)?;
        let mut step_sup = 0.0f64;
        for i in 0..len {
            if region.active[i] {
                u[i] -= du.at(0, i);
                step_sup = step_sup.max(du.at(0, i).abs());
            }
        }
        // Keep the iterate in the kernel complement.
        let _removed = op.project_kernel(&mut u);
        let ones = vec![1.0; len];
        let overlap = op.kernel_inner(&u, &ones).abs()
            / (op.kernel_inner(&u, &u).sqrt() * op.kernel_inner(&ones, &ones).sqrt()).max(1e-300);

        let ratio = prev_step_sup.map(|prev| step_sup / prev.max(1e-300));
        steps.push(IftStep {
            h_sup,
            h_norm: h_nv.value,
            step_sup,
            contraction_ratio: ratio,
            kernel_overlap: overlap,
            linear_iters: stats.iterations,
            linear_residual: stats.relative_residual,
        });
        if let Some(r) = ratio {
            if r > cfg.contraction_ceiling && step_sup > cfg.tol_h_sup {
                return Err(MxError::ContractionCeiling {
                    ratio: r,
                    ceiling: cfg.contraction_ceiling,
                    iter,
                });
            }
        }
        let u_sup = u
            .iter()
            .enumerate()
            .filter(|(i, _)| region.active[*i])
            .map(|(_, v)| v.abs())
            .fold(0.0f64, f64::max);
        if u_sup > cfg.trust_radius {
            return Err(MxError::TrustRegionExit { norm: u_sup, radius: cfg.trust_radius });
        }
        prev_step_sup = Some(step_sup);
    }
    let u_sup = u
        .iter()
        .enumerate()
        .filter(|(i, _)| region.active[*i])
        .map(|(_, v)| v.abs())
        .fold(0.0f64, f64::max);
    if !converged {
        return Err(MxError::SolveNonConvergence {
            residual: final_h_sup,
            iters: cfg.max_iters,
        });
    }
    let mut out = Field::zeros(d.grid(), 1);
    out.comp_mut(0).copy_from_slice(&u);
    Ok((
        out.with_mask(region),
        IftLog { steps, converged, final_h_sup, final_h_norm, u_sup },
    ))
}

fn restrict_to(f: &ScalarField, region: &Mask) -> Result<ScalarField> {
    if !region.subset_of(&f.mask) {
        return Err(MxError::MarginExhausted(
            "field does not cover the solve region".into(),
        ));
    }
    Ok(f.clone().with_mask(region.clone()))
}

/// Induced data of `Graph_u`: pulled-back metric and second form with the
/// graph diagnostics attached.
pub fn induced_data(
    slab: &SpacetimeSlab,
    u: &ScalarField,
    kappa: f64,
) -> Result<(InitialData, GraphQuantities)> {
    let bounds = GraphBounds::from_slab(slab, kappa);
    let q = graph_quantities(slab, u, &bounds)?;
    Ok((InitialData { g: q.gm.clone(), k: q.k_m.clone() }, q))
}

/// Central-difference Frechet check of the linearization:
/// `[H(eps v) - H(-eps v)]/(2 eps)` against `L0 v`, error per `eps` and the
/// fitted log-log slope (2 for a clean quadratic remainder).
#[derive(Debug, Clone, Serialize)]
pub struct LinearizationReport {
    pub eps: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

pub fn linearization_check(
    slab: &SpacetimeSlab,
    d: &InitialData,
    v: &ScalarField,
    eps_list: &[f64],
    cfg: &SolverConfig,
) -> Result<LinearizationReport> {
    let bounds = GraphBounds::from_slab(slab, cfg.kappa);
    let u0 = Field::zeros(d.grid(), 1);
    let h0 = evaluate_h(slab, &u0, &bounds)?;
    let region = h0.mask.intersect(&d.mask()).erode(cfg.solve_margin);
    let op = assemble_l0(d, region.clone(), cfg.delta)?;
    let len = d.grid().len();
    let vv: Vec<f64> = v.comp(0).to_vec();
    let lv = op.apply(&vv);

    let mut errors = Vec::new();
    for &eps in eps_list {
        let mut up = vec![0.0; len];
        let mut um = vec![0.0; len];
        for i in 0..len {
            up[i] = eps * vv[i];
            um[i] = -eps * vv[i];
        }
        let hp = evaluate_h_extended(slab, &op, &up, &bounds)?;
        let hm = evaluate_h_extended(slab, &op, &um, &bounds)?;
        // Weighted L2 of the difference over the region.
        let mut sum = 0.0f64;
        let mut count = 0.0f64;
        for i in 0..len {
            if region.active[i] && hp.mask.active[i] && hm.mask.active[i] {
                let cd = (hp.at(0, i) - hm.at(0, i)) / (2.0 * eps);
                let diff = cd - lv[i];
                sum += diff * diff;
                count += 1.0;
            }
        }
        errors.push((sum / count.max(1.0)).sqrt());
    }
    // Least-squares slope in log-log.
    let n = eps_list.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&e, &err) in eps_list.iter().zip(&errors) {
        let x = e.ln();
        let y = err.max(1e-300).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(LinearizationReport { eps: eps_list.to_vec(), errors, slope })
}

/// Scalar contraction model: solve `F(x) = x + x^2 = y` by the fixed-point
/// map `T(x) = x - [F'(0)]^{-1} (F(x) - y) = y - x^2` from `x = 0`.
/// Returns the fixed point, the iteration count and the per-step
/// contraction ratios.
pub fn scalar_model_solve(y: f64, tol: f64, max_iters: usize) -> (f64, usize, Vec<f64>) {
    let mut x = 0.0f64;
    let mut ratios = Vec::new();
    let mut prev_step: Option<f64> = None;
    for iter in 0..max_iters {
        let next = y - x * x;
        let step = (next - x).abs();
        if let Some(p) = prev_step {
            ratios.push(step / p.max(1e-300));
        }
        x = next;
        if step < tol {
            return (x, iter + 1, ratios);
        }
        prev_step = Some(step);
    }
    (x, max_iters, ratios)
}
