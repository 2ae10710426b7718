//! Exact and constructed initial-data families.
//!
//! Every family is generated analytically on the grid so the whole test
//! suite runs without external inputs. Excised regions (around the origin
//! for black-hole data, outside the annulus for the rotating family) are
//! masked and poisoned with NaN; consumers must honor the masks.

use crate::error::{MxError, Result};
use crate::evolution::{build_cauchy_data, evolve, EvolveConfig};
use crate::fields::{sym3, Field, Grid3, Mask, ScalarField, SpacetimeSlab};
use crate::geometry::{adm_to_four, graph_quantities, AdmMetric, GraphBounds};
use crate::physics::{trace_field, InitialData};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Gaussian tilt profile `u0(x) = amplitude * exp(-|x - center|^2 / width^2)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TiltProfile {
    pub amplitude: f64,
    pub width: f64,
    pub center: [f64; 3],
}

impl TiltProfile {
    pub fn sample(&self, grid: Arc<Grid3>) -> ScalarField {
        Field::from_fn(grid, 1, |p, _| {
            let dx = p[0] - self.center[0];
            let dy = p[1] - self.center[1];
            let dz = p[2] - self.center[2];
            self.amplitude * (-(dx * dx + dy * dy + dz * dz) / (self.width * self.width)).exp()
        })
    }
}

/// Data family selector for generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum DatasetSpec {
    Flat,
    Schwarzschild {
        mass: f64,
        /// Excision radius (defaults to `mass`).
        r_excision: Option<f64>,
    },
    KerrAnnulus {
        mass: f64,
        spin: f64,
        r_inner: f64,
        r_outer: f64,
    },
    Tilted {
        mass: f64,
        r_excision: Option<f64>,
        tilt: TiltProfile,
    },
}

/// Flat data: `g = e`, `k = 0`.
pub fn make_flat(grid: Arc<Grid3>) -> InitialData {
    InitialData {
        g: Field::from_fn(grid.clone(), 6, |_, c| match c {
            0 | 3 | 5 => 1.0,
            _ => 0.0,
        }),
        k: Field::zeros(grid, 6),
    }
}

/// Time-symmetric black hole slice in isotropic coordinates:
/// `g = (1 + m/2r)^4 e`, `k = 0`, excised inside `r_exc`.
pub fn make_schwarzschild(grid: Arc<Grid3>, mass: f64, r_exc: f64) -> Result<InitialData> {
    if grid.half_extent() < 4.0 * mass {
        return Err(MxError::DatasetParam(format!(
            "grid half-extent {} too small for radii >= 4m = {}",
            grid.half_extent(),
            4.0 * mass
        )));
    }
    if r_exc <= 0.0 {
        return Err(MxError::DatasetParam("excision radius must be positive".into()));
    }
    let mask = Mask::from_fn(grid.clone(), |p| {
        p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > r_exc * r_exc
    });
    let g = Field::from_fn(grid.clone(), 6, |p, c| {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt().max(1e-12);
        let phi4 = (1.0 + 0.5 * mass / r).powi(4);
        match c {
            0 | 3 | 5 => phi4,
            _ => 0.0,
        }
    })
    .with_mask(mask.clone());
    let k = Field::zeros(grid, 6).with_mask(mask);
    Ok(InitialData { g, k })
}

/// Black-hole slice with a stuffed interior: outside `r_stuff` the metric
/// is the isotropic one, inside the conformal factor is capped by the even
/// quartic matching value and two derivatives at the seam. The interior is
/// not vacuum (a compact constraint violation replaces the excised ball),
/// but it carries a full mask, so evolution cones only erode from the box;
/// the junk stays causally confined near the origin. Gate regions for
/// constraint checks must exclude the stuffing ball.
pub fn make_schwarzschild_stuffed(
    grid: Arc<Grid3>,
    mass: f64,
    r_stuff: f64,
) -> Result<InitialData> {
    if grid.half_extent() < 4.0 * mass {
        return Err(MxError::DatasetParam(format!(
            "grid half-extent {} too small for radii >= 4m = {}",
            grid.half_extent(),
            4.0 * mass
        )));
    }
    let mu = 0.5 * mass;
    let rs = r_stuff;
    // phi = 1 + mu/r outside; a + b r^2 + c r^4 inside, C^2 at the seam.
    let c_coef = 3.0 / 8.0 * mu / rs.powi(5);
    let b_coef = -5.0 / 4.0 * mu / rs.powi(3);
    let a_coef = 1.0 + 15.0 / 8.0 * mu / rs;
    let phi = move |r: f64| -> f64 {
        if r >= rs {
            1.0 + mu / r
        } else {
            a_coef + b_coef * r * r + c_coef * r.powi(4)
        }
    };
    let g = Field::from_fn(grid.clone(), 6, |p, c| {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let phi4 = phi(r).powi(4);
        match c {
            0 | 3 | 5 => phi4,
            _ => 0.0,
        }
    });
    let k = Field::zeros(grid, 6);
    Ok(InitialData { g, k })
}

/// Stationary rotating slice on an annulus, quasi-isotropic radial
/// coordinate: maximal (`tr_g k = 0` in closed form) with angular momentum
/// `mass * spin`.
pub fn make_kerr_annulus(
    grid: Arc<Grid3>,
    mass: f64,
    spin: f64,
    r_inner: f64,
    r_outer: f64,
) -> Result<InitialData> {
    if spin.abs() >= mass {
        return Err(MxError::DatasetParam(format!(
            "spin {spin} must satisfy |a| < m = {mass}"
        )));
    }
    // Horizon in the quasi-isotropic radius.
    let r_plus = 0.5 * (mass * mass - spin * spin).sqrt();
    if r_inner <= r_plus {
        return Err(MxError::DatasetParam(format!(
            "annulus inner radius {r_inner} touches the horizon radius {r_plus}"
        )));
    }
    let kerr = KerrQi::oriented(mass, spin);
    let mask = Mask::from_fn(grid.clone(), |p| {
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        r2 > r_inner * r_inner && r2 < r_outer * r_outer
    });
    if mask.count() == 0 {
        return Err(MxError::DatasetParam("annulus contains no grid cells".into()));
    }
    let len = grid.len();
    let mut g = Field::zeros(grid.clone(), 6);
    let mut k = Field::zeros(grid.clone(), 6);
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        let p = grid.pos_of(idx);
        let (gv, kv) = kerr.metric_and_curvature(p);
        for c in 0..6 {
            g.set(c, idx, gv[c]);
            k.set(c, idx, kv[c]);
        }
    }
    Ok(InitialData { g: g.with_mask(mask.clone()), k: k.with_mask(mask) })
}

/// Rotating stationary metric in quasi-isotropic Cartesian form.
pub struct KerrQi {
    pub m: f64,
    pub a: f64,
}

impl KerrQi {
    /// Orientation such that the flux-form angular momentum of the slice
    /// data equals `+mass * spin` under the slice-form sign convention
    /// `k = (dt - L_beta) g / (2 alpha)`.
    pub fn oriented(mass: f64, spin: f64) -> Self {
        KerrQi { m: mass, a: -spin }
    }

    /// Boyer-Lindquist-type radius and its derivative from the
    /// quasi-isotropic one.
    fn r_bl(&self, rq: f64) -> (f64, f64) {
        let q = (self.m * self.m - self.a * self.a) / 4.0;
        (rq + self.m + q / rq, 1.0 - q / (rq * rq))
    }

    fn scalars(&self, p: [f64; 3]) -> KerrScalars {
        let rq = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt().max(1e-12);
        let rho2 = (p[0] * p[0] + p[1] * p[1]).max(1e-24);
        let cos_t = p[2] / rq;
        let sin2 = (rho2 / (rq * rq)).max(1e-24);
        let (r, drdrq) = self.r_bl(rq);
        let sigma = r * r + self.a * self.a * cos_t * cos_t;
        let delta = r * r - 2.0 * self.m * r + self.a * self.a;
        let abig = (r * r + self.a * self.a).powi(2) - delta * self.a * self.a * sin2;
        KerrScalars { rq, rho2, cos_t, sin2, r, drdrq, sigma, delta, abig }
    }

    /// Lapse and Cartesian shift (contravariant).
    pub fn lapse_shift(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let s = self.scalars(p);
        let alpha = (s.delta * s.sigma / s.abig).max(1e-30).sqrt();
        let beta_phi = -2.0 * self.m * self.a * s.r / s.abig;
        (alpha, [-p[1] * beta_phi, p[0] * beta_phi, 0.0])
    }

    /// Spatial metric and second fundamental form (slice-form convention),
    /// Cartesian components.
    pub fn metric_and_curvature(&self, p: [f64; 3]) -> ([f64; 6], [f64; 6]) {
        let s = self.scalars(p);
        let (m, a) = (self.m, self.a);
        // g = (Sigma/rq^2)(delta - w w / rho^2) + (A / (Sigma rq^2)) w w / rho^2
        // with w = (-y, x, 0).
        let w = [-p[1], p[0], 0.0];
        let conf = s.sigma / (s.rq * s.rq);
        let gphi = s.abig / s.sigma / (s.rq * s.rq);
        let mut g = [0.0; 6];
        for i in 0..3 {
            for j in i..3 {
                let delta_ij = if i == j { 1.0 } else { 0.0 };
                let ww = w[i] * w[j] / s.rho2;
                g[sym3(i, j)] = conf * (delta_ij - ww) + gphi * ww;
            }
        }
        // k = -(1/2 alpha) L_beta g: only (R, phi) and (theta, phi) entries.
        let alpha = (s.delta * s.sigma / s.abig).max(1e-30).sqrt();
        let g_phph = s.abig / s.sigma * s.sin2;
        let da_dr = 4.0 * s.r * (s.r * s.r + a * a) - (2.0 * s.r - 2.0 * m) * a * a * s.sin2;
        let dbeta_dr = -2.0 * m * a * (s.abig - s.r * da_dr) / (s.abig * s.abig);
        let dbeta_drq = dbeta_dr * s.drdrq;
        let sin_t = s.sin2.sqrt();
        let da_dth = -2.0 * s.delta * a * a * sin_t * s.cos_t;
        let dbeta_dth = 2.0 * m * a * s.r * da_dth / (s.abig * s.abig);
        let k_rphi = -0.5 / alpha * g_phph * dbeta_drq;
        let k_thphi = -0.5 / alpha * g_phph * dbeta_dth;
        let rho = s.rho2.sqrt();
        let dr_i = [p[0] / s.rq, p[1] / s.rq, p[2] / s.rq];
        let dth_i = [
            p[0] * p[2] / (s.rq * s.rq * rho),
            p[1] * p[2] / (s.rq * s.rq * rho),
            -rho / (s.rq * s.rq),
        ];
        let dph_i = [-p[1] / s.rho2, p[0] / s.rho2, 0.0];
        let mut k = [0.0; 6];
        for i in 0..3 {
            for j in i..3 {
                k[sym3(i, j)] = k_rphi * (dr_i[i] * dph_i[j] + dph_i[i] * dr_i[j])
                    + k_thphi * (dth_i[i] * dph_i[j] + dph_i[i] * dth_i[j]);
            }
        }
        (g, k)
    }

    /// 3+1 form as an ADM metric field over a masked grid.
    pub fn adm_metric(&self, grid: Arc<Grid3>, mask: &Mask) -> AdmMetric {
        let len = grid.len();
        let mut alpha = Field::zeros(grid.clone(), 1);
        let mut beta = Field::zeros(grid.clone(), 3);
        let mut g = Field::zeros(grid.clone(), 6);
        for idx in 0..len {
            if !mask.active[idx] {
                continue;
            }
            let p = grid.pos_of(idx);
            let (av, bv) = self.lapse_shift(p);
            let (gv, _) = self.metric_and_curvature(p);
            alpha.set(0, idx, av);
            for i in 0..3 {
                beta.set(i, idx, bv[i]);
            }
            for c in 0..6 {
                g.set(c, idx, gv[c]);
            }
        }
        AdmMetric {
            alpha: alpha.with_mask(mask.clone()),
            beta: beta.with_mask(mask.clone()),
            g: g.with_mask(mask.clone()),
        }
    }

    /// Static slab carrying the stationary metric (for Komar integrals and
    /// slice-geometry oracles).
    pub fn static_slab(
        &self,
        grid: Arc<Grid3>,
        mask: &Mask,
        n_side: usize,
        dt: f64,
    ) -> Result<SpacetimeSlab> {
        let adm = self.adm_metric(grid.clone(), mask);
        let (_, upper) = adm_to_four(&adm)?;
        Ok(SpacetimeSlab::from_static(grid, upper, n_side, dt, 0.5))
    }
}

struct KerrScalars {
    rq: f64,
    rho2: f64,
    cos_t: f64,
    sin2: f64,
    r: f64,
    drdrq: f64,
    sigma: f64,
    delta: f64,
    abig: f64,
}

/// Result of the tilt construction: the induced data, the slab it came
/// from, and the tilt height field.
pub struct TiltedData {
    pub data: InitialData,
    pub base_slab: SpacetimeSlab,
    pub u0: ScalarField,
}

/// Manufacture non-maximal vacuum data with small trace: evolve a maximal
/// base, then pull back the induced metric and second form of `Graph_{u0}`.
pub fn make_tilted(
    base: &InitialData,
    tilt: &TiltProfile,
    evolve_cfg: &EvolveConfig,
    kappa: f64,
    maximal_gate: f64,
) -> Result<TiltedData> {
    let tr = trace_field(base);
    if tr.sup() > maximal_gate {
        return Err(MxError::GateFailure {
            stage: "tilt-base".into(),
            detail: format!("base trace sup {} exceeds gate {maximal_gate}", tr.sup()),
        });
    }
    let cd = build_cauchy_data(base)?;
    let result = evolve(&cd, evolve_cfg)?;
    let slab = result.slab;
    let u0 = tilt.sample(base.grid());
    let bounds = GraphBounds::from_slab(&slab, kappa);
    let q = graph_quantities(&slab, &u0, &bounds)?;
    let data = InitialData { g: q.gm.clone(), k: q.k_m.clone() };
    Ok(TiltedData { data, base_slab: slab, u0 })
}

/// Dispatch a dataset spec on a grid.
pub fn generate(spec: &DatasetSpec, grid: Arc<Grid3>) -> Result<InitialData> {
    match spec {
        DatasetSpec::Flat => Ok(make_flat(grid)),
        DatasetSpec::Schwarzschild { mass, r_excision } => {
            make_schwarzschild(grid, *mass, r_excision.unwrap_or(*mass))
        }
        DatasetSpec::KerrAnnulus { mass, spin, r_inner, r_outer } => {
            make_kerr_annulus(grid, *mass, *spin, *r_inner, *r_outer)
        }
        DatasetSpec::Tilted { mass, r_excision, tilt } => {
            let base = make_schwarzschild_stuffed(grid, *mass, r_excision.unwrap_or(*mass))?;
            let cfg = EvolveConfig { steps: 2, diagnostics: false, ..Default::default() };
            Ok(make_tilted(&base, tilt, &cfg, 0.2, 1e-8)?.data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SphereRule;
    use crate::physics::{
        adm_mass, angular_momentum_pi, hamiltonian_residual, momentum_residual,
    };

    #[test]
    fn flat_family_is_trivial() {
        let grid = Arc::new(Grid3::cube(16, 8.0, 2).unwrap());
        let d = make_flat(grid);
        assert!(hamiltonian_residual(&d, 0).unwrap().sup() < 1e-13);
        let m = adm_mass(&d, &[4.0, 5.0], SphereRule::default()).unwrap();
        assert!(m.extrapolated.abs() < 1e-10);
        let j = angular_momentum_pi(&d, &[4.0, 5.0], SphereRule::default()).unwrap();
        assert!(j.extrapolated.abs() < 1e-10);
    }

    #[test]
    fn schwarzschild_mass_and_symmetry() {
        let grid = Arc::new(Grid3::cube(48, 16.0, 2).unwrap());
        let d = make_schwarzschild(grid, 1.0, 1.0).unwrap();
        let m = adm_mass(&d, &[6.0, 8.0, 10.0, 12.0], SphereRule::default()).unwrap();
        assert!((m.extrapolated - 1.0).abs() < 0.02, "mass {}", m.extrapolated);
        // Spherical symmetry implies axisymmetry; away from the strong-field
        // collar the residual is stencil noise.
        let xi = crate::physics::axial_killing_field(d.grid());
        let lie = crate::geometry::lie_derivative_metric(&d.g, &xi, crate::fields::DiffScheme::Fourth);
        assert!(crate::physics::sup_outside(&lie, 4.0) < 1e-3);
    }

    #[test]
    fn schwarzschild_residual_refines_at_second_order() {
        // Fixed probe points sampled by interpolation: cell-centered grids
        // do not co-locate under refinement, so pointwise sups are noisy.
        let points = crate::physics::probe_points(5.0, 9.0, 200, 7);
        let sup_at = |n: usize| -> f64 {
            let grid = Arc::new(Grid3::cube(n, 12.0, 2).unwrap());
            let d = make_schwarzschild(grid.clone(), 1.0, 1.0).unwrap();
            let ham = hamiltonian_residual(&d, 0).unwrap();
            crate::physics::probe_sup(&ham, &points)
        };
        let coarse = sup_at(24);
        let fine = sup_at(48);
        let ratio = coarse / fine;
        assert!((3.2..4.8).contains(&ratio), "ratio {ratio} ({coarse} -> {fine})");
    }

    #[test]
    fn kerr_annulus_invariants() {
        let grid = Arc::new(Grid3::cube(48, 12.0, 2).unwrap());
        let d = make_kerr_annulus(grid.clone(), 1.0, 0.5, 1.5, 11.5).unwrap();
        // Maximal in closed form.
        assert!(trace_field(&d).sup() < 1e-10, "trace {}", trace_field(&d).sup());
        // J = m a within 2%.
        let j = angular_momentum_pi(&d, &[5.0, 7.0, 9.0], SphereRule::default()).unwrap();
        assert!(
            (j.extrapolated - 0.5).abs() < 0.01,
            "J {} per-radius {:?}",
            j.extrapolated,
            j.per_radius
        );
        // ADM mass within 2%.
        let m = adm_mass(&d, &[5.0, 7.0, 9.0], SphereRule::default()).unwrap();
        assert!((m.extrapolated - 1.0).abs() < 0.02, "m {}", m.extrapolated);
        // Constraint residuals stay truncation-sized on the analytic
        // vacuum solution.
        let ham = hamiltonian_residual(&d, 2).unwrap();
        let mom = momentum_residual(&d, 2).unwrap();
        assert!(ham.sup() < 0.2, "hamiltonian {}", ham.sup());
        assert!(mom.sup() < 0.2, "momentum {}", mom.sup());
    }

    #[test]
    fn kerr_rejects_bad_parameters() {
        let grid = Arc::new(Grid3::cube(16, 8.0, 2).unwrap());
        assert!(matches!(
            make_kerr_annulus(grid.clone(), 1.0, 1.1, 2.0, 7.0),
            Err(MxError::DatasetParam(_))
        ));
        assert!(matches!(
            make_kerr_annulus(grid, 1.0, 0.9, 0.1, 7.0),
            Err(MxError::DatasetParam(_))
        ));
    }
}
