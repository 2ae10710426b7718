use super::field::Field;
use super::interp::CubicInterp;
use crate::error::{MxError, Result};

/// Latitude-longitude product quadrature rule for coordinate spheres:
/// Gauss-Legendre in cos(theta), trapezoid in phi.
#[derive(Debug, Clone, Copy)]
pub struct SphereRule {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for SphereRule {
    fn default() -> Self {
        SphereRule { n_theta: 32, n_phi: 64 }
    }
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 4 || n_phi < 4 {
            return Err(MxError::QuadratureOrderTooLow(n_theta.min(n_phi)));
        }
        Ok(SphereRule { n_theta, n_phi })
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and derivative by recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Surface integral over the coordinate sphere `|x| = radius` of a sampler
/// `f(point, outward_unit_normal)`.
///
/// The integrand is sampled at quadrature nodes; the caller's sampler may
/// itself interpolate fields and will surface out-of-region errors.
pub fn sphere_integral_sampler<F>(radius: f64, rule: SphereRule, mut f: F) -> Result<f64>
where
    F: FnMut([f64; 3], [f64; 3]) -> Result<f64>,
{
    if rule.n_theta < 4 || rule.n_phi < 4 {
        return Err(MxError::QuadratureOrderTooLow(rule.n_theta.min(rule.n_phi)));
    }
    let (ct, wt) = gauss_legendre(rule.n_theta);
    let dphi = 2.0 * std::f64::consts::PI / rule.n_phi as f64;
    let mut total = 0.0;
    for (i, &c) in ct.iter().enumerate() {
        let s = (1.0 - c * c).sqrt();
        let mut ring = 0.0;
        for j in 0..rule.n_phi {
            let phi = dphi * j as f64;
            let nrm = [s * phi.cos(), s * phi.sin(), c];
            let p = [radius * nrm[0], radius * nrm[1], radius * nrm[2]];
            ring += f(p, nrm)?;
        }
        total += wt[i] * ring * dphi;
    }
    Ok(total * radius * radius)
}

/// Surface integral of a stored scalar field over `|x| = radius`,
/// sampled by cubic interpolation.
pub fn sphere_integral(field: &Field, comp: usize, radius: f64, rule: SphereRule) -> Result<f64> {
    let g = &field.grid;
    let max_r = g.half_extent() - 2.0 * g.h;
    if radius <= 0.0 || radius > max_r {
        return Err(MxError::SphereExitsGrid { radius });
    }
    let interp = CubicInterp::new(field);
    sphere_integral_sampler(radius, rule, |p, _| interp.value(comp, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid3;
    use std::sync::Arc;
    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let int_x2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert!((int_x2 - 2.0 / 3.0).abs() < 1e-14);
        let int_1: f64 = w.iter().sum();
        assert!((int_1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_integrand_gives_sphere_area() {
        let v = sphere_integral_sampler(2.0, SphereRule::default(), |_, _| Ok(1.0)).unwrap();
        assert!((v - 16.0 * PI).abs() < 1e-10, "{v}");
    }

    #[test]
    fn odd_harmonic_vanishes() {
        let r = 2.0;
        let v = sphere_integral_sampler(r, SphereRule::default(), |p, _| Ok(p[2] / r)).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
    }

    #[test]
    fn second_moment_matches_analytic() {
        // (x3/R)^2 over the unit sphere integrates to 4*pi/3.
        let v = sphere_integral_sampler(1.0, SphereRule::default(), |p, _| Ok(p[2] * p[2])).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn spherical_harmonics_vanish_within_tolerance() {
        // l = 1..3 real harmonics over an interpolated field.
        let g = Arc::new(Grid3::cube(24, 4.0, 2).unwrap());
        let r = 2.0;
        for (name, f) in [
            ("y10", Box::new(|p: [f64; 3]| p[2]) as Box<dyn Fn([f64; 3]) -> f64>),
            ("y11", Box::new(|p: [f64; 3]| p[0])),
            ("y2", Box::new(|p: [f64; 3]| p[0] * p[1])),
            ("y2d", Box::new(|p: [f64; 3]| 2.0 * p[2] * p[2] - p[0] * p[0] - p[1] * p[1])),
            ("y3", Box::new(|p: [f64; 3]| p[2] * (2.0 * p[2] * p[2] - 3.0 * p[0] * p[0] - 3.0 * p[1] * p[1]))),
        ] {
            let field = Field::from_fn(g.clone(), 1, |p, _| f(p));
            let v = sphere_integral(&field, 0, r, SphereRule::default()).unwrap();
            assert!(v.abs() < 1e-9, "{name}: {v}");
        }
    }

    #[test]
    fn sphere_outside_grid_rejected() {
        let g = Arc::new(Grid3::cube(16, 4.0, 2).unwrap());
        let field = Field::zeros(g, 1);
        assert!(matches!(
            sphere_integral(&field, 0, 3.9, SphereRule::default()),
            Err(MxError::SphereExitsGrid { .. })
        ));
    }

    #[test]
    fn low_order_rule_rejected() {
        assert!(matches!(SphereRule::new(2, 64), Err(MxError::QuadratureOrderTooLow(2))));
    }
}
