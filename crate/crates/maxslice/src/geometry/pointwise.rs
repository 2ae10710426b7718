//! Pointwise 3+1 and graph algebra at a single event.

use super::linalg::{inv3_sym, min_eig3_sym, sym3_mul};
use crate::error::{MxError, Result};
use crate::fields::{sym3, sym4};

/// Lapse, shift and spatial metric at one point.
///
/// `beta` is the contravariant shift `beta^i`; the covariant copy and the
/// inverse spatial metric are derived on demand.
#[derive(Debug, Clone, Copy)]
pub struct AdmPoint {
    pub alpha: f64,
    pub beta: [f64; 3],
    pub g: [f64; 6],
}

impl AdmPoint {
    pub fn flat() -> Self {
        AdmPoint { alpha: 1.0, beta: [0.0; 3], g: [1.0, 0.0, 0.0, 1.0, 0.0, 1.0] }
    }

    pub fn beta_lower(&self) -> [f64; 3] {
        sym3_mul(&self.g, &self.beta)
    }

    /// `<beta, beta>_g`.
    pub fn beta_sq(&self) -> f64 {
        let bl = self.beta_lower();
        bl[0] * self.beta[0] + bl[1] * self.beta[1] + bl[2] * self.beta[2]
    }

    pub fn g_inv(&self) -> [f64; 6] {
        inv3_sym(&self.g).0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(MxError::NotSpacelikeSliced(self.alpha));
        }
        if min_eig3_sym(&self.g) <= 0.0 {
            return Err(MxError::NotSpacelikeSliced(min_eig3_sym(&self.g)));
        }
        let margin = self.alpha * self.alpha - self.beta_sq();
        if margin <= 0.0 {
            return Err(MxError::NotSpacelikeSliced(margin));
        }
        Ok(())
    }

    /// Covariant spacetime metric:
    /// `gamma_00 = -(alpha^2 - |beta|^2)`, `gamma_0i = beta_i`, `gamma_ij = g_ij`.
    pub fn four_lower(&self) -> [f64; 10] {
        let bl = self.beta_lower();
        let mut out = [0.0; 10];
        out[sym4(0, 0)] = -(self.alpha * self.alpha - self.beta_sq());
        for i in 0..3 {
            out[sym4(0, i + 1)] = bl[i];
            for j in i..3 {
                out[sym4(i + 1, j + 1)] = self.g[sym3(i, j)];
            }
        }
        out
    }

    /// Contravariant spacetime metric:
    /// `gamma^00 = -1/alpha^2`, `gamma^0i = beta^i/alpha^2`,
    /// `gamma^ij = g^ij - beta^i beta^j / alpha^2`.
    pub fn four_upper(&self) -> [f64; 10] {
        let gi = self.g_inv();
        let a2 = self.alpha * self.alpha;
        let mut out = [0.0; 10];
        out[sym4(0, 0)] = -1.0 / a2;
        for i in 0..3 {
            out[sym4(0, i + 1)] = self.beta[i] / a2;
            for j in i..3 {
                out[sym4(i + 1, j + 1)] = gi[sym3(i, j)] - self.beta[i] * self.beta[j] / a2;
            }
        }
        out
    }

    /// Recover lapse, shift and spatial metric from `gamma^{mu nu}`.
    pub fn from_four_upper(g4: &[f64; 10]) -> Result<Self> {
        let g00 = g4[sym4(0, 0)];
        if g00 >= 0.0 {
            return Err(MxError::SlicingBroken { value: g00, index: 0 });
        }
        let alpha = (-g00).powf(-0.5);
        let a2 = alpha * alpha;
        let mut beta = [0.0; 3];
        for i in 0..3 {
            beta[i] = -g4[sym4(0, i + 1)] / g00;
        }
        // g^ij = gamma^ij + beta^i beta^j / alpha^2, then invert.
        let mut gup = [0.0; 6];
        for i in 0..3 {
            for j in i..3 {
                gup[sym3(i, j)] = g4[sym4(i + 1, j + 1)] + beta[i] * beta[j] / a2;
            }
        }
        let (g, det) = inv3_sym(&gup);
        if !(det > 0.0) {
            return Err(MxError::SlicingBroken { value: det, index: 0 });
        }
        Ok(AdmPoint { alpha, beta, g })
    }

    /// Future unit normal of the constant-time slice,
    /// `T = alpha^{-1} (d/dt - beta)`.
    pub fn slice_normal(&self) -> [f64; 4] {
        [
            1.0 / self.alpha,
            -self.beta[0] / self.alpha,
            -self.beta[1] / self.alpha,
            -self.beta[2] / self.alpha,
        ]
    }
}

/// Pair a 4-vector with itself (or another) under a covariant sym4 metric.
#[inline]
pub fn pair4(glow: &[f64; 10], a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for mu in 0..4 {
        for nu in 0..4 {
            s += glow[sym4(mu, nu)] * a[mu] * b[nu];
        }
    }
    s
}

/// Graph geometry at a point: tilt, Lorentz factor, unit normal, induced
/// metric and inverse, and the co-frame dual to `alpha_k = d_k + u_k d_t`.
#[derive(Debug, Clone, Copy)]
pub struct GraphFrame {
    pub adm: AdmPoint,
    pub du: [f64; 3],
    /// `1 + <beta, Du>`.
    pub denom: f64,
    /// Tilt vector `U^i = alpha g^{ij} u_j / denom`.
    pub u_vec: [f64; 3],
    /// `U_i = g_ij U^j`.
    pub u_low: [f64; 3],
    /// `|U|_g^2`.
    pub u_sq: f64,
    /// Lorentz factor `nu = (1 - |U|^2)^{-1/2}`.
    pub nu: f64,
    /// Future unit normal `N = nu (U + T)` of the graph.
    pub normal: [f64; 4],
    /// Induced metric `(g_M)_ij`.
    pub gm: [f64; 6],
    /// Inverse induced metric `(g_M)^ij`.
    pub gm_inv: [f64; 6],
    /// Co-frame spatial coefficients `a^i_k` in `alpha^i = a^i_k dx^k + a^i_t dt`.
    pub coframe_x: [[f64; 3]; 3],
    /// Co-frame time coefficients `a^i_t`.
    pub coframe_t: [f64; 3],
}

impl GraphFrame {
    /// Assemble the frame; rejects non-spacelike graphs (condition on the
    /// tilt) and degenerate gauge denominators.
    pub fn new(adm: AdmPoint, du: [f64; 3]) -> Result<Self> {
        let gi = adm.g_inv();
        let bl = adm.beta_lower();
        let denom = 1.0 + adm.beta[0] * du[0] + adm.beta[1] * du[1] + adm.beta[2] * du[2];
        if denom < 0.5 {
            return Err(MxError::GraphDenominator(denom));
        }
        let du_up = sym3_mul(&gi, &du);
        let mut u_vec = [0.0; 3];
        for i in 0..3 {
            u_vec[i] = adm.alpha * du_up[i] / denom;
        }
        let u_low = sym3_mul(&adm.g, &u_vec);
        let u_sq = u_low[0] * u_vec[0] + u_low[1] * u_vec[1] + u_low[2] * u_vec[2];
        if u_sq.sqrt() > 0.5 {
            return Err(MxError::GraphNotSpacelike { umax: u_sq.sqrt() });
        }
        let nu = 1.0 / (1.0 - u_sq).sqrt();
        let t = adm.slice_normal();
        let normal = [
            nu * t[0],
            nu * (u_vec[0] + t[1]),
            nu * (u_vec[1] + t[2]),
            nu * (u_vec[2] + t[3]),
        ];

        // Induced metric (g_M)_ij = g_ij + beta_i u_j + u_i beta_j
        //                         - (alpha^2 - |beta|^2) u_i u_j.
        let lapse2 = adm.alpha * adm.alpha - adm.beta_sq();
        let mut gm = [0.0; 6];
        for i in 0..3 {
            for j in i..3 {
                gm[sym3(i, j)] = adm.g[sym3(i, j)] + bl[i] * du[j] + du[i] * bl[j]
                    - lapse2 * du[i] * du[j];
            }
        }
        // (g_M)^ij = gamma^ij + nu^2/alpha^2 (beta - alpha U)^i (beta - alpha U)^j.
        let a2 = adm.alpha * adm.alpha;
        let mut bmau = [0.0; 3];
        for i in 0..3 {
            bmau[i] = adm.beta[i] - adm.alpha * u_vec[i];
        }
        let mut gm_inv = [0.0; 6];
        for i in 0..3 {
            for j in i..3 {
                let gamma_ij = gi[sym3(i, j)] - adm.beta[i] * adm.beta[j] / a2;
                gm_inv[sym3(i, j)] = gamma_ij + nu * nu / a2 * bmau[i] * bmau[j];
            }
        }

        // Co-frame: a^i_k = delta^i_k - nu^2 (beta/alpha - U)^i U_k,
        //           a^i_t = nu^2 / denom * (beta - alpha U)^i.
        let mut coframe_x = [[0.0; 3]; 3];
        let mut coframe_t = [0.0; 3];
        for i in 0..3 {
            for k in 0..3 {
                let delta = if i == k { 1.0 } else { 0.0 };
                coframe_x[i][k] = delta - nu * nu * (bmau[i] / adm.alpha) * u_low[k];
            }
            coframe_t[i] = nu * nu / denom * bmau[i];
        }

        Ok(GraphFrame {
            adm,
            du,
            denom,
            u_vec,
            u_low,
            u_sq,
            nu,
            normal,
            gm,
            gm_inv,
            coframe_x,
            coframe_t,
        })
    }

    /// `W = U + T = N / nu`: the un-normalized normal direction.
    pub fn w_vector(&self) -> [f64; 4] {
        [
            self.normal[0] / self.nu,
            self.normal[1] / self.nu,
            self.normal[2] / self.nu,
            self.normal[3] / self.nu,
        ]
    }

    /// Co-frame applied to a 4-vector (`t` component first).
    pub fn coframe_apply(&self, i: usize, v: &[f64; 4]) -> f64 {
        self.coframe_t[i] * v[0]
            + self.coframe_x[i][0] * v[1]
            + self.coframe_x[i][1] * v[2]
            + self.coframe_x[i][2] * v[3]
    }

    /// Frame vector `alpha_k = d_k + u_k d_t` as a 4-vector.
    pub fn frame_vector(&self, k: usize) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[0] = self.du[k];
        v[k + 1] = 1.0;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_four_metric() {
        let p = AdmPoint::flat();
        let low = p.four_lower();
        let up = p.four_upper();
        let eta: [f64; 10] = {
            let mut e = [0.0; 10];
            e[sym4(0, 0)] = -1.0;
            e[sym4(1, 1)] = 1.0;
            e[sym4(2, 2)] = 1.0;
            e[sym4(3, 3)] = 1.0;
            e
        };
        for c in 0..10 {
            assert!((low[c] - eta[c]).abs() < 1e-15);
            assert!((up[c] - eta[c]).abs() < 1e-15);
        }
        let t = p.slice_normal();
        assert_eq!(t, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn doubled_lapse_inverse_tt() {
        let p = AdmPoint { alpha: 2.0, ..AdmPoint::flat() };
        let up = p.four_upper();
        assert!((up[sym4(0, 0)] + 0.25).abs() < 1e-15);
        let t = p.slice_normal();
        assert_eq!(t[0], 0.5);
        let low = p.four_lower();
        assert!((pair4(&low, &t, &t) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_graph_frame_plane() {
        // Minkowski, u = v . x with |v| = 0.3.
        let v = [0.3, 0.0, 0.0];
        let f = GraphFrame::new(AdmPoint::flat(), v).unwrap();
        assert!((f.u_sq.sqrt() - 0.3).abs() < 1e-14);
        let nu_expect = 1.0 / (1.0 - 0.09f64).sqrt();
        assert!((f.nu - nu_expect).abs() < 1e-14);
        // g_M = delta - v v^T; inverse = delta + v v^T / (1 - |v|^2).
        for i in 0..3 {
            for j in i..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((f.gm[sym3(i, j)] - (delta - v[i] * v[j])).abs() < 1e-14);
                let expect = delta + v[i] * v[j] / (1.0 - 0.09);
                assert!((f.gm_inv[sym3(i, j)] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn steep_graph_rejected() {
        let v = [0.6, 0.0, 0.0];
        assert!(matches!(
            GraphFrame::new(AdmPoint::flat(), v),
            Err(MxError::GraphNotSpacelike { .. })
        ));
    }
}
