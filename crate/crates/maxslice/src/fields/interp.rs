use super::field::Field;
use crate::error::{MxError, Result};

/// Four-node Lagrange weights (and derivative weights) for a fractional
/// offset `s` in `[0, 1]` measured from the second node of the stencil.
///
/// Exact for polynomials up to degree 3.
#[inline]
pub fn interp_weights(s: f64) -> ([f64; 4], [f64; 4]) {
    let s2 = s * s;
    let s3 = s2 * s;
    let w = [
        -s3 / 6.0 + s2 / 2.0 - s / 3.0,
        s3 / 2.0 - s2 - s / 2.0 + 1.0,
        -s3 / 2.0 + s2 / 2.0 + s,
        s3 / 6.0 - s / 6.0,
    ];
    let dw = [
        -s2 / 2.0 + s - 1.0 / 3.0,
        1.5 * s2 - 2.0 * s - 0.5,
        -1.5 * s2 + s + 1.0,
        s2 / 2.0 - 1.0 / 6.0,
    ];
    (w, dw)
}

/// Tensor-product cubic interpolation over a spatial field.
///
/// Produces the value and, on request, the analytic spatial gradient of the
/// interpolant (one order of accuracy below the value). All 64 stencil nodes
/// must be inside the valid mask, otherwise the evaluation reports
/// out-of-cone.
pub struct CubicInterp<'a> {
    field: &'a Field,
}

impl<'a> CubicInterp<'a> {
    pub fn new(field: &'a Field) -> Self {
        CubicInterp { field }
    }

    /// Stencil base indices and per-axis weights at physical point `x`.
    fn stencil(&self, x: [f64; 3]) -> Result<([usize; 3], [([f64; 4], [f64; 4]); 3])> {
        let g = &self.field.grid;
        let fc = g.frac_coords(x);
        let mut base = [0usize; 3];
        let mut w = [([0.0; 4], [0.0; 4]); 3];
        for a in 0..3 {
            // i0 is the second node of the 4-point stencil.
            let i0 = fc[a].floor();
            let s = fc[a] - i0;
            let i0 = i0 as isize;
            if i0 < 1 || (i0 + 2) as usize >= g.n[a] {
                return Err(MxError::OutOfCone { x: x[0], y: x[1], z: x[2], t: 0.0 });
            }
            base[a] = (i0 - 1) as usize;
            w[a] = interp_weights(s);
        }
        Ok((base, w))
    }

    /// Interpolated value of component `c` at point `x`.
    pub fn value(&self, c: usize, x: [f64; 3]) -> Result<f64> {
        let (base, w) = self.stencil(x)?;
        let g = &self.field.grid;
        let data = self.field.comp(c);
        let mask = &self.field.mask;
        let mut acc = 0.0;
        for (di, wi) in w[0].0.iter().enumerate() {
            for (dj, wj) in w[1].0.iter().enumerate() {
                for (dk, wk) in w[2].0.iter().enumerate() {
                    let idx = g.idx(base[0] + di, base[1] + dj, base[2] + dk);
                    if !mask.active[idx] {
                        return Err(MxError::OutOfCone { x: x[0], y: x[1], z: x[2], t: 0.0 });
                    }
                    acc += wi * wj * wk * data[idx];
                }
            }
        }
        Ok(acc)
    }

    /// Interpolated value and spatial gradient of component `c` at `x`.
    pub fn value_grad(&self, c: usize, x: [f64; 3]) -> Result<(f64, [f64; 3])> {
        let (base, w) = self.stencil(x)?;
        let g = &self.field.grid;
        let data = self.field.comp(c);
        let mask = &self.field.mask;
        let mut v = 0.0;
        let mut dv = [0.0; 3];
        for di in 0..4 {
            for dj in 0..4 {
                for dk in 0..4 {
                    let idx = g.idx(base[0] + di, base[1] + dj, base[2] + dk);
                    if !mask.active[idx] {
                        return Err(MxError::OutOfCone { x: x[0], y: x[1], z: x[2], t: 0.0 });
                    }
                    let f = data[idx];
                    let (w0, d0) = (w[0].0[di], w[0].1[di]);
                    let (w1, d1) = (w[1].0[dj], w[1].1[dj]);
                    let (w2, d2) = (w[2].0[dk], w[2].1[dk]);
                    v += w0 * w1 * w2 * f;
                    dv[0] += d0 * w1 * w2 * f;
                    dv[1] += w0 * d1 * w2 * f;
                    dv[2] += w0 * w1 * d2 * f;
                }
            }
        }
        let h = g.h;
        Ok((v, [dv[0] / h, dv[1] / h, dv[2] / h]))
    }
}
