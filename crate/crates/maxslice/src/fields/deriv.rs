use super::field::{Field, Mask};
use crate::error::{MxError, Result};
use rayon::prelude::*;

/// Finite-difference scheme selection.
///
/// `Fourth` uses the 5-point fourth-order stencil wherever it fits inside the
/// valid region and degrades to the compact second-order stencil one cell
/// from the region boundary. `Second` uses the compact stencil everywhere;
/// diagnostics that gate on second-order convergence use it so that their
/// refinement ratio is uniform over the whole region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    Fourth,
    Second,
}

/// Central finite difference of `field` along `axis` (0, 1, 2).
///
/// `order` is the derivative order (1 or 2). The result's valid region is
/// the input region eroded by one cell; interior points get the declared
/// accuracy, boundary-adjacent points second order.
pub fn derivative(field: &Field, axis: usize, order: usize, scheme: DiffScheme) -> Result<Field> {
    if axis >= 3 {
        return Err(MxError::AxisOutOfRange(axis));
    }
    if order == 0 || order > 2 {
        return Err(MxError::Config(format!("derivative order {order} not in 1..=2")));
    }
    let g = &field.grid;
    let need = match scheme {
        DiffScheme::Fourth => 4,
        DiffScheme::Second => 2,
    } + 2;
    if g.n[axis] < need {
        return Err(MxError::FieldTooSmall { axis, n: g.n[axis], need });
    }
    Ok(derivative_masked(field, axis, order, scheme))
}

/// Same as [`derivative`] but infallible once arguments are known valid.
pub fn derivative_masked(field: &Field, axis: usize, order: usize, scheme: DiffScheme) -> Field {
    let g = field.grid.clone();
    let len = g.len();
    let stride = g.stride(axis);
    let h = g.h;
    let mask = &field.mask;

    let out_mask = mask.erode(1);
    let mut out = Field::zeros(g.clone(), field.ncomp);

    // Per-axis stencil fit: the erosion above is isotropic, but accuracy
    // selection only needs neighbors along `axis`.
    let fits = |idx: usize, w: usize| -> bool {
        let [i, j, k] = g.coords_of(idx);
        let c = [i, j, k][axis];
        if c < w || c + w >= g.n[axis] {
            return false;
        }
        (1..=w).all(|d| mask.active[idx - d * stride] && mask.active[idx + d * stride])
    };

    for c in 0..field.ncomp {
        let src = &field.data[c * len..(c + 1) * len];
        let mut buf = vec![f64::NAN; len];
        buf.par_iter_mut().enumerate().for_each(|(idx, out_v)| {
            if !out_mask.active[idx] {
                return;
            }
            let use4 = scheme == DiffScheme::Fourth && fits(idx, 2);
            let v = if use4 {
                match order {
                    1 => {
                        (-src[idx + 2 * stride] + 8.0 * src[idx + stride]
                            - 8.0 * src[idx - stride]
                            + src[idx - 2 * stride])
                            / (12.0 * h)
                    }
                    _ => {
                        (-src[idx + 2 * stride] + 16.0 * src[idx + stride] - 30.0 * src[idx]
                            + 16.0 * src[idx - stride]
                            - src[idx - 2 * stride])
                            / (12.0 * h * h)
                    }
                }
            } else {
                match order {
                    1 => (src[idx + stride] - src[idx - stride]) / (2.0 * h),
                    _ => (src[idx + stride] - 2.0 * src[idx] + src[idx - stride]) / (h * h),
                }
            };
            *out_v = v;
        });
        out.comp_mut(c).copy_from_slice(&buf);
    }
    out.mask = out_mask;
    out
}

/// Gradient of a scalar component: three derivative fields stacked.
pub fn gradient(field: &Field, comp: usize, scheme: DiffScheme) -> Field {
    let mut out = Field::zeros(field.grid.clone(), 3);
    let mut mask: Option<Mask> = None;
    let single = Field {
        grid: field.grid.clone(),
        ncomp: 1,
        data: field.comp(comp).to_vec(),
        mask: field.mask.clone(),
    };
    for axis in 0..3 {
        let d = derivative_masked(&single, axis, 1, scheme);
        out.comp_mut(axis).copy_from_slice(d.comp(0));
        mask = Some(match mask {
            None => d.mask,
            Some(m) => m.intersect(&d.mask),
        });
    }
    out.mask = mask.unwrap();
    out
}
