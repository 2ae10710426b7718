use super::field::{Mask, SymTensorField4};
use super::grid::Grid3;
use super::interp::CubicInterp;
use crate::error::{MxError, Result};
use std::sync::Arc;

/// One time level of a spacetime slab: the inverse metric components
/// `gamma^{mu nu}` and their first time derivative, with a validity mask.
#[derive(Debug, Clone)]
pub struct SlabLevel {
    pub t: f64,
    pub gamma: SymTensorField4,
    pub dt_gamma: SymTensorField4,
}

impl SlabLevel {
    pub fn mask(&self) -> &Mask {
        &self.gamma.mask
    }
}

/// Cone-masked spacetime slab: time levels `t_{-n} .. t_{+n}` around the
/// initial slice, each carrying `gamma^{mu nu}` and its time derivative.
///
/// The active region of each level away from the initial slice is a subset
/// of its neighbor's region eroded by the stencil half-width, the discrete
/// realization of the ingoing lateral cone.
#[derive(Debug, Clone)]
pub struct SpacetimeSlab {
    pub grid: Arc<Grid3>,
    pub dt: f64,
    pub levels: Vec<SlabLevel>,
    /// Index of the `t = 0` level in `levels`.
    pub zero: usize,
    /// Effective boost ratio `t_max / min sigma` on the retained region.
    pub theta_eff: f64,
}

/// Sampled spacetime metric data at one event: inverse-metric components,
/// their spatial gradients and time derivatives.
#[derive(Debug, Clone, Copy)]
pub struct SlabSample {
    /// `gamma^{mu nu}` upper-triangle (sym4 layout).
    pub gamma: [f64; 10],
    /// Spatial gradient of each component.
    pub dgamma_x: [[f64; 3]; 10],
    /// Time derivative of each component.
    pub dgamma_t: [f64; 10],
}

impl SpacetimeSlab {
    /// Build a slab whose levels all carry the same static data.
    pub fn from_static(
        grid: Arc<Grid3>,
        gamma: SymTensorField4,
        n_side: usize,
        dt: f64,
        theta_eff: f64,
    ) -> Self {
        let dt_gamma = SymTensorField4::zeros(grid.clone(), 10).with_mask(gamma.mask.clone());
        let mut levels = Vec::new();
        let n = n_side as i64;
        for j in -n..=n {
            levels.push(SlabLevel {
                t: j as f64 * dt,
                gamma: gamma.clone(),
                dt_gamma: dt_gamma.clone(),
            });
        }
        SpacetimeSlab { grid, dt, levels, zero: n_side, theta_eff }
    }

    pub fn t_min(&self) -> f64 {
        self.levels.first().map(|l| l.t).unwrap_or(0.0)
    }

    pub fn t_max(&self) -> f64 {
        self.levels.last().map(|l| l.t).unwrap_or(0.0)
    }

    pub fn level(&self, offset: i64) -> Result<&SlabLevel> {
        let idx = self.zero as i64 + offset;
        if idx < 0 || idx as usize >= self.levels.len() {
            return Err(MxError::LevelAtBoundary(offset));
        }
        Ok(&self.levels[idx as usize])
    }

    /// Check the lateral-cone nesting: every level's active region must be
    /// contained in its inward neighbor's region eroded by `width`.
    pub fn check_mask_nesting(&self, width: usize) -> bool {
        for j in 0..self.levels.len() {
            let inward = match j.cmp(&self.zero) {
                std::cmp::Ordering::Less => j + 1,
                std::cmp::Ordering::Greater => j - 1,
                std::cmp::Ordering::Equal => continue,
            };
            let eroded = self.levels[inward].mask().erode(width);
            if !self.levels[j].mask().subset_of(&eroded) {
                return false;
            }
        }
        true
    }

    /// Bracketing level index for cubic time interpolation at `t`:
    /// returns `l0` such that levels `l0..l0+4` are used and
    /// `t` lies between `l0+1` and `l0+2`.
    fn time_stencil(&self, t: f64) -> Result<(usize, f64)> {
        if self.levels.len() < 4 {
            return Err(MxError::MarginExhausted("slab has fewer than 4 levels".into()));
        }
        let f = (t - self.levels[0].t) / self.dt;
        let j = f.floor();
        let s = f - j;
        let j = j as isize;
        let l0 = j - 1;
        if l0 < 0 || (l0 + 3) as usize >= self.levels.len() {
            return Err(MxError::OutOfCone { x: f64::NAN, y: f64::NAN, z: f64::NAN, t });
        }
        Ok((l0 as usize, s))
    }

    /// Sample all metric components and first derivatives at `(x, t)`.
    pub fn sample(&self, x: [f64; 3], t: f64) -> Result<SlabSample> {
        let (l0, s) = self.time_stencil(t)?;
        let (wt, _) = super::interp::interp_weights(s);
        let mut out = SlabSample {
            gamma: [0.0; 10],
            dgamma_x: [[0.0; 3]; 10],
            dgamma_t: [0.0; 10],
        };
        for (dl, &w) in wt.iter().enumerate() {
            let level = &self.levels[l0 + dl];
            let gi = CubicInterp::new(&level.gamma);
            let di = CubicInterp::new(&level.dt_gamma);
            for c in 0..10 {
                let (v, grad) = gi.value_grad(c, x).map_err(|e| self.cone_err(e, x, t))?;
                out.gamma[c] += w * v;
                for a in 0..3 {
                    out.dgamma_x[c][a] += w * grad[a];
                }
                let vt = di.value(c, x).map_err(|e| self.cone_err(e, x, t))?;
                out.dgamma_t[c] += w * vt;
            }
        }
        Ok(out)
    }

    /// Sample a single component's value only.
    pub fn sample_value(&self, c: usize, x: [f64; 3], t: f64) -> Result<f64> {
        let (l0, s) = self.time_stencil(t)?;
        let (wt, _) = super::interp::interp_weights(s);
        let mut v = 0.0;
        for (dl, &w) in wt.iter().enumerate() {
            let gi = CubicInterp::new(&self.levels[l0 + dl].gamma);
            v += w * gi.value(c, x).map_err(|e| self.cone_err(e, x, t))?;
        }
        Ok(v)
    }

    fn cone_err(&self, e: MxError, x: [f64; 3], t: f64) -> MxError {
        match e {
            MxError::OutOfCone { .. } => MxError::OutOfCone { x: x[0], y: x[1], z: x[2], t },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sym4, Field};

    fn minkowski(grid: &Arc<Grid3>) -> SymTensorField4 {
        let mut f = Field::zeros(grid.clone(), 10);
        let len = grid.len();
        for i in 0..len {
            f.set(sym4(0, 0), i, -1.0);
            f.set(sym4(1, 1), i, 1.0);
            f.set(sym4(2, 2), i, 1.0);
            f.set(sym4(3, 3), i, 1.0);
        }
        f
    }

    #[test]
    fn linear_in_space_and_time_is_exact() {
        let grid = Arc::new(Grid3::cube(12, 6.0, 2).unwrap());
        let dt = 0.25;
        let mut slab = SpacetimeSlab::from_static(grid.clone(), minkowski(&grid), 3, dt, 0.5);
        // gamma_xx = 1 + 0.1 x + 0.05 t, with matching dt field.
        for level in &mut slab.levels {
            let t = level.t;
            for i in 0..grid.len() {
                let p = grid.pos_of(i);
                level.gamma.set(sym4(1, 1), i, 1.0 + 0.1 * p[0] + 0.05 * t);
                level.dt_gamma.set(sym4(1, 1), i, 0.05);
            }
        }
        let s = slab.sample([0.93, -1.4, 2.2], 0.11).unwrap();
        let expect = 1.0 + 0.1 * 0.93 + 0.05 * 0.11;
        assert!((s.gamma[sym4(1, 1)] - expect).abs() < 1e-13);
        assert!((s.dgamma_x[sym4(1, 1)][0] - 0.1).abs() < 1e-12);
        assert!((s.dgamma_t[sym4(1, 1)] - 0.05).abs() < 1e-13);
    }

    #[test]
    fn outside_time_range_is_out_of_cone() {
        let grid = Arc::new(Grid3::cube(12, 6.0, 2).unwrap());
        let slab = SpacetimeSlab::from_static(grid.clone(), minkowski(&grid), 2, 0.25, 0.5);
        assert!(matches!(
            slab.sample([0.0, 0.0, 0.0], 0.49),
            Err(MxError::OutOfCone { .. })
        ));
        assert!(slab.sample([0.0, 0.0, 0.0], 0.2).is_ok());
    }

    #[test]
    fn nested_masks_check() {
        let grid = Arc::new(Grid3::cube(12, 6.0, 2).unwrap());
        let mut slab = SpacetimeSlab::from_static(grid.clone(), minkowski(&grid), 2, 0.25, 0.5);
        // Erode outward levels as the evolution would.
        for off in 1..=2usize {
            for sgn in [-1i64, 1] {
                let idx = (slab.zero as i64 + sgn * off as i64) as usize;
                let mask = slab.levels[idx].gamma.mask.erode(2 * off);
                slab.levels[idx].gamma = slab.levels[idx].gamma.clone().with_mask(mask.clone());
                slab.levels[idx].dt_gamma = slab.levels[idx].dt_gamma.clone().with_mask(mask);
            }
        }
        assert!(slab.check_mask_nesting(2));
        assert!(!slab.check_mask_nesting(3));
    }
}
