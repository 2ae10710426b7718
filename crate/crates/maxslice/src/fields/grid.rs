use crate::error::{MxError, Result};
use serde::{Deserialize, Serialize};

/// Uniform Cartesian grid on one Euclidean end.
///
/// Cell centers are placed symmetrically about the coordinate origin, so the
/// symmetry axis used for axisymmetric data passes through the grid. The
/// `margin` records the stencil half-width the grid is expected to support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub n: [usize; 3],
    pub h: f64,
    pub origin: [f64; 3],
    pub margin: usize,
}

impl Grid3 {
    /// Symmetric grid with `n` cells per axis covering `[-half_width, half_width]`.
    pub fn symmetric(n: [usize; 3], half_width: f64, margin: usize) -> Result<Self> {
        if half_width <= 0.0 {
            return Err(MxError::Config("grid half-width must be positive".into()));
        }
        let h = 2.0 * half_width / n[0] as f64;
        let origin = [
            -h * (n[0] as f64 - 1.0) / 2.0,
            -h * (n[1] as f64 - 1.0) / 2.0,
            -h * (n[2] as f64 - 1.0) / 2.0,
        ];
        Self::new(n, h, origin, margin)
    }

    /// Cubic symmetric grid: `n^3` cells covering `[-half_width, half_width]^3`.
    pub fn cube(n: usize, half_width: f64, margin: usize) -> Result<Self> {
        Self::symmetric([n, n, n], half_width, margin)
    }

    pub fn new(n: [usize; 3], h: f64, origin: [f64; 3], margin: usize) -> Result<Self> {
        if h <= 0.0 {
            return Err(MxError::Config(format!("grid spacing h = {h} must be > 0")));
        }
        for (axis, &na) in n.iter().enumerate() {
            if na < 2 * margin + 4 {
                return Err(MxError::FieldTooSmall {
                    axis,
                    n: na,
                    need: 2 * margin + 4,
                });
            }
        }
        // Cell centers must be symmetric about the coordinate origin.
        for axis in 0..3 {
            let expected = -h * (n[axis] as f64 - 1.0) / 2.0;
            if (origin[axis] - expected).abs() > 1e-12 * h.max(1.0) {
                return Err(MxError::Config(format!(
                    "grid origin on axis {axis} is {} but symmetry requires {expected}",
                    origin[axis]
                )));
            }
        }
        Ok(Grid3 { n, h, origin, margin })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, z-fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    #[inline]
    pub fn coords_of(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n[2];
        let j = (idx / self.n[2]) % self.n[1];
        let i = idx / (self.n[1] * self.n[2]);
        [i, j, k]
    }

    /// Physical position of cell center `(i, j, k)`.
    #[inline]
    pub fn pos(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + self.h * i as f64,
            self.origin[1] + self.h * j as f64,
            self.origin[2] + self.h * k as f64,
        ]
    }

    #[inline]
    pub fn pos_of(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.coords_of(idx);
        self.pos(i, j, k)
    }

    /// Stride of a unit move along `axis` in linear-index space.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n[1] * self.n[2],
            1 => self.n[2],
            _ => 1,
        }
    }

    /// Euclidean radius of the cell center.
    #[inline]
    pub fn radius_of(&self, idx: usize) -> f64 {
        let p = self.pos_of(idx);
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }

    /// Largest |coordinate| covered by cell centers (same on all axes for cubes).
    pub fn half_extent(&self) -> f64 {
        (0..3)
            .map(|a| (self.origin[a] + self.h * (self.n[a] as f64 - 1.0)).abs().max(self.origin[a].abs()))
            .fold(0.0, f64::max)
    }

    /// Fractional grid coordinates of a physical point.
    #[inline]
    pub fn frac_coords(&self, x: [f64; 3]) -> [f64; 3] {
        [
            (x[0] - self.origin[0]) / self.h,
            (x[1] - self.origin[1]) / self.h,
            (x[2] - self.origin[2]) / self.h,
        ]
    }
}
