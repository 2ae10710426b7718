use super::grid::Grid3;
use std::sync::Arc;

/// Validity mask over a grid. Inactive cells are excluded from every
/// operation and hold NaN in field storage.
#[derive(Debug, Clone)]
pub struct Mask {
    pub grid: Arc<Grid3>,
    pub active: Vec<bool>,
}

impl Mask {
    pub fn full(grid: Arc<Grid3>) -> Self {
        let len = grid.len();
        Mask { grid, active: vec![true; len] }
    }

    pub fn from_fn<F: Fn([f64; 3]) -> bool>(grid: Arc<Grid3>, f: F) -> Self {
        let active = (0..grid.len()).map(|i| f(grid.pos_of(i))).collect();
        Mask { grid, active }
    }

    #[inline]
    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Shrink the active region by `width` cells in every axis direction.
    pub fn erode(&self, width: usize) -> Mask {
        let mut cur = self.active.clone();
        let g = &self.grid;
        for _ in 0..width {
            let prev = cur.clone();
            for i in 0..g.n[0] {
                for j in 0..g.n[1] {
                    for k in 0..g.n[2] {
                        let idx = g.idx(i, j, k);
                        if !prev[idx] {
                            continue;
                        }
                        let at_edge = i == 0
                            || j == 0
                            || k == 0
                            || i == g.n[0] - 1
                            || j == g.n[1] - 1
                            || k == g.n[2] - 1;
                        let keep = !at_edge
                            && prev[g.idx(i - 1, j, k)]
                            && prev[g.idx(i + 1, j, k)]
                            && prev[g.idx(i, j - 1, k)]
                            && prev[g.idx(i, j + 1, k)]
                            && prev[g.idx(i, j, k - 1)]
                            && prev[g.idx(i, j, k + 1)];
                        cur[idx] = keep;
                    }
                }
            }
        }
        Mask { grid: self.grid.clone(), active: cur }
    }

    pub fn intersect(&self, other: &Mask) -> Mask {
        assert_eq!(self.grid.as_ref(), other.grid.as_ref(), "mask grids differ");
        let active = self
            .active
            .iter()
            .zip(&other.active)
            .map(|(&a, &b)| a && b)
            .collect();
        Mask { grid: self.grid.clone(), active }
    }

    /// True when every active cell of `self` is active in `other`.
    pub fn subset_of(&self, other: &Mask) -> bool {
        self.active
            .iter()
            .zip(&other.active)
            .all(|(&a, &b)| !a || b)
    }

    /// Whether the centered stencil of half-width `w` along every axis fits
    /// inside the active region at `idx`.
    #[inline]
    pub fn stencil_fits(&self, idx: usize, w: usize) -> bool {
        let [i, j, k] = self.grid.coords_of(idx);
        let n = self.grid.n;
        if i < w || j < w || k < w || i + w >= n[0] || j + w >= n[1] || k + w >= n[2] {
            return false;
        }
        for d in 1..=w {
            let s0 = self.grid.stride(0) * d;
            let s1 = self.grid.stride(1) * d;
            let s2 = d;
            if !(self.active[idx - s0]
                && self.active[idx + s0]
                && self.active[idx - s1]
                && self.active[idx + s1]
                && self.active[idx - s2]
                && self.active[idx + s2])
            {
                return false;
            }
        }
        true
    }
}

/// Multi-component field over a grid, component-major storage, z-fastest.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<Grid3>,
    pub ncomp: usize,
    /// `ncomp` stacked arrays of `grid.len()` values; NaN outside the mask.
    pub data: Vec<f64>,
    pub mask: Mask,
}

impl Field {
    pub fn zeros(grid: Arc<Grid3>, ncomp: usize) -> Self {
        let len = grid.len();
        Field {
            mask: Mask::full(grid.clone()),
            grid,
            ncomp,
            data: vec![0.0; ncomp * len],
        }
    }

    pub fn constant(grid: Arc<Grid3>, ncomp: usize, value: f64) -> Self {
        let mut f = Self::zeros(grid, ncomp);
        f.data.fill(value);
        f
    }

    pub fn with_mask(mut self, mask: Mask) -> Self {
        assert_eq!(self.grid.as_ref(), mask.grid.as_ref());
        let len = self.grid.len();
        for c in 0..self.ncomp {
            for i in 0..len {
                if !mask.active[i] {
                    self.data[c * len + i] = f64::NAN;
                }
            }
        }
        self.mask = mask;
        self
    }

    #[inline]
    pub fn comp(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    #[inline]
    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    #[inline]
    pub fn at(&self, c: usize, idx: usize) -> f64 {
        self.data[c * self.grid.len() + idx]
    }

    #[inline]
    pub fn set(&mut self, c: usize, idx: usize, v: f64) {
        let len = self.grid.len();
        self.data[c * len + idx] = v;
    }

    /// Fill from a function of position; the full grid becomes active.
    pub fn from_fn<F: Fn([f64; 3], usize) -> f64>(grid: Arc<Grid3>, ncomp: usize, f: F) -> Self {
        let len = grid.len();
        let mut out = Self::zeros(grid, ncomp);
        for c in 0..ncomp {
            for i in 0..len {
                let p = out.grid.pos_of(i);
                out.data[c * len + i] = f(p, c);
            }
        }
        out
    }

    /// Sup of |values| over the active region (all components).
    pub fn sup(&self) -> f64 {
        let len = self.grid.len();
        let mut m = 0.0f64;
        for c in 0..self.ncomp {
            for i in 0..len {
                if self.mask.active[i] {
                    let v = self.data[c * len + i].abs();
                    if v > m {
                        m = v;
                    }
                }
            }
        }
        m
    }

    /// Pointwise linear combination `self + s * other` on the common mask.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        assert_eq!(self.ncomp, other.ncomp);
        let mask = self.mask.intersect(&other.mask);
        let len = self.grid.len();
        let mut out = Field::zeros(self.grid.clone(), self.ncomp);
        for c in 0..self.ncomp {
            for i in 0..len {
                out.data[c * len + i] = if mask.active[i] {
                    self.data[c * len + i] + s * other.data[c * len + i]
                } else {
                    f64::NAN
                };
            }
        }
        out.mask = mask;
        out
    }
}

/// Scalar field: one component.
pub type ScalarField = Field;

/// Three-component vector field (`x`, `y`, `z`).
pub type VectorField3 = Field;

/// Symmetric 3-tensor field storing the upper triangle
/// `(xx, xy, xz, yy, yz, zz)`.
pub type SymTensorField3 = Field;

/// Symmetric 4-tensor field storing the upper triangle
/// `(tt, tx, ty, tz, xx, xy, xz, yy, yz, zz)`.
pub type SymTensorField4 = Field;

/// Component index into the symmetric 3x3 upper-triangle layout.
#[inline]
pub const fn sym3(i: usize, j: usize) -> usize {
    const MAP: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    MAP[i][j]
}

/// Component index into the symmetric 4x4 upper-triangle layout
/// (index 0 is time).
#[inline]
pub const fn sym4(mu: usize, nu: usize) -> usize {
    const MAP: [[usize; 4]; 4] = [
        [0, 1, 2, 3],
        [1, 4, 5, 6],
        [2, 5, 7, 8],
        [3, 6, 8, 9],
    ];
    MAP[mu][nu]
}
