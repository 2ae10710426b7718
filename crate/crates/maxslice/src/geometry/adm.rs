use super::linalg::{mat4_from_sym, sym_from_mat4};
use super::pointwise::{pair4, AdmPoint};
use crate::error::{MxError, Result};
use crate::fields::{
    derivative_masked, sym3, sym4, DiffScheme, Field, ScalarField, SpacetimeSlab, SymTensorField3,
    SymTensorField4, VectorField3,
};

/// Lapse, shift (contravariant) and spatial metric as fields.
#[derive(Debug, Clone)]
pub struct AdmMetric {
    pub alpha: ScalarField,
    pub beta: VectorField3,
    pub g: SymTensorField3,
}

impl AdmMetric {
    pub fn point(&self, idx: usize) -> AdmPoint {
        let mut g = [0.0; 6];
        for c in 0..6 {
            g[c] = self.g.at(c, idx);
        }
        AdmPoint {
            alpha: self.alpha.at(0, idx),
            beta: [self.beta.at(0, idx), self.beta.at(1, idx), self.beta.at(2, idx)],
            g,
        }
    }

    pub fn mask(&self) -> &crate::fields::Mask {
        &self.alpha.mask
    }

    /// Sampled invariant check: positive lapse, positive-definite spatial
    /// metric and spacelike slicing at every active cell.
    pub fn validate(&self) -> Result<()> {
        for idx in 0..self.alpha.grid.len() {
            if self.alpha.mask.active[idx] {
                self.point(idx).validate()?;
            }
        }
        Ok(())
    }
}

/// Assemble the covariant and contravariant spacetime metric fields from
/// lapse, shift and spatial metric.
pub fn adm_to_four(adm: &AdmMetric) -> Result<(SymTensorField4, SymTensorField4)> {
    let grid = adm.alpha.grid.clone();
    let len = grid.len();
    let mut lower = Field::zeros(grid.clone(), 10);
    let mut upper = Field::zeros(grid.clone(), 10);
    for idx in 0..len {
        if !adm.alpha.mask.active[idx] {
            continue;
        }
        let p = adm.point(idx);
        p.validate()?;
        let lo = p.four_lower();
        let up = p.four_upper();
        for c in 0..10 {
            lower.set(c, idx, lo[c]);
            upper.set(c, idx, up[c]);
        }
    }
    let mask = adm.alpha.mask.clone();
    Ok((lower.with_mask(mask.clone()), upper.with_mask(mask)))
}

/// Recover lapse, shift and spatial metric from `gamma^{mu nu}` fields.
pub fn four_to_adm(upper: &SymTensorField4) -> Result<AdmMetric> {
    let grid = upper.grid.clone();
    let len = grid.len();
    let mut alpha = Field::zeros(grid.clone(), 1);
    let mut beta = Field::zeros(grid.clone(), 3);
    let mut g = Field::zeros(grid.clone(), 6);
    for idx in 0..len {
        if !upper.mask.active[idx] {
            continue;
        }
        let mut g4 = [0.0; 10];
        for c in 0..10 {
            g4[c] = upper.at(c, idx);
        }
        let p = AdmPoint::from_four_upper(&g4)
            .map_err(|_| MxError::SlicingBroken { value: g4[sym4(0, 0)], index: idx })?;
        alpha.set(0, idx, p.alpha);
        for i in 0..3 {
            beta.set(i, idx, p.beta[i]);
        }
        for c in 0..6 {
            g.set(c, idx, p.g[c]);
        }
    }
    let mask = upper.mask.clone();
    Ok(AdmMetric {
        alpha: alpha.with_mask(mask.clone()),
        beta: beta.with_mask(mask.clone()),
        g: g.with_mask(mask),
    })
}

/// Max deviation of `<T, T>_gamma + 1` over the active region, where `T` is
/// the future unit normal of the constant-time slice.
pub fn slice_normal_check(adm: &AdmMetric) -> f64 {
    let mut worst = 0.0f64;
    for idx in 0..adm.alpha.grid.len() {
        if !adm.alpha.mask.active[idx] {
            continue;
        }
        let p = adm.point(idx);
        let t = p.slice_normal();
        let low = p.four_lower();
        worst = worst.max((pair4(&low, &t, &t) + 1.0).abs());
    }
    worst
}

/// Second fundamental form of the constant-time slice at a slab level:
/// `k0_ij = 1/(2 alpha) (dt g_ij - (L_beta g)_ij)`.
///
/// The time derivative comes from the stored state, the shift Lie
/// derivative from finite differences.
pub fn slice_second_form(slab: &SpacetimeSlab, level_offset: i64) -> Result<SymTensorField3> {
    let level = slab.level(level_offset)?;
    let adm = four_to_adm(&level.gamma)?;
    let grid = slab.grid.clone();
    let len = grid.len();

    // dt g_ij = spatial block of -gamma_{ma} gamma_{nb} dt gamma^{ab}.
    let mut dt_g = Field::zeros(grid.clone(), 6);
    for idx in 0..len {
        if !level.gamma.mask.active[idx] {
            continue;
        }
        let mut g4 = [0.0; 10];
        let mut dt4 = [0.0; 10];
        for c in 0..10 {
            g4[c] = level.gamma.at(c, idx);
            dt4[c] = level.dt_gamma.at(c, idx);
        }
        let pt = super::curvature::SpacetimePoint::new(g4, [dt4, [0.0; 10], [0.0; 10], [0.0; 10]]);
        let low = pt.lower()?;
        let gl = mat4_from_sym(&low);
        let du = mat4_from_sym(&dt4);
        let mut dlow = [[0.0; 4]; 4];
        for m in 0..4 {
            for n in 0..4 {
                let mut acc = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        acc -= gl[m][a] * gl[n][b] * du[a][b];
                    }
                }
                dlow[m][n] = acc;
            }
        }
        let dlow_sym = sym_from_mat4(&dlow);
        for i in 0..3 {
            for j in i..3 {
                dt_g.set(sym3(i, j), idx, dlow_sym[sym4(i + 1, j + 1)]);
            }
        }
    }
    let dt_g = dt_g.with_mask(level.gamma.mask.clone());

    let lie = lie_derivative_metric(&adm.g, &adm.beta, DiffScheme::Fourth);
    let mask = dt_g.mask.intersect(&lie.mask);
    let mut out = Field::zeros(grid.clone(), 6);
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        let a = adm.alpha.at(0, idx);
        for c in 0..6 {
            out.set(c, idx, 0.5 / a * (dt_g.at(c, idx) - lie.at(c, idx)));
        }
    }
    Ok(out.with_mask(mask))
}

/// Lie derivative of a symmetric 3-tensor along a vector field:
/// `(L_v g)_ij = v^k d_k g_ij + g_kj d_i v^k + g_ik d_j v^k`.
pub fn lie_derivative_metric(
    g: &SymTensorField3,
    v: &VectorField3,
    scheme: DiffScheme,
) -> SymTensorField3 {
    let grid = g.grid.clone();
    let len = grid.len();
    let dg: Vec<Field> = (0..3).map(|a| derivative_masked(g, a, 1, scheme)).collect();
    let dv: Vec<Field> = (0..3).map(|a| derivative_masked(v, a, 1, scheme)).collect();
    let mut mask = g.mask.intersect(&v.mask);
    for d in dg.iter().chain(dv.iter()) {
        mask = mask.intersect(&d.mask);
    }
    let mut out = Field::zeros(grid, 6);
    for idx in 0..len {
        if !mask.active[idx] {
            continue;
        }
        for i in 0..3 {
            for j in i..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += v.at(k, idx) * dg[k].at(sym3(i, j), idx);
                    acc += g.at(sym3(k, j), idx) * dv[i].at(k, idx);
                    acc += g.at(sym3(i, k), idx) * dv[j].at(k, idx);
                }
                out.set(sym3(i, j), idx, acc);
            }
        }
    }
    out.with_mask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid3;
    use std::sync::Arc;

    fn flat_adm(grid: &Arc<Grid3>) -> AdmMetric {
        AdmMetric {
            alpha: Field::constant(grid.clone(), 1, 1.0),
            beta: Field::zeros(grid.clone(), 3),
            g: Field::from_fn(grid.clone(), 6, |_, c| match c {
                0 | 3 | 5 => 1.0,
                _ => 0.0,
            }),
        }
    }

    #[test]
    fn minkowski_assembly() {
        let grid = Arc::new(Grid3::cube(10, 5.0, 2).unwrap());
        let adm = flat_adm(&grid);
        let (lower, upper) = adm_to_four(&adm).unwrap();
        for idx in [0usize, 57, 999] {
            assert_eq!(lower.at(sym4(0, 0), idx), -1.0);
            assert_eq!(upper.at(sym4(0, 0), idx), -1.0);
            assert_eq!(lower.at(sym4(1, 1), idx), 1.0);
        }
        assert!(slice_normal_check(&adm) < 1e-14);
    }

    #[test]
    fn round_trip_and_product_identity_on_random_samples() {
        let grid = Arc::new(Grid3::cube(8, 4.0, 2).unwrap());
        let mut state = 42u64;
        let mut rand = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut adm = flat_adm(&grid);
        for idx in 0..grid.len() {
            adm.alpha.set(0, idx, 1.0 + 0.3 * rand());
            for i in 0..3 {
                adm.beta.set(i, idx, 0.15 * rand());
            }
            for c in 0..6 {
                let base = if c == 0 || c == 3 || c == 5 { 1.0 } else { 0.0 };
                adm.g.set(c, idx, base + 0.2 * rand());
            }
        }
        let (lower, upper) = adm_to_four(&adm).unwrap();
        // gamma^{ms} gamma_{sn} = delta within 1e-12 (direct inversion oracle).
        for idx in 0..grid.len() {
            let mut lo = [0.0; 10];
            let mut up = [0.0; 10];
            for c in 0..10 {
                lo[c] = lower.at(c, idx);
                up[c] = upper.at(c, idx);
            }
            let lo_m = mat4_from_sym(&lo);
            let up_m = mat4_from_sym(&up);
            for m in 0..4 {
                for n in 0..4 {
                    let mut acc = 0.0;
                    for s in 0..4 {
                        acc += up_m[m][s] * lo_m[s][n];
                    }
                    let expect = if m == n { 1.0 } else { 0.0 };
                    assert!((acc - expect).abs() < 1e-12, "product at {idx}: {acc}");
                }
            }
        }
        // Round trip four_to_adm(adm_to_four) = identity within 1e-12.
        let back = four_to_adm(&upper).unwrap();
        for idx in 0..grid.len() {
            assert!((back.alpha.at(0, idx) - adm.alpha.at(0, idx)).abs() < 1e-12);
            for i in 0..3 {
                assert!((back.beta.at(i, idx) - adm.beta.at(i, idx)).abs() < 1e-12);
            }
            for c in 0..6 {
                assert!((back.g.at(c, idx) - adm.g.at(c, idx)).abs() < 1e-12);
            }
        }
        // Unit normal pairing.
        assert!(slice_normal_check(&adm) < 1e-12);
    }

    #[test]
    fn broken_slicing_detected() {
        let grid = Arc::new(Grid3::cube(8, 4.0, 2).unwrap());
        let adm = flat_adm(&grid);
        let (_, mut upper) = adm_to_four(&adm).unwrap();
        upper.set(sym4(0, 0), 100, 0.0);
        assert!(matches!(
            four_to_adm(&upper),
            Err(MxError::SlicingBroken { index: 100, .. })
        ));
    }
}
