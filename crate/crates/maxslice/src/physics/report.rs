//! Serializable invariant report.

use super::invariants::{BoundaryIntegral, ValueWithError, Verdict};
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = "maxslice-report/1";

/// Conserved-quantity report for one data set (or a before/after pair when
/// produced by the pipeline).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantReport {
    pub schema: String,
    pub label: String,
    pub mass: BoundaryIntegral,
    pub j_flux: BoundaryIntegral,
    /// Komar evaluation (absent when no slab is available).
    pub j_komar: Option<f64>,
    /// Sup of |tr_g k| over the valid region.
    pub trace_sup: f64,
    /// Weighted trace norm and its truncation shell.
    pub trace_norm: (f64, f64),
    /// Constraint residual sups (hamiltonian, momentum).
    pub constraint_sup: (f64, f64),
    pub axisymmetry_residual: f64,
    pub verdict: Verdict,
    pub margin: f64,
    pub uncertainty: f64,
    pub seed: u64,
}

impl InvariantReport {
    pub fn mass_with_error(&self) -> ValueWithError {
        self.mass.with_error()
    }

    pub fn check_schema(schema: &str) -> crate::error::Result<()> {
        if schema != REPORT_SCHEMA {
            return Err(crate::error::MxError::ReportVersion(schema.to_string()));
        }
        Ok(())
    }
}
