//! Constraint residuals, trace diagnostics, ADM mass, angular momentum in
//! flux and Komar form, axisymmetry residuals, and the inequality verdict.

mod constraints;
mod invariants;
mod probes;
mod report;
mod symmetry;

pub use constraints::{
    hamiltonian_residual, momentum_residual, ricci_scalar_field, spatial_christoffels,
    trace_field, trace_norm, InitialData,
};
pub use invariants::{
    adm_mass, angular_momentum_komar, angular_momentum_pi, axial_killing_field,
    inequality_verdict, BoundaryIntegral, ValueWithError, Verdict,
};
pub use probes::{probe_points, probe_sup, sup_outside};
pub use report::{InvariantReport, REPORT_SCHEMA};
pub use symmetry::{axisymmetry_residual_scalar, axisymmetry_residual_tensor};
