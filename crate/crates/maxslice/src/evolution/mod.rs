//! Harmonic-gauge boost evolution: Cauchy data from `(g, k)`, method-of-lines
//! integration of the reduced vacuum system on a cone-masked slab, and the
//! gauge, hyperbolicity and energy monitors.

mod cauchy;
mod energy;
mod monitor;
mod stepper;

pub use cauchy::{build_cauchy_data, CauchyData};
pub use energy::{energy_diagnostics, EnergyDiagnostics};
pub use monitor::{harmonic_monitor, hyperbolicity_report, HyperbolicityReport, MonitorReport};
pub use stepper::{evolve, EvolveConfig, EvolveResult, LevelDiagnostics};
