//! The perturbation solver: evaluate the graph mean curvature, assemble the
//! linearization `L0 = Lap_g - |k|^2_g` at the undeformed slice, solve it on
//! the complement of its kernel, and run the frozen-derivative contraction
//! iteration to a maximal graph.

mod operator;
mod solver;

pub use operator::{
    assemble_l0, smallest_projected_eigenvalue, solve_l0, LinearOperator, SolveStats,
};
pub use solver::{
    evaluate_h, ift_solve, induced_data, linearization_check, scalar_model_solve, IftLog,
    IftStep, LinearizationReport, SolverConfig,
};
