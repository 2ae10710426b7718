//! Pointwise Lorentzian and graph geometry: 3+1 metric assembly, spacetime
//! Christoffels and Ricci, slice second fundamental forms, and the full
//! spacelike-graph apparatus (tilt, Lorentz factor, normal, co-frame,
//! induced metric and second form, mean curvature).

mod adm;
mod curvature;
mod graph;
mod linalg;
mod pointwise;

pub use adm::{
    adm_to_four, four_to_adm, lie_derivative_metric, slice_normal_check, slice_second_form,
    AdmMetric,
};
pub use curvature::{
    christoffel_fields, christoffel_first, eta_upper, harmonic_gauge_vector, quadratic_rhs,
    wave_rhs, Curvature, SpacetimePoint,
};
pub use graph::{
    graph_coframe, graph_mean_curvature, graph_metric, graph_quantities, graph_state,
    GraphBounds, GraphQuantities, GraphState,
};
pub use linalg::{det3_sym, inv3_sym, inv4, mat4_from_sym, min_eig3_sym, sym_from_mat4};
pub use pointwise::{pair4, AdmPoint, GraphFrame};
