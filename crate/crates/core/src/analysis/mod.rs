//! Experiment procedures built from the integrators: contractivity sweeps,
//! the non-uniqueness study for GIE on S², flow contraction checks, global
//! error bounds and the Karcher mean.

mod bifurcation;
mod bounds;
mod karcher;
mod sweep;

pub use bifurcation::{bifurcation_diagram, enumerate_roots, q_residual, BifurcationDiagram};
pub use bounds::{
    estimate_local_constant, fit_order, flow_contraction_check, global_error_bound,
    global_error_study, ErrorBoundReport, FlowSample,
};
pub use karcher::{karcher_mean, log_euclidean_mean};
pub use sweep::{contractivity_sweep, linear_grid, log_grid, SweepRecord};
