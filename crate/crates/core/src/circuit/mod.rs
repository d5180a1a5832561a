//! The queue circuit: slice loop, capacity oracle, amplification around the
//! mean queue length, measurement and rejection filtering.
//!
//! Two engines evolve the queue register. The exact engine runs the gates on
//! a statevector; the traced engine applies the induced birth–death matrix to
//! a probability vector. Both trace out the ancillas after every slice.

mod census;
mod grover;
mod params;
mod rejection;
mod run;
mod slices;

pub use census::{gate_census, GateCensus};
pub use grover::{grover_amplify, grover_iterate_matrix, grover_iterations, marked_set, marked_set_for};
pub use params::{CapMode, CenterRule, Engine, EpsilonRule, QueueParams, Schedule, ServiceMode};
pub use rejection::{rejection_filter, rejection_filter_counts};
pub use run::{qmg1_run, rejection_target, SimulationResult};
pub use slices::{
    birth_death_stationary, exact_slice, exact_slice_stages, residual_hazards, residual_slice_exact,
    residual_slice_traced, run_slices, run_slices_exact, run_slices_residual, run_slices_residual_traced,
    run_slices_traced, slice_probabilities, slice_transition_matrix, traced_fixed_point, traced_step,
    ExactLayout, ResidualLayout, SliceStages,
};
