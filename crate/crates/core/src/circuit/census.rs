//! Logical gate counts of the queue circuit.

use serde::Serialize;

use super::grover::{grover_iterations, marked_set};
use super::params::{CapMode, QueueParams, ServiceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct GateCensus {
    /// Uncontrolled single-qubit ancilla rotations.
    pub rotations_1q: u64,
    pub multiplexed_rotations: u64,
    /// Comparator-controlled flag toggles guarding the shifts.
    pub comparator_flags: u64,
    pub controlled_shifts: u64,
    pub phase_flips: u64,
    pub reflections: u64,
    pub slice_gates: u64,
    pub cap_gates: u64,
    pub diffusion_gates: u64,
    pub total: u64,
    #[serde(rename = "R_used")]
    pub r_used: u64,
}

/// Counts the gates [`qmg1_run`](super::qmg1_run) applies for `params`.
pub fn gate_census(params: &QueueParams) -> GateCensus {
    let t = params.t_slices as u64;
    let (rot, mux, cmp, shifts) = match params.service_mode {
        ServiceMode::PerSliceCdf => (2, 0, 2, 2),
        ServiceMode::ResidualHazard => (1, 1, 3, 3),
    };
    let (cap_flips, cap_refl) = match params.cap_mode {
        CapMode::SignFlip => (1, 0),
        CapMode::TwoReflection => (1, 1),
    };
    let m = marked_set(params);
    let r = grover_iterations(params.k, m.len(), params.schedule) as u64;

    let slice_gates = t * (rot + mux + cmp + shifts);
    let cap_gates = t * (cap_flips + cap_refl);
    let diffusion_gates = 2 * r;
    GateCensus {
        rotations_1q: t * rot,
        multiplexed_rotations: t * mux,
        comparator_flags: t * cmp,
        controlled_shifts: t * shifts,
        phase_flips: t * cap_flips + r,
        reflections: t * cap_refl + r,
        slice_gates,
        cap_gates,
        diffusion_gates,
        total: slice_gates + cap_gates + diffusion_gates,
        r_used: r,
    }
}
