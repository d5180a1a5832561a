//! Time-slice evolution of the queue register.

use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::qcore::{
    apply_1q, marginal_weights, modular_shift, multiplexed_ry, phase_flip, reflect_register, ry_gate,
    theta_for_prob, toggle_if, ProbVector, Register, StateVector, QUBIT_CAP,
};

use super::params::{qubits_for, CapMode, Engine, QueueParams, ServiceMode};

/// `(p_λ, p_μ) = (1 − e^{−λΔt}, F(Δt))`.
pub fn slice_probabilities(params: &QueueParams) -> (f64, f64) {
    let dt = params.dt();
    (1.0 - (-params.lambda * dt).exp(), params.service.cdf(dt))
}

fn up_down(p_arr: f64, p_srv: f64) -> (f64, f64) {
    (p_arr * (1.0 - p_srv), (1.0 - p_arr) * p_srv)
}

/// Column-stochastic slice matrix, indexed `[to][from]`.
pub fn slice_transition_matrix(params: &QueueParams) -> Vec<Vec<f64>> {
    let (pa, ps) = slice_probabilities(params);
    transition_matrix(params.k, pa, ps)
}

pub fn transition_matrix(k: usize, p_arr: f64, p_srv: f64) -> Vec<Vec<f64>> {
    let (up, down) = up_down(p_arr, p_srv);
    let mut m = vec![vec![0.0; k + 1]; k + 1];
    for from in 0..=k {
        let mut stay = 1.0;
        if from < k {
            m[from + 1][from] = up;
            stay -= up;
        }
        if from > 0 {
            m[from - 1][from] = down;
            stay -= down;
        }
        m[from][from] = stay;
    }
    m
}

/// One slice of the birth–death chain applied to `p`.
pub fn traced_step(p: &[f64], up: f64, down: f64) -> Vec<f64> {
    let k = p.len() - 1;
    (0..=k)
        .map(|n| {
            let stay = 1.0 - if n < k { up } else { 0.0 } - if n > 0 { down } else { 0.0 };
            let mut v = stay * p[n];
            if n > 0 {
                v += up * p[n - 1];
            }
            if n < k {
                v += down * p[n + 1];
            }
            v
        })
        .collect()
}

/// `T` traced slices from the uniform start.
pub fn run_slices_traced(params: &QueueParams) -> Result<ProbVector> {
    let (pa, ps) = slice_probabilities(params);
    let (up, down) = up_down(pa, ps);
    let mut p = ProbVector::uniform(params.k + 1).into_vec();
    for _ in 0..params.t_slices {
        p = traced_step(&p, up, down);
    }
    ProbVector::normalized(p)
}

/// Iterates the traced chain until successive vectors differ by less than
/// `tol` in L1.
pub fn traced_fixed_point(params: &QueueParams, tol: f64, max_iter: usize) -> Result<ProbVector> {
    let (pa, ps) = slice_probabilities(params);
    let (up, down) = up_down(pa, ps);
    let mut p = ProbVector::uniform(params.k + 1).into_vec();
    for _ in 0..max_iter {
        let next = traced_step(&p, up, down);
        let diff: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if diff < tol {
            return ProbVector::normalized(p);
        }
    }
    Err(Error::InvalidParameter(format!("traced chain did not settle within {max_iter} slices")))
}

/// Stationary law of the chain with constant `up` and `down` rates.
pub fn birth_death_stationary(k: usize, up: f64, down: f64) -> ProbVector {
    if down <= 0.0 {
        return ProbVector::point_mass(k + 1, if up > 0.0 { k } else { 0 });
    }
    let ratio = up / down;
    crate::analytic::mm1k_steady_state(ratio, k)
}

/// Qubit layout of the per-slice exact engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLayout {
    pub k: usize,
    pub q: usize,
}

impl ExactLayout {
    pub fn new(k: usize) -> Self {
        Self { k, q: qubits_for(k) }
    }
    pub fn queue(&self) -> Register {
        Register::new(0, self.q)
    }
    pub fn a_arrival(&self) -> usize {
        self.q
    }
    pub fn a_service(&self) -> usize {
        self.q + 1
    }
    /// Comparator ancilla that records whether a guarded shift fired.
    pub fn flag(&self) -> usize {
        self.q + 2
    }
    pub fn n_qubits(&self) -> usize {
        self.q + 3
    }
    /// Basis index of `|n; a_a a_s f⟩`.
    pub fn index(&self, n: usize, aa: usize, as_: usize, f: usize) -> usize {
        n | aa << self.a_arrival() | as_ << self.a_service() | f << self.flag()
    }
}

/// Snapshots of one exact slice.
#[derive(Debug, Clone)]
pub struct SliceStages {
    pub layout: ExactLayout,
    pub initial: StateVector,
    pub after_arrival: StateVector,
    pub after_service: StateVector,
    pub after_update: StateVector,
    pub after_cap: StateVector,
}

fn legal_axis(q: usize, k: usize) -> Vec<f64> {
    let a = 1.0 / ((k + 1) as f64).sqrt();
    (0..1usize << q).map(|n| if n <= k { a } else { 0.0 }).collect()
}

fn apply_cap(state: &mut StateVector, queue: Register, k: usize, mode: CapMode) -> Result<()> {
    match mode {
        CapMode::SignFlip => phase_flip(state, queue, |n| n > k),
        CapMode::TwoReflection => {
            // R_K = 1 − 2|ψ₀⟩⟨ψ₀| is the negated register reflection
            reflect_register(state, queue, &legal_axis(queue.width, k))?;
            for a in state.amplitudes_mut() {
                *a = -*a;
            }
            phase_flip(state, queue, |n| n <= k)
        }
    }
}

/// Guarded INC then guarded DEC on `queue`, sharing one comparator flag.
fn guarded_update(state: &mut StateVector, queue: Register, k: usize, aa: usize, as_: usize, f: usize) -> Result<()> {
    toggle_if(state, f, &[(aa, true), (as_, false)], queue, |n| n < k)?;
    modular_shift(state, queue, 1, &[(f, true), (as_, false)])?;
    toggle_if(state, f, &[(aa, false), (as_, true)], queue, |n| n > 0)?;
    modular_shift(state, queue, -1, &[(f, true), (as_, true)])
}

/// Runs one exact slice from amplitudes `√p` and keeps every intermediate
/// state.
pub fn exact_slice_stages(k: usize, p: &ProbVector, p_arr: f64, p_srv: f64, cap: CapMode) -> Result<SliceStages> {
    let lay = ExactLayout::new(k);
    if p.len() != k + 1 {
        return Err(Error::DimensionMismatch { expected: k + 1, got: p.len() });
    }
    let initial = StateVector::from_probs(lay.n_qubits(), p)?;
    let mut s = initial.clone();
    apply_1q(&mut s, &ry_gate(theta_for_prob(p_arr)?), lay.a_arrival(), &[])?;
    let after_arrival = s.clone();
    apply_1q(&mut s, &ry_gate(theta_for_prob(p_srv)?), lay.a_service(), &[])?;
    let after_service = s.clone();
    guarded_update(&mut s, lay.queue(), k, lay.a_arrival(), lay.a_service(), lay.flag())?;
    let after_update = s.clone();
    apply_cap(&mut s, lay.queue(), k, cap)?;
    Ok(SliceStages { layout: lay, initial, after_arrival, after_service, after_update, after_cap: s })
}

fn legal_marginal(weights: &[f64], k: usize) -> Result<ProbVector> {
    ProbVector::normalized(weights[..=k].to_vec())
}

/// Queue marginal after one exact slice.
pub fn exact_slice(k: usize, p: &ProbVector, p_arr: f64, p_srv: f64, cap: CapMode) -> Result<ProbVector> {
    let st = exact_slice_stages(k, p, p_arr, p_srv, cap)?;
    legal_marginal(&marginal_weights(&st.after_cap, st.layout.queue()), k)
}

fn check_exact_cap(n: usize) -> Result<()> {
    if n > QUBIT_CAP {
        Err(Error::QubitCap { requested: n, cap: QUBIT_CAP })
    } else {
        Ok(())
    }
}

/// `T` exact slices from the uniform start, re-embedding `√p` after each.
pub fn run_slices_exact(params: &QueueParams) -> Result<ProbVector> {
    check_exact_cap(ExactLayout::new(params.k).n_qubits())?;
    let (pa, ps) = slice_probabilities(params);
    let mut p = ProbVector::uniform(params.k + 1);
    for _ in 0..params.t_slices {
        p = exact_slice(params.k, &p, pa, ps, params.cap_mode)?;
    }
    Ok(p)
}

/// Qubit layout of the residual-hazard engine: queue, service-age register,
/// service ancilla, arrival ancilla, queue comparator flag, age flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualLayout {
    pub k: usize,
    pub q: usize,
    pub m: usize,
}

impl ResidualLayout {
    pub fn new(k: usize) -> Self {
        let q = qubits_for(k);
        Self { k, q, m: q }
    }
    pub fn queue(&self) -> Register {
        Register::new(0, self.q)
    }
    pub fn age(&self) -> Register {
        Register::new(self.q, self.m)
    }
    pub fn a_service(&self) -> usize {
        self.q + self.m
    }
    pub fn a_arrival(&self) -> usize {
        self.q + self.m + 1
    }
    pub fn flag(&self) -> usize {
        self.q + self.m + 2
    }
    pub fn age_flag(&self) -> usize {
        self.q + self.m + 3
    }
    pub fn n_qubits(&self) -> usize {
        self.q + self.m + 4
    }
    pub fn bins(&self) -> usize {
        1 << self.m
    }
    /// Position of `(n, r)` in a joint probability vector.
    pub fn joint_index(&self, n: usize, r: usize) -> usize {
        r * (self.k + 1) + n
    }
    pub fn joint_len(&self) -> usize {
        (self.k + 1) * self.bins()
    }
}

/// Completion probability per age bin; the last bin holds every older age
/// and uses a geometric tail with the law's mean residual life.
pub fn residual_hazards(service: &ServiceDistribution, dt: f64, bins: usize) -> Vec<f64> {
    (0..bins)
        .map(|r| if r + 1 < bins { service.hazard_bin(r, dt) } else { service.tail_hazard(r, dt) })
        .collect()
}

/// One exact residual-hazard slice on a joint `(n, r)` distribution.
pub fn residual_slice_exact(k: usize, joint: &[f64], p_arr: f64, hazards: &[f64], cap: CapMode) -> Result<Vec<f64>> {
    let lay = ResidualLayout::new(k);
    check_exact_cap(lay.n_qubits())?;
    if joint.len() != lay.joint_len() {
        return Err(Error::DimensionMismatch { expected: lay.joint_len(), got: joint.len() });
    }
    if hazards.len() != lay.bins() {
        return Err(Error::DimensionMismatch { expected: lay.bins(), got: hazards.len() });
    }
    let mut amps = vec![0.0; 1 << (lay.q + lay.m)];
    for r in 0..lay.bins() {
        for n in 0..=k {
            amps[n | r << lay.q] = joint[lay.joint_index(n, r)].sqrt();
        }
    }
    let mut s = StateVector::from_real(lay.n_qubits(), &amps)?;
    let angles: Vec<f64> = hazards.iter().map(|&h| theta_for_prob(h)).collect::<Result<_>>()?;

    apply_1q(&mut s, &ry_gate(theta_for_prob(p_arr)?), lay.a_arrival(), &[])?;
    multiplexed_ry(&mut s, lay.age(), lay.a_service(), &angles)?;

    // age advances for a customer still in service
    let (q, top) = (lay.q, lay.bins() - 1);
    let joint_reg = Register::new(0, lay.q + lay.m);
    let qmask = (1 << q) - 1;
    toggle_if(&mut s, lay.age_flag(), &[(lay.a_service(), false)], joint_reg, |v| v & qmask > 0 && v >> q < top)?;
    modular_shift(&mut s, lay.age(), 1, &[(lay.age_flag(), true)])?;

    guarded_update(&mut s, lay.queue(), k, lay.a_arrival(), lay.a_service(), lay.flag())?;
    apply_cap(&mut s, lay.queue(), k, cap)?;

    // trace out everything but (n, r, a_s); a completed service restarts the age
    let w = marginal_weights(&s, Register::new(0, lay.q + lay.m + 1));
    let mut out = vec![0.0; lay.joint_len()];
    for (v, &x) in w.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let n = v & qmask;
        let r = (v >> q) & top;
        let done = v >> (q + lay.m) & 1 == 1;
        if n > k {
            continue;
        }
        out[lay.joint_index(n, if done { 0 } else { r })] += x;
    }
    let total: f64 = out.iter().sum();
    Ok(out.into_iter().map(|x| x / total).collect())
}

/// Classical counterpart of [`residual_slice_exact`].
pub fn residual_slice_traced(k: usize, joint: &[f64], p_arr: f64, hazards: &[f64]) -> Vec<f64> {
    let lay = ResidualLayout::new(k);
    let top = lay.bins() - 1;
    let mut out = vec![0.0; lay.joint_len()];
    for r in 0..lay.bins() {
        for n in 0..=k {
            let w = joint[lay.joint_index(n, r)];
            if w == 0.0 {
                continue;
            }
            let h = hazards[r];
            let aged = if n > 0 && r < top { r + 1 } else { r };
            // arrival only
            let up = if n < k { n + 1 } else { n };
            out[lay.joint_index(up, aged)] += w * p_arr * (1.0 - h);
            // nothing
            out[lay.joint_index(n, aged)] += w * (1.0 - p_arr) * (1.0 - h);
            // arrival and completion
            out[lay.joint_index(n, 0)] += w * p_arr * h;
            // completion only
            let down = n.saturating_sub(1);
            out[lay.joint_index(down, 0)] += w * (1.0 - p_arr) * h;
        }
    }
    out
}

fn residual_start(lay: &ResidualLayout) -> Vec<f64> {
    let mut joint = vec![0.0; lay.joint_len()];
    for n in 0..=lay.k {
        joint[lay.joint_index(n, 0)] = 1.0 / (lay.k + 1) as f64;
    }
    joint
}

fn queue_of_joint(lay: &ResidualLayout, joint: &[f64]) -> Result<ProbVector> {
    let mut p = vec![0.0; lay.k + 1];
    for r in 0..lay.bins() {
        for (n, slot) in p.iter_mut().enumerate() {
            *slot += joint[lay.joint_index(n, r)];
        }
    }
    ProbVector::normalized(p)
}

/// `T` residual-hazard slices on the exact engine.
pub fn run_slices_residual(params: &QueueParams) -> Result<ProbVector> {
    let lay = ResidualLayout::new(params.k);
    check_exact_cap(lay.n_qubits())?;
    let (pa, _) = slice_probabilities(params);
    let hz = residual_hazards(&params.service, params.dt(), lay.bins());
    let mut joint = residual_start(&lay);
    for _ in 0..params.t_slices {
        joint = residual_slice_exact(params.k, &joint, pa, &hz, params.cap_mode)?;
    }
    queue_of_joint(&lay, &joint)
}

/// `T` residual-hazard slices on the classical joint chain.
pub fn run_slices_residual_traced(params: &QueueParams) -> Result<ProbVector> {
    let lay = ResidualLayout::new(params.k);
    let (pa, _) = slice_probabilities(params);
    let hz = residual_hazards(&params.service, params.dt(), lay.bins());
    let mut joint = residual_start(&lay);
    for _ in 0..params.t_slices {
        joint = residual_slice_traced(params.k, &joint, pa, &hz);
    }
    queue_of_joint(&lay, &joint)
}

/// Dispatches on the engine and service mode.
pub fn run_slices(params: &QueueParams) -> Result<ProbVector> {
    match (params.service_mode, params.engine()) {
        (ServiceMode::PerSliceCdf, Engine::Exact) => run_slices_exact(params),
        (ServiceMode::PerSliceCdf, Engine::Traced) => {
            if params.cap_mode == CapMode::TwoReflection {
                return Err(Error::Unsupported("the traced engine has no two-reflection capacity oracle".into()));
            }
            run_slices_traced(params)
        }
        (ServiceMode::ResidualHazard, Engine::Exact) => run_slices_residual(params),
        (ServiceMode::ResidualHazard, Engine::Traced) => run_slices_residual_traced(params),
    }
}
