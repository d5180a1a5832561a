//! Dense statevector engine.
//!
//! Qubit `i` is bit `i` of the basis index (little-endian). Registers are
//! contiguous qubit ranges. All gates act in place.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the exact engine will allocate.
pub const QUBIT_CAP: usize = 24;

pub type Gate2 = [[Complex64; 2]; 2];

/// A control qubit and the value it must hold for the gate to fire.
pub type Control = (usize, bool);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Register {
    pub start: usize,
    pub width: usize,
}

impl Register {
    pub const fn new(start: usize, width: usize) -> Self {
        Self { start, width }
    }

    pub fn end(&self) -> usize {
        self.start + self.width
    }

    pub fn size(&self) -> usize {
        1 << self.width
    }

    pub fn contains(&self, q: usize) -> bool {
        (self.start..self.end()).contains(&q)
    }

    fn mask(&self) -> usize {
        (self.size() - 1) << self.start
    }

    /// Register value encoded in basis index `index`.
    #[inline]
    pub fn value(&self, index: usize) -> usize {
        (index >> self.start) & (self.size() - 1)
    }

    #[inline]
    pub fn with_value(&self, index: usize, v: usize) -> usize {
        (index & !self.mask()) | ((v & (self.size() - 1)) << self.start)
    }
}

/// Nonnegative distribution over `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Accepts `probs` if every entry is nonnegative and the sum is 1 within
    /// 1e-10.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty probability vector".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter(format!("probabilities must be finite and >= 0: {probs:?}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {s}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s.is_finite() && s > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be nonnegative with positive sum".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / s).collect()))
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        Self::normalized(counts.iter().map(|&c| c as f64).collect())
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut v = vec![0.0; len];
        v[at] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ n·p[n]`.
    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_cap(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, got: index });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_cap(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << n_qubits, got: amps.len() });
        }
        Ok(Self { n_qubits, amps })
    }

    /// Real amplitudes, zero-padded to `2^n_qubits`.
    pub fn from_real(n_qubits: usize, values: &[f64]) -> Result<Self> {
        check_cap(n_qubits)?;
        let dim = 1usize << n_qubits;
        if values.len() > dim {
            return Err(Error::DimensionMismatch { expected: dim, got: values.len() });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for (a, &v) in amps.iter_mut().zip(values) {
            *a = Complex64::new(v, 0.0);
        }
        Ok(Self { n_qubits, amps })
    }

    /// Amplitudes `√p[n]` on the low qubits, everything else `|0⟩`.
    pub fn from_probs(n_qubits: usize, p: &ProbVector) -> Result<Self> {
        let roots: Vec<f64> = p.as_slice().iter().map(|x| x.sqrt()).collect();
        Self::from_real(n_qubits, &roots)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(Error::IndexOutOfRange { index: q, n_qubits: self.n_qubits })
        } else {
            Ok(())
        }
    }

    fn check_register(&self, reg: Register) -> Result<()> {
        if reg.width == 0 {
            return Err(Error::InvalidParameter("register width must be >= 1".into()));
        }
        self.check_qubit(reg.end() - 1)
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > QUBIT_CAP {
        Err(Error::QubitCap { requested: n, cap: QUBIT_CAP })
    } else {
        Ok(())
    }
}

/// Bit masks `(mask, want)` such that a basis index matches the controls iff
/// `index & mask == want`.
fn control_masks(state: &StateVector, controls: &[Control]) -> Result<(usize, usize)> {
    let (mut mask, mut want) = (0usize, 0usize);
    for &(q, pol) in controls {
        state.check_qubit(q)?;
        if mask & (1 << q) != 0 {
            return Err(Error::Overlap(q));
        }
        mask |= 1 << q;
        if pol {
            want |= 1 << q;
        }
    }
    Ok((mask, want))
}

/// `θ = 2·arcsin √p`, so that `R_y(θ)|0⟩` has `|1⟩`-probability `p`.
pub fn theta_for_prob(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0,1]")));
    }
    Ok(2.0 * p.sqrt().asin())
}

pub fn ry_matrix(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [[c, -s], [s, c]]
}

pub fn ry_gate(theta: f64) -> Gate2 {
    let m = ry_matrix(theta);
    m.map(|row| row.map(|x| Complex64::new(x, 0.0)))
}

pub fn hadamard() -> Gate2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn pauli_x() -> Gate2 {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[z, o], [o, z]]
}

/// Applies `gate` to `target` on every basis pair whose controls match.
pub fn apply_1q(state: &mut StateVector, gate: &Gate2, target: usize, controls: &[Control]) -> Result<()> {
    state.check_qubit(target)?;
    let (mask, want) = control_masks(state, controls)?;
    if mask & (1 << target) != 0 {
        return Err(Error::Overlap(target));
    }
    let bit = 1usize << target;
    for i in 0..state.dim() {
        if i & bit != 0 || i & mask != want {
            continue;
        }
        let j = i | bit;
        let (a0, a1) = (state.amps[i], state.amps[j]);
        state.amps[i] = gate[0][0] * a0 + gate[0][1] * a1;
        state.amps[j] = gate[1][0] * a0 + gate[1][1] * a1;
    }
    Ok(())
}

/// `|n⟩ → |(n + delta) mod 2^w⟩` on `reg` where the controls match.
pub fn modular_shift(state: &mut StateVector, reg: Register, delta: i64, controls: &[Control]) -> Result<()> {
    state.check_register(reg)?;
    let (mask, want) = control_masks(state, controls)?;
    if let Some(&(q, _)) = controls.iter().find(|(q, _)| reg.contains(*q)) {
        return Err(Error::Overlap(q));
    }
    let size = reg.size() as i64;
    let shift = delta.rem_euclid(size) as usize;
    if shift == 0 {
        return Ok(());
    }
    let mut out = state.amps.clone();
    for (i, &a) in state.amps.iter().enumerate() {
        if i & mask == want {
            let v = (reg.value(i) + shift) & (reg.size() - 1);
            out[reg.with_value(i, v)] = a;
        }
    }
    state.amps = out;
    Ok(())
}

/// Flips `flag` on every basis state whose controls match and whose `reg`
/// value satisfies `pred`. A permutation of the basis, hence unitary.
pub fn toggle_if(
    state: &mut StateVector,
    flag: usize,
    controls: &[Control],
    reg: Register,
    pred: impl Fn(usize) -> bool,
) -> Result<()> {
    state.check_qubit(flag)?;
    state.check_register(reg)?;
    let (mask, want) = control_masks(state, controls)?;
    if reg.contains(flag) || mask & (1 << flag) != 0 {
        return Err(Error::Overlap(flag));
    }
    let bit = 1usize << flag;
    for i in 0..state.dim() {
        if i & bit == 0 && i & mask == want && pred(reg.value(i)) {
            state.amps.swap(i, i | bit);
        }
    }
    Ok(())
}

/// Negates every amplitude whose `reg` value satisfies `pred`.
pub fn phase_flip(state: &mut StateVector, reg: Register, pred: impl Fn(usize) -> bool) -> Result<()> {
    state.check_register(reg)?;
    for (i, a) in state.amps.iter_mut().enumerate() {
        if pred(reg.value(i)) {
            *a = -*a;
        }
    }
    Ok(())
}

/// `(2|axis⟩⟨axis| − I)|state⟩`.
pub fn reflect_about(state: &mut StateVector, axis: &StateVector) -> Result<()> {
    let overlap = axis.inner(state)? * 2.0;
    for (a, x) in state.amps.iter_mut().zip(&axis.amps) {
        *a = overlap * x - *a;
    }
    Ok(())
}

/// `(2|axis⟩⟨axis| − I)` on `reg`, identity on every other qubit. `axis` is
/// a real unit vector over the register values.
pub fn reflect_register(state: &mut StateVector, reg: Register, axis: &[f64]) -> Result<()> {
    state.check_register(reg)?;
    if axis.len() != reg.size() {
        return Err(Error::DimensionMismatch { expected: reg.size(), got: axis.len() });
    }
    for rest in 0..state.dim() {
        if reg.value(rest) != 0 {
            continue;
        }
        let overlap: Complex64 = axis
            .iter()
            .enumerate()
            .map(|(v, &x)| state.amps[reg.with_value(rest, v)] * x)
            .sum();
        for (v, &x) in axis.iter().enumerate() {
            let i = reg.with_value(rest, v);
            state.amps[i] = overlap * (2.0 * x) - state.amps[i];
        }
    }
    Ok(())
}

/// Block-diagonal `Σ_r |r⟩⟨r| ⊗ R_y(angles[r])` with `selector` choosing the
/// block and `target` the rotated qubit.
pub fn multiplexed_ry(state: &mut StateVector, selector: Register, target: usize, angles: &[f64]) -> Result<()> {
    state.check_register(selector)?;
    state.check_qubit(target)?;
    if selector.contains(target) {
        return Err(Error::Overlap(target));
    }
    if angles.len() != selector.size() {
        return Err(Error::DimensionMismatch { expected: selector.size(), got: angles.len() });
    }
    let rot: Vec<(f64, f64)> = angles.iter().map(|t| (0.5 * t).sin_cos()).collect();
    let bit = 1usize << target;
    for i in 0..state.dim() {
        if i & bit != 0 {
            continue;
        }
        let (s, c) = rot[selector.value(i)];
        let j = i | bit;
        let (a0, a1) = (state.amps[i], state.amps[j]);
        state.amps[i] = a0 * c - a1 * s;
        state.amps[j] = a0 * s + a1 * c;
    }
    Ok(())
}

/// Raw marginal weights of `reg`, without normalisation checks.
pub fn marginal_weights(state: &StateVector, reg: Register) -> Vec<f64> {
    let mut w = vec![0.0; reg.size()];
    for (i, a) in state.amps.iter().enumerate() {
        w[reg.value(i)] += a.norm_sqr();
    }
    w
}

/// Distribution of `reg` with all other qubits traced out.
pub fn marginal(state: &StateVector, reg: Register) -> Result<ProbVector> {
    state.check_register(reg)?;
    ProbVector::new(marginal_weights(state, reg))
}

/// Samples `shots` measurements of `reg`; returns counts indexed by the
/// register value.
pub fn measure_counts<R: Rng + ?Sized>(state: &StateVector, reg: Register, shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    state.check_register(reg)?;
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be >= 1".into()));
    }
    let w = marginal_weights(state, reg);
    Ok(multinomial(&w, shots, rng))
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(weights: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; weights.len()];
    let mut left = n;
    let mut mass: f64 = weights.iter().sum();
    for (i, &w) in weights.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == weights.len() || w >= mass {
            counts[i] = left;
            break;
        }
        let p = (w / mass).clamp(0.0, 1.0);
        let k = if p > 0.0 { Binomial::new(left, p).unwrap().sample(rng) } else { 0 };
        counts[i] = k;
        left -= k;
        mass -= w;
    }
    counts
}
