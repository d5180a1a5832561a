//! Service-time laws.
//!
//! Every law exposes its CDF, the first two moments, the discrete hazard on a
//! grid of width `dt` and seeded random variates. The Normal law is
//! left-truncated at zero and renormalised; the phase-type law is given by an
//! initial vector and a 3×3 sub-generator.

use nalgebra::{Matrix3, RowVector3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal as NormalSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};

use crate::error::{Error, Result};

/// Survival below this is treated as exhausted when forming hazards.
pub const ABSORBED_SURVIVAL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServiceDistribution {
    Exponential { rate: f64 },
    /// Normal with the given mean and variance, truncated to `(0, ∞)`.
    Normal { mean: f64, variance: f64 },
    Uniform { lo: f64, hi: f64 },
    Deterministic { d: f64 },
    /// Phase-type law `PH(alpha, t)` with three transient phases.
    PhaseType { alpha: [f64; 3], t: [[f64; 3]; 3] },
}

impl ServiceDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::Normal { mean, variance }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn deterministic(d: f64) -> Result<Self> {
        Self::Deterministic { d }.validated()
    }

    pub fn phase_type(alpha: [f64; 3], t: [[f64; 3]; 3]) -> Result<Self> {
        Self::PhaseType { alpha, t }.validated()
    }

    /// Erlang-like chain with the arrival rate embedded in the first two
    /// phases: `alpha = [1,0,0]`, `T = [[-λ,λ,0],[0,-λ,λ],[0,0,-1]]`.
    pub fn coupled_phase_type(lambda: f64) -> Result<Self> {
        Self::phase_type(
            [1.0, 0.0, 0.0],
            [
                [-lambda, lambda, 0.0],
                [0.0, -lambda, lambda],
                [0.0, 0.0, -1.0],
            ],
        )
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Self::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return bad(format!("exponential rate must be > 0, got {rate}"));
                }
            }
            Self::Normal { mean, variance } => {
                if !mean.is_finite() || !(variance.is_finite() && variance > 0.0) {
                    return bad(format!(
                        "normal needs finite mean and variance > 0, got mean={mean}, variance={variance}"
                    ));
                }
            }
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                    return bad(format!("uniform needs 0 <= lo < hi, got lo={lo}, hi={hi}"));
                }
            }
            Self::Deterministic { d } => {
                if !(d.is_finite() && d > 0.0) {
                    return bad(format!("deterministic value must be > 0, got {d}"));
                }
            }
            Self::PhaseType { alpha, t } => {
                if alpha.iter().any(|&a| !(a.is_finite() && a >= 0.0)) {
                    return bad(format!("phase-type alpha entries must be >= 0, got {alpha:?}"));
                }
                if (alpha.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return bad(format!("phase-type alpha must sum to 1, got {alpha:?}"));
                }
                for (i, row) in t.iter().enumerate() {
                    if row.iter().any(|x| !x.is_finite()) {
                        return bad("phase-type generator has non-finite entries".into());
                    }
                    if row[i] >= 0.0 {
                        return bad(format!("phase-type diagonal entry {i} must be < 0"));
                    }
                    if row.iter().enumerate().any(|(j, &x)| j != i && x < 0.0) {
                        return bad(format!("phase-type row {i} has a negative off-diagonal"));
                    }
                    if row.iter().sum::<f64>() > 1e-12 {
                        return bad(format!("phase-type row {i} sums above zero"));
                    }
                }
                if to_matrix(&t).try_inverse().is_none() {
                    return bad("phase-type generator is singular (no absorption)".into());
                }
            }
        }
        Ok(())
    }

    /// Short label used in CSV rows.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Normal { .. } => "normal",
            Self::Uniform { .. } => "uniform",
            Self::Deterministic { .. } => "deterministic",
            Self::PhaseType { .. } => "phase_type",
        }
    }

    /// `P(G > t)`; 1 for `t < 0`.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::Normal { mean, variance } => {
                let n = std_normal(mean, variance);
                let z = n.sf(0.0);
                (n.sf(t) / z).clamp(0.0, 1.0)
            }
            Self::Uniform { lo, hi } => {
                if t <= lo {
                    1.0
                } else if t >= hi {
                    0.0
                } else {
                    (hi - t) / (hi - lo)
                }
            }
            Self::Deterministic { d } => {
                if t >= d {
                    0.0
                } else {
                    1.0
                }
            }
            Self::PhaseType { alpha, t: gen } => {
                let a = RowVector3::from(alpha);
                let s = (a * expm(&(to_matrix(&gen) * t))).sum();
                s.clamp(0.0, 1.0)
            }
        }
    }

    /// `P(G <= t)`; 0 for `t < 0`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Self::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Deterministic { d } => {
                if t >= d {
                    1.0
                } else {
                    0.0
                }
            }
            _ => 1.0 - self.survival(t),
        }
    }

    /// `(E[G], E[G²])`.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Self::Exponential { rate } => (1.0 / rate, 2.0 / (rate * rate)),
            Self::Normal { mean, variance } => {
                let sd = variance.sqrt();
                let alpha = -mean / sd;
                let unit = StdNormal::new(0.0, 1.0).unwrap();
                let z = unit.sf(alpha);
                let lambda = unit.pdf(alpha) / z;
                let m = mean + sd * lambda;
                let var = variance * (1.0 + alpha * lambda - lambda * lambda);
                (m, var + m * m)
            }
            Self::Uniform { lo, hi } => {
                let m = 0.5 * (lo + hi);
                (m, m * m + (hi - lo).powi(2) / 12.0)
            }
            Self::Deterministic { d } => (d, d * d),
            Self::PhaseType { alpha, t } => {
                let a = RowVector3::from(alpha);
                let inv = (-to_matrix(&t))
                    .try_inverse()
                    .expect("validated generator is invertible");
                let ones = Vector3::repeat(1.0);
                let m1 = (a * inv * ones)[0];
                let m2 = 2.0 * (a * inv * inv * ones)[0];
                (m1, m2)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    pub fn variance(&self) -> f64 {
        let (m1, m2) = self.moments();
        (m2 - m1 * m1).max(0.0)
    }

    /// Discrete hazard `h(r) = [F((r+1)dt) − F(r dt)] / [1 − F(r dt)]`.
    /// Bins whose survival is exhausted report 1.
    pub fn hazard_bin(&self, r: usize, dt: f64) -> f64 {
        let s0 = self.survival(r as f64 * dt);
        if s0 <= ABSORBED_SURVIVAL {
            return 1.0;
        }
        let s1 = self.survival((r + 1) as f64 * dt);
        ((s0 - s1) / s0).clamp(0.0, 1.0)
    }

    /// `E[G − a | G > a]`, zero when the law has no mass beyond `a`.
    pub fn mean_residual_life(&self, a: f64) -> f64 {
        let a = a.max(0.0);
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { d } => (d - a).max(0.0),
            Self::Uniform { lo, hi } => {
                if a < lo {
                    0.5 * (lo + hi) - a
                } else if a < hi {
                    0.5 * (hi - a)
                } else {
                    0.0
                }
            }
            Self::Normal { mean, variance } => {
                let sd = variance.sqrt();
                let z = (a - mean) / sd;
                let unit = StdNormal::new(0.0, 1.0).unwrap();
                let tail = unit.sf(z);
                if tail < 1e-300 {
                    sd / z
                } else {
                    mean - a + sd * unit.pdf(z) / tail
                }
            }
            Self::PhaseType { alpha, t } => {
                let gen = to_matrix(&t);
                let state = RowVector3::from(alpha) * expm(&(gen * a));
                let s = state.sum();
                if s <= 1e-300 {
                    return 0.0;
                }
                let inv = (-gen).try_inverse().expect("validated generator is invertible");
                (state / s * inv * Vector3::repeat(1.0))[0]
            }
        }
    }

    /// Per-slice completion probability for a customer whose age is at least
    /// `r` bins, using a geometric tail with the law's mean residual life.
    /// Coincides with [`hazard_bin`](Self::hazard_bin) for the exponential law.
    pub fn tail_hazard(&self, r: usize, dt: f64) -> f64 {
        let mrl = self.mean_residual_life(r as f64 * dt);
        if mrl <= 0.0 {
            1.0
        } else {
            1.0 - (-dt / mrl).exp()
        }
    }

    /// Draws one service time.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
            Self::Normal { mean, variance } => {
                let n = NormalSampler::new(mean, variance.sqrt()).unwrap();
                loop {
                    let x = n.sample(rng);
                    if x > 0.0 {
                        return x;
                    }
                }
            }
            Self::Uniform { lo, hi } => rng.random_range(lo..hi),
            Self::Deterministic { d } => d,
            Self::PhaseType { alpha, t } => sample_phase_type(&alpha, &t, rng),
        }
    }
}

fn std_normal(mean: f64, variance: f64) -> StdNormal {
    StdNormal::new(mean, variance.sqrt()).expect("validated normal parameters")
}

fn to_matrix(t: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| t[i][j])
}

fn inf_norm(m: &Matrix3<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &Matrix3<f64>) -> Matrix3<f64> {
    let norm = inf_norm(a);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let b = a * scale;
    let mut term = Matrix3::identity();
    let mut sum = Matrix3::identity();
    for k in 1..64 {
        term = term * b / k as f64;
        sum += term;
        if inf_norm(&term) <= 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

fn sample_phase_type<R: Rng + ?Sized>(alpha: &[f64; 3], t: &[[f64; 3]; 3], rng: &mut R) -> f64 {
    let pick = |weights: &[f64], rng: &mut R| -> Option<usize> {
        let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return Some(i);
            }
            u -= w;
        }
        None
    };
    let mut phase = pick(alpha, rng).unwrap_or(0);
    let mut total = 0.0;
    loop {
        let out = -t[phase][phase];
        total += Exp::new(out).unwrap().sample(rng);
        // jump weights to other phases, last slot is absorption
        let mut w = [0.0; 4];
        for (j, slot) in w.iter_mut().take(3).enumerate() {
            if j != phase {
                *slot = t[phase][j];
            }
        }
        w[3] = (out - w[..3].iter().sum::<f64>()).max(0.0);
        match pick(&w, rng) {
            Some(j) if j < 3 => phase = j,
            _ => return total,
        }
    }
}

/// Service law as written in configuration files. `phase_type_coupled`
/// defers to [`ServiceDistribution::coupled_phase_type`] once the cell's
/// arrival rate is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServiceSpec {
    Exponential { rate: f64 },
    Normal { mean: f64, variance: f64 },
    Uniform { lo: f64, hi: f64 },
    Deterministic { d: f64 },
    PhaseType { alpha: [f64; 3], t: [[f64; 3]; 3] },
    PhaseTypeCoupled,
}

impl ServiceSpec {
    pub fn resolve(&self, lambda: f64) -> Result<ServiceDistribution> {
        match *self {
            Self::Exponential { rate } => ServiceDistribution::exponential(rate),
            Self::Normal { mean, variance } => ServiceDistribution::normal(mean, variance),
            Self::Uniform { lo, hi } => ServiceDistribution::uniform(lo, hi),
            Self::Deterministic { d } => ServiceDistribution::deterministic(d),
            Self::PhaseType { alpha, t } => ServiceDistribution::phase_type(alpha, t),
            Self::PhaseTypeCoupled => ServiceDistribution::coupled_phase_type(lambda),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Normal { .. } => "normal",
            Self::Uniform { .. } => "uniform",
            Self::Deterministic { .. } => "deterministic",
            Self::PhaseType { .. } | Self::PhaseTypeCoupled => "phase_type",
        }
    }

    /// The four laws of the experimental grid, all with unit service rate
    /// except the coupled phase-type chain.
    pub fn paper_grid() -> Vec<ServiceSpec> {
        vec![
            Self::Normal { mean: 1.0, variance: 0.05 },
            Self::Exponential { rate: 1.0 },
            Self::Uniform { lo: 0.5, hi: 1.5 },
            Self::PhaseTypeCoupled,
        ]
    }
}
