use serde::{Deserialize, Serialize};

use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::qcore::QUBIT_CAP;

/// Largest exact-engine register chosen automatically.
pub const AUTO_EXACT_QUBITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    Traced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceMode {
    /// Service completes in a slice with probability `F(Δt)`.
    #[default]
    PerSliceCdf,
    /// Service completes with the discrete hazard of the elapsed service age.
    ResidualHazard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapMode {
    /// Sign flip on `n > K`.
    #[default]
    SignFlip,
    /// `R_L R_K` with `R_K = 1 − 2|ψ₀⟩⟨ψ₀|` and `R_L = 1 − 2·Π_legal`.
    TwoReflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `round(π/(4θ) − ½)`.
    #[default]
    Optimal,
    /// `⌈(π/4)·√((K+1)/|M|)⌉`.
    Paper,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterRule {
    /// `round(E[L])` of the truncated-geometric law.
    #[default]
    TakacsMean,
    /// `⌊ρ/(1−ρ)⌋`.
    FloorRatio,
    /// `⌊ρ·(K+1)⌋`.
    ScaledLoad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    /// `⌊Q/2⌋`.
    #[default]
    HalfQubits,
    /// `⌊√K⌋`.
    SqrtK,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    pub lambda: f64,
    pub service: ServiceDistribution,
    #[serde(rename = "K")]
    pub k: usize,
    /// Slice width; `1/T` when omitted.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(rename = "T", default = "default_slices")]
    pub t_slices: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub epsilon0: EpsilonRule,
    #[serde(default)]
    pub center: CenterRule,
    /// `None` picks the exact engine when the register is small enough.
    #[serde(default)]
    pub engine: Option<Engine>,
    #[serde(default)]
    pub service_mode: ServiceMode,
    #[serde(default)]
    pub cap_mode: CapMode,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub rejection: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_slices() -> usize {
    100
}

fn default_shots() -> u64 {
    10_000
}

impl QueueParams {
    pub fn new(lambda: f64, service: ServiceDistribution, k: usize) -> Self {
        Self {
            lambda,
            service,
            k,
            dt: None,
            t_slices: default_slices(),
            shots: default_shots(),
            epsilon0: EpsilonRule::default(),
            center: CenterRule::default(),
            engine: None,
            service_mode: ServiceMode::default(),
            cap_mode: CapMode::default(),
            schedule: Schedule::default(),
            rejection: false,
            seed: 0,
        }
    }

    /// Queue register width `⌈log₂(K+1)⌉`.
    pub fn q(&self) -> usize {
        qubits_for(self.k)
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(1.0 / self.t_slices as f64)
    }

    pub fn rho(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    pub fn epsilon0(&self) -> usize {
        let e = match self.epsilon0 {
            EpsilonRule::HalfQubits => self.q() / 2,
            EpsilonRule::SqrtK => (self.k as f64).sqrt().floor() as usize,
            EpsilonRule::Fixed(e) => e,
        };
        e.min(self.k)
    }

    /// Qubits the exact engine allocates for these parameters.
    pub fn exact_qubits(&self) -> usize {
        let q = self.q();
        match self.service_mode {
            ServiceMode::PerSliceCdf => q + 3,
            ServiceMode::ResidualHazard => 2 * q + 4,
        }
    }

    pub fn engine(&self) -> Engine {
        self.engine.unwrap_or_else(|| {
            let extra = match self.service_mode {
                ServiceMode::PerSliceCdf => 0,
                ServiceMode::ResidualHazard => self.q(),
            };
            if self.q() + 2 + extra <= AUTO_EXACT_QUBITS {
                Engine::Exact
            } else {
                Engine::Traced
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if self.k < 1 {
            return bad("capacity K must be >= 1".into());
        }
        let dt = self.dt();
        if !(dt.is_finite() && dt > 0.0) {
            return bad(format!("dt must be > 0, got {dt}"));
        }
        if self.t_slices < 1 {
            return bad("T must be >= 1".into());
        }
        if self.shots < 1 {
            return bad("shots must be >= 1".into());
        }
        if let EpsilonRule::Fixed(e) = self.epsilon0 {
            if e > self.k {
                return bad(format!("epsilon0 = {e} exceeds K = {}", self.k));
            }
        }
        self.service.validate()?;
        if self.engine() == Engine::Exact && self.exact_qubits() > QUBIT_CAP {
            return Err(Error::QubitCap { requested: self.exact_qubits(), cap: QUBIT_CAP });
        }
        if self.engine() == Engine::Traced && self.cap_mode == CapMode::TwoReflection {
            return Err(Error::Unsupported("the traced engine has no two-reflection capacity oracle".into()));
        }
        Ok(())
    }
}

pub fn qubits_for(k: usize) -> usize {
    let states = k + 1;
    (usize::BITS - (states - 1).leading_zeros()).max(1) as usize
}
