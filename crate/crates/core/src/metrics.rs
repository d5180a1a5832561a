//! Distances between queue-length distributions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::ProbVector;

/// Offset added before taking logarithms of near-zero metrics.
pub const LOG_OFFSET: f64 = 1e-10;

fn check_len(p: &ProbVector, q: &ProbVector) -> Result<()> {
    if p.len() != q.len() {
        Err(Error::DimensionMismatch { expected: p.len(), got: q.len() })
    } else {
        Ok(())
    }
}

/// `(Σ √(p q))²`.
pub fn fidelity(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_len(p, q)?;
    let bc: f64 = p.as_slice().iter().zip(q.as_slice()).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((bc * bc).min(1.0))
}

/// `KL(p‖q)` in nats; `+∞` when `p` has mass where `q` has none.
pub fn kl(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_len(p, q)?;
    Ok(kl_raw(p.as_slice(), q.as_slice()))
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| if *b > 0.0 { a * (a / b).ln() } else { f64::INFINITY })
        .sum()
}

/// Jensen–Shannon divergence in nats.
pub fn jsd(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_len(p, q)?;
    let (p, q) = (p.as_slice(), q.as_slice());
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    // summing the two halves termwise keeps the result symmetric bit for bit
    let v: f64 = p
        .iter()
        .zip(q)
        .zip(&m)
        .map(|((a, b), mm)| {
            let t = |x: f64| if x > 0.0 { x * (x / mm).ln() } else { 0.0 };
            0.5 * (t(*a) + t(*b))
        })
        .sum();
    Ok(v.clamp(0.0, std::f64::consts::LN_2))
}

/// `(½‖p−q‖₁, ‖p−q‖₁)`.
pub fn tv_distance(p: &ProbVector, q: &ProbVector) -> Result<(f64, f64)> {
    check_len(p, q)?;
    let l1: f64 = p.as_slice().iter().zip(q.as_slice()).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1, l1))
}

pub fn relative_error(est: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((est - reference).abs() / reference.abs())
}

/// `1 − F`.
pub fn fidelity_residual(f: f64) -> f64 {
    1.0 - f
}

/// `log₁₀(x + 1e-10)`.
pub fn log10_offset(x: f64) -> f64 {
    (x + LOG_OFFSET).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub fidelity: f64,
    pub jsd: f64,
    pub tv_halved: f64,
    pub l1_gap: f64,
    pub rel_err_l: f64,
    pub rel_err_w: f64,
}

impl MetricReport {
    /// Compares `est` against `reference`, with `(L, W)` pairs for the
    /// relative errors. A zero reference yields NaN relative errors.
    pub fn compare(est: &ProbVector, reference: &ProbVector, lw_est: (f64, f64), lw_ref: (f64, f64)) -> Result<Self> {
        let (tv_halved, l1_gap) = tv_distance(est, reference)?;
        Ok(Self {
            fidelity: fidelity(est, reference)?,
            jsd: jsd(est, reference)?,
            tv_halved,
            l1_gap,
            rel_err_l: relative_error(lw_est.0, lw_ref.0).unwrap_or(f64::NAN),
            rel_err_w: relative_error(lw_est.1, lw_ref.1).unwrap_or(f64::NAN),
        })
    }
}
