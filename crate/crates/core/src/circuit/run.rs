//! End-to-end pipeline: slices, amplification, measurement, rejection.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::analytic::mm1k_steady_state;
use crate::des::{stationary_estimate, DesConfig};
use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::qcore::{marginal_weights, measure_counts, ProbVector, Register};
use crate::seed;

use super::census::{gate_census, GateCensus};
use super::grover::{grover_amplify, grover_iterations, marked_set};
use super::params::QueueParams;
use super::slices::run_slices;

/// Events per replicate for the simulated rejection target.
pub const TARGET_DES_EVENTS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub raw_histogram: Vec<u64>,
    pub accepted_histogram: Vec<u64>,
    pub p_q: ProbVector,
    #[serde(rename = "L_hat")]
    pub l_hat: f64,
    #[serde(rename = "W_hat")]
    pub w_hat: f64,
    pub p_block_hat: f64,
    #[serde(rename = "R_used")]
    pub r_used: usize,
    pub p_succ_measured: f64,
    pub acceptance_rate: f64,
    pub gate_census: GateCensus,
    /// Queue distribution after the slices, before amplification.
    #[serde(skip)]
    pub p_slices: ProbVector,
    /// Exact measurement law of the amplified state.
    #[serde(skip)]
    pub pi_hat: ProbVector,
    #[serde(skip)]
    pub marked: Vec<usize>,
    /// Marked mass of the amplified state.
    #[serde(skip)]
    pub p_succ_exact: f64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn target_cache() -> &'static Mutex<HashMap<String, ProbVector>> {
    static CACHE: OnceLock<Mutex<HashMap<String, ProbVector>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Stationary law used by the rejection filter: closed form for exponential
/// service, otherwise a cached simulation estimate with a seed derived from
/// the scenario.
pub fn rejection_target(lambda: f64, service: &ServiceDistribution, k: usize) -> Result<ProbVector> {
    if let ServiceDistribution::Exponential { rate } = *service {
        return Ok(mm1k_steady_state(lambda / rate, k));
    }
    let key = format!("{service:?}|{:016x}|{k}", lambda.to_bits());
    if let Some(p) = target_cache().lock().unwrap().get(&key) {
        return Ok(p.clone());
    }
    let cfg = DesConfig::new(lambda, service.clone(), k, seed::derive(0x7a67_e7d5, &[fnv1a(key.as_bytes())]))
        .with_events(TARGET_DES_EVENTS);
    let p = stationary_estimate(&cfg, 1)?;
    target_cache().lock().unwrap().insert(key, p.clone());
    Ok(p)
}

/// Runs the full pipeline for `params`.
pub fn qmg1_run(params: &QueueParams) -> Result<SimulationResult> {
    params.validate()?;
    let k = params.k;
    let p_slices = run_slices(params)?;
    let marked = marked_set(params);
    let r = grover_iterations(k, marked.len(), params.schedule);
    let (state, p_succ_exact) = grover_amplify(&p_slices, &marked, r)?;

    let reg = Register::new(0, params.q());
    let pi_hat = ProbVector::normalized(marginal_weights(&state, reg)[..=k].to_vec())?;
    let mut rng = seed::rng(params.seed, seed::stream::MEASURE);
    let mut raw = measure_counts(&state, reg, params.shots, &mut rng)?;
    raw.truncate(k + 1);

    let accepted = if params.rejection {
        let target = rejection_target(params.lambda, &params.service, k)?;
        let mut rng = seed::rng(params.seed, seed::stream::REJECT);
        super::rejection::rejection_filter_counts(&raw, &target, &pi_hat, &mut rng)?
    } else {
        raw.clone()
    };
    let kept: u64 = accepted.iter().sum();
    if kept == 0 {
        return Err(Error::Domain("rejection filter accepted no samples".into()));
    }
    let p_q = ProbVector::from_counts(&accepted)?;
    let l_hat = p_q.mean();
    let p_block_hat = p_q[k];
    let in_marked: u64 = marked.iter().map(|&n| raw[n]).sum();

    Ok(SimulationResult {
        w_hat: l_hat / (params.lambda * (1.0 - p_block_hat)),
        p_succ_measured: in_marked as f64 / params.shots as f64,
        acceptance_rate: kept as f64 / params.shots as f64,
        gate_census: gate_census(params),
        raw_histogram: raw,
        accepted_histogram: accepted,
        p_q,
        l_hat,
        p_block_hat,
        r_used: r,
        p_slices,
        pi_hat,
        marked,
        p_succ_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Engine, Schedule};
    use crate::metrics::tv_distance;
    use approx::assert_abs_diff_eq;

    fn demo(shots: u64, dt: f64, t: usize) -> QueueParams {
        let mut p = QueueParams::new(0.25, ServiceDistribution::exponential(1.0).unwrap(), 3);
        p.dt = Some(dt);
        p.t_slices = t;
        p.shots = shots;
        p.schedule = Schedule::Fixed(0);
        p.seed = 2024;
        p
    }

    #[test]
    fn unamplified_run_tracks_the_slice_law() {
        let r = qmg1_run(&demo(1_000_000, 0.3, 2000)).unwrap();
        assert!(tv_distance(&r.p_q, &r.p_slices).unwrap().0 < 0.005);
        assert_eq!(r.r_used, 0);
        assert_eq!(r.raw_histogram.iter().sum::<u64>(), 1_000_000);
        assert_eq!(r.acceptance_rate, 1.0);
    }

    #[test]
    fn small_slices_reach_the_stationary_law() {
        let r = qmg1_run(&demo(1_000_000, 0.01, 5000)).unwrap();
        let pi = mm1k_steady_state(0.25, 3);
        assert!(tv_distance(&r.p_q, &pi).unwrap().0 < 0.005);
        let w = pi.mean() / (0.25 * (1.0 - pi[3]));
        assert!((r.w_hat - w).abs() / w < 0.02);
    }

    #[test]
    fn estimators_are_consistent() {
        let r = qmg1_run(&demo(10_000, 0.3, 50)).unwrap();
        assert_abs_diff_eq!(r.l_hat, r.p_q.mean(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.w_hat, r.l_hat / (0.25 * (1.0 - r.p_block_hat)), epsilon = 1e-15);
        let s: f64 = r.p_q.as_slice().iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rejection_moves_toward_target() {
        for (lambda, k, engine) in [(0.5, 3usize, Engine::Exact), (0.9, 7, Engine::Exact), (0.3, 15, Engine::Traced)] {
            let mut p = QueueParams::new(lambda, ServiceDistribution::exponential(1.0).unwrap(), k);
            p.engine = Some(engine);
            p.shots = 20_000;
            p.seed = 11;
            let raw = qmg1_run(&p).unwrap();
            p.rejection = true;
            let acc = qmg1_run(&p).unwrap();
            let pi = mm1k_steady_state(lambda, k);
            let tv_raw = tv_distance(&ProbVector::from_counts(&acc.raw_histogram).unwrap(), &pi).unwrap().0;
            let tv_acc = tv_distance(&acc.p_q, &pi).unwrap().0;
            assert!(tv_acc <= tv_raw + 2.0 / (p.shots as f64).sqrt(), "{tv_acc} vs {tv_raw}");
            assert_eq!(raw.raw_histogram, acc.raw_histogram);
            assert!((0.0..=1.0).contains(&acc.acceptance_rate));
        }
    }

    #[test]
    fn simulated_target_is_cached_and_deterministic() {
        let u = ServiceDistribution::uniform(0.5, 1.5).unwrap();
        let a = rejection_target(0.5, &u, 3).unwrap();
        let b = rejection_target(0.5, &u, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn json_field_names() {
        let r = qmg1_run(&demo(100, 0.3, 5)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        for k in [
            "raw_histogram",
            "accepted_histogram",
            "p_q",
            "L_hat",
            "W_hat",
            "p_block_hat",
            "R_used",
            "p_succ_measured",
            "acceptance_rate",
            "gate_census",
        ] {
            assert!(keys.contains(&k), "{k}");
        }
        assert_eq!(keys.len(), 10);
    }

    #[test]
    fn same_seed_same_result() {
        let p = demo(5000, 0.3, 20);
        assert_eq!(qmg1_run(&p).unwrap(), qmg1_run(&p).unwrap());
    }
}
