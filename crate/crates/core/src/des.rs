//! Event-driven simulation of the M/G/1/K loss queue.

use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::qcore::ProbVector;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesConfig {
    pub lambda: f64,
    pub service: ServiceDistribution,
    pub k: usize,
    /// Arrivals (admitted or blocked) plus departures.
    #[serde(default = "default_events")]
    pub horizon_events: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    pub seed: u64,
}

fn default_events() -> u64 {
    100_000
}

fn default_warmup() -> f64 {
    0.1
}

impl DesConfig {
    pub fn new(lambda: f64, service: ServiceDistribution, k: usize, seed: u64) -> Self {
        Self { lambda, service, k, horizon_events: default_events(), warmup_fraction: default_warmup(), seed }
    }

    pub fn with_events(mut self, n: u64) -> Self {
        self.horizon_events = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.k < 1 {
            return bad("capacity K must be >= 1".into());
        }
        if self.horizon_events < 1000 {
            return bad(format!("horizon_events must be >= 1000, got {}", self.horizon_events));
        }
        if !(0.0..=0.5).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction must lie in [0, 0.5], got {}", self.warmup_fraction));
        }
        self.service.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesResult {
    /// Time-averaged occupancy after warmup.
    pub p_c: ProbVector,
    #[serde(rename = "L")]
    pub l: f64,
    /// Sojourn time from Little's law, `L / (λ(1 − p_block))`.
    #[serde(rename = "W_sojourn")]
    pub w: f64,
    pub p_block: f64,
    pub served: u64,
    pub sim_time: f64,
    pub arrivals: u64,
    pub blocked: u64,
    pub in_system_at_end: usize,
    /// Time spent at each occupancy level after warmup.
    pub holding: Vec<f64>,
    pub warmup_time: f64,
}

struct Step {
    t: f64,
    n_after: usize,
    arrival: Option<bool>,
}

/// Runs one replicate on the `DES` stream of `config.seed`.
pub fn run_des(config: &DesConfig) -> Result<DesResult> {
    config.validate()?;
    let mut rng = seed::rng(config.seed, seed::stream::DES);
    let k = config.k;
    let inter = (config.lambda > 0.0).then(|| Exp::new(config.lambda).unwrap());

    let mut t = 0.0;
    let mut n = 0usize;
    let mut next_arrival = inter.map_or(f64::INFINITY, |e| e.sample(&mut rng));
    let mut next_departure = f64::INFINITY;
    let (mut arrivals, mut blocked, mut served) = (0u64, 0u64, 0u64);
    let mut steps: Vec<Step> = Vec::with_capacity(config.horizon_events as usize);

    for _ in 0..config.horizon_events {
        if next_arrival.is_infinite() && next_departure.is_infinite() {
            break;
        }
        if next_arrival <= next_departure {
            t = next_arrival;
            arrivals += 1;
            let lost = n == k;
            if lost {
                blocked += 1;
            } else {
                n += 1;
                if n == 1 {
                    next_departure = t + config.service.sample(&mut rng);
                }
            }
            next_arrival = t + inter.expect("arrivals imply lambda > 0").sample(&mut rng);
            steps.push(Step { t, n_after: n, arrival: Some(lost) });
        } else {
            t = next_departure;
            n -= 1;
            served += 1;
            next_departure = if n > 0 { t + config.service.sample(&mut rng) } else { f64::INFINITY };
            steps.push(Step { t, n_after: n, arrival: None });
        }
    }

    let sim_time = t;
    let warmup_time = config.warmup_fraction * sim_time;
    let mut holding = vec![0.0; k + 1];
    let (mut post_arrivals, mut post_blocked) = (0u64, 0u64);
    let (mut prev_t, mut level) = (0.0f64, 0usize);
    for s in &steps {
        let lo = prev_t.max(warmup_time);
        if s.t > lo {
            holding[level] += s.t - lo;
        }
        if s.t >= warmup_time {
            if let Some(lost) = s.arrival {
                post_arrivals += 1;
                post_blocked += lost as u64;
            }
        }
        prev_t = s.t;
        level = s.n_after;
    }

    let p_c = if holding.iter().sum::<f64>() > 0.0 {
        ProbVector::normalized(holding.clone())?
    } else {
        ProbVector::point_mass(k + 1, n)
    };
    let p_block = if post_arrivals > 0 { post_blocked as f64 / post_arrivals as f64 } else { 0.0 };
    let l = p_c.mean();
    let w = if l == 0.0 { 0.0 } else { l / (config.lambda * (1.0 - p_block)) };
    Ok(DesResult {
        p_c,
        l,
        w,
        p_block,
        served,
        sim_time,
        arrivals,
        blocked,
        in_system_at_end: n,
        holding,
        warmup_time,
    })
}

/// Seed of replicate `i`; replicate 0 reuses the base seed.
pub fn replicate_seed(base: u64, i: usize) -> u64 {
    if i == 0 {
        base
    } else {
        seed::derive(base, &[i as u64])
    }
}

/// Average occupancy distribution over `replications` independent runs.
pub fn stationary_estimate(config: &DesConfig, replications: usize) -> Result<ProbVector> {
    if replications == 0 {
        return Err(Error::InvalidParameter("replications must be >= 1".into()));
    }
    let runs: Vec<ProbVector> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = replicate_seed(config.seed, i);
            run_des(&c).map(|r| r.p_c)
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; config.k + 1];
    for p in &runs {
        for (a, x) in acc.iter_mut().zip(p.as_slice()) {
            *a += x;
        }
    }
    ProbVector::normalized(acc)
}
