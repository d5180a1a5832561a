//! Closed-form queue quantities and error bounds.

use serde::Serialize;

use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::qcore::ProbVector;

/// Stationary distribution of M/M/1/K, `p_n ∝ ρⁿ` on `0..=k`.
pub fn mm1k_steady_state(rho: f64, k: usize) -> ProbVector {
    assert!(rho >= 0.0, "utilisation must be nonnegative");
    // scale by the largest term so that ρ > 1 does not overflow
    let w: Vec<f64> = (0..=k)
        .map(|n| {
            if rho <= 1.0 {
                rho.powi(n as i32)
            } else {
                rho.recip().powi((k - n) as i32)
            }
        })
        .collect();
    ProbVector::normalized(w).expect("geometric weights are positive")
}

/// Mean number in system, `ρ(1 − (K+1)ρᴷ + Kρ^{K+1}) / ((1−ρ)(1−ρ^{K+1}))`.
pub fn expected_l(rho: f64, k: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("mean-queue formula needs 0 <= rho < 1, got {rho}")));
    }
    if 1.0 - rho < 1e-3 {
        // the closed form cancels catastrophically near 1
        return Ok(mm1k_steady_state(rho, k).mean());
    }
    let kf = k as f64;
    let rk = rho.powi(k as i32);
    let num = rho * (1.0 - (kf + 1.0) * rk + kf * rk * rho);
    let den = (1.0 - rho) * (1.0 - rk * rho);
    Ok(num / den)
}

/// Mean of the truncated-geometric distribution for any `ρ >= 0`.
pub fn mean_queue_length(rho: f64, k: usize) -> f64 {
    match expected_l(rho, k) {
        Ok(l) => l,
        Err(_) => mm1k_steady_state(rho, k).mean(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticalBounds {
    /// `(1/(2√2))·√(ln(2(K+1)/δ)/N)`.
    pub dkw: f64,
    /// `(√2/2)·√(ln(2/δ)/N)`.
    pub main: f64,
    /// `√((2/N)·ln(2^{K+1}/δ))`.
    pub deviation: f64,
    /// `(K+1)/(4√N)`, a bound on the expected distance.
    pub expected: f64,
}

pub fn statistical_bounds(n: u64, delta: f64, k: usize) -> StatisticalBounds {
    let nf = n as f64;
    let states = (k + 1) as f64;
    StatisticalBounds {
        dkw: (1.0 / (2.0 * 2f64.sqrt())) * ((2.0 * states / delta).ln() / nf).sqrt(),
        main: (2f64.sqrt() / 2.0) * ((2.0 / delta).ln() / nf).sqrt(),
        deviation: ((2.0 / nf) * (states * 2f64.ln() - delta.ln())).sqrt(),
        expected: states / (4.0 * nf.sqrt()),
    }
}

/// `(λ + μ₂)·Δt`.
pub fn discretization_bound(lambda: f64, mu2: f64, dt: f64) -> f64 {
    (lambda + mu2) * dt
}

/// `(λ²/2 + σ²/(2μ₁²))·Δt`.
pub fn discretization_bound_alt(lambda: f64, mean: f64, variance: f64, dt: f64) -> f64 {
    (0.5 * lambda * lambda + variance / (2.0 * mean * mean)) * dt
}

/// `θ` with `sin²θ = m/(K+1)`.
pub fn grover_angle(m_size: usize, k: usize) -> f64 {
    (m_size as f64 / (k + 1) as f64).sqrt().asin()
}

/// `sin²((2R+1)θ)`.
pub fn grover_success(m_size: usize, k: usize, r: usize) -> f64 {
    let th = grover_angle(m_size, k);
    ((2 * r + 1) as f64 * th).sin().powi(2)
}

/// `½θ·e^{−R·arcsin θ}` with `θ = √(m/(K+1))`.
pub fn rejection_decay_bound(m_size: usize, k: usize, r: usize) -> f64 {
    let th = (m_size as f64 / (k + 1) as f64).sqrt();
    0.5 * th * (-(r as f64) * th.asin()).exp()
}

/// Proposal left by `r` rounds from a uniform start: marked mass
/// `sin²((2R+1)θ₀)` spread evenly over `region`, the rest spread over the
/// complement.
pub fn amplified_proposal(k: usize, region: &[usize], r: usize) -> Result<ProbVector> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let states = k + 1;
    let inside = grover_success(region.len(), k, r);
    let mut p = vec![0.0; states];
    let outside_n = states - region.len();
    for (n, slot) in p.iter_mut().enumerate() {
        *slot = if region.contains(&n) {
            inside / region.len() as f64
        } else {
            (1.0 - inside) / outside_n as f64
        };
    }
    ProbVector::normalized(p)
}

/// `γ = min_region π / max_region π̂` and the acceptance floor
/// `min(γ, 1)·sin²((2R+1)θ₀)` for `r` rounds. The floor holds only for
/// `γ ≤ 1`, so larger factors are capped there.
pub fn gamma_factor(pi: &ProbVector, pi_hat: &ProbVector, region: &[usize], r: usize) -> Result<(f64, f64)> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if pi.len() != pi_hat.len() {
        return Err(Error::DimensionMismatch { expected: pi.len(), got: pi_hat.len() });
    }
    if let Some(&n) = region.iter().find(|&&n| n >= pi.len()) {
        return Err(Error::DimensionMismatch { expected: pi.len(), got: n + 1 });
    }
    let min_pi = region.iter().map(|&n| pi[n]).fold(f64::INFINITY, f64::min);
    let max_hat = region.iter().map(|&n| pi_hat[n]).fold(0.0, f64::max);
    if max_hat <= 0.0 {
        return Err(Error::ProposalSupport { state: region[0] });
    }
    let gamma = min_pi / max_hat;
    let k = pi.len() - 1;
    Ok((gamma, gamma.min(1.0) * grover_success(region.len(), k, r)))
}

/// Every bound evaluated for one scenario, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub statistical_tv_dkw: f64,
    pub statistical_tv_main: f64,
    pub statistical_tv_deviation: f64,
    pub expected_tv: f64,
    pub discretization: f64,
    pub discretization_alt: f64,
    pub rejection_decay: f64,
    pub acceptance_lower: Option<f64>,
}

pub struct BoundInputs<'a> {
    pub shots: u64,
    pub delta: f64,
    pub k: usize,
    pub lambda: f64,
    pub service: &'a ServiceDistribution,
    pub dt: f64,
    pub m_size: usize,
    pub r: usize,
}

impl Bounds {
    pub fn compute(i: &BoundInputs<'_>) -> Self {
        let s = statistical_bounds(i.shots, i.delta, i.k);
        let (m1, m2) = i.service.moments();
        Self {
            statistical_tv_dkw: s.dkw,
            statistical_tv_main: s.main,
            statistical_tv_deviation: s.deviation,
            expected_tv: s.expected,
            discretization: discretization_bound(i.lambda, m2, i.dt),
            discretization_alt: discretization_bound_alt(i.lambda, m1, (m2 - m1 * m1).max(0.0), i.dt),
            rejection_decay: rejection_decay_bound(i.m_size, i.k, i.r),
            acceptance_lower: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn steady_state_examples() {
        let p = mm1k_steady_state(0.25, 3);
        for (a, b) in p.as_slice().iter().zip([0.7529, 0.1882, 0.0471, 0.0118]) {
            assert_abs_diff_eq!(*a, b, epsilon = 5e-5);
        }
        for &x in mm1k_steady_state(1.0, 9).as_slice() {
            assert_abs_diff_eq!(x, 0.1, epsilon = 1e-15);
        }
        assert_eq!(mm1k_steady_state(0.0, 4), ProbVector::point_mass(5, 0));
    }

    #[test]
    fn steady_state_matches_closed_form() {
        for &(rho, k) in &[(0.3, 5usize), (0.9, 12), (1.7, 6), (3.0, 4000)] {
            let p = mm1k_steady_state(rho, k);
            let s: f64 = p.as_slice().iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            if k < 100 {
                for n in 0..=k {
                    let f: f64 = rho.powi(n as i32) * (1.0 - rho) / (1.0 - rho.powi(k as i32 + 1));
                    assert_abs_diff_eq!(p[n], f, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn expected_l_examples() {
        assert_abs_diff_eq!(expected_l(0.25, 3).unwrap(), 0.31765, epsilon = 1e-4);
        assert_abs_diff_eq!(expected_l(1e-12, 3).unwrap(), 0.0, epsilon = 1e-11);
        assert_abs_diff_eq!(expected_l(0.5, 200).unwrap(), 1.0, epsilon = 1e-12);
        assert!(expected_l(1.0, 3).is_err());
        assert!(expected_l(1.5, 3).is_err());
        assert!(mean_queue_length(2.0, 3) > 2.0);
    }

    #[test]
    fn statistical_examples() {
        let b = statistical_bounds(10_000, 0.05, 3);
        assert_abs_diff_eq!(b.dkw, 0.00796, epsilon = 1e-5);
        assert_abs_diff_eq!(b.expected, 0.01, epsilon = 1e-15);
        let far = statistical_bounds(u64::MAX / 2, 0.05, 3);
        assert!(far.dkw < 1e-8 && far.main < 1e-8 && far.deviation < 1e-8 && far.expected < 1e-8);
    }

    #[test]
    fn discretization_examples() {
        assert_abs_diff_eq!(discretization_bound(0.25, 2.0, 0.3), 0.675, epsilon = 1e-12);
        assert_eq!(discretization_bound(0.25, 2.0, 0.0), 0.0);
        assert_abs_diff_eq!(discretization_bound(0.25, 2.0, 0.15), 0.675 / 2.0, epsilon = 1e-12);
        // exponential: σ² = μ₁² so the second term is ½
        assert_abs_diff_eq!(discretization_bound_alt(1.0, 1.0, 1.0, 0.1), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn grover_success_examples() {
        assert_abs_diff_eq!(grover_success(1, 3, 1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grover_success(3, 7, 0), 3.0 / 8.0, epsilon = 1e-12);
        for r in 0..6 {
            assert_abs_diff_eq!(grover_success(8, 7, r), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_examples() {
        let u = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(gamma_factor(&u, &u, &[0, 1], 0).unwrap().0, 1.0);
        let pi = mm1k_steady_state(0.25, 3);
        let hat = ProbVector::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(gamma_factor(&pi, &hat, &[0, 1], 0).unwrap().0, pi[1] / 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_factor(&pi, &hat, &[0, 1], 0).unwrap().0, 0.3764, epsilon = 1e-4);
        assert!(matches!(gamma_factor(&pi, &hat, &[], 0), Err(Error::EmptyRegion)));

        let region = [0, 1];
        for r in 0..4 {
            let prop = amplified_proposal(7, &region, r).unwrap();
            let pi = mm1k_steady_state(0.25, 7);
            let (g, lower) = gamma_factor(&pi, &prop, &region, r).unwrap();
            let want = pi[1] / (grover_success(2, 7, r) / 2.0);
            assert_abs_diff_eq!(g, want, epsilon = 1e-12);
            assert_abs_diff_eq!(lower, g.min(1.0) * grover_success(2, 7, r), epsilon = 1e-12);
        }
    }

    #[test]
    fn rejection_decay_examples() {
        let th = 0.5f64;
        assert_abs_diff_eq!(rejection_decay_bound(1, 3, 0), 0.5 * th, epsilon = 1e-15);
        assert_abs_diff_eq!(rejection_decay_bound(4, 3, 3), 0.5 * (-3.0 * std::f64::consts::FRAC_PI_2).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(rejection_decay_bound(1, 3, 2), 0.0877, epsilon = 1e-4);
        for r in 0..10 {
            assert!(rejection_decay_bound(2, 7, r + 1) < rejection_decay_bound(2, 7, r));
        }
    }

    #[test]
    fn bounds_monotone() {
        for k in 1..20 {
            let a = statistical_bounds(1000, 0.05, k);
            let b = statistical_bounds(4000, 0.05, k);
            let c = statistical_bounds(1000, 0.05, k + 1);
            assert!(b.dkw < a.dkw && b.main < a.main && b.deviation < a.deviation && b.expected < a.expected);
            assert!(c.dkw > a.dkw && c.deviation > a.deviation && c.expected > a.expected);
        }
        for i in 1..20 {
            let dt = i as f64 * 0.05;
            assert!(discretization_bound(0.5, 2.0, dt + 0.01) > discretization_bound(0.5, 2.0, dt));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn expected_l_is_the_mean(rho in 0.0f64..0.999, k in 1usize..64) {
                let direct = mm1k_steady_state(rho, k).mean();
                prop_assert!((expected_l(rho, k).unwrap() - direct).abs() < 1e-10);
            }

            #[test]
            fn grover_success_in_unit_interval(k in 1usize..64, r in 0usize..10, m in 1usize..64) {
                let m = m.min(k + 1);
                let p = grover_success(m, k, r);
                prop_assert!((0.0..=1.0 + 1e-15).contains(&p));
            }
        }
    }
}
