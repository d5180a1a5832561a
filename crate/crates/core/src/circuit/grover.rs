//! Amplitude amplification of a window around the mean queue length.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::analytic::{grover_angle, mean_queue_length};
use crate::error::{Error, Result};
use crate::qcore::{phase_flip, reflect_about, ProbVector, Register, StateVector};

use super::params::{qubits_for, CenterRule, QueueParams, Schedule};

fn center(rule: CenterRule, rho: f64, k: usize) -> usize {
    let c = match rule {
        CenterRule::TakacsMean => mean_queue_length(rho, k).round(),
        CenterRule::FloorRatio => {
            if rho < 1.0 {
                (rho / (1.0 - rho)).floor()
            } else {
                k as f64
            }
        }
        CenterRule::ScaledLoad => (rho * (k + 1) as f64).floor(),
    };
    (c.max(0.0) as usize).min(k)
}

/// `{n : max(0, c−ε) ≤ n ≤ min(K, c+ε)}`.
pub fn marked_set_for(k: usize, center: usize, eps: usize) -> Vec<usize> {
    (center.saturating_sub(eps)..=(center + eps).min(k)).collect()
}

pub fn marked_set(params: &QueueParams) -> Vec<usize> {
    let c = center(params.center, params.rho(), params.k);
    marked_set_for(params.k, c, params.epsilon0())
}

pub fn grover_iterations(k: usize, m_size: usize, schedule: Schedule) -> usize {
    let states = (k + 1) as f64;
    match schedule {
        Schedule::Paper => (PI / 4.0 * (states / m_size as f64).sqrt()).ceil() as usize,
        Schedule::Optimal => {
            let th = grover_angle(m_size, k);
            (PI / (4.0 * th) - 0.5).round().max(0.0) as usize
        }
        Schedule::Fixed(r) => r,
    }
}

fn uniform_legal(q: usize, k: usize) -> Result<StateVector> {
    let a = 1.0 / ((k + 1) as f64).sqrt();
    StateVector::from_real(q, &vec![a; k + 1])
}

/// Starts from amplitudes `√p` on `⌈log₂(K+1)⌉` qubits and applies `r`
/// rounds of marked-set phase flip followed by reflection about the uniform
/// legal state. Returns the state and the marked mass.
pub fn grover_amplify(p: &ProbVector, marked: &[usize], r: usize) -> Result<(StateVector, f64)> {
    let k = p.len() - 1;
    if marked.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if let Some(&n) = marked.iter().find(|&&n| n > k) {
        return Err(Error::DimensionMismatch { expected: k + 1, got: n + 1 });
    }
    let q = qubits_for(k);
    let reg = Register::new(0, q);
    let axis = uniform_legal(q, k)?;
    let mut s = StateVector::from_probs(q, p)?;
    let mut is_marked = vec![false; 1 << q];
    for &n in marked {
        is_marked[n] = true;
    }
    for _ in 0..r {
        phase_flip(&mut s, reg, |n| is_marked[n])?;
        reflect_about(&mut s, &axis)?;
    }
    let succ = marked.iter().map(|&n| s.amplitudes()[n].norm_sqr()).sum();
    Ok((s, succ))
}

/// Matrix of one amplification round on the full `2^Q` register,
/// `[row][column]`.
pub fn grover_iterate_matrix(k: usize, marked: &[usize]) -> Result<Vec<Vec<Complex64>>> {
    let q = qubits_for(k);
    let dim = 1usize << q;
    let reg = Register::new(0, q);
    let axis = uniform_legal(q, k)?;
    let mut cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut s = StateVector::basis(q, j)?;
        phase_flip(&mut s, reg, |n| marked.contains(&n))?;
        reflect_about(&mut s, &axis)?;
        cols.push(s.amplitudes().to_vec());
    }
    Ok((0..dim).map(|i| (0..dim).map(|j| cols[j][i]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::grover_success;
    use crate::dist::ServiceDistribution;
    use approx::assert_abs_diff_eq;

    #[test]
    fn marked_set_examples() {
        let mut p = QueueParams::new(0.25, ServiceDistribution::exponential(1.0).unwrap(), 3);
        p.epsilon0 = super::super::EpsilonRule::Fixed(1);
        assert_eq!(marked_set(&p), vec![0, 1]);
        p.epsilon0 = super::super::EpsilonRule::Fixed(3);
        assert_eq!(marked_set(&p), vec![0, 1, 2, 3]);
        p.epsilon0 = super::super::EpsilonRule::Fixed(0);
        assert_eq!(marked_set(&p), vec![0]);
        assert_eq!(marked_set_for(10, 9, 2), vec![7, 8, 9, 10]);
    }

    #[test]
    fn center_rules() {
        assert_eq!(center(CenterRule::TakacsMean, 0.25, 3), 0);
        assert_eq!(center(CenterRule::TakacsMean, 0.95, 15), 6);
        assert_eq!(center(CenterRule::FloorRatio, 0.75, 15), 3);
        assert_eq!(center(CenterRule::FloorRatio, 1.5, 15), 15);
        assert_eq!(center(CenterRule::ScaledLoad, 0.5, 15), 8);
        // overloaded queues sit near the top
        assert_eq!(center(CenterRule::TakacsMean, 2.5, 31), 30);
    }

    #[test]
    fn iteration_schedules() {
        assert_eq!(grover_iterations(3, 1, Schedule::Paper), 2);
        assert_abs_diff_eq!(grover_success(1, 3, 2), 0.25, epsilon = 1e-12);
        assert_eq!(grover_iterations(3, 1, Schedule::Optimal), 1);
        assert_abs_diff_eq!(grover_success(1, 3, 1), 1.0, epsilon = 1e-12);
        assert_eq!(grover_iterations(7, 8, Schedule::Optimal), 0);
        assert_eq!(grover_iterations(7, 8, Schedule::Fixed(4)), 4);
    }

    #[test]
    fn amplify_examples() {
        let u = ProbVector::uniform(4);
        let (_, succ) = grover_amplify(&u, &[3], 1).unwrap();
        assert_abs_diff_eq!(succ, 1.0, epsilon = 1e-9);

        let p = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let (s, succ) = grover_amplify(&p, &[1, 2], 0).unwrap();
        assert_abs_diff_eq!(succ, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[3].re, 0.4f64.sqrt(), epsilon = 1e-15);

        let u = ProbVector::uniform(16);
        let r = grover_iterations(15, 4, Schedule::Optimal);
        let (_, succ) = grover_amplify(&u, &[4, 5, 6, 7], r).unwrap();
        assert_abs_diff_eq!(succ, grover_success(4, 15, r), epsilon = 1e-9);
    }

    #[test]
    fn illegal_states_stay_empty() {
        let u = ProbVector::uniform(6);
        for r in 0..6 {
            let (s, _) = grover_amplify(&u, &[2], r).unwrap();
            assert!(s.amplitudes()[6..].iter().all(|a| *a == Complex64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn legal_block_is_plain_grover() {
        let k = 5;
        let m = grover_iterate_matrix(k, &[1, 2]).unwrap();
        let d = (k + 1) as f64;
        for i in 0..=k {
            for j in 0..=k {
                let refl = 2.0 / d - if i == j { 1.0 } else { 0.0 };
                let sign = if [1, 2].contains(&j) { -1.0 } else { 1.0 };
                assert_abs_diff_eq!(m[i][j].re, refl * sign, epsilon = 1e-12);
            }
            for j in k + 1..8 {
                assert_eq!(m[i][j], Complex64::new(0.0, 0.0));
                assert_eq!(m[j][i], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn empty_region_rejected() {
        assert!(matches!(grover_amplify(&ProbVector::uniform(4), &[], 1), Err(Error::EmptyRegion)));
    }
}
