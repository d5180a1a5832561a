//! Rejection filter that maps amplified samples back to a target law.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::qcore::ProbVector;

fn acceptance(target: &ProbVector, hat: &ProbVector, n: usize) -> Result<f64> {
    if n >= hat.len() || n >= target.len() {
        return Err(Error::DimensionMismatch { expected: hat.len().min(target.len()), got: n + 1 });
    }
    if hat[n] <= 0.0 {
        return Err(Error::ProposalSupport { state: n });
    }
    Ok((target[n] / hat[n]).min(1.0))
}

/// Keeps each sample `n` with probability `min(1, π_n / π̂_n)`.
pub fn rejection_filter<R: Rng + ?Sized>(
    samples: &[usize],
    pi_target: &ProbVector,
    pi_hat: &ProbVector,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut kept = Vec::with_capacity(samples.len());
    for &n in samples {
        let a = acceptance(pi_target, pi_hat, n)?;
        if a >= 1.0 || rng.random::<f64>() < a {
            kept.push(n);
        }
    }
    Ok(kept)
}

/// Histogram form of [`rejection_filter`]: the accepted count of each state
/// is a binomial thinning of its raw count.
pub fn rejection_filter_counts<R: Rng + ?Sized>(
    counts: &[u64],
    pi_target: &ProbVector,
    pi_hat: &ProbVector,
    rng: &mut R,
) -> Result<Vec<u64>> {
    counts
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            if c == 0 {
                return Ok(0);
            }
            let a = acceptance(pi_target, pi_hat, n)?;
            Ok(if a >= 1.0 { c } else { Binomial::new(c, a).unwrap().sample(rng) })
        })
        .collect()
}
