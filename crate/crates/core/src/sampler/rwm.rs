//! Generic adaptive random-walk Metropolis engine.
//!
//! Proposals are `u' = u + lambda L z` with `z` standard normal. During the
//! first half of the run (the burn-in) two things adapt: the global step
//! size `lambda` follows a Robbins-Monro recursion pushing the acceptance
//! probability toward 0.234, and `L` is rebuilt from Welford accumulators of
//! the visited states, either as a diagonal of standard deviations or as a
//! Cholesky factor of the full sample covariance. After burn-in everything
//! is frozen and the second half of the chain is retained.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Target acceptance probability for the step-size recursion.
const TARGET_ACCEPT: f64 = 0.234;

/// Iterations of burn-in to observe before trusting the empirical scales.
const ADAPT_START: usize = 50;

/// Shape of the proposal covariance learned during burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalShape {
    /// Independent per-coordinate scales.
    Diagonal,
    /// Full covariance via a Cholesky factor.
    Dense,
}

/// Retained states and the acceptance rate measured after adaptation froze.
pub struct ChainOutput {
    pub kept: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
}

/// Running mean and (co)variance in the Welford form.
struct Accumulator {
    count: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
    dense: bool,
}

impl Accumulator {
    fn new(d: usize, dense: bool) -> Self {
        Accumulator { count: 0, mean: DVector::zeros(d), m2: DMatrix::zeros(d, d), dense }
    }

    fn update(&mut self, x: &DVector<f64>) {
        self.count += 1;
        let delta = x - &self.mean;
        self.mean += &delta / self.count as f64;
        let delta2 = x - &self.mean;
        if self.dense {
            self.m2 += &delta * delta2.transpose();
        } else {
            for j in 0..x.len() {
                self.m2[(j, j)] += delta[j] * delta2[j];
            }
        }
    }

    /// Lower-triangular factor of the current covariance estimate, with a
    /// small ridge so degenerate stretches of chain cannot zero a direction.
    fn factor(&self) -> Option<DMatrix<f64>> {
        if self.count < 2 {
            return None;
        }
        let d = self.mean.len();
        let mut cov = &self.m2 / (self.count - 1) as f64;
        let ridge = 1e-12 + 1e-8 * cov.trace() / d as f64;
        for j in 0..d {
            cov[(j, j)] += ridge;
        }
        if self.dense {
            cov.cholesky().map(|c| c.l())
        } else {
            let mut l = DMatrix::zeros(d, d);
            for j in 0..d {
                l[(j, j)] = cov[(j, j)].sqrt();
            }
            Some(l)
        }
    }
}

/// Run one chain against `log_target`, which must return a finite value at
/// `init` (non-finite proposals are simply rejected later on).
///
/// `n_iter` counts total iterations; the first `n_iter / 2` adapt and are
/// discarded, the rest are returned.
pub fn run_chain<F>(
    log_target: F,
    init: &[f64],
    init_scales: &[f64],
    n_iter: usize,
    shape: ProposalShape,
    rng: &mut ChaCha8Rng,
) -> Result<ChainOutput>
where
    F: Fn(&[f64]) -> f64,
{
    let d = init.len();
    if d == 0 || init_scales.len() != d {
        return Err(Error::invalid(
            "initial state and scales must be non-empty and equal length".to_string(),
        ));
    }
    if init_scales.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::invalid("initial proposal scales must be positive".to_string()));
    }
    if n_iter < 10 {
        return Err(Error::invalid(format!("n_iter = {n_iter} is too small to sample")));
    }

    let mut u = DVector::from_column_slice(init);
    let mut lp = log_target(u.as_slice());
    if !lp.is_finite() {
        return Err(Error::numerical(format!(
            "log target is {lp} at the initial state"
        )));
    }

    let burn = n_iter / 2;
    let mut log_lambda = (2.38 / (d as f64).sqrt()).ln();
    let mut l = DMatrix::zeros(d, d);
    for j in 0..d {
        l[(j, j)] = init_scales[j];
    }
    let dense = shape == ProposalShape::Dense;
    let mut acc = Accumulator::new(d, dense);

    let mut kept = Vec::with_capacity(n_iter - burn);
    let mut accepted_after_burn = 0usize;

    for t in 0..n_iter {
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let proposal = &u + (&l * z) * log_lambda.exp();
        let lp_new = log_target(proposal.as_slice());
        let log_ratio = lp_new - lp;
        // NaN from inf - inf counts as a rejection
        let alpha = if log_ratio.is_nan() { 0.0 } else { log_ratio.exp().min(1.0) };
        let accept = alpha > 0.0 && rng.random::<f64>() < alpha;
        if accept {
            u = proposal;
            lp = lp_new;
        }

        if t < burn {
            let gamma = ((t + 1) as f64).powf(-0.7);
            log_lambda = (log_lambda + gamma * (alpha - TARGET_ACCEPT)).clamp(-15.0, 10.0);
            acc.update(&u);
            if acc.count >= ADAPT_START {
                if let Some(f) = acc.factor() {
                    l = f;
                }
            }
        } else {
            if accept {
                accepted_after_burn += 1;
            }
            kept.push(u.as_slice().to_vec());
        }
    }

    let acceptance_rate = accepted_after_burn as f64 / (n_iter - burn) as f64;
    Ok(ChainOutput { kept, acceptance_rate })
}
