//! Posterior sampling for the SAR model.
//!
//! The sampler works on the unconstrained vector
//! `u = (atanh(rho), log(sigma), beta...)`, where every point maps to valid
//! parameters, so proposals never leave the support. The target density
//! picks up the change-of-variables terms `log(1 - rho^2)` for the spatial
//! coefficient and `log(2 sigma^2)` for the prior on `sigma^2`.

mod diagnostics;
pub mod rwm;

pub use diagnostics::{ess, split_rhat, summarize, SummaryRow};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{self, PriorConfig, SarDataset, SarParams};
use crate::{Error, Result};

/// How many times per chain to redraw the jittered start when the posterior
/// kernel is not finite there.
const INIT_RETRIES: usize = 100;

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitConfig {
    /// Number of independent chains, between 2 and 4.
    pub n_chains: u32,
    /// Iterations per chain; the first half is burn-in and discarded.
    pub n_iter: u32,
    pub seed: u64,
    pub prior: PriorConfig,
    /// Chains run on this many worker threads; 0 means one per chain.
    #[serde(default)]
    pub threads: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_chains: 2,
            n_iter: 10_000,
            seed: 0,
            prior: PriorConfig::default(),
            threads: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.n_chains) {
            return Err(Error::invalid(format!(
                "n_chains = {} outside 2..=4",
                self.n_chains
            )));
        }
        if self.n_iter < 20 {
            return Err(Error::invalid(format!(
                "n_iter = {} is too small; need at least 20",
                self.n_iter
            )));
        }
        self.prior.validate()
    }
}

/// Posterior draws in the column order `(rho, sigma, beta0, ..., betak)`,
/// grouped by chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    values: DMatrix<f64>,
    chain_ids: Vec<u32>,
    n_chains: u32,
    acceptance_rates: Vec<f64>,
}

impl PosteriorDraws {
    /// Assemble draws from raw parts, checking shape, finiteness, parameter
    /// ranges, and that chains are contiguous with equal draw counts.
    pub fn from_parts(values: DMatrix<f64>, chain_ids: Vec<u32>, n_chains: u32) -> Result<Self> {
        if values.ncols() < 3 {
            return Err(Error::invalid(format!(
                "draw matrix needs at least 3 columns (rho, sigma, beta0), got {}",
                values.ncols()
            )));
        }
        if values.nrows() == 0 || values.nrows() != chain_ids.len() {
            return Err(Error::invalid(format!(
                "draw matrix has {} rows but {} chain labels",
                values.nrows(),
                chain_ids.len()
            )));
        }
        if n_chains == 0 {
            return Err(Error::invalid("n_chains must be positive"));
        }
        let mut counts = vec![0usize; n_chains as usize];
        for (i, &c) in chain_ids.iter().enumerate() {
            if c >= n_chains {
                return Err(Error::invalid(format!(
                    "chain label {c} at row {i} exceeds chain count {n_chains}"
                )));
            }
            if i > 0 && c < chain_ids[i - 1] {
                return Err(Error::invalid(
                    "chain labels must be grouped in ascending order".to_string(),
                ));
            }
            counts[c as usize] += 1;
        }
        if counts.iter().any(|&c| c != counts[0]) {
            return Err(Error::invalid(format!(
                "chains have unequal draw counts {counts:?}"
            )));
        }
        for s in 0..values.nrows() {
            let rho = values[(s, 0)];
            let sigma = values[(s, 1)];
            if !rho.is_finite() || rho.abs() >= 1.0 {
                return Err(Error::invalid(format!(
                    "draw {s} has rho = {rho} outside (-1, 1)"
                )));
            }
            if !sigma.is_finite() || sigma <= 0.0 {
                return Err(Error::invalid(format!(
                    "draw {s} has non-positive sigma = {sigma}"
                )));
            }
            for j in 2..values.ncols() {
                if !values[(s, j)].is_finite() {
                    return Err(Error::invalid(format!(
                        "draw {s} has a non-finite coefficient"
                    )));
                }
            }
        }
        Ok(PosteriorDraws { values, chain_ids, n_chains, acceptance_rates: Vec::new() })
    }

    pub fn n_draws(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.values.ncols()
    }

    /// Number of covariates the fitted model used (excluding the intercept).
    pub fn k(&self) -> usize {
        self.values.ncols() - 3
    }

    pub fn n_chains(&self) -> u32 {
        self.n_chains
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn chain_ids(&self) -> &[u32] {
        &self.chain_ids
    }

    /// Post-adaptation acceptance rate per chain. Empty when the draws were
    /// reassembled from a file rather than produced by [`fit`].
    pub fn acceptance_rates(&self) -> &[f64] {
        &self.acceptance_rates
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["rho".to_string(), "sigma".to_string()];
        for j in 0..(self.n_params() - 2) {
            names.push(format!("beta{j}"));
        }
        names
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// One vector per chain for column `j`, in chain order.
    pub fn column_by_chain(&self, j: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.n_chains as usize];
        for (i, &c) in self.chain_ids.iter().enumerate() {
            out[c as usize].push(self.values[(i, j)]);
        }
        out
    }

    /// Parameters of draw `s`.
    pub fn params_at(&self, s: usize) -> Result<SarParams> {
        if s >= self.n_draws() {
            return Err(Error::invalid(format!(
                "draw index {s} outside 0..{}",
                self.n_draws()
            )));
        }
        let row: Vec<f64> = self.values.row(s).iter().copied().collect();
        SarParams::from_slice(&row)
    }
}

/// Stable `log(1 - tanh(u)^2)`.
fn log1m_tanh_sq(u: f64) -> f64 {
    let a = u.abs();
    (4.0f64).ln() - 2.0 * (a + (-2.0 * a).exp().ln_1p())
}

fn to_unconstrained(params: &SarParams) -> Vec<f64> {
    let mut u = Vec::with_capacity(params.beta.len() + 2);
    u.push(params.rho.atanh());
    u.push(params.sigma.ln());
    u.extend(params.beta.iter());
    u
}

fn from_unconstrained(u: &[f64]) -> SarParams {
    SarParams {
        rho: u[0].tanh(),
        sigma: u[1].exp(),
        beta: DVector::from_column_slice(&u[2..]),
    }
}

/// Log target on the unconstrained scale: posterior kernel plus the
/// change-of-variables terms. Non-finite values collapse to `-inf` so the
/// Metropolis step rejects them.
fn log_target_unconstrained(data: &SarDataset, prior: &PriorConfig, u: &[f64]) -> f64 {
    let params = from_unconstrained(u);
    if params.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    match model::log_posterior_kernel(data, &params, prior) {
        Ok(kernel) => {
            let jacobian = log1m_tanh_sq(u[0]) + 2.0f64.ln() + 2.0 * u[1];
            let v = kernel + jacobian;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Least-squares center and rough per-coordinate scales used to start the
/// chains.
fn initial_state(data: &SarDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = data.design();
    let (beta, mut sd) = crate::linalg::ols(x, data.outcomes())?;
    if !sd.is_finite() || sd < 1e-3 {
        sd = 1e-3;
    }
    let center = to_unconstrained(&SarParams {
        rho: 0.0,
        sigma: sd,
        beta: beta.clone(),
    });
    let xtx_inv = (x.transpose() * x).try_inverse();
    let mut scales = vec![0.15, 0.15];
    for j in 0..beta.len() {
        let se = match &xtx_inv {
            Some(inv) => (inv[(j, j)].max(0.0)).sqrt() * sd,
            None => 0.1,
        };
        scales.push(se.clamp(0.05, 10.0));
    }
    Ok((center, scales))
}

fn run_one_chain(
    data: &SarDataset,
    cfg: &FitConfig,
    center: &[f64],
    scales: &[f64],
    chain: u32,
) -> Result<rwm::ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64 + 1);
    let prior = cfg.prior;
    let target = |u: &[f64]| log_target_unconstrained(data, &prior, u);

    let mut init = Vec::new();
    let mut found = false;
    for _ in 0..INIT_RETRIES {
        init = center
            .iter()
            .zip(scales)
            .map(|(c, s)| c + 2.0 * s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if target(&init).is_finite() {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::numerical(format!(
            "posterior kernel non-finite at every start tried for chain {chain} \
             ({INIT_RETRIES} attempts)"
        )));
    }
    rwm::run_chain(
        target,
        &init,
        scales,
        cfg.n_iter as usize,
        rwm::ProposalShape::Dense,
        &mut rng,
    )
}

/// Sample the posterior with adaptive random-walk Metropolis chains.
///
/// Each chain gets its own ChaCha substream of `cfg.seed`, starts from a
/// jittered least-squares solution, adapts during the first `n_iter / 2`
/// iterations, and keeps the second half. Results are identical for a given
/// seed regardless of thread count.
pub fn fit(data: &SarDataset, cfg: &FitConfig) -> Result<PosteriorDraws> {
    cfg.validate()?;
    let (center, scales) = initial_state(data)?;

    let n_chains = cfg.n_chains as usize;
    let mut outputs: Vec<Option<Result<rwm::ChainOutput>>> = Vec::new();
    outputs.resize_with(n_chains, || None);

    let workers = if cfg.threads == 0 { n_chains } else { cfg.threads.max(1) };
    if workers == 1 {
        for (c, slot) in outputs.iter_mut().enumerate() {
            *slot = Some(run_one_chain(data, cfg, &center, &scales, c as u32));
        }
    } else {
        let mut pending: Vec<(usize, &mut Option<Result<rwm::ChainOutput>>)> =
            outputs.iter_mut().enumerate().collect();
        while !pending.is_empty() {
            let batch: Vec<_> = pending
                .drain(..workers.min(pending.len()))
                .collect();
            std::thread::scope(|scope| {
                for (c, slot) in batch {
                    let center = &center;
                    let scales = &scales;
                    scope.spawn(move || {
                        *slot = Some(run_one_chain(data, cfg, center, scales, c as u32));
                    });
                }
            });
        }
    }

    let kept_per_chain = cfg.n_iter as usize - cfg.n_iter as usize / 2;
    let total = kept_per_chain * n_chains;
    let n_params = center.len();
    let mut values = DMatrix::zeros(total, n_params);
    let mut chain_ids = Vec::with_capacity(total);
    let mut acceptance_rates = Vec::with_capacity(n_chains);
    let mut row = 0;
    for (c, slot) in outputs.into_iter().enumerate() {
        let out = slot.expect("chain result present")?;
        acceptance_rates.push(out.acceptance_rate);
        for u in &out.kept {
            let p = from_unconstrained(u);
            values[(row, 0)] = p.rho;
            values[(row, 1)] = p.sigma;
            for j in 0..p.beta.len() {
                values[(row, 2 + j)] = p.beta[j];
            }
            chain_ids.push(c as u32);
            row += 1;
        }
    }
    let mut draws = PosteriorDraws::from_parts(values, chain_ids, cfg.n_chains)?;
    draws.acceptance_rates = acceptance_rates;
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_adjacency, random_node_list, row_standardize};
    use crate::stats::sample_variance;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ring_dataset(n: usize, rho: f64, sigma: f64, beta0: f64, seed: u64) -> SarDataset {
        let nodes: Vec<usize> =
            (1..=n).flat_map(|i| [i, if i == n { 1 } else { i + 1 }]).collect();
        let adj = build_adjacency(&nodes, n).unwrap();
        let w = row_standardize(&adj).unwrap();
        let params = SarParams::new(rho, sigma, vec![beta0]).unwrap();
        let y = model::sar_simulate(&w, &DMatrix::zeros(n, 0), &params, seed).unwrap();
        SarDataset::new(y, DMatrix::zeros(n, 0), w).unwrap()
    }

    #[test]
    fn transform_round_trips() {
        let p = SarParams::new(0.73, 2.5, vec![1.0, -0.5]).unwrap();
        let u = to_unconstrained(&p);
        let q = from_unconstrained(&u);
        assert_relative_eq!(p.rho, q.rho, epsilon = 1e-12);
        assert_relative_eq!(p.sigma, q.sigma, epsilon = 1e-12);
        assert_relative_eq!(p.beta[1], q.beta[1], epsilon = 1e-12);
    }

    #[test]
    fn log1m_tanh_sq_is_stable() {
        assert_relative_eq!(log1m_tanh_sq(0.0), 0.0, epsilon = 1e-14);
        let direct = (1.0f64 - 0.9f64.atanh().tanh().powi(2)).ln();
        assert_relative_eq!(log1m_tanh_sq(0.9f64.atanh()), direct, epsilon = 1e-10);
        // far in the tail the direct form collapses to -inf, this one must not
        assert!(log1m_tanh_sq(40.0).is_finite());
    }

    #[test]
    fn fit_is_deterministic_and_thread_invariant() {
        let data = ring_dataset(20, 0.4, 1.0, 1.0, 5);
        let cfg = FitConfig { n_chains: 2, n_iter: 400, seed: 9, threads: 1, ..Default::default() };
        let a = fit(&data, &cfg).unwrap();
        let b = fit(&data, &cfg).unwrap();
        assert_eq!(a.values(), b.values());
        let cfg2 = FitConfig { threads: 2, ..cfg };
        let c = fit(&data, &cfg2).unwrap();
        assert_eq!(a.values(), c.values());
        assert_eq!(a.chain_ids(), c.chain_ids());
    }

    #[test]
    fn fit_shape_and_rates() {
        let data = ring_dataset(20, 0.4, 1.0, 1.0, 6);
        let cfg =
            FitConfig { n_chains: 3, n_iter: 501, seed: 10, threads: 0, ..Default::default() };
        let draws = fit(&data, &cfg).unwrap();
        // odd n_iter keeps the larger half
        assert_eq!(draws.n_draws(), 3 * (501 - 250));
        assert_eq!(draws.n_params(), 3);
        assert_eq!(draws.param_names(), vec!["rho", "sigma", "beta0"]);
        assert_eq!(draws.acceptance_rates().len(), 3);
        for r in draws.acceptance_rates() {
            assert!(*r > 0.0 && *r < 1.0);
        }
    }

    /// The strongest check on the sampler: on a small dataset the posterior
    /// over `(rho, sigma, beta0)` can be integrated by brute force, and the
    /// chains must land on the same moments.
    #[test]
    fn fit_matches_exact_grid_posterior() {
        let data = ring_dataset(12, 0.5, 1.0, 1.0, 42);
        let prior = PriorConfig::default();

        // midpoint rule over the full rho support and a box that extends
        // many posterior sds beyond the bulk on the other two axes
        let cells = 120usize;
        let (s_lo, s_hi) = (0.02, 5.0);
        let (b_lo, b_hi) = (-6.0, 8.0);
        let mut wsum = 0.0f64;
        let mut mean = [0.0f64; 3];
        let mut sq = [0.0f64; 3];
        let mut lps = Vec::with_capacity(cells * cells * cells);
        let mut pts = Vec::with_capacity(cells * cells * cells);
        for ir in 0..cells {
            let rho = -1.0 + (ir as f64 + 0.5) * 2.0 / cells as f64;
            for is_ in 0..cells {
                let sig = s_lo + (is_ as f64 + 0.5) * (s_hi - s_lo) / cells as f64;
                for ib in 0..cells {
                    let b = b_lo + (ib as f64 + 0.5) * (b_hi - b_lo) / cells as f64;
                    let p = SarParams::new(rho, sig, vec![b]).unwrap();
                    // density over sigma rather than sigma^2
                    let lp = model::log_posterior_kernel(&data, &p, &prior).unwrap()
                        + (2.0 * sig).ln();
                    lps.push(lp);
                    pts.push([rho, sig, b]);
                }
            }
        }
        let lmax = lps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (lp, pt) in lps.iter().zip(&pts) {
            let w = (lp - lmax).exp();
            wsum += w;
            for j in 0..3 {
                mean[j] += w * pt[j];
                sq[j] += w * pt[j] * pt[j];
            }
        }
        let mut sd = [0.0f64; 3];
        for j in 0..3 {
            mean[j] /= wsum;
            sd[j] = (sq[j] / wsum - mean[j] * mean[j]).sqrt();
        }

        let cfg =
            FitConfig { n_chains: 2, n_iter: 20_000, seed: 7, threads: 0, ..Default::default() };
        let draws = fit(&data, &cfg).unwrap();
        let rows = summarize(&draws).unwrap();
        for (j, row) in rows.iter().enumerate() {
            assert!(row.rhat < 1.02, "{} rhat {}", row.parameter, row.rhat);
            // roughly four Monte Carlo standard errors at the observed ess
            let tol = 4.0 * sd[j] / row.ess.sqrt() + 0.01;
            assert!(
                (row.mean - mean[j]).abs() < tol,
                "{}: sampler mean {} vs grid {} (tol {tol})",
                row.parameter,
                row.mean,
                mean[j]
            );
            let sample_sd = sample_variance(&draws.column(j)).sqrt();
            assert!(
                (sample_sd - sd[j]).abs() < 0.12 * sd[j],
                "{}: sampler sd {} vs grid {}",
                row.parameter,
                sample_sd,
                sd[j]
            );
        }
    }

    #[test]
    fn fit_with_random_graph_and_covariates() {
        let n = 40;
        // seed chosen so the random graph leaves no node isolated
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nodes = random_node_list(n, 4 * n, &mut rng);
        let adj = build_adjacency(&nodes, n).unwrap();
        let w = row_standardize(&adj).unwrap();
        let covs = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal) + 1.0);
        let params = SarParams::new(0.6, 0.8, vec![0.5, 0.3]).unwrap();
        let y = model::sar_simulate(&w, &covs, &params, 13).unwrap();
        let data = SarDataset::new(y, covs, w).unwrap();
        let cfg =
            FitConfig { n_chains: 2, n_iter: 1000, seed: 4, threads: 0, ..Default::default() };
        let draws = fit(&data, &cfg).unwrap();
        assert_eq!(draws.n_params(), 4);
        assert_eq!(draws.k(), 1);
        for s in (0..draws.n_draws()).step_by(97) {
            let p = draws.params_at(s).unwrap();
            assert!(p.rho.abs() < 1.0 && p.sigma > 0.0);
        }
    }

    #[test]
    fn config_validation() {
        let bad_chains = FitConfig { n_chains: 1, ..Default::default() };
        assert!(bad_chains.validate().is_err());
        let bad_chains = FitConfig { n_chains: 5, ..Default::default() };
        assert!(bad_chains.validate().is_err());
        let bad_iter = FitConfig { n_iter: 10, ..Default::default() };
        assert!(bad_iter.validate().is_err());
    }

    #[test]
    fn from_parts_validation() {
        let good = DMatrix::from_row_slice(2, 3, &[0.1, 1.0, 0.0, 0.2, 1.1, 0.1]);
        assert!(PosteriorDraws::from_parts(good.clone(), vec![0, 1], 2).is_ok());
        // bad rho
        let bad = DMatrix::from_row_slice(2, 3, &[1.1, 1.0, 0.0, 0.2, 1.1, 0.1]);
        assert!(PosteriorDraws::from_parts(bad, vec![0, 1], 2).is_err());
        // unequal chain sizes
        assert!(PosteriorDraws::from_parts(good.clone(), vec![0, 0], 2).is_err());
        // ungrouped labels
        let four = DMatrix::from_row_slice(
            4,
            3,
            &[0.1, 1.0, 0.0, 0.2, 1.1, 0.1, 0.1, 1.0, 0.0, 0.2, 1.1, 0.1],
        );
        assert!(PosteriorDraws::from_parts(four, vec![0, 1, 0, 1], 2).is_err());
    }
}
