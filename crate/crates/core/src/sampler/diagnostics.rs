//! Convergence diagnostics: split-chain potential scale reduction and
//! autocorrelation-based effective sample size.

use crate::stats::{mean, quantile_sorted, sample_variance};
use crate::{Error, Result};

use super::PosteriorDraws;

fn validate_chains(chains: &[Vec<f64>]) -> Result<usize> {
    if chains.len() < 2 {
        return Err(Error::invalid(format!(
            "diagnostics need at least 2 chains, got {}",
            chains.len()
        )));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("chains must have equal length".to_string()));
    }
    if n < 4 {
        return Err(Error::invalid(format!(
            "diagnostics need at least 4 draws per chain, got {n}"
        )));
    }
    if chains.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numerical("chains contain non-finite values".to_string()));
    }
    Ok(n)
}

/// Split-chain potential scale reduction factor.
///
/// Each chain is cut in half; with `M` half-chains of length `N`,
/// within-variance `W` (mean of per-half sample variances) and
/// between-variance `B = N var(half means)`, the statistic is
/// `sqrt(((N-1)/N W + B/N) / W)`. Identical constant chains give 1.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    validate_chains(chains)?;
    let halves = split_in_half(chains);
    let n = halves[0].len() as f64;
    let w = mean(&halves.iter().map(|h| sample_variance(h)).collect::<Vec<_>>());
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let b_over_n = sample_variance(&means);
    if w == 0.0 {
        return Ok(if b_over_n == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let var_plus = (n - 1.0) / n * w + b_over_n;
    Ok((var_plus / w).sqrt())
}

fn split_in_half(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut halves = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let h = c.len() / 2;
        // drop the middle draw of an odd-length chain
        halves.push(c[..h].to_vec());
        halves.push(c[c.len() - h..].to_vec());
    }
    halves
}

/// Effective sample size of the pooled chains.
///
/// Uses combined-chain autocorrelations
/// `rho_t = 1 - (W - mean_m acov_m(t)) / var_plus` summed in adjacent pairs
/// until the first pair with a negative sum (the initial positive sequence
/// rule), giving `ESS = S / (1 + 2 sum_t rho_t)`. A zero-variance column
/// returns `S`, and the estimate is capped at `S`.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    let n = validate_chains(chains)?;
    let m = chains.len();
    let total = (n * m) as f64;

    let chain_means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let chain_vars: Vec<f64> = chains.iter().map(|c| sample_variance(c)).collect();
    let w = mean(&chain_vars);
    let var_plus = w * (n as f64 - 1.0) / n as f64 + sample_variance(&chain_means);
    if var_plus == 0.0 {
        return Ok(total);
    }

    let acov_at = |t: usize| -> f64 {
        let mut acc = 0.0;
        for (c, cm) in chains.iter().zip(&chain_means) {
            let mut s = 0.0;
            for i in 0..(n - t) {
                s += (c[i] - cm) * (c[i + t] - cm);
            }
            acc += s / n as f64;
        }
        acc / m as f64
    };

    let rho_at = |t: usize| 1.0 - (w - acov_at(t)) / var_plus;

    // Geyer pairs (rho_0 + rho_1), (rho_2 + rho_3), ...
    let mut pair_total = 0.0;
    let mut t = 0;
    while t + 1 < n {
        let even = if t == 0 { 1.0 } else { rho_at(t) };
        let odd = rho_at(t + 1);
        let pair = even + odd;
        if pair <= 0.0 {
            break;
        }
        pair_total += pair;
        t += 2;
    }
    let tau = (2.0 * pair_total - 1.0).max(1e-3);
    Ok((total / tau).min(total))
}

/// Posterior summary of one parameter column.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub parameter: String,
    pub mean: f64,
    pub q2_5: f64,
    pub median: f64,
    pub q97_5: f64,
    pub ess: f64,
    pub rhat: f64,
}

/// Summarize every parameter column of a set of posterior draws.
pub fn summarize(draws: &PosteriorDraws) -> Result<Vec<SummaryRow>> {
    let names = draws.param_names();
    let mut rows = Vec::with_capacity(names.len());
    for (j, parameter) in names.into_iter().enumerate() {
        let pooled = draws.column(j);
        let chains = draws.column_by_chain(j);
        let mut sorted = pooled.clone();
        sorted.sort_by(f64::total_cmp);
        rows.push(SummaryRow {
            parameter,
            mean: mean(&pooled),
            q2_5: quantile_sorted(&sorted, 0.025),
            median: quantile_sorted(&sorted, 0.5),
            q97_5: quantile_sorted(&sorted, 0.975),
            ess: ess(&chains)?,
            rhat: split_rhat(&chains)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn iid_chains(n_chains: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..n_chains)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            })
            .collect()
    }

    #[test]
    fn rhat_near_one_for_iid_chains() {
        let chains = iid_chains(4, 2000, 11);
        let r = split_rhat(&chains).unwrap();
        assert!((r - 1.0).abs() < 0.01, "rhat {r} not close to 1");
    }

    #[test]
    fn rhat_large_for_shifted_chains() {
        let mut chains = iid_chains(2, 1000, 5);
        for v in &mut chains[1] {
            *v += 10.0;
        }
        let r = split_rhat(&chains).unwrap();
        assert!(r > 3.0, "rhat {r} should flag disjoint chains");
    }

    #[test]
    fn rhat_of_identical_constant_chains_is_one() {
        let chains = vec![vec![2.0; 100], vec![2.0; 100]];
        assert_eq!(split_rhat(&chains).unwrap(), 1.0);
    }

    #[test]
    fn rhat_detects_within_chain_drift() {
        // a trending chain disagrees with its own halves
        let trend: Vec<f64> = (0..1000).map(|i| i as f64 / 100.0).collect();
        let chains = vec![trend.clone(), trend];
        let r = split_rhat(&chains).unwrap();
        assert!(r > 1.5, "rhat {r} should flag trending chains");
    }

    #[test]
    fn ess_close_to_sample_size_for_iid() {
        let chains = iid_chains(2, 3000, 21);
        let total = 6000.0;
        let e = ess(&chains).unwrap();
        assert!(e > 0.5 * total && e <= 1.5 * total, "iid ESS {e} out of range");
    }

    #[test]
    fn ess_matches_ar1_theory_within_factor_two() {
        // AR(1) with coefficient phi has ESS ratio (1 - phi) / (1 + phi)
        let phi: f64 = 0.9;
        let n = 20000;
        let chains: Vec<Vec<f64>> = (0..2)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(31);
                rng.set_stream(c);
                let mut x = 0.0;
                let innov_sd = (1.0 - phi * phi).sqrt();
                (0..n)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        x = phi * x + innov_sd * z;
                        x
                    })
                    .collect()
            })
            .collect();
        let e = ess(&chains).unwrap();
        let expect = 2.0 * n as f64 * (1.0 - phi) / (1.0 + phi);
        assert!(
            e > expect / 2.0 && e < expect * 2.0,
            "ESS {e} not within factor 2 of {expect}"
        );
    }

    #[test]
    fn ess_of_constant_chains_is_total() {
        let chains = vec![vec![1.5; 50], vec![1.5; 50]];
        assert_eq!(ess(&chains).unwrap(), 100.0);
    }

    #[test]
    fn diagnostics_validate_input() {
        assert!(split_rhat(&[vec![1.0, 2.0, 3.0, 4.0]]).is_err());
        assert!(split_rhat(&[vec![1.0, 2.0], vec![1.0, 2.0]]).is_err());
        assert!(ess(&[vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0]]).is_err());
        assert!(ess(&[vec![1.0, f64::NAN, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]]).is_err());
    }
}
