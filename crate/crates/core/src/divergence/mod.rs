//! Bregman-divergence case diagnostics.
//!
//! Influence of a single observation is measured by the divergence between
//! the posterior built from the observed outcomes and the posterior built
//! from the same outcomes with that observation replaced by an imputed
//! value. The family of divergences comes from the convex generators
//!
//! ```text
//! psi_a(x) = (x^a - a x + a - 1) / (a^2 - a)      a not in {0, 1}
//! psi_1(x) = x log x - x + 1                       (Kullback-Leibler)
//! psi_0(x) = -log x + x - 1                        (Itakura-Saito)
//! ```
//!
//! and the divergence `D(f1, f2) = int psi(f1) - psi(f2) - (f1 - f2)
//! psi'(f2)`, estimated by averaging `[...]/f1` over posterior draws.
//! Densities are normalized with a reciprocal-importance estimator driven by
//! a moment-matched auxiliary density; all density work stays in log space,
//! and any exponentiation that would underflow is clamped to the smallest
//! positive double and counted.

mod aux;

pub use aux::{AuxKind, AuxiliaryDensity};

use nalgebra::{DMatrix, DVector};

use crate::model::{self, PriorConfig, SarDataset, SarParams};
use crate::sampler::PosteriorDraws;
use crate::stats::{log_mean_exp, mean, quantile_sorted};
use crate::{Error, Result};

/// Convex generator of the divergence family.
pub fn psi(x: f64, alpha: f64) -> Result<f64> {
    check_psi_args(x, alpha)?;
    Ok(if alpha == 2.0 {
        (x * x - 2.0 * x + 1.0) / 2.0
    } else if alpha == 1.0 {
        x * x.ln() - x + 1.0
    } else if alpha == 0.0 {
        -x.ln() + x - 1.0
    } else {
        (x.powf(alpha) - alpha * x + alpha - 1.0) / (alpha * alpha - alpha)
    })
}

/// Derivative of [`psi`] in its first argument.
pub fn psi_prime(x: f64, alpha: f64) -> Result<f64> {
    check_psi_args(x, alpha)?;
    Ok(if alpha == 2.0 {
        x - 1.0
    } else if alpha == 1.0 {
        x.ln()
    } else if alpha == 0.0 {
        1.0 - 1.0 / x
    } else {
        (alpha * x.powf(alpha - 1.0) - alpha) / (alpha * alpha - alpha)
    })
}

fn check_psi_args(x: f64, alpha: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(format!("psi argument x = {x} must be positive")));
    }
    if !alpha.is_finite() {
        return Err(Error::invalid(format!("psi order alpha = {alpha} must be finite")));
    }
    Ok(())
}

/// How per-draw divergences are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputType {
    /// Mean over draws, one divergence per observation.
    PerObservation,
    /// Share of draws on which each observation attains the row maximum.
    SupremeProportion,
}

impl TryFrom<u8> for OutputType {
    type Error = Error;

    fn try_from(code: u8) -> Result<Self> {
        match code {
            1 => Ok(OutputType::PerObservation),
            2 => Ok(OutputType::SupremeProportion),
            other => Err(Error::invalid(format!(
                "output type {other} must be 1 (per observation) or 2 (supreme proportion)"
            ))),
        }
    }
}

/// Counters for numerical edge handling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DivergenceFlags {
    /// Number of density exponentiations clamped at the smallest positive
    /// double.
    pub clamped: u64,
}

/// Result of one divergence measure over all observations.
#[derive(Debug, Clone)]
pub struct DivergenceReport {
    /// "kl", "is", or "bregman".
    pub measure: String,
    /// Generator order: 1 for KL, 0 for IS, the supplied value otherwise.
    pub alpha: f64,
    pub output: OutputType,
    /// Per-observation divergences, or supreme proportions, length `n`.
    pub values: Vec<f64>,
    /// Raw per-draw samples, `S x n`.
    pub per_draw: DMatrix<f64>,
    pub flags: DivergenceFlags,
}

/// Per-draw Kullback-Leibler samples from kernel log-ratios
/// `delta_s = log k1(theta_s) - log k2(theta_s)`; normalizing constants
/// cancel, so kernels are enough.
pub fn kl_per_draw(delta: &[f64]) -> Result<Vec<f64>> {
    if delta.is_empty() {
        return Err(Error::invalid("need at least one draw"));
    }
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::numerical("non-finite log-ratio among draws".to_string()));
    }
    let neg: Vec<f64> = delta.iter().map(|d| -d).collect();
    let correction = log_mean_exp(&neg);
    if !correction.is_finite() {
        return Err(Error::numerical(format!(
            "normalizing correction overflowed ({correction})"
        )));
    }
    Ok(delta.iter().map(|d| d + correction).collect())
}

fn exp_clamped(log_v: f64, flags: &mut DivergenceFlags) -> f64 {
    let v = log_v.exp();
    if v < f64::MIN_POSITIVE {
        flags.clamped += 1;
        f64::MIN_POSITIVE
    } else {
        v
    }
}

/// Per-draw Bregman divergence samples from log densities of the two
/// posteriors at the same draws. `alpha = 1` is rejected; use
/// [`kl_per_draw`] instead.
pub fn bregman_per_draw(
    log_f1: &[f64],
    log_f2: &[f64],
    alpha: f64,
    flags: &mut DivergenceFlags,
) -> Result<Vec<f64>> {
    if log_f1.len() != log_f2.len() || log_f1.is_empty() {
        return Err(Error::invalid(
            "log-density vectors must be non-empty and equal length".to_string(),
        ));
    }
    if alpha == 1.0 {
        return Err(Error::invalid(
            "alpha = 1 is the Kullback-Leibler case; use its dedicated path".to_string(),
        ));
    }
    if !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha = {alpha} must be finite")));
    }
    let mut out = Vec::with_capacity(log_f1.len());
    for (s, (&lf1, &lf2)) in log_f1.iter().zip(log_f2).enumerate() {
        if !lf1.is_finite() || !lf2.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite log density at draw {s}"
            )));
        }
        let f1 = exp_clamped(lf1, flags);
        let v = if alpha == 0.0 {
            // [log(f2/f1) + f1/f2 - 1] / f1, with the ratios taken in logs
            ((lf2 - lf1) + (lf1 - lf2).exp() - 1.0) / f1
        } else if alpha == 2.0 {
            let f2 = exp_clamped(lf2, flags);
            let d = f1 - f2;
            d * d / (2.0 * f1)
        } else {
            let f2 = exp_clamped(lf2, flags);
            let num = f1.powf(alpha) - f2.powf(alpha)
                - alpha * f2.powf(alpha - 1.0) * (f1 - f2);
            num / (alpha * alpha - alpha) / f1
        };
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::numerical(format!(
                "divergence sample at draw {s} is {v} (alpha = {alpha})"
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// Reciprocal-importance estimate of the log normalizing constant of
/// `log_kernel`, using draws from the normalized kernel itself:
/// `log c = -log mean_s [ g(theta_s) / k(theta_s) ]`.
///
/// Auxiliary mass outside the kernel's support inflates the estimate by
/// `-log` of the retained fraction, so `g` should concentrate where the
/// kernel lives.
pub fn log_normalizer<F>(
    draws: &DMatrix<f64>,
    log_kernel: F,
    aux: &AuxiliaryDensity,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if draws.nrows() < 2 {
        return Err(Error::invalid(format!(
            "normalizer estimate needs at least 2 draws, got {}",
            draws.nrows()
        )));
    }
    if draws.ncols() != aux.dim() {
        return Err(Error::invalid(format!(
            "draws have {} coordinates but the auxiliary density has {}",
            draws.ncols(),
            aux.dim()
        )));
    }
    let mut terms = Vec::with_capacity(draws.nrows());
    let mut point = vec![0.0; draws.ncols()];
    for s in 0..draws.nrows() {
        for j in 0..draws.ncols() {
            point[j] = draws[(s, j)];
        }
        let g = aux.log_pdf(&point)?;
        let k = log_kernel(&point)?;
        if !k.is_finite() {
            return Err(Error::numerical(format!(
                "kernel is {k} at draw {s}; draws must lie in the kernel support"
            )));
        }
        terms.push(g - k);
    }
    let log_c = -log_mean_exp(&terms);
    if !log_c.is_finite() {
        return Err(Error::numerical(format!(
            "log normalizing constant estimate is {log_c}"
        )));
    }
    Ok(log_c)
}

/// How posterior draws are collapsed into one imputed outcome vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputeMethod {
    Mean,
    Median,
}

impl TryFrom<u8> for ImputeMethod {
    type Error = Error;

    fn try_from(code: u8) -> Result<Self> {
        match code {
            1 => Ok(ImputeMethod::Mean),
            2 => Ok(ImputeMethod::Median),
            other => Err(Error::invalid(format!(
                "imputation method {other} must be 1 (mean) or 2 (median)"
            ))),
        }
    }
}

/// Imputed outcomes: the posterior mean or median of the noise-free surface
/// `(I - rho W)^{-1} X beta` across draws.
pub fn impute_yhat(
    data: &SarDataset,
    draws: &PosteriorDraws,
    method: ImputeMethod,
) -> Result<DVector<f64>> {
    check_draw_compat(data, draws)?;
    let n = data.n();
    let s_total = draws.n_draws();
    match method {
        ImputeMethod::Mean => {
            let mut acc = DVector::zeros(n);
            for s in 0..s_total {
                let params = draws.params_at(s)?;
                acc += model::fitted_values(data, &params)?;
            }
            Ok(acc / s_total as f64)
        }
        ImputeMethod::Median => {
            let mut per_obs = vec![Vec::with_capacity(s_total); n];
            for s in 0..s_total {
                let params = draws.params_at(s)?;
                let f = model::fitted_values(data, &params)?;
                for i in 0..n {
                    per_obs[i].push(f[i]);
                }
            }
            let mut out = DVector::zeros(n);
            for i in 0..n {
                per_obs[i].sort_by(f64::total_cmp);
                out[i] = quantile_sorted(&per_obs[i], 0.5);
            }
            Ok(out)
        }
    }
}

/// Share of draws on which each observation attains its row's maximum
/// divergence; ties go to the lowest index. The shares sum to one.
pub fn supreme_proportion(per_draw: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (s, n) = (per_draw.nrows(), per_draw.ncols());
    if s == 0 || n == 0 {
        return Err(Error::invalid("per-draw matrix is empty"));
    }
    if per_draw.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("per-draw matrix has non-finite values".to_string()));
    }
    let mut counts = vec![0u64; n];
    for row in 0..s {
        let mut best = 0;
        for j in 1..n {
            if per_draw[(row, j)] > per_draw[(row, best)] {
                best = j;
            }
        }
        counts[best] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64 / s as f64).collect())
}

fn check_draw_compat(data: &SarDataset, draws: &PosteriorDraws) -> Result<()> {
    if draws.k() != data.k() {
        return Err(Error::invalid(format!(
            "draws are for a model with {} covariates but the data has {}",
            draws.k(),
            data.k()
        )));
    }
    Ok(())
}

fn check_yhat(data: &SarDataset, yhat: &DVector<f64>) -> Result<()> {
    if yhat.len() != data.n() {
        return Err(Error::invalid(format!(
            "imputed vector has length {}, expected {}",
            yhat.len(),
            data.n()
        )));
    }
    if yhat.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("imputed vector must be finite"));
    }
    Ok(())
}

/// Joint log likelihood at every draw.
fn loglik_at_draws(data: &SarDataset, draws: &PosteriorDraws) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(draws.n_draws());
    for s in 0..draws.n_draws() {
        let params = draws.params_at(s)?;
        out.push(model::log_likelihood(data, &params)?);
    }
    Ok(out)
}

fn aggregate(
    measure: &str,
    alpha: f64,
    output: OutputType,
    per_draw: DMatrix<f64>,
    flags: DivergenceFlags,
) -> Result<DivergenceReport> {
    let values = match output {
        OutputType::PerObservation => (0..per_draw.ncols())
            .map(|i| mean(&per_draw.column(i).iter().copied().collect::<Vec<_>>()))
            .collect(),
        OutputType::SupremeProportion => supreme_proportion(&per_draw)?,
    };
    Ok(DivergenceReport {
        measure: measure.to_string(),
        alpha,
        output,
        values,
        per_draw,
        flags,
    })
}

/// Kullback-Leibler case diagnostics.
///
/// For each observation `i`, compares the posterior of the observed data
/// with the posterior where outcome `i` is replaced by `yhat[i]`. Kernel
/// ratios are enough here: prior terms cancel and the normalizing-constant
/// ratio is estimated from the same draws, so no auxiliary density is
/// needed.
pub fn kl_divergence(
    data: &SarDataset,
    yhat: &DVector<f64>,
    draws: &PosteriorDraws,
    output: OutputType,
) -> Result<DivergenceReport> {
    check_draw_compat(data, draws)?;
    check_yhat(data, yhat)?;
    let s_total = draws.n_draws();
    let n = data.n();
    let ll1 = loglik_at_draws(data, draws)?;
    let mut per_draw = DMatrix::zeros(s_total, n);
    let mut delta = vec![0.0; s_total];
    for i in 0..n {
        let data_i = replace_obs(data, yhat, i)?;
        let ll2 = loglik_at_draws(&data_i, draws)?;
        for s in 0..s_total {
            delta[s] = ll1[s] - ll2[s];
        }
        let col = kl_per_draw(&delta)?;
        for s in 0..s_total {
            per_draw[(s, i)] = col[s];
        }
    }
    aggregate("kl", 1.0, output, per_draw, DivergenceFlags::default())
}

/// Itakura-Saito case diagnostics (`alpha = 0`).
pub fn is_divergence(
    data: &SarDataset,
    yhat: &DVector<f64>,
    draws: &PosteriorDraws,
    prior: &PriorConfig,
    aux: &AuxiliaryDensity,
    output: OutputType,
) -> Result<DivergenceReport> {
    aux_based_divergence(data, yhat, draws, prior, aux, 0.0, output, "is")
}

/// General Bregman case diagnostics for `alpha` outside `{0, 1}`; those two
/// orders have dedicated paths ([`is_divergence`] and [`kl_divergence`]).
pub fn bregman_divergence(
    data: &SarDataset,
    yhat: &DVector<f64>,
    draws: &PosteriorDraws,
    prior: &PriorConfig,
    aux: &AuxiliaryDensity,
    alpha: f64,
    output: OutputType,
) -> Result<DivergenceReport> {
    if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
        return Err(Error::invalid(format!(
            "alpha = {alpha} not allowed here: use the Kullback-Leibler measure for alpha = 1 \
             and Itakura-Saito for alpha = 0"
        )));
    }
    aux_based_divergence(data, yhat, draws, prior, aux, alpha, output, "bregman")
}

/// Posterior density over `(rho, sigma, beta)`: the model kernel with the
/// prior on `sigma^2` carried to the `sigma` scale.
fn divergence_log_kernel(
    data: &SarDataset,
    prior: &PriorConfig,
    theta: &[f64],
) -> Result<f64> {
    let params = SarParams::from_slice(theta)?;
    let k = model::log_posterior_kernel(data, &params, prior)?;
    Ok(k + (2.0 * params.sigma).ln())
}

fn replace_obs(data: &SarDataset, yhat: &DVector<f64>, i: usize) -> Result<SarDataset> {
    let mut y = data.outcomes().clone();
    y[i] = yhat[i];
    data.with_outcomes(y)
}

#[allow(clippy::too_many_arguments)]
fn aux_based_divergence(
    data: &SarDataset,
    yhat: &DVector<f64>,
    draws: &PosteriorDraws,
    prior: &PriorConfig,
    aux: &AuxiliaryDensity,
    alpha: f64,
    output: OutputType,
    measure: &str,
) -> Result<DivergenceReport> {
    check_draw_compat(data, draws)?;
    check_yhat(data, yhat)?;
    prior.validate()?;
    if aux.dim() != draws.n_params() {
        return Err(Error::invalid(format!(
            "auxiliary density has dimension {} but draws have {} parameters",
            aux.dim(),
            draws.n_params()
        )));
    }
    let s_total = draws.n_draws();
    let n = data.n();

    let k1: Vec<f64> = {
        let mut v = Vec::with_capacity(s_total);
        for s in 0..s_total {
            let row: Vec<f64> = draws.values().row(s).iter().copied().collect();
            v.push(divergence_log_kernel(data, prior, &row)?);
        }
        v
    };
    let log_c1 = log_normalizer(draws.values(), |t| divergence_log_kernel(data, prior, t), aux)?;
    let log_f1: Vec<f64> = k1.iter().map(|k| k - log_c1).collect();

    let mut flags = DivergenceFlags::default();
    let mut per_draw = DMatrix::zeros(s_total, n);
    let ll1 = loglik_at_draws(data, draws)?;
    for i in 0..n {
        let data_i = replace_obs(data, yhat, i)?;
        let ll2 = loglik_at_draws(&data_i, draws)?;
        // log k2 - log k1 reduces to the likelihood ratio, and the
        // normalizer ratio is its importance average over the draws
        let ratio: Vec<f64> = ll2.iter().zip(&ll1).map(|(b, a)| b - a).collect();
        let log_c2 = log_c1 + log_mean_exp(&ratio);
        if !log_c2.is_finite() {
            return Err(Error::numerical(format!(
                "normalizing constant for observation {} is degenerate",
                i + 1
            )));
        }
        let log_f2: Vec<f64> = (0..s_total)
            .map(|s| k1[s] + ratio[s] - log_c2)
            .collect();
        let col = bregman_per_draw(&log_f1, &log_f2, alpha, &mut flags)?;
        for s in 0..s_total {
            per_draw[(s, i)] = col[s];
        }
    }
    aggregate(measure, alpha, output, per_draw, flags)
}
