//! Model comparison from pointwise log-likelihood matrices.
//!
//! Both criteria consume an `S x n` matrix `ll` whose rows are posterior
//! draws and whose columns are observations.
//!
//! WAIC: `lppd_i = log mean_s exp(ll[s,i])`, `p_i = var_s(ll[s,i])`, and
//! `waic = sum_i -2 (lppd_i - p_i)` with standard error
//! `sqrt(n var_i(-2 (lppd_i - p_i)))`.
//!
//! The cross-validation criterion reweights draws by inverse likelihood.
//! Raw log weights `-ll[s,i]` are truncated at
//! `log mean_s exp(-ll[s,i]) + 3/4 log S`, self-normalized into `w[s,i]`,
//! and combined as
//!
//! ```text
//! loo = -2 sum_i log sum_s w[s,i] exp(ll[s,i])
//!       + (2/n) sum_i sum_j log sum_s w[s,i] exp(ll[s,j])
//! ```

use nalgebra::DMatrix;

use crate::model::SarDataset;
use crate::sampler::PosteriorDraws;
use crate::stats::{log_mean_exp, log_sum_exp, sample_variance};
use crate::{model, Error, Result};

/// Validated `S x n` pointwise log-likelihood matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikMatrix {
    values: DMatrix<f64>,
}

impl LogLikMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::invalid(format!(
                "log-likelihood matrix needs at least 2 draws, got {}",
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::invalid("log-likelihood matrix has no observations"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(
                "log-likelihood matrix contains non-finite values".to_string(),
            ));
        }
        Ok(LogLikMatrix { values })
    }

    pub fn n_draws(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    fn column(&self, i: usize) -> Vec<f64> {
        self.values.column(i).iter().copied().collect()
    }
}

/// Evaluate the pointwise log likelihood at every posterior draw.
pub fn log_likelihood_matrix(
    data: &SarDataset,
    draws: &PosteriorDraws,
) -> Result<LogLikMatrix> {
    let s = draws.n_draws();
    let mut values = DMatrix::zeros(s, data.n());
    for row in 0..s {
        let params = draws.params_at(row)?;
        let ll = model::pointwise_log_likelihood(data, &params)?;
        for i in 0..data.n() {
            values[(row, i)] = ll[i];
        }
    }
    LogLikMatrix::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaicResult {
    pub waic: f64,
    pub waic_se: f64,
    pub p_waic: f64,
    pub lppd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LooResult {
    pub loo: f64,
    pub loo_se: f64,
}

/// Widely applicable information criterion on the deviance scale (smaller is
/// better).
pub fn waic(ll: &LogLikMatrix) -> Result<WaicResult> {
    let n = ll.n_obs();
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    let mut contributions = Vec::with_capacity(n);
    for i in 0..n {
        let col = ll.column(i);
        let lppd_i = log_mean_exp(&col);
        let p_i = sample_variance(&col);
        lppd += lppd_i;
        p_waic += p_i;
        contributions.push(-2.0 * (lppd_i - p_i));
    }
    let waic = contributions.iter().sum();
    let waic_se =
        if n > 1 { (n as f64 * sample_variance(&contributions)).sqrt() } else { 0.0 };
    Ok(WaicResult { waic, waic_se, p_waic, lppd })
}

/// Leave-one-out cross-validation criterion with truncated inverse-likelihood
/// weights (smaller is better).
pub fn loo_cv(ll: &LogLikMatrix) -> Result<LooResult> {
    let s = ll.n_draws();
    let n = ll.n_obs();
    let log_s = (s as f64).ln();

    // log normalized truncated weights, one column per held-out observation
    let mut log_w = DMatrix::zeros(s, n);
    for i in 0..n {
        let col = ll.column(i);
        let raw: Vec<f64> = col.iter().map(|v| -v).collect();
        let cap = log_mean_exp(&raw) + 0.75 * log_s;
        let truncated: Vec<f64> = raw.iter().map(|v| v.min(cap)).collect();
        let z = log_sum_exp(&truncated);
        for (row, t) in truncated.iter().enumerate() {
            log_w[(row, i)] = t - z;
        }
    }

    let mut scratch = vec![0.0; s];
    let mut weighted = |i: usize, j: usize| -> f64 {
        for row in 0..s {
            scratch[row] = log_w[(row, i)] + ll.values[(row, j)];
        }
        log_sum_exp(&scratch)
    };

    let mut term1_contrib = Vec::with_capacity(n);
    for i in 0..n {
        term1_contrib.push(-2.0 * weighted(i, i));
    }
    let term1: f64 = term1_contrib.iter().sum();

    let mut term2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            term2 += weighted(i, j);
        }
    }
    term2 *= 2.0 / n as f64;

    let loo = term1 + term2;
    let loo_se =
        if n > 1 { (n as f64 * sample_variance(&term1_contrib)).sqrt() } else { 0.0 };
    if !loo.is_finite() {
        return Err(Error::numerical(format!("cross-validation criterion is {loo}")));
    }
    Ok(LooResult { loo, loo_se })
}

/// One fitted model entering a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub label: String,
    pub waic: WaicResult,
    pub loo: LooResult,
}

/// A comparison row: criteria plus distances from the per-criterion minimum.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankedModel {
    pub label: String,
    pub waic: f64,
    pub waic_se: f64,
    pub p_waic: f64,
    pub lppd: f64,
    pub loo: f64,
    pub loo_se: f64,
    pub delta_waic: f64,
    pub delta_loo: f64,
}

/// Rank models by LOO (ascending; ties break on label) and attach the
/// differences from the best model under each criterion.
pub fn compare(entries: &[ComparisonEntry]) -> Result<Vec<RankedModel>> {
    if entries.len() < 2 {
        return Err(Error::invalid(format!(
            "comparison needs at least 2 models, got {}",
            entries.len()
        )));
    }
    let mut labels: Vec<&str> = entries.iter().map(|e| e.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("model labels must be unique"));
    }
    for e in entries {
        if !e.waic.waic.is_finite() || !e.loo.loo.is_finite() {
            return Err(Error::numerical(format!(
                "model {} has non-finite criteria",
                e.label
            )));
        }
    }
    let best_waic = entries.iter().map(|e| e.waic.waic).fold(f64::INFINITY, f64::min);
    let best_loo = entries.iter().map(|e| e.loo.loo).fold(f64::INFINITY, f64::min);
    let mut ranked: Vec<RankedModel> = entries
        .iter()
        .map(|e| RankedModel {
            label: e.label.clone(),
            waic: e.waic.waic,
            waic_se: e.waic.waic_se,
            p_waic: e.waic.p_waic,
            lppd: e.waic.lppd,
            loo: e.loo.loo,
            loo_se: e.loo.loo_se,
            delta_waic: e.waic.waic - best_waic,
            delta_loo: e.loo.loo - best_loo,
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.loo.total_cmp(&b.loo).then_with(|| a.label.cmp(&b.label))
    });
    Ok(ranked)
}
