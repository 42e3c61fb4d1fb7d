//! The simultaneous autoregressive model and its posterior kernel.
//!
//! Outcomes follow `y = rho W y + X beta + eps`, `eps ~ N(0, sigma^2 I)`,
//! with a row-stochastic weight matrix `W` and a design matrix `X` whose
//! first column is an intercept. The log likelihood is evaluated on the
//! residual `r = y - X beta - rho W y`:
//!
//! ```text
//! log L = -(n/2) log(2 pi sigma^2) - r'r / (2 sigma^2)
//! ```
//!
//! Priors: `rho ~ Uniform(-1, 1)`, `beta ~ N(0, eta I)`, and
//! `sigma^2 ~ InverseGamma(a, b)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::WeightMatrix;
use crate::stats::{ln_gamma, quantile};
use crate::{linalg, Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Model parameters in the order `(rho, sigma, beta_0, ..., beta_k)`.
///
/// `sigma` is the noise standard deviation; the prior is placed on its
/// square.
#[derive(Debug, Clone, PartialEq)]
pub struct SarParams {
    pub rho: f64,
    pub sigma: f64,
    pub beta: DVector<f64>,
}

impl SarParams {
    pub fn new(rho: f64, sigma: f64, beta: Vec<f64>) -> Result<Self> {
        let p = SarParams { rho, sigma, beta: DVector::from_vec(beta) };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || self.rho.abs() >= 1.0 {
            return Err(Error::invalid(format!(
                "spatial coefficient rho = {} outside (-1, 1)",
                self.rho
            )));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::invalid(format!(
                "noise scale sigma = {} must be positive and finite",
                self.sigma
            )));
        }
        if self.beta.is_empty() || self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid(
                "coefficient vector beta must be non-empty and finite".to_string(),
            ));
        }
        Ok(())
    }

    /// Flat layout `(rho, sigma, beta_0, ..., beta_k)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 + self.beta.len());
        v.push(self.rho);
        v.push(self.sigma);
        v.extend(self.beta.iter());
        v
    }

    /// Parse the flat layout produced by [`SarParams::to_vec`].
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::invalid(format!(
                "parameter vector needs at least (rho, sigma, beta0), got {} values",
                values.len()
            )));
        }
        SarParams::new(values[0], values[1], values[2..].to_vec())
    }
}

/// Hyperparameters: `sigma^2 ~ InverseGamma(a, b)` and `beta ~ N(0, eta I)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PriorConfig {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
}

impl Default for PriorConfig {
    /// The weakly informative default `a = b = 0.01`, `eta = 100^2`.
    fn default() -> Self {
        PriorConfig { a: 0.01, b: 0.01, eta: 1e4 }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("eta", self.eta)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "prior hyperparameter {name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// Outcomes, design matrix, and weight matrix bundled for likelihood
/// evaluation. The intercept column is prepended here, so callers pass raw
/// covariates; `W y` is cached because it does not depend on parameters.
#[derive(Debug, Clone)]
pub struct SarDataset {
    y: DVector<f64>,
    design: DMatrix<f64>,
    w: WeightMatrix,
    wy: DVector<f64>,
}

impl SarDataset {
    /// `covariates` is `n x k` with `k >= 0`; the design matrix becomes
    /// `[1 | covariates]`.
    pub fn new(y: DVector<f64>, covariates: DMatrix<f64>, w: WeightMatrix) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::invalid("dataset has no observations"));
        }
        if w.n() != n {
            return Err(Error::invalid(format!(
                "weight matrix is {}x{} but there are {n} outcomes",
                w.n(),
                w.n()
            )));
        }
        if covariates.ncols() > 0 && covariates.nrows() != n {
            return Err(Error::invalid(format!(
                "covariate matrix has {} rows but there are {n} outcomes",
                covariates.nrows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) || covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("outcomes and covariates must be finite"));
        }
        let k = covariates.ncols();
        let mut design = DMatrix::zeros(n, k + 1);
        design.column_mut(0).fill(1.0);
        for j in 0..k {
            design.set_column(j + 1, &covariates.column(j));
        }
        let wy = w.matrix() * &y;
        Ok(SarDataset { y, design, w, wy })
    }

    /// Same design and weights, different outcome vector.
    pub fn with_outcomes(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::invalid(format!(
                "replacement outcome vector has length {}, expected {}",
                y.len(),
                self.n()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("outcomes must be finite"));
        }
        let wy = self.w.matrix() * &y;
        Ok(SarDataset { y, design: self.design.clone(), w: self.w.clone(), wy })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates, excluding the intercept.
    pub fn k(&self) -> usize {
        self.design.ncols() - 1
    }

    pub fn outcomes(&self) -> &DVector<f64> {
        &self.y
    }

    /// Design matrix including the leading intercept column.
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.w
    }

    /// Cached product `W y`.
    pub fn spatial_lag(&self) -> &DVector<f64> {
        &self.wy
    }

    fn check_params(&self, params: &SarParams) -> Result<()> {
        params.validate()?;
        if params.beta.len() != self.k() + 1 {
            return Err(Error::invalid(format!(
                "beta has {} entries, expected {} (intercept + covariates)",
                params.beta.len(),
                self.k() + 1
            )));
        }
        Ok(())
    }
}

/// Joint log likelihood of the outcomes under `params`.
pub fn log_likelihood(data: &SarDataset, params: &SarParams) -> Result<f64> {
    data.check_params(params)?;
    let r = residuals(data, params);
    let n = data.n() as f64;
    let sigma2 = params.sigma * params.sigma;
    Ok(-0.5 * n * (LN_2PI + sigma2.ln()) - r.norm_squared() / (2.0 * sigma2))
}

/// Per-observation log likelihood contributions; their sum equals
/// [`log_likelihood`].
pub fn pointwise_log_likelihood(data: &SarDataset, params: &SarParams) -> Result<DVector<f64>> {
    data.check_params(params)?;
    let r = residuals(data, params);
    let sigma2 = params.sigma * params.sigma;
    let base = -0.5 * (LN_2PI + sigma2.ln());
    Ok(DVector::from_iterator(
        data.n(),
        r.iter().map(|ri| base - ri * ri / (2.0 * sigma2)),
    ))
}

fn residuals(data: &SarDataset, params: &SarParams) -> DVector<f64> {
    data.outcomes() - data.design() * &params.beta - data.spatial_lag() * params.rho
}

/// Log prior density of `(rho, sigma^2, beta)`; the inverse-gamma factor is
/// evaluated at `sigma^2`.
pub fn log_prior(params: &SarParams, prior: &PriorConfig) -> Result<f64> {
    params.validate()?;
    prior.validate()?;
    let k1 = params.beta.len() as f64;
    let sigma2 = params.sigma * params.sigma;
    let lp_rho = -(2.0f64.ln());
    let lp_beta =
        -0.5 * k1 * (LN_2PI + prior.eta.ln()) - params.beta.norm_squared() / (2.0 * prior.eta);
    let lp_sigma2 = prior.a * prior.b.ln() - ln_gamma(prior.a)
        - (prior.a + 1.0) * sigma2.ln()
        - prior.b / sigma2;
    Ok(lp_rho + lp_beta + lp_sigma2)
}

/// Unnormalized log posterior: likelihood plus prior.
pub fn log_posterior_kernel(
    data: &SarDataset,
    params: &SarParams,
    prior: &PriorConfig,
) -> Result<f64> {
    Ok(log_likelihood(data, params)? + log_prior(params, prior)?)
}

/// Draw one outcome vector from the model: solves
/// `(I - rho W) y = X beta + eps` with `eps ~ N(0, sigma^2 I)` generated
/// from a ChaCha stream seeded by `seed`.
pub fn sar_simulate(
    w: &WeightMatrix,
    covariates: &DMatrix<f64>,
    params: &SarParams,
    seed: u64,
) -> Result<DVector<f64>> {
    params.validate()?;
    let n = w.n();
    if covariates.ncols() > 0 && covariates.nrows() != n {
        return Err(Error::invalid(format!(
            "covariate matrix has {} rows but the weight matrix has {n}",
            covariates.nrows()
        )));
    }
    if params.beta.len() != covariates.ncols() + 1 {
        return Err(Error::invalid(format!(
            "beta has {} entries, expected {} (intercept + covariates)",
            params.beta.len(),
            covariates.ncols() + 1
        )));
    }
    if covariates.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("covariates must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let mut mu = params.beta[0];
        for j in 0..covariates.ncols() {
            mu += covariates[(i, j)] * params.beta[j + 1];
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        rhs[i] = mu + params.sigma * z;
    }
    linalg::solve_spatial(w.matrix(), params.rho, &rhs)
}

/// Noise-free outcome surface `(I - rho W)^{-1} X beta`.
pub fn fitted_values(data: &SarDataset, params: &SarParams) -> Result<DVector<f64>> {
    data.check_params(params)?;
    let mean = data.design() * &params.beta;
    linalg::solve_spatial(data.weights().matrix(), params.rho, &mean)
}

/// Shift one outcome upward by an empirical quantile of the whole vector:
/// the `level` quantile when the first outcome is positive, the `1 - level`
/// quantile otherwise. `position` is 1-based.
pub fn contaminate(y: &[f64], position: usize, level: f64) -> Result<Vec<f64>> {
    if position < 1 || position > y.len() {
        return Err(Error::invalid(format!(
            "contamination position {position} outside 1..={}",
            y.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "contamination level {level} outside (0, 1)"
        )));
    }
    let q = if y[0] > 0.0 { quantile(y, level)? } else { quantile(y, 1.0 - level)? };
    let mut z = y.to_vec();
    z[position - 1] += q;
    Ok(z)
}
