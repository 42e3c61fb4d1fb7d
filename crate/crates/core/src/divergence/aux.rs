//! Auxiliary densities for the reciprocal-importance normalizing-constant
//! estimator. Each family is moment-matched to a matrix of posterior draws
//! and then evaluated in log space.
//!
//! The parameter vector mixes signs (the spatial coefficient is negative
//! half the time, coefficients can be anything), so the positive-support
//! families act on `exp(theta_j)` coordinate by coordinate: fitting matches
//! moments of `exp(theta_j)` and evaluation adds the change-of-variables
//! term `theta_j`. The normal families act on the coordinates directly.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::stats::{ln_gamma, mean, sample_variance};
use crate::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Auxiliary family selector; the numeric codes match the `dist` setting of
/// the command-line interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxKind {
    Exponential,
    Gamma,
    Normal,
    MultivariateNormal,
}

impl TryFrom<u8> for AuxKind {
    type Error = Error;

    fn try_from(code: u8) -> Result<Self> {
        match code {
            1 => Ok(AuxKind::Exponential),
            2 => Ok(AuxKind::Gamma),
            3 => Ok(AuxKind::Normal),
            4 => Ok(AuxKind::MultivariateNormal),
            other => Err(Error::invalid(format!(
                "auxiliary family code {other} outside 1..=4 \
                 (1 exponential, 2 gamma, 3 normal, 4 multivariate normal)"
            ))),
        }
    }
}

enum Fitted {
    /// Per-coordinate rate of `exp(theta_j)`.
    Exponential { rates: Vec<f64> },
    /// Per-coordinate shape and rate of `exp(theta_j)`.
    Gamma { shapes: Vec<f64>, rates: Vec<f64> },
    /// Independent normals on the coordinates.
    Normal { means: Vec<f64>, sds: Vec<f64> },
    /// Full-covariance normal on the coordinates.
    MultivariateNormal { mean: DVector<f64>, chol: Cholesky<f64, Dyn>, log_det_half: f64 },
}

/// A moment-matched auxiliary density over the sampler's parameter vector.
pub struct AuxiliaryDensity {
    kind: AuxKind,
    dim: usize,
    fitted: Fitted,
}

impl AuxiliaryDensity {
    /// Moment-match `kind` to the rows of `draws` (one draw per row).
    pub fn fit(kind: AuxKind, draws: &DMatrix<f64>) -> Result<Self> {
        let s = draws.nrows();
        let d = draws.ncols();
        if s < 2 || d == 0 {
            return Err(Error::invalid(format!(
                "auxiliary fit needs at least 2 draws and 1 coordinate, got {s}x{d}"
            )));
        }
        if draws.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("draws contain non-finite values".to_string()));
        }
        let fitted = match kind {
            AuxKind::Exponential => {
                let mut rates = Vec::with_capacity(d);
                for j in 0..d {
                    let exps: Vec<f64> = draws.column(j).iter().map(|v| v.exp()).collect();
                    let m = mean(&exps);
                    if !m.is_finite() || m <= 0.0 {
                        return Err(Error::numerical(format!(
                            "exponential auxiliary fit degenerate in coordinate {j}"
                        )));
                    }
                    rates.push(1.0 / m);
                }
                Fitted::Exponential { rates }
            }
            AuxKind::Gamma => {
                let mut shapes = Vec::with_capacity(d);
                let mut rates = Vec::with_capacity(d);
                for j in 0..d {
                    let exps: Vec<f64> = draws.column(j).iter().map(|v| v.exp()).collect();
                    let m = mean(&exps);
                    let v = sample_variance(&exps);
                    if !m.is_finite() || !v.is_finite() || m <= 0.0 || v <= 0.0 {
                        return Err(Error::numerical(format!(
                            "gamma auxiliary fit degenerate in coordinate {j}"
                        )));
                    }
                    shapes.push(m * m / v);
                    rates.push(m / v);
                }
                Fitted::Gamma { shapes, rates }
            }
            AuxKind::Normal => {
                let mut means = Vec::with_capacity(d);
                let mut sds = Vec::with_capacity(d);
                for j in 0..d {
                    let col: Vec<f64> = draws.column(j).iter().copied().collect();
                    let m = mean(&col);
                    let v = sample_variance(&col);
                    if v <= 0.0 {
                        return Err(Error::numerical(format!(
                            "normal auxiliary fit degenerate in coordinate {j}"
                        )));
                    }
                    means.push(m);
                    sds.push(v.sqrt());
                }
                Fitted::Normal { means, sds }
            }
            AuxKind::MultivariateNormal => {
                let mut mu = DVector::zeros(d);
                for j in 0..d {
                    mu[j] = mean(&draws.column(j).iter().copied().collect::<Vec<_>>());
                }
                let mut cov = DMatrix::zeros(d, d);
                for row in 0..s {
                    let centered = draws.row(row).transpose() - &mu;
                    cov += &centered * centered.transpose();
                }
                cov /= (s - 1) as f64;
                let chol = cov.cholesky().ok_or_else(|| {
                    Error::numerical(
                        "sample covariance of the draws is not positive definite".to_string(),
                    )
                })?;
                let log_det_half: f64 = (0..d).map(|j| chol.l()[(j, j)].ln()).sum();
                Fitted::MultivariateNormal { mean: mu, chol, log_det_half }
            }
        };
        Ok(AuxiliaryDensity { kind, dim: d, fitted })
    }

    pub fn kind(&self) -> AuxKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Log density at one parameter vector.
    pub fn log_pdf(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim {
            return Err(Error::invalid(format!(
                "auxiliary density is {}-dimensional, got a point of length {}",
                self.dim,
                theta.len()
            )));
        }
        let v = match &self.fitted {
            Fitted::Exponential { rates } => theta
                .iter()
                .zip(rates)
                .map(|(t, rate)| rate.ln() - rate * t.exp() + t)
                .sum(),
            Fitted::Gamma { shapes, rates } => theta
                .iter()
                .zip(shapes.iter().zip(rates))
                .map(|(t, (shape, rate))| {
                    shape * rate.ln() - ln_gamma(*shape) + (shape - 1.0) * t - rate * t.exp() + t
                })
                .sum(),
            Fitted::Normal { means, sds } => theta
                .iter()
                .zip(means.iter().zip(sds))
                .map(|(t, (m, sd))| {
                    let z = (t - m) / sd;
                    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
                })
                .sum(),
            Fitted::MultivariateNormal { mean, chol, log_det_half } => {
                let centered = DVector::from_column_slice(theta) - mean;
                let z = chol.l().solve_lower_triangular(&centered).ok_or_else(|| {
                    Error::numerical("triangular solve failed in auxiliary density".to_string())
                })?;
                -0.5 * self.dim as f64 * LN_2PI - log_det_half - 0.5 * z.norm_squared()
            }
        };
        Ok(v)
    }
}
