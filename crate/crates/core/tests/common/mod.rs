//! Shared fixtures: the simulated spatial workload used across the
//! integration suites, and a one-parameter posterior pair whose densities
//! and normalizers are known in closed form.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sardiag::graph::{build_adjacency, random_node_list, row_standardize, WeightMatrix};
use sardiag::model::{contaminate, sar_simulate, SarParams};
use statrs::distribution::{ContinuousCDF, Normal};

/// One simulated n = 50 spatial regression: a random graph, two covariate
/// columns, outcomes generated with rho = 0.75, sigma = 1, beta = (0, 0.3)
/// on the first column only, and a copy contaminated at row 10.
pub struct Workload {
    pub w: WeightMatrix,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
}

pub const WORKLOAD_N: usize = 50;
pub const CONTAMINATED_ROW: usize = 10;

/// Seeds are pinned to values where the random graph leaves no node
/// isolated, so the unwraps cannot fire.
pub fn workload(seed: u64) -> Workload {
    let n = WORKLOAD_N;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = random_node_list(n, 4 * n, &mut rng);
    let adj = build_adjacency(&nodes, n).unwrap();
    let w = row_standardize(&adj).unwrap();
    let mut x = DMatrix::zeros(n, 2);
    for i in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        x[(i, 0)] = -1.0 + z1;
        x[(i, 1)] = 2.0 + z2;
    }
    let params = SarParams::new(0.75, 1.0, vec![0.0, 0.3]).unwrap();
    let y = sar_simulate(&w, &x.columns(0, 1).into_owned(), &params, seed ^ 0xabcd).unwrap();
    let z = DVector::from_column_slice(
        &contaminate(y.as_slice(), CONTAMINATED_ROW, 0.99).unwrap(),
    );
    Workload { w, x, y, z }
}

/// 1-based indices of the k largest values, descending.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx.truncate(k);
    idx.iter().map(|i| i + 1).collect()
}

/// Posterior of a normal mean with known variance under a flat prior on
/// [lo, hi]: a truncated normal. The compact support keeps every Bregman
/// integrand Lebesgue-integrable, so quadrature is a valid oracle for any
/// generator order.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedPosterior {
    pub m: f64,
    pub v: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedPosterior {
    fn standard() -> Normal {
        Normal::new(0.0, 1.0).unwrap()
    }

    /// Mass the untruncated normal assigns to [lo, hi].
    pub fn coverage(&self) -> f64 {
        let n01 = Self::standard();
        let sd = self.v.sqrt();
        n01.cdf((self.hi - self.m) / sd) - n01.cdf((self.lo - self.m) / sd)
    }

    /// Unnormalized log density: the bare quadratic kernel.
    pub fn log_kernel(&self, theta: f64) -> f64 {
        -(theta - self.m) * (theta - self.m) / (2.0 * self.v)
    }

    /// Exact log of the integral of exp(log_kernel) over [lo, hi].
    pub fn log_normalizer(&self) -> f64 {
        0.5 * (2.0 * std::f64::consts::PI * self.v).ln() + self.coverage().ln()
    }

    /// Exact normalized log density on [lo, hi].
    pub fn log_pdf(&self, theta: f64) -> f64 {
        self.log_kernel(theta) - self.log_normalizer()
    }

    /// Inverse-CDF draws, all inside [lo, hi].
    pub fn draws(&self, s: usize, seed: u64) -> Vec<f64> {
        let n01 = Self::standard();
        let sd = self.v.sqrt();
        let p_lo = n01.cdf((self.lo - self.m) / sd);
        let p_hi = n01.cdf((self.hi - self.m) / sd);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..s)
            .map(|_| {
                let u: f64 = rng.random();
                self.m + sd * n01.inverse_cdf(p_lo + u * (p_hi - p_lo))
            })
            .collect()
    }
}

/// Composite Simpson rule over an even number of panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    assert!(panels >= 2 && panels % 2 == 0, "panel count must be even");
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}
