//! C interface for the sardiag library.
//!
//! All functions follow the same conventions: handles are opaque pointers
//! owned by the caller and released with the matching `_free` function;
//! fallible functions either return a null handle or a status code
//! (`SAR_OK`, `SAR_ERR_INVALID`, `SAR_ERR_NUMERICAL`). After a failure,
//! `sar_last_error` returns a message that stays valid until the next
//! failing call on the same thread. Matrices cross the boundary as
//! row-major `double` buffers allocated by the caller.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{DMatrix, DVector};
use sardiag::compare::{log_likelihood_matrix, loo_cv, waic};
use sardiag::divergence::{
    bregman_divergence, impute_yhat, is_divergence, kl_divergence, AuxKind, AuxiliaryDensity,
    ImputeMethod, OutputType,
};
use sardiag::model::{PriorConfig, SarParams};
use sardiag::sampler::{fit, summarize, FitConfig, PosteriorDraws};
use sardiag::Error;

pub const SAR_OK: c_int = 0;
pub const SAR_ERR_INVALID: c_int = 1;
pub const SAR_ERR_NUMERICAL: c_int = 2;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(e: &Error) -> c_int {
    let msg = CString::new(e.to_string()).unwrap_or_default();
    LAST_ERROR.with(|c| *c.borrow_mut() = msg);
    e.exit_code()
}

fn invalid(msg: &str) -> c_int {
    set_error(&Error::invalid(msg.to_string()))
}

fn panic_error() -> c_int {
    set_error(&Error::numerical("internal panic".to_string()))
}

/// Message from the most recent failing call on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sar_last_error() -> *const c_char {
    LAST_ERROR.with(|c| c.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Row-stochastic spatial weight matrix.
pub struct SarWeights(sardiag::graph::WeightMatrix);

/// Outcomes, covariates, and weights bound together for one model.
pub struct SarDataset(sardiag::model::SarDataset);

/// Posterior draws in the column order `rho, sigma, beta0, ...`.
pub struct SarDraws(PosteriorDraws);

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() && len > 0 {
        None
    } else if len == 0 {
        Some(&[])
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn matrix_arg(ptr: *const f64, rows: usize, cols: usize) -> Option<DMatrix<f64>> {
    let flat = slice_arg(ptr, rows * cols)?;
    Some(DMatrix::from_row_slice(rows, cols, flat))
}

fn handle_or<T>(result: Result<T, Error>) -> *mut T {
    match result {
        Ok(v) => Box::into_raw(Box::new(v)),
        Err(e) => {
            set_error(&e);
            std::ptr::null_mut()
        }
    }
}

macro_rules! guard_status {
    ($body:expr) => {
        match catch_unwind(AssertUnwindSafe(|| $body)) {
            Ok(code) => code,
            Err(_) => panic_error(),
        }
    };
}

macro_rules! guard_handle {
    ($body:expr) => {
        match catch_unwind(AssertUnwindSafe(|| $body)) {
            Ok(ptr) => ptr,
            Err(_) => {
                panic_error();
                std::ptr::null_mut()
            }
        }
    };
}

// ---- weights ----------------------------------------------------------------

/// Build a row-stochastic weight matrix from `2 * pairs` 1-based node
/// indices read as undirected edges over `n` nodes.
///
/// # Safety
/// `nodes` must point to `len` readable `uint64_t` values.
#[no_mangle]
pub unsafe extern "C" fn sar_weights_build(
    nodes: *const u64,
    len: usize,
    n: usize,
) -> *mut SarWeights {
    guard_handle!({
        if nodes.is_null() && len > 0 {
            invalid("nodes pointer is null");
            return std::ptr::null_mut();
        }
        let list: Vec<usize> =
            std::slice::from_raw_parts(nodes, len).iter().map(|&v| v as usize).collect();
        handle_or(
            sardiag::graph::build_adjacency(&list, n)
                .and_then(|a| sardiag::graph::row_standardize(&a))
                .map(SarWeights),
        )
    })
}

/// Wrap an existing row-stochastic matrix given in row-major order.
///
/// # Safety
/// `values` must point to `n * n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_weights_from_dense(
    values: *const f64,
    n: usize,
) -> *mut SarWeights {
    guard_handle!({
        let Some(m) = matrix_arg(values, n, n) else {
            invalid("values pointer is null");
            return std::ptr::null_mut();
        };
        handle_or(sardiag::graph::WeightMatrix::from_matrix(m).map(SarWeights))
    })
}

/// Number of nodes, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sar_weights_n(w: *const SarWeights) -> usize {
    if w.is_null() {
        return 0;
    }
    unsafe { (*w).0.n() }
}

/// # Safety
/// `w` must be a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn sar_weights_free(w: *mut SarWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

// ---- dataset ----------------------------------------------------------------

/// Bundle `n` outcomes with a row-major `n x k` covariate matrix (pass null
/// with `k = 0` for an intercept-only model) and a weight matrix, which is
/// copied into the dataset.
///
/// # Safety
/// `y` must point to `n` doubles, `x` to `n * k` doubles (or be null when
/// `k = 0`), and `w` must be a live weights handle.
#[no_mangle]
pub unsafe extern "C" fn sar_dataset_new(
    y: *const f64,
    n: usize,
    x: *const f64,
    k: usize,
    w: *const SarWeights,
) -> *mut SarDataset {
    guard_handle!({
        if w.is_null() {
            invalid("weights handle is null");
            return std::ptr::null_mut();
        }
        let Some(y) = slice_arg(y, n) else {
            invalid("outcome pointer is null");
            return std::ptr::null_mut();
        };
        let Some(x) = matrix_arg(x, n, k) else {
            invalid("covariate pointer is null");
            return std::ptr::null_mut();
        };
        handle_or(
            sardiag::model::SarDataset::new(
                DVector::from_column_slice(y),
                x,
                (*w).0.clone(),
            )
            .map(SarDataset),
        )
    })
}

/// Number of observations, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sar_dataset_n(d: *const SarDataset) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { (*d).0.n() }
}

/// Number of covariates (intercept not counted), or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sar_dataset_k(d: *const SarDataset) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { (*d).0.k() }
}

/// # Safety
/// `d` must be a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn sar_dataset_free(d: *mut SarDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

// ---- simulation ---------------------------------------------------------------

/// Draw one outcome vector into `out_y` (length = number of nodes).
/// `beta` holds the intercept followed by `beta_len - 1` slopes, and `x`
/// is row-major with `beta_len - 1` columns (null when `beta_len = 1`).
///
/// # Safety
/// Pointers must cover the stated lengths; `out_y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sar_simulate(
    w: *const SarWeights,
    x: *const f64,
    rho: f64,
    sigma: f64,
    beta: *const f64,
    beta_len: usize,
    seed: u64,
    out_y: *mut f64,
) -> c_int {
    guard_status!({
        if w.is_null() || out_y.is_null() {
            return invalid("weights or output pointer is null");
        }
        let Some(beta) = slice_arg(beta, beta_len) else {
            return invalid("beta pointer is null");
        };
        if beta.is_empty() {
            return invalid("beta must hold at least the intercept");
        }
        let n = (*w).0.n();
        let Some(x) = matrix_arg(x, n, beta_len - 1) else {
            return invalid("covariate pointer is null");
        };
        let params = match SarParams::new(rho, sigma, beta.to_vec()) {
            Ok(p) => p,
            Err(e) => return set_error(&e),
        };
        match sardiag::model::sar_simulate(&(*w).0, &x, &params, seed) {
            Ok(y) => {
                std::ptr::copy_nonoverlapping(y.as_slice().as_ptr(), out_y, n);
                SAR_OK
            }
            Err(e) => set_error(&e),
        }
    })
}

// ---- fitting ------------------------------------------------------------------

/// Sample the posterior. `threads = 0` runs one worker per chain.
///
/// # Safety
/// `data` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn sar_fit(
    data: *const SarDataset,
    n_chains: u32,
    n_iter: u32,
    seed: u64,
    prior_a: f64,
    prior_b: f64,
    prior_eta: f64,
    threads: usize,
) -> *mut SarDraws {
    guard_handle!({
        if data.is_null() {
            invalid("dataset handle is null");
            return std::ptr::null_mut();
        }
        let cfg = FitConfig {
            n_chains,
            n_iter,
            seed,
            prior: PriorConfig { a: prior_a, b: prior_b, eta: prior_eta },
            threads,
        };
        handle_or(fit(&(*data).0, &cfg).map(SarDraws))
    })
}

/// Wrap externally produced draws: `values` is row-major
/// `rows x cols` with columns `rho, sigma, beta0, ...` (`cols >= 3`), and
/// `chain_ids` assigns each row to a chain `0..n_chains` in grouped order.
///
/// # Safety
/// `values` must cover `rows * cols` doubles and `chain_ids` `rows` ids.
#[no_mangle]
pub unsafe extern "C" fn sar_draws_new(
    values: *const f64,
    rows: usize,
    cols: usize,
    chain_ids: *const u32,
    n_chains: u32,
) -> *mut SarDraws {
    guard_handle!({
        let Some(m) = matrix_arg(values, rows, cols) else {
            invalid("values pointer is null");
            return std::ptr::null_mut();
        };
        if chain_ids.is_null() && rows > 0 {
            invalid("chain_ids pointer is null");
            return std::ptr::null_mut();
        }
        let ids = std::slice::from_raw_parts(chain_ids, rows).to_vec();
        handle_or(PosteriorDraws::from_parts(m, ids, n_chains).map(SarDraws))
    })
}

/// Number of draws, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sar_draws_rows(d: *const SarDraws) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { (*d).0.n_draws() }
}

/// Number of parameter columns (`k + 3`), or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sar_draws_cols(d: *const SarDraws) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { (*d).0.n_params() }
}

/// Number of chains, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sar_draws_n_chains(d: *const SarDraws) -> u32 {
    if d.is_null() {
        return 0;
    }
    unsafe { (*d).0.n_chains() }
}

/// Copy the draw matrix row-major into `out` (`rows * cols` doubles).
///
/// # Safety
/// `out` must be writable for `rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_draws_values(d: *const SarDraws, out: *mut f64) -> c_int {
    guard_status!({
        if d.is_null() || out.is_null() {
            return invalid("draws or output pointer is null");
        }
        let m = (*d).0.values();
        let mut p = out;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                *p = m[(r, c)];
                p = p.add(1);
            }
        }
        SAR_OK
    })
}

/// Copy per-draw chain ids into `out` (`rows` values).
///
/// # Safety
/// `out` must be writable for `rows` values.
#[no_mangle]
pub unsafe extern "C" fn sar_draws_chain_ids(d: *const SarDraws, out: *mut u32) -> c_int {
    guard_status!({
        if d.is_null() || out.is_null() {
            return invalid("draws or output pointer is null");
        }
        let ids = (*d).0.chain_ids();
        std::ptr::copy_nonoverlapping(ids.as_ptr(), out, ids.len());
        SAR_OK
    })
}

/// Copy per-chain acceptance rates into `out` (`n_chains` doubles). Draws
/// reassembled through `sar_draws_new` have no rates; nothing is written
/// for them.
///
/// # Safety
/// `out` must be writable for `n_chains` doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_draws_acceptance(d: *const SarDraws, out: *mut f64) -> c_int {
    guard_status!({
        if d.is_null() || out.is_null() {
            return invalid("draws or output pointer is null");
        }
        let rates = (*d).0.acceptance_rates();
        std::ptr::copy_nonoverlapping(rates.as_ptr(), out, rates.len());
        SAR_OK
    })
}

/// # Safety
/// `d` must be a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn sar_draws_free(d: *mut SarDraws) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Posterior summary, one row per parameter in draw-column order. Each row
/// of `out` holds `mean, q2.5, median, q97.5, ess, rhat`, so `out` must
/// hold `cols * 6` doubles.
///
/// # Safety
/// `out` must be writable for `sar_draws_cols(d) * 6` doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_summary(d: *const SarDraws, out: *mut f64) -> c_int {
    guard_status!({
        if d.is_null() || out.is_null() {
            return invalid("draws or output pointer is null");
        }
        match summarize(&(*d).0) {
            Ok(rows) => {
                let mut p = out;
                for r in &rows {
                    for v in [r.mean, r.q2_5, r.median, r.q97_5, r.ess, r.rhat] {
                        *p = v;
                        p = p.add(1);
                    }
                }
                SAR_OK
            }
            Err(e) => set_error(&e),
        }
    })
}

// ---- model comparison -----------------------------------------------------------

/// WAIC of a fitted model; `out` receives `waic, se, p_waic, lppd`.
///
/// # Safety
/// `data` and `d` must be live handles; `out` must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_waic(
    data: *const SarDataset,
    d: *const SarDraws,
    out: *mut f64,
) -> c_int {
    guard_status!({
        if data.is_null() || d.is_null() || out.is_null() {
            return invalid("dataset, draws, or output pointer is null");
        }
        let r = log_likelihood_matrix(&(*data).0, &(*d).0).and_then(|ll| waic(&ll));
        match r {
            Ok(w) => {
                for (i, v) in [w.waic, w.waic_se, w.p_waic, w.lppd].into_iter().enumerate() {
                    *out.add(i) = v;
                }
                SAR_OK
            }
            Err(e) => set_error(&e),
        }
    })
}

/// Leave-one-out score of a fitted model; `out` receives `loo, se`.
///
/// # Safety
/// `data` and `d` must be live handles; `out` must hold 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_loo(
    data: *const SarDataset,
    d: *const SarDraws,
    out: *mut f64,
) -> c_int {
    guard_status!({
        if data.is_null() || d.is_null() || out.is_null() {
            return invalid("dataset, draws, or output pointer is null");
        }
        let r = log_likelihood_matrix(&(*data).0, &(*d).0).and_then(|ll| loo_cv(&ll));
        match r {
            Ok(l) => {
                *out = l.loo;
                *out.add(1) = l.loo_se;
                SAR_OK
            }
            Err(e) => set_error(&e),
        }
    })
}

// ---- influence diagnostics --------------------------------------------------------

/// Imputed outcome surface; `method` is 1 for the posterior mean, 2 for the
/// median. `out` receives `n` doubles.
///
/// # Safety
/// `data` and `d` must be live handles; `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_impute_yhat(
    data: *const SarDataset,
    d: *const SarDraws,
    method: u8,
    out: *mut f64,
) -> c_int {
    guard_status!({
        if data.is_null() || d.is_null() || out.is_null() {
            return invalid("dataset, draws, or output pointer is null");
        }
        let r = ImputeMethod::try_from(method)
            .and_then(|m| impute_yhat(&(*data).0, &(*d).0, m));
        match r {
            Ok(yhat) => {
                std::ptr::copy_nonoverlapping(yhat.as_slice().as_ptr(), out, yhat.len());
                SAR_OK
            }
            Err(e) => set_error(&e),
        }
    })
}

unsafe fn divergence_common(
    data: *const SarDataset,
    d: *const SarDraws,
    yhat: *const f64,
    output_type: u8,
    out: *mut f64,
) -> Result<(DVector<f64>, OutputType), c_int> {
    if data.is_null() || d.is_null() || out.is_null() {
        return Err(invalid("dataset, draws, or output pointer is null"));
    }
    let n = (*data).0.n();
    let Some(yhat) = slice_arg(yhat, n) else {
        return Err(invalid("yhat pointer is null"));
    };
    let output = OutputType::try_from(output_type).map_err(|e| set_error(&e))?;
    Ok((DVector::from_column_slice(yhat), output))
}

fn write_values(values: &[f64], out: *mut f64) -> c_int {
    unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    SAR_OK
}

/// Kullback-Leibler influence of each observation, comparing the posterior
/// under the observed data with the posterior where that outcome is
/// replaced by `yhat`. `output_type` 1 gives per-observation divergences,
/// 2 the share of draws on which each observation is the most divergent.
/// `out` receives `n` doubles either way.
///
/// # Safety
/// Handles must be live; `yhat` must hold `n` doubles and `out` must be
/// writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sar_kl(
    data: *const SarDataset,
    d: *const SarDraws,
    yhat: *const f64,
    output_type: u8,
    out: *mut f64,
) -> c_int {
    guard_status!({
        let (yhat, output) = match divergence_common(data, d, yhat, output_type, out) {
            Ok(v) => v,
            Err(code) => return code,
        };
        match kl_divergence(&(*data).0, &yhat, &(*d).0, output) {
            Ok(rep) => write_values(&rep.values, out),
            Err(e) => set_error(&e),
        }
    })
}

/// Itakura-Saito influence of each observation. `dist` picks the auxiliary
/// family fitted to the draws: 1 exponential, 2 gamma, 3 normal, 4
/// multivariate normal. Prior hyperparameters must match the fit that
/// produced the draws. See `sar_kl` for `output_type` and buffer sizes.
///
/// # Safety
/// As for `sar_kl`.
#[no_mangle]
pub unsafe extern "C" fn sar_is(
    data: *const SarDataset,
    d: *const SarDraws,
    yhat: *const f64,
    prior_a: f64,
    prior_b: f64,
    prior_eta: f64,
    dist: u8,
    output_type: u8,
    out: *mut f64,
) -> c_int {
    guard_status!({
        let (yhat, output) = match divergence_common(data, d, yhat, output_type, out) {
            Ok(v) => v,
            Err(code) => return code,
        };
        let prior = PriorConfig { a: prior_a, b: prior_b, eta: prior_eta };
        let r = AuxiliaryDensity::fit(
            match AuxKind::try_from(dist) {
                Ok(k) => k,
                Err(e) => return set_error(&e),
            },
            (*d).0.values(),
        )
        .and_then(|aux| is_divergence(&(*data).0, &yhat, &(*d).0, &prior, &aux, output));
        match r {
            Ok(rep) => write_values(&rep.values, out),
            Err(e) => set_error(&e),
        }
    })
}

/// Bregman influence of each observation for a generator order `alpha`
/// outside `{0, 1}` (`alpha = 2` is the squared-distance case). If
/// `clamped` is non-null it receives the count of density evaluations
/// clamped at the smallest positive double. See `sar_is` for the other
/// arguments.
///
/// # Safety
/// As for `sar_kl`; `clamped` may be null.
#[no_mangle]
pub unsafe extern "C" fn sar_bregman(
    data: *const SarDataset,
    d: *const SarDraws,
    yhat: *const f64,
    prior_a: f64,
    prior_b: f64,
    prior_eta: f64,
    dist: u8,
    alpha: f64,
    output_type: u8,
    out: *mut f64,
    clamped: *mut u64,
) -> c_int {
    guard_status!({
        let (yhat, output) = match divergence_common(data, d, yhat, output_type, out) {
            Ok(v) => v,
            Err(code) => return code,
        };
        let prior = PriorConfig { a: prior_a, b: prior_b, eta: prior_eta };
        let r = AuxiliaryDensity::fit(
            match AuxKind::try_from(dist) {
                Ok(k) => k,
                Err(e) => return set_error(&e),
            },
            (*d).0.values(),
        )
        .and_then(|aux| {
            bregman_divergence(&(*data).0, &yhat, &(*d).0, &prior, &aux, alpha, output)
        });
        match r {
            Ok(rep) => {
                if !clamped.is_null() {
                    *clamped = rep.flags.clamped;
                }
                write_values(&rep.values, out)
            }
            Err(e) => set_error(&e),
        }
    })
}
