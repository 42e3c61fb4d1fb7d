//! The six advertised guarantees, one test each. Every test prints a
//! single PASS/FAIL verdict line directly to the process stdout (the
//! capturing harness only hooks the print macros), then asserts, so a red
//! run still shows which guarantee broke and by how much.

mod common;

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{simpson, top_k, workload, TruncatedPosterior, CONTAMINATED_ROW};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sardiag::compare::{
    compare, log_likelihood_matrix, loo_cv, waic, ComparisonEntry, LogLikMatrix,
};
use sardiag::divergence::{
    bregman_divergence, bregman_per_draw, impute_yhat, is_divergence, kl_divergence,
    kl_per_draw, psi, psi_prime, supreme_proportion, AuxKind, AuxiliaryDensity,
    DivergenceFlags, ImputeMethod, OutputType,
};
use sardiag::graph::{build_adjacency, random_node_list, row_standardize};
use sardiag::model::{sar_simulate, PriorConfig, SarDataset, SarParams};
use sardiag::sampler::{fit, summarize, FitConfig};

fn verdict(criterion: usize, what: &str, ok: bool, detail: &str) {
    let line = format!(
        "{} criterion {criterion}: {what} ({detail})\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(ok, "criterion {criterion}, {what}: {detail}");
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn rel_err(estimate: f64, oracle: f64) -> f64 {
    (estimate - oracle).abs() / oracle.abs()
}

#[test]
fn criterion_1_parameter_recovery() {
    let wl = workload(40);
    let data =
        SarDataset::new(wl.y.clone(), wl.x.columns(0, 1).into_owned(), wl.w.clone()).unwrap();
    let cfg = FitConfig { n_chains: 2, n_iter: 10_000, seed: 2, ..Default::default() };
    let t0 = Instant::now();
    let draws = fit(&data, &cfg).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();

    let rows = summarize(&draws).unwrap();
    assert_eq!(rows.len(), 4);
    let max_rhat = rows.iter().map(|r| r.rhat).fold(0.0f64, f64::max);
    let min_ess = rows.iter().map(|r| r.ess).fold(f64::MAX, f64::min);
    let (rho, sigma) = (&rows[0], &rows[1]);
    let covers_rho = rho.q2_5 <= 0.75 && 0.75 <= rho.q97_5;
    let covers_sigma = sigma.q2_5 <= 1.0 && 1.0 <= sigma.q97_5;
    let acceptance_ok =
        draws.acceptance_rates().iter().all(|a| (0.1..=0.6).contains(a));

    let ok = max_rhat <= 1.01
        && min_ess >= 500.0
        && covers_rho
        && covers_sigma
        && acceptance_ok
        && elapsed <= 60.0;
    verdict(
        1,
        "parameter recovery",
        ok,
        &format!(
            "max rhat {max_rhat:.4}, min ess {min_ess:.0}, rho interval [{:.3}, {:.3}], \
             sigma interval [{:.3}, {:.3}], acceptance in range: {acceptance_ok}, \
             fit took {elapsed:.1} s",
            rho.q2_5, rho.q97_5, sigma.q2_5, sigma.q97_5
        ),
    );
}

#[test]
fn criterion_2_model_selection() {
    let wl = workload(171);
    let mut entries = Vec::new();
    for (label, k) in [("m1", 0usize), ("m2", 1), ("m3", 2)] {
        let data = SarDataset::new(
            wl.z.clone(),
            wl.x.columns(0, k).into_owned(),
            wl.w.clone(),
        )
        .unwrap();
        let cfg = FitConfig { n_chains: 2, n_iter: 10_000, seed: 2, ..Default::default() };
        let draws = fit(&data, &cfg).unwrap();
        let ll = log_likelihood_matrix(&data, &draws).unwrap();
        entries.push(ComparisonEntry {
            label: label.to_string(),
            waic: waic(&ll).unwrap(),
            loo: loo_cv(&ll).unwrap(),
        });
    }
    let ranked = compare(&entries).unwrap();
    let by = |l: &str| ranked.iter().find(|m| m.label == l).unwrap();
    let (m1, m2) = (by("m1"), by("m2"));
    let min_waic_se =
        ranked.iter().min_by(|a, b| a.waic.total_cmp(&b.waic)).unwrap().waic_se;
    let min_loo_se =
        ranked.iter().min_by(|a, b| a.loo.total_cmp(&b.loo)).unwrap().loo_se;

    let ok = m2.waic <= m1.waic
        && m2.loo <= m1.loo
        && m2.delta_waic <= min_waic_se
        && m2.delta_loo <= min_loo_se;
    verdict(
        2,
        "model selection",
        ok,
        &format!(
            "waic m2 {:.2} vs m1 {:.2}, loo m2 {:.2} vs m1 {:.2}, \
             delta waic {:.2} vs se {:.2}, delta loo {:.2} vs se {:.2}",
            m2.waic, m1.waic, m2.loo, m1.loo, m2.delta_waic, min_waic_se, m2.delta_loo,
            min_loo_se
        ),
    );
}

#[test]
fn criterion_3_outlier_detection() {
    let mut hits = 0;
    let mut notes = Vec::new();
    for seed in [5u64, 7, 16, 19, 28] {
        let wl = workload(seed);
        let data = SarDataset::new(
            wl.z.clone(),
            wl.x.columns(0, 1).into_owned(),
            wl.w.clone(),
        )
        .unwrap();
        let cfg = FitConfig {
            n_chains: 2,
            n_iter: 10_000,
            seed: seed.wrapping_add(1000),
            ..Default::default()
        };
        let draws = fit(&data, &cfg).unwrap();
        let yhat = impute_yhat(&data, &draws, ImputeMethod::Mean).unwrap();
        let kl =
            kl_divergence(&data, &yhat, &draws, OutputType::PerObservation).unwrap();
        let aux = AuxiliaryDensity::fit(AuxKind::Normal, draws.values()).unwrap();
        let prior = PriorConfig::default();
        let share = bregman_divergence(
            &data,
            &yhat,
            &draws,
            &prior,
            &aux,
            2.0,
            OutputType::SupremeProportion,
        )
        .unwrap();
        let hit = top_k(&kl.values, 3).contains(&CONTAMINATED_ROW)
            && top_k(&share.values, 3).contains(&CONTAMINATED_ROW);
        if hit {
            hits += 1;
        }
        notes.push(format!("seed {seed} {}", if hit { "hit" } else { "miss" }));
    }
    verdict(
        3,
        "outlier detection",
        hits >= 4,
        &format!("{hits}/5 runs rank observation {CONTAMINATED_ROW} in both top-3 lists; {}",
            notes.join(", ")),
    );
}

#[test]
fn criterion_4_divergence_oracles() {
    const S: usize = 10_000;

    // Kullback-Leibler between two normal posteriors with equal variance is
    // exactly (m1 - m2)^2 / (2 v); the kernels carry different additive
    // constants the estimator has to cancel.
    let (m1, m2, v) = (0.5f64, 0.0f64, 0.25f64);
    let sd = v.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(271);
    let delta: Vec<f64> = (0..S)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            let t = m1 + sd * e;
            let k1 = -(t - m1) * (t - m1) / (2.0 * v) + 3.7;
            let k2 = -(t - m2) * (t - m2) / (2.0 * v) - 1.2;
            k1 - k2
        })
        .collect();
    let kl_est = mean(&kl_per_draw(&delta).unwrap());
    let kl_exact = (m1 - m2) * (m1 - m2) / (2.0 * v);
    let kl_rel = rel_err(kl_est, kl_exact);

    // Quadratic and Itakura-Saito orders against deterministic quadrature on
    // a truncated-normal posterior pair with closed-form densities.
    let (lo, hi, tv) = (-1.25, 1.25, 1.0);
    let p1 = TruncatedPosterior { m: 0.2, v: tv, lo, hi };
    let p2 = TruncatedPosterior { m: -0.2, v: tv, lo, hi };
    let draws = p1.draws(S, 577);
    let lf1: Vec<f64> = draws.iter().map(|&t| p1.log_pdf(t)).collect();
    let lf2: Vec<f64> = draws.iter().map(|&t| p2.log_pdf(t)).collect();

    let mut rels = vec![("kl", kl_rel)];
    for (name, alpha) in [("alpha 2", 2.0f64), ("alpha 0", 0.0)] {
        let mut flags = DivergenceFlags::default();
        let estimate = mean(&bregman_per_draw(&lf1, &lf2, alpha, &mut flags).unwrap());
        assert_eq!(flags.clamped, 0);
        let oracle = simpson(
            |t| {
                let a = p1.log_pdf(t).exp();
                let b = p2.log_pdf(t).exp();
                if alpha == 0.0 {
                    (b / a).ln() + a / b - 1.0
                } else {
                    (a - b) * (a - b) / 2.0
                }
            },
            lo,
            hi,
            8_000,
        );
        rels.push((name, rel_err(estimate, oracle)));
    }

    let worst = rels.iter().map(|(_, r)| *r).fold(0.0f64, f64::max);
    verdict(
        4,
        "divergence oracle equivalence",
        worst <= 0.05,
        &rels
            .iter()
            .map(|(n, r)| format!("{n} relative error {r:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
    );
}

/// Direct-formula WAIC on a 2-draw, 2-observation matrix, in plain
/// arithmetic: returns (waic, se, p, lppd).
fn hand_waic_2x2(ll: [[f64; 2]; 2]) -> (f64, f64, f64, f64) {
    let mut total = 0.0;
    let mut lppd = 0.0;
    let mut p = 0.0;
    let mut contrib = [0.0f64; 2];
    for i in 0..2 {
        let (a, b) = (ll[0][i], ll[1][i]);
        let lppd_i = ((a.exp() + b.exp()) / 2.0).ln();
        let m = (a + b) / 2.0;
        let p_i = (a - m) * (a - m) + (b - m) * (b - m);
        lppd += lppd_i;
        p += p_i;
        contrib[i] = -2.0 * (lppd_i - p_i);
        total += contrib[i];
    }
    let m = (contrib[0] + contrib[1]) / 2.0;
    let var = (contrib[0] - m) * (contrib[0] - m) + (contrib[1] - m) * (contrib[1] - m);
    (total, (2.0 * var).sqrt(), p, lppd)
}

/// The cross-validation criterion on the same shape: inverse-likelihood
/// weights truncated at the column cap, self-normalized, then the deviance
/// term plus the double-sum correction.
fn hand_loo_2x2(ll: [[f64; 2]; 2]) -> (f64, f64) {
    let mut w = [[0.0f64; 2]; 2];
    for i in 0..2 {
        let raw = [-ll[0][i], -ll[1][i]];
        let cap = ((raw[0].exp() + raw[1].exp()) / 2.0).ln() + 0.75 * 2.0f64.ln();
        let t = [raw[0].min(cap), raw[1].min(cap)];
        let z = t[0].exp() + t[1].exp();
        w[0][i] = t[0].exp() / z;
        w[1][i] = t[1].exp() / z;
    }
    let weighted =
        |i: usize, j: usize| (w[0][i] * ll[0][j].exp() + w[1][i] * ll[1][j].exp()).ln();
    let contrib = [-2.0 * weighted(0, 0), -2.0 * weighted(1, 1)];
    let term1 = contrib[0] + contrib[1];
    let mut term2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            term2 += weighted(i, j);
        }
    }
    let loo = term1 + term2 * 2.0 / 2.0;
    let m = (contrib[0] + contrib[1]) / 2.0;
    let var = (contrib[0] - m) * (contrib[0] - m) + (contrib[1] - m) * (contrib[1] - m);
    (loo, (2.0 * var).sqrt())
}

#[test]
fn criterion_5_criteria_oracles() {
    // One matrix where no weight hits the cap and one where the first
    // column's largest weight does.
    let cases = [[[-1.2, -0.4], [-0.8, -2.1]], [[-5.0, -0.3], [-0.2, -0.25]]];
    let mut worst: f64 = 0.0;
    for ll in cases {
        let m = DMatrix::from_row_slice(2, 2, &[ll[0][0], ll[0][1], ll[1][0], ll[1][1]]);
        let mat = LogLikMatrix::new(m).unwrap();
        let got_w = waic(&mat).unwrap();
        let got_l = loo_cv(&mat).unwrap();
        let (hw, hse, hp, hl) = hand_waic_2x2(ll);
        let (hloo, hloo_se) = hand_loo_2x2(ll);
        for (got, hand) in [
            (got_w.waic, hw),
            (got_w.waic_se, hse),
            (got_w.p_waic, hp),
            (got_w.lppd, hl),
            (got_l.loo, hloo),
            (got_l.loo_se, hloo_se),
        ] {
            worst = worst.max((got - hand).abs());
        }
    }
    let hand_ok = worst <= 1e-10;

    // Brute-force direct formula on random draw-by-observation matrices.
    let mut brute_worst: f64 = 0.0;
    for seed in [101u64, 202, 303] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(50, 20, |_, _| {
            let e: f64 = StandardNormal.sample(&mut rng);
            -1.0 + 0.7 * e
        });
        let mat = LogLikMatrix::new(m.clone()).unwrap();
        let got = waic(&mat).unwrap();
        let (mut total, mut lppd, mut p) = (0.0, 0.0, 0.0);
        for i in 0..20 {
            let col: Vec<f64> = (0..50).map(|s| m[(s, i)]).collect();
            let lppd_i = (col.iter().map(|v| v.exp()).sum::<f64>() / 50.0).ln();
            let cm = col.iter().sum::<f64>() / 50.0;
            let p_i = col.iter().map(|v| (v - cm) * (v - cm)).sum::<f64>() / 49.0;
            lppd += lppd_i;
            p += p_i;
            total += -2.0 * (lppd_i - p_i);
        }
        for (got, brute) in [(got.waic, total), (got.lppd, lppd), (got.p_waic, p)] {
            brute_worst = brute_worst.max((got - brute).abs());
        }
    }
    let brute_ok = brute_worst <= 1e-10;

    verdict(
        5,
        "criteria oracles",
        hand_ok && brute_ok,
        &format!(
            "hand 2x2 worst gap {worst:.2e}, brute-force 50x20 worst gap {brute_worst:.2e}"
        ),
    );
}

fn psi_properties_hold() -> (bool, String) {
    let alphas = [-1.5, -0.5, 0.0, 0.3, 0.5, 1.0, 1.3, 2.0, 2.7, 4.0];
    let xs = [0.05, 0.2, 0.5, 1.0, 1.7, 3.0, 4.5];

    let mut worst_at_one: f64 = 0.0;
    for &a in &alphas {
        worst_at_one = worst_at_one.max(psi(1.0, a).unwrap().abs());
        worst_at_one = worst_at_one.max(psi_prime(1.0, a).unwrap().abs());
    }

    let mut convex = true;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for &a in &alphas {
        for _ in 0..50 {
            let x = 0.05 + 4.0 * rng.random::<f64>();
            let y = 0.05 + 4.0 * rng.random::<f64>();
            let mid = psi((x + y) / 2.0, a).unwrap();
            let chord = (psi(x, a).unwrap() + psi(y, a).unwrap()) / 2.0;
            if mid > chord + 1e-12 {
                convex = false;
            }
        }
    }

    // The dedicated branches at 0, 1, and 2 must be the limits of the
    // general formula.
    let mut worst_limit: f64 = 0.0;
    for &x in &xs {
        for target in [0.0, 1.0, 2.0] {
            for side in [-1e-8, 1e-8] {
                let gap = (psi(x, target + side).unwrap() - psi(x, target).unwrap()).abs();
                worst_limit = worst_limit.max(gap);
            }
        }
    }

    let ok = worst_at_one <= 1e-12 && convex && worst_limit <= 1e-6;
    (
        ok,
        format!(
            "psi at 1 worst {worst_at_one:.1e}, convex: {convex}, branch-limit gap {worst_limit:.1e}"
        ),
    )
}

fn rows_are_stochastic() -> (bool, f64) {
    let mut worst: f64 = 0.0;
    for seed in [5u64, 7, 16, 19, 28, 40, 171] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = random_node_list(50, 200, &mut rng);
        let adj = build_adjacency(&nodes, 50).unwrap();
        let w = row_standardize(&adj).unwrap();
        for i in 0..50 {
            worst = worst.max((w.matrix().row(i).sum() - 1.0).abs());
        }
    }
    (worst <= 1e-12, worst)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Run one CLI command twice into fresh directories and compare every
/// output byte.
fn rerun_is_identical(args: &[&str], root: &Path, tag: &str) -> bool {
    let mut dirs = Vec::new();
    for round in 0..2 {
        let out_dir = root.join(format!("{tag}{round}"));
        fs::create_dir(&out_dir).unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_sardiag"))
            .args(args)
            .args(["--out", out_dir.to_str().unwrap()])
            .output()
            .expect("binary should run");
        assert!(
            out.status.success(),
            "{tag} run {round} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        dirs.push(out_dir);
    }
    dir_bytes(&dirs[0]) == dir_bytes(&dirs[1])
}

fn cli_reruns_are_bit_identical(root: &Path) -> (bool, String) {
    let write = |name: &str, contents: &str| {
        let p = root.join(name);
        fs::write(&p, contents).unwrap();
        p
    };

    let graph_cfg = write("graph.json", r#"{ "n": 16, "random_pairs": 50 }"#);
    let sim_cfg = write(
        "sim.json",
        r#"{
            "n": 15,
            "graph": { "random_pairs": 45 },
            "covariates": { "means": [-1.0], "sds": [1.0] },
            "params": { "rho": 0.6, "sigma": 1.0, "beta": [0.0, 0.4] },
            "contaminate": { "position": 4 },
            "seed": 11
        }"#,
    );

    let mut results = Vec::new();
    results.push((
        "graph",
        rerun_is_identical(
            &["graph", "--config", graph_cfg.to_str().unwrap(), "--seed", "3"],
            root,
            "graph",
        ),
    ));
    results.push((
        "simulate",
        rerun_is_identical(
            &["simulate", "--config", sim_cfg.to_str().unwrap()],
            root,
            "sim",
        ),
    ));

    // Later commands read the first simulate run's files.
    let sim_dir = root.join("sim0");
    let fit_cfg = write(
        "fit.json",
        &format!(
            r#"{{
                "y_csv": "{}",
                "x_csv": "{}",
                "covariates": 1,
                "w_csv": "{}",
                "n_chains": 2,
                "n_iter": 400
            }}"#,
            sim_dir.join("z.csv").display(),
            sim_dir.join("x.csv").display(),
            sim_dir.join("w.csv").display()
        ),
    );
    results.push((
        "fit",
        rerun_is_identical(
            &["fit", "--config", fit_cfg.to_str().unwrap(), "--seed", "5"],
            root,
            "fit",
        ),
    ));

    // An intercept-only fit supplies the second comparison model.
    let fit0_cfg = write(
        "fit0.json",
        &format!(
            r#"{{ "y_csv": "{}", "w_csv": "{}", "n_chains": 2, "n_iter": 400 }}"#,
            sim_dir.join("z.csv").display(),
            sim_dir.join("w.csv").display()
        ),
    );
    let fit0_dir = root.join("fit_base");
    fs::create_dir(&fit0_dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sardiag"))
        .args(["fit", "--config", fit0_cfg.to_str().unwrap(), "--seed", "6"])
        .args(["--out", fit0_dir.to_str().unwrap()])
        .output()
        .expect("binary should run");
    assert!(out.status.success(), "base fit failed: {}", String::from_utf8_lossy(&out.stderr));

    let cmp_cfg = write(
        "cmp.json",
        &format!(
            r#"{{
                "models": [
                    {{ "label": "m1", "loglik_csv": "{}" }},
                    {{ "label": "m2", "loglik_csv": "{}" }}
                ]
            }}"#,
            fit0_dir.join("loglik.csv").display(),
            root.join("fit0").join("loglik.csv").display()
        ),
    );
    results.push((
        "compare",
        rerun_is_identical(&["compare", "--config", cmp_cfg.to_str().unwrap()], root, "cmp"),
    ));

    let diag_cfg = write(
        "diag.json",
        &format!(
            r#"{{
                "y_csv": "{}",
                "x_csv": "{}",
                "covariates": 1,
                "w_csv": "{}",
                "draws_csv": "{}",
                "measures": [
                    {{ "kind": "kl" }},
                    {{ "kind": "is" }},
                    {{ "kind": "l2" }},
                    {{ "kind": "bregman", "alpha": 0.5 }}
                ]
            }}"#,
            sim_dir.join("z.csv").display(),
            sim_dir.join("x.csv").display(),
            sim_dir.join("w.csv").display(),
            root.join("fit0").join("draws.csv").display()
        ),
    );
    results.push((
        "diagnose",
        rerun_is_identical(
            &["diagnose", "--config", diag_cfg.to_str().unwrap()],
            root,
            "diag",
        ),
    ));

    let ok = results.iter().all(|(_, same)| *same);
    let detail = results
        .iter()
        .map(|(name, same)| format!("{name} {}", if *same { "identical" } else { "DIFFERS" }))
        .collect::<Vec<_>>()
        .join(", ");
    (ok, detail)
}

#[test]
fn criterion_6_property_suites() {
    let (psi_ok, psi_detail) = psi_properties_hold();
    let (rows_ok, worst_row) = rows_are_stochastic();

    // Share-of-draws proportions must sum to one exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let per_draw = DMatrix::from_fn(1024, 13, |_, _| rng.random::<f64>());
    let synthetic_sum: f64 = supreme_proportion(&per_draw).unwrap().iter().sum();

    // Self-divergence on a small fitted model: replacing outcomes by
    // themselves must score zero influence everywhere.
    let n = 12;
    let nodes: Vec<usize> =
        (1..=n).flat_map(|i| [i, if i == n { 1 } else { i + 1 }]).collect();
    let adj = build_adjacency(&nodes, n).unwrap();
    let w = row_standardize(&adj).unwrap();
    let params = SarParams::new(0.4, 1.0, vec![1.0]).unwrap();
    let y = sar_simulate(&w, &DMatrix::zeros(n, 0), &params, 3).unwrap();
    let data = SarDataset::new(y.clone(), DMatrix::zeros(n, 0), w).unwrap();
    let cfg = FitConfig { n_chains: 2, n_iter: 600, seed: 8, ..Default::default() };
    let draws = fit(&data, &cfg).unwrap();

    let kl_self = kl_divergence(&data, &y, &draws, OutputType::PerObservation).unwrap();
    let kl_exact_zero = kl_self.values.iter().all(|v| *v == 0.0);
    let aux = AuxiliaryDensity::fit(AuxKind::Normal, draws.values()).unwrap();
    let prior = PriorConfig::default();
    let is_self =
        is_divergence(&data, &y, &draws, &prior, &aux, OutputType::PerObservation).unwrap();
    let l2_self = bregman_divergence(
        &data,
        &y,
        &draws,
        &prior,
        &aux,
        2.0,
        OutputType::PerObservation,
    )
    .unwrap();
    let density_small = is_self
        .values
        .iter()
        .chain(l2_self.values.iter())
        .all(|v| v.abs() <= 1e-10);

    // Proportions from the fitted path, on deliberately shifted outcomes so
    // the draw maxima spread over observations.
    let mut shifted = y.clone();
    shifted[3] += 1.5;
    let fitted_sum: f64 = kl_divergence(&data, &shifted, &draws, OutputType::SupremeProportion)
        .unwrap()
        .values
        .iter()
        .sum();

    let dir = tempfile::tempdir().unwrap();
    let (cli_ok, cli_detail) = cli_reruns_are_bit_identical(dir.path());

    let sums_exact = synthetic_sum == 1.0 && fitted_sum == 1.0;
    let ok = psi_ok && rows_ok && sums_exact && kl_exact_zero && density_small && cli_ok;
    verdict(
        6,
        "property suites",
        ok,
        &format!(
            "{psi_detail}; worst row-sum gap {worst_row:.1e}; proportion sums {synthetic_sum} and {fitted_sum}; \
             self-divergence zero: {} and {density_small}; reruns: {cli_detail}",
            kl_exact_zero
        ),
    );
}
