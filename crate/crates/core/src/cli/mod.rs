//! Command-line interface: `graph`, `simulate`, `fit`, `compare`,
//! `diagnose`.
//!
//! Every command reads a JSON config, computes everything in memory, and
//! only then writes its output files, so a failing run leaves no partial
//! outputs. Each JSON report embeds the resolved config and the seed that
//! produced it. Randomized commands take their seed from exactly one place:
//! either the `--seed` flag or a `seed` field in the config, never both.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::compare::{compare, loo_cv, waic, ComparisonEntry, LogLikMatrix, RankedModel};
use crate::divergence::{
    bregman_divergence, impute_yhat, is_divergence, kl_divergence, AuxKind, AuxiliaryDensity,
    DivergenceReport, ImputeMethod, OutputType,
};
use crate::graph::{build_adjacency, random_node_list, row_standardize, WeightMatrix};
use crate::model::{contaminate, sar_simulate, PriorConfig, SarDataset, SarParams};
use crate::sampler::{fit, summarize, FitConfig, SummaryRow};
use crate::{io, svg, Error, Result};

#[derive(Parser)]
#[command(
    name = "sardiag",
    version,
    about = "Bayesian spatial autoregressive models with case-deletion influence diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a spatial weight matrix from node pairs
    Graph(GraphArgs),
    /// Simulate a dataset: graph, covariates, outcomes, optional outlier
    Simulate(SimulateArgs),
    /// Sample the posterior and summarize it
    Fit(FitArgs),
    /// Rank fitted models by WAIC and cross-validation
    Compare(CompareArgs),
    /// Score observations for influence with divergence measures
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// RNG seed (only with random graphs; exclusive with the config seed)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// RNG seed (exclusive with the config seed)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// RNG seed (exclusive with the config seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the chains; 0 means one per chain
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Graph(a) => cmd_graph(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

// ---- shared plumbing -------------------------------------------------------

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Enforce the single-source seed rule.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    match (flag, config) {
        (Some(_), Some(_)) => Err(Error::invalid(
            "seed given twice: drop either --seed or the config's \"seed\" field".to_string(),
        )),
        (Some(s), None) | (None, Some(s)) => Ok(s),
        (None, None) => Err(Error::invalid(
            "a seed is required: pass --seed or set \"seed\" in the config".to_string(),
        )),
    }
}

/// Derive an independent stream seed for one stage of a command.
fn subseed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct OutputSet {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    fn new(dir: &Path) -> Self {
        OutputSet { dir: dir.to_path_buf(), files: Vec::new() }
    }

    fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((self.dir.join(name), contents.into()));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::invalid(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    /// Write everything; called only after the command fully succeeded.
    fn flush(self) -> Result<()> {
        for (path, contents) in &self.files {
            io::write_file(path, contents)?;
        }
        for (path, _) in &self.files {
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn dataset_from_files(
    y_csv: &str,
    x_csv: Option<&str>,
    w_csv: &str,
    covariates: Option<usize>,
) -> Result<SarDataset> {
    let y = io::read_vector_csv(Path::new(y_csv))?;
    let w = WeightMatrix::from_matrix(io::read_matrix_csv(Path::new(w_csv))?)?;
    let x_full = match x_csv {
        Some(p) => io::read_matrix_csv(Path::new(p))?,
        None => DMatrix::zeros(y.len(), 0),
    };
    let k_use = match covariates {
        Some(k) => {
            if k > x_full.ncols() {
                return Err(Error::invalid(format!(
                    "config asks for {k} covariates but the covariate file has {} columns",
                    x_full.ncols()
                )));
            }
            k
        }
        None => x_full.ncols(),
    };
    let x = x_full.columns(0, k_use).into_owned();
    SarDataset::new(y, x, w)
}

// ---- graph -----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphConfig {
    /// Number of nodes.
    n: usize,
    /// Explicit flat list of 1-based node indices, read in pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<usize>>,
    /// Number of random pairs to draw uniformly with replacement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    random_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct GraphReport<'a> {
    command: &'static str,
    seed: Option<u64>,
    config: &'a GraphConfig,
    n: usize,
    edge_count: usize,
}

fn build_graph_from_config(
    n: usize,
    nodes: &Option<Vec<usize>>,
    random_pairs: Option<usize>,
    flag_seed: Option<u64>,
    config_seed: Option<u64>,
) -> Result<(crate::graph::AdjacencyMatrix, Option<u64>)> {
    match (nodes, random_pairs) {
        (Some(_), Some(_)) => Err(Error::invalid(
            "give either \"nodes\" or \"random_pairs\", not both".to_string(),
        )),
        (None, None) => Err(Error::invalid(
            "the graph needs either \"nodes\" or \"random_pairs\"".to_string(),
        )),
        (Some(list), None) => {
            if flag_seed.is_some() || config_seed.is_some() {
                return Err(Error::invalid(
                    "an explicit node list takes no seed".to_string(),
                ));
            }
            Ok((build_adjacency(list, n)?, None))
        }
        (None, Some(pairs)) => {
            let seed = resolve_seed(flag_seed, config_seed)?;
            let mut rng = crate::cli::seeded_rng(subseed(seed, 1));
            let list = random_node_list(n, 2 * pairs, &mut rng);
            Ok((build_adjacency(&list, n)?, Some(seed)))
        }
    }
}

pub(crate) fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn cmd_graph(args: GraphArgs) -> Result<()> {
    let cfg: GraphConfig = load_config(&args.config)?;
    let (adj, seed) =
        build_graph_from_config(cfg.n, &cfg.nodes, cfg.random_pairs, args.seed, cfg.seed)?;
    let w = row_standardize(&adj)?;
    let edges = adj.edges();

    let mut out = OutputSet::new(&args.out);
    out.add("a.csv", io::matrix_to_csv(adj.matrix()));
    out.add("w.csv", io::matrix_to_csv(w.matrix()));
    out.add("edges.csv", io::edges_to_csv(&edges));
    out.add_json(
        "graph.json",
        &GraphReport { command: "graph", seed, config: &cfg, n: cfg.n, edge_count: edges.len() },
    )?;
    out.flush()
}

// ---- simulate ---------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CovariateSpec {
    /// Per-column means of independent normal covariates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    means: Option<Vec<f64>>,
    /// Per-column standard deviations, same length as `means`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sds: Option<Vec<f64>>,
    /// Alternatively, read the covariate matrix from a file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_csv: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSpec {
    rho: f64,
    sigma: f64,
    beta: Vec<f64>,
}

fn default_level() -> f64 {
    0.99
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContaminateSpec {
    /// 1-based observation to shift.
    position: usize,
    #[serde(default = "default_level")]
    level: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    random_pairs: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    n: usize,
    graph: GraphSpec,
    /// Covariates; omit for an intercept-only model. The first
    /// `beta.len() - 1` columns enter the simulated mean, all columns are
    /// written to x.csv.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariates: Option<CovariateSpec>,
    params: ParamsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contaminate: Option<ContaminateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    command: &'static str,
    seed: u64,
    config: &'a SimulateConfig,
    n: usize,
    edge_count: usize,
    covariate_columns: usize,
    contaminated_position: Option<usize>,
}

fn simulate_covariates(
    spec: &Option<CovariateSpec>,
    n: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    let Some(spec) = spec else {
        return Ok(DMatrix::zeros(n, 0));
    };
    match (&spec.means, &spec.sds, &spec.x_csv) {
        (Some(means), Some(sds), None) => {
            if means.len() != sds.len() || means.is_empty() {
                return Err(Error::invalid(
                    "covariate means and sds must be non-empty and equal length".to_string(),
                ));
            }
            if sds.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                return Err(Error::invalid("covariate sds must be positive".to_string()));
            }
            let mut rng = seeded_rng(seed);
            let mut x = DMatrix::zeros(n, means.len());
            for i in 0..n {
                for j in 0..means.len() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[(i, j)] = means[j] + sds[j] * z;
                }
            }
            Ok(x)
        }
        (None, None, Some(path)) => {
            let x = io::read_matrix_csv(Path::new(path))?;
            if x.nrows() != n {
                return Err(Error::invalid(format!(
                    "{path}: covariate file has {} rows, expected {n}",
                    x.nrows()
                )));
            }
            Ok(x)
        }
        _ => Err(Error::invalid(
            "covariates need either means+sds or x_csv, not a mixture".to_string(),
        )),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg: SimulateConfig = load_config(&args.config)?;
    let seed = resolve_seed(args.seed, cfg.seed)?;

    let (adj, _) = build_graph_from_config(
        cfg.n,
        &cfg.graph.nodes,
        cfg.graph.random_pairs,
        // graph randomness inside simulate comes from the command seed
        if cfg.graph.random_pairs.is_some() { Some(subseed(seed, 1)) } else { None },
        None,
    )
    .map_err(|e| match e {
        // the inner helper phrases seed errors for the graph command
        Error::InvalidInput(m) if m.contains("takes no seed") => {
            Error::invalid("a graph with an explicit node list needs no random_pairs".to_string())
        }
        other => other,
    })?;
    let w = row_standardize(&adj)?;

    let x = simulate_covariates(&cfg.covariates, cfg.n, subseed(seed, 2))?;
    let params = SarParams::new(cfg.params.rho, cfg.params.sigma, cfg.params.beta.clone())?;
    let k_mean = params.beta.len() - 1;
    if k_mean > x.ncols() {
        return Err(Error::invalid(format!(
            "beta has {} coefficients after the intercept but only {} covariates are available",
            k_mean,
            x.ncols()
        )));
    }
    let x_mean = x.columns(0, k_mean).into_owned();
    let y = sar_simulate(&w, &x_mean, &params, subseed(seed, 3))?;

    let z = match &cfg.contaminate {
        Some(c) => Some(contaminate(y.as_slice(), c.position, c.level)?),
        None => None,
    };

    let mut out = OutputSet::new(&args.out);
    out.add("a.csv", io::matrix_to_csv(adj.matrix()));
    out.add("w.csv", io::matrix_to_csv(w.matrix()));
    out.add("edges.csv", io::edges_to_csv(&adj.edges()));
    if x.ncols() > 0 {
        out.add("x.csv", io::matrix_to_csv(&x));
    }
    out.add("y.csv", io::vector_to_csv(&y));
    if let Some(z) = &z {
        out.add("z.csv", io::vector_to_csv(&DVector::from_column_slice(z)));
    }
    out.add_json(
        "simulation.json",
        &SimulateReport {
            command: "simulate",
            seed,
            config: &cfg,
            n: cfg.n,
            edge_count: adj.edges().len(),
            covariate_columns: x.ncols(),
            contaminated_position: cfg.contaminate.as_ref().map(|c| c.position),
        },
    )?;
    out.flush()
}

// ---- fit ---------------------------------------------------------------------

fn default_n_chains() -> u32 {
    2
}

fn default_n_iter() -> u32 {
    10_000
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitCliConfig {
    y_csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_csv: Option<String>,
    w_csv: String,
    /// How many columns of x_csv to use; defaults to all of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariates: Option<usize>,
    #[serde(default = "default_n_chains")]
    n_chains: u32,
    #[serde(default = "default_n_iter")]
    n_iter: u32,
    #[serde(default = "PriorConfig::default")]
    prior: PriorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct FitReport<'a> {
    command: &'static str,
    seed: u64,
    config: &'a FitCliConfig,
    acceptance_rates: &'a [f64],
    parameters: &'a [SummaryRow],
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let cfg: FitCliConfig = load_config(&args.config)?;
    let seed = resolve_seed(args.seed, cfg.seed)?;
    let data =
        dataset_from_files(&cfg.y_csv, cfg.x_csv.as_deref(), &cfg.w_csv, cfg.covariates)?;
    let fit_cfg = FitConfig {
        n_chains: cfg.n_chains,
        n_iter: cfg.n_iter,
        seed,
        prior: cfg.prior,
        threads: args.threads,
    };
    let draws = fit(&data, &fit_cfg)?;
    let rows = summarize(&draws)?;
    let loglik = crate::compare::log_likelihood_matrix(&data, &draws)?;

    let mut out = OutputSet::new(&args.out);
    out.add("draws.csv", io::draws_to_csv(&draws));
    out.add("loglik.csv", io::matrix_to_csv(loglik.values()));
    out.add_json(
        "summary.json",
        &FitReport {
            command: "fit",
            seed,
            config: &cfg,
            acceptance_rates: draws.acceptance_rates(),
            parameters: &rows,
        },
    )?;
    for r in &rows {
        println!(
            "{}: mean {:.4}, 95% interval [{:.4}, {:.4}], ess {:.0}, rhat {:.3}",
            r.parameter, r.mean, r.q2_5, r.q97_5, r.ess, r.rhat
        );
    }
    out.flush()
}

// ---- compare -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRef {
    label: String,
    loglik_csv: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareConfig {
    models: Vec<ModelRef>,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    command: &'static str,
    config: &'a CompareConfig,
    models: &'a [RankedModel],
}

fn comparison_csv(models: &[RankedModel]) -> String {
    let mut out =
        String::from("label,waic,waic_se,p_waic,lppd,loo,loo_se,delta_waic,delta_loo\n");
    for m in models {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            m.label, m.waic, m.waic_se, m.p_waic, m.lppd, m.loo, m.loo_se, m.delta_waic,
            m.delta_loo
        ));
    }
    out
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let cfg: CompareConfig = load_config(&args.config)?;
    if cfg.models.len() < 2 {
        return Err(Error::invalid(format!(
            "comparison needs at least 2 models, got {}",
            cfg.models.len()
        )));
    }
    let mut entries = Vec::with_capacity(cfg.models.len());
    let mut n_obs: Option<usize> = None;
    for m in &cfg.models {
        let ll = LogLikMatrix::new(io::read_matrix_csv(Path::new(&m.loglik_csv))?)?;
        match n_obs {
            None => n_obs = Some(ll.n_obs()),
            Some(n) if n != ll.n_obs() => {
                return Err(Error::invalid(format!(
                    "model {} scores {} observations but earlier models score {n}; \
                     comparison needs a common dataset",
                    m.label,
                    ll.n_obs()
                )));
            }
            _ => {}
        }
        entries.push(ComparisonEntry {
            label: m.label.clone(),
            waic: waic(&ll)?,
            loo: loo_cv(&ll)?,
        });
    }
    let ranked = compare(&entries)?;

    let mut out = OutputSet::new(&args.out);
    out.add_json(
        "comparison.json",
        &CompareReport { command: "compare", config: &cfg, models: &ranked },
    )?;
    out.add("comparison.csv", comparison_csv(&ranked));
    out.add("comparison.svg", svg::comparison_svg(&ranked)?);
    for m in &ranked {
        println!(
            "{}: waic {:.2} (se {:.2}), loo {:.2} (se {:.2})",
            m.label, m.waic, m.waic_se, m.loo, m.loo_se
        );
    }
    out.flush()
}

// ---- diagnose -------------------------------------------------------------------

fn default_impute_method() -> u8 {
    1
}

fn default_dist() -> u8 {
    3
}

fn default_output_type() -> u8 {
    1
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureSpec {
    /// One of "kl", "is", "l2", "bregman".
    kind: String,
    /// Generator order, required for "bregman" and rejected elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagnoseConfig {
    y_csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_csv: Option<String>,
    w_csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariates: Option<usize>,
    draws_csv: String,
    #[serde(default = "PriorConfig::default")]
    prior: PriorConfig,
    /// 1 posterior mean, 2 posterior median.
    #[serde(default = "default_impute_method")]
    impute_method: u8,
    /// Auxiliary family for the density-based measures: 1 exponential,
    /// 2 gamma, 3 normal, 4 multivariate normal.
    #[serde(default = "default_dist")]
    dist: u8,
    /// 1 per-observation divergences, 2 supreme proportions.
    #[serde(default = "default_output_type", rename = "type")]
    output_type: u8,
    measures: Vec<MeasureSpec>,
}

#[derive(Serialize)]
struct MeasureReport {
    label: String,
    measure: String,
    alpha: f64,
    /// 1 per-observation divergences, 2 supreme proportions.
    #[serde(rename = "type")]
    output_type: u8,
    /// Count of density evaluations clamped at the smallest positive double.
    clamped: u64,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct DiagnoseReport<'a> {
    command: &'static str,
    config: &'a DiagnoseConfig,
    yhat: Vec<f64>,
    measures: &'a [MeasureReport],
}

fn measure_label(spec: &MeasureSpec) -> Result<String> {
    match spec.kind.as_str() {
        "kl" | "is" | "l2" => {
            if spec.alpha.is_some() {
                return Err(Error::invalid(format!(
                    "measure \"{}\" does not take an alpha; only \"bregman\" does",
                    spec.kind
                )));
            }
            Ok(spec.kind.clone())
        }
        "bregman" => {
            let alpha = spec.alpha.ok_or_else(|| {
                Error::invalid("measure \"bregman\" needs an alpha".to_string())
            })?;
            if alpha == 0.0 || alpha == 1.0 {
                return Err(Error::invalid(format!(
                    "bregman alpha = {alpha} has a dedicated measure: use \"is\" for 0 \
                     and \"kl\" for 1"
                )));
            }
            Ok(format!("bregman_{alpha}"))
        }
        other => Err(Error::invalid(format!(
            "unknown measure kind \"{other}\"; choose kl, is, l2, or bregman"
        ))),
    }
}

fn divergence_csv(measures: &[MeasureReport]) -> String {
    let mut out = String::from("observation,measure,value\n");
    for m in measures {
        for (i, v) in m.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, m.label, v));
        }
    }
    out
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let cfg: DiagnoseConfig = load_config(&args.config)?;
    if cfg.measures.is_empty() {
        return Err(Error::invalid("diagnose needs at least one measure".to_string()));
    }
    let labels: Result<Vec<String>> = cfg.measures.iter().map(measure_label).collect();
    let labels = labels?;
    {
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("measure labels must be unique".to_string()));
        }
    }
    let output = OutputType::try_from(cfg.output_type)?;
    let method = ImputeMethod::try_from(cfg.impute_method)?;

    let data =
        dataset_from_files(&cfg.y_csv, cfg.x_csv.as_deref(), &cfg.w_csv, cfg.covariates)?;
    let draws = io::read_draws_csv(Path::new(&cfg.draws_csv))?;
    let yhat = impute_yhat(&data, &draws, method)?;

    let needs_aux = cfg.measures.iter().any(|m| m.kind != "kl");
    let aux = if needs_aux {
        Some(AuxiliaryDensity::fit(AuxKind::try_from(cfg.dist)?, draws.values())?)
    } else {
        None
    };

    let mut measures = Vec::with_capacity(cfg.measures.len());
    for (spec, label) in cfg.measures.iter().zip(&labels) {
        let report: DivergenceReport = match spec.kind.as_str() {
            "kl" => kl_divergence(&data, &yhat, &draws, output)?,
            "is" => is_divergence(
                &data,
                &yhat,
                &draws,
                &cfg.prior,
                aux.as_ref().expect("aux fitted"),
                output,
            )?,
            "l2" => bregman_divergence(
                &data,
                &yhat,
                &draws,
                &cfg.prior,
                aux.as_ref().expect("aux fitted"),
                2.0,
                output,
            )?,
            "bregman" => bregman_divergence(
                &data,
                &yhat,
                &draws,
                &cfg.prior,
                aux.as_ref().expect("aux fitted"),
                spec.alpha.expect("alpha validated"),
                output,
            )?,
            _ => unreachable!("kinds validated above"),
        };
        measures.push(MeasureReport {
            label: label.clone(),
            measure: report.measure,
            alpha: report.alpha,
            output_type: cfg.output_type,
            clamped: report.flags.clamped,
            values: report.values,
        });
    }

    let value_label = match output {
        OutputType::PerObservation => "divergence",
        OutputType::SupremeProportion => "supreme proportion",
    };
    let series: Vec<(String, Vec<f64>)> =
        measures.iter().map(|m| (m.label.clone(), m.values.clone())).collect();

    let mut out = OutputSet::new(&args.out);
    out.add("yhat.csv", io::vector_to_csv(&yhat));
    out.add_json(
        "divergence.json",
        &DiagnoseReport {
            command: "diagnose",
            config: &cfg,
            yhat: yhat.iter().copied().collect(),
            measures: &measures,
        },
    )?;
    out.add("divergence.csv", divergence_csv(&measures));
    out.add("divergence.svg", svg::divergence_svg(&series, value_label)?);
    for m in &measures {
        let (top, top_v) = m
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i + 1, *v))
            .unwrap_or((0, f64::NAN));
        println!("{}: largest value {:.4} at observation {}", m.label, top_v, top);
    }
    out.flush()
}
