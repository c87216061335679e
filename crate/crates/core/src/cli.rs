//! `sgorder` command line: matching runs, training, spectrum analysis and
//! query generation.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::checkpoint::{load_model_file, save_model_file};
use crate::enumerate::{
    enumerate, EnumResult, Limits, Termination, DEFAULT_MATCH_LIMIT, DEFAULT_TIME_LIMIT_SECS,
};
use crate::error::{Error, Result};
use crate::filter::{global_refine, local_prune, CandidateSets, DEFAULT_REFINE_ROUNDS};
use crate::graph::{
    compute_stats, extract_connected_query, load_graph_file, load_query_file, save_graph_file, GraphStats,
    LabeledGraph,
};
use crate::oracle::{spectrum, OrderFamily};
use crate::order::{order_gql, order_infrequent_label, order_qsi, order_ri, MatchingOrder, Strategy};
use crate::policy::{PolicyConfig, PolicyModel, DEFAULT_DROPOUT, DEFAULT_HIDDEN, DEFAULT_LAYERS};
use crate::trainer::{greedy_order, train, EpochMetrics, Optimizer, RolloutOptions, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "sgorder",
    version,
    about = "Subgraph matching with learned query-vertex orders"
)]
pub struct Cli {
    /// Seed for model initialization, training and query extraction.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-query parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter, order and enumerate each query; one CSV row per query.
    Match(MatchArgs),
    /// Train an ordering policy and write a checkpoint.
    Train(TrainArgs),
    /// Enumerate one query under every order of a family.
    Spectrum(SpectrumArgs),
    /// Extract random connected queries from a data graph.
    GenQueries(GenQueriesArgs),
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Query files or directories of `*.graph` files.
    #[arg(long, num_args = 1.., required = true)]
    pub queries: Vec<PathBuf>,
    /// One of ri, qsi, gql, label, rl.
    #[arg(long, default_value = "ri", value_parser = parse_strategy)]
    pub order: Strategy,
    /// Policy checkpoint, required by `--order rl`.
    #[arg(long, required_if_eq("order", "rl"))]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MATCH_LIMIT)]
    pub limit: u64,
    /// Per-query enumeration time limit in seconds.
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECS as f64)]
    pub timeout: f64,
    #[arg(long, default_value_t = DEFAULT_REFINE_ROUNDS)]
    pub refine_rounds: usize,
    /// Print every match to stderr as `match <query_id> <v0> <v1> ...`.
    #[arg(long)]
    pub materialize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Training query files or directories of `*.graph` files.
    #[arg(long, num_args = 1.., required = true)]
    pub queries: Vec<PathBuf>,
    /// Use only the first fraction of the (sorted) queries for training.
    #[arg(long, default_value_t = 1.0)]
    pub train_fraction: f64,
    /// Defaults to 100, or 10 with `--init`.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Defaults to 64, or the checkpoint's width with `--init`.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Defaults to 2, or the checkpoint's depth with `--init`.
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DROPOUT)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_val: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta_h: f64,
    #[arg(long, default_value_t = 0.2)]
    pub clip_eps: f64,
    /// adam or sgd.
    #[arg(long, default_value = "adam", value_parser = parse_optimizer)]
    pub optimizer: Optimizer,
    #[arg(long, default_value_t = DEFAULT_MATCH_LIMIT)]
    pub limit: u64,
    /// Queries whose enumeration exceeds this many seconds are skipped.
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECS as f64)]
    pub timeout: f64,
    #[arg(long, default_value_t = DEFAULT_REFINE_ROUNDS)]
    pub refine_rounds: usize,
    /// Continue training from this checkpoint.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch metrics CSV; written to stdout when absent.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    /// connected or permutations.
    #[arg(long, default_value = "connected", value_parser = parse_family)]
    pub family: OrderFamily,
    #[arg(long, default_value_t = DEFAULT_REFINE_ROUNDS)]
    pub refine_rounds: usize,
}

#[derive(Debug, Args)]
pub struct GenQueriesArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated query sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Queries per size.
    #[arg(long)]
    pub count: usize,
    /// Output directory; files are named `query_<size>_<idx>.graph`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    match s.parse::<Strategy>() {
        Ok(Strategy::Custom) => Err("`custom` orders cannot be requested from the command line".into()),
        Ok(strategy) => Ok(strategy),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_optimizer(s: &str) -> std::result::Result<Optimizer, String> {
    match s {
        "adam" => Ok(Optimizer::Adam),
        "sgd" => Ok(Optimizer::Sgd),
        other => Err(format!("unknown optimizer `{other}`")),
    }
}

fn parse_family(s: &str) -> std::result::Result<OrderFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub const REPORT_HEADER: &str =
    "query_id,strategy,order,t_filter,t_order,t_enum,enum_calls,match_count,solved,terminated_by";

/// One row of the `match` report. Times are in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryReport {
    pub query_id: String,
    pub strategy: Strategy,
    pub order: MatchingOrder,
    pub t_filter: f64,
    pub t_order: f64,
    pub t_enum: f64,
    pub enum_calls: u64,
    pub match_count: u64,
    pub solved: bool,
    pub terminated_by: Termination,
}

impl QueryReport {
    pub fn total_time(&self) -> f64 {
        self.t_filter + self.t_order + self.t_enum
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
            self.query_id,
            self.strategy,
            self.order.to_label(),
            self.t_filter,
            self.t_order,
            self.t_enum,
            self.enum_calls,
            self.match_count,
            self.solved,
            self.terminated_by.as_str()
        )
    }
}

/// Order for `q` under a named strategy. `model` is required for [`Strategy::Rl`].
pub fn compute_order(
    strategy: Strategy,
    q: &LabeledGraph,
    stats: &GraphStats,
    c: &CandidateSets,
    model: Option<&PolicyModel>,
) -> Result<MatchingOrder> {
    match strategy {
        Strategy::Ri => order_ri(q),
        Strategy::Qsi => order_qsi(q, stats),
        Strategy::Gql => order_gql(q, c),
        Strategy::Label => order_infrequent_label(q, stats),
        Strategy::Rl => {
            let model = model.ok_or_else(|| Error::Config("the rl strategy needs a model".into()))?;
            greedy_order(model, q, stats, RolloutOptions::default())
        }
        Strategy::Custom => Err(Error::Config("custom orders must be supplied explicitly".into())),
    }
}

/// Settings shared by every query of a `match` run.
#[derive(Debug, Clone, Copy)]
pub struct MatchSettings<'a> {
    pub strategy: Strategy,
    pub model: Option<&'a PolicyModel>,
    pub limits: Limits,
    pub refine_rounds: usize,
}

/// Filter, order and enumerate one query.
///
/// A query stopped by the time limit is reported with `t_enum` padded so the
/// total equals the timeout.
pub fn run_query(
    query_id: &str,
    q: &LabeledGraph,
    g: &LabeledGraph,
    stats: &GraphStats,
    settings: MatchSettings<'_>,
) -> Result<(QueryReport, EnumResult)> {
    let start = Instant::now();
    let c = global_refine(q, g, &local_prune(q, g), settings.refine_rounds);
    let t_filter = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let order = compute_order(settings.strategy, q, stats, &c, settings.model)?;
    let t_order = start.elapsed().as_secs_f64();
    let result = enumerate(q, g, &c, &order, settings.limits);
    let solved = result.terminated_by != Termination::TimeLimit;
    let t_enum = match (solved, settings.limits.time_limit) {
        (false, Some(limit)) => (limit.as_secs_f64() - t_filter - t_order).max(0.0),
        _ => result.elapsed.as_secs_f64(),
    };
    let report = QueryReport {
        query_id: query_id.to_string(),
        strategy: settings.strategy,
        order,
        t_filter,
        t_order,
        t_enum,
        enum_calls: result.enum_calls,
        match_count: result.match_count,
        solved,
        terminated_by: result.terminated_by,
    };
    Ok((report, result))
}

/// Expands directories to their `*.graph` files; the result is sorted.
pub fn collect_query_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = fs::read_dir(input).map_err(|e| Error::io(input, e))?;
            for entry in entries {
                let path = entry.map_err(|e| Error::io(input, e))?.path();
                if path.extension().is_some_and(|ext| ext == "graph") {
                    paths.push(path);
                }
            }
        } else {
            paths.push(input.clone());
        }
    }
    paths.sort();
    Ok(paths)
}

fn query_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_queries(paths: &[PathBuf], g: &LabeledGraph) -> Result<Vec<(String, LabeledGraph)>> {
    paths
        .iter()
        .map(|p| Ok((query_id(p), load_query_file(p, g)?)))
        .collect()
}

fn time_limit(seconds: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(seconds).map_err(|_| Error::Config(format!("invalid timeout {seconds}")))
}

pub fn cmd_match(
    args: &MatchArgs,
    pool: &ThreadPool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let g = load_graph_file(&args.data)?;
    let stats = compute_stats(&g);
    let queries = load_queries(&collect_query_paths(&args.queries)?, &g)?;
    let model = match (&args.model, args.order) {
        (Some(path), Strategy::Rl) => Some(load_model_file(path)?),
        (None, Strategy::Rl) => return Err(Error::Config("--order rl requires --model".into())),
        _ => None,
    };
    let mut limits = Limits::unlimited()
        .with_match_limit(args.limit)
        .with_time_limit(time_limit(args.timeout)?);
    if args.materialize {
        limits = limits.materialized();
    }
    let settings = MatchSettings {
        strategy: args.order,
        model: model.as_ref(),
        limits,
        refine_rounds: args.refine_rounds,
    };
    let results = pool.install(|| {
        queries
            .par_iter()
            .map(|(id, q)| run_query(id, q, &g, &stats, settings))
            .collect::<Result<Vec<_>>>()
    })?;
    writeln!(out, "{REPORT_HEADER}")?;
    for (report, result) in &results {
        writeln!(out, "{}", report.to_csv_row())?;
        for m in &result.matches {
            let vertices: Vec<String> = m.iter().map(|v| v.to_string()).collect();
            writeln!(err, "match {} {}", report.query_id, vertices.join(" "))?;
        }
    }
    Ok(())
}

pub fn cmd_train(
    args: &TrainArgs,
    seed: u64,
    pool: &ThreadPool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    if !(args.train_fraction > 0.0 && args.train_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "train fraction {} outside (0, 1]",
            args.train_fraction
        )));
    }
    let g = load_graph_file(&args.data)?;
    let paths = collect_query_paths(&args.queries)?;
    let keep = ((paths.len() as f64 * args.train_fraction).ceil() as usize).min(paths.len());
    let queries: Vec<LabeledGraph> = load_queries(&paths[..keep], &g)?
        .into_iter()
        .map(|(_, q)| q)
        .collect();

    let initial = match &args.init {
        Some(path) => {
            let model = load_model_file(path)?;
            let c = model.config();
            if args.dim.is_some_and(|d| d != c.hidden) || args.layers.is_some_and(|l| l != c.layers) {
                return Err(Error::Config(format!(
                    "checkpoint has layers={} dim={}, which disagrees with the requested architecture",
                    c.layers, c.hidden
                )));
            }
            Some(model)
        }
        None => None,
    };
    let epochs = args.epochs.unwrap_or(if initial.is_some() { 10 } else { 100 });
    let cfg = TrainConfig {
        learning_rate: args.lr,
        epochs,
        gamma: args.gamma,
        beta_val: args.beta_val,
        beta_h: args.beta_h,
        clip_eps: args.clip_eps,
        match_limit: args.limit,
        time_limit: time_limit(args.timeout)?,
        refine_rounds: args.refine_rounds,
        seed,
        optimizer: args.optimizer,
        policy: PolicyConfig {
            layers: args.layers.unwrap_or(DEFAULT_LAYERS),
            hidden: args.dim.unwrap_or(DEFAULT_HIDDEN),
            dropout: args.dropout,
            seed,
        },
        ..TrainConfig::default()
    };
    let outcome = pool.install(|| train(initial, &g, &queries, &cfg))?;
    save_model_file(&outcome.model, &args.out)?;

    let mut csv = String::new();
    csv.push_str(EpochMetrics::CSV_HEADER);
    csv.push('\n');
    for m in &outcome.metrics {
        csv.push_str(&m.to_csv_row());
        csv.push('\n');
    }
    match &args.metrics {
        Some(path) => fs::write(path, csv).map_err(|e| Error::io(path, e))?,
        None => out.write_all(csv.as_bytes())?,
    }
    writeln!(
        err,
        "trained on {} queries for {} epochs in {:.3}s",
        queries.len(),
        epochs,
        outcome.elapsed.as_secs_f64()
    )?;
    Ok(())
}

pub fn cmd_spectrum(args: &SpectrumArgs, pool: &ThreadPool, out: &mut dyn Write) -> Result<()> {
    let g = load_graph_file(&args.data)?;
    let q = load_query_file(&args.query, &g)?;
    let c = global_refine(&q, &g, &local_prune(&q, &g), args.refine_rounds);
    let report = pool.install(|| spectrum(&q, &g, &c, args.family))?;
    writeln!(out, "order,enum_calls")?;
    for entry in &report.entries {
        let order: Vec<String> = entry.order.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{}", order.join(" "), entry.enum_calls)?;
    }
    writeln!(
        out,
        "# orders={} min_enum_calls={} optimal_orders={}",
        report.orders_evaluated(),
        report.min_enum_calls,
        report.optimal.len()
    )?;
    Ok(())
}

/// Seed of the `idx`-th query of size `size`.
pub fn query_seed(seed: u64, size: usize, idx: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((size as u64) << 32)
        .wrapping_add(idx as u64)
}

pub fn cmd_gen_queries(args: &GenQueriesArgs, seed: u64, err: &mut dyn Write) -> Result<()> {
    let g = load_graph_file(&args.data)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    for &size in &args.sizes {
        for idx in 0..args.count {
            let q = extract_connected_query(&g, size, query_seed(seed, size, idx))?;
            let path = args.out.join(format!("query_{size}_{idx}.graph"));
            save_graph_file(&q, &path)?;
        }
    }
    writeln!(
        err,
        "wrote {} queries to {}",
        args.sizes.len() * args.count,
        args.out.display()
    )?;
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if cli.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    match &cli.command {
        Command::Match(args) => cmd_match(args, &pool, out, err),
        Command::Train(args) => cmd_train(args, cli.seed, &pool, out, err),
        Command::Spectrum(args) => cmd_spectrum(args, &pool, out),
        Command::GenQueries(args) => cmd_gen_queries(args, cli.seed, err),
    }
}

/// Process entry point: usage errors exit with 2, runtime errors with 1.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    match run(&cli, &mut out, &mut err) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::FAILURE
        }
    }
}
