//! The `em-explain` command line.
//!
//! Flags override the JSON file given with `--config`, which mirrors every
//! flag by its long name (underscored) plus an `explainer` object holding an
//! [`ExplainerConfig`]. The seed falls back to `EM_EXPLAIN_SEED`.
//!
//! Exit codes: 0 success, 2 usage or data error, 3 matcher failure.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{load_benchmark_dataset, Dataset, RecordPair};
use crate::error::{Error, MatcherError};
use crate::evaluation::{
    counterfactual_metrics, dataset_hash, explain_all, perturbation_error, select_pairs, stability,
    sweep, Class, SweepAxis, PAIRS_PER_CLASS,
};
use crate::explainer::{explain, ExplainerConfig};
use crate::matcher::external::{HttpMatcher, StdioMatcher};
use crate::matcher::protocol::{serve_http, serve_stdio};
use crate::matcher::{
    train_baseline_matcher, BaselineMatcher, BaselineMatcherModel, Matcher, TrainConfig,
};
use crate::render::render;

pub const SEED_ENV: &str = "EM_EXPLAIN_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MATCHER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "em-explain", version, about = "Explain entity-matching decisions")]
pub struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the built-in matcher and write its model file.
    Train(TrainArgs),
    /// Explain one record pair.
    Explain(ExplainArgs),
    /// Run an evaluation over pairs of a split.
    Evaluate(EvaluateArgs),
    /// Serve a matcher over the em-matcher/1 protocol (stdio unless --http).
    Serve(ServeArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Benchmark directory with tableA/tableB/train/valid/test CSV files.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Model file, `cmd:<shell command>` or `http://host:port`.
    #[arg(long)]
    pub matcher: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Truncate records to this many words before use.
    #[arg(long)]
    pub truncate: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ExplainerArgs {
    /// `no-dual`, `no-potential` or `granularity=N`; repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ablate: Vec<String>,
    /// `lemon` or `lime`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub explainer: ExplainerArgs,
    /// Row of the split, or `split/row`.
    #[arg(long)]
    pub pair_id: Option<String>,
    #[arg(long)]
    pub html: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub explainer: ExplainerArgs,
    /// `cf1`, `pe`, `stability` or `sweep`.
    #[arg(long)]
    pub metric: Option<String>,
    /// `match`, `nonmatch` or `both`.
    #[arg(long)]
    pub class: Option<String>,
    /// Pairs per class.
    #[arg(long)]
    pub n: Option<usize>,
    /// Two seeds for stability, e.g. `1,2`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Sweep axis: `sample_size`, `k` or `runtime`.
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Listen address for HTTP, e.g. `127.0.0.1:8080`.
    #[arg(long)]
    pub http: Option<String>,
    #[arg(long)]
    pub max_batch: Option<usize>,
}

/// Values read from `--config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub matcher: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub truncate: Option<usize>,
    pub epochs: Option<usize>,
    pub explainer: Option<ExplainerConfig>,
    pub ablate: Vec<String>,
    pub method: Option<String>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub split: Option<String>,
    pub pair_id: Option<String>,
    pub html: Option<PathBuf>,
    pub metric: Option<String>,
    pub class: Option<String>,
    pub n: Option<usize>,
    pub seeds: Vec<u64>,
    pub axis: Option<String>,
    pub values: Vec<usize>,
    pub http: Option<String>,
    pub max_batch: Option<usize>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Matcher(_) | Error::Explain(_) => EXIT_MATCHER,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<MatcherError> for CliError {
    fn from(e: MatcherError) -> Self {
        Error::from(e).into()
    }
}

impl From<crate::error::ExplainError> for CliError {
    fn from(e: crate::error::ExplainError) -> Self {
        Error::from(e).into()
    }
}

impl From<crate::error::DataError> for CliError {
    fn from(e: crate::error::DataError) -> Self {
        Error::from(e).into()
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::usage(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn pick_vec<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> CliResult<Option<u64>> {
    if let Some(s) = pick(flag, file) {
        return Ok(Some(s));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn require_seed(flag: Option<u64>, file: Option<u64>) -> CliResult<u64> {
    resolve_seed(flag, file)?
        .ok_or_else(|| CliError::usage(format!("a seed is required: pass --seed or set {SEED_ENV}")))
}

fn load_dataset(
    flag: Option<PathBuf>,
    file: Option<PathBuf>,
    truncate: Option<usize>,
) -> CliResult<(PathBuf, Dataset)> {
    let dir = pick(flag, file).ok_or_else(|| CliError::usage("--dataset is required"))?;
    let mut dataset = load_benchmark_dataset(&dir)?;
    if let Some(words) = truncate {
        dataset = dataset.truncated(words);
    }
    Ok((dir, dataset))
}

/// Opens a matcher from its spec: a model file, `cmd:<shell command>` or an
/// `http(s)://` base URL.
pub fn open_matcher(spec: &str) -> CliResult<Box<dyn Matcher>> {
    if let Some(command) = spec.strip_prefix("cmd:") {
        return Ok(Box::new(StdioMatcher::spawn_shell(command)?));
    }
    if spec.starts_with("http://") || spec.starts_with("https://") {
        return Ok(Box::new(HttpMatcher::connect(spec)?));
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let model = BaselineMatcherModel::from_json(&text)
        .map_err(|e| CliError::usage(format!("model file {spec}: {e}")))?;
    Ok(Box::new(BaselineMatcher::new(model)))
}

fn require_matcher(flag: Option<String>, file: Option<String>) -> CliResult<Box<dyn Matcher>> {
    let spec = pick(flag, file).ok_or_else(|| CliError::usage("--matcher is required"))?;
    open_matcher(&spec)
}

/// Builds the explainer configuration: the config file's `explainer` object
/// (or defaults), then `--method`, `--k`, `--epsilon` and `--ablate`.
pub fn explainer_config(
    base: Option<ExplainerConfig>,
    method: Option<&str>,
    k: Option<usize>,
    epsilon: Option<f64>,
    ablate: &[String],
) -> CliResult<ExplainerConfig> {
    let mut config = match method.unwrap_or("lemon") {
        "lemon" => base.unwrap_or_default(),
        "lime" => {
            let b = base.unwrap_or_default();
            ExplainerConfig {
                disable_potential: true,
                fixed_granularity: Some(1),
                ..b
            }
        }
        m => return Err(CliError::usage(format!("unknown method {m:?}, expected lemon or lime"))),
    };
    if let Some(k) = k {
        config.k = k;
    }
    if let Some(e) = epsilon {
        config.epsilon = e;
    }
    for a in ablate {
        let a = a.trim();
        match a {
            "no-dual" => config.disable_dual = true,
            "no-potential" => config.disable_potential = true,
            _ => match a.strip_prefix("granularity=").map(str::parse::<usize>) {
                Some(Ok(n)) => config.fixed_granularity = Some(n),
                _ => {
                    return Err(CliError::usage(format!(
                        "unknown ablation {a:?}, expected no-dual, no-potential or granularity=N"
                    )))
                }
            },
        }
    }
    config.validate().map_err(CliError::usage)?;
    Ok(config)
}

fn find_pair(dataset: &Dataset, split: &str, pair_id: &str) -> CliResult<RecordPair> {
    let (split, row) = match pair_id.split_once('/') {
        Some((s, r)) => (s, r),
        None => (split, pair_id),
    };
    let row: usize = row
        .parse()
        .map_err(|_| CliError::usage(format!("pair id {pair_id:?} is not a row number")))?;
    dataset
        .pair(split, row)
        .ok_or_else(|| CliError::usage(format!("no pair {row} in split {split:?}")))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn cmd_train(args: TrainArgs, file: RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let (_, dataset) = load_dataset(args.common.dataset, file.dataset, pick(args.common.truncate, file.truncate))?;
    let path = pick(args.common.out, file.out).ok_or_else(|| CliError::usage("--out is required"))?;
    let mut config = TrainConfig {
        seed: resolve_seed(args.common.seed, file.seed)?.unwrap_or(0),
        ..TrainConfig::default()
    };
    if let Some(e) = pick(args.epochs, file.epochs) {
        config.epochs = e;
    }
    let model = train_baseline_matcher(&dataset, &config)?;
    write_file(&path, &model.to_json())?;
    let line = serde_json::json!({
        "model": path.display().to_string(),
        "validation_f1": model.meta.validation_f1,
        "train_pairs": model.meta.train_pairs,
        "seed": model.meta.seed,
    });
    writeln!(out, "{line}").map_err(|e| CliError::usage(e.to_string()))
}

fn cmd_explain(args: ExplainArgs, file: RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let c = args.common;
    let e = args.explainer;
    let (_, dataset) = load_dataset(c.dataset, file.dataset, pick(c.truncate, file.truncate))?;
    let seed = require_seed(c.seed, file.seed)?;
    let config = explainer_config(
        file.explainer,
        pick(e.method, file.method).as_deref(),
        pick(e.k, file.k),
        pick(e.epsilon, file.epsilon),
        &pick_vec(e.ablate, file.ablate),
    )?;
    let split = pick(e.split, file.split).unwrap_or_else(|| "test".into());
    let pair_id = pick(args.pair_id, file.pair_id).ok_or_else(|| CliError::usage("--pair-id is required"))?;
    let pair = find_pair(&dataset, &split, &pair_id)?;
    let matcher = require_matcher(c.matcher, file.matcher)?;
    let explanation = explain(&matcher, &pair, &config, seed)?;
    let json = to_json(&explanation);
    if let Some(dir) = pick(c.out, file.out) {
        write_file(&dir.join("explanation.json"), &json)?;
    }
    if let Some(path) = pick(args.html, file.html) {
        write_file(&path, &render(&explanation, &pair).html)?;
    }
    out.write_all(json.as_bytes()).map_err(|e| CliError::usage(e.to_string()))
}

#[derive(Debug, Serialize)]
struct Report<T> {
    metric: String,
    dataset: String,
    dataset_hash: String,
    split: String,
    seed: u64,
    config: ExplainerConfig,
    results: T,
}

#[derive(Debug, Serialize)]
struct ClassRow {
    class: Class,
    pairs: usize,
    #[serde(flatten)]
    values: serde_json::Map<String, serde_json::Value>,
}

fn classes(s: Option<&str>) -> CliResult<Vec<Class>> {
    match s.unwrap_or("both") {
        "both" | "all" => Ok(vec![Class::Match, Class::NonMatch]),
        other => other.parse().map(|c| vec![c]).map_err(CliError::usage),
    }
}

fn rows_to_csv(rows: &[ClassRow], keys: &[&str], seed: u64, hash: &str, config: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["class", "pairs"];
    header.extend_from_slice(keys);
    header.extend_from_slice(&["seed", "dataset_hash", "config"]);
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.class.as_str().to_string(), r.pairs.to_string()];
        for k in keys {
            rec.push(match r.values.get(*k) {
                Some(serde_json::Value::Null) | None => String::new(),
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            });
        }
        rec.extend([seed.to_string(), hash.to_string(), config.to_string()]);
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn cmd_evaluate(args: EvaluateArgs, file: RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let c = args.common;
    let e = args.explainer;
    let (dir, dataset) = load_dataset(c.dataset, file.dataset, pick(c.truncate, file.truncate))?;
    let hash = dataset_hash(&dir).map_err(|e| io_error(&dir, e))?;
    let seed = require_seed(c.seed, file.seed)?;
    let workers = pick(c.workers, file.workers).unwrap_or(1).max(1);
    let config = explainer_config(
        file.explainer,
        pick(e.method, file.method).as_deref(),
        pick(e.k, file.k),
        pick(e.epsilon, file.epsilon),
        &pick_vec(e.ablate, file.ablate),
    )?;
    let split = pick(e.split, file.split).unwrap_or_else(|| "test".into());
    if dataset.split(&split).is_none() {
        return Err(CliError::usage(format!("unknown split {split:?}")));
    }
    let metric = pick(args.metric, file.metric).unwrap_or_else(|| "cf1".into());
    let class_list = classes(pick(args.class, file.class).as_deref())?;
    let n = pick(args.n, file.n).unwrap_or(PAIRS_PER_CLASS);
    let seeds = pick_vec(args.seeds, file.seeds);
    let axis = pick(args.axis, file.axis);
    let values = pick_vec(args.values, file.values);
    let out_dir = pick(c.out, file.out);
    let matcher = require_matcher(c.matcher, file.matcher)?;
    let batch = config.sampling.batch_size;

    let mut by_class = Vec::new();
    for class in &class_list {
        by_class.push((*class, select_pairs(&matcher, &dataset, &split, *class, n, seed, batch)?));
    }
    let config_json = serde_json::to_string(&config).expect("serializable");
    let (json, csv) = match metric.as_str() {
        "cf1" | "pe" | "stability" => {
            let mut rows = Vec::new();
            let keys: &[&str] = match metric.as_str() {
                "cf1" => &["recalled", "successful", "cr", "cp", "cf1"],
                "pe" => &["experiments", "skipped", "mae", "pe"],
                _ => &["seed_a", "seed_b", "mean"],
            };
            for (class, pairs) in &by_class {
                let value = match metric.as_str() {
                    "cf1" => {
                        let ex = explain_all(&matcher, pairs, &config, seed, workers)?;
                        let m = counterfactual_metrics(&matcher, pairs, &ex, &config, seed, workers)?;
                        serde_json::to_value(m).expect("serializable")
                    }
                    "pe" => {
                        let ex = explain_all(&matcher, pairs, &config, seed, workers)?;
                        let r = perturbation_error(&matcher, pairs, &ex, &config, seed, workers)?;
                        serde_json::json!({
                            "experiments": r.experiments,
                            "skipped": r.skipped,
                            "mae": r.mae,
                            "pe": r.pe,
                            "records": r.records,
                        })
                    }
                    _ => {
                        let s = match seeds.as_slice() {
                            [] => (seed, seed.wrapping_add(1)),
                            [a, b] => (*a, *b),
                            _ => return Err(CliError::usage("--seeds takes exactly two seeds")),
                        };
                        let r = stability(&matcher, pairs, &config, s, workers)?;
                        serde_json::json!({
                            "seed_a": s.0,
                            "seed_b": s.1,
                            "mean": r.mean,
                            "per_pair": r.pairs,
                        })
                    }
                };
                let mut values = match value {
                    serde_json::Value::Object(m) => m,
                    _ => unreachable!("metrics serialize as objects"),
                };
                values.remove("pairs");
                rows.push(ClassRow {
                    class: *class,
                    pairs: pairs.len(),
                    values,
                });
            }
            let csv = rows_to_csv(&rows, keys, seed, &hash, &config_json);
            (to_json(&Report { metric: metric.clone(), dataset: dir.display().to_string(), dataset_hash: hash.clone(), split: split.clone(), seed, config: config.clone(), results: rows }), csv)
        }
        "sweep" => {
            let axis: SweepAxis = axis
                .as_deref()
                .ok_or_else(|| CliError::usage("--axis is required for a sweep"))?
                .parse()
                .map_err(CliError::usage)?;
            if values.is_empty() {
                return Err(CliError::usage("--values is required for a sweep"));
            }
            let table = sweep(&matcher, &by_class, &config, axis, &values, seed, workers)?;
            let mut csv = table.to_csv();
            csv = embed_csv_columns(&csv, seed, &hash, &config_json);
            (to_json(&Report { metric: metric.clone(), dataset: dir.display().to_string(), dataset_hash: hash.clone(), split: split.clone(), seed, config: config.clone(), results: table }), csv)
        }
        m => {
            return Err(CliError::usage(format!(
                "unknown metric {m:?}, expected cf1, pe, stability or sweep"
            )))
        }
    };
    if let Some(dir) = out_dir {
        write_file(&dir.join(format!("{metric}.json")), &json)?;
        write_file(&dir.join(format!("{metric}.csv")), &csv)?;
    }
    out.write_all(json.as_bytes()).map_err(|e| CliError::usage(e.to_string()))
}

fn embed_csv_columns(csv_text: &str, seed: u64, hash: &str, config: &str) -> String {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = r.headers().expect("own csv").iter().map(String::from).collect();
    header.extend(["seed".into(), "dataset_hash".into(), "config".into()]);
    w.write_record(&header).expect("in-memory write");
    for rec in r.records() {
        let mut row: Vec<String> = rec.expect("own csv").iter().map(String::from).collect();
        row.extend([seed.to_string(), hash.to_string(), config.to_string()]);
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn cmd_serve(args: ServeArgs, file: RunConfig) -> CliResult<()> {
    let matcher = require_matcher(args.common.matcher, file.matcher)?;
    let max_batch = pick(args.max_batch, file.max_batch).unwrap_or(1024);
    match pick(args.http, file.http) {
        Some(addr) => {
            let server = tiny_http::Server::http(addr.as_str())
                .map_err(|e| CliError::usage(format!("cannot listen on {addr}: {e}")))?;
            serve_http(&matcher, server, max_batch).map_err(|e| CliError::usage(e.to_string()))
        }
        None => {
            let stdin = io::stdin();
            serve_stdio(&matcher, stdin.lock(), io::stdout().lock(), max_batch)
                .map_err(|e| CliError::usage(e.to_string()))
        }
    }
}

/// Runs the command line given by `args` (including the program name),
/// writing results to `out` and diagnostics to stderr. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = load_config(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Train(a) => cmd_train(a, file, out),
        Command::Explain(a) => cmd_explain(a, file, out),
        Command::Evaluate(a) => cmd_evaluate(a, file, out),
        Command::Serve(a) => cmd_serve(a, file),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablations_map_to_config() {
        let c = explainer_config(None, None, None, None, &["no-dual".into(), "granularity=3".into()]).unwrap();
        assert!(c.disable_dual && !c.disable_potential);
        assert_eq!(c.fixed_granularity, Some(3));
        let c = explainer_config(None, Some("lime"), Some(4), None, &[]).unwrap();
        assert!(c.disable_potential);
        assert_eq!((c.k, c.fixed_granularity), (4, Some(1)));
        assert_eq!(explainer_config(None, None, None, None, &["bogus".into()]).unwrap_err().code, EXIT_USAGE);
        assert_eq!(explainer_config(None, None, None, None, &["granularity=0".into()]).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"seed": 3, "explainer": {"k": 2}}"#).is_ok());
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 3}"#).is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        let mut out = Vec::new();
        assert_eq!(run(["em-explain", "frobnicate"], &mut out), 2);
        assert_eq!(run(["em-explain", "train", "--dataset", "/nonexistent/x", "--out", "m.json"], &mut out), 2);
    }
}
