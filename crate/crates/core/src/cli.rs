//! Command-line harness: tablebase management, instance generation,
//! experiment execution and reporting.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::background::{chess_predicates, jobshop_predicates, ArgDomain, PredicateSignature};
use crate::encoding::JobShopInstance;
use crate::eods::{run_eods, EodsConfig, EodsTrace};
use crate::error::Error;
use crate::oracles::jobshop::validate_instance_json;
use crate::oracles::{makespan_lower_bound, Histogram, KrkTablebase};
use crate::problem::{Domain, Problem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const DATA_DIR_ENV: &str = "EODA_DATA_DIR";
const DEFAULT_DATA_DIR: &str = "eoda-data";
const TABLEBASE_FILE: &str = "krk.tb";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verify(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Verify(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Json(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "eoda", version, about = "Rule-guided DBN estimation-of-distribution optimiser")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build or verify the KRK depth-to-mate tablebase.
    Tablebase {
        #[command(subcommand)]
        action: TablebaseAction,
    },
    /// Job-shop instance utilities.
    Jobshop {
        #[command(subcommand)]
        action: JobshopAction,
    },
    /// Run the optimiser for one or more seeds and variants.
    Run(RunArgs),
    /// Aggregate trace files into summary tables.
    Report(ReportArgs),
    /// Inspect learned rules.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// List the background predicates of a domain.
    Predicates(PredicatesArgs),
}

#[derive(Debug, Subcommand)]
enum TablebaseAction {
    /// Build the tablebase by retrograde analysis and save it.
    Build {
        /// Output file; defaults to krk.tb in the data directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a tablebase file against the reference depth counts.
    Verify {
        /// Tablebase file; defaults to krk.tb in the data directory.
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum JobshopAction {
    /// Generate a random instance as JSON.
    Gen {
        #[arg(long, default_value_t = 5)]
        n_jobs: usize,
        #[arg(long, default_value_t = 5)]
        n_machines: usize,
        /// Generator seed; seed 0 with the default sizes is the benchmark.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; defaults to a file in the data directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with EodsConfig keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `chess` or `jobshop`; overrides the config file.
    #[arg(long)]
    domain: Option<String>,
    /// Number of consecutive seeds starting at the configured seed.
    #[arg(long)]
    seeds: Option<u64>,
    /// Explicit comma-separated seed list; overrides --seeds.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Variants to run, e.g. `on,off`.
    #[arg(long, value_delimiter = ',')]
    ilp: Option<Vec<String>>,
    /// Training epochs per iteration.
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate for every layer.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Comma-separated cost thresholds replacing the default schedule.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Override any config key, e.g. `--set train.batch_size=16`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; defaults to a fresh directory under the data directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum concurrent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Tablebase file; built on demand when missing.
    #[arg(long)]
    tablebase: Option<PathBuf>,
    /// Job-shop instance JSON; defaults to the frozen benchmark.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Trace JSON files or run directories.
    paths: Vec<PathBuf>,
    /// Directory receiving the summary CSV files.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum RulesAction {
    /// Print the rule set learned at each iteration.
    Show {
        /// Trace JSON written by `run`.
        #[arg(long)]
        trace: PathBuf,
        /// Show one iteration (1-based) instead of all.
        #[arg(long)]
        iteration: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct PredicatesArgs {
    /// `chess` or `jobshop`.
    #[arg(long)]
    domain: String,
    /// Job-shop instance JSON; defaults to the frozen benchmark.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Print the catalog as JSON.
    #[arg(long)]
    json: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Normal output goes to `out`, diagnostics to stderr.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Tablebase { action } => match action {
            TablebaseAction::Build { out: path } => cmd_tablebase_build(path, out),
            TablebaseAction::Verify { path } => cmd_tablebase_verify(path, out),
        },
        Command::Jobshop { action } => match action {
            JobshopAction::Gen { n_jobs, n_machines, seed, out: path } => {
                cmd_jobshop_gen(n_jobs, n_machines, seed, path, out)
            }
        },
        Command::Run(args) => cmd_run(args, out),
        Command::Report(args) => cmd_report(args, out),
        Command::Rules { action } => match action {
            RulesAction::Show { trace, iteration } => cmd_rules_show(&trace, iteration, out),
        },
        Command::Predicates(args) => cmd_predicates(args, out),
    }
}

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_DATA_DIR), PathBuf::from)
}

fn default_tablebase() -> PathBuf {
    data_dir().join(TABLEBASE_FILE)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

// Tables are rendered from the same cell strings for stdout and CSV.

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| match c.parse::<f64>() {
                    Ok(_) => format!("{c:>w$}"),
                    Err(_) => format!("{c:<w$}"),
                })
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut s = line(&self.header);
        for r in &self.rows {
            s.push_str(&line(r));
        }
        s
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn histogram_table(h: &Histogram) -> Table {
    let mut t = Table::new(&["depth", "count", "cumulative"]);
    let total = h.total() as f64;
    let mut cum = 0;
    for (d, &c) in h.depths.iter().enumerate() {
        cum += c;
        t.rows.push(vec![d.to_string(), c.to_string(), format!("{:.4}", cum as f64 / total)]);
    }
    t.rows.push(vec!["draw".into(), h.draws.to_string(), String::new()]);
    t.rows.push(vec!["total".into(), h.total().to_string(), String::new()]);
    t
}

const DEPTH3_NOTE: &str = "note: the reference table's cumulative value for depth 3 (0.152) is \
inconsistent with its neighbouring rows; counts are compared, not cumulative fractions";

fn cmd_tablebase_build(path: Option<PathBuf>, out: &mut dyn Write) -> CliResult {
    let path = path.unwrap_or_else(default_tablebase);
    let start = Instant::now();
    let tb = KrkTablebase::build();
    let elapsed = start.elapsed();
    tb.save(&path)?;
    let h = tb.histogram();
    writeln!(out, "built {} positions in {:.2}s -> {}", tb.len(), elapsed.as_secs_f64(), path.display())?;
    write!(out, "{}", histogram_table(&h).render())?;
    let diff = h.diff(&Histogram::reference());
    if !diff.is_empty() {
        return Err(CliError::Verify(format!("histogram mismatch: {}", diff.join("; "))));
    }
    Ok(())
}

fn cmd_tablebase_verify(path: Option<PathBuf>, out: &mut dyn Write) -> CliResult {
    let path = path.unwrap_or_else(default_tablebase);
    let bytes = read_file(&path)?;
    let tb = KrkTablebase::from_bytes(&bytes).map_err(|e| CliError::Verify(format!("{}: {e}", path.display())))?;
    let h = tb.histogram();
    writeln!(out, "{} sha256 {}", path.display(), sha256_hex(&bytes))?;
    write!(out, "{}", histogram_table(&h).render())?;
    writeln!(out, "{DEPTH3_NOTE}")?;
    let diff = h.diff(&Histogram::reference());
    if diff.is_empty() {
        writeln!(out, "verify: OK (histogram matches reference exactly)")?;
        Ok(())
    } else {
        for d in &diff {
            writeln!(out, "mismatch: {d}")?;
        }
        Err(CliError::Verify(format!("{} histogram entries differ from reference", diff.len())))
    }
}

fn cmd_jobshop_gen(n_jobs: usize, n_machines: usize, seed: u64, path: Option<PathBuf>, out: &mut dyn Write) -> CliResult {
    if n_jobs == 0 || n_machines == 0 {
        return Err(usage("--n-jobs and --n-machines must be at least 1"));
    }
    let inst = JobShopInstance::generate(n_jobs, n_machines, seed);
    let path = path.unwrap_or_else(|| data_dir().join(format!("jobshop-{n_jobs}x{n_machines}-seed{seed}.json")));
    let json = serde_json::to_string_pretty(&inst).map_err(Error::from)?;
    write_file(&path, json.as_bytes())?;
    writeln!(
        out,
        "wrote {} (lower bound {}, sha256 {})",
        path.display(),
        makespan_lower_bound(&inst),
        sha256_hex(json.as_bytes())
    )?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reconstruct a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<String>,
    pub config: Value,
    pub domain: Domain,
    pub seeds: Vec<u64>,
    pub variants: Vec<String>,
    pub output_dir: String,
    pub tablebase: Option<Artifact>,
    pub instance: Option<Artifact>,
    /// Keyed by `<variant>/seed-<n>`; filled after each run finishes.
    pub models: BTreeMap<String, Artifact>,
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_key(root: &mut Value, key: &str, value: Value) -> CliResult {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(usage(format!("invalid config key {key:?}")));
        }
        let obj = match cur {
            Value::Object(m) => m,
            Value::Null => {
                *cur = Value::Object(Map::new());
                cur.as_object_mut().expect("just created")
            }
            _ => return Err(usage(format!("config key {key:?}: {part} is not an object"))),
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

fn resolve_config(args: &RunArgs) -> CliResult<Value> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = read_file(p)?;
            serde_json::from_slice(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    if !cfg.is_object() {
        return Err(usage("config must be a JSON object"));
    }
    if let Some(d) = &args.domain {
        let d: Domain = d.parse()?;
        set_key(&mut cfg, "domain", Value::String(d.name().into()))?;
    }
    if let Some(e) = args.epochs {
        set_key(&mut cfg, "train.epochs", e.into())?;
    }
    if let Some(lr) = args.learning_rate {
        set_key(&mut cfg, "train.learning_rate", lr.into())?;
    }
    if let Some(t) = &args.thresholds {
        set_key(&mut cfg, "thresholds", t.clone().into())?;
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        set_key(&mut cfg, k, parse_value(v))?;
    }
    Ok(cfg)
}

fn config_for(base: &Value, use_ilp: bool, seed: u64) -> CliResult<EodsConfig> {
    let mut v = base.clone();
    set_key(&mut v, "use_ilp", use_ilp.into())?;
    set_key(&mut v, "seed", seed.into())?;
    let cfg: EodsConfig = serde_json::from_value(v).map_err(|e| usage(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn variant_name(use_ilp: bool) -> &'static str {
    if use_ilp {
        "ilp"
    } else {
        "plain"
    }
}

fn parse_variants(args: &RunArgs, base: &Value) -> CliResult<Vec<bool>> {
    let Some(list) = &args.ilp else {
        return Ok(vec![base.get("use_ilp").and_then(Value::as_bool).unwrap_or(true)]);
    };
    let mut out = Vec::new();
    for s in list {
        let v = match s.as_str() {
            "on" | "true" | "ilp" => true,
            "off" | "false" | "plain" => false,
            _ => return Err(usage(format!("--ilp expects on/off, got {s:?}"))),
        };
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(usage("--ilp needs at least one variant"));
    }
    Ok(out)
}

fn resolve_seeds(args: &RunArgs, base: &Value) -> CliResult<Vec<u64>> {
    if let Some(list) = &args.seed_list {
        if list.is_empty() {
            return Err(usage("--seed-list is empty"));
        }
        return Ok(list.clone());
    }
    let first = match base.get("seed") {
        None => 0,
        Some(v) => v.as_u64().ok_or_else(|| usage("config: seed must be a non-negative integer"))?,
    };
    let n = args.seeds.unwrap_or(1);
    if n == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    Ok((first..first + n).collect())
}

fn choose_output_dir(explicit: Option<&PathBuf>, domain: Domain) -> CliResult<PathBuf> {
    if let Some(p) = explicit {
        if p.join("manifest.json").exists() {
            return Err(usage(format!("{} already holds a run; choose another --out", p.display())));
        }
        return Ok(p.clone());
    }
    let runs = data_dir().join("runs");
    (1..)
        .map(|i| runs.join(format!("{domain}-{i:03}")))
        .find(|p| !p.exists())
        .ok_or_else(|| CliError::Runtime("no free output directory".into()))
}

struct Loaded {
    problem: Problem,
    tablebase: Option<Artifact>,
    instance: Option<Artifact>,
}

fn load_problem(domain: Domain, args: &RunArgs, out_dir: &Path) -> CliResult<Loaded> {
    match domain {
        Domain::Chess => {
            let path = args.tablebase.clone().unwrap_or_else(default_tablebase);
            if !path.exists() {
                eprintln!("tablebase {} not found; building it", path.display());
                KrkTablebase::build().save(&path)?;
            }
            let bytes = read_file(&path)?;
            let tb = KrkTablebase::from_bytes(&bytes)?;
            Ok(Loaded {
                problem: Problem::chess(Arc::new(tb)),
                tablebase: Some(Artifact {
                    path: path.display().to_string(),
                    sha256: sha256_hex(&bytes),
                }),
                instance: None,
            })
        }
        Domain::Jobshop => {
            let inst = match &args.instance {
                Some(p) => {
                    let text = String::from_utf8(read_file(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                    validate_instance_json(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                None => JobShopInstance::benchmark(),
            };
            let json = serde_json::to_string_pretty(&inst).map_err(Error::from)?;
            let copy = out_dir.join("instance.json");
            write_file(&copy, json.as_bytes())?;
            Ok(Loaded {
                problem: Problem::jobshop(inst)?,
                tablebase: None,
                instance: Some(Artifact {
                    path: copy.display().to_string(),
                    sha256: sha256_hex(json.as_bytes()),
                }),
            })
        }
    }
}

fn write_manifest(dir: &Path, m: &RunManifest) -> CliResult {
    let json = serde_json::to_string_pretty(m).map_err(Error::from)?;
    write_file(&dir.join("manifest.json"), json.as_bytes())
}

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> CliResult {
    if args.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let base = resolve_config(&args)?;
    let variants = parse_variants(&args, &base)?;
    let seeds = resolve_seeds(&args, &base)?;
    let mut configs = Vec::new();
    for &v in &variants {
        for &s in &seeds {
            configs.push(config_for(&base, v, s)?);
        }
    }
    let domain = configs[0].domain;
    let dir = choose_output_dir(args.out.as_ref(), domain)?;
    fs::create_dir_all(&dir)?;
    write_file(
        &dir.join("config.json"),
        serde_json::to_string_pretty(&base).map_err(Error::from)?.as_bytes(),
    )?;
    let loaded = load_problem(domain, &args, &dir)?;
    let mut manifest = RunManifest {
        config_path: args.config.as_ref().map(|p| p.display().to_string()),
        config: base,
        domain,
        seeds: seeds.clone(),
        variants: variants.iter().map(|&v| variant_name(v).to_string()).collect(),
        output_dir: dir.display().to_string(),
        tablebase: loaded.tablebase.clone(),
        instance: loaded.instance.clone(),
        models: BTreeMap::new(),
    };
    write_manifest(&dir, &manifest)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let problem = &loaded.problem;
    let results: Vec<CliResult<(String, EodsTrace, Artifact)>> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let key = format!("{}/seed-{}", variant_name(cfg.use_ilp), cfg.seed);
                let (trace, model) = run_eods(cfg, problem).map_err(|e| CliError::Runtime(format!("{key}: {e}")))?;
                let stem = dir.join(&key);
                write_file(&stem.with_extension("csv"), trace.to_csv().as_bytes())?;
                let json = serde_json::to_string_pretty(&trace).map_err(Error::from)?;
                write_file(&stem.with_extension("json"), json.as_bytes())?;
                let bytes = model.to_bytes();
                let model_path = stem.with_extension("dbn");
                write_file(&model_path, &bytes)?;
                let art = Artifact {
                    path: model_path.display().to_string(),
                    sha256: sha256_hex(&bytes),
                };
                Ok((key, trace, art))
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut traces: Vec<EodsTrace> = Vec::new();
    for r in results {
        match r {
            Ok((key, trace, art)) => {
                manifest.models.insert(key, art);
                traces.push(trace);
            }
            Err(e) => failures.push(e.message().to_string()),
        }
    }
    write_manifest(&dir, &manifest)?;
    writeln!(out, "output: {}", dir.display())?;
    for &v in &variants {
        let group: Vec<&EodsTrace> = traces.iter().filter(|t| t.use_ilp == v).collect();
        if group.is_empty() {
            continue;
        }
        let summary = summarize(&group)?;
        summary.print(out)?;
        summary.write_csv(&dir.join(variant_name(v)))?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(failures.join("; ")))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for a single value.
fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Cross-seed aggregate for one domain and variant.
pub struct Summary {
    title: String,
    precision: Table,
    coverage: Table,
    series: Table,
}

impl Summary {
    fn print(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "\n== {}", self.title)?;
        writeln!(out, "-- precision")?;
        write!(out, "{}", self.precision.render())?;
        writeln!(out, "-- near-optimal coverage")?;
        write!(out, "{}", self.coverage.render())?;
        writeln!(out, "-- cumulative series")?;
        write!(out, "{}", self.series.render())
    }

    fn write_csv(&self, dir: &Path) -> CliResult {
        write_file(&dir.join("summary_precision.csv"), self.precision.to_csv().as_bytes())?;
        write_file(&dir.join("summary_coverage.csv"), self.coverage.to_csv().as_bytes())?;
        write_file(&dir.join("summary_series.csv"), self.series.to_csv().as_bytes())
    }
}

fn summarize(traces: &[&EodsTrace]) -> CliResult<Summary> {
    let first = traces.first().ok_or_else(|| usage("no traces"))?;
    for t in traces {
        if t.domain != first.domain {
            return Err(usage(format!("mixed domains: {} and {}", first.domain, t.domain)));
        }
        if t.thresholds != first.thresholds || t.iterations.len() != first.iterations.len() {
            return Err(usage(format!("seed {} uses a different threshold schedule", t.seed)));
        }
    }
    let mut precision = Table::new(&[
        "iteration", "theta", "baseline", "model_mean", "model_sd", "model_median", "model_min", "model_max", "gain_mean",
    ]);
    let mut coverage = Table::new(&["iteration", "theta", "covered_mean", "covered_sd", "covered_min", "covered_max", "optimal"]);
    let mut series = Table::new(&["iteration", "theta", "cumulative_near_optimal_mean", "mean_cost_mean"]);
    for (k, r0) in first.iterations.iter().enumerate() {
        let col = |f: &dyn Fn(&crate::eods::IterationRecord) -> f64| -> Vec<f64> {
            traces.iter().map(|t| f(&t.iterations[k])).collect()
        };
        let prec = col(&|r| r.prec_model);
        let (lo, hi) = min_max(&prec);
        let gains: Vec<f64> = traces.iter().filter_map(|t| t.iterations[k].gain).collect();
        let gain = if gains.is_empty() { "undefined".into() } else { f6(mean(&gains)) };
        let it = r0.iteration.to_string();
        let theta = f6(r0.theta);
        precision.rows.push(vec![
            it.clone(),
            theta.clone(),
            f6(r0.prec_baseline),
            f6(mean(&prec)),
            f6(sd(&prec)),
            f6(median(&prec)),
            f6(lo),
            f6(hi),
            gain,
        ]);
        let cov = col(&|r| r.coverage_a as f64);
        let (lo, hi) = min_max(&cov);
        coverage.rows.push(vec![
            it.clone(),
            theta.clone(),
            f6(mean(&cov)),
            f6(sd(&cov)),
            f6(lo),
            f6(hi),
            r0.coverage_b.to_string(),
        ]);
        series.rows.push(vec![
            it,
            theta,
            f6(mean(&col(&|r| r.coverage_raw as f64))),
            f6(mean(&col(&|r| r.mean_cost))),
        ]);
    }
    let mut seeds: Vec<u64> = traces.iter().map(|t| t.seed).collect();
    seeds.sort_unstable();
    let title = format!(
        "{} / {} ({} seed{}: {:?})",
        first.domain,
        if first.use_ilp { "DBN+ILP" } else { "DBN" },
        seeds.len(),
        if seeds.len() == 1 { "" } else { "s" },
        seeds
    );
    Ok(Summary {
        title,
        precision,
        coverage,
        series,
    })
}

fn collect_traces(path: &Path, acc: &mut Vec<PathBuf>) -> CliResult {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                collect_traces(&p, acc)?;
            } else if p.extension().is_some_and(|e| e == "json")
                && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("seed-"))
            {
                acc.push(p);
            }
        }
        Ok(())
    } else if path.exists() {
        acc.push(path.to_path_buf());
        Ok(())
    } else {
        Err(usage(format!("{} does not exist", path.display())))
    }
}

fn load_trace(path: &Path) -> CliResult<EodsTrace> {
    serde_json::from_slice(&read_file(path)?).map_err(|e| usage(format!("{}: not a trace: {e}", path.display())))
}

fn cmd_report(args: ReportArgs, out: &mut dyn Write) -> CliResult {
    if args.paths.is_empty() {
        return Err(usage("report needs at least one trace file or run directory"));
    }
    let mut files = Vec::new();
    for p in &args.paths {
        collect_traces(p, &mut files)?;
    }
    if files.is_empty() {
        return Err(usage("no trace files found"));
    }
    let traces = files.iter().map(|p| load_trace(p)).collect::<CliResult<Vec<_>>>()?;
    let domain = traces[0].domain;
    if let Some(t) = traces.iter().find(|t| t.domain != domain) {
        return Err(usage(format!("mixed domains: {} and {}", domain, t.domain)));
    }
    for v in [true, false] {
        let group: Vec<&EodsTrace> = traces.iter().filter(|t| t.use_ilp == v).collect();
        if group.is_empty() {
            continue;
        }
        let summary = summarize(&group)?;
        summary.print(out)?;
        if let Some(dir) = &args.csv_dir {
            summary.write_csv(&dir.join(variant_name(v)))?;
        }
    }
    Ok(())
}

fn cmd_rules_show(path: &Path, iteration: Option<usize>, out: &mut dyn Write) -> CliResult {
    let trace = load_trace(path)?;
    let mut shown = 0;
    for r in &trace.iterations {
        if iteration.is_some_and(|k| k != r.iteration) {
            continue;
        }
        shown += 1;
        match &r.rules {
            None => writeln!(out, "iteration {} (theta {}): no rules", r.iteration, r.theta)?,
            Some(rs) => {
                writeln!(out, "iteration {} (theta {}): {} clause(s)", r.iteration, r.theta, rs.clauses.len())?;
                for c in &rs.clauses {
                    writeln!(out, "  {c}")?;
                }
            }
        }
    }
    if shown == 0 {
        return Err(usage(format!("trace has no iteration {}", iteration.unwrap_or(0))));
    }
    Ok(())
}

fn describe_args(args: &[ArgDomain]) -> String {
    args.iter()
        .map(|a| match a {
            ArgDomain::Piece { values } => values.join("|"),
            ArgDomain::Job { count } => format!("job<{count}"),
            ArgDomain::Machine { count } => format!("machine<{count}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_predicates(args: PredicatesArgs, out: &mut dyn Write) -> CliResult {
    let domain: Domain = args.domain.parse()?;
    let sigs: Vec<PredicateSignature> = match domain {
        Domain::Chess => chess_predicates(),
        Domain::Jobshop => {
            let inst = match &args.instance {
                Some(p) => {
                    let text = String::from_utf8(read_file(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                    validate_instance_json(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                None => JobShopInstance::benchmark(),
            };
            jobshop_predicates(&inst)
        }
    };
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&sigs).map_err(Error::from)?)?;
        return Ok(());
    }
    let mut t = Table::new(&["predicate", "arity", "args", "thresholds", "description"]);
    for s in &sigs {
        let th = s.threshold.map_or_else(String::new, |r| format!("{}..{} step {}", r.min, r.max, r.step));
        t.rows.push(vec![s.id.clone(), s.arity.to_string(), describe_args(&s.args), th, s.description.clone()]);
    }
    write!(out, "{}", t.render())?;
    Ok(())
}
