//! Command-line front end.
//!
//! Locations are 1-based in everything printed or written by the CLI and
//! 0-based inside the library.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 property
//! violation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choice::ChoiceModelSpec;
use crate::error::{Error, Result};
use crate::format::{read_instance, write_instance};
use crate::instances::{
    assign_nests, generate_euclidean, mmnl_expand, GeneratorParams, MmnlParams, DEFAULT_MU,
};
use crate::objective::{Instance, Solution};
use crate::oracle::{self, binomial, PropertyReport};
use crate::solver::{self, CoefMode, RunReport, SolverConfig, DEFAULT_DELTA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mcpgev", version, about = "Maximum capture facility location under GEV choice models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instance and write it as a .mcp file.
    Generate(GenerateArgs),
    /// Solve an instance with greedy (gh) or GGX.
    Solve(SolveArgs),
    /// Run the property and oracle suites.
    Check(CheckArgs),
    /// Run a grid of generated instances and write a CSV of results.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mnl,
    Nested,
    Mmnl,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            Self::Mnl => "mnl",
            Self::Nested => "nested",
            Self::Mmnl => "mmnl",
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    zones: usize,
    #[arg(long)]
    locations: usize,
    #[arg(long, default_value_t = crate::instances::DEFAULT_COMPETITORS)]
    competitors: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = crate::instances::DEFAULT_PLANE_SIDE)]
    plane_side: f64,
    #[arg(long, value_enum, default_value_t = ModelKind::Mnl)]
    model: ModelKind,
    /// Number of nests (nested only).
    #[arg(long = "L")]
    nests: Option<usize>,
    /// Comma-separated nest parameters (nested only).
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    /// Monte Carlo samples per zone (mmnl only).
    #[arg(long = "mmnl-K")]
    mmnl_k: Option<usize>,
    /// Utility sensitivity of the mixed model (mmnl only; defaults to beta).
    #[arg(long = "mmnl-theta")]
    mmnl_theta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Gh,
    Ggx,
}

#[derive(Debug, Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long = "C")]
    cardinality: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: usize,
    #[arg(long, value_parser = parse_coef_mode, default_value = "gradient")]
    coef_mode: CoefMode,
    #[arg(long, value_enum, default_value_t = Algo::Ggx)]
    algo: Algo,
    /// Seconds; defaults to 600.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Submodularity,
    Monotonicity,
    Gradient,
    Subproblem,
    Euler,
    All,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the instance-based suites on this file instead of the defaults.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated ZONESxLOCATIONS pairs, e.g. 50x25,100x50.
    #[arg(long, value_delimiter = ',', default_value = "50x25")]
    grid: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    betas: Vec<f64>,
    /// Cardinalities, as a range `2-10` or a list `2,3,4`.
    #[arg(long, default_value = "2-10")]
    cs: String,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "mnl")]
    models: Vec<ModelKind>,
    /// Seconds per solve.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Add brute-force rows when binomial(m, C) does not exceed this.
    #[arg(long)]
    bf_max: Option<u128>,
    #[arg(long)]
    out: PathBuf,
    /// Number of geometries per grid point.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// First geometry seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Record wall-clock times (otherwise written as 0 so output is reproducible).
    #[arg(long)]
    stamp: bool,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: usize,
    #[arg(long, value_parser = parse_coef_mode, default_value = "gradient")]
    coef_mode: CoefMode,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long = "mmnl-K", default_value_t = 100)]
    mmnl_k: usize,
    #[arg(long, default_value_t = crate::instances::DEFAULT_COMPETITORS)]
    competitors: usize,
    #[arg(long, default_value_t = crate::instances::DEFAULT_PLANE_SIDE)]
    plane_side: f64,
}

fn parse_coef_mode(s: &str) -> std::result::Result<CoefMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a command, mapped onto an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Entry point of the `mcpgev` binary.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn budget(seconds: Option<f64>) -> std::result::Result<Option<Duration>, Failure> {
    match seconds {
        None => Ok(Some(solver::DEFAULT_TIME_BUDGET)),
        Some(s) if s.is_finite() && s >= 0.0 => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(usage(format!("--time-budget must be a non-negative number, got {s}"))),
    }
}

fn one_based(s: &[usize]) -> Vec<usize> {
    s.iter().map(|j| j + 1).collect()
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    if a.model != ModelKind::Nested && (a.mu.is_some() || a.nests.is_some()) {
        return Err(usage("--mu and --L require --model nested"));
    }
    if a.model != ModelKind::Mmnl && (a.mmnl_k.is_some() || a.mmnl_theta.is_some()) {
        return Err(usage("--mmnl-K and --mmnl-theta require --model mmnl"));
    }
    let params = GeneratorParams {
        zones: a.zones,
        locations: a.locations,
        competitors: a.competitors,
        alpha: a.alpha,
        beta: a.beta,
        plane_side: a.plane_side,
        seed: a.seed,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let inst = match a.model {
        ModelKind::Mnl => generate_euclidean(&params, ChoiceModelSpec::Mnl)?,
        ModelKind::Nested => {
            let mu = nest_params(a.nests, a.mu.as_deref())?;
            let spec = assign_nests(a.locations, &mu).map_err(|e| usage(e.to_string()))?;
            generate_euclidean(&params, spec)?
        }
        ModelKind::Mmnl => {
            let mp = MmnlParams::new(a.mmnl_theta.unwrap_or(a.beta), a.mmnl_k.unwrap_or(100), a.seed);
            mp.validate().map_err(|e| usage(e.to_string()))?;
            mmnl_expand(&params, &mp)?
        }
    };
    write_instance(&inst, &a.out)?;
    println!("{}", a.out.display());
    println!(
        "model={} zones={} locations={} seed={}",
        a.model.name(),
        inst.zones().len(),
        inst.locations(),
        a.seed
    );
    Ok(EXIT_OK)
}

/// Resolves `--L` / `--mu`; without `--mu` the default parameters apply when
/// the nest count is 5 (or unspecified).
fn nest_params(nests: Option<usize>, mu: Option<&[f64]>) -> std::result::Result<Vec<f64>, Failure> {
    match (nests, mu) {
        (Some(l), Some(mu)) if mu.len() != l => Err(usage(format!(
            "--mu has {} values but --L is {l}",
            mu.len()
        ))),
        (_, Some(mu)) => Ok(mu.to_vec()),
        (None, None) => Ok(DEFAULT_MU.to_vec()),
        (Some(l), None) if l == DEFAULT_MU.len() => Ok(DEFAULT_MU.to_vec()),
        (Some(l), None) => Err(usage(format!("--mu is required when --L is {l}"))),
    }
}

/// Machine-readable result of `solve --json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolveOutput {
    pub instance: String,
    pub algorithm: String,
    pub cardinality: usize,
    /// 1-based, ascending.
    pub selected: Vec<usize>,
    pub objective: f64,
    pub report: Option<RunReport>,
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    if a.cardinality == 0 {
        return Err(usage("--C must be at least 1"));
    }
    let inst = read_instance(&a.instance)?;
    let mut cfg = SolverConfig::new(a.cardinality);
    cfg.delta = a.delta;
    cfg.coef_mode = a.coef_mode;
    cfg.time_budget = budget(a.time_budget)?;
    cfg.validate(inst.locations())?;

    let (solution, report) = match a.algo {
        Algo::Gh => (solver::greedy(&inst, a.cardinality)?, None),
        Algo::Ggx => {
            let (s, r) = solver::ggx(&inst, &cfg)?;
            (s, Some(r))
        }
    };
    let out = SolveOutput {
        instance: a.instance.display().to_string(),
        algorithm: match a.algo {
            Algo::Gh => "gh".into(),
            Algo::Ggx => "ggx".into(),
        },
        cardinality: a.cardinality,
        selected: one_based(&solution.selected),
        objective: solution.objective.expect("solvers fill the objective"),
        report,
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    } else {
        print_solve(&out);
    }
    Ok(EXIT_OK)
}

fn print_solve(out: &SolveOutput) {
    let sel: Vec<String> = out.selected.iter().map(|j| j.to_string()).collect();
    println!("algorithm: {}", out.algorithm);
    println!("selected: {}", sel.join(" "));
    println!("objective: {:.12}", out.objective);
    if let Some(r) = &out.report {
        println!(
            "phase objectives: greedy {:.12}  local-search {:.12}  exchange {:.12}",
            r.phase_objectives[0], r.phase_objectives[1], r.phase_objectives[2]
        );
        println!(
            "local search: {} subproblems, {} accepted (delta {}, {} coefficients)",
            r.subproblem_iterations, r.subproblem_accepted, r.effective_delta, r.coef_mode
        );
        println!(
            "exchange: {} scans, {} accepted",
            r.exchange_iterations, r.exchange_accepted
        );
        println!(
            "wall ms: {:.3} {:.3} {:.3}{}",
            r.wall_ms[0],
            r.wall_ms[1],
            r.wall_ms[2],
            if r.budget_exhausted { " (time budget exhausted)" } else { "" }
        );
    }
}

/// Small instances the `check` command uses when none is given.
pub fn default_check_instances(seed: u64) -> Result<Vec<(String, Instance)>> {
    let params = GeneratorParams {
        zones: 30,
        locations: 12,
        competitors: 5,
        alpha: 0.1,
        beta: 0.5,
        plane_side: 10.0,
        seed,
    };
    Ok(vec![
        ("mnl".into(), generate_euclidean(&params, ChoiceModelSpec::Mnl)?),
        (
            "nested".into(),
            generate_euclidean(&params, assign_nests(12, &[1.1, 1.3, 1.5])?)?,
        ),
    ])
}

fn print_report(label: &str, r: &PropertyReport) {
    println!(
        "{:<28} trials={:<6} violations={:<4} worst={:.3e} seed={} {}",
        format!("{}[{label}]", r.property),
        r.trials,
        r.violations,
        r.worst_violation,
        r.seed,
        if r.passed() { "PASS" } else { "FAIL" }
    );
}

fn cmd_check(a: &CheckArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let instances = match &a.instance {
        Some(p) => vec![(p.display().to_string(), read_instance(p)?)],
        None => default_check_instances(a.seed)?,
    };
    let wants = |s: Suite| a.suite == Suite::All || a.suite == s;
    let mut reports: Vec<(String, PropertyReport)> = Vec::new();
    for (label, inst) in &instances {
        if wants(Suite::Submodularity) {
            reports.push((label.clone(), oracle::check_submodularity(inst, a.trials, a.seed)?));
        }
        if wants(Suite::Monotonicity) {
            reports.push((label.clone(), oracle::check_monotonicity(inst, a.trials, a.seed)?));
        }
        if wants(Suite::Gradient) {
            reports.push((label.clone(), oracle::check_gradient(inst, a.trials, 1e-5, a.seed)?));
        }
    }
    if wants(Suite::Euler) {
        let mut specs = vec![
            ("mnl".to_string(), ChoiceModelSpec::Mnl, 12),
            ("nested".to_string(), assign_nests(12, &[1.1, 1.3, 1.5])?, 12),
            ("nested-mu1".to_string(), assign_nests(12, &[1.0, 1.0, 1.0])?, 12),
        ];
        if let Some(p) = &a.instance {
            let (_, inst) = &instances[0];
            specs.push((p.display().to_string(), inst.spec().clone(), inst.locations()));
        }
        for (label, spec, m) in specs {
            reports.push((label, oracle::check_cpgf(&spec, m, a.trials, a.seed)?));
        }
    }
    if wants(Suite::Subproblem) {
        reports.push(("m<=12".into(), oracle::check_subproblem(a.trials, 12, a.seed)?));
    }
    let mut failed = false;
    for (label, r) in &reports {
        print_report(label, r);
        failed |= !r.passed();
    }
    Ok(if failed { EXIT_VIOLATION } else { EXIT_OK })
}

/// One line of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: String,
    #[serde(rename = "I")]
    pub zones: usize,
    pub m: usize,
    #[serde(rename = "C")]
    pub cardinality: usize,
    pub alpha: f64,
    pub beta: f64,
    pub model: String,
    pub algo: String,
    pub objective: f64,
    pub wall_ms: f64,
    pub match_best: bool,
}

/// Relative tolerance for `match_best`.
pub const MATCH_TOLERANCE: f64 = 1e-9;

/// One generated instance of a benchmark grid.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub model: ModelKind,
    pub zones: usize,
    pub locations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl BenchCase {
    pub fn id(&self) -> String {
        format!(
            "{}-{}x{}-s{}-a{}-b{}",
            self.model.name(),
            self.zones,
            self.locations,
            self.seed,
            self.alpha,
            self.beta
        )
    }

    pub fn problem(&self) -> String {
        format!("{}-{}x{}-s{}", self.model.name(), self.zones, self.locations, self.seed)
    }
}

/// Settings shared by every solve of a benchmark.
#[derive(Debug, Clone)]
pub struct BenchSettings {
    pub cardinalities: Vec<usize>,
    pub delta: usize,
    pub coef_mode: CoefMode,
    pub time_budget: Option<Duration>,
    pub bf_max: Option<u128>,
    pub mu: Vec<f64>,
    pub mmnl_samples: usize,
    pub competitors: usize,
    pub plane_side: f64,
    pub stamp: bool,
}

pub fn build_case_instance(case: &BenchCase, s: &BenchSettings) -> Result<Instance> {
    let params = GeneratorParams {
        zones: case.zones,
        locations: case.locations,
        competitors: s.competitors,
        alpha: case.alpha,
        beta: case.beta,
        plane_side: s.plane_side,
        seed: case.seed,
    };
    match case.model {
        ModelKind::Mnl => generate_euclidean(&params, ChoiceModelSpec::Mnl),
        ModelKind::Nested => generate_euclidean(&params, assign_nests(case.locations, &s.mu)?),
        ModelKind::Mmnl => mmnl_expand(
            &params,
            &MmnlParams::new(case.beta, s.mmnl_samples, case.seed),
        ),
    }
}

/// Solves every cardinality of one case with gh, ggx and, when small enough,
/// brute force. `match_best` is left false.
pub fn run_case(case: &BenchCase, s: &BenchSettings) -> Result<Vec<BenchRow>> {
    let inst = build_case_instance(case, s)?;
    let mut rows = Vec::new();
    for &c in &s.cardinalities {
        if c > inst.locations() {
            continue;
        }
        let mut cfg = SolverConfig::new(c);
        cfg.delta = s.delta;
        cfg.coef_mode = s.coef_mode;
        cfg.time_budget = s.time_budget;
        let timed = |f: &dyn Fn() -> Result<Solution>| -> Result<(Solution, f64)> {
            let t = Instant::now();
            let sol = f()?;
            Ok((sol, t.elapsed().as_secs_f64() * 1e3))
        };
        let mut runs = vec![
            ("gh", timed(&|| solver::greedy(&inst, c))?),
            ("ggx", timed(&|| solver::ggx(&inst, &cfg).map(|(s, _)| s))?),
        ];
        if s.bf_max.is_some_and(|limit| binomial(inst.locations(), c) <= limit) {
            runs.push(("bf", timed(&|| oracle::brute_force_opt(&inst, c))?));
        }
        for (algo, (sol, ms)) in runs {
            rows.push(BenchRow {
                instance_id: case.id(),
                zones: case.zones,
                m: case.locations,
                cardinality: c,
                alpha: case.alpha,
                beta: case.beta,
                model: case.model.name().into(),
                algo: algo.into(),
                objective: sol.objective.expect("solvers fill the objective"),
                wall_ms: if s.stamp { (ms * 1e3).round() / 1e3 } else { 0.0 },
                match_best: false,
            });
        }
    }
    Ok(rows)
}

/// Sets `match_best` within each `(instance, C)` group.
pub fn mark_best(rows: &mut [BenchRow]) {
    let mut best: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for r in rows.iter() {
        let e = best
            .entry((r.instance_id.clone(), r.cardinality))
            .or_insert(f64::NEG_INFINITY);
        *e = e.max(r.objective);
    }
    for r in rows.iter_mut() {
        let b = best[&(r.instance_id.clone(), r.cardinality)];
        r.match_best = (b - r.objective).abs() <= MATCH_TOLERANCE * b.abs().max(f64::MIN_POSITIVE);
    }
}

/// Runs all cases (in parallel on `jobs` threads) and returns rows in case
/// order.
pub fn run_bench(cases: &[BenchCase], s: &BenchSettings, jobs: usize) -> Result<Vec<BenchRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let per_case: Vec<Result<Vec<BenchRow>>> =
        pool.install(|| cases.par_iter().map(|c| run_case(c, s)).collect());
    let mut rows = Vec::new();
    for r in per_case {
        rows.extend(r?);
    }
    mark_best(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub problem: String,
    pub model: String,
    #[serde(rename = "I")]
    pub zones: usize,
    pub m: usize,
    pub algo: String,
    pub instances: usize,
    pub best_count: usize,
    pub mean_wall_ms: f64,
    pub mean_gap_pct: f64,
}

/// Per problem (model, size, geometry seed) and algorithm: how many
/// `(alpha, beta, C)` instances reached the best objective, mean time, and the
/// mean percentage gap to the best objective.
pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut best: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for r in rows {
        let e = best
            .entry((r.instance_id.clone(), r.cardinality))
            .or_insert(f64::NEG_INFINITY);
        *e = e.max(r.objective);
    }
    // keep first-seen order of problems and algorithms
    let mut order: Vec<(String, String)> = Vec::new();
    let mut acc: BTreeMap<(String, String), (SummaryRow, f64, f64)> = BTreeMap::new();
    for r in rows {
        let problem = r.instance_id.split("-a").next().unwrap_or(&r.instance_id).to_string();
        let key = (problem.clone(), r.algo.clone());
        let entry = acc.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            (
                SummaryRow {
                    problem,
                    model: r.model.clone(),
                    zones: r.zones,
                    m: r.m,
                    algo: r.algo.clone(),
                    instances: 0,
                    best_count: 0,
                    mean_wall_ms: 0.0,
                    mean_gap_pct: 0.0,
                },
                0.0,
                0.0,
            )
        });
        let b = best[&(r.instance_id.clone(), r.cardinality)];
        entry.0.instances += 1;
        entry.0.best_count += usize::from(r.match_best);
        entry.1 += r.wall_ms;
        entry.2 += if b > 0.0 { 100.0 * (b - r.objective) / b } else { 0.0 };
    }
    order
        .into_iter()
        .map(|k| {
            let (mut row, ms, gap) = acc.remove(&k).expect("key recorded");
            row.mean_wall_ms = ms / row.instances as f64;
            row.mean_gap_pct = gap / row.instances as f64;
            row
        })
        .collect()
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let io_err = |source: io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| io_err(io::Error::other(e)))?;
    }
    w.flush().map_err(io_err)
}

fn parse_cardinalities(s: &str) -> std::result::Result<Vec<usize>, Failure> {
    let bad = || usage(format!("--cs expects a range like 2-10 or a list like 2,3,4, got '{s}'"));
    let cs: Vec<usize> = if let Some((lo, hi)) = s.split_once('-') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<std::result::Result<_, _>>()?
    };
    if cs.is_empty() || cs.contains(&0) {
        return Err(bad());
    }
    Ok(cs)
}

fn parse_grid(items: &[String]) -> std::result::Result<Vec<(usize, usize)>, Failure> {
    items
        .iter()
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            let parsed = g
                .split_once('x')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
            match parsed {
                Some((i, m)) if i > 0 && m > 0 => Ok((i, m)),
                _ => Err(usage(format!("--grid entries look like 50x25, got '{g}'"))),
            }
        })
        .collect()
}

pub fn bench_cases(
    grid: &[(usize, usize)],
    models: &[ModelKind],
    alphas: &[f64],
    betas: &[f64],
    first_seed: u64,
    seeds: u64,
) -> Vec<BenchCase> {
    let mut cases = Vec::new();
    for &model in models {
        for &(zones, locations) in grid {
            for seed in first_seed..first_seed + seeds {
                for &alpha in alphas {
                    for &beta in betas {
                        cases.push(BenchCase {
                            model,
                            zones,
                            locations,
                            alpha,
                            beta,
                            seed,
                        });
                    }
                }
            }
        }
    }
    cases
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_summary.csv"))
}

fn cmd_bench(a: &BenchArgs) -> CmdResult {
    let grid = parse_grid(&a.grid)?;
    let cs = parse_cardinalities(&a.cs)?;
    if grid.is_empty() || a.alphas.is_empty() || a.betas.is_empty() || a.models.is_empty() {
        return Err(usage("empty benchmark grid"));
    }
    if a.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    if a.delta < 2 || !a.delta.is_multiple_of(2) {
        return Err(usage(format!("--delta must be an even integer >= 2, got {}", a.delta)));
    }
    let mu = a.mu.clone().unwrap_or_else(|| DEFAULT_MU.to_vec());
    if a.models.contains(&ModelKind::Nested) {
        if let Some(&(_, m)) = grid.iter().find(|(_, m)| *m < mu.len()) {
            return Err(usage(format!("{m} locations cannot hold {} nests", mu.len())));
        }
        if mu.iter().any(|&v| v.is_nan() || v < 1.0) {
            return Err(usage("--mu values must be >= 1"));
        }
    }
    let settings = BenchSettings {
        cardinalities: cs,
        delta: a.delta,
        coef_mode: a.coef_mode,
        time_budget: budget(a.time_budget)?,
        bf_max: a.bf_max,
        mu,
        mmnl_samples: a.mmnl_k,
        competitors: a.competitors,
        plane_side: a.plane_side,
        stamp: a.stamp,
    };
    let cases = bench_cases(&grid, &a.models, &a.alphas, &a.betas, a.seed, a.seeds);
    let started = Instant::now();
    let rows = run_bench(&cases, &settings, a.jobs)?;
    write_rows(&a.out, &rows)?;
    let summary = summarize(&rows);
    let spath = summary_path(&a.out);
    write_rows(&spath, &summary)?;

    let stdout = io::stdout();
    let mut o = stdout.lock();
    let _ = writeln!(
        o,
        "{:<24} {:>5} {:>5} {:>5} {:>9} {:>9} {:>12} {:>9}",
        "problem", "I", "m", "algo", "instances", "best", "mean_ms", "gap_%"
    );
    for s in &summary {
        let _ = writeln!(
            o,
            "{:<24} {:>5} {:>5} {:>5} {:>9} {:>9} {:>12.3} {:>9.4}",
            s.problem, s.zones, s.m, s.algo, s.instances, s.best_count, s.mean_wall_ms, s.mean_gap_pct
        );
    }
    let _ = writeln!(
        o,
        "{} rows -> {}; summary -> {}; {:.1} s",
        rows.len(),
        a.out.display(),
        spath.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinality_ranges() {
        assert_eq!(parse_cardinalities("2-4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_cardinalities("2,5").unwrap(), vec![2, 5]);
        assert!(parse_cardinalities("0-3").is_err());
        assert!(parse_cardinalities("").is_err());
        assert!(parse_cardinalities("a-b").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(
            parse_grid(&["50x25".into(), "100x50".into()]).unwrap(),
            vec![(50, 25), (100, 50)]
        );
        assert!(parse_grid(&["50".into()]).is_err());
        assert!(parse_grid(&[]).unwrap().is_empty());
    }

    #[test]
    fn nest_parameter_resolution() {
        assert_eq!(nest_params(None, None).unwrap(), DEFAULT_MU.to_vec());
        assert_eq!(nest_params(Some(2), Some(&[1.0, 2.0])).unwrap(), vec![1.0, 2.0]);
        assert!(nest_params(Some(3), Some(&[1.0, 2.0])).is_err());
        assert!(nest_params(Some(3), None).is_err());
    }

    #[test]
    fn best_marking_uses_relative_tolerance() {
        let row = |algo: &str, obj: f64| BenchRow {
            instance_id: "x".into(),
            zones: 1,
            m: 2,
            cardinality: 1,
            alpha: 0.1,
            beta: 1.0,
            model: "mnl".into(),
            algo: algo.into(),
            objective: obj,
            wall_ms: 0.0,
            match_best: false,
        };
        let mut rows = vec![row("gh", 10.0), row("ggx", 10.0 + 1e-9), row("bf", 10.5)];
        mark_best(&mut rows);
        assert_eq!(rows.iter().map(|r| r.match_best).collect::<Vec<_>>(), [false, false, true]);
        let mut rows = vec![row("gh", 10.0), row("ggx", 10.0 + 1e-9)];
        mark_best(&mut rows);
        assert!(rows.iter().all(|r| r.match_best));
    }
}
