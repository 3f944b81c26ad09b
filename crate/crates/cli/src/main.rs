// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! `qsens`: synthesize controllers, analyze their robustness, and test
//! correlations between the resulting metrics.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 numerical contract violation,
//! 4 finished with a warning (no surviving controllers).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsens::io::{
    self, ControllerRecord, CorrelationRow, IndexRow, MetricPair, RobustnessRecord, TestKind,
};
use qsens::problems::{problem, problem_registry};
use qsens::search;
use qsens::stats::{self, Tail};
use qsens::study::{self, AnalysisOptions};
use qsens::synthesis::{self, InitStrategy, SynthesisConfig};
use qsens::Error;

const THREADS_ENV: &str = "QSENS_THREADS";
const EXIT_WARNING: u8 = 4;

#[derive(Parser)]
#[command(
    name = "qsens",
    version,
    about = "Gate synthesis and sensitivity-robustness studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the benchmark problem table.
    Problems,
    /// Run seeded restarts and keep controllers below the error filter.
    Synthesize(SynthesizeArgs),
    /// Compute sensitivity bounds and the worst-case perturbation per controller.
    Analyze(AnalyzeArgs),
    /// One-tailed correlation test on a robustness table.
    Stats(StatsArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem id, 1 to 9.
    #[arg(long)]
    problem: usize,
    /// Gate time t_f.
    #[arg(long)]
    tf: f64,
    /// Number of time steps.
    #[arg(long)]
    kappa: usize,
    /// Accept (t_f, kappa) outside the problem's table row.
    #[arg(long = "override")]
    allow_override: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Uniform,
    StandardNormal,
    Zeros,
}

impl From<InitArg> for InitStrategy {
    fn from(v: InitArg) -> Self {
        match v {
            InitArg::Uniform => Self::Uniform,
            InitArg::StandardNormal => Self::StandardNormal,
            InitArg::Zeros => Self::Zeros,
        }
    }
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    /// Master seed; restart r draws from stream r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Uniform)]
    init: InitArg,
    #[arg(long, default_value_t = synthesis::DEFAULT_GRAD_TOL)]
    grad_tol: f64,
    #[arg(long, default_value_t = synthesis::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Keep controllers with error below this.
    #[arg(long, default_value_t = synthesis::DEFAULT_FIDELITY_FILTER)]
    filter: f64,
    /// Output directory (controllers/ and index.csv are written inside).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Controller JSON files or directories containing them.
    #[arg(required = true)]
    controllers: Vec<PathBuf>,
    /// Only accept controllers for this problem.
    #[arg(long)]
    problem: Option<usize>,
    /// Error threshold of the worst-case search.
    #[arg(long, default_value_t = search::DEFAULT_THRESHOLD)]
    epsilon: f64,
    /// Common search step; chosen per controller when omitted.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = search::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Robustness CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairArg {
    BvuError,
    BvuDelta,
    LogsensError,
}

impl From<PairArg> for MetricPair {
    fn from(v: PairArg) -> Self {
        match v {
            PairArg::BvuError => Self::BoundError,
            PairArg::BvuDelta => Self::BoundDelta,
            PairArg::LogsensError => Self::LogSensError,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    Negative,
    Positive,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Pearson,
    Kendall,
}

#[derive(Args)]
struct StatsArgs {
    /// Robustness CSV written by `analyze`.
    records: PathBuf,
    #[arg(long, value_enum)]
    pair: PairArg,
    #[arg(long, value_enum, default_value_t = TestArg::Pearson)]
    test: TestArg,
    /// Alternative hypothesis; defaults to the expected trend of the pair.
    #[arg(long, value_enum)]
    tail: Option<TailArg>,
    /// Output directory for the result row and scatter files.
    #[arg(long)]
    out: PathBuf,
    /// Also write an SVG scatter plot.
    #[arg(long)]
    svg: bool,
}

enum Outcome {
    Done,
    Warning,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) => 1,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        _ => 3,
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn synthesize(args: &SynthesizeArgs) -> qsens::Result<Outcome> {
    let p = &args.problem;
    let template = problem(p.problem)?;
    if !p.allow_override && !template.admits(p.tf, p.kappa) {
        return Err(Error::Argument(format!(
            "problem {} admits t_f in {:?} and kappa in {:?}; pass --override to use t_f = {}, kappa = {}",
            p.problem, template.final_times, template.step_counts, p.tf, p.kappa
        )));
    }
    if p.kappa == 0 {
        return Err(Error::Argument("kappa must be positive".into()));
    }
    let spec = template.build()?;
    let config = SynthesisConfig {
        init: args.init.into(),
        seed: args.seed,
        max_iters: args.max_iters,
        grad_tol: args.grad_tol,
        fidelity_filter: args.filter,
    };
    config.validate()?;

    let dir = args.out.join("controllers");
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let survivors = synthesis::batch_synthesize(&spec, p.tf, p.kappa, args.restarts, &config)?;
    let mut index = Vec::with_capacity(survivors.len());
    for s in &survivors {
        let rec = ControllerRecord::from_survivor(p.problem, s);
        io::write_controller(&dir.join(format!("{}.json", rec.id)), &rec)?;
        index.push(IndexRow::from(&rec));
    }
    let index_path = args.out.join("index.csv");
    if index.is_empty() {
        io::write_csv_header(&index_path, io::INDEX_HEADER)?;
    } else {
        io::write_csv(&index_path, &index)?;
    }
    let best = survivors
        .iter()
        .map(|s| s.synthesized.error)
        .fold(f64::INFINITY, f64::min);
    eprintln!(
        "{} of {} restarts below {}; best error {best:.3e}",
        survivors.len(),
        args.restarts,
        args.filter
    );
    if survivors.is_empty() {
        eprintln!("warning: no surviving controllers");
        return Ok(Outcome::Warning);
    }
    Ok(Outcome::Done)
}

fn collect_controller_paths(inputs: &[PathBuf]) -> qsens::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| io_err(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            out.extend(found);
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(io_err(p, std::io::ErrorKind::NotFound.into()));
        }
    }
    Ok(out)
}

fn analyze(args: &AnalyzeArgs) -> qsens::Result<Outcome> {
    let opts = AnalysisOptions {
        threshold: args.epsilon,
        step: args.step,
        max_iter: args.max_iter,
    };
    if let Some(d) = opts.step {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Argument(format!("step {d} must be positive")));
        }
    }
    let paths = collect_controller_paths(&args.controllers)?;
    let mut loaded = Vec::new();
    for path in &paths {
        let rec = match io::read_controller(path) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                continue;
            }
        };
        if args.problem.is_some_and(|id| id != rec.problem) {
            eprintln!(
                "error: {}: controller is for problem {}",
                path.display(),
                rec.problem
            );
            continue;
        }
        loaded.push(rec);
    }
    loaded.sort_by(|a, b| a.id.cmp(&b.id));

    let results: Vec<qsens::Result<RobustnessRecord>> = {
        use rayon::prelude::*;
        loaded
            .par_iter()
            .map(|rec| {
                let spec = problem(rec.problem)?.build()?;
                let unc = qsens::sensitivity::UncertaintyStructure::standard(&spec)?;
                let ctrl = rec.controller()?;
                let r = study::analyze_controller(&spec, &ctrl, &unc, &opts)?;
                Ok(RobustnessRecord::new(rec, &r))
            })
            .collect()
    };
    let mut rows = Vec::new();
    let mut failed = 0;
    for (rec, r) in loaded.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                failed += 1;
                eprintln!("error: controller {}: {e}", rec.id);
            }
        }
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    io::write_records(&args.out, &rows)?;
    eprintln!("analyzed {} controllers, {failed} failed", rows.len());
    Ok(Outcome::Done)
}

fn stats_cmd(args: &StatsArgs) -> qsens::Result<Outcome> {
    let rows = io::read_records(&args.records)?;
    let pair: MetricPair = args.pair.into();
    let tail = match args.tail {
        Some(TailArg::Negative) => Tail::Negative,
        Some(TailArg::Positive) => Tail::Positive,
        None => match pair {
            MetricPair::BoundError => Tail::Positive,
            MetricPair::BoundDelta | MetricPair::LogSensError => Tail::Negative,
        },
    };
    let test = match args.test {
        TestArg::Pearson => TestKind::Pearson,
        TestArg::Kendall => TestKind::Kendall,
    };
    let (x, y) = pair.extract(&rows);
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let result = match test {
        TestKind::Pearson => stats::pearson_test(&x, &y, tail),
        TestKind::Kendall => stats::kendall_test(&x, &y, tail),
    };
    let stem = format!(
        "{}-{}",
        pair.name(),
        if test == TestKind::Pearson {
            "pearson"
        } else {
            "kendall"
        }
    );
    let row = match &result {
        Ok(c) => CorrelationRow::new(&rows, pair, test, c),
        Err(e) => CorrelationRow::failed(&rows, pair, test, tail, e),
    };
    io::write_csv(
        &args.out.join(format!("{stem}.csv")),
        std::slice::from_ref(&row),
    )?;
    let labels = pair.axis_labels();
    let scatter = args.out.join(format!("{}-scatter.csv", pair.name()));
    io::write_scatter_csv(&scatter, &x, &y, labels)?;
    if args.svg {
        let title = format!("{} vs {}", labels.1, labels.0);
        let svg = io::scatter_svg(&x, &y, labels, &title);
        io::write_text(&args.out.join(format!("{}-scatter.svg", pair.name())), &svg)?;
    }
    let c = result?;
    println!(
        "n={} coefficient={:.6} statistic={:.6} p={:.6e} tail={} significant={}",
        c.n, c.coefficient, c.statistic, c.p_value, c.tail, c.significant
    );
    Ok(Outcome::Done)
}

fn print_problems() -> qsens::Result<Outcome> {
    println!("id  qubits  coupling        controls             target   t_f            kappa");
    for p in problem_registry() {
        println!(
            "{:<3} {:<7} {:<15} {:<20} {:<8} {:<14} {:?}",
            p.id,
            p.qubits,
            format!("{:?}", p.coupling),
            format!("{:?}", p.topology),
            match p.target {
                qsens::problems::TargetKind::Cnot => "CNOT".to_string(),
                qsens::problems::TargetKind::Qft => "QFT".to_string(),
                qsens::problems::TargetKind::RandomUnitary { .. } => "random".to_string(),
            },
            format!("{:?}", p.final_times),
            p.step_counts
        );
    }
    Ok(Outcome::Done)
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Problems => print_problems(),
        Command::Synthesize(a) => synthesize(a),
        Command::Analyze(a) => analyze(a),
        Command::Stats(a) => stats_cmd(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Warning) => ExitCode::from(EXIT_WARNING),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
