//! `sea`: command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use sea_core::experiments::{run_experiment, write_outputs, ExperimentConfig, ExperimentKind, Scale};
use sea_core::io::{self, ResultFile};
use sea_core::linalg;
use sea_core::losses::LossKind;
use sea_core::model::{build_problem, GeneratorSpec, MatrixKind, NoiseMode};
use sea_core::theory::{self, RIP_ENUMERATION_CAP};
use sea_core::{run_solver, Error, SolverConfig, SolverId};

const SIDECAR: &str = "effective_config.json";

#[derive(Parser)]
#[command(name = "sea", version, about = "Sparse support recovery by support exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on a problem bundle.
    Solve(SolveArgs),
    /// Success-rate sweep over (m, k) on Gaussian matrices.
    PhaseDiagram(SweepArgs),
    /// Spike deconvolution sweep over k with a Gaussian blur.
    Deconv(SweepArgs),
    /// Certify a recorded trace against the convergence theory.
    VerifyTheory(VerifyArgs),
    /// Write a synthetic problem bundle.
    GenProblem(GenArgs),
}

#[derive(Args)]
struct Common {
    /// JSON object (inline or a file path) whose keys override flags.
    #[arg(long)]
    config: Option<String>,
    /// Worker threads; overrides SEA_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    algo: String,
    /// Problem bundle directory.
    #[arg(long)]
    problem: PathBuf,
    /// Sparsity; defaults to the bundle's.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value = "ls")]
    loss: String,
    /// Dense starting point, one value per line.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "desk")]
    scale: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; defaults to the subcommand name.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated solver ids.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    noise_mode: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sparsities.
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
    #[arg(long)]
    k_prime_ratio: Option<f64>,
    /// Comma-separated step multipliers for step-driven baselines.
    #[arg(long, value_delimiter = ',')]
    eta_multipliers: Option<Vec<f64>>,
    /// Record wall-clock time per run (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    /// Step size used for the trace; defaults to the `result.json` beside
    /// the trace, then to 1.8/σ_max(A)².
    #[arg(long)]
    eta: Option<f64>,
    /// Starting point of the trace (zeros when absent).
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Largest number of supports enumerated per RIP constant.
    #[arg(long, default_value_t = RIP_ENUMERATION_CAP as u64)]
    rip_cap: u64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenArgs {
    /// gaussian, convolution or orthonormal.
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "after_A")]
    noise_mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    algo: SolverId,
    problem: PathBuf,
    k: usize,
    max_iter: usize,
    eta: Option<f64>,
    loss: LossKind,
    init: Option<PathBuf>,
    seed: u64,
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    problem: PathBuf,
    trace: PathBuf,
    eta: f64,
    x0: Option<PathBuf>,
    rip_cap: u64,
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn dispatch(cmd: Command) -> sea_core::Result<()> {
    match cmd {
        Command::Solve(a) => solve(a),
        Command::PhaseDiagram(a) => sweep(ExperimentKind::PhaseTransition, a),
        Command::Deconv(a) => sweep(ExperimentKind::Deconvolution, a),
        Command::VerifyTheory(a) => verify(a),
        Command::GenProblem(a) => gen_problem(a),
    }
}

fn load_overrides(arg: &Option<String>) -> sea_core::Result<Option<Value>> {
    let Some(src) = arg else { return Ok(None) };
    let text = if src.trim_start().starts_with('{') {
        src.clone()
    } else {
        fs::read_to_string(src).map_err(|e| Error::Config(format!("cannot read config {src}: {e}")))?
    };
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("config is not JSON: {e}")))?;
    if !v.is_object() {
        return Err(Error::Config("config must be a JSON object".into()));
    }
    Ok(Some(v))
}

/// Replaces fields of `base` by the keys of `overrides`; unknown keys fail.
fn apply_overrides<T: Serialize + DeserializeOwned>(base: T, overrides: Option<&Value>) -> sea_core::Result<T> {
    let Some(ov) = overrides else { return Ok(base) };
    let mut v = serde_json::to_value(&base)?;
    let fields = v.as_object_mut().ok_or_else(|| Error::Config("config is not an object".into()))?;
    for (key, val) in ov.as_object().into_iter().flatten() {
        match fields.get_mut(key) {
            Some(slot) => *slot = val.clone(),
            None => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
    }
    serde_json::from_value(v).map_err(|e| Error::Config(format!("config: {e}")))
}

/// `--threads`, else `SEA_THREADS` capped by the available cores, else
/// every core.
fn resolve_threads(flag: Option<usize>) -> sea_core::Result<usize> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if let Some(t) = flag {
        return if t == 0 { Err(Error::Config("--threads must be positive".into())) } else { Ok(t) };
    }
    match std::env::var("SEA_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t.min(cores)),
            _ => Err(Error::Config(format!("SEA_THREADS must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(cores),
    }
}

fn write_sidecar<T: Serialize>(dir: &Path, cfg: &T) -> sea_core::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SIDECAR), serde_json::to_string_pretty(cfg)? + "\n")?;
    Ok(())
}

fn read_dense(path: &Path) -> sea_core::Result<Vec<f64>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    io::vector_from_csv(&text)
}

fn solve(a: SolveArgs) -> sea_core::Result<()> {
    let overrides = load_overrides(&a.common.config)?;
    let problem_dir = overrides
        .as_ref()
        .and_then(|o| o.get("problem"))
        .and_then(Value::as_str)
        .map_or(a.problem.clone(), PathBuf::from);
    let mut problem = io::read_problem(&problem_dir)?;
    let base = SolveConfig {
        algo: a.algo.parse()?,
        problem: a.problem,
        k: a.k.unwrap_or(problem.k),
        max_iter: a.max_iter,
        eta: a.eta,
        loss: a.loss.parse()?,
        init: a.init,
        seed: a.seed,
        out: a.out,
    };
    let cfg = apply_overrides(base, overrides.as_ref())?;
    if cfg.k == 0 || cfg.k > problem.n() {
        return Err(Error::Config(format!("k must be in 1..={}", problem.n())));
    }
    problem.k = cfg.k;
    let mut solver_cfg = SolverConfig {
        eta: cfg.eta,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
        record_trace: true,
        loss: cfg.loss,
        ..SolverConfig::default()
    };
    if let Some(p) = &cfg.init {
        solver_cfg.init = Some(read_dense(p)?);
    }
    let r = run_solver(cfg.algo, &problem, &solver_cfg)?;
    if !(r.loss_best.is_finite() && r.loss_final.is_finite()) {
        return Err(Error::Numerical(format!("{} diverged: the loss is not finite", r.algorithm)));
    }
    let cfg = SolveConfig { eta: cfg.eta.or(Some(r.eta).filter(|e| e.is_finite())), ..cfg };
    fs::create_dir_all(&cfg.out)?;
    let result = ResultFile::from_result(&r, cfg.k);
    fs::write(cfg.out.join("result.json"), serde_json::to_string_pretty(&result)? + "\n")?;
    let trace = r.trace.as_ref().ok_or_else(|| Error::Numerical("solver kept no trace".into()))?;
    fs::write(cfg.out.join("trace.csv"), io::trace_to_csv(trace))?;
    write_sidecar(&cfg.out, &cfg)?;
    println!(
        "{}: loss {} at t = {}, {} supports explored",
        r.algorithm,
        io::fmt_f64(r.loss_best),
        r.t_best,
        r.supports_explored
    );
    Ok(())
}

fn sweep(kind: ExperimentKind, a: SweepArgs) -> sea_core::Result<()> {
    let scale: Scale = a.scale.parse()?;
    let mut cfg = ExperimentConfig::for_scale(kind, scale);
    cfg.base_seed = a.seed;
    cfg.parallelism = Some(resolve_threads(a.common.threads)?);
    cfg.record_runtime = a.timing;
    if let Some(r) = a.runs {
        cfg.runs_per_cell = r;
    }
    if let Some(algos) = &a.algos {
        cfg.algorithms = algos.iter().map(|s| s.trim().parse()).collect::<sea_core::Result<_>>()?;
    }
    if let Some(x) = a.noise {
        cfg.noise_fraction = x;
    }
    if let Some(m) = &a.noise_mode {
        cfg.noise_mode = parse_noise_mode(m)?;
    }
    if let Some(n) = a.n {
        cfg.n = n;
        if kind == ExperimentKind::PhaseTransition {
            cfg.m_grid = sea_core::experiments::zeta_grid(n, cfg.m_grid.len());
        } else {
            cfg.m_grid = vec![n];
        }
    }
    if let Some(k) = a.k_grid {
        cfg.k_grid = k;
    }
    cfg.k_prime_ratio = a.k_prime_ratio.or(cfg.k_prime_ratio);
    cfg.eta_multipliers = a.eta_multipliers.or(cfg.eta_multipliers);
    if let Some(ov) = load_overrides(&a.common.config)? {
        cfg = cfg.with_overrides(&ov)?;
    }
    cfg.validate()?;
    let out = a.out.unwrap_or_else(|| PathBuf::from(if kind == ExperimentKind::Deconvolution { "deconv" } else { "phase-diagram" }));
    eprintln!("running {} solver invocations on {} threads", cfg.invocations(), cfg.threads());
    let grid = run_experiment(&cfg)?;
    let written = write_outputs(&grid, &out)?;
    write_sidecar(&out, &cfg)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn parse_noise_mode(s: &str) -> sea_core::Result<NoiseMode> {
    match s {
        "after_A" | "after_a" | "after" => Ok(NoiseMode::AfterA),
        "before_A" | "before_a" | "before" => Ok(NoiseMode::BeforeA),
        other => Err(Error::Config(format!("unknown noise mode {other:?}, expected after_A or before_A"))),
    }
}

fn verify(a: VerifyArgs) -> sea_core::Result<()> {
    let overrides = load_overrides(&a.common.config)?;
    let text = fs::read_to_string(&a.trace)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", a.trace.display())))?;
    let trace = io::trace_from_csv(&text)?;
    let problem = io::read_problem(&a.problem)?;
    let beside = a.trace.parent().map(|d| d.join("result.json"));
    let recorded_eta = beside
        .filter(|p| p.exists())
        .and_then(|p| fs::read_to_string(p).ok())
        .and_then(|t| serde_json::from_str::<ResultFile>(&t).ok())
        .map(|r| r.eta);
    let base = VerifyConfig {
        problem: a.problem,
        trace: a.trace,
        eta: a.eta.or(recorded_eta).unwrap_or_else(|| linalg::default_step(&problem.a)),
        x0: a.x0,
        rip_cap: a.rip_cap,
        out: a.out,
    };
    let cfg = apply_overrides(base, overrides.as_ref())?;
    if !(cfg.eta > 0.0 && cfg.eta.is_finite()) {
        return Err(Error::Config(format!("eta must be positive, got {}", cfg.eta)));
    }
    if let Some(s) = trace.support_sequence.iter().find(|s| s.len() != problem.k || s.iter().any(|i| i >= problem.n())) {
        return Err(Error::Config(format!("trace support {} does not fit the problem", s.to_one_based_string())));
    }
    let x0 = match &cfg.x0 {
        Some(p) => read_dense(p)?,
        None => vec![0.0; problem.n()],
    };
    if x0.len() != problem.n() {
        return Err(Error::DimensionMismatch("x0 length differs from n".into()));
    }
    let report = theory::theory_report(&problem, &trace, cfg.eta, &x0, u128::from(cfg.rip_cap))?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    print!("{json}");
    let sidecar_dir = match &cfg.out {
        Some(p) => {
            if let Some(d) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(d)?;
            }
            fs::write(p, &json)?;
            p.parent().map_or(PathBuf::from("."), Path::to_path_buf)
        }
        None => cfg.trace.parent().map_or(PathBuf::from("."), Path::to_path_buf),
    };
    write_sidecar(if sidecar_dir.as_os_str().is_empty() { Path::new(".") } else { &sidecar_dir }, &cfg)?;
    Ok(())
}

fn gen_problem(a: GenArgs) -> sea_core::Result<()> {
    let matrix = match a.kind.as_str() {
        "gaussian" => MatrixKind::Gaussian,
        "convolution" => MatrixKind::Convolution { sigma: a.sigma },
        "orthonormal" => MatrixKind::Orthonormal,
        other => return Err(Error::Config(format!("unknown matrix kind {other:?}"))),
    };
    let spec = GeneratorSpec {
        matrix,
        m: a.m.unwrap_or(a.n),
        n: a.n,
        k: a.k,
        noise_fraction: a.noise,
        noise_mode: parse_noise_mode(&a.noise_mode)?,
        ..GeneratorSpec::gaussian(a.n, a.n, a.k, a.seed)
    };
    let spec = apply_overrides(spec, load_overrides(&a.common.config)?.as_ref())?;
    let problem = build_problem(&spec)?;
    io::write_problem(&a.out, &problem)?;
    write_sidecar(&a.out, &spec)?;
    println!("{}", a.out.display());
    Ok(())
}
