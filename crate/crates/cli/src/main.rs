//! `quadenv` — generate instances, solve them with any of the five
//! penalties, certify optimality, tabulate restricted-isometry constants,
//! and reproduce the desk-scale noise sweeps and histograms.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 enumeration cap
//! exceeded, 4 solver divergence, 1 other failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use quadenv::certify::{
    certify_card_minimizer, certify_pk_minimizer, guarantee_oracle_card, guarantee_oracle_pk,
};
use quadenv::constants::{rlip_beta, rlip_beta_cached, BetaCache, EnumerationBudget, DEFAULT_ENUMERATION_CAP};
use quadenv::error::{Error, Result};
use quadenv::io;
use quadenv::model::{generate_ground_truth, generate_sensing_matrix, synthesize_measurements};
use quadenv::penalty::PenaltyKind;
use quadenv::solver::{fbs_solve, SolverConfig, StartPoint, StepSize};

use quadenv_cli::harness::{
    run_cardinality_histogram, run_constants_table, run_noise_sweep, ConstantsConfig, HistConfig,
    Method, StartChoice, SweepConfig,
};
use quadenv_cli::report;

#[derive(Parser)]
#[command(
    name = "quadenv",
    version,
    about = "Sparse recovery with quadratic-envelope penalties: solve, certify, sweep"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sensing matrix (and optionally a full instance) as CSV + JSON header files.
    Gen(GenArgs),
    /// Solve one instance with one method.
    Solve(SolveArgs),
    /// Emit an optimality or oracle-recovery certificate as JSON.
    Certify(CertifyArgs),
    /// Tabulate beta_k / delta_k constants over seeded random matrices.
    Constants(ConstantsArgs),
    /// Monte-Carlo noise sweep over methods (CSV/JSON/SVG reports).
    Sweep(SweepArgs),
    /// Cardinality histogram of the mu-card envelope solver.
    Hist(HistArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (stems matrix/x0/epsilon/b are created inside).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Sparsity of the ground truth; omit to emit the matrix only.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    mag_lo: f64,
    #[arg(long, default_value_t = 4.0)]
    mag_hi: f64,
    /// Exact ||x0|| after rescaling (0 = keep raw magnitudes).
    #[arg(long, default_value_t = 0.0)]
    norm: f64,
    /// Exact noise norm ||eps||.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix file stem (matrix.csv / matrix.json).
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side vector file stem.
    #[arg(long)]
    rhs: PathBuf,
    /// One of l1|card|pk|qenv-card|qenv-pk.
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Weight for the l1 method.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// "auto" or a positive number.
    #[arg(long, default_value = "auto")]
    step: String,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// zero | ls | a vector file stem.
    #[arg(long, default_value = "zero")]
    start: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// card | pk | oracle-card | oracle-pk.
    #[arg(long)]
    theorem: String,
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side stem (card/pk theorems).
    #[arg(long)]
    rhs: Option<PathBuf>,
    /// Candidate solution stem (card/pk theorems).
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Ground-truth stem (oracle theorems).
    #[arg(long)]
    x0: Option<PathBuf>,
    #[arg(long)]
    eps_norm: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Gap parameter N of the cardinality certificates.
    #[arg(long)]
    n_gap: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    /// Ignore the enumeration cap.
    #[arg(long)]
    force: bool,
    /// JSON sidecar caching beta values per matrix fingerprint.
    #[arg(long)]
    beta_cache: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    kmax: usize,
    #[arg(long, default_value_t = 1)]
    matrices: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also compute delta_k and the delta_{3K}+3 delta_{4K} < 2 verdicts.
    #[arg(long)]
    delta: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    #[arg(long)]
    force: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file whose present fields override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Comma-separated ascending noise norms.
    #[arg(long, default_value = "0,0.5,1,1.5,2,2.5,3,3.5,4,4.5,5")]
    noise: String,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Comma-separated subset of l1,card,pk,qenv-card,qenv-pk.
    #[arg(long, default_value = "l1,card,pk,qenv-card,qenv-pk")]
    methods: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// zero | ls.
    #[arg(long, default_value = "zero")]
    start: String,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 2.0)]
    mag_lo: f64,
    #[arg(long, default_value_t = 4.0)]
    mag_hi: f64,
    #[arg(long, default_value_t = 11.0)]
    norm: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct HistArgs {
    /// TOML file whose present fields override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 2.5)]
    noise: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// zero | ls (the reference protocol uses ls).
    #[arg(long, default_value = "ls")]
    start: String,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 2.0)]
    mag_lo: f64,
    #[arg(long, default_value_t = 4.0)]
    mag_hi: f64,
    #[arg(long, default_value_t = 11.0)]
    norm: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Present fields of a TOML config override the corresponding flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TomlOverride {
    m: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
    noise: Option<toml::Value>,
    trials: Option<usize>,
    methods: Option<Vec<String>>,
    mu: Option<f64>,
    seed: Option<u64>,
    start: Option<String>,
    max_iter: Option<usize>,
    mag_lo: Option<f64>,
    mag_hi: Option<f64>,
    norm: Option<f64>,
}

fn load_toml(path: &Path) -> Result<TomlOverride> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn parse_noise_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad noise value {tok:?}: {e}")))
        })
        .collect()
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',').map(Method::parse).collect()
}

/// Strips a .csv/.json extension so both `dir/matrix` and `dir/matrix.csv`
/// address the same file pair.
fn stem_of(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::EnumerationCap { .. } => ExitCode::from(3),
                Error::Diverged { .. } => ExitCode::from(4),
                Error::InvalidArgument(_) | Error::DimensionMismatch(_) | Error::Parse { .. } => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(args) => run_gen(args),
        Command::Solve(args) => run_solve(args),
        Command::Certify(args) => run_certify(args),
        Command::Constants(args) => run_constants(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Hist(args) => run_hist(args),
    }
}

#[derive(Serialize)]
struct InstanceSummary {
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    noise_norm: f64,
    target_norm: f64,
    mag_range: (f64, f64),
    support: Vec<usize>,
}

fn run_gen(args: GenArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let a = generate_sensing_matrix(args.m, args.n, args.seed)?;
    io::save_sensing_matrix(&args.out.join("matrix"), &a, Some(args.seed), "gaussian-normalized-columns")?;
    if let Some(k) = args.k {
        let (x0, support) = generate_ground_truth(
            args.n,
            k,
            (args.mag_lo, args.mag_hi),
            args.norm,
            args.seed.wrapping_add(1),
        )?;
        let inst = synthesize_measurements(&a, &x0, args.noise, args.seed.wrapping_add(2))?;
        io::save_signal_vector(&args.out.join("x0"), &inst.x0, Some(args.seed.wrapping_add(1)), "ground-truth")?;
        io::save_signal_vector(&args.out.join("epsilon"), &inst.epsilon, Some(args.seed.wrapping_add(2)), "noise")?;
        io::save_signal_vector(&args.out.join("b"), &inst.b, Some(args.seed), "measurements")?;
        io::write_json(
            &args.out.join("instance.json"),
            &InstanceSummary {
                m: args.m,
                n: args.n,
                k,
                seed: args.seed,
                noise_norm: args.noise,
                target_norm: args.norm,
                mag_range: (args.mag_lo, args.mag_hi),
                support: support.indices().to_vec(),
            },
        )?;
    }
    println!("wrote matrix ({}x{}) to {}", args.m, args.n, args.out.display());
    Ok(())
}

fn build_kind(method: &str, mu: f64, lambda: Option<f64>, k: usize) -> Result<PenaltyKind> {
    Ok(match Method::parse(method)? {
        Method::L1 => PenaltyKind::L1 {
            lambda: lambda.ok_or_else(|| Error::InvalidArgument("--lambda is required for the l1 method".into()))?,
        },
        Method::Card => PenaltyKind::Card { mu },
        Method::Pk => PenaltyKind::IndicatorPk { k },
        Method::QenvCard => PenaltyKind::QuadEnvCard { mu },
        Method::QenvPk => PenaltyKind::QuadEnvPk { k },
    })
}

#[derive(Serialize)]
struct SolveReport {
    method: String,
    step: f64,
    iterations_used: usize,
    converged: bool,
    stationarity_residual: f64,
    support: Vec<usize>,
    objective_final: f64,
    objective_trace: Vec<f64>,
}

fn run_solve(args: SolveArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let a = io::load_sensing_matrix(&stem_of(&args.matrix))?;
    let b = io::load_signal_vector(&stem_of(&args.rhs))?;
    let kind = build_kind(&args.method, args.mu, args.lambda, args.k)?;
    let step = match args.step.as_str() {
        "auto" => StepSize::Auto,
        other => StepSize::Fixed(other.parse::<f64>().map_err(|e| {
            Error::InvalidArgument(format!("bad --step {other:?}: {e}"))
        })?),
    };
    let start = match args.start.as_str() {
        "zero" => StartPoint::Zero,
        "ls" => StartPoint::LeastSquares,
        stem => StartPoint::Given(io::load_signal_vector(&stem_of(Path::new(stem)))?),
    };
    let cfg = SolverConfig { step, max_iter: args.max_iter, stop_tol: args.tol, start };
    let result = fbs_solve(&a, &b, &kind, &cfg)?;
    io::write_vector_csv(&args.out.join("solution.csv"), result.x_final.as_vector())?;
    io::write_json(
        &args.out.join("solve-report.json"),
        &SolveReport {
            method: kind.name().to_string(),
            step: result.step,
            iterations_used: result.iterations_used,
            converged: result.converged,
            stationarity_residual: result.stationarity_residual,
            support: result.support.indices().to_vec(),
            objective_final: *result.objective_trace.last().unwrap_or(&f64::NAN),
            objective_trace: result.objective_trace.clone(),
        },
    )?;
    println!(
        "{}: {} iterations, support size {}, residual {:.3e}",
        kind.name(),
        result.iterations_used,
        result.support.len(),
        result.stationarity_residual
    );
    Ok(())
}

fn run_certify(args: CertifyArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let a = io::load_sensing_matrix(&stem_of(&args.matrix))?;
    let budget = EnumerationBudget { cap: args.cap, force: args.force };

    let need = |opt: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
        opt.clone().ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for this theorem")))
    };
    let need_f = |opt: Option<f64>, name: &str| -> Result<f64> {
        opt.ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for this theorem")))
    };
    let need_u = |opt: Option<usize>, name: &str| -> Result<usize> {
        opt.ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for this theorem")))
    };

    let mut cache = match &args.beta_cache {
        Some(path) => Some((path.clone(), BetaCache::load(path)?)),
        None => None,
    };
    let mut beta_of = |k: usize| -> Result<f64> {
        match &mut cache {
            Some((_, c)) => rlip_beta_cached(&a, k, &budget, c),
            None => rlip_beta(&a, k, &budget),
        }
    };

    let report = match args.theorem.as_str() {
        "card" => {
            let b = io::load_signal_vector(&stem_of(&need(&args.rhs, "rhs")?))?;
            let x = io::load_signal_vector(&stem_of(&need(&args.solution, "solution")?))?;
            let n_gap = need_u(args.n_gap, "n-gap")?;
            certify_card_minimizer(&a, &b, args.mu, x.as_vector(), n_gap, &budget)?
        }
        "pk" => {
            let b = io::load_signal_vector(&stem_of(&need(&args.rhs, "rhs")?))?;
            let x = io::load_signal_vector(&stem_of(&need(&args.solution, "solution")?))?;
            let k = need_u(args.k, "k")?;
            certify_pk_minimizer(&a, &b, k, x.as_vector(), &budget)?
        }
        "oracle-card" => {
            let x0 = io::load_signal_vector(&stem_of(&need(&args.x0, "x0")?))?;
            let eps_norm = need_f(args.eps_norm, "eps-norm")?;
            let n_gap = need_u(args.n_gap, "n-gap")?;
            let card = x0.card();
            let beta_n = beta_of(n_gap)?;
            let beta_k = beta_of(card.max(1))?;
            guarantee_oracle_card(beta_n, beta_k, x0.as_vector(), eps_norm, args.mu, n_gap)?
        }
        "oracle-pk" => {
            let x0 = io::load_signal_vector(&stem_of(&need(&args.x0, "x0")?))?;
            let eps_norm = need_f(args.eps_norm, "eps-norm")?;
            let k = args.k.unwrap_or_else(|| x0.card());
            let beta_k = beta_of(k.max(1))?;
            let beta_2k = beta_of((2 * k).min(a.n()).max(1))?;
            guarantee_oracle_pk(beta_k, beta_2k, x0.as_vector(), eps_norm)?
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown theorem {other:?}; expected card|pk|oracle-card|oracle-pk"
            )))
        }
    };

    if let Some((path, c)) = &cache {
        c.save(path)?;
    }
    io::write_json(&args.out.join("certificate.json"), &report)?;
    println!("verdict: {:?}", report.verdict);
    for h in &report.hypotheses {
        println!(
            "  {} {}: lhs {} rhs {}",
            if h.passed { "pass" } else { "FAIL" },
            h.name,
            h.lhs,
            h.rhs
        );
    }
    Ok(())
}

fn run_constants(args: ConstantsArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let cfg = ConstantsConfig {
        m: args.m,
        n: args.n,
        k_max: args.kmax,
        num_matrices: args.matrices,
        seed: args.seed,
        with_delta: args.delta,
        cap: args.cap,
        force: args.force,
    };
    let rep = run_constants_table(&cfg)?;
    report::write_constants_csv(&args.out.join("constants.csv"), &rep)?;
    if args.delta {
        report::write_crt_csv(&args.out.join("crt.csv"), &rep)?;
    }
    report::write_constants_svg(&args.out.join("constants.svg"), &rep)?;
    io::write_json(&args.out.join("constants.json"), &rep)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {} rows to {}", rep.rows.len(), args.out.display());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let overrides = match &args.config {
        Some(path) => load_toml(path)?,
        None => TomlOverride::default(),
    };
    let noise_grid = match overrides.noise {
        Some(toml::Value::Array(values)) => values
            .into_iter()
            .map(|v| match v {
                toml::Value::Float(f) => Ok(f),
                toml::Value::Integer(i) => Ok(i as f64),
                other => Err(Error::InvalidArgument(format!("bad noise entry {other:?}"))),
            })
            .collect::<Result<Vec<f64>>>()?,
        Some(other) => return Err(Error::InvalidArgument(format!("noise must be an array, got {other:?}"))),
        None => parse_noise_list(&args.noise)?,
    };
    let methods = match overrides.methods {
        Some(names) => names.iter().map(|s| Method::parse(s)).collect::<Result<Vec<_>>>()?,
        None => parse_methods(&args.methods)?,
    };
    let cfg = SweepConfig {
        m: overrides.m.unwrap_or(args.m),
        n: overrides.n.unwrap_or(args.n),
        k: overrides.k.unwrap_or(args.k),
        noise_grid,
        trials: overrides.trials.unwrap_or(args.trials),
        methods,
        mu: overrides.mu.unwrap_or(args.mu),
        seed: overrides.seed.unwrap_or(args.seed),
        start: StartChoice::parse(&overrides.start.unwrap_or(args.start))?,
        max_iter: overrides.max_iter.unwrap_or(args.max_iter),
        mag_range: (overrides.mag_lo.unwrap_or(args.mag_lo), overrides.mag_hi.unwrap_or(args.mag_hi)),
        target_norm: overrides.norm.unwrap_or(args.norm),
    };
    let rep = run_noise_sweep(&cfg)?;
    report::write_sweep_csv(&args.out.join("sweep.csv"), &rep)?;
    report::write_sweep_svg(&args.out.join("sweep.svg"), &rep)?;
    io::write_json(&args.out.join("sweep.json"), &rep)?;
    for w in &rep.monotonicity_warnings {
        eprintln!("warning: {w}");
    }
    if !rep.failures.is_empty() {
        eprintln!("{} trial failures recorded in sweep.json", rep.failures.len());
    }
    println!(
        "swept {} methods x {} noise levels x {} trials into {}",
        cfg.methods.len(),
        cfg.noise_grid.len(),
        cfg.trials,
        args.out.display()
    );
    Ok(())
}

fn run_hist(args: HistArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let overrides = match &args.config {
        Some(path) => load_toml(path)?,
        None => TomlOverride::default(),
    };
    let noise = match overrides.noise {
        Some(toml::Value::Float(f)) => f,
        Some(toml::Value::Integer(i)) => i as f64,
        Some(other) => return Err(Error::InvalidArgument(format!("noise must be a number, got {other:?}"))),
        None => args.noise,
    };
    let cfg = HistConfig {
        m: overrides.m.unwrap_or(args.m),
        n: overrides.n.unwrap_or(args.n),
        k: overrides.k.unwrap_or(args.k),
        noise,
        trials: overrides.trials.unwrap_or(args.trials),
        mu: overrides.mu.unwrap_or(args.mu),
        seed: overrides.seed.unwrap_or(args.seed),
        start: StartChoice::parse(&overrides.start.unwrap_or(args.start))?,
        max_iter: overrides.max_iter.unwrap_or(args.max_iter),
        mag_range: (overrides.mag_lo.unwrap_or(args.mag_lo), overrides.mag_hi.unwrap_or(args.mag_hi)),
        target_norm: overrides.norm.unwrap_or(args.norm),
    };
    let rep = run_cardinality_histogram(&cfg)?;
    report::write_hist_csv(&args.out.join("hist.csv"), &rep)?;
    report::write_hist_svg(&args.out.join("hist.svg"), &rep)?;
    io::write_json(&args.out.join("hist.json"), &rep)?;
    if !rep.failures.is_empty() {
        eprintln!("{} trial failures recorded in hist.json", rep.failures.len());
    }
    let recovered = rep.cardinalities.iter().filter(|&&c| c == cfg.k).count();
    println!(
        "{} trials, {} at cardinality {} (full histogram in {})",
        rep.cardinalities.len(),
        recovered,
        cfg.k,
        args.out.display()
    );
    Ok(())
}
