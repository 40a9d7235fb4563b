//! Command-line front end: trajectory runs, Monte Carlo escape experiments,
//! fixed-point spectra, flow fields, cone dynamics, model-based runs with
//! certificates, and the property-check suite.
//!
//! Exit codes: 0 success, 1 failed checks or internal errors, 2 bad
//! input/parameters, 3 inner-solver failure. Every error path prints a
//! one-line JSON object on stderr.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use proxsaddle::config::{parse_box, parse_floats, CliConfig, OutputFormat, Subcommand};
use proxsaddle::dynamics::{
    cone_dynamics_check, escape_experiment, flowfield, fmt_full, run, EscapeConfig, InitSampler,
    RunConfig,
};
use proxsaddle::error::{Error, Result};
use proxsaddle::mba::{mba_run, rate_bound_check, validate_params, ModelOracle};
use proxsaddle::problems::{absym_split, tilt, Builtin, ProblemOracle};
use proxsaddle::proxengine::{IterationMap, MapKind, ProxParams};
use proxsaddle::spectra::{classify_fixed_point, default_fd_step, DEFAULT_CLASS_TOL};
use proxsaddle::verify::{run_checks, VerifyOptions};

#[derive(Parser)]
#[command(name = "proxsaddle", version, about = "Proximal algorithms with saddle-escape diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Run one damped fixed-point trajectory and emit it as CSV.
    Run(CommonArgs),
    /// Monte Carlo escape experiment over sampled initializers (JSON report).
    Escape(CommonArgs),
    /// Jacobian spectrum and stability classification at a fixed point (JSON).
    Spectrum(CommonArgs),
    /// Tabulate the envelope descent field on a grid (CSV).
    Flowfield(CommonArgs),
    /// Closed-form cone dynamics cross-checked against the runner (JSON).
    Cone(CommonArgs),
    /// Relaxed model-based run with per-iteration certificates (CSV log).
    Mba(CommonArgs),
    /// Run the named property checks against the built-in problems.
    Verify(CommonArgs),
}

/// One flag set shared by all subcommands; unused flags are simply ignored by
/// commands that do not consume them. Flags override config-file values,
/// which override defaults.
#[derive(Args, Default)]
struct CommonArgs {
    /// Flat key-value config file; flags given here take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem id: absym, absym-composite, absreg, pathological:rho=R, quadratic:dim=D.
    #[arg(long)]
    problem: Option<String>,
    /// Algorithm: prox-point, prox-gradient, or prox-linear.
    #[arg(long)]
    algo: Option<String>,
    /// Prox parameter mu.
    #[arg(long)]
    mu: Option<f64>,
    /// Damping parameter alpha in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Model regularization parameter tau (mba).
    #[arg(long)]
    tau: Option<f64>,
    /// Initial point, comma separated, e.g. 0,0.5.
    #[arg(long)]
    x0: Option<String>,
    /// Per-dimension intervals lo:hi, comma separated, e.g. -1:1,-1:1.
    #[arg(long = "box")]
    box_bounds: Option<String>,
    /// Initializer sampler: box or cone.
    #[arg(long)]
    sampler: Option<String>,
    /// Top of the cone sampler.
    #[arg(long)]
    y_max: Option<f64>,
    /// Number of Monte Carlo trials.
    #[arg(long)]
    n_trials: Option<usize>,
    /// Iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Convergence threshold on successive-iterate displacement.
    #[arg(long)]
    stop_tol: Option<f64>,
    /// Record every k-th iterate in the trajectory CSV.
    #[arg(long)]
    record_every: Option<usize>,
    /// RNG seed for experiment sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Target critical point for escape classification.
    #[arg(long)]
    target: Option<String>,
    /// Radius around the target counting as "reached".
    #[arg(long)]
    target_radius: Option<f64>,
    /// Linear tilt vector applied to the problem.
    #[arg(long)]
    tilt: Option<String>,
    /// Finite-difference step override.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Eigenvalue classification tolerance.
    #[arg(long)]
    class_tol: Option<f64>,
    /// Lower bound on inf f for the rate-bound check (mba).
    #[arg(long)]
    inf_lower_bound: Option<f64>,
    /// Grid nodes per dimension (flowfield), comma separated.
    #[arg(long)]
    resolution: Option<String>,
    /// Number of closed-form steps to verify (cone).
    #[arg(long)]
    steps: Option<usize>,
    /// Weak-convexity modulus of the pathological family (cone).
    #[arg(long)]
    rho: Option<f64>,
    /// Inverse prox parameter of the pathological family (cone).
    #[arg(long)]
    lambda: Option<f64>,
    /// Run only checks whose name contains this substring (verify).
    #[arg(long)]
    only: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<String>,
    /// Output format where a choice exists: csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Enforce the damping bound for alpha (prox-linear only warns).
    #[arg(long)]
    strict: Option<bool>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let (sub, args) = match &cli.command {
        Command::Run(a) => (Subcommand::Run, a),
        Command::Escape(a) => (Subcommand::Escape, a),
        Command::Spectrum(a) => (Subcommand::Spectrum, a),
        Command::Flowfield(a) => (Subcommand::Flowfield, a),
        Command::Cone(a) => (Subcommand::Cone, a),
        Command::Mba(a) => (Subcommand::Mba, a),
        Command::Verify(a) => (Subcommand::Verify, a),
    };
    match resolve_and_dispatch(sub, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.kind(), "message": e.to_string() })
            );
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Parameter(_) | Error::Precondition(_) => 2,
        Error::Convergence { .. } => 3,
        Error::RunAborted { source, .. } => exit_code(source),
        _ => 1,
    }
}

fn resolve_and_dispatch(sub: Subcommand, args: &CommonArgs) -> Result<i32> {
    let mut config = defaults_for(sub);
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)?;
        let from_file = CliConfig::from_kv(&text)?;
        if let Some(file_sub) = from_file.subcommand {
            if file_sub != sub {
                return Err(Error::Input(format!(
                    "config file is for subcommand {:?}, invoked {:?}",
                    file_sub.id(),
                    sub.id()
                )));
            }
        }
        config.merge(&from_file);
    }
    config.merge(&flags_overlay(sub, args)?);
    match sub {
        Subcommand::Run => cmd_run(&config),
        Subcommand::Escape => cmd_escape(&config),
        Subcommand::Spectrum => cmd_spectrum(&config),
        Subcommand::Flowfield => cmd_flowfield(&config),
        Subcommand::Cone => cmd_cone(&config),
        Subcommand::Mba => cmd_mba(&config),
        Subcommand::Verify => cmd_verify(&config),
    }
}

fn defaults_for(sub: Subcommand) -> CliConfig {
    // Escape experiments enforce the damping range their guarantees need;
    // single runs and spectra are diagnostics and accept any alpha in (0, 1].
    let strict_default = matches!(sub, Subcommand::Escape);
    let mut c = CliConfig {
        subcommand: Some(sub),
        algo: Some("prox-point".into()),
        mu: Some(0.25),
        alpha: Some(1.0),
        seed: Some(0),
        stop_tol: Some(1e-9),
        strict: Some(strict_default),
        ..CliConfig::default()
    };
    match sub {
        Subcommand::Run => {
            c.max_iters = Some(1000);
            c.record_every = Some(1);
            c.format = Some(OutputFormat::Csv);
        }
        Subcommand::Escape => {
            c.n_trials = Some(100);
            c.max_iters = Some(2000);
            c.sampler = Some("box".into());
            c.box_bounds = Some(vec![(-1.0, 1.0), (-1.0, 1.0)]);
            c.target_radius = Some(1e-6);
            c.format = Some(OutputFormat::Json);
        }
        Subcommand::Spectrum => {
            c.class_tol = Some(DEFAULT_CLASS_TOL);
            c.format = Some(OutputFormat::Json);
        }
        Subcommand::Flowfield => {
            c.box_bounds = Some(vec![(-2.0, 2.0), (-2.0, 2.0)]);
            c.resolution = Some(vec![21, 21]);
            c.format = Some(OutputFormat::Csv);
        }
        Subcommand::Cone => {
            c.rho = Some(2.0);
            c.lambda = Some(6.0);
            c.alpha = Some(0.5);
            c.x0 = Some(vec![0.0, 1.0]);
            c.steps = Some(50);
            c.format = Some(OutputFormat::Json);
        }
        Subcommand::Mba => {
            c.tau = Some(5.0);
            c.max_iters = Some(200);
            c.format = Some(OutputFormat::Csv);
        }
        Subcommand::Verify => {}
    }
    c
}

fn flags_overlay(sub: Subcommand, args: &CommonArgs) -> Result<CliConfig> {
    Ok(CliConfig {
        subcommand: Some(sub),
        problem: args.problem.clone(),
        algo: args.algo.clone(),
        mu: args.mu,
        alpha: args.alpha,
        tau: args.tau,
        x0: args.x0.as_deref().map(parse_floats).transpose()?,
        box_bounds: args.box_bounds.as_deref().map(parse_box).transpose()?,
        sampler: args.sampler.clone(),
        y_max: args.y_max,
        n_trials: args.n_trials,
        max_iters: args.max_iters,
        stop_tol: args.stop_tol,
        record_every: args.record_every,
        seed: args.seed,
        target: args.target.as_deref().map(parse_floats).transpose()?,
        target_radius: args.target_radius,
        tilt: args.tilt.as_deref().map(parse_floats).transpose()?,
        fd_step: args.fd_step,
        class_tol: args.class_tol,
        inf_lower_bound: args.inf_lower_bound,
        resolution: args
            .resolution
            .as_deref()
            .map(|s| {
                s.split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Input(format!("bad resolution {p:?}: {e}")))
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .transpose()?,
        steps: args.steps,
        rho: args.rho,
        lambda: args.lambda,
        only: args.only.clone(),
        out: args.out.clone(),
        format: args.format.as_deref().map(OutputFormat::parse).transpose()?,
        strict: args.strict,
    })
}

fn required<T: Clone>(field: &Option<T>, name: &str) -> Result<T> {
    field
        .clone()
        .ok_or_else(|| Error::Input(format!("missing required setting {name}")))
}

fn problem_oracle(config: &CliConfig) -> Result<ProblemOracle> {
    let id = required(&config.problem, "problem")?;
    let base = Builtin::parse(&id)?.oracle()?;
    match &config.tilt {
        Some(v) => tilt(&base, v),
        None => Ok(base),
    }
}

fn build_map(config: &CliConfig) -> Result<IterationMap> {
    let id = required(&config.problem, "problem")?;
    let builtin = Builtin::parse(&id)?;
    let kind = MapKind::parse(config.algo.as_deref().unwrap_or("prox-point"))?;
    let mu = required(&config.mu, "mu")?;
    if mu <= 0.0 {
        return Err(Error::Parameter("mu must be positive".into()));
    }
    let params = ProxParams::new(mu);
    let alpha = required(&config.alpha, "alpha")?;
    let map = match (builtin, kind) {
        (Builtin::AbsymComposite, MapKind::ProxLinear) => {
            if config.tilt.is_some() {
                return Err(Error::Capability(
                    "tilting the composite problem is not supported".into(),
                ));
            }
            IterationMap::prox_linear(proxsaddle::problems::absym_composite(), params, alpha)?
        }
        (Builtin::Absym, MapKind::ProxGradient) => {
            let (g, r) = absym_split();
            let reg = match &config.tilt {
                Some(v) => tilt(&r, v)?,
                None => r,
            };
            IterationMap::prox_gradient(g, reg, params, alpha)?
        }
        (b, MapKind::ProxPoint) => {
            let oracle = b.oracle()?;
            let oracle = match &config.tilt {
                Some(v) => tilt(&oracle, v)?,
                None => oracle,
            };
            IterationMap::prox_point(oracle, params, alpha)?
        }
        (b, k) => {
            return Err(Error::Capability(format!(
                "{} is not available for problem {}",
                k.id(),
                b.id()
            )))
        }
    };
    if config.strict.unwrap_or(false) {
        let map = map.strict()?;
        if map.damping_warning() {
            eprintln!(
                "{}",
                serde_json::json!({
                    "warning": "damping",
                    "message": "alpha is outside the prox-linear local-escape bound"
                })
            );
        }
        Ok(map)
    } else {
        Ok(map)
    }
}

fn emit(out: &Option<String>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_run(config: &CliConfig) -> Result<i32> {
    let map = build_map(config)?;
    let x0 = required(&config.x0, "x0")?;
    let mut run_config = RunConfig::new(map, x0);
    run_config.max_iters = required(&config.max_iters, "max-iters")?;
    run_config.stop_tol = required(&config.stop_tol, "stop-tol")?;
    run_config.record_every = required(&config.record_every, "record-every")?;
    run_config.seed = config.seed.unwrap_or(0);
    match run(&run_config) {
        Ok(record) => {
            emit(&config.out, &record.to_csv())?;
            Ok(0)
        }
        Err(failure) => {
            // Write what we have, then report the failure.
            let _ = emit(&config.out, &failure.partial.to_csv());
            Err(failure.into())
        }
    }
}

fn cmd_escape(config: &CliConfig) -> Result<i32> {
    let map = build_map(config)?;
    let sampler = match config.sampler.as_deref().unwrap_or("box") {
        "box" => {
            let bounds = required(&config.box_bounds, "box")?;
            let (lo, hi) = bounds.iter().copied().unzip();
            InitSampler::Box { lo, hi }
        }
        "cone" => {
            let lambda = config
                .lambda
                .or_else(|| config.mu.map(|mu| 1.0 / mu))
                .ok_or_else(|| Error::Input("cone sampler needs lambda or mu".into()))?;
            InitSampler::Cone { lambda, y_max: config.y_max.unwrap_or(1.0) }
        }
        other => return Err(Error::Input(format!("unknown sampler {other:?}"))),
    };
    let mut escape = EscapeConfig::new(
        map,
        sampler,
        required(&config.n_trials, "n-trials")?,
        config.seed.unwrap_or(0),
    );
    if let Some(t) = &config.target {
        escape.target = t.clone();
    }
    if let Some(r) = config.target_radius {
        escape.target_radius = r;
    }
    escape.max_iters = required(&config.max_iters, "max-iters")?;
    escape.stop_tol = required(&config.stop_tol, "stop-tol")?;
    let report = escape_experiment(&escape)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    emit(&config.out, &format!("{json}\n"))?;
    Ok(0)
}

fn cmd_spectrum(config: &CliConfig) -> Result<i32> {
    let map = build_map(config)?;
    let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; map.dim()]);
    let fd_step = config.fd_step.unwrap_or_else(|| default_fd_step(&x0));
    let class_tol = config.class_tol.unwrap_or(DEFAULT_CLASS_TOL);
    let report = classify_fixed_point(&map, &x0, fd_step, class_tol)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    emit(&config.out, &format!("{json}\n"))?;
    Ok(0)
}

fn cmd_flowfield(config: &CliConfig) -> Result<i32> {
    let oracle = problem_oracle(config)?;
    let params = ProxParams::new(required(&config.mu, "mu")?);
    let bounds = required(&config.box_bounds, "box")?;
    let resolution = required(&config.resolution, "resolution")?;
    let (lo, hi): (Vec<f64>, Vec<f64>) = bounds.iter().copied().unzip();
    let nodes = flowfield(&oracle, &params, &lo, &hi, &resolution)?;
    let d = oracle.dim();
    let mut csv = String::new();
    for i in 0..d {
        csv.push_str(&format!("x_{i},"));
    }
    let dirs: Vec<String> = (0..d).map(|i| format!("dir_{i}")).collect();
    csv.push_str(&dirs.join(","));
    csv.push('\n');
    for node in &nodes {
        let mut fields: Vec<String> = node.point.iter().map(|v| fmt_full(*v)).collect();
        fields.extend(node.direction.iter().map(|v| fmt_full(*v)));
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    emit(&config.out, &csv)?;
    Ok(0)
}

fn cmd_cone(config: &CliConfig) -> Result<i32> {
    let rho = required(&config.rho, "rho")?;
    let lambda = required(&config.lambda, "lambda")?;
    let alpha = required(&config.alpha, "alpha")?;
    let x0 = required(&config.x0, "x0")?;
    let steps = required(&config.steps, "steps")?;
    let iterate = cone_dynamics_check(rho, lambda, alpha, &x0, steps)?;
    let json = serde_json::json!({
        "schema_version": "1",
        "rho": rho,
        "lambda": lambda,
        "alpha": alpha,
        "x0": x0,
        "steps": steps,
        "closed_form_iterate": iterate,
        "verified": true,
    });
    emit(&config.out, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
    Ok(0)
}

fn cmd_mba(config: &CliConfig) -> Result<i32> {
    let oracle = problem_oracle(config)?;
    let model = ModelOracle::exact(&oracle);
    let params = validate_params(
        &oracle,
        &model,
        required(&config.tau, "tau")?,
        required(&config.alpha, "alpha")?,
    )?;
    let x0 = required(&config.x0, "x0")?;
    let t_max = required(&config.max_iters, "max-iters")?;
    let outcome = mba_run(&oracle, &model, &params, &x0, t_max)?;
    let rate = match config.inf_lower_bound {
        Some(bound) => Some(rate_bound_check(&outcome.log, &params, bound)?),
        None => None,
    };
    emit(&config.out, &outcome.log.to_csv())?;
    if config.out.is_some() {
        let summary = serde_json::json!({
            "schema_version": "1",
            "iterations": outcome.record.iters,
            "rate_constant": params.rate_constant,
            "final_env_value": outcome.log.final_env_value,
            "final_env_grad_norm": outcome.log.final_env_grad_norm,
            "rate_bound_worst_slack": rate.map(|r| r.worst_slack),
        });
        println!("{summary}");
    }
    Ok(0)
}

fn cmd_verify(config: &CliConfig) -> Result<i32> {
    let opts = VerifyOptions { fd_step: config.fd_step };
    let results = run_checks(config.only.as_deref(), &opts);
    if results.is_empty() {
        return Err(Error::Input(format!(
            "no check matches filter {:?}",
            config.only.as_deref().unwrap_or("")
        )));
    }
    let mut failed = Vec::new();
    for r in &results {
        println!(
            "{} {} (slack {:+.3e}, {} ms): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.slack,
            r.elapsed_ms,
            r.detail
        );
        if !r.passed {
            failed.push(r.name.clone());
        }
    }
    if failed.is_empty() {
        println!("all {} checks passed", results.len());
        Ok(0)
    } else {
        eprintln!(
            "{}",
            serde_json::json!({ "error": "verify", "message": format!("failed checks: {}", failed.join(", ")) })
        );
        Ok(1)
    }
}
