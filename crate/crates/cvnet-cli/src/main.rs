//! Command-line driver: run circuit files, evaluate Bell values, sweep the
//! squeezing plane to CSV, certify the classical-hybrid bound, and validate
//! the analytics against the Monte Carlo oracle.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cvnet::bell::{
    bell_value, BellConfig, BellMethod, Outcome, Setting, DEFAULT_GAIN, DEFAULT_THETAS,
    DEFAULT_VARTHETAS,
};
use cvnet::chain::build_bell_network;
use cvnet::dsl::{parse_circuit, run_circuit, CircuitRun};
use cvnet::elements::{GainParam, SqueezeParam};
use cvnet::hybrid::{max_bell_hybrid, ClassicalSide, HybridScenario};
use cvnet::mc::{sample_bell_value, sample_moments, validate_wick, MomentTarget, SampleConfig};
use cvnet::quad::{commutator_norm, SeedRegistry};
use cvnet::separability::{correlation_block, duan_margin};
use cvnet::sweep::{emit_sweep_csv, format_significant, RangeSpec, SweepGrid, SweepSpec};

/// Exit code for domain errors (usage errors exit with 2 via clap).
const DOMAIN_ERROR: u8 = 1;

/// Significant digits for numeric output.
const DIGITS: usize = 10;

#[derive(Parser)]
#[command(name = "cvnet", version, about = "Continuous-variable chain-network Bell toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a circuit file and report on its modes.
    Run(RunArgs),
    /// Evaluate the Bell value of the built-in two-chain network.
    Bell(BellArgs),
    /// Sweep the (r1, r2) plane at fixed gain and write a CSV table.
    Sweep(SweepArgs),
    /// Certify the classical-hybrid maximum of the Bell combination.
    Bound(BoundArgs),
    /// Validate the moment engine against the Monte Carlo oracle.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Circuit description file.
    file: PathBuf,
    /// What to report about the executed circuit.
    #[arg(long, value_enum)]
    report: ReportKind,
    /// Mode pair for covariance/duan reports, e.g. `a1,a2p`
    /// (default: the last two defined modes).
    #[arg(long)]
    pair: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    /// Second moments and commutator norm of every mode.
    Moments,
    /// Two-mode correlation block of the selected pair.
    Covariance,
    /// Separability test of the selected pair.
    Duan,
}

#[derive(Args)]
struct BellArgs {
    /// Squeezing of the source pairs feeding the end nodes.
    #[arg(long)]
    r1: f64,
    /// Squeezing of the source pairs consumed by the swap.
    #[arg(long, default_value_t = 2.0)]
    r2: f64,
    #[arg(long, default_value_t = DEFAULT_GAIN)]
    g3: f64,
    #[arg(long, value_enum, default_value_t = Method::Analytic)]
    method: Method,
    /// First-node analyzer angle for setting 0 (radians).
    #[arg(long, default_value_t = DEFAULT_THETAS[0])]
    theta0: f64,
    /// First-node analyzer angle for setting 1 (radians).
    #[arg(long, default_value_t = DEFAULT_THETAS[1])]
    theta1: f64,
    /// Far-node analyzer angle for setting 0 (radians).
    #[arg(long, default_value_t = DEFAULT_VARTHETAS[0])]
    phi0: f64,
    /// Far-node analyzer angle for setting 1 (radians).
    #[arg(long, default_value_t = DEFAULT_VARTHETAS[1])]
    phi1: f64,
    /// Sample count for --method mc.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Seed for --method mc.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Closed form at the standard analyzer angles.
    Analytic,
    /// Full moment pipeline; honors custom angles.
    Engine,
    /// Monte Carlo estimate from sampled photon-number products.
    Mc,
}

#[derive(Args)]
struct SweepArgs {
    /// r1 range as start:stop:count.
    #[arg(long)]
    r1: RangeSpec,
    /// r2 range as start:stop:count.
    #[arg(long)]
    r2: RangeSpec,
    #[arg(long, default_value_t = DEFAULT_GAIN)]
    g3: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: rayon's choice).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BoundArgs {
    /// Which source distributes the classical randomness.
    #[arg(long, value_enum)]
    scenario: Scenario,
    /// Middle-node outcome alphabet size.
    #[arg(long, default_value_t = 2)]
    b_alphabet: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    /// Classical randomness between the first and middle nodes.
    Ab,
    /// Classical randomness between the middle and far nodes.
    Bc,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    r1: f64,
    #[arg(long, default_value_t = 2.0)]
    r2: f64,
    #[arg(long, default_value_t = DEFAULT_GAIN)]
    g3: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(DOMAIN_ERROR)
        }
    }
}

fn dispatch(command: Command) -> cvnet::Result<ExitCode> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Bell(args) => cmd_bell(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

fn fmt(x: f64) -> String {
    format_significant(x, DIGITS)
}

type NamedMode<'a> = (&'a str, &'a cvnet::quad::OpticalMode);

fn select_pair<'a>(
    run: &'a CircuitRun,
    pair: &'a Option<String>,
) -> cvnet::Result<(NamedMode<'a>, NamedMode<'a>)> {
    match pair {
        Some(spec) => {
            let names: Vec<&str> = spec.split(',').collect();
            if names.len() != 2 {
                return Err(cvnet::Error::Domain(format!(
                    "--pair expects two comma-separated mode names, got `{spec}`"
                )));
            }
            let mut resolved = Vec::new();
            for name in names {
                let mode = run.mode(name).ok_or_else(|| {
                    cvnet::Error::Domain(format!("mode `{name}` is not defined by the circuit"))
                })?;
                resolved.push((name, mode));
            }
            Ok((resolved[0], resolved[1]))
        }
        None => {
            if run.modes.len() < 2 {
                return Err(cvnet::Error::Domain(
                    "the circuit defines fewer than two modes; nothing to pair".into(),
                ));
            }
            let (name_b, mode_b) = &run.modes[run.modes.len() - 1];
            let (name_a, mode_a) = &run.modes[run.modes.len() - 2];
            Ok(((name_a.as_str(), mode_a), (name_b.as_str(), mode_b)))
        }
    }
}

fn cmd_run(args: RunArgs) -> cvnet::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.file)?;
    let ast = parse_circuit(&text)?;
    let run = run_circuit(&ast);
    match args.report {
        ReportKind::Moments => {
            for (name, mode) in &run.modes {
                println!(
                    "{name} xx={} pp={} comm={}",
                    fmt(mode.var_x()),
                    fmt(mode.var_p()),
                    fmt(commutator_norm(mode))
                );
            }
        }
        ReportKind::Covariance | ReportKind::Duan => {
            let ((name_a, mode_a), (name_b, mode_b)) = select_pair(&run, &args.pair)?;
            let block = correlation_block(mode_a, mode_b)?;
            println!("pair {name_a},{name_b}");
            println!(
                "n1={} n2={} m1={} m2={} c1={} c2={}",
                fmt(block.n1),
                fmt(block.n2),
                fmt(block.m1),
                fmt(block.m2),
                fmt(block.c1),
                fmt(block.c2)
            );
            if matches!(args.report, ReportKind::Duan) {
                let report = duan_margin(&block)?;
                println!(
                    "a_sq={} u_var={} v_var={} bound={} margin={} separable={}",
                    fmt(report.a_sq),
                    fmt(report.u_var),
                    fmt(report.v_var),
                    fmt(report.bound),
                    fmt(report.margin),
                    report.separable
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bell_config(args: &BellArgs) -> cvnet::Result<BellConfig> {
    let r1 = SqueezeParam::new(args.r1)
        .map_err(|_| cvnet::Error::Domain(format!("r1 must be >= 0, got {}", args.r1)))?;
    let r2 = SqueezeParam::new(args.r2)
        .map_err(|_| cvnet::Error::Domain(format!("r2 must be >= 0, got {}", args.r2)))?;
    let g3 = GainParam::new(args.g3)
        .map_err(|_| cvnet::Error::Domain(format!("g3 must be >= 1, got {}", args.g3)))?;
    Ok(BellConfig::new(r1, r2, g3)
        .with_angles([args.theta0, args.theta1], [args.phi0, args.phi1]))
}

fn cmd_bell(args: BellArgs) -> cvnet::Result<ExitCode> {
    let config = bell_config(&args)?;
    let value = match args.method {
        Method::Analytic => bell_value(&config, BellMethod::Analytic)?,
        Method::Engine => bell_value(&config, BellMethod::Engine)?,
        Method::Mc => {
            if config.r1.value() == 0.0 {
                return Err(cvnet::Error::NoDetection);
            }
            let mut registry = SeedRegistry::new();
            let net = build_bell_network(&mut registry, config)?;
            let cfg = SampleConfig {
                n_samples: args.samples,
                rng_seed: args.seed,
            };
            sample_bell_value(&net, &cfg)?.value
        }
    };
    println!("{}", fmt(value));
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> cvnet::Result<ExitCode> {
    let grid = SweepGrid::new(args.r1, args.r2, args.g3)?;
    let spec = SweepSpec {
        grid,
        out: args.out.clone(),
    };
    let rows = match args.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| cvnet::Error::Domain(format!("cannot build thread pool: {e}")))?;
            pool.install(|| emit_sweep_csv(&spec))?
        }
        None => emit_sweep_csv(&spec)?,
    };
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound(args: BoundArgs) -> cvnet::Result<ExitCode> {
    let side = match args.scenario {
        Scenario::Ab => ClassicalSide::AliceBob,
        Scenario::Bc => ClassicalSide::BobCharlie,
    };
    let scenario = HybridScenario::new(side, args.b_alphabet)?;
    println!("{}", fmt(max_bell_hybrid(&scenario)));
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: OracleArgs) -> cvnet::Result<ExitCode> {
    let r1 = SqueezeParam::new(args.r1)?;
    let r2 = SqueezeParam::new(args.r2)?;
    let g3 = GainParam::new(args.g3)?;
    let config = BellConfig::new(r1, r2, g3);
    let cfg = SampleConfig {
        n_samples: args.samples,
        rng_seed: args.seed,
    };
    let mut registry = SeedRegistry::new();
    let net = build_bell_network(&mut registry, config)?;
    let mut all_ok = true;
    let mut quantities = 0usize;

    // second moments of the measured chain beams
    let a = net.a_chain();
    let b = net.b_chain();
    let targets = [
        ("<x_a1^2>", MomentTarget::xx(&a.a1, &a.a1), a.a1.moment_xx(&a.a1)?),
        ("<p_a1^2>", MomentTarget::pp(&a.a1, &a.a1), a.a1.moment_pp(&a.a1)?),
        (
            "<x_a4'^2>",
            MomentTarget::xx(&a.a4_out, &a.a4_out),
            a.a4_out.moment_xx(&a.a4_out)?,
        ),
        (
            "<x_a1 x_a4'>",
            MomentTarget::xx(&a.a1, &a.a4_out),
            a.a1.moment_xx(&a.a4_out)?,
        ),
        (
            "<p_a1 p_a4'>",
            MomentTarget::pp(&a.a1, &a.a4_out),
            a.a1.moment_pp(&a.a4_out)?,
        ),
        (
            "<x_b1 x_b4'>",
            MomentTarget::xx(&b.a1, &b.a4_out),
            b.a1.moment_xx(&b.a4_out)?,
        ),
        ("<x_a1 x_b1>", MomentTarget::xx(&a.a1, &b.a1), 0.0),
        ("<x_a1 p_a1>", MomentTarget::xp(&a.a1, &a.a1), 0.0),
    ];
    let estimates = sample_moments(
        &registry,
        &targets.iter().map(|(_, t, _)| *t).collect::<Vec<_>>(),
        &cfg,
    )?;
    for ((name, _, analytic), est) in targets.iter().zip(estimates) {
        let sigma = (est.mean - analytic).abs() / est.std_error;
        let ok = sigma <= 5.0;
        all_ok &= ok;
        quantities += 1;
        println!(
            "{name} analytic={} mc={} se={} |z|={} {}",
            fmt(*analytic),
            fmt(est.mean),
            fmt(est.std_error),
            fmt(sigma),
            if ok { "ok" } else { "FAIL" }
        );
    }

    // coincidence rates at all four setting pairs
    for x in Setting::ALL {
        for z in Setting::ALL {
            let checks = validate_wick(&net, x, z, &cfg)?;
            for check in checks {
                let ok = check.sigma_distance <= 5.0;
                all_ok &= ok;
                quantities += 1;
                println!(
                    "R[{}{}|x={} z={}] analytic={} mc={} se={} |z|={} {}",
                    outcome_tag(check.outcome_a),
                    outcome_tag(check.outcome_c),
                    x.index(),
                    z.index(),
                    fmt(check.analytic),
                    fmt(check.estimate.mean),
                    fmt(check.estimate.std_error),
                    fmt(check.sigma_distance),
                    if ok { "ok" } else { "FAIL" }
                );
            }
        }
    }

    // the assembled Bell value
    let est = sample_bell_value(&net, &cfg)?;
    let analytic = bell_value(&config, BellMethod::Analytic)?;
    let sigma = (est.value - analytic).abs() / est.std_error;
    let ok = sigma <= 5.0;
    all_ok &= ok;
    quantities += 1;
    println!(
        "bell analytic={} mc={} se={} |z|={} {}",
        fmt(analytic),
        fmt(est.value),
        fmt(est.std_error),
        fmt(sigma),
        if ok { "ok" } else { "FAIL" }
    );

    if all_ok {
        println!(
            "oracle: all {quantities} quantities within 5 sigma (n={}, seed={})",
            args.samples, args.seed
        );
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("oracle: at least one quantity beyond 5 sigma");
        Ok(ExitCode::from(DOMAIN_ERROR))
    }
}

fn outcome_tag(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Plus => "+",
        Outcome::Minus => "-",
    }
}
