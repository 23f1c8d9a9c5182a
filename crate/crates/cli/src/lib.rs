//! Batch front end for the couette-core library. Subcommands:
//!
//!   thresholds  print C_P, C1, C2, C_* and the Reynolds bound
//!   exact       sample a closed-form state onto a grid, write a snapshot
//!   residual    evaluate the steady residual of a stored snapshot
//!   solve       one steady solve from an optionally perturbed Couette start
//!   sweep       randomized below-threshold uniqueness sweep
//!   poincare    weighted radial Poincare inequality spot checks
//!   energy      axial-derivative energy ladder of a stored snapshot
//!
//! Every run is configured by flags, optionally layered over a strict JSON
//! config file (`--config`); flags win. Commands that write files take
//! `--output` or the COUETTE_OUTPUT_DIR environment variable and pair their
//! outputs with a `config.json` echo of the resolved configuration.
//!
//! Exit codes: 0 success, 1 validation error (also: a failed inequality
//! check), 2 solver non-convergence, 3 I/O error.

use clap::{Args, Parser, Subcommand};
use couette_core::annulus::{Annulus, FlowConfig, Thresholds};
use couette_core::exact::{sample_on_grid, GeneralizedTC};
use couette_core::{lab, operators, snapshot, solver};
use couette_core::{Error as CoreError, Grid, PerturbSpec, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;
use std::fs::File;
use std::path::{Path, PathBuf};

pub const OUTPUT_DIR_ENV: &str = "COUETTE_OUTPUT_DIR";

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; those exit clean
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.sequential {
        couette_core::exec::set_sequential(true);
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "couette",
    version,
    about = "Steady generalized Couette flows in a periodic annulus: \
             thresholds, exact states, residuals, Newton solves, rigidity sweeps"
)]
struct Cli {
    /// JSON config file; unknown keys are rejected, flags override
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (fallback: $COUETTE_OUTPUT_DIR)
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Force single-threaded execution
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the smallness thresholds for an annulus and viscosity
    Thresholds(ThresholdsArgs),
    /// Sample the closed-form generalized Couette state, write a snapshot
    Exact(ExactArgs),
    /// Evaluate the steady residual of a stored snapshot
    Residual(ResidualArgs),
    /// Solve the steady axisymmetric system from a perturbed Couette start
    Solve(SolveArgs),
    /// Randomized below-threshold uniqueness sweep; exits 2 unless every
    /// run converges
    Sweep(SweepArgs),
    /// Weighted radial Poincare checks on random wall-vanishing profiles;
    /// exits 1 if any ratio exceeds the bound
    Poincare(PoincareArgs),
    /// Axial-derivative energy ladder Y(L) of a stored snapshot
    Energy(EnergyArgs),
}

/// Geometry, flow, and grid flags shared by the state-producing commands.
#[derive(Args, Clone, Default)]
struct PhysArgs {
    /// Inner radius R1
    #[arg(long)]
    r1: Option<f64>,
    /// Outer radius R2
    #[arg(long)]
    r2: Option<f64>,
    /// Kinematic viscosity
    #[arg(long)]
    nu: Option<f64>,
    /// Inner wall angular velocity
    #[arg(long)]
    omega1: Option<f64>,
    /// Outer wall angular velocity
    #[arg(long)]
    omega2: Option<f64>,
    /// Imposed axial pressure gradient
    #[arg(long)]
    a: Option<f64>,
    /// Radial cell count
    #[arg(long)]
    nr: Option<usize>,
    /// Axial cell count
    #[arg(long)]
    nz: Option<usize>,
    /// Axial period (default 2(R2-R1))
    #[arg(long)]
    lz: Option<f64>,
}

#[derive(Args)]
struct ThresholdsArgs {
    /// Kinematic viscosity
    #[arg(long)]
    nu: Option<f64>,
    /// Inner radius R1
    #[arg(long)]
    r1: Option<f64>,
    /// Outer radius R2
    #[arg(long)]
    r2: Option<f64>,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    phys: PhysArgs,
    /// Azimuthal sample count for a theta-resolved snapshot
    #[arg(long)]
    ntheta: Option<usize>,
}

#[derive(Args)]
struct ResidualArgs {
    /// Snapshot directory to evaluate
    #[arg(long, required = true)]
    input: PathBuf,
    /// Kinematic viscosity
    #[arg(long)]
    nu: Option<f64>,
    /// Override the snapshot's stored axial gradient
    #[arg(long)]
    a: Option<f64>,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    phys: PhysArgs,
    /// Perturbation sup-norm added to the initial state (0 = none)
    #[arg(long)]
    amplitude: Option<f64>,
    /// Perturbation seed
    #[arg(long)]
    seed: Option<u64>,
    /// Perturbation harmonic count
    #[arg(long)]
    modes: Option<usize>,
    /// Residual L-infinity target
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
    /// Drop advection: linear Stokes mode
    #[arg(long)]
    stokes: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    phys: PhysArgs,
    /// Wall angular-velocity pairs, e.g. 0.3:0.1,0.2:0.05
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    omegas: Option<Vec<(f64, f64)>>,
    /// Perturbation amplitudes
    #[arg(long, value_delimiter = ',')]
    amplitudes: Option<Vec<f64>>,
    /// Perturbation seeds
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Residual L-infinity target
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
    /// Drop advection: linear Stokes mode
    #[arg(long)]
    stokes: bool,
}

#[derive(Args)]
struct PoincareArgs {
    /// Inner radius R1
    #[arg(long)]
    r1: Option<f64>,
    /// Outer radius R2
    #[arg(long)]
    r2: Option<f64>,
    /// Radial cell count
    #[arg(long)]
    nr: Option<usize>,
    /// Axial cell count
    #[arg(long)]
    nz: Option<usize>,
    /// Axial period (default 4 here, so the default cutoff is valid)
    #[arg(long)]
    lz: Option<f64>,
    /// Cutoff L (default half the period)
    #[arg(long)]
    l: Option<f64>,
    /// Number of random profiles
    #[arg(long)]
    samples: Option<usize>,
    /// Profile generator seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EnergyArgs {
    /// Snapshot directory to evaluate
    #[arg(long, required = true)]
    input: PathBuf,
    /// Kinematic viscosity
    #[arg(long)]
    nu: Option<f64>,
    /// Single cutoff L instead of the full ladder
    #[arg(long)]
    l: Option<f64>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected INNER:OUTER, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

/// Strict-schema config file; every key optional, flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    r_inner: Option<f64>,
    r_outer: Option<f64>,
    viscosity: Option<f64>,
    omega_inner: Option<f64>,
    omega_outer: Option<f64>,
    axial_gradient: Option<f64>,
    n_r: Option<usize>,
    n_z: Option<usize>,
    n_theta: Option<usize>,
    z_period: Option<f64>,
    amplitude: Option<f64>,
    seed: Option<u64>,
    modes: Option<usize>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    stokes: Option<bool>,
    omega_pairs: Option<Vec<(f64, f64)>>,
    amplitudes: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
    l_cut: Option<f64>,
    samples: Option<usize>,
    output: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    NonConvergence(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::NonConvergence(_) => 2,
            Failure::Io(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::NonConvergence(m) | Failure::Io(m) => m,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::SingularJacobian => Failure::NonConvergence(e.to_string()),
            CoreError::Io(_)
            | CoreError::Csv(_)
            | CoreError::Json(_)
            | CoreError::SnapshotMissing(_)
            | CoreError::SnapshotFormat(_) => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

/// Resolved physical + grid parameters after flag/config/default layering.
struct Resolved {
    annulus: Annulus,
    nu: f64,
    omega_inner: f64,
    omega_outer: f64,
    axial_gradient: f64,
    n_r: usize,
    n_z: usize,
    z_period: f64,
}

fn resolve_phys(phys: &PhysArgs, cfg: &FileConfig) -> CliResult<Resolved> {
    let r1 = phys.r1.or(cfg.r_inner).unwrap_or(1.0);
    let r2 = phys.r2.or(cfg.r_outer).unwrap_or(2.0);
    let annulus = Annulus::new(r1, r2)?;
    let z_period = phys
        .lz
        .or(cfg.z_period)
        .unwrap_or_else(|| Grid::default_z_period(&annulus));
    Ok(Resolved {
        annulus,
        nu: phys.nu.or(cfg.viscosity).unwrap_or(1.0),
        omega_inner: phys.omega1.or(cfg.omega_inner).unwrap_or(0.3),
        omega_outer: phys.omega2.or(cfg.omega_outer).unwrap_or(0.1),
        axial_gradient: phys.a.or(cfg.axial_gradient).unwrap_or(0.0),
        n_r: phys.nr.or(cfg.n_r).unwrap_or(64),
        n_z: phys.nz.or(cfg.n_z).unwrap_or(64),
        z_period,
    })
}

fn output_dir(cli: &Cli, cfg: &FileConfig) -> CliResult<PathBuf> {
    cli.output
        .clone()
        .or_else(|| cfg.output.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            Failure::Validation(format!(
                "no output directory: pass --output or set {OUTPUT_DIR_ENV}"
            ))
        })
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn echo_phys(command: &str, r: &Resolved) -> serde_json::Value {
    json!({
        "command": command,
        "r_inner": r.annulus.r_inner,
        "r_outer": r.annulus.r_outer,
        "viscosity": r.nu,
        "omega_inner": r.omega_inner,
        "omega_outer": r.omega_outer,
        "axial_gradient": r.axial_gradient,
        "n_r": r.n_r,
        "n_z": r.n_z,
        "z_period": r.z_period,
    })
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.cmd {
        Cmd::Thresholds(args) => cmd_thresholds(args, &cfg),
        Cmd::Exact(args) => cmd_exact(cli, args, &cfg),
        Cmd::Residual(args) => cmd_residual(args, &cfg),
        Cmd::Solve(args) => cmd_solve(cli, args, &cfg),
        Cmd::Sweep(args) => cmd_sweep(cli, args, &cfg),
        Cmd::Poincare(args) => cmd_poincare(args, &cfg),
        Cmd::Energy(args) => cmd_energy(cli, args, &cfg),
    }
}

fn cmd_thresholds(args: &ThresholdsArgs, cfg: &FileConfig) -> CliResult<i32> {
    let r1 = args.r1.or(cfg.r_inner).unwrap_or(1.0);
    let r2 = args.r2.or(cfg.r_outer).unwrap_or(2.0);
    let nu = args.nu.or(cfg.viscosity).unwrap_or(1.0);
    let annulus = Annulus::new(r1, r2)?;
    if !(nu > 0.0) {
        return Err(Failure::Validation(format!("viscosity must be positive, got {nu}")));
    }
    let t = Thresholds::compute(nu, &annulus);
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "r_inner": r1, "r_outer": r2, "viscosity": nu,
                "c_p": t.c_p, "c1": t.c1, "c2": t.c2,
                "c_star": t.c_star, "re_bound": t.re_bound,
            }))?
        );
    } else {
        println!("c_p      = {}", fmt(t.c_p));
        println!("c1       = {}", fmt(t.c1));
        println!("c2       = {}", fmt(t.c2));
        println!("c_star   = {}", fmt(t.c_star));
        println!("re_bound = {}", fmt(t.re_bound));
    }
    Ok(0)
}

fn cmd_exact(cli: &Cli, args: &ExactArgs, cfg: &FileConfig) -> CliResult<i32> {
    let r = resolve_phys(&args.phys, cfg)?;
    let n_theta = args.ntheta.or(cfg.n_theta);
    let grid = Grid::build(r.annulus, r.n_r, r.n_z, r.z_period, n_theta)?;
    let flow = FlowConfig::new(r.nu, r.omega_inner, r.omega_outer)?;
    let gtc = GeneralizedTC::from_boundary(r.annulus, &flow, r.axial_gradient)?;
    let (field, pressure) = sample_on_grid(&gtc, &grid)?;

    let dir = output_dir(cli, cfg)?;
    std::fs::create_dir_all(&dir)?;
    snapshot::write_snapshot(&dir, &field, &pressure)?;
    let mut echo = echo_phys("exact", &r);
    if let Some(nt) = n_theta {
        echo["n_theta"] = json!(nt);
    }
    write_json(&dir.join("config.json"), &echo)?;
    println!("wrote snapshot to {}", dir.display());
    Ok(0)
}

fn cmd_residual(args: &ResidualArgs, cfg: &FileConfig) -> CliResult<i32> {
    let (field, mut pressure) = snapshot::read_snapshot(&args.input)?;
    let nu = args.nu.or(cfg.viscosity).unwrap_or(1.0);
    let a = args.a.unwrap_or(pressure.axial_gradient);
    pressure.axial_gradient = a;
    let report = if field.grid.is_axisymmetric() {
        operators::momentum_residual_axisym(&field, &pressure, a, nu)?
    } else {
        operators::momentum_residual_general(&field, &pressure, nu)?
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let line = |name: &str, n: &couette_core::operators::EquationNorms| {
            println!("{name:<11} linf = {}  l2 = {}", fmt(n.linf), fmt(n.l2));
        };
        line("radial", &report.radial);
        line("azimuthal", &report.azimuthal);
        line("axial", &report.axial);
        line("continuity", &report.continuity);
        println!("h_r = {}  h_z = {}", fmt(report.h_r), fmt(report.h_z));
    }
    Ok(0)
}

fn solve_options(
    tol: Option<f64>,
    max_iter: Option<usize>,
    stokes: bool,
    cfg: &FileConfig,
) -> SolveOptions {
    let defaults = SolveOptions::default();
    SolveOptions {
        max_iterations: max_iter.or(cfg.max_iterations).unwrap_or(defaults.max_iterations),
        tolerance: tol.or(cfg.tolerance).unwrap_or(defaults.tolerance),
        stokes_only: stokes || cfg.stokes.unwrap_or(false),
    }
}

fn cmd_solve(cli: &Cli, args: &SolveArgs, cfg: &FileConfig) -> CliResult<i32> {
    let r = resolve_phys(&args.phys, cfg)?;
    let grid = Grid::build(r.annulus, r.n_r, r.n_z, r.z_period, None)?;
    let flow = FlowConfig::new(r.nu, r.omega_inner, r.omega_outer)?;
    let gtc = GeneralizedTC::from_boundary(r.annulus, &flow, r.axial_gradient)?;
    let (mut field, mut pressure) = sample_on_grid(&gtc, &grid)?;

    let amplitude = args.amplitude.or(cfg.amplitude).unwrap_or(0.0);
    let seed = args.seed.or(cfg.seed).unwrap_or(1);
    let modes = args.modes.or(cfg.modes).unwrap_or(3);
    if amplitude > 0.0 {
        solver::perturb(&mut field, &PerturbSpec { amplitude, seed, modes })?;
    } else if amplitude < 0.0 {
        return Err(Failure::Validation(format!(
            "perturbation amplitude must be nonnegative, got {amplitude}"
        )));
    }
    let options = solve_options(args.tol, args.max_iter, args.stokes, cfg);

    let dir = output_dir(cli, cfg)?;
    std::fs::create_dir_all(&dir)?;

    let outcome = solver::solve_steady(
        &mut field,
        &mut pressure,
        r.axial_gradient,
        r.nu,
        &options,
    )?;
    let fit = lab::fit_tc_manifold(&field, &pressure, r.nu, None)?;

    snapshot::write_snapshot(&dir, &field, &pressure)?;
    solver::write_history_csv(&outcome.history, File::create(dir.join("history.csv"))?)?;
    let mut echo = echo_phys("solve", &r);
    echo["amplitude"] = json!(amplitude);
    echo["seed"] = json!(seed);
    echo["modes"] = json!(modes);
    echo["tolerance"] = json!(options.tolerance);
    echo["max_iterations"] = json!(options.max_iterations);
    echo["stokes"] = json!(options.stokes_only);
    write_json(&dir.join("config.json"), &echo)?;
    write_json(
        &dir.join("outcome.json"),
        &json!({
            "converged": outcome.converged,
            "iterations": outcome.iterations,
            "final_residual": outcome.final_residual,
            "final_divergence": outcome.final_divergence,
            "fit": fit,
        }),
    )?;

    println!(
        "{} in {} iterations: residual {}, manifold distance {}",
        if outcome.converged { "converged" } else { "stalled" },
        outcome.iterations,
        fmt(outcome.final_residual),
        fmt(fit.distance_linf),
    );
    Ok(if outcome.converged { 0 } else { 2 })
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs, cfg: &FileConfig) -> CliResult<i32> {
    let r = resolve_phys(&args.phys, cfg)?;
    let omega_pairs = args
        .omegas
        .clone()
        .or_else(|| cfg.omega_pairs.clone())
        .unwrap_or_else(|| vec![(r.omega_inner, r.omega_outer)]);
    let amplitudes = args
        .amplitudes
        .clone()
        .or_else(|| cfg.amplitudes.clone())
        .unwrap_or_else(|| vec![0.1]);
    let seeds = args
        .seeds
        .clone()
        .or_else(|| cfg.seeds.clone())
        .unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
    let options = solve_options(args.tol, args.max_iter, args.stokes, cfg);

    let sweep = lab::SweepConfig {
        annulus: r.annulus,
        viscosity: r.nu,
        omega_pairs,
        amplitudes,
        seeds,
        n_r: r.n_r,
        n_z: r.n_z,
        z_period: r.z_period,
        axial_gradient: r.axial_gradient,
        options,
    };
    let dir = output_dir(cli, cfg)?;
    std::fs::create_dir_all(&dir)?;

    let summary = lab::sweep_reynolds(&sweep)?;
    lab::write_records_csv(&summary.records, File::create(dir.join("records.csv"))?)?;
    lab::write_ladder_csv(&summary.records, File::create(dir.join("ladder.csv"))?)?;
    let echo = serde_json::to_value(&sweep)?;
    write_json(&dir.join("config.json"), &json!({"command": "sweep", "config": echo}))?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "config": echo,
            "runs": summary.records.len(),
            "converged": summary.n_converged(),
            "on_manifold": summary.n_on_manifold(),
            "within_hypothesis": summary.n_within_hypothesis(),
            "all_converged": summary.all_converged,
            "all_on_manifold": summary.all_on_manifold,
            "ladder": summary.ladder,
        }),
    )?;

    println!(
        "runs={} converged={} on_manifold={} within_hypothesis={}",
        summary.records.len(),
        summary.n_converged(),
        summary.n_on_manifold(),
        summary.n_within_hypothesis(),
    );
    Ok(if summary.all_converged { 0 } else { 2 })
}

fn cmd_poincare(args: &PoincareArgs, cfg: &FileConfig) -> CliResult<i32> {
    let r1 = args.r1.or(cfg.r_inner).unwrap_or(1.0);
    let r2 = args.r2.or(cfg.r_outer).unwrap_or(2.0);
    let annulus = Annulus::new(r1, r2)?;
    let n_r = args.nr.or(cfg.n_r).unwrap_or(64);
    let n_z = args.nz.or(cfg.n_z).unwrap_or(64);
    let z_period = args.lz.or(cfg.z_period).unwrap_or(4.0);
    let l_cut = args.l.or(cfg.l_cut).unwrap_or(0.5 * z_period);
    let samples = args.samples.or(cfg.samples).unwrap_or(50);
    let seed = args.seed.or(cfg.seed).unwrap_or(1);

    let grid = Grid::build(annulus, n_r, n_z, z_period, None)?;
    let gap = annulus.gap();
    let faces = grid.r_faces();
    let mut violations = 0usize;

    let fundamental: Vec<f64> = faces
        .iter()
        .map(|&r| (std::f64::consts::PI * (r - r1) / gap).sin())
        .collect();
    let rep = operators::poincare_check(&fundamental, None, &grid, l_cut)?;
    let show = |name: &str, rep: &operators::PoincareReport, violations: &mut usize| {
        let status = if rep.within_bound() {
            "ok"
        } else {
            *violations += 1;
            "VIOLATED"
        };
        match rep.ratio() {
            Some(q) => println!(
                "{name}: ratio {} bound {} (margin {}) {status}",
                fmt(q),
                fmt(rep.bound),
                fmt(rep.bound_with_margin)
            ),
            None => println!("{name}: degenerate (zero profile)"),
        }
    };
    show("fundamental", &rep, &mut violations);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..samples {
        // wall-vanishing bump times a random low-order radial mixture,
        // modulated by a random axial factor kept away from zero mean
        let coef: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let profile: Vec<f64> = faces
            .iter()
            .map(|&r| {
                let s01 = (r - r1) / gap;
                let mix: f64 = coef
                    .iter()
                    .enumerate()
                    .map(|(m, c)| c * ((m + 1) as f64 * std::f64::consts::PI * s01).sin())
                    .sum();
                (r - r1) * (r2 - r) * (1.0 + 0.5 * mix)
            })
            .collect();
        let base = rng.random_range(0.5..1.5);
        let (c1, s1) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
        let axial: Vec<f64> = (0..n_z)
            .map(|j| {
                let z = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_z as f64;
                base + c1 * z.cos() + s1 * z.sin()
            })
            .collect();
        let rep = operators::poincare_check(&profile, Some(&axial), &grid, l_cut)?;
        show(&format!("random {s}"), &rep, &mut violations);
    }

    if violations == 0 {
        println!("all {} profiles within bound", samples + 1);
        Ok(0)
    } else {
        eprintln!("{violations} profile(s) violated the bound");
        Ok(1)
    }
}

fn cmd_energy(cli: &Cli, args: &EnergyArgs, cfg: &FileConfig) -> CliResult<i32> {
    let (field, _) = snapshot::read_snapshot(&args.input)?;
    let nu = args.nu.or(cfg.viscosity).unwrap_or(1.0);
    let ladder = match args.l.or(cfg.l_cut) {
        Some(l) => vec![l],
        None => {
            let l = lab::cutoff_ladder(field.grid.z_period);
            if l.is_empty() {
                return Err(Failure::Validation(format!(
                    "axial period {} leaves no valid cutoff (need L in (1, period/2])",
                    field.grid.z_period
                )));
            }
            l
        }
    };

    let mut rows = Vec::with_capacity(ladder.len());
    for &l in &ladder {
        let rep = lab::y_functional(&field, nu, l)?;
        match &rep.azimuthal {
            Some(az) => println!(
                "L = {}  Y = {}  Y_strip = {}  Y_theta = {}",
                fmt(l),
                fmt(rep.y),
                fmt(rep.y_strip),
                fmt(az.y)
            ),
            None => println!("L = {}  Y = {}  Y_strip = {}", fmt(l), fmt(rep.y), fmt(rep.y_strip)),
        }
        rows.push(rep);
    }

    // optional plot-ready export; stdout is authoritative otherwise
    if cli.output.is_some() || cfg.output.is_some() || std::env::var_os(OUTPUT_DIR_ENV).is_some() {
        let dir = output_dir(cli, cfg)?;
        std::fs::create_dir_all(&dir)?;
        let mut w = csv::Writer::from_path(dir.join("energy.csv"))
            .map_err(|e| Failure::Io(e.to_string()))?;
        w.write_record(["l_cut", "y", "y_strip", "y_theta"])
            .map_err(|e| Failure::Io(e.to_string()))?;
        for rep in &rows {
            w.write_record([
                fmt(rep.l_cut),
                fmt(rep.y),
                fmt(rep.y_strip),
                rep.azimuthal.as_ref().map(|az| fmt(az.y)).unwrap_or_default(),
            ])
            .map_err(|e| Failure::Io(e.to_string()))?;
        }
        w.flush()?;
        write_json(
            &dir.join("config.json"),
            &json!({
                "command": "energy",
                "input": args.input.display().to_string(),
                "viscosity": nu,
                "ladder": ladder,
            }),
        )?;
    }
    Ok(0)
}
