#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use kinfluid::flux::KineticOrder;
use kinfluid::harness::{
    build_scenario, compare_runs, exact_riemann, read_manifest, run_to_dir, BackendKind, ControllerChoice, RunConfig,
};
use kinfluid::micromac::Scheme;
use kinfluid::{CriterionKind, GasModel, Primitive};

/// One-dimensional kinetic/fluid solver with an adaptive kinetic region.
#[derive(Parser, Debug)]
#[command(name = "kinfluid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a benchmark scenario and write snapshots plus a manifest.
    Run(RunArgs),
    /// L1 / L-infinity differences between two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
    },
    /// Sample the exact Riemann solution as CSV on stdout.
    Riemann(RiemannArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Euler,
    Kinetic,
    Split,
    Nonsplit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Criterion {
    Beta4,
    Knudsen,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Control {
    Adaptive,
    Fluid,
    Kinetic,
}

#[derive(Parser, Debug)]
struct RunArgs {
    /// shock1, shock2, sod1, sod2, blast1 or blast2.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value = "split")]
    backend: Backend,
    #[arg(long, value_enum, default_value = "beta4")]
    criterion: Criterion,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nv: Option<usize>,
    #[arg(long)]
    beta_thr: Option<f64>,
    #[arg(long)]
    beta_star: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Extra snapshot every N steps (0: figure times only).
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    #[arg(long)]
    t_final: Option<f64>,
    /// Viscosity coefficient: a number or `hard-sphere`.
    #[arg(long)]
    c_mu: Option<String>,
    /// Kinetic transport order (1 or 2).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    /// Transition-function controller of the coupled backends.
    #[arg(long, value_enum, default_value = "adaptive")]
    controller: Control,
}

#[derive(Parser, Debug)]
struct RiemannArgs {
    /// Left state `rho,u,T` (SI units).
    #[arg(long, value_parser = parse_state)]
    left: [f64; 3],
    /// Right state `rho,u,T`.
    #[arg(long, value_parser = parse_state)]
    right: [f64; 3],
    #[arg(long)]
    time: f64,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(long, default_value_t = 5.0 / 3.0)]
    gamma: f64,
    /// Specific gas constant.
    #[arg(long, default_value_t = GasModel::hydrogen().r)]
    gas_constant: f64,
}

fn parse_state(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated numbers".to_string())
}

fn run(args: RunArgs) -> Result<()> {
    let mut sc = build_scenario(&args.scenario)?;
    if args.nx.is_some() || args.nv.is_some() {
        let (nx, nv) = (args.nx.unwrap_or(sc.space.nx), args.nv.unwrap_or(sc.nv));
        sc = sc.with_resolution(nx, nv)?;
    }
    sc.thresholds.criterion = match args.criterion {
        Criterion::Beta4 => CriterionKind::HeatFluxRatio,
        Criterion::Knudsen => CriterionKind::LocalKnudsen,
    };
    if let Some(v) = args.beta_thr {
        sc.thresholds.beta_thr = v;
    }
    if let Some(v) = args.beta_star {
        sc.thresholds.beta_star = v;
    }
    sc.thresholds.validate()?;
    if let Some(c) = &args.c_mu {
        sc.gas.c_mu = if c == "hard-sphere" {
            sc.gas.hard_sphere_c_mu(273.0)
        } else {
            c.parse().with_context(|| format!("invalid --c-mu {c:?}"))?
        };
        if !(sc.gas.c_mu > 0.0) {
            bail!("--c-mu must be positive");
        }
    }
    let backend = match args.backend {
        Backend::Euler => BackendKind::Euler,
        Backend::Kinetic => BackendKind::Kinetic,
        Backend::Split => BackendKind::MicroMacro(Scheme::Split),
        Backend::Nonsplit => BackendKind::MicroMacro(Scheme::NonSplit),
    };
    let mut cfg = RunConfig::new(backend);
    cfg.snapshot_every = args.snapshot_every;
    cfg.t_final = args.t_final;
    cfg.coupled.kinetic_order = if args.order == 1 { KineticOrder::First } else { KineticOrder::Second };
    cfg.controller = match args.controller {
        Control::Adaptive => ControllerChoice::Adaptive,
        Control::Fluid => ControllerChoice::ForcedFluid,
        Control::Kinetic => ControllerChoice::ForcedKinetic,
    };
    let m = run_to_dir(&sc, &cfg, &args.out)?;
    let s = m.summary.as_ref().expect("finished run has a summary");
    println!("scenario        {}", sc.name);
    println!("backend         {:?}", cfg.backend);
    println!("steps           {}", s.steps);
    println!("final time      {:.6e}", s.final_time);
    println!("snapshots       {}", m.snapshots.len());
    println!("drift           {:.3e} {:.3e} {:.3e}", s.conservation_drift[0], s.conservation_drift[1], s.conservation_drift[2]);
    if let Some(p) = s.positivity_min {
        println!("min E+g_K       {p:.3e}");
    }
    println!("active (time)   {:.4}", s.time_avg_active_fraction);
    println!("active (cells)  {:.4}", s.mean_active_fraction);
    println!("full kinetic    {}", s.reached_full_kinetic);
    println!("wall clock      {:.3} s", s.wall_clock);
    Ok(())
}

fn compare(a: PathBuf, b: PathBuf) -> Result<()> {
    let rows = compare_runs(&a, &b)?;
    println!("{:>5} {:>12} {:>8} {:>12} {:>12}", "snap", "time", "column", "L1", "Linf");
    for r in &rows {
        println!("{:>5} {:>12.4e} {:>8} {:>12.4e} {:>12.4e}", r.index, r.time, r.column, r.l1, r.linf);
    }
    let (ma, mb) = (read_manifest(&a)?, read_manifest(&b)?);
    if let (Some(sa), Some(sb)) = (ma.summary, mb.summary) {
        if sb.wall_clock > 0.0 {
            println!("wall-clock ratio a/b {:.4}", sa.wall_clock / sb.wall_clock);
        }
        println!("active fraction a {:.4} b {:.4}", sa.time_avg_active_fraction, sb.time_avg_active_fraction);
    }
    Ok(())
}

fn riemann(args: RiemannArgs) -> Result<()> {
    if args.points < 2 || !(args.x_max > args.x_min) || !(args.time > 0.0) {
        bail!("need points >= 2, x_max > x_min and time > 0");
    }
    let prim = |s: [f64; 3]| Primitive::new(s[0], s[1], args.gas_constant * s[2]);
    let (l, r) = (prim(args.left), prim(args.right));
    let x: Vec<f64> = (0..args.points)
        .map(|k| args.x_min + (args.x_max - args.x_min) * k as f64 / (args.points - 1) as f64)
        .collect();
    let xi: Vec<f64> = x.iter().map(|x| x / args.time).collect();
    let prof = exact_riemann(&l, &r, args.gamma, &xi)?;
    println!("x,rho,u,T,p");
    for (x, p) in x.iter().zip(prof) {
        println!("{x},{},{},{},{}", p.rho, p.u, p.theta / args.gas_constant, p.pressure());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Compare { a, b } => compare(a, b),
        Command::Riemann(a) => riemann(a),
    }
}
