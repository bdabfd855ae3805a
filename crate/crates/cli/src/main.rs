//! `roughreach` command-line interface. Every subcommand reads JSON, writes
//! one JSON document, and is deterministic for fixed inputs and seeds.
//!
//! Exit codes: 0 success, 1 input or numerical error, 2 a reach search
//! that finished with status `failed`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use roughreach::flows::{flow, flow_with_jacobian, Direction, FlowRequest, IntegratorSettings};
use roughreach::orbit::{bracket_span_rank, distribution_rank, OrbitOptions};
use roughreach::rde::{solve_ode, solve_rde, RoughPathL2, DEFAULT_SUBSTEPS};
use roughreach::reach::{
    reach_shooting, verify_accessibility, ReachReport, ReachStatus, ShootingOptions, VerifyOptions,
};
use roughreach::signature::{oscillating_path, sig_pl, PiecewiseLinearPath};
use roughreach::tensor::{set_max_depth, TruncatedTensor, DEFAULT_MAX_DEPTH};
use roughreach::vf::{Builtin, FamilySpec, VectorFieldFamily};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "roughreach",
    version,
    about = "Signatures, flows, orbits and reachability for rough differential equations"
)]
struct Cli {
    /// Worker threads for orbit sampling and reach restarts (default: all cores).
    #[arg(long, global = true, env = "ROUGHREACH_THREADS")]
    threads: Option<usize>,
    /// Write the JSON result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Truncated signature of a piecewise-linear path.
    Sig(SigArgs),
    /// Flow of one field (or a constant combination) for a given time.
    Flow(FlowArgs),
    /// Dimension of the orbit distribution at a point.
    OrbitRank(OrbitArgs),
    /// Classical solve driven by a piecewise-linear path.
    SolveOde(SolveOdeArgs),
    /// Log-ODE solve driven by a level-2 rough path.
    SolveRde(SolveRdeArgs),
    /// Search for a piecewise-linear control reaching a target.
    Reach(ReachArgs),
    /// Solve the RDE, then reproduce its endpoint with a piecewise-linear control.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SigArgs {
    /// Path JSON file {"n","times","points"}.
    #[arg(
        long,
        conflicts_with = "oscillating",
        required_unless_present = "oscillating"
    )]
    path: Option<PathBuf>,
    /// Use the built-in oscillating loop x(n) instead of a file.
    #[arg(long)]
    oscillating: Option<u32>,
    /// Number of uniform samples for --oscillating.
    #[arg(long, default_value_t = 20_000)]
    segments: usize,
    /// Truncation depth N.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Largest depth accepted.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
}

#[derive(Args)]
struct FamilyArg {
    /// Vector-field family: a JSON file, or inline JSON starting with '{'.
    #[arg(long)]
    vf: String,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    family: FamilyArg,
    /// One-based field index.
    #[arg(
        long,
        conflicts_with = "direction",
        required_unless_present = "direction"
    )]
    index: Option<usize>,
    /// Constant combination coefficients as a JSON array.
    #[arg(long)]
    direction: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    time: f64,
    /// Start point as a JSON array.
    #[arg(long)]
    start: String,
    /// Fixed RK4 step (default: max(64, |t|/0.01) steps).
    #[arg(long)]
    step: Option<f64>,
    /// Also propagate and report the Jacobian.
    #[arg(long)]
    jacobian: bool,
}

#[derive(Args)]
struct OrbitArgs {
    #[command(flatten)]
    family: FamilyArg,
    /// Base point as a JSON array.
    #[arg(long)]
    point: String,
    #[arg(long, default_value_t = 50)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rank iterated brackets up to this depth instead of sampling flows.
    #[arg(long)]
    depth: Option<usize>,
    /// Relative singular-value threshold.
    #[arg(long, default_value_t = 1e-8)]
    rank_tol: f64,
    /// Half-width of the sampled flow-time interval.
    #[arg(long, default_value_t = 0.3)]
    tau: f64,
}

#[derive(Args)]
struct SolveOdeArgs {
    #[command(flatten)]
    family: FamilyArg,
    /// Path JSON file.
    #[arg(long)]
    path: PathBuf,
    /// Initial state (default: unit element for signature families, else zero).
    #[arg(long)]
    start: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    substeps: usize,
}

#[derive(Args)]
struct SolveRdeArgs {
    #[command(flatten)]
    family: FamilyArg,
    /// RoughPathL2 JSON file.
    #[arg(long)]
    rough: PathBuf,
    #[arg(long)]
    start: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    substeps: usize,
}

#[derive(Args)]
struct ReachArgs {
    #[command(flatten)]
    family: FamilyArg,
    #[arg(long)]
    start: Option<String>,
    /// Target state as a JSON array.
    #[arg(long, conflicts_with = "rough", required_unless_present = "rough")]
    target: Option<String>,
    /// Take the target from the RDE terminal state driven by this rough path.
    #[arg(long)]
    rough: Option<PathBuf>,
    /// Control horizon T (default 1, or the rough path's time span).
    #[arg(long)]
    horizon: Option<f64>,
    /// Number of equal-duration control segments K.
    #[arg(long, default_value_t = 4)]
    segments: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Random starts after the structured ones.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    substeps: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    family: FamilyArg,
    #[arg(long)]
    rough: PathBuf,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shooting segments when no exact construction applies.
    #[arg(long, default_value_t = 4)]
    segments: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Orbit-sampling budget for the rank profile.
    #[arg(long, default_value_t = 50)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    substeps: usize,
}

fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> anyhow::Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!("invalid JSON in {what}: {e}"))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_json(&text, &path.display().to_string())
}

fn load_family(arg: &FamilyArg) -> anyhow::Result<VectorFieldFamily> {
    let spec: FamilySpec = if arg.vf.trim_start().starts_with('{') {
        parse_json(&arg.vf, "--vf")?
    } else {
        read_json(Path::new(&arg.vf))?
    };
    Ok(spec.build()?)
}

fn parse_point(text: &str, flag: &str) -> anyhow::Result<Vec<f64>> {
    parse_json(text, flag)
}

fn default_start(family: &VectorFieldFamily, start: Option<&str>) -> anyhow::Result<Vec<f64>> {
    if let Some(s) = start {
        return parse_point(s, "--start");
    }
    Ok(match family.builtin() {
        Some(Builtin::SignatureOde { depth, width }) => {
            TruncatedTensor::identity(width, depth)?.to_flat()
        }
        _ => vec![0.0; family.dim()],
    })
}

fn settings(step: Option<f64>) -> anyhow::Result<IntegratorSettings> {
    Ok(match step {
        Some(h) => IntegratorSettings::with_step(h)?,
        None => IntegratorSettings::default(),
    })
}

fn reach_output(report: &ReachReport) -> Value {
    json!({
        "report": report,
        "path": report.control.realize(),
    })
}

/// JSON result plus whether a reach search failed.
fn run(command: Command) -> anyhow::Result<(Value, bool)> {
    match command {
        Command::Sig(a) => {
            if a.max_depth == 0 {
                bail!("--max-depth must be positive");
            }
            set_max_depth(a.max_depth);
            let path = match (&a.path, a.oscillating) {
                (Some(p), _) => read_json::<PiecewiseLinearPath>(p)?,
                (None, Some(n)) => oscillating_path(n, a.segments)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            let sig = sig_pl(&path, a.depth)?;
            Ok((serde_json::to_value(&sig.group)?, false))
        }
        Command::Flow(a) => {
            let family = load_family(&a.family)?;
            let direction = match (a.index, &a.direction) {
                (Some(0), _) => bail!("--index is one-based"),
                (Some(i), _) => Direction::Field(i - 1),
                (None, Some(d)) => Direction::Combination(parse_json(d, "--direction")?),
                (None, None) => unreachable!("clap requires one direction"),
            };
            let req = FlowRequest {
                family: &family,
                direction,
                time: a.time,
                start: parse_point(&a.start, "--start")?,
                settings: settings(a.step)?,
            };
            let out = if a.jacobian {
                let (endpoint, jac) = flow_with_jacobian(&req)?;
                let rows: Vec<Vec<f64>> = jac
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect();
                json!({ "endpoint": endpoint, "jacobian": rows, "determinant": jac.determinant() })
            } else {
                json!({ "endpoint": flow(&req)? })
            };
            Ok((out, false))
        }
        Command::OrbitRank(a) => {
            let family = load_family(&a.family)?;
            let point = parse_point(&a.point, "--point")?;
            let out =
                match a.depth {
                    Some(depth) => {
                        let span = bracket_span_rank(&family, &point, depth, a.rank_tol)?;
                        let generators: Vec<Value> = span
                            .brackets
                            .iter()
                            .map(|b| json!({ "bracket": b.label(), "vector": b.vector }))
                            .collect();
                        json!({
                            "mode": "brackets",
                            "rank": span.rank,
                            "singular_values": span.singular_values,
                            "basis": span.basis,
                            "generators": generators,
                        })
                    }
                    None => {
                        let opts = OrbitOptions {
                            budget: a.budget,
                            seed: a.seed,
                            tau: a.tau,
                            rank_tol: a.rank_tol,
                            ..Default::default()
                        };
                        let est = distribution_rank(&family, &point, &opts)?;
                        let generators: Vec<Value> = est
                        .generators
                        .iter()
                        .map(|g| {
                            let stages: Vec<Value> =
                                g.ddiffeo.stages.iter().map(|&(i, t)| json!([i + 1, t])).collect();
                            json!({ "stages": stages, "field": g.field + 1, "vector": g.vector })
                        })
                        .collect();
                        json!({
                            "mode": "flows",
                            "rank": est.rank,
                            "singular_values": est.singular_values,
                            "basis": est.basis,
                            "generators": generators,
                            "samples_used": est.samples_used,
                            "samples_failed": est.samples_failed,
                            "seed": a.seed,
                        })
                    }
                };
            Ok((out, false))
        }
        Command::SolveOde(a) => {
            let family = load_family(&a.family)?;
            let path: PiecewiseLinearPath = read_json(&a.path)?;
            let start = default_start(&family, a.start.as_deref())?;
            Ok((
                serde_json::to_value(solve_ode(&family, &path, &start, a.substeps)?)?,
                false,
            ))
        }
        Command::SolveRde(a) => {
            let family = load_family(&a.family)?;
            let rough: RoughPathL2 = read_json(&a.rough)?;
            let start = default_start(&family, a.start.as_deref())?;
            Ok((
                serde_json::to_value(solve_rde(&family, &rough, &start, a.substeps)?)?,
                false,
            ))
        }
        Command::Reach(a) => {
            let family = load_family(&a.family)?;
            let start = default_start(&family, a.start.as_deref())?;
            let (target, horizon) = match (&a.target, &a.rough) {
                (Some(t), _) => (parse_point(t, "--target")?, a.horizon.unwrap_or(1.0)),
                (None, Some(p)) => {
                    let rough: RoughPathL2 = read_json(p)?;
                    let sol = solve_rde(&family, &rough, &start, a.substeps)?;
                    (sol.terminal, a.horizon.unwrap_or_else(|| rough.horizon()))
                }
                (None, None) => unreachable!("clap requires one target source"),
            };
            let opts = ShootingOptions {
                horizon,
                segments: a.segments,
                tol: a.tol,
                restarts: a.restarts,
                seed: a.seed,
                substeps: a.substeps,
                ..Default::default()
            };
            let report = reach_shooting(&family, &start, &target, &opts)?;
            Ok((reach_output(&report), report.status == ReachStatus::Failed))
        }
        Command::Verify(a) => {
            let family = load_family(&a.family)?;
            let start = default_start(&family, a.start.as_deref())?;
            let rough: RoughPathL2 = read_json(&a.rough)?;
            let opts = VerifyOptions {
                tol: a.tol,
                horizon: a.horizon,
                substeps: a.substeps,
                shooting: ShootingOptions {
                    segments: a.segments,
                    restarts: a.restarts,
                    seed: a.seed,
                    ..Default::default()
                },
                orbit: OrbitOptions {
                    budget: a.budget,
                    seed: a.seed,
                    ..Default::default()
                },
                ..Default::default()
            };
            let report = verify_accessibility(&family, &start, &rough, &opts)?;
            Ok((reach_output(&report), report.status == ReachStatus::Failed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let (value, search_failed) = match run(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    text.push('\n');
    let written = match &cli.output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    if search_failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
