use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heisenberg::curvature::{
    arnold_curvature, curvature_wk_e3, divergence_probe, fd_levi_civita_oracle, orthonormalize, CoefficientRule,
};
use heisenberg::curves::{alpha_family, gamma_family, glued_family, write_samples_csv, Curve};
use heisenberg::geodesic::{estimate_distance, PathProblem};
use heisenberg::metric::length_with_error;
use heisenberg::{GroupPoint, LieVector, MetricKind, QuadratureSpec, SeqVec, WeightRule};
use heisenberg_cli::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "heisenberg", version, about = "Distances and curvature on the infinite-dimensional Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Metric {
    Riem,
    Subriem,
}

impl From<Metric> for MetricKind {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Riem => MetricKind::Riemannian,
            Metric::Subriem => MetricKind::SubRiemannian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Gamma,
    Alpha,
    Glued,
}

#[derive(Subcommand)]
enum Command {
    /// Upper bounds on the distance to (0,0,s) as the mode budget grows.
    Vanish(VanishArgs),
    /// Lower and upper distance bounds for pairs with distinct horizontal parts.
    Positivity(PositivityArgs),
    /// Curvature of the named planes for j = 1..J.
    CurvatureSweep(SweepArgs),
    /// K(W_k, e3), plane angles, and the divergence verdict for W.
    Discontinuity(DiscontinuityArgs),
    /// Optimised distance bound between two points read from JSON files.
    Distance(DistanceArgs),
    /// Length of a curve-family member.
    Length(LengthArgs),
    /// Curve samples as CSV (t, h1, h2, tau, residual).
    Sample(SampleArgs),
    /// Single curvature computations.
    Curvature(CurvatureArgs),
}

#[derive(Args, Serialize)]
struct VanishArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 4, 16, 64, 100])]
    modes: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Metric::Subriem)]
    metric: Metric,
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct PositivityArgs {
    /// JSON list of [p, q] point pairs; defaults to two reference pairs.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    modes: u64,
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, default_value_t = 10)]
    j_max: u64,
    /// Oracle columns are filled for j up to this truncation.
    #[arg(long, default_value_t = 3)]
    truncation: u64,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct DiscontinuityArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 10, 1000, 1_000_000])]
    k: Vec<u64>,
    #[arg(long, default_value_t = 10_000_000)]
    tail: u64,
    #[arg(long, default_value_t = 20)]
    depth: u32,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct DistanceArgs {
    #[arg(long)]
    from: PathBuf,
    #[arg(long)]
    to: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Subriem)]
    metric: Metric,
    #[arg(long, default_value_t = 8)]
    modes: u64,
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct Quadrature {
    /// Gauss–Legendre points per panel.
    #[arg(long, default_value_t = 16)]
    order: usize,
    #[arg(long, default_value_t = 8)]
    panels: usize,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Args, Serialize)]
struct LengthArgs {
    #[arg(long, value_enum, default_value_t = Family::Glued)]
    family: Family,
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, value_enum, default_value_t = Metric::Subriem)]
    metric: Metric,
    #[command(flatten)]
    quadrature: Quadrature,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long, value_enum, default_value_t = Family::Glued)]
    family: Family,
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, default_value_t = 101)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CurvatureArgs {
    /// Named plane such as `a1j,a2j` or `a1j,e3`.
    #[arg(long, conflicts_with_all = ["wk", "probe", "oracle"])]
    plane: Option<String>,
    #[arg(long, default_value_t = 1)]
    j: u64,
    /// K(W_k, e3) for this k.
    #[arg(long, conflicts_with_all = ["probe", "oracle"])]
    wk: Option<u64>,
    /// Probe B(e3, Y) for `W` or `power:P[:C1[:C2]]`.
    #[arg(long, conflicts_with = "oracle")]
    probe: Option<String>,
    #[arg(long, default_value_t = 20)]
    depth: u32,
    /// Probe by partial sums even when the rule is a recognised power law.
    #[arg(long, requires = "probe")]
    numeric: bool,
    /// Compare Arnold's formula with the finite-difference oracle on a
    /// random plane of the truncation.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 3)]
    truncation: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

fn config<A: Serialize>(command: &str, args: &A, output: &Output) -> CliResult<ExperimentConfig> {
    Ok(ExperimentConfig {
        command: command.to_string(),
        parameters: serde_json::to_value(args)?,
        output: output.out.as_ref().map(|p| p.display().to_string()),
        format: output.format,
    })
}

fn sink(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(command: &str, args: &impl Serialize, output: &Output, rows: Vec<T>) -> CliResult<()> {
    let report = Report::new(config(command, args, output)?, rows);
    let mut out = sink(&output.out)?;
    report.write(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Writes a single JSON document carrying the config echo.
fn emit_json(command: &str, args: &impl Serialize, output: &Output, result: serde_json::Value) -> CliResult<()> {
    if output.format != Format::Json {
        return Err(CliError::Validation(format!("`{command}` only writes JSON")));
    }
    let doc = json!({ "config": config(command, args, output)?, "result": result });
    let mut out = sink(&output.out)?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn family(f: Family, n: u64, c: f64) -> CliResult<Curve> {
    Ok(match f {
        Family::Gamma => gamma_family(n, c)?,
        Family::Alpha => alpha_family(n, c)?,
        Family::Glued => glued_family(n, c)?,
    })
}

fn read_point(path: &PathBuf) -> CliResult<GroupPoint> {
    parse_point(&std::fs::read_to_string(path)?)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Vanish(a) => {
            let rows = run_vanish(a.s, &a.modes, a.metric.into(), a.nodes, a.seed)?;
            emit("vanish", &a, &a.output, rows)
        }
        Command::Positivity(a) => {
            let pairs = match &a.pairs {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => default_pairs(),
            };
            let rows = run_positivity(&pairs, a.modes, a.nodes, a.seed)?;
            emit("positivity", &a, &a.output, rows)
        }
        Command::CurvatureSweep(a) => {
            let rows = run_curvature_sweep(a.j_max, a.truncation, a.step)?;
            emit("curvature-sweep", &a, &a.output, rows)
        }
        Command::Discontinuity(a) => {
            let rows = run_discontinuity(&a.k, a.tail, a.depth)?;
            emit("discontinuity", &a, &a.output, rows)
        }
        Command::Distance(a) => {
            let (from, to) = (read_point(&a.from)?, read_point(&a.to)?);
            let problem = PathProblem::new(from, to, metric_for(a.metric.into()), a.modes, a.nodes, a.seed)?;
            let report = estimate_distance(&problem)?;
            match a.output.format {
                Format::Json => emit_json("distance", &a, &a.output, serde_json::to_value(&report)?),
                Format::Csv => emit("distance", &a, &a.output, vec![DistanceRow::from(&report)]),
            }
        }
        Command::Length(a) => {
            let curve = family(a.family, a.n, a.c)?;
            let q = QuadratureSpec {
                order: a.quadrature.order,
                panels: a.quadrature.panels,
                tolerance: a.quadrature.tolerance,
            };
            let integral = length_with_error(&metric_for(a.metric.into()), &curve, &q)?;
            emit("length", &a, &a.output, vec![integral])
        }
        Command::Sample(a) => {
            if a.count < 2 {
                return Err(CliError::Validation("count must be ≥ 2".into()));
            }
            let samples = family(a.family, a.n, a.c)?.sample(a.count);
            let mut out = sink(&a.out)?;
            write_samples_csv(&mut out, &samples)?;
            out.flush()?;
            Ok(())
        }
        Command::Curvature(a) => curvature(&a),
    }
}

fn curvature(a: &CurvatureArgs) -> CliResult<()> {
    let w = WeightRule::default();
    let result = if let Some(plane) = &a.plane {
        let names: Vec<&str> = plane.split(',').collect();
        if names.len() != 2 {
            return Err(CliError::Validation(format!("plane `{plane}` must name two vectors")));
        }
        let (x, y) = (named_vector(names[0], a.j)?, named_vector(names[1], a.j)?);
        serde_json::to_value(arnold_curvature(&w, &x, &y)?)?
    } else if let Some(k) = a.wk {
        json!({ "k": k, "curvature": curvature_wk_e3(k)? })
    } else if let Some(rule) = &a.probe {
        let mut rule = parse_rule(rule)?;
        if a.numeric {
            rule = rule.opaque();
        }
        let probe = divergence_probe(&w, &CoefficientRule::vertical(1.0), &rule, a.depth)?;
        json!({ "verdict": verdict(&probe), "probe": summarize_probe(&probe)? })
    } else if a.oracle {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let n = a.truncation;
        let mut random = || {
            let mut coords = || SeqVec::from_fn(n, |_| rng.gen_range(-1.0..1.0));
            let (x1, x2) = (coords(), coords());
            LieVector::new(x1, x2, rng.gen_range(-1.0..1.0))
        };
        let (x, y) = (random(), random());
        let (x, y) = orthonormalize(&w, &x, &y)?;
        let breakdown = arnold_curvature(&w, &x, &y)?;
        let oracle = fd_levi_civita_oracle(&w, n, &x, &y, a.step)?;
        json!({
            "x": x,
            "y": y,
            "arnold": breakdown,
            "oracle": oracle,
            "relative_gap": (breakdown.k - oracle).abs() / breakdown.k.abs().max(1e-2),
        })
    } else {
        return Err(CliError::Validation("choose one of --plane, --wk, --probe, --oracle".into()));
    };
    emit_json("curvature", a, &a.output, result)
}

/// Probe output without the (possibly huge) truncated vector.
fn summarize_probe(probe: &heisenberg::curvature::AdjointResult) -> CliResult<serde_json::Value> {
    use heisenberg::curvature::AdjointResult;
    Ok(match probe {
        AdjointResult::Value(v) => json!({
            "norm_squared": v.norm_squared,
            "tail_estimate": v.tail_estimate,
            "symbolic": v.symbolic,
            "support": v.vector.max_index(),
        }),
        AdjointResult::Divergent(e) => serde_json::to_value(e)?,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
