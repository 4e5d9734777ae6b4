//! Experiments behind the `heisenberg` command line tool.
//!
//! Each `run_*` function is deterministic given its arguments and returns
//! plain rows; [`Report`] wraps rows with the configuration that produced
//! them and writes JSON or CSV.

use std::io::Write;

use heisenberg::curvature::{
    arnold_curvature, curvature_wk_e3, divergence_probe, fd_levi_civita_oracle, plane_convergence, AdjointResult,
    CoefficientRule,
};
use heisenberg::geodesic::{estimate_distance, lower_bound_horizontal, vertical_shift_upper_bound, OptimizationReport, PathProblem};
use heisenberg::{GroupPoint, LieVector, MetricKind, MetricSpec, WeightRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for rejected input, 3 for a computation that did not converge.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<heisenberg::Error> for CliError {
    fn from(e: heisenberg::Error) -> Self {
        use heisenberg::Error as E;
        match e {
            E::NonConvergence { .. } | E::Inconsistent { .. } | E::InconclusiveProbe { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Echo of the invocation, embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub parameters: serde_json::Value,
    pub output: Option<String>,
    pub format: Format,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report<T> {
    pub config: ExperimentConfig,
    pub rows: Vec<T>,
}

impl<T: Serialize> Report<T> {
    pub fn new(config: ExperimentConfig, rows: Vec<T>) -> Self {
        Self { config, rows }
    }

    /// JSON, or CSV preceded by `#` lines holding the config as JSON.
    pub fn write<W: Write>(&self, mut out: W) -> CliResult<()> {
        match self.config.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)?;
            }
            Format::Csv => {
                writeln!(out, "# {}", serde_json::to_string(&self.config)?)?;
                let mut writer = csv::Writer::from_writer(out);
                for row in &self.rows {
                    writer.serialize(row)?;
                }
                writer.flush()?;
            }
        }
        Ok(())
    }
}

/// Reads a CSV report written by [`Report::write`], skipping `#` lines.
pub fn read_csv_rows<T: for<'de> Deserialize<'de>>(text: &str) -> CliResult<Vec<T>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    reader.deserialize().map(|r| r.map_err(CliError::from)).collect()
}

pub fn metric_for(kind: MetricKind) -> MetricSpec {
    MetricSpec::new(WeightRule::default(), kind)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishRow {
    pub n: u64,
    pub analytic_bound: f64,
    pub optimizer_bound: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Upper bounds on the distance from the identity to `(0, 0, s)` at each
/// mode budget, with the glued-loop bound alongside.
pub fn run_vanish(s: f64, modes: &[u64], kind: MetricKind, nodes: usize, seed: u64) -> CliResult<Vec<VanishRow>> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s must be positive"));
    }
    if modes.is_empty() {
        return Err(invalid("at least one mode budget is required"));
    }
    let target = GroupPoint::vertical(s);
    modes
        .par_iter()
        .map(|&n| {
            let problem = PathProblem::new(GroupPoint::identity(), target.clone(), metric_for(kind), n, nodes, seed)?;
            let r = estimate_distance(&problem)?;
            Ok(VanishRow {
                n,
                analytic_bound: vertical_shift_upper_bound(n, s)?,
                optimizer_bound: r.upper_bound,
                lower_bound: r.lower_bound,
                iterations: r.iterations,
                converged: r.converged,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityRow {
    pub pair: usize,
    pub modes: u64,
    pub lower_bound: f64,
    pub riemannian_upper: f64,
    pub subriemannian_upper: f64,
    /// `lower ≤ d ≤ ρ` up to `1e-9`.
    pub sandwich: bool,
}

/// The default pairs: `(identity, (e₁, 0, 0))` and `(identity, (e₃, 0, 7))`.
pub fn default_pairs() -> Vec<(GroupPoint, GroupPoint)> {
    use heisenberg::SeqVec;
    vec![
        (GroupPoint::identity(), GroupPoint::new(SeqVec::basis(1), SeqVec::zero(), 0.0)),
        (GroupPoint::identity(), GroupPoint::new(SeqVec::basis(3), SeqVec::zero(), 7.0)),
    ]
}

/// Lower and upper bounds for pairs with distinct horizontal projections.
/// The mode budget is raised to the largest index either endpoint uses.
pub fn run_positivity(pairs: &[(GroupPoint, GroupPoint)], modes: u64, nodes: usize, seed: u64) -> CliResult<Vec<PositivityRow>> {
    for (i, (p, q)) in pairs.iter().enumerate() {
        if p.h1 == q.h1 && p.h2 == q.h2 {
            return Err(invalid(format!("pair {i} has equal horizontal projections")));
        }
    }
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, (p, q))| {
            let modes = modes.max(p.max_index()).max(q.max_index());
            let solve = |kind| -> CliResult<OptimizationReport> {
                Ok(estimate_distance(&PathProblem::new(p.clone(), q.clone(), metric_for(kind), modes, nodes, seed)?)?)
            };
            let (d, rho) = (solve(MetricKind::Riemannian)?, solve(MetricKind::SubRiemannian)?);
            let lower = lower_bound_horizontal(&WeightRule::default(), p, q);
            Ok(PositivityRow {
                pair: i,
                modes,
                lower_bound: lower,
                riemannian_upper: d.upper_bound,
                subriemannian_upper: rho.upper_bound,
                sandwich: lower <= d.upper_bound + 1e-9 && d.upper_bound <= rho.upper_bound + 1e-9,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRow {
    pub j: u64,
    pub k_a1_a2: f64,
    pub k_a1_e3: f64,
    pub k_a2_e3: f64,
    pub oracle_a1_a2: Option<f64>,
    pub oracle_a1_e3: Option<f64>,
    pub oracle_a2_e3: Option<f64>,
}

/// Named-plane curvatures for `j = 1..=j_max`; oracle columns are filled
/// for `j ≤ oracle_truncation`.
pub fn run_curvature_sweep(j_max: u64, oracle_truncation: u64, step: f64) -> CliResult<Vec<CurvatureRow>> {
    if j_max < 1 {
        return Err(invalid("j_max must be ≥ 1"));
    }
    let w = WeightRule::default();
    (1..=j_max)
        .into_par_iter()
        .map(|j| {
            let planes = [
                (LieVector::a1(j), LieVector::a2(j)),
                (LieVector::a1(j), LieVector::e3()),
                (LieVector::a2(j), LieVector::e3()),
            ];
            let mut k = [0.0; 3];
            let mut oracle = [None; 3];
            for (i, (x, y)) in planes.iter().enumerate() {
                k[i] = arnold_curvature(&w, x, y)?.k;
                if j <= oracle_truncation {
                    oracle[i] = Some(fd_levi_civita_oracle(&w, oracle_truncation, x, y, step)?);
                }
            }
            Ok(CurvatureRow {
                j,
                k_a1_a2: k[0],
                k_a1_e3: k[1],
                k_a2_e3: k[2],
                oracle_a1_a2: oracle[0],
                oracle_a1_e3: oracle[1],
                oracle_a2_e3: oracle[2],
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityRow {
    /// `W_k` rows, then one `W` row carrying the probe verdict.
    pub label: String,
    pub k: Option<u64>,
    pub curvature: Option<f64>,
    pub principal_angle: Option<f64>,
    pub verdict: Option<String>,
}

/// `K(W_k, e³)` and the angle to the truncated limit plane for each `k`,
/// followed by the divergence verdict for `B(e³, W)`.
pub fn run_discontinuity(ks: &[u64], tail: u64, depth: u32) -> CliResult<Vec<DiscontinuityRow>> {
    if ks.is_empty() || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("k list must be nonempty and strictly increasing"));
    }
    if ks.iter().any(|&k| k < 1 || k > tail) {
        return Err(invalid("every k must satisfy 1 ≤ k ≤ tail"));
    }
    let mut rows: Vec<DiscontinuityRow> = ks
        .par_iter()
        .map(|&k| {
            Ok(DiscontinuityRow {
                label: "W_k".to_string(),
                k: Some(k),
                curvature: Some(curvature_wk_e3(k)?),
                principal_angle: Some(plane_convergence(k, tail)?),
                verdict: None,
            })
        })
        .collect::<CliResult<_>>()?;
    let probe = divergence_probe(&WeightRule::default(), &CoefficientRule::vertical(1.0), &CoefficientRule::w().opaque(), depth)?;
    rows.push(DiscontinuityRow {
        label: "W".to_string(),
        k: None,
        curvature: None,
        principal_angle: None,
        verdict: Some(verdict(&probe)),
    });
    Ok(rows)
}

pub fn verdict(r: &AdjointResult) -> String {
    match r {
        AdjointResult::Value(_) => "convergent".to_string(),
        AdjointResult::Divergent(_) => "divergent".to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub metric: MetricKind,
    pub modes: u64,
    pub nodes: usize,
    pub seed: u64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub endpoint_error: f64,
}

impl From<&OptimizationReport> for DistanceRow {
    fn from(r: &OptimizationReport) -> Self {
        Self {
            metric: r.metric,
            modes: r.modes,
            nodes: r.nodes,
            seed: r.seed,
            lower_bound: r.lower_bound,
            upper_bound: r.upper_bound,
            iterations: r.iterations,
            converged: r.converged,
            endpoint_error: r.endpoint_error,
        }
    }
}

/// Parses a point from JSON: `{"h1": [[k, v], …], "h2": […], "t": τ}`.
pub fn parse_point(text: &str) -> CliResult<GroupPoint> {
    Ok(serde_json::from_str(text)?)
}

/// `a1j`, `a2j` or `e3` for index `j`.
pub fn named_vector(name: &str, j: u64) -> CliResult<LieVector> {
    match name.trim() {
        "a1j" => Ok(LieVector::a1(j)),
        "a2j" => Ok(LieVector::a2(j)),
        "e3" => Ok(LieVector::e3()),
        other => Err(invalid(format!("unknown plane vector `{other}` (expected a1j, a2j or e3)"))),
    }
}

/// `W` or `power:P[:C1[:C2]]` for `j ↦ (C1, C2)/j^P`.
pub fn parse_rule(spec: &str) -> CliResult<CoefficientRule> {
    if spec == "W" {
        return Ok(CoefficientRule::w());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts[0] != "power" || parts.len() < 2 || parts.len() > 4 {
        return Err(invalid(format!("unknown coefficient rule `{spec}`")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| invalid(format!("bad number `{s}` in `{spec}`")));
    let p = num(parts[1])?;
    let c1 = parts.get(2).map_or(Ok(1.0), |s| num(s))?;
    let c2 = parts.get(3).map_or(Ok(0.0), |s| num(s))?;
    Ok(CoefficientRule::power_law(c1, c2, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(heisenberg::Error::DegeneratePlane).exit_code(), 2);
        let e = heisenberg::Error::NonConvergence {
            iterations: 3,
            penalty: 1.0,
        };
        assert_eq!(CliError::from(e).exit_code(), 3);
    }

    #[test]
    fn rules() {
        assert!(parse_rule("W").unwrap().power_law.is_some());
        let r = parse_rule("power:2:3").unwrap();
        assert_eq!(r.coefficients(2), (0.75, 0.0));
        assert!(parse_rule("power").is_err());
        assert!(parse_rule("sin").is_err());
        assert!(named_vector("b", 1).is_err());
    }
}
