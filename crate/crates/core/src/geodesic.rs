//! Bounds on the Riemannian distance `d` and the sub-Riemannian distance `ρ`.
//!
//! Neither infimum is computable over all of `ℓ²`. What this module provides:
//!
//! * [`lower_bound_horizontal`]: a certified lower bound valid for both
//!   distances, positive whenever the horizontal projections differ;
//! * [`vertical_shift_upper_bound`]: the length of the explicit glued loop
//!   reaching `(0, 0, s)` through mode `n`, which tends to zero like `n^(-1/2)`;
//! * [`estimate_distance`]: an optimised upper bound over discrete paths
//!   confined to the first `n` modes.
//!
//! Every estimate is an upper bound at a stated mode budget; the vanishing
//! of `ρ` on the vertical axis shows up as a trend in `n`.
//!
//! Sub-Riemannian paths are parameterised by piecewise constant horizontal
//! controls with the vertical coordinate integrated exactly, so every iterate
//! is horizontal. The endpoint is matched by an augmented Lagrangian whose
//! penalty weight doubles each outer round, followed by a minimum-norm
//! Gauss–Newton correction onto the endpoint. Riemannian paths are coordinate
//! polylines whose `σ`-length is exact segment by segment. Both objectives
//! minimise the path energy, whose minimisers are the constant-speed
//! length minimisers; the reported bound is always the length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{glued_family, polyline, Curve};
use crate::error::{Error, Result};
use crate::group::GroupPoint;
use crate::metric::{length, MetricKind, MetricSpec};
use crate::quadrature::QuadratureSpec;
use crate::seqvec::{SeqVec, WeightRule};

/// `max_{i,k} √a_k·|p_{ik} − q_{ik}|`, a lower bound for both `d` and `ρ`
/// (with `a_k = 1/k` this is `|p_{ik} − q_{ik}|/√k`).
pub fn lower_bound_horizontal(weight: &WeightRule, p: &GroupPoint, q: &GroupPoint) -> f64 {
    let d1 = &p.h1 - &q.h1;
    let d2 = &p.h2 - &q.h2;
    d1.entries()
        .iter()
        .chain(d2.entries())
        .map(|&(k, v)| weight.weight(k).sqrt() * v.abs())
        .fold(0.0, f64::max)
}

/// `g`-length of `glue(γⁿ, αⁿ)` with `c = √(3s)`, an upper bound for
/// `ρ((0,0,0), (0,0,s))` under the default weight.
pub fn vertical_shift_upper_bound(n: u64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("vertical shift s must be positive"));
    }
    let curve = glued_family(n, (3.0 * s).sqrt())?;
    length(&MetricSpec::subriemannian(), &curve, &QuadratureSpec::default())
}

/// `(identity, p⁻¹q)`; both distances are unchanged by the reduction.
pub fn left_reduce(p: &GroupPoint, q: &GroupPoint) -> (GroupPoint, GroupPoint) {
    (GroupPoint::identity(), p.inverse().multiply(q))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Cap on accepted descent steps over the whole run.
    pub max_iterations: usize,
    /// Cap on steps per inner minimisation.
    pub inner_iterations: usize,
    /// Endpoint error (Euclidean norm in coordinates) required before the
    /// final projection.
    pub penalty_threshold: f64,
    pub max_rounds: usize,
    pub initial_penalty: f64,
    pub gradient_tolerance: f64,
    /// Relative size of the seeded random perturbation of the initial path.
    pub perturbation: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            inner_iterations: 4_000,
            penalty_threshold: 1e-8,
            max_rounds: 30,
            initial_penalty: 10.0,
            gradient_tolerance: 1e-10,
            perturbation: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PathProblem {
    pub start: GroupPoint,
    pub end: GroupPoint,
    pub metric: MetricSpec,
    /// Paths are confined to indices `1..=modes`.
    pub modes: u64,
    /// Number of path segments `M`.
    pub nodes: usize,
    pub seed: u64,
    pub settings: OptimizerSettings,
}

impl PathProblem {
    pub fn new(start: GroupPoint, end: GroupPoint, metric: MetricSpec, modes: u64, nodes: usize, seed: u64) -> Result<Self> {
        let problem = Self {
            start,
            end,
            metric,
            modes,
            nodes,
            seed,
            settings: OptimizerSettings::default(),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_settings(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes < 1 {
            return Err(Error::invalid("mode budget must be ≥ 1"));
        }
        let needed = self.start.max_index().max(self.end.max_index());
        if self.modes < needed {
            return Err(Error::invalid(format!(
                "mode budget {} is below the largest endpoint index {needed}",
                self.modes
            )));
        }
        if self.nodes < 2 {
            return Err(Error::invalid("at least two path segments are required"));
        }
        if !self.start.t.is_finite() || !self.end.t.is_finite() {
            return Err(Error::invalid("endpoints must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationReport {
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest coordinate gap between the final path end and the target.
    pub endpoint_error: f64,
    pub metric: MetricKind,
    pub modes: u64,
    pub nodes: usize,
    pub seed: u64,
    /// Nodes of the final path (a polyline on a uniform grid).
    pub path: Vec<GroupPoint>,
}

impl OptimizationReport {
    pub fn final_path(&self) -> Curve {
        polyline(&self.path).expect("reports always hold at least two nodes")
    }
}

/// Optimised upper bound on `d` or `ρ` between `problem.start` and
/// `problem.end` at mode budget `problem.modes`.
pub fn estimate_distance(problem: &PathProblem) -> Result<OptimizationReport> {
    problem.validate()?;
    let weight = &problem.metric.weight;
    let lower = lower_bound_horizontal(weight, &problem.start, &problem.end);
    let (_, target) = left_reduce(&problem.start, &problem.end);

    let mut report = if target.is_identity() {
        OptimizationReport {
            upper_bound: 0.0,
            lower_bound: lower,
            iterations: 0,
            converged: true,
            endpoint_error: 0.0,
            metric: problem.metric.kind,
            modes: problem.modes,
            nodes: problem.nodes,
            seed: problem.seed,
            path: vec![GroupPoint::identity(); problem.nodes + 1],
        }
    } else {
        match problem.metric.kind {
            MetricKind::SubRiemannian => solve_subriemannian(problem, &target, lower)?,
            MetricKind::Riemannian => solve_riemannian(problem, &target, lower)?,
        }
    };
    report.path = report.path.iter().map(|node| problem.start.multiply(node)).collect();

    if report.upper_bound < lower - 1e-9 * (1.0 + lower) {
        return Err(Error::Inconsistent {
            lower,
            upper: report.upper_bound,
        });
    }
    Ok(report)
}

/// Dense coordinates of a point restricted to `1..=n`.
fn dense_point(p: &GroupPoint, n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    (p.h1.to_dense(n), p.h2.to_dense(n), p.t)
}

fn sparse_point(h1: &[f64], h2: &[f64], t: f64) -> GroupPoint {
    GroupPoint::new(SeqVec::from_dense(h1), SeqVec::from_dense(h2), t)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Piecewise constant horizontal controls on a uniform grid of `M` steps.
///
/// On each step the horizontal components move linearly and the vertical
/// component gains `Δ(⟨a₁, u₂⟩ − ⟨a₂, u₁⟩)` exactly, `a` being the step's
/// starting point; the resulting curve is the coordinate polyline through
/// [`HorizontalControlPath::nodes`] and is horizontal to roundoff.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalControlPath {
    pub start: GroupPoint,
    pub controls: Vec<(SeqVec, SeqVec)>,
}

impl HorizontalControlPath {
    pub fn nodes(&self) -> Vec<GroupPoint> {
        let dt = 1.0 / self.controls.len() as f64;
        let mut out = Vec::with_capacity(self.controls.len() + 1);
        let mut p = self.start.clone();
        out.push(p.clone());
        for (u1, u2) in &self.controls {
            let t = p.t + dt * (p.h1.dot(u2) - p.h2.dot(u1));
            p = GroupPoint::new(p.h1.axpy(dt, u1), p.h2.axpy(dt, u2), t);
            out.push(p.clone());
        }
        out
    }

    pub fn endpoint(&self) -> GroupPoint {
        self.nodes().pop().expect("nodes include the start")
    }

    /// `Σ Δ‖u_i‖_g`, the exact `g`-length.
    pub fn g_length(&self, weight: &WeightRule) -> f64 {
        let dt = 1.0 / self.controls.len() as f64;
        self.controls
            .iter()
            .map(|(u1, u2)| dt * (weight.norm_squared(u1) + weight.norm_squared(u2)).sqrt())
            .sum()
    }

    pub fn to_curve(&self) -> Curve {
        polyline(&self.nodes()).expect("control paths have at least one step")
    }
}

/// Augmented Lagrangian of the path energy over flattened controls
/// `x[(2i + c)·n + k]` (step `i`, component `c ∈ {0, 1}`, mode `k + 1`).
#[derive(Clone, Debug)]
pub struct ControlObjective {
    weights: Vec<f64>,
    steps: usize,
    start: (Vec<f64>, Vec<f64>, f64),
    target: (Vec<f64>, Vec<f64>, f64),
    /// Multipliers for `(h₁, h₂, τ)` endpoint constraints, length `2n + 1`.
    pub multipliers: Vec<f64>,
    pub penalty: f64,
}

impl ControlObjective {
    pub fn new(weight: &WeightRule, modes: usize, steps: usize, start: &GroupPoint, target: &GroupPoint) -> Self {
        Self {
            weights: (1..=modes as u64).map(|k| weight.weight(k)).collect(),
            steps,
            start: dense_point(start, modes),
            target: dense_point(target, modes),
            multipliers: vec![0.0; 2 * modes + 1],
            penalty: 0.0,
        }
    }

    pub fn modes(&self) -> usize {
        self.weights.len()
    }

    pub fn dimension(&self) -> usize {
        2 * self.modes() * self.steps
    }

    fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    /// Horizontal positions at the `M + 1` nodes, flattened `[i·n + k]`,
    /// and the vertical coordinate at the end.
    fn integrate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let (n, m, dt) = (self.modes(), self.steps, self.dt());
        let mut a1 = vec![0.0; (m + 1) * n];
        let mut a2 = vec![0.0; (m + 1) * n];
        a1[..n].copy_from_slice(&self.start.0);
        a2[..n].copy_from_slice(&self.start.1);
        let mut tau = self.start.2;
        for i in 0..m {
            let u1 = &x[2 * i * n..(2 * i + 1) * n];
            let u2 = &x[(2 * i + 1) * n..(2 * i + 2) * n];
            let (cur, next) = (i * n, (i + 1) * n);
            tau += dt * (dot(&a1[cur..next], u2) - dot(&a2[cur..next], u1));
            for k in 0..n {
                a1[next + k] = a1[cur + k] + dt * u1[k];
                a2[next + k] = a2[cur + k] + dt * u2[k];
            }
        }
        (a1, a2, tau)
    }

    /// Endpoint minus target, `(h₁, h₂, τ)` flattened.
    pub fn constraint(&self, x: &[f64]) -> Vec<f64> {
        let (a1, a2, tau) = self.integrate(x);
        self.constraint_from(&a1, &a2, tau)
    }

    fn constraint_from(&self, a1: &[f64], a2: &[f64], tau: f64) -> Vec<f64> {
        let (n, m) = (self.modes(), self.steps);
        let mut c = Vec::with_capacity(2 * n + 1);
        c.extend((0..n).map(|k| a1[m * n + k] - self.target.0[k]));
        c.extend((0..n).map(|k| a2[m * n + k] - self.target.1[k]));
        c.push(tau - self.target.2);
        c
    }

    /// `∫‖γ̇‖²_g = Δ Σ ‖u_i‖²_η`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let n = self.modes();
        self.dt() * x.iter().enumerate().map(|(idx, u)| self.weights[idx % n] * u * u).sum::<f64>()
    }

    /// `Σ Δ‖u_i‖_η`.
    pub fn length(&self, x: &[f64]) -> f64 {
        let n = self.modes();
        let dt = self.dt();
        x.chunks(2 * n)
            .map(|step| {
                let sq: f64 = step.iter().enumerate().map(|(idx, u)| self.weights[idx % n] * u * u).sum();
                dt * sq.sqrt()
            })
            .sum()
    }

    /// Gradient of the vertical endpoint coordinate.
    fn vertical_gradient(&self, a1: &[f64], a2: &[f64]) -> Vec<f64> {
        let (n, m, dt) = (self.modes(), self.steps, self.dt());
        let mut g = vec![0.0; self.dimension()];
        let end = m * n;
        for j in 0..m {
            let (cur, next) = (j * n, (j + 1) * n);
            for k in 0..n {
                g[2 * j * n + k] = dt * (a2[end + k] - a2[next + k] - a2[cur + k]);
                g[(2 * j + 1) * n + k] = dt * (a1[cur + k] + a1[next + k] - a1[end + k]);
            }
        }
        g
    }

    /// `E + ⟨λ, c⟩ + (μ/2)‖c‖²` and its gradient.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (n, dt) = (self.modes(), self.dt());
        let (a1, a2, tau) = self.integrate(x);
        let c = self.constraint_from(&a1, &a2, tau);
        let r: Vec<f64> = c
            .iter()
            .zip(&self.multipliers)
            .map(|(ci, li)| li + self.penalty * ci)
            .collect();
        let value = self.energy(x)
            + dot(&self.multipliers, &c)
            + 0.5 * self.penalty * c.iter().map(|v| v * v).sum::<f64>();

        let mut grad = self.vertical_gradient(&a1, &a2);
        let r3 = r[2 * n];
        for (idx, g) in grad.iter_mut().enumerate() {
            let (block, k) = (idx / n, idx % n);
            let horizontal = if block % 2 == 0 { r[k] } else { r[n + k] };
            *g = r3 * *g + dt * horizontal + 2.0 * dt * self.weights[k] * x[idx];
        }
        (value, grad)
    }

    /// Minimum-norm Gauss–Newton steps onto `c(x) = 0`. Returns the final
    /// constraint norm.
    pub fn project(&self, x: &mut [f64], iterations: usize) -> f64 {
        let (n, m, dt) = (self.modes(), self.steps, self.dt());
        for _ in 0..iterations {
            let (a1, a2, tau) = self.integrate(x);
            let c = self.constraint_from(&a1, &a2, tau);
            if norm(&c) < 1e-15 {
                break;
            }
            let gv = self.vertical_gradient(&a1, &a2);
            // J Jᵀ = [[Δ I, 0, b₁], [0, Δ I, b₂], [b₁ᵀ, b₂ᵀ, ‖∇V‖²]] with
            // b_k = Δ Σ_i ∂V/∂u_{ik}; solved by its Schur complement.
            let mut b = vec![0.0; 2 * n];
            for j in 0..m {
                for k in 0..n {
                    b[k] += dt * gv[2 * j * n + k];
                    b[n + k] += dt * gv[(2 * j + 1) * n + k];
                }
            }
            let d = dt * dt * m as f64;
            let schur = dot(&gv, &gv) - dot(&b, &b) / d;
            if !(schur > 1e-300) {
                break;
            }
            let z = (-c[2 * n] + dot(&b, &c[..2 * n]) / d) / schur;
            let y: Vec<f64> = (0..2 * n).map(|k| (-c[k] - b[k] * z) / d).collect();
            for j in 0..m {
                for k in 0..n {
                    x[2 * j * n + k] += dt * y[k] + z * gv[2 * j * n + k];
                    x[(2 * j + 1) * n + k] += dt * y[n + k] + z * gv[(2 * j + 1) * n + k];
                }
            }
        }
        norm(&self.constraint(x))
    }

    pub fn to_path(&self, x: &[f64]) -> HorizontalControlPath {
        let n = self.modes();
        HorizontalControlPath {
            start: sparse_point(&self.start.0, &self.start.1, self.start.2),
            controls: x
                .chunks(2 * n)
                .map(|step| (SeqVec::from_dense(&step[..n]), SeqVec::from_dense(&step[n..])))
                .collect(),
        }
    }
}

/// Path energy `M Σ ‖a_i⁻¹a_{i+1}‖²_σ` of a coordinate polyline with fixed
/// ends, over the flattened interior nodes `x[(i − 1)(2n + 1) + c]`.
#[derive(Clone, Debug)]
pub struct PolylineObjective {
    weights: Vec<f64>,
    steps: usize,
    start: Vec<f64>,
    end: Vec<f64>,
}

impl PolylineObjective {
    pub fn new(weight: &WeightRule, modes: usize, steps: usize, start: &GroupPoint, end: &GroupPoint) -> Self {
        let flat = |p: &GroupPoint| {
            let (h1, h2, t) = dense_point(p, modes);
            let mut v = h1;
            v.extend(h2);
            v.push(t);
            v
        };
        Self {
            weights: (1..=modes as u64).map(|k| weight.weight(k)).collect(),
            steps,
            start: flat(start),
            end: flat(end),
        }
    }

    fn width(&self) -> usize {
        2 * self.weights.len() + 1
    }

    pub fn dimension(&self) -> usize {
        (self.steps - 1) * self.width()
    }

    fn node<'a>(&'a self, x: &'a [f64], i: usize) -> &'a [f64] {
        let w = self.width();
        if i == 0 {
            &self.start
        } else if i == self.steps {
            &self.end
        } else {
            &x[(i - 1) * w..i * w]
        }
    }

    /// Pullback of segment `a → b`: `(b₁ − a₁, b₂ − a₂, Δτ − β(a, b))`.
    fn segment(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let n = self.weights.len();
        let mut horizontal = 0.0;
        for k in 0..n {
            let (d1, d2) = (b[k] - a[k], b[n + k] - a[n + k]);
            horizontal += self.weights[k] * (d1 * d1 + d2 * d2);
        }
        let vertical = b[2 * n] - a[2 * n] - dot(&a[..n], &b[n..2 * n]) + dot(&a[n..2 * n], &b[..n]);
        (horizontal, vertical)
    }

    /// Exact `σ`-length of the polyline.
    pub fn length(&self, x: &[f64]) -> f64 {
        (0..self.steps)
            .map(|i| {
                let (h, v) = self.segment(self.node(x, i), self.node(x, i + 1));
                (h + v * v).sqrt()
            })
            .sum()
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (n, w, m) = (self.weights.len(), self.width(), self.steps as f64);
        let mut grad = vec![0.0; x.len()];
        let mut value = 0.0;
        for i in 0..self.steps {
            let (a, b) = (self.node(x, i), self.node(x, i + 1));
            let (h, v) = self.segment(a, b);
            value += m * (h + v * v);
            let mut ga = vec![0.0; w];
            let mut gb = vec![0.0; w];
            for k in 0..n {
                let (d1, d2) = (b[k] - a[k], b[n + k] - a[n + k]);
                let s = 2.0 * m * self.weights[k];
                ga[k] = -s * d1 - 2.0 * m * v * b[n + k];
                ga[n + k] = -s * d2 + 2.0 * m * v * b[k];
                gb[k] = s * d1 + 2.0 * m * v * a[n + k];
                gb[n + k] = s * d2 - 2.0 * m * v * a[k];
            }
            ga[2 * n] = -2.0 * m * v;
            gb[2 * n] = 2.0 * m * v;
            if i > 0 {
                for (g, d) in grad[(i - 1) * w..i * w].iter_mut().zip(&ga) {
                    *g += d;
                }
            }
            if i + 1 < self.steps {
                for (g, d) in grad[i * w..(i + 1) * w].iter_mut().zip(&gb) {
                    *g += d;
                }
            }
        }
        (value, grad)
    }

    /// Interior nodes of the straight coordinate segment.
    pub fn straight(&self) -> Vec<f64> {
        let w = self.width();
        let mut x = vec![0.0; self.dimension()];
        for i in 1..self.steps {
            let s = i as f64 / self.steps as f64;
            for c in 0..w {
                x[(i - 1) * w + c] = self.start[c] + s * (self.end[c] - self.start[c]);
            }
        }
        x
    }

    pub fn flatten_nodes(&self, nodes: &[GroupPoint]) -> Vec<f64> {
        let n = self.weights.len();
        nodes[1..nodes.len() - 1]
            .iter()
            .flat_map(|p| {
                let (h1, h2, t) = dense_point(p, n);
                h1.into_iter().chain(h2).chain(std::iter::once(t))
            })
            .collect()
    }

    pub fn nodes(&self, x: &[f64]) -> Vec<GroupPoint> {
        let n = self.weights.len();
        (0..=self.steps)
            .map(|i| {
                let p = self.node(x, i);
                sparse_point(&p[..n], &p[n..2 * n], p[2 * n])
            })
            .collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Descent {
    iterations: usize,
    converged: bool,
}

/// Gradient descent with Barzilai–Borwein step proposals and Armijo
/// backtracking. `x` is updated in place.
fn minimize<F>(mut f: F, x: &mut Vec<f64>, max_iterations: usize, tolerance: f64) -> Descent
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (mut fx, mut g) = f(x);
    let g0 = norm(&g).max(1.0);
    let mut step = 1.0 / g0;
    for it in 0..max_iterations {
        let gn = norm(&g);
        if gn <= tolerance * g0 {
            return Descent {
                iterations: it,
                converged: true,
            };
        }
        let gg = gn * gn;
        let (x_new, f_new, g_new) = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let (ft, gt) = f(&trial);
            if ft <= fx - 1e-4 * step * gg {
                break (trial, ft, gt);
            }
            step *= 0.5;
            if step * gn < 1e-16 * (1.0 + norm(x)) {
                // no representable decrease left along the gradient
                return Descent {
                    iterations: it,
                    converged: true,
                };
            }
        };
        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * step };
        *x = x_new;
        fx = f_new;
        g = g_new;
    }
    Descent {
        iterations: max_iterations,
        converged: false,
    }
}

/// Modes used by the endpoints plus the highest available mode, which
/// carries the vertical loop.
fn active_modes(target: &GroupPoint, modes: usize) -> Vec<usize> {
    let mut active: Vec<usize> = target.h1.support().chain(target.h2.support()).map(|k| k as usize).collect();
    active.push(modes);
    active.sort_unstable();
    active.dedup();
    active
}

/// Straight horizontal run to `(q₁, q₂, 0)` followed by a discretised copy
/// of the glued loop in the top mode, scaled to close the vertical gap
/// exactly. Returns flattened controls.
fn control_seed(obj: &ControlObjective, target: &GroupPoint) -> Vec<f64> {
    let (n, m) = (obj.modes(), obj.steps);
    let (q1, q2, s) = dense_point(target, n);
    let mut x = vec![0.0; obj.dimension()];
    let loop_steps = if s != 0.0 && m >= 4 { m - m / 2 } else { 0 };
    let straight_steps = m - loop_steps;
    let rate = m as f64 / straight_steps as f64;
    for i in 0..straight_steps {
        for k in 0..n {
            x[2 * i * n + k] = rate * q1[k];
            x[(2 * i + 1) * n + k] = rate * q2[k];
        }
    }
    if loop_steps == 0 {
        return x;
    }
    let shape = glued_family(n as u64, 1.0).expect("valid family parameters");
    let pts: Vec<(f64, f64)> = (0..=loop_steps)
        .map(|i| {
            let p = shape.evaluate(i as f64 / loop_steps as f64);
            (p.h1.get(n as u64), p.h2.get(n as u64))
        })
        .collect();
    let dt = 1.0 / m as f64;
    let controls: Vec<(f64, f64)> = pts.windows(2).map(|w| ((w[1].0 - w[0].0) / dt, (w[1].1 - w[0].1) / dt)).collect();
    let area: f64 = pts
        .iter()
        .zip(&controls)
        .map(|(p, u)| dt * (p.0 * u.1 - p.1 * u.0))
        .sum();
    let scale = (s.abs() / area).sqrt();
    for (j, (u1, u2)) in controls.into_iter().enumerate() {
        let i = straight_steps + j;
        // swapping the components reverses the orientation of the loop
        let (u1, u2) = if s > 0.0 { (u1, u2) } else { (u2, u1) };
        x[2 * i * n + n - 1] += scale * u1;
        x[(2 * i + 1) * n + n - 1] += scale * u2;
    }
    x
}

fn perturb(x: &mut [f64], modes: usize, active: &[usize], amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = amplitude * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for (idx, v) in x.iter_mut().enumerate() {
        if active.contains(&(idx % modes + 1)) {
            *v += scale * rng.gen_range(-1.0..1.0);
        }
    }
}

fn solve_subriemannian(problem: &PathProblem, target: &GroupPoint, lower: f64) -> Result<OptimizationReport> {
    let settings = &problem.settings;
    let n = problem.modes as usize;
    let mut obj = ControlObjective::new(&problem.metric.weight, n, problem.nodes, &GroupPoint::identity(), target);
    let mut seed = control_seed(&obj, target);
    obj.project(&mut seed, 20);
    let seed_error = norm(&obj.constraint(&seed));

    let mut x = seed.clone();
    perturb(&mut x, n, &active_modes(target, n), settings.perturbation, problem.seed);

    let mut iterations = 0;
    let mut penalty = norm(&obj.constraint(&x));
    let mut inner_converged = false;
    obj.penalty = settings.initial_penalty;
    for _ in 0..settings.max_rounds {
        let budget = settings.inner_iterations.min(settings.max_iterations.saturating_sub(iterations));
        let run = minimize(|v| obj.value_and_gradient(v), &mut x, budget, settings.gradient_tolerance);
        iterations += run.iterations;
        inner_converged = run.converged;
        let c = obj.constraint(&x);
        penalty = norm(&c);
        if penalty <= settings.penalty_threshold && run.converged {
            break;
        }
        if iterations >= settings.max_iterations {
            break;
        }
        for (l, ci) in obj.multipliers.iter_mut().zip(&c) {
            *l += obj.penalty * ci;
        }
        obj.penalty *= 2.0;
    }
    if penalty > settings.penalty_threshold {
        return Err(Error::NonConvergence { iterations, penalty });
    }
    obj.project(&mut x, 20);

    // the exactly feasible seed is itself an admissible path
    let (x, converged) = if seed_error < 1e-12 && obj.length(&seed) < obj.length(&x) {
        (seed, false)
    } else {
        (x, inner_converged)
    };
    let path = obj.to_path(&x).nodes();
    let endpoint_error = path.last().expect("nonempty").distance_sup(target);
    Ok(OptimizationReport {
        upper_bound: obj.length(&x),
        lower_bound: lower,
        iterations,
        converged,
        endpoint_error,
        metric: MetricKind::SubRiemannian,
        modes: problem.modes,
        nodes: problem.nodes,
        seed: problem.seed,
        path,
    })
}

fn solve_riemannian(problem: &PathProblem, target: &GroupPoint, lower: f64) -> Result<OptimizationReport> {
    let settings = &problem.settings;
    let n = problem.modes as usize;
    let obj = PolylineObjective::new(&problem.metric.weight, n, problem.nodes, &GroupPoint::identity(), target);

    let mut straight = obj.straight();
    {
        // perturb only the horizontal coordinates of the active modes
        let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
        let active = active_modes(target, n);
        let w = 2 * n + 1;
        let scale = settings.perturbation * (1.0 + target.t.abs() + target.h1.norm() + target.h2.norm());
        for (idx, v) in straight.iter_mut().enumerate() {
            let c = idx % w;
            if c < 2 * n && active.contains(&(c % n + 1)) {
                *v += scale * rng.gen_range(-1.0..1.0);
            }
        }
    }

    // a horizontal path is admissible for d, so the sub-Riemannian optimum
    // seeds a second descent and keeps d ≤ ρ at equal budgets
    let sub = PathProblem {
        metric: MetricSpec::new(problem.metric.weight.clone(), MetricKind::SubRiemannian),
        start: GroupPoint::identity(),
        end: target.clone(),
        ..problem.clone()
    };
    let horizontal = solve_subriemannian(&sub, target, lower)?;
    let mut iterations = horizontal.iterations;

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for mut x in [straight, obj.flatten_nodes(&horizontal.path)] {
        let before = obj.length(&x);
        let start = x.clone();
        let budget = settings.max_iterations.saturating_sub(iterations);
        let run = minimize(|v| obj.value_and_gradient(v), &mut x, budget, settings.gradient_tolerance);
        iterations += run.iterations;
        let (len, x) = if obj.length(&x) <= before {
            (obj.length(&x), x)
        } else {
            (before, start)
        };
        if best.as_ref().is_none_or(|(l, _, _)| len < *l) {
            best = Some((len, x, run.converged));
        }
    }
    let (upper, x, converged) = best.expect("two seeds were tried");
    let path = obj.nodes(&x);
    Ok(OptimizationReport {
        upper_bound: upper,
        lower_bound: lower,
        iterations,
        converged,
        endpoint_error: path.last().expect("nonempty").distance_sup(target),
        metric: MetricKind::Riemannian,
        modes: problem.modes,
        nodes: problem.nodes,
        seed: problem.seed,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(k: u64) -> SeqVec {
        SeqVec::basis(k)
    }

    fn arc() -> f64 {
        (2f64.sqrt() + 1f64.asinh()) / 2.0
    }

    #[test]
    fn lower_bound_examples() {
        let w = WeightRule::default();
        let id = GroupPoint::identity();
        assert_eq!(lower_bound_horizontal(&w, &id, &GroupPoint::new(e(1), SeqVec::zero(), 5.0)), 1.0);
        assert_eq!(lower_bound_horizontal(&w, &id, &GroupPoint::vertical(2.5)), 0.0);
        let b = lower_bound_horizontal(&w, &id, &GroupPoint::new(e(3), SeqVec::zero(), 0.0));
        assert!((b - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vertical_bound_examples() {
        let b = vertical_shift_upper_bound(100, 1.0).unwrap();
        assert!((b - 2.0 * 3f64.sqrt() * arc() / 10.0).abs() < 1e-12);
        assert!((b - 0.397607357595).abs() < 1e-11);
        assert!(vertical_shift_upper_bound(1_000_000, 1.0).unwrap() < 0.004);
        let third = vertical_shift_upper_bound(9, 1.0 / 3.0).unwrap();
        assert!((third - 2.0 * arc() / 3.0).abs() < 1e-12);
        assert!(vertical_shift_upper_bound(3, 0.0).is_err());
    }

    #[test]
    fn left_reduce_examples() {
        let (p1, p2) = (e(2).scale(1.5), e(4));
        let (a, b) = left_reduce(
            &GroupPoint::new(p1.clone(), p2.clone(), 0.2),
            &GroupPoint::new(p1.clone(), p2.clone(), 1.7),
        );
        assert!(a.is_identity());
        assert!(b.distance_sup(&GroupPoint::vertical(1.5)) < 1e-15);
        let p = GroupPoint::new(e(1), e(5), -3.0);
        let (a, b) = left_reduce(&p, &p);
        assert!(a.is_identity() && b.is_identity());
        let (_, b) = left_reduce(
            &GroupPoint::new(e(1), SeqVec::zero(), 0.0),
            &GroupPoint::new(e(1), e(2), 0.0),
        );
        assert_eq!(b, GroupPoint::new(SeqVec::zero(), e(2), 0.0));
    }

    #[test]
    fn degenerate_problem_short_circuits() {
        let p = GroupPoint::new(e(2), e(1), 0.4);
        let problem = PathProblem::new(p.clone(), p.clone(), MetricSpec::subriemannian(), 4, 8, 0).unwrap();
        let r = estimate_distance(&problem).unwrap();
        assert_eq!(r.upper_bound, 0.0);
        assert_eq!(r.iterations, 0);
        assert!(r.path.iter().all(|node| *node == p));
    }

    #[test]
    fn problem_validation() {
        let id = GroupPoint::identity();
        let far = GroupPoint::new(e(9), SeqVec::zero(), 0.0);
        assert!(PathProblem::new(id.clone(), far, MetricSpec::riemannian(), 4, 8, 0).is_err());
        assert!(PathProblem::new(id.clone(), id.clone(), MetricSpec::riemannian(), 4, 1, 0).is_err());
        assert!(PathProblem::new(id.clone(), id, MetricSpec::riemannian(), 0, 8, 0).is_err());
    }

    #[test]
    fn control_path_nodes_match_objective() {
        let w = WeightRule::default();
        let target = GroupPoint::new(e(1).scale(0.3), e(2).scale(-0.2), 0.7);
        let obj = ControlObjective::new(&w, 3, 12, &GroupPoint::identity(), &target);
        let seed = control_seed(&obj, &target);
        let path = obj.to_path(&seed);
        let end = path.endpoint();
        let c = obj.constraint(&seed);
        assert!((end.t - target.t - c[6]).abs() < 1e-14);
        assert!((path.g_length(&w) - obj.length(&seed)).abs() < 1e-14);
        // the seed reaches the target exactly
        assert!(norm(&c) < 1e-12, "{c:?}");
        // and its polyline is horizontal
        assert!(path.to_curve().max_horizontality_residual(241) < 1e-12);
    }

    #[test]
    fn projection_restores_feasibility() {
        let w = WeightRule::default();
        let target = GroupPoint::new(e(1).scale(0.5), SeqVec::zero(), -0.4);
        let obj = ControlObjective::new(&w, 2, 16, &GroupPoint::identity(), &target);
        let mut x = control_seed(&obj, &target);
        perturb(&mut x, 2, &[1, 2], 1e-2, 7);
        assert!(norm(&obj.constraint(&x)) > 1e-4);
        assert!(obj.project(&mut x, 20) < 1e-13);
    }
}
