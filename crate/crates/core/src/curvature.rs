//! Sectional curvature of the left-invariant metric `σ` at the identity.
//!
//! The adjoint `B(X, Y) = ad(Y)*X` is defined by
//! `⟨[Y, Z], X⟩_σ = ⟨Z, B(X, Y)⟩_σ` for every `Z`. Only the vertical part of
//! `X` contributes: `B(X, Y) = 2x³ Σ_j (Y¹_j e²_j − Y²_j e¹_j)/a_j`.
//! For finitely supported inputs this is a finite sum. For symbolic
//! coefficient rules it may diverge, which [`divergence_probe`] detects.
//!
//! Curvature uses Arnold's formula on a `σ`-orthonormal pair,
//! `K = ⟨δ,δ⟩ + 2⟨α,β⟩ − 3⟨α,α⟩ − 4⟨B_X,B_Y⟩`.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{bracket, LieVector};
use crate::metric::{sigma0, sigma_norm};
use crate::seqvec::{SeqVec, WeightRule};

/// `B(X, Y)` for finitely supported `X`, `Y`.
pub fn adjoint_b(weight: &WeightRule, x: &LieVector, y: &LieVector) -> AdjointResult {
    AdjointResult::Value(AdjointValue {
        vector: adjoint(weight, x, y),
        norm_squared: None,
        tail_estimate: 0.0,
        symbolic: false,
    })
}

fn adjoint(weight: &WeightRule, x: &LieVector, y: &LieVector) -> LieVector {
    let s = 2.0 * x.x3;
    if s == 0.0 {
        return LieVector::zero();
    }
    let b1 = y.x2.map_indexed(|j, v| -s * v / weight.weight(j));
    let b2 = y.x1.map_indexed(|j, v| s * v / weight.weight(j));
    LieVector::new(b1, b2, 0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjointValue {
    /// The vector itself, or its truncation at the deepest probed index.
    pub vector: LieVector,
    /// `‖B‖²_σ` including the estimated tail, when the value came from a probe.
    pub norm_squared: Option<f64>,
    /// Estimated size of the omitted tail of `‖B‖²_σ`.
    pub tail_estimate: f64,
    /// Decided from a recognised power law rather than partial sums.
    pub symbolic: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceEvidence {
    /// `(m, S_m)` with `S_m` the squared `σ`-norm of the truncation at `m`.
    pub partial_sums: Vec<(u64, f64)>,
    pub reason: String,
    pub symbolic: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointResult {
    Value(AdjointValue),
    Divergent(DivergenceEvidence),
}

impl AdjointResult {
    pub fn value(&self) -> Option<&LieVector> {
        match self {
            AdjointResult::Value(v) => Some(&v.vector),
            AdjointResult::Divergent(_) => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, AdjointResult::Divergent(_))
    }
}

/// The terms of Arnold's formula for an orthonormalised pair.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBreakdown {
    pub delta: LieVector,
    pub arnold_beta: LieVector,
    pub arnold_alpha: LieVector,
    pub b_x: LieVector,
    pub b_y: LieVector,
    pub k: f64,
}

impl CurvatureBreakdown {
    /// `K` from the stored terms.
    pub fn recompute(&self, weight: &WeightRule) -> f64 {
        let ip = |a: &LieVector, b: &LieVector| sigma0(weight, a, b);
        ip(&self.delta, &self.delta) + 2.0 * ip(&self.arnold_alpha, &self.arnold_beta)
            - 3.0 * ip(&self.arnold_alpha, &self.arnold_alpha)
            - 4.0 * ip(&self.b_x, &self.b_y)
    }
}

/// `σ`-orthonormal basis of `span{X, Y}` by Gram–Schmidt.
pub fn orthonormalize(weight: &WeightRule, x: &LieVector, y: &LieVector) -> Result<(LieVector, LieVector)> {
    let nx = sigma_norm(weight, x);
    if !(nx > 1e-12) {
        return Err(Error::DegeneratePlane);
    }
    let u = x.scale(1.0 / nx);
    let r = y.axpy(-sigma0(weight, y, &u), &u);
    let nr = sigma_norm(weight, &r);
    if !(nr > 1e-12 * sigma_norm(weight, y).max(1.0)) {
        return Err(Error::DegeneratePlane);
    }
    Ok((u, r.scale(1.0 / nr)))
}

/// Sectional curvature of `span{X, Y}` under `σ`.
pub fn arnold_curvature(weight: &WeightRule, x: &LieVector, y: &LieVector) -> Result<CurvatureBreakdown> {
    let (x, y) = orthonormalize(weight, x, y)?;
    let bxy = adjoint(weight, &x, &y);
    let byx = adjoint(weight, &y, &x);
    let mut out = CurvatureBreakdown {
        delta: bxy.add(&byx).scale(0.5),
        arnold_beta: bxy.sub(&byx).scale(0.5),
        arnold_alpha: bracket(&x, &y).scale(0.5),
        b_x: adjoint(weight, &x, &x).scale(0.5),
        b_y: adjoint(weight, &y, &y).scale(0.5),
        k: 0.0,
    };
    out.k = out.recompute(weight);
    Ok(out)
}

/// `(Σ_{j≤k} j⁻³)^{-1/2} Σ_{j≤k} e¹_j/j`, of unit `σ`-norm.
pub fn w_k(k: u64) -> LieVector {
    let norm: f64 = (1..=k).rev().map(|j| (j as f64).powi(-3)).sum::<f64>().sqrt();
    LieVector::new(SeqVec::from_fn(k, |j| 1.0 / (j as f64 * norm)), SeqVec::zero(), 0.0)
}

/// `K(W_k, e³)` under the default weight; equals `H_k / Σ_{j≤k} j⁻³`.
pub fn curvature_wk_e3(k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::invalid("k must be ≥ 1"));
    }
    let weight = WeightRule::default();
    let w = w_k(k);
    let norm = sigma_norm(&weight, &w);
    debug_assert!((norm - 1.0).abs() < 1e-9, "‖W_k‖_σ = {norm}");
    Ok(arnold_curvature(&weight, &w, &LieVector::e3())?.k)
}

/// `j ↦ (c₁/j^p, c₂/j^p)`; recognised by the probe's exact path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLaw {
    pub c1: f64,
    pub c2: f64,
    pub exponent: f64,
}

/// A possibly infinite vector `Σ_j (c¹_j e¹_j + c²_j e²_j) + v e³` given by
/// a coefficient rule.
#[derive(Clone)]
pub struct CoefficientRule {
    coefficients: Arc<dyn Fn(u64) -> (f64, f64) + Send + Sync>,
    pub vertical: f64,
    /// Coefficients vanish beyond this index.
    pub support_end: Option<u64>,
    pub power_law: Option<PowerLaw>,
    pub description: String,
}

impl std::fmt::Debug for CoefficientRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientRule")
            .field("description", &self.description)
            .field("vertical", &self.vertical)
            .field("support_end", &self.support_end)
            .finish()
    }
}

impl CoefficientRule {
    pub fn new(description: impl Into<String>, vertical: f64, rule: impl Fn(u64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self {
            coefficients: Arc::new(rule),
            vertical,
            support_end: None,
            power_law: None,
            description: description.into(),
        }
    }

    pub fn power_law(c1: f64, c2: f64, exponent: f64) -> Self {
        let mut rule = Self::new(format!("({c1}, {c2})/j^{exponent}"), 0.0, move |j| {
            let s = (j as f64).powf(-exponent);
            (c1 * s, c2 * s)
        });
        rule.power_law = Some(PowerLaw { c1, c2, exponent });
        rule
    }

    /// `W = Σ e¹_j/j`.
    pub fn w() -> Self {
        let mut rule = Self::power_law(1.0, 0.0, 1.0);
        rule.description = "W = sum e1_j/j".to_string();
        rule
    }

    pub fn vertical(s: f64) -> Self {
        let mut rule = Self::new(format!("{s} e3"), s, |_| (0.0, 0.0));
        rule.support_end = Some(0);
        rule
    }

    pub fn from_lie(v: &LieVector) -> Self {
        let (x1, x2) = (v.x1.clone(), v.x2.clone());
        let mut rule = Self::new("finitely supported", v.x3, move |j| (x1.get(j), x2.get(j)));
        rule.support_end = Some(v.max_index());
        rule
    }

    /// The same rule with its power-law tag removed, forcing numeric probing.
    pub fn opaque(mut self) -> Self {
        self.power_law = None;
        self
    }

    pub fn coefficients(&self, j: u64) -> (f64, f64) {
        (self.coefficients)(j)
    }

    pub fn truncate(&self, m: u64) -> LieVector {
        let m = self.support_end.map_or(m, |end| end.min(m));
        let mut x1 = Vec::with_capacity(m as usize);
        let mut x2 = Vec::with_capacity(m as usize);
        for j in 1..=m {
            let (a, b) = self.coefficients(j);
            x1.push(a);
            x2.push(b);
        }
        LieVector::new(SeqVec::from_dense(&x1), SeqVec::from_dense(&x2), self.vertical)
    }
}

/// Deepest supported probe (`2^depth` terms are materialised).
pub const MAX_PROBE_DEPTH: u32 = 24;

/// Heuristic convergence test for the series `B(X, Y)`.
///
/// Partial sums `S_m = ‖B_m‖²_σ` of the truncation at `m` are taken at
/// `m = 2, 4, …, 2^depth`. The series is declared divergent when each of
/// the last four dyadic increments is at least half its predecessor, or
/// when `S` exceeds `1e12`; convergent when each is below half. Power laws
/// under power weights are decided exactly instead.
pub fn divergence_probe(weight: &WeightRule, x: &CoefficientRule, y: &CoefficientRule, depth: u32) -> Result<AdjointResult> {
    if depth < 2 {
        return Err(Error::invalid("probe depth must be ≥ 2"));
    }
    if depth > MAX_PROBE_DEPTH {
        return Err(Error::invalid(format!("probe depth must be ≤ {MAX_PROBE_DEPTH}")));
    }
    let top = 1u64 << depth;
    let s = 2.0 * x.vertical;
    let term = |j: u64| {
        let (c1, c2) = y.coefficients(j);
        s * s * (c1 * c1 + c2 * c2) / weight.weight(j)
    };

    let mut partial_sums = Vec::with_capacity(depth as usize);
    let mut acc = 0.0;
    let mut next = 1u64;
    for m in (1..=depth).map(|d| 1u64 << d) {
        while next <= m {
            acc += term(next);
            next += 1;
        }
        partial_sums.push((m, acc));
    }
    let finite = s == 0.0 || y.support_end.is_some_and(|end| end <= top);
    let vector = || adjoint(weight, &LieVector::new(SeqVec::zero(), SeqVec::zero(), x.vertical), &y.truncate(top));
    let value = |norm_squared, tail_estimate, symbolic| {
        Ok(AdjointResult::Value(AdjointValue {
            vector: vector(),
            norm_squared: Some(norm_squared),
            tail_estimate,
            symbolic,
        }))
    };
    if finite {
        return value(acc, 0.0, false);
    }

    if let (Some(law), Some(q)) = (y.power_law, weight_exponent(weight)) {
        // terms are s²(c₁² + c₂²) j^(q − 2p)
        let scale = s * s * (law.c1 * law.c1 + law.c2 * law.c2);
        let r = 2.0 * law.exponent - q;
        if scale == 0.0 {
            return value(0.0, 0.0, true);
        }
        if r <= 1.0 {
            return Ok(AdjointResult::Divergent(DivergenceEvidence {
                partial_sums,
                reason: format!("terms decay like j^-{r}, not summable"),
                symbolic: true,
            }));
        }
        let tail = scale * zeta_tail(r, top);
        return value(acc + tail, tail, true);
    }

    if acc > 1e12 {
        return Ok(AdjointResult::Divergent(DivergenceEvidence {
            partial_sums,
            reason: "partial sums exceed 1e12".to_string(),
            symbolic: false,
        }));
    }
    let increments: Vec<f64> = partial_sums.windows(2).map(|w| w[1].1 - w[0].1).collect();
    if increments.len() < 5 {
        return Err(Error::InconclusiveProbe { depth });
    }
    let last = &increments[increments.len() - 5..];
    let ratios: Vec<f64> = last
        .windows(2)
        .map(|w| if w[0] == 0.0 { if w[1] == 0.0 { 0.0 } else { f64::INFINITY } } else { w[1] / w[0] })
        .collect();
    if ratios.iter().all(|&r| r >= 0.5) {
        return Ok(AdjointResult::Divergent(DivergenceEvidence {
            partial_sums,
            reason: "dyadic increments do not decay".to_string(),
            symbolic: false,
        }));
    }
    if ratios.iter().all(|&r| r < 0.5) {
        let d = last[4];
        let r = ratios[3];
        let tail = d * r / (1.0 - r);
        return value(acc + tail, tail, false);
    }
    Err(Error::InconclusiveProbe { depth })
}

/// `q` with `a_j = j^(-q)`, when the weight has that form.
fn weight_exponent(weight: &WeightRule) -> Option<f64> {
    match weight {
        WeightRule::InverseIndex => Some(1.0),
        WeightRule::Power { exponent } => Some(*exponent),
        WeightRule::Uniform => Some(0.0),
        WeightRule::Custom { .. } => None,
    }
}

/// `Σ_{j>n} j^(-s)` for `s > 1` by Euler–Maclaurin.
fn zeta_tail(s: f64, n: u64) -> f64 {
    let n = n as f64;
    n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
}

/// Largest principal angle between two planes under `σ`.
pub fn principal_angle(weight: &WeightRule, p: (&LieVector, &LieVector), q: (&LieVector, &LieVector)) -> Result<f64> {
    let (u1, u2) = orthonormalize(weight, p.0, p.1)?;
    let (v1, v2) = orthonormalize(weight, q.0, q.1)?;
    let ip = |a: &LieVector, b: &LieVector| sigma0(weight, a, b);
    let m = Matrix2::new(ip(&u1, &v1), ip(&u1, &v2), ip(&u2, &v1), ip(&u2, &v2));
    let smallest = m.singular_values().min().clamp(0.0, 1.0);
    Ok(smallest.acos())
}

/// Largest principal angle between `span{W_k, e³}` and
/// `span{W_∞ truncated at tail, e³}` under the default weight.
///
/// `W_k` is `σ`-orthogonal to `e³`, so the angle is that between `W_k` and
/// the truncated limit, `sin²θ = Σ_{k<j≤tail} j⁻³ / Σ_{j≤tail} j⁻³`; the
/// sums are streamed so no vector of length `tail` is built.
pub fn plane_convergence(k: u64, tail: u64) -> Result<f64> {
    if k < 1 || tail < k {
        return Err(Error::invalid("need 1 ≤ k ≤ tail"));
    }
    let cube = |j: u64| (j as f64).powi(-3);
    let rest: f64 = (k + 1..=tail).rev().map(cube).sum();
    let head: f64 = (1..=k).rev().map(cube).sum();
    Ok((rest / (head + rest)).sqrt().asin())
}

/// Sectional curvature at the identity computed from scratch in the
/// coordinates `(h₁, h₂, τ) ∈ ℝ^{2n+1}` of the truncated group: metric tensor
/// from left translation, Christoffel symbols and their derivatives by
/// central differences (Richardson-extrapolated over `h` and `h/2`), then
/// the Riemann tensor.
pub fn fd_levi_civita_oracle(weight: &WeightRule, n: u64, x: &LieVector, y: &LieVector, step: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("truncation must be ≥ 1"));
    }
    if x.max_index() > n || y.max_index() > n {
        return Err(Error::invalid("plane is not contained in the truncation"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step must be positive"));
    }
    orthonormalize(weight, x, y)?;
    let n = n as usize;
    let dim = 2 * n + 1;
    let weights: Vec<f64> = (1..=n as u64).map(|k| weight.weight(k)).collect();
    let flat = |v: &LieVector| {
        let mut c = v.x1.to_dense(n);
        c.extend(v.x2.to_dense(n));
        c.push(v.x3);
        c
    };
    let (xv, yv) = (flat(x), flat(y));
    let field = MetricField { n, weights };

    let origin = vec![0.0; dim];
    let gamma0 = field.christoffel(&origin, step);
    let dgamma = |h: f64| -> Vec<Vec<f64>> {
        (0..dim)
            .map(|mu| {
                let mut plus = origin.clone();
                let mut minus = origin.clone();
                plus[mu] = h;
                minus[mu] = -h;
                let (gp, gm) = (field.christoffel(&plus, step), field.christoffel(&minus, step));
                gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect()
    };
    let (coarse, fine) = (dgamma(step), dgamma(step / 2.0));
    let idx = |r: usize, a: usize, b: usize| (r * dim + a) * dim + b;
    let d = |mu: usize, i: usize| (4.0 * fine[mu][i] - coarse[mu][i]) / 3.0;

    // R^ρ_{σμν} = ∂_μΓ^ρ_{νσ} − ∂_νΓ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ},
    // contracted as ⟨R(X, Y)Y, X⟩.
    let g = field.metric(&origin);
    let x_low: Vec<f64> = (0..dim).map(|r| (0..dim).map(|l| g[(r, l)] * xv[l]).sum()).collect();
    let mut num = 0.0;
    for rho in 0..dim {
        if x_low[rho] == 0.0 {
            continue;
        }
        for sig in 0..dim {
            for mu in 0..dim {
                for nu in 0..dim {
                    let coeff = yv[sig] * xv[mu] * yv[nu];
                    if coeff == 0.0 {
                        continue;
                    }
                    let mut r = d(mu, idx(rho, nu, sig)) - d(nu, idx(rho, mu, sig));
                    for lam in 0..dim {
                        r += gamma0[idx(rho, mu, lam)] * gamma0[idx(lam, nu, sig)]
                            - gamma0[idx(rho, nu, lam)] * gamma0[idx(lam, mu, sig)];
                    }
                    num += x_low[rho] * coeff * r;
                }
            }
        }
    }
    let ip = |a: &[f64], b: &[f64]| -> f64 { (0..dim).map(|i| (0..dim).map(|j| a[i] * g[(i, j)] * b[j]).sum::<f64>()).sum() };
    let den = ip(&xv, &xv) * ip(&yv, &yv) - ip(&xv, &yv).powi(2);
    if !(den > 1e-24) {
        return Err(Error::DegeneratePlane);
    }
    Ok(num / den)
}

/// `g_p = Jᵀ G₀ J` with `J` the pullback `(v₁, v₂, v₃ − ⟨p₁,v₂⟩ + ⟨p₂,v₁⟩)`.
struct MetricField {
    n: usize,
    weights: Vec<f64>,
}

impl MetricField {
    fn metric(&self, p: &[f64]) -> DMatrix<f64> {
        let (n, dim) = (self.n, 2 * self.n + 1);
        let mut j = DMatrix::<f64>::identity(dim, dim);
        for k in 0..n {
            j[(dim - 1, k)] = p[n + k];
            j[(dim - 1, n + k)] = -p[k];
        }
        let mut g0 = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..n {
            g0[(k, k)] = self.weights[k];
            g0[(n + k, n + k)] = self.weights[k];
        }
        g0[(dim - 1, dim - 1)] = 1.0;
        j.transpose() * g0 * j
    }

    /// `Γ^ρ_{μν}` at `p`, flattened `[(ρ·dim + μ)·dim + ν]`, with metric
    /// derivatives by central differences.
    fn christoffel(&self, p: &[f64], h: f64) -> Vec<f64> {
        let dim = 2 * self.n + 1;
        let dg: Vec<DMatrix<f64>> = (0..dim)
            .map(|l| {
                let mut plus = p.to_vec();
                let mut minus = p.to_vec();
                plus[l] += h;
                minus[l] -= h;
                (self.metric(&plus) - self.metric(&minus)) / (2.0 * h)
            })
            .collect();
        let inv = self.metric(p).try_inverse().expect("the metric tensor is positive definite");
        let mut out = vec![0.0; dim * dim * dim];
        for rho in 0..dim {
            for mu in 0..dim {
                for nu in 0..dim {
                    let mut s = 0.0;
                    for lam in 0..dim {
                        s += inv[(rho, lam)] * (dg[mu][(lam, nu)] + dg[nu][(lam, mu)] - dg[lam][(mu, nu)]);
                    }
                    out[(rho * dim + mu) * dim + nu] = 0.5 * s;
                }
            }
        }
        out
    }
}
