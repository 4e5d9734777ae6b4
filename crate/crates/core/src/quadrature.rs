//! Composite Gauss–Legendre quadrature with panel doubling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f` with `panels` equal panels. Stops at the first error from `f`.
    pub fn integrate<F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + 0.5 * h * x)?;
            }
            total += 0.5 * h * acc;
        }
        Ok(total)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Points per panel.
    pub order: usize,
    /// Initial panel count, doubled until successive estimates agree.
    pub panels: usize,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 16,
            panels: 8,
            tolerance: 1e-10,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    /// `|I(2P) − I(P)|` at the final refinement.
    pub error_estimate: f64,
    pub panels: usize,
}

const MAX_PANELS: usize = 1 << 14;

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::invalid("quadrature order must be ≥ 2"));
        }
        if self.panels < 1 {
            return Err(Error::invalid("quadrature needs at least one panel"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        Ok(())
    }

    /// Integrates `f` over `[a, b]`, doubling panels until two successive
    /// estimates differ by less than `tolerance` (or a panel cap is hit, in
    /// which case the last estimate and its error are returned).
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<Integral>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        self.validate()?;
        let rule = GaussLegendre::new(self.order);
        let mut panels = self.panels;
        let mut prev = rule.integrate(a, b, panels, &mut f)?;
        loop {
            panels *= 2;
            let next = rule.integrate(a, b, panels, &mut f)?;
            let err = (next - prev).abs();
            if err < self.tolerance || panels >= MAX_PANELS {
                return Ok(Integral {
                    value: next,
                    error_estimate: err,
                    panels,
                });
            }
            prev = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        for order in [2usize, 3, 5, 8, 16] {
            let rule = GaussLegendre::new(order);
            let wsum: f64 = rule.weights().iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "order {order}");
            // degree 2n-1 integrated exactly
            let deg = 2 * order - 1;
            let got = rule.integrate(0.0, 1.0, 1, |x| Ok(x.powi(deg as i32))).unwrap();
            assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn nodes_symmetric_sorted() {
        let rule = GaussLegendre::new(7);
        let n = rule.nodes();
        assert!(n.windows(2).all(|w| w[0] < w[1]));
        for i in 0..7 {
            assert!((n[i] + n[6 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn adaptive_sqrt_integrand() {
        // ∫₀¹ √(1+t²) dt = (√2 + asinh 1)/2
        let exact = (2f64.sqrt() + 1f64.asinh()) / 2.0;
        let got = QuadratureSpec::default()
            .integrate(0.0, 1.0, |t| Ok((1.0 + t * t).sqrt()))
            .unwrap();
        assert!((got.value - exact).abs() < 1e-13);
        assert!(got.error_estimate < 1e-10);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = QuadratureSpec {
            order: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            panels: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
