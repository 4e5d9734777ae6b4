//! Left-invariant metrics and curve length.
//!
//! At the identity the weak Riemannian product is
//! `σ₀(X, Y) = η(x₁,y₁) + η(x₂,y₂) + x³y³` and the sub-Riemannian product
//! `g₀` is its restriction to horizontal vectors. At any other point both
//! are evaluated on the pullback `(dL_{p⁻¹})_p v`.

use serde::{Deserialize, Serialize};

use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::group::{LieVector, TangentVector};
use crate::quadrature::Integral;
use crate::seqvec::WeightRule;

pub use crate::quadrature::QuadratureSpec;

/// Residual allowed on a vector that is declared horizontal.
pub const HORIZONTAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "riem")]
    Riemannian,
    #[serde(rename = "subriem")]
    SubRiemannian,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricKind::Riemannian => "riem",
            MetricKind::SubRiemannian => "subriem",
        })
    }
}

#[derive(Clone, Debug)]
pub struct MetricSpec {
    pub weight: WeightRule,
    pub kind: MetricKind,
}

impl MetricSpec {
    pub fn new(weight: WeightRule, kind: MetricKind) -> Self {
        Self { weight, kind }
    }

    /// `σ` with `a_k = 1/k`.
    pub fn riemannian() -> Self {
        Self::new(WeightRule::default(), MetricKind::Riemannian)
    }

    /// `g` with `a_k = 1/k`.
    pub fn subriemannian() -> Self {
        Self::new(WeightRule::default(), MetricKind::SubRiemannian)
    }

    /// Norm of `v` at its base point under this metric.
    pub fn norm_at(&self, v: &TangentVector) -> Result<f64> {
        match self.kind {
            MetricKind::Riemannian => Ok(sigma_norm(&self.weight, &v.pullback())),
            MetricKind::SubRiemannian => g_norm_at(self, v),
        }
    }
}

/// `σ₀(X, Y)`.
pub fn sigma0(weight: &WeightRule, x: &LieVector, y: &LieVector) -> f64 {
    weight.inner(&x.x1, &y.x1) + weight.inner(&x.x2, &y.x2) + x.x3 * y.x3
}

pub fn sigma_norm(weight: &WeightRule, x: &LieVector) -> f64 {
    sigma_norm_squared(weight, x).sqrt()
}

pub fn sigma_norm_squared(weight: &WeightRule, x: &LieVector) -> f64 {
    weight.norm_squared(&x.x1) + weight.norm_squared(&x.x2) + x.x3 * x.x3
}

/// `g₀` on horizontal parts; the vertical components are ignored.
pub fn g0(weight: &WeightRule, x: &LieVector, y: &LieVector) -> f64 {
    weight.inner(&x.x1, &y.x1) + weight.inner(&x.x2, &y.x2)
}

/// `σ_p(v, w)`. Both vectors must share a base point.
pub fn sigma_inner_at(m: &MetricSpec, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    if v.base != w.base {
        return Err(Error::invalid("tangent vectors are based at different points"));
    }
    Ok(sigma0(&m.weight, &v.pullback(), &w.pullback()))
}

/// `‖v‖_g = √(‖v₁‖²_η + ‖v₂‖²_η)` for horizontal `v`.
pub fn g_norm_at(m: &MetricSpec, v: &TangentVector) -> Result<f64> {
    let residual = v.horizontality_residual();
    if residual.abs() > HORIZONTAL_TOLERANCE {
        return Err(Error::NotHorizontal {
            residual: residual.abs(),
            tolerance: HORIZONTAL_TOLERANCE,
        });
    }
    Ok((m.weight.norm_squared(&v.v1) + m.weight.norm_squared(&v.v2)).sqrt())
}

/// `∫₀¹ ‖γ̇(t)‖ dt` under `m`, piece by piece.
pub fn length(m: &MetricSpec, curve: &Curve, q: &QuadratureSpec) -> Result<f64> {
    length_with_error(m, curve, q).map(|i| i.value)
}

/// Like [`length`] but also reports the summed refinement error estimate
/// and the total panel count.
pub fn length_with_error(m: &MetricSpec, curve: &Curve, q: &QuadratureSpec) -> Result<Integral> {
    q.validate()?;
    let mut total = Integral {
        value: 0.0,
        error_estimate: 0.0,
        panels: 0,
    };
    for (index, piece) in curve.pieces().iter().enumerate() {
        let (a, b) = piece.domain();
        let part = q.integrate(a, b, |t| m.norm_at(&curve.piece_derivative(index, t)))?;
        total.value += part.value;
        total.error_estimate += part.error_estimate;
        total.panels += part.panels;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{constant_curve, gamma_family, glue, alpha_family, straight_segment};
    use crate::group::{left_translate_diff, GroupPoint};
    use crate::seqvec::SeqVec;
    use crate::testutil::{lie, point};
    use proptest::prelude::*;

    /// `∫₀¹ √(1+t²) dt` from the antiderivative `(t√(1+t²) + asinh t)/2`.
    fn arc_integral() -> f64 {
        (2f64.sqrt() + 1f64.asinh()) / 2.0
    }

    #[test]
    fn sigma_examples() {
        let m = MetricSpec::riemannian();
        let id = GroupPoint::identity();
        let e3 = LieVector::e3().at(&id);
        assert_eq!(sigma_inner_at(&m, &e3, &e3).unwrap(), 1.0);
        let e14 = LieVector::e1(4).at(&id);
        assert!((sigma_inner_at(&m, &e14, &e14).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn g_norm_examples() {
        let m = MetricSpec::subriemannian();
        let (n, c, t) = (4u64, 1.3, 0.6);
        let curve = gamma_family(n, c).unwrap();
        let v = curve.derivative(t);
        let expected = (t * t * c * c / n as f64 + c * c / n as f64).sqrt();
        assert!((g_norm_at(&m, &v).unwrap() - expected).abs() < 1e-14);
        assert_eq!(g_norm_at(&m, &TangentVector::default()).unwrap(), 0.0);
        let vertical = TangentVector::at_identity(SeqVec::zero(), SeqVec::zero(), 1.0);
        assert!(matches!(g_norm_at(&m, &vertical), Err(Error::NotHorizontal { .. })));
    }

    #[test]
    fn length_examples() {
        let q = QuadratureSpec::default();
        let g = MetricSpec::subriemannian();
        let s = MetricSpec::riemannian();
        let gamma = gamma_family(4, 1.0).unwrap();
        let lg = length(&g, &gamma, &q).unwrap();
        assert!((lg - arc_integral() / 2.0).abs() < 1e-12);
        assert!((lg - 0.5738967873).abs() < 1e-10);
        let ls = length(&s, &gamma, &q).unwrap();
        assert!((ls - lg).abs() < 1e-10);
        let p = GroupPoint::new(SeqVec::basis(2), SeqVec::zero(), 3.0);
        assert_eq!(length(&s, &constant_curve(p), &q).unwrap(), 0.0);
    }

    #[test]
    fn subriemannian_length_rejects_vertical_curve() {
        let seg = straight_segment(&GroupPoint::identity(), &GroupPoint::vertical(1.0));
        let err = length(&MetricSpec::subriemannian(), &seg, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(err, Error::NotHorizontal { .. }));
        let ls = length(&MetricSpec::riemannian(), &seg, &QuadratureSpec::default()).unwrap();
        assert!((ls - 1.0).abs() < 1e-13);
    }

    #[test]
    fn glued_length_is_additive() {
        let q = QuadratureSpec::default();
        let g = MetricSpec::subriemannian();
        let (a, b) = (gamma_family(6, 0.8).unwrap(), alpha_family(6, 0.8).unwrap());
        let total = length(&g, &glue(&a, &b).unwrap(), &q).unwrap();
        let parts = length(&g, &a, &q).unwrap() + length(&g, &b, &q).unwrap();
        assert!((total - parts).abs() < 1e-12);
    }

    #[test]
    fn refinement_error_is_reported() {
        let q = QuadratureSpec {
            order: 2,
            panels: 1,
            tolerance: 1e-6,
        };
        let r = length_with_error(&MetricSpec::subriemannian(), &gamma_family(1, 1.0).unwrap(), &q).unwrap();
        assert!(r.error_estimate < 1e-6);
        assert!((r.value - arc_integral()).abs() < 1e-6);
    }

    #[test]
    fn reparameterization_invariance() {
        let q = QuadratureSpec::default();
        let g = MetricSpec::subriemannian();
        let curve = gamma_family(3, 2.0).unwrap();
        let squared = curve.reparameterize(|t| (t * t, 2.0 * t));
        let a = length(&g, &curve, &q).unwrap();
        let b = length(&g, &squared, &q).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sigma_left_invariant(p in point(), x in lie(), y in lie()) {
            let m = MetricSpec::riemannian();
            let id = GroupPoint::identity();
            let at_id = sigma_inner_at(&m, &x.at(&id), &y.at(&id)).unwrap();
            let vx = left_translate_diff(&p, &x.at(&id));
            let vy = left_translate_diff(&p, &y.at(&id));
            let at_p = sigma_inner_at(&m, &vx, &vy).unwrap();
            prop_assert!((at_id - at_p).abs() < 1e-9 * (1.0 + at_id.abs()));
        }

        #[test]
        fn length_left_invariant(p in point(), n in 1u64..12, c in 0.2f64..3.0) {
            let q = QuadratureSpec::default();
            let curve = glue(&gamma_family(n, c).unwrap(), &alpha_family(n, c).unwrap()).unwrap();
            let moved = curve.left_translate(&p);
            for m in [MetricSpec::riemannian(), MetricSpec::subriemannian()] {
                let a = length(&m, &curve, &q).unwrap();
                let b = length(&m, &moved, &q).unwrap();
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
