//! Piecewise smooth curves `[0, 1] → H`.
//!
//! A [`Curve`] is an ordered list of pieces partitioning `[0, 1]`. Each piece
//! holds a path on its own local parameter `s ∈ [0, 1]` with a closed-form
//! position and velocity, so horizontality of the explicit families holds to
//! roundoff rather than to sampling accuracy.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{left_translate_diff, GroupPoint, TangentVector};
use crate::seqvec::SeqVec;

/// Endpoint gap accepted by [`glue`].
pub const GLUE_TOLERANCE: f64 = 1e-12;

/// A smooth path on the local parameter `s ∈ [0, 1]`.
pub trait PathFn: Send + Sync {
    fn position(&self, s: f64) -> GroupPoint;
    /// `(v₁, v₂, v₃)` of `dγ/ds`.
    fn velocity(&self, s: f64) -> (SeqVec, SeqVec, f64);
}

#[derive(Clone)]
pub struct Piece {
    start: f64,
    end: f64,
    path: Arc<dyn PathFn>,
}

impl Piece {
    pub fn domain(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn local(&self, t: f64) -> f64 {
        ((t - self.start) / (self.end - self.start)).clamp(0.0, 1.0)
    }
}

#[derive(Clone)]
pub struct Curve {
    pieces: Vec<Piece>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("domains", &self.pieces.iter().map(Piece::domain).collect::<Vec<_>>())
            .finish()
    }
}

impl Curve {
    pub fn from_path(path: impl PathFn + 'static) -> Self {
        Self {
            pieces: vec![Piece {
                start: 0.0,
                end: 1.0,
                path: Arc::new(path),
            }],
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_index(&self, t: f64) -> usize {
        self.pieces
            .iter()
            .position(|p| t < p.end)
            .unwrap_or(self.pieces.len() - 1)
    }

    pub fn evaluate(&self, t: f64) -> GroupPoint {
        let piece = &self.pieces[self.piece_index(t)];
        piece.path.position(piece.local(t))
    }

    /// `γ̇(t)`, taken from the piece whose half-open domain contains `t`
    /// (the last piece at `t = 1`).
    pub fn derivative(&self, t: f64) -> TangentVector {
        self.piece_derivative(self.piece_index(t), t)
    }

    /// `γ̇(t)` computed from piece `index`, which may be evaluated at its
    /// closed-domain endpoints.
    pub fn piece_derivative(&self, index: usize, t: f64) -> TangentVector {
        let piece = &self.pieces[index];
        let s = piece.local(t);
        let rate = 1.0 / (piece.end - piece.start);
        let (v1, v2, v3) = piece.path.velocity(s);
        TangentVector::new(piece.path.position(s), v1.scale(rate), v2.scale(rate), v3 * rate)
    }

    pub fn start_point(&self) -> GroupPoint {
        let first = &self.pieces[0];
        first.path.position(0.0)
    }

    pub fn end_point(&self) -> GroupPoint {
        let last = &self.pieces[self.pieces.len() - 1];
        last.path.position(1.0)
    }

    /// `t ↦ p·γ(t)`.
    pub fn left_translate(&self, p: &GroupPoint) -> Curve {
        let pieces = self
            .pieces
            .iter()
            .map(|piece| Piece {
                start: piece.start,
                end: piece.end,
                path: Arc::new(Translated {
                    by: p.clone(),
                    inner: piece.path.clone(),
                }),
            })
            .collect();
        Curve { pieces }
    }

    /// `t ↦ γ(φ(t))` where `phi(t) = (φ(t), φ'(t))` maps `[0, 1]` onto itself
    /// monotonically. The result is a single piece.
    pub fn reparameterize(&self, phi: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Curve {
        Curve::from_path(Reparameterized {
            inner: self.clone(),
            phi: Box::new(phi),
        })
    }

    /// `count` equally spaced samples over `[0, 1]`, endpoints included.
    pub fn sample(&self, count: usize) -> Vec<CurveSample> {
        let count = count.max(2);
        (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                let v = self.derivative(t);
                CurveSample {
                    t,
                    residual: v.horizontality_residual(),
                    point: v.base,
                }
            })
            .collect()
    }

    /// Largest `|residual|` on a uniform grid of `count` points, checking
    /// both one-sided derivatives at piece boundaries.
    pub fn max_horizontality_residual(&self, count: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..count {
            let t = i as f64 / (count - 1) as f64;
            for (index, piece) in self.pieces.iter().enumerate() {
                if t >= piece.start && t <= piece.end {
                    worst = worst.max(self.piece_derivative(index, t).horizontality_residual().abs());
                }
            }
        }
        worst
    }

    /// Largest sup-norm gap between the stored derivative and a central
    /// difference of the position, over interior points of every piece.
    pub fn max_derivative_mismatch(&self, samples_per_piece: usize, step: f64) -> f64 {
        let mut worst = 0.0f64;
        for (index, piece) in self.pieces.iter().enumerate() {
            let (a, b) = piece.domain();
            for i in 1..=samples_per_piece {
                let t = a + (b - a) * i as f64 / (samples_per_piece + 1) as f64;
                if t - step <= a || t + step >= b {
                    continue;
                }
                let lo = piece.path.position(piece.local(t - step));
                let hi = piece.path.position(piece.local(t + step));
                let h = 2.0 * step;
                let d1 = (&hi.h1 - &lo.h1).scale(1.0 / h);
                let d2 = (&hi.h2 - &lo.h2).scale(1.0 / h);
                let d3 = (hi.t - lo.t) / h;
                let v = self.piece_derivative(index, t);
                let gap = (&d1 - &v.v1)
                    .entries()
                    .iter()
                    .chain((&d2 - &v.v2).entries())
                    .map(|(_, x)| x.abs())
                    .fold((d3 - v.v3).abs(), f64::max);
                worst = worst.max(gap);
            }
        }
        worst
    }

    /// Whether adjacent pieces meet to within `tolerance`.
    pub fn is_continuous(&self, tolerance: f64) -> bool {
        self.pieces
            .windows(2)
            .all(|w| w[0].path.position(1.0).distance_sup(&w[1].path.position(0.0)) <= tolerance)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub point: GroupPoint,
    pub residual: f64,
}

/// Writes samples as CSV with columns `t,h1,h2,tau,residual`; sparse
/// components use the `index:value;...` form.
pub fn write_samples_csv<W: Write>(mut out: W, samples: &[CurveSample]) -> io::Result<()> {
    writeln!(out, "t,h1,h2,tau,residual")?;
    for s in samples {
        writeln!(out, "{},{},{},{},{}", s.t, s.point.h1, s.point.h2, s.point.t, s.residual)?;
    }
    Ok(())
}

/// Concatenation: `first` on `[0, ½]`, `second` on `[½, 1]`.
pub fn glue(first: &Curve, second: &Curve) -> Result<Curve> {
    let gap = first.end_point().distance_sup(&second.start_point());
    if gap > GLUE_TOLERANCE {
        return Err(Error::EndpointMismatch { gap });
    }
    let squeeze = |piece: &Piece, offset: f64| Piece {
        start: offset + 0.5 * piece.start,
        end: offset + 0.5 * piece.end,
        path: piece.path.clone(),
    };
    let pieces = first
        .pieces
        .iter()
        .map(|p| squeeze(p, 0.0))
        .chain(second.pieces.iter().map(|p| squeeze(p, 0.5)))
        .collect();
    Ok(Curve { pieces })
}

fn check_family(n: u64, c: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("mode index n must be ≥ 1"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("scale c must be positive"));
    }
    Ok(())
}

/// `γⁿ(t) = (t²c/2·e_n, −tc·e_n, t³c²/6)`: identity to `(c/2·e_n, −c·e_n, c²/6)`.
pub fn gamma_family(n: u64, c: f64) -> Result<Curve> {
    check_family(n, c)?;
    Ok(Curve::from_path(Gamma { n, c }))
}

/// `αⁿ(t) = (c(½ − t²/2)e_n, c(t−1)e_n, c²(1/6 + t³/6 − t²/2 + t/2))`: from
/// `γⁿ(1)` back to the vertical axis at `(0, 0, c²/3)`.
pub fn alpha_family(n: u64, c: f64) -> Result<Curve> {
    check_family(n, c)?;
    Ok(Curve::from_path(Alpha { n, c }))
}

/// `glue(γⁿ, αⁿ)`: a horizontal loop from the identity to `(0, 0, c²/3)`.
pub fn glued_family(n: u64, c: f64) -> Result<Curve> {
    glue(&gamma_family(n, c)?, &alpha_family(n, c)?)
}

pub fn constant_curve(p: GroupPoint) -> Curve {
    Curve::from_path(Constant(p))
}

/// Coordinatewise linear interpolation from `p` to `q`.
pub fn straight_segment(p: &GroupPoint, q: &GroupPoint) -> Curve {
    Curve::from_path(Segment::new(p, q))
}

/// Piecewise linear curve through `nodes` on a uniform grid.
pub fn polyline(nodes: &[GroupPoint]) -> Result<Curve> {
    if nodes.len() < 2 {
        return Err(Error::invalid("a polyline needs at least two nodes"));
    }
    let m = (nodes.len() - 1) as f64;
    let pieces = nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| Piece {
            start: i as f64 / m,
            end: if i + 2 == nodes.len() { 1.0 } else { (i + 1) as f64 / m },
            path: Arc::new(Segment::new(&w[0], &w[1])) as Arc<dyn PathFn>,
        })
        .collect();
    Ok(Curve { pieces })
}

struct Gamma {
    n: u64,
    c: f64,
}

impl PathFn for Gamma {
    fn position(&self, t: f64) -> GroupPoint {
        let (n, c) = (self.n, self.c);
        GroupPoint::new(
            SeqVec::scaled_basis(n, t * t * c / 2.0),
            SeqVec::scaled_basis(n, -t * c),
            t * t * t * c * c / 6.0,
        )
    }

    fn velocity(&self, t: f64) -> (SeqVec, SeqVec, f64) {
        let (n, c) = (self.n, self.c);
        (
            SeqVec::scaled_basis(n, t * c),
            SeqVec::scaled_basis(n, -c),
            t * t * c * c / 2.0,
        )
    }
}

struct Alpha {
    n: u64,
    c: f64,
}

impl PathFn for Alpha {
    fn position(&self, t: f64) -> GroupPoint {
        let (n, c) = (self.n, self.c);
        GroupPoint::new(
            SeqVec::scaled_basis(n, c * (0.5 - t * t / 2.0)),
            SeqVec::scaled_basis(n, c * (t - 1.0)),
            c * c * (1.0 / 6.0 + t * t * t / 6.0 - t * t / 2.0 + t / 2.0),
        )
    }

    fn velocity(&self, t: f64) -> (SeqVec, SeqVec, f64) {
        let (n, c) = (self.n, self.c);
        (
            SeqVec::scaled_basis(n, -c * t),
            SeqVec::scaled_basis(n, c),
            c * c * (t * t / 2.0 - t + 0.5),
        )
    }
}

struct Constant(GroupPoint);

impl PathFn for Constant {
    fn position(&self, _: f64) -> GroupPoint {
        self.0.clone()
    }

    fn velocity(&self, _: f64) -> (SeqVec, SeqVec, f64) {
        (SeqVec::zero(), SeqVec::zero(), 0.0)
    }
}

struct Segment {
    from: GroupPoint,
    d1: SeqVec,
    d2: SeqVec,
    d3: f64,
}

impl Segment {
    fn new(p: &GroupPoint, q: &GroupPoint) -> Self {
        Self {
            from: p.clone(),
            d1: &q.h1 - &p.h1,
            d2: &q.h2 - &p.h2,
            d3: q.t - p.t,
        }
    }
}

impl PathFn for Segment {
    fn position(&self, s: f64) -> GroupPoint {
        GroupPoint::new(
            self.from.h1.axpy(s, &self.d1),
            self.from.h2.axpy(s, &self.d2),
            self.from.t + s * self.d3,
        )
    }

    fn velocity(&self, _: f64) -> (SeqVec, SeqVec, f64) {
        (self.d1.clone(), self.d2.clone(), self.d3)
    }
}

struct Translated {
    by: GroupPoint,
    inner: Arc<dyn PathFn>,
}

impl PathFn for Translated {
    fn position(&self, s: f64) -> GroupPoint {
        self.by.multiply(&self.inner.position(s))
    }

    fn velocity(&self, s: f64) -> (SeqVec, SeqVec, f64) {
        let (v1, v2, v3) = self.inner.velocity(s);
        let moved = left_translate_diff(&self.by, &TangentVector::at_identity(v1, v2, v3));
        (moved.v1, moved.v2, moved.v3)
    }
}

type Reparam = Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

struct Reparameterized {
    inner: Curve,
    phi: Reparam,
}

impl PathFn for Reparameterized {
    fn position(&self, s: f64) -> GroupPoint {
        self.inner.evaluate((self.phi)(s).0)
    }

    fn velocity(&self, s: f64) -> (SeqVec, SeqVec, f64) {
        let (t, rate) = (self.phi)(s);
        let v = self.inner.derivative(t);
        (v.v1.scale(rate), v.v2.scale(rate), v.v3 * rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{length, MetricSpec};
    use crate::quadrature::QuadratureSpec;
    use proptest::prelude::*;

    fn e(k: u64) -> SeqVec {
        SeqVec::basis(k)
    }

    #[test]
    fn gamma_endpoints() {
        let g = gamma_family(3, 1.0).unwrap();
        assert!(g.evaluate(0.0).is_identity());
        let end = g.evaluate(1.0);
        assert_eq!(end, GroupPoint::new(e(3).scale(0.5), e(3).scale(-1.0), 1.0 / 6.0));
    }

    #[test]
    fn gamma_velocity_and_residual() {
        let (n, c, t) = (5u64, 1.7, 0.3);
        let v = gamma_family(n, c).unwrap().derivative(t);
        assert_eq!(v.v1, SeqVec::scaled_basis(n, t * c));
        assert_eq!(v.v2, SeqVec::scaled_basis(n, -c));
        assert!((v.v3 - t * t * c * c / 2.0).abs() < 1e-15);
        assert!(v.horizontality_residual().abs() < 1e-15);
    }

    #[test]
    fn alpha_endpoints() {
        let c = 3f64.sqrt();
        let a = alpha_family(7, c).unwrap();
        let end = a.evaluate(1.0);
        assert!(end.h1.is_zero() && end.h2.is_zero());
        assert!((end.t - 1.0).abs() < 1e-15);
        for (n, c) in [(1u64, 0.5), (7, 2.0), (40, 1.0)] {
            let gap = alpha_family(n, c)
                .unwrap()
                .evaluate(0.0)
                .distance_sup(&gamma_family(n, c).unwrap().evaluate(1.0));
            assert!(gap < 1e-15);
        }
    }

    #[test]
    fn alpha_speed_profile() {
        let w = crate::seqvec::WeightRule::InverseIndex;
        let a = alpha_family(25, 5.0).unwrap();
        for t in [0.0, 0.3, 0.9] {
            let v = a.derivative(t);
            assert!((w.norm_squared(&v.v2) - 1.0).abs() < 1e-14);
            assert!((w.norm_squared(&v.v1) - t * t).abs() < 1e-14);
        }
    }

    #[test]
    fn glue_runs_identity_to_vertical() {
        let c = 1.4;
        let loop_ = glued_family(9, c).unwrap();
        assert!(loop_.evaluate(0.0).is_identity());
        let end = loop_.evaluate(1.0);
        assert!(end.h1.is_zero() && end.h2.is_zero());
        assert!((end.t - c * c / 3.0).abs() < 1e-15);
        assert!(loop_.is_continuous(1e-15));
        assert_eq!(loop_.pieces().len(), 2);
        assert_eq!(loop_.pieces()[1].domain(), (0.5, 1.0));
    }

    #[test]
    fn glue_constants() {
        let p = GroupPoint::new(e(2), e(1), -0.5);
        let g = glue(&constant_curve(p.clone()), &constant_curve(p.clone())).unwrap();
        for t in [0.0, 0.25, 0.5, 0.8, 1.0] {
            assert_eq!(g.evaluate(t), p);
        }
    }

    #[test]
    fn glue_rejects_mismatched_modes() {
        let err = glue(&gamma_family(3, 1.0).unwrap(), &alpha_family(4, 1.0).unwrap()).unwrap_err();
        match err {
            Error::EndpointMismatch { gap } => assert!((gap - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_family_parameters() {
        assert!(gamma_family(0, 1.0).is_err());
        assert!(alpha_family(2, 0.0).is_err());
        assert!(gamma_family(2, -1.0).is_err());
    }

    #[test]
    fn curves_live_in_blowup_planes() {
        // positions and velocities stay in span{e¹_j, e²_j, e³}
        let j = 6;
        let loop_ = glued_family(j, 1.1).unwrap();
        for s in loop_.sample(101) {
            assert!(s.point.h1.support().all(|k| k == j));
            assert!(s.point.h2.support().all(|k| k == j));
            let v = loop_.derivative(s.t);
            assert!(v.v1.support().chain(v.v2.support()).all(|k| k == j));
        }
    }

    #[test]
    fn polyline_and_segment() {
        let p = GroupPoint::new(e(1), SeqVec::zero(), 1.0);
        let q = GroupPoint::new(SeqVec::zero(), e(2), -1.0);
        let mid = straight_segment(&p, &q).evaluate(0.5);
        assert_eq!(mid, GroupPoint::new(e(1).scale(0.5), e(2).scale(0.5), 0.0));
        let poly = polyline(&[p.clone(), mid.clone(), q.clone()]).unwrap();
        assert_eq!(poly.evaluate(0.25), straight_segment(&p, &q).evaluate(0.25));
        assert_eq!(poly.end_point(), q);
        assert!(polyline(&[p]).is_err());
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &gamma_family(2, 1.0).unwrap().sample(3)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,h1,h2,tau,residual");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], format!("1,2:0.5,2:-1,{},0", 1.0 / 6.0));
    }

    #[test]
    fn translated_curve_moves_endpoints() {
        let p = GroupPoint::new(e(1), e(2), 0.3);
        let moved = glued_family(2, 1.0).unwrap().left_translate(&p);
        assert_eq!(moved.start_point(), p);
        let expect = p.multiply(&GroupPoint::vertical(1.0 / 3.0));
        assert!(moved.end_point().distance_sup(&expect) < 1e-15);
        assert!(moved.max_horizontality_residual(201) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn families_are_horizontal(n in 1u64..1000, c in 0.01f64..4.0) {
            for curve in [gamma_family(n, c).unwrap(), alpha_family(n, c).unwrap(), glued_family(n, c).unwrap()] {
                prop_assert!(curve.max_horizontality_residual(1001) <= 1e-12);
                prop_assert!(curve.max_derivative_mismatch(20, 1e-6) < 1e-5);
            }
        }

        #[test]
        fn glued_length_closed_form(n in 1u64..200, c in 0.05f64..3.0) {
            let arc = (2f64.sqrt() + 1f64.asinh()) / 2.0;
            let l = length(&MetricSpec::subriemannian(), &glued_family(n, c).unwrap(), &QuadratureSpec::default()).unwrap();
            let expected = 2.0 * c / (n as f64).sqrt() * arc;
            prop_assert!((l - expected).abs() < 1e-8);
            prop_assert!((l * (n as f64).sqrt() / c - 2.0 * arc).abs() < 1e-8);
        }
    }
}
