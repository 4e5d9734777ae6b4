//! Group law, Lie bracket, left translation and horizontality.
//!
//! Points are triples `(h₁, h₂, τ)` with group law
//!
//! ```text
//! (h₁,h₂,τ)(h₁',h₂',τ') = (h₁+h₁', h₂+h₂', τ+τ'+β((h₁,h₂),(h₁',h₂')))
//! β((h₁,h₂),(h₁',h₂')) = ⟨h₁,h₂'⟩ − ⟨h₂,h₁'⟩
//! ```
//!
//! Tangent spaces are identified with the model space; a [`TangentVector`]
//! nevertheless carries its base point because horizontality depends on it.
//! Left-invariant vector fields are represented by their value at the
//! identity, a [`LieVector`].

use serde::{Deserialize, Serialize};

use crate::seqvec::SeqVec;

/// `β((h₁,h₂),(h₁',h₂')) = ⟨h₁,h₂'⟩ − ⟨h₂,h₁'⟩`.
pub fn cocycle_beta(a: (&SeqVec, &SeqVec), b: (&SeqVec, &SeqVec)) -> f64 {
    a.0.dot(b.1) - a.1.dot(b.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub h1: SeqVec,
    pub h2: SeqVec,
    pub t: f64,
}

impl GroupPoint {
    pub fn new(h1: SeqVec, h2: SeqVec, t: f64) -> Self {
        Self { h1, h2, t }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    /// `(0, 0, s)`.
    pub fn vertical(s: f64) -> Self {
        Self::new(SeqVec::zero(), SeqVec::zero(), s)
    }

    pub fn is_identity(&self) -> bool {
        self.h1.is_zero() && self.h2.is_zero() && self.t == 0.0
    }

    /// Group product `self · q`.
    pub fn multiply(&self, q: &GroupPoint) -> GroupPoint {
        GroupPoint {
            h1: &self.h1 + &q.h1,
            h2: &self.h2 + &q.h2,
            t: self.t + q.t + cocycle_beta((&self.h1, &self.h2), (&q.h1, &q.h2)),
        }
    }

    pub fn inverse(&self) -> GroupPoint {
        GroupPoint {
            h1: -&self.h1,
            h2: -&self.h2,
            t: -self.t,
        }
    }

    /// Largest index used by either horizontal component.
    pub fn max_index(&self) -> u64 {
        self.h1.max_index().max(self.h2.max_index())
    }

    /// Largest componentwise absolute difference.
    pub fn distance_sup(&self, other: &GroupPoint) -> f64 {
        let d1 = &self.h1 - &other.h1;
        let d2 = &self.h2 - &other.h2;
        d1.entries()
            .iter()
            .chain(d2.entries())
            .map(|(_, v)| v.abs())
            .fold((self.t - other.t).abs(), f64::max)
    }
}

pub fn multiply(p: &GroupPoint, q: &GroupPoint) -> GroupPoint {
    p.multiply(q)
}

pub fn inverse(p: &GroupPoint) -> GroupPoint {
    p.inverse()
}

/// A tangent vector `(v₁, v₂, v₃)` anchored at `base`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: GroupPoint,
    pub v1: SeqVec,
    pub v2: SeqVec,
    pub v3: f64,
}

impl TangentVector {
    pub fn new(base: GroupPoint, v1: SeqVec, v2: SeqVec, v3: f64) -> Self {
        Self { base, v1, v2, v3 }
    }

    pub fn at_identity(v1: SeqVec, v2: SeqVec, v3: f64) -> Self {
        Self::new(GroupPoint::identity(), v1, v2, v3)
    }

    /// `v₃ − ⟨p₁,v₂⟩ + ⟨p₂,v₁⟩` with `p` the base point; zero exactly on
    /// the horizontal fibre.
    pub fn horizontality_residual(&self) -> f64 {
        self.v3 - self.base.h1.dot(&self.v2) + self.base.h2.dot(&self.v1)
    }

    /// `(dL_{p⁻¹})_p v`, the left-invariant field through `v`.
    pub fn pullback(&self) -> LieVector {
        LieVector {
            x1: self.v1.clone(),
            x2: self.v2.clone(),
            x3: self.horizontality_residual(),
        }
    }
}

/// `(dL_p)_q v = (v₁, v₂, v₃ + ⟨p₁,v₂⟩ − ⟨p₂,v₁⟩)`, rebased at `p·q`.
pub fn left_translate_diff(p: &GroupPoint, v: &TangentVector) -> TangentVector {
    TangentVector {
        base: p.multiply(&v.base),
        v1: v.v1.clone(),
        v2: v.v2.clone(),
        v3: v.v3 + p.h1.dot(&v.v2) - p.h2.dot(&v.v1),
    }
}

pub fn pullback_to_identity(v: &TangentVector) -> LieVector {
    v.pullback()
}

pub fn horizontality_residual(v: &TangentVector) -> f64 {
    v.horizontality_residual()
}

/// An element `X = (π(X), 0) + x³e³` of the Lie algebra.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LieVector {
    pub x1: SeqVec,
    pub x2: SeqVec,
    pub x3: f64,
}

impl LieVector {
    pub fn new(x1: SeqVec, x2: SeqVec, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `e¹_j = (e_j, 0, 0)`.
    pub fn e1(j: u64) -> Self {
        Self::new(SeqVec::basis(j), SeqVec::zero(), 0.0)
    }

    /// `e²_j = (0, e_j, 0)`.
    pub fn e2(j: u64) -> Self {
        Self::new(SeqVec::zero(), SeqVec::basis(j), 0.0)
    }

    /// `e³ = (0, 0, 1)`.
    pub fn e3() -> Self {
        Self::new(SeqVec::zero(), SeqVec::zero(), 1.0)
    }

    /// `√j·e¹_j`, unit length for the default weight.
    pub fn a1(j: u64) -> Self {
        Self::e1(j).scale((j as f64).sqrt())
    }

    /// `√j·e²_j`.
    pub fn a2(j: u64) -> Self {
        Self::e2(j).scale((j as f64).sqrt())
    }

    /// `π(X)` as a Lie vector with zero vertical part.
    pub fn horizontal(&self) -> LieVector {
        LieVector::new(self.x1.clone(), self.x2.clone(), 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.x1.is_zero() && self.x2.is_zero() && self.x3 == 0.0
    }

    pub fn max_index(&self) -> u64 {
        self.x1.max_index().max(self.x2.max_index())
    }

    pub fn scale(&self, c: f64) -> LieVector {
        LieVector::new(self.x1.scale(c), self.x2.scale(c), c * self.x3)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &LieVector) -> LieVector {
        LieVector::new(
            self.x1.axpy(c, &other.x1),
            self.x2.axpy(c, &other.x2),
            self.x3 + c * other.x3,
        )
    }

    pub fn add(&self, other: &LieVector) -> LieVector {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &LieVector) -> LieVector {
        self.axpy(-1.0, other)
    }

    /// `[X, Y] = 2β(π(X), π(Y)) e³`.
    pub fn bracket(&self, other: &LieVector) -> LieVector {
        LieVector::e3().scale(2.0 * cocycle_beta((&self.x1, &self.x2), (&other.x1, &other.x2)))
    }

    /// The tangent vector at `p` whose pullback is `self`.
    pub fn at(&self, p: &GroupPoint) -> TangentVector {
        left_translate_diff(p, &TangentVector::at_identity(self.x1.clone(), self.x2.clone(), self.x3))
    }
}

pub fn bracket(x: &LieVector, y: &LieVector) -> LieVector {
    x.bracket(y)
}
