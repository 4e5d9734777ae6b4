//! Finitely-supported real sequences standing in for elements of `ℓ²`.
//!
//! A [`SeqVec`] stores its nonzero coefficients as a sorted list of
//! `(index, value)` pairs with 1-based indices. Every arithmetic operation
//! returns canonical form: exact zeros are dropped, so structural equality
//! coincides with equality of sequences.
//!
//! A [`WeightRule`] is the diagonal operator `(Ax)_k = a_k x_k` given as a
//! closed-form function of `k`, which keeps indices like `10⁶` cheap. It
//! induces the weak inner product `η(v, w) = ⟨Av, w⟩`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Default, PartialEq)]
pub struct SeqVec {
    entries: Vec<(u64, f64)>,
}

impl SeqVec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The canonical basis vector `e_k`.
    pub fn basis(k: u64) -> Self {
        Self::scaled_basis(k, 1.0)
    }

    /// `c·e_k`.
    ///
    /// # Panics
    /// If `k == 0`.
    pub fn scaled_basis(k: u64, c: f64) -> Self {
        assert!(k >= 1, "sequence indices start at 1");
        if c == 0.0 {
            Self::zero()
        } else {
            Self {
                entries: vec![(k, c)],
            }
        }
    }

    /// Builds a sequence from arbitrary `(index, value)` pairs. Repeated
    /// indices are summed; zero results are dropped.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut entries: Vec<(u64, f64)> = pairs.into_iter().collect();
        if let Some(&(k, _)) = entries.iter().find(|(k, _)| *k == 0) {
            return Err(Error::invalid(format!("sequence index {k} is not ≥ 1")));
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid("sequence coefficients must be finite"));
        }
        entries.sort_by_key(|&(k, _)| k);
        let mut out: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        for (k, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += v,
                _ => out.push((k, v)),
            }
        }
        out.retain(|&(_, v)| v != 0.0);
        Ok(Self { entries: out })
    }

    /// Dense coefficients `values[i]` placed at index `i + 1`.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i as u64 + 1, v))
            .collect();
        Self { entries }
    }

    /// Coefficients at indices `1..=len` as a dense vector; entries beyond
    /// `len` are ignored.
    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(k, v) in &self.entries {
            if (k as usize) <= len {
                out[k as usize - 1] = v;
            }
        }
        out
    }

    /// Sequence `k ↦ f(k)` over `1..=len`.
    pub fn from_fn(len: u64, mut f: impl FnMut(u64) -> f64) -> Self {
        let entries = (1..=len)
            .map(|k| (k, f(k)))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        Self { entries }
    }

    pub fn get(&self, k: u64) -> f64 {
        self.entries
            .binary_search_by_key(&k, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|&(k, _)| k)
    }

    /// Largest index in the support, 0 for the zero sequence.
    pub fn max_index(&self) -> u64 {
        self.entries.last().map_or(0, |&(k, _)| k)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `⟨v, w⟩ = Σ v_k w_k`.
    pub fn dot(&self, other: &SeqVec) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> SeqVec {
        if c == 0.0 {
            return SeqVec::zero();
        }
        let mut entries: Vec<(u64, f64)> = self.entries.iter().map(|&(k, v)| (k, c * v)).collect();
        entries.retain(|&(_, v)| v != 0.0);
        SeqVec { entries }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &SeqVec) -> SeqVec {
        self.merge(other, |x, y| x + c * y)
    }

    /// Entrywise map `v_k ↦ f(k, v_k)` over the support.
    pub fn map_indexed(&self, mut f: impl FnMut(u64, f64) -> f64) -> SeqVec {
        let mut entries: Vec<(u64, f64)> = self.entries.iter().map(|&(k, v)| (k, f(k, v))).collect();
        entries.retain(|&(_, v)| v != 0.0);
        SeqVec { entries }
    }

    /// Keeps only indices `≤ len`.
    pub fn truncate(&self, len: u64) -> SeqVec {
        let entries = self.entries.iter().copied().take_while(|&(k, _)| k <= len).collect();
        SeqVec { entries }
    }

    fn merge(&self, other: &SeqVec, f: impl Fn(f64, f64) -> f64) -> SeqVec {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let (k, v) = if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
                i += 1;
                (a[i - 1].0, f(a[i - 1].1, 0.0))
            } else if i >= a.len() || b[j].0 < a[i].0 {
                j += 1;
                (b[j - 1].0, f(0.0, b[j - 1].1))
            } else {
                i += 1;
                j += 1;
                (a[i - 1].0, f(a[i - 1].1, b[j - 1].1))
            };
            if v != 0.0 {
                out.push((k, v));
            }
        }
        SeqVec { entries: out }
    }
}

impl fmt::Debug for SeqVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(k, v)| (k, v))).finish()
    }
}

/// Compact `index:value;index:value` form used in CSV exports. The zero
/// sequence is the empty string.
impl fmt::Display for SeqVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}:{v}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SeqVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(SeqVec::zero());
        }
        let pairs = s
            .split(';')
            .map(|item| {
                let (k, v) = item
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("malformed sparse entry `{item}`")))?;
                let k: u64 = k.trim().parse().map_err(|_| Error::invalid(format!("bad index `{k}`")))?;
                let v: f64 = v.trim().parse().map_err(|_| Error::invalid(format!("bad value `{v}`")))?;
                Ok((k, v))
            })
            .collect::<Result<Vec<_>>>()?;
        SeqVec::from_pairs(pairs)
    }
}

impl Serialize for SeqVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.entries.iter().map(|&(k, v)| (k, v)))
    }
}

/// Accepts `[[index, value], ...]` with indices ≥ 1 and strictly increasing.
impl<'de> Deserialize<'de> for SeqVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<(u64, f64)> = Vec::deserialize(deserializer)?;
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(D::Error::custom("sparse indices must be strictly increasing"));
        }
        SeqVec::from_pairs(pairs).map_err(D::Error::custom)
    }
}

impl Add for &SeqVec {
    type Output = SeqVec;
    fn add(self, rhs: &SeqVec) -> SeqVec {
        self.merge(rhs, |x, y| x + y)
    }
}

impl Sub for &SeqVec {
    type Output = SeqVec;
    fn sub(self, rhs: &SeqVec) -> SeqVec {
        self.merge(rhs, |x, y| x - y)
    }
}

impl Neg for &SeqVec {
    type Output = SeqVec;
    fn neg(self) -> SeqVec {
        self.scale(-1.0)
    }
}

impl Mul<&SeqVec> for f64 {
    type Output = SeqVec;
    fn mul(self, rhs: &SeqVec) -> SeqVec {
        rhs.scale(self)
    }
}

/// Positive diagonal weights `a_k` defining `(Ax)_k = a_k x_k`.
#[derive(Clone, Default)]
pub enum WeightRule {
    /// `a_k = 1/k`.
    #[default]
    InverseIndex,
    /// `a_k = k^(-exponent)`.
    Power { exponent: f64 },
    /// `a_k = 1`, the ambient `ℓ²` product.
    Uniform,
    Custom {
        label: String,
        weight: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    },
}

impl WeightRule {
    pub fn custom(label: impl Into<String>, weight: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        WeightRule::Custom {
            label: label.into(),
            weight: Arc::new(weight),
        }
    }

    #[inline]
    pub fn weight(&self, k: u64) -> f64 {
        let a = match self {
            WeightRule::InverseIndex => 1.0 / k as f64,
            WeightRule::Power { exponent } => (k as f64).powf(-exponent),
            WeightRule::Uniform => 1.0,
            WeightRule::Custom { weight, .. } => weight(k),
        };
        debug_assert!(a > 0.0, "weight a_{k} = {a} is not positive");
        a
    }

    pub fn description(&self) -> String {
        match self {
            WeightRule::InverseIndex => "a_k = 1/k".to_string(),
            WeightRule::Power { exponent } => format!("a_k = k^-{exponent}"),
            WeightRule::Uniform => "a_k = 1".to_string(),
            WeightRule::Custom { label, .. } => label.clone(),
        }
    }

    /// `Av`.
    pub fn apply(&self, v: &SeqVec) -> SeqVec {
        v.map_indexed(|k, x| self.weight(k) * x)
    }

    /// `η(v, w) = ⟨Av, w⟩`.
    pub fn inner(&self, v: &SeqVec, w: &SeqVec) -> f64 {
        let (a, b) = (v.entries(), w.entries());
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.weight(a[i].0) * a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// `‖v‖_η`.
    pub fn norm(&self, v: &SeqVec) -> f64 {
        self.norm_squared(v).sqrt()
    }

    pub fn norm_squared(&self, v: &SeqVec) -> f64 {
        v.entries().iter().map(|&(k, x)| self.weight(k) * x * x).sum()
    }
}

impl fmt::Debug for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightRule({})", self.description())
    }
}

pub fn inner(v: &SeqVec, w: &SeqVec) -> f64 {
    v.dot(w)
}

pub fn apply_weight(rule: &WeightRule, v: &SeqVec) -> SeqVec {
    rule.apply(v)
}

pub fn eta_inner(rule: &WeightRule, v: &SeqVec, w: &SeqVec) -> f64 {
    rule.inner(v, w)
}

pub fn eta_norm(rule: &WeightRule, v: &SeqVec) -> f64 {
    rule.norm(v)
}
