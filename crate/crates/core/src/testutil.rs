use proptest::prelude::*;

use crate::group::{GroupPoint, LieVector};
use crate::seqvec::SeqVec;

pub fn sparse() -> impl Strategy<Value = SeqVec> {
    prop::collection::vec((1u64..40, -5.0f64..5.0), 0..8).prop_map(|pairs| SeqVec::from_pairs(pairs).unwrap())
}

pub fn point() -> impl Strategy<Value = GroupPoint> {
    (sparse(), sparse(), -5.0f64..5.0).prop_map(|(h1, h2, t)| GroupPoint::new(h1, h2, t))
}

pub fn lie() -> impl Strategy<Value = LieVector> {
    (sparse(), sparse(), -5.0f64..5.0).prop_map(|(x1, x2, x3)| LieVector::new(x1, x2, x3))
}
