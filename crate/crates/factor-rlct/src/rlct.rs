//! Real log canonical threshold pairs and their calculus.
//!
//! A threshold/multiplicity pair `(lambda, mult)` is ordered lexicographically
//! with the order of the second component reversed: smaller lambda wins, and
//! on equal lambda the *larger* multiplicity is the smaller pair. Sums of
//! ideals in disjoint variables add thresholds (`sum_rule`), products keep
//! the smaller pair and merge multiplicities on ties (`product_rule`).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::rational::Rat;

/// A threshold/multiplicity pair. `lambda > 0`, `mult >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RlctPair {
    pub lambda: Rat,
    pub mult: u32,
}

impl RlctPair {
    pub fn new(lambda: Rat, mult: u32) -> Self {
        assert!(lambda.is_positive(), "rlct threshold must be positive");
        assert!(mult >= 1, "rlct multiplicity must be at least 1");
        RlctPair { lambda, mult }
    }
}

/// Total order: `(l, m) <= (l', m')` iff `l < l'` or (`l = l'` and `m >= m'`).
pub fn compare(a: &RlctPair, b: &RlctPair) -> Ordering {
    match a.lambda.cmp(&b.lambda) {
        Ordering::Equal => b.mult.cmp(&a.mult),
        other => other,
    }
}

impl PartialOrd for RlctPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(compare(self, other))
    }
}

impl Ord for RlctPair {
    fn cmp(&self, other: &Self) -> Ordering {
        compare(self, other)
    }
}

/// Pair for a sum of ideals in disjoint variables: `(l1+l2, m1+m2-1)`.
pub fn sum_rule(a: &RlctPair, b: &RlctPair) -> RlctPair {
    RlctPair::new(&a.lambda + &b.lambda, a.mult + b.mult - 1)
}

/// Pair for a product of ideals in disjoint variables: the smaller pair,
/// with multiplicities added when the thresholds tie.
pub fn product_rule(a: &RlctPair, b: &RlctPair) -> RlctPair {
    match a.lambda.cmp(&b.lambda) {
        Ordering::Less => a.clone(),
        Ordering::Greater => b.clone(),
        Ordering::Equal => RlctPair::new(a.lambda.clone(), a.mult + b.mult),
    }
}
