//! Closed-form learning coefficients for factor analysis.
//!
//! For `p`-dimensional observations, the `k`-factor model at a covariance of
//! minimum rank `r` has a known exact learning coefficient in these cases:
//!
//! * saturation (`d_r > p(p+1)/2`): `p(p+1)/4`, multiplicity 1;
//! * `r = k` (regular point): `d_k/2`, multiplicity 1;
//! * `r = 0` (diagonal truth): `p(k+2)/4` for `k <= p-1` and `(p^2+p+1)/4`
//!   for `k = p`, with multiplicity `p-1` exactly when `k = p-1 > 0`;
//! * `r = 1` (generic one-factor truth): `(pk+3p-k+1)/4` for `k <= p-2`,
//!   `p(p+1)/4` for `k` in `{p-1, p}`, multiplicity 1.
//!
//! Every other cell carries only the general upper bound
//! `(p(k+2) + r(p-k+1))/4`, reported as a bound without a multiplicity.
//! The one-factor model additionally has a special singular stratum
//! (exactly two non-zero off-diagonal entries) with coefficient `(2p-1)/2`.
//!
//! All values are exact rationals, bounded by `d_k / 2`. Note the bound by
//! half the *effective* dimension `min(d_k, p(p+1)/2)` holds only at generic
//! covariances: the exact `r = 0` value at `k = p` exceeds `p(p+1)/4`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::model_dimension;
use crate::rational::Rat;
use crate::rlct::RlctPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UpperBound,
}

/// A learning coefficient value. Exact entries carry a multiplicity; bound
/// entries do not (none is proven for them).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LearningCoefficient {
    pub value: Rat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mult: Option<u32>,
    pub exactness: Exactness,
}

impl LearningCoefficient {
    pub fn exact(value: Rat, mult: u32) -> Self {
        assert!(value.is_positive() && mult >= 1);
        LearningCoefficient {
            value,
            mult: Some(mult),
            exactness: Exactness::Exact,
        }
    }

    pub fn upper_bound(value: Rat) -> Self {
        assert!(value.is_positive());
        LearningCoefficient {
            value,
            mult: None,
            exactness: Exactness::UpperBound,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exactness == Exactness::Exact
    }
}

fn check_pkr(p: usize, k: usize, r: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be positive".into()));
    }
    if r > k || k > p {
        return Err(Error::InvalidInput(format!(
            "need 0 <= r <= k <= p, got p={p}, k={k}, r={r}"
        )));
    }
    Ok(())
}

fn saturated(p: usize, r: usize) -> bool {
    let (d_r, _) = model_dimension(p, r).expect("r <= p");
    d_r > (p as u64) * (p as u64 + 1) / 2
}

/// The general upper bound `(p(k+2) + r(p-k+1))/4`, valid when
/// `d_r <= p(p+1)/2`; outside that range the saturation value `p(p+1)/4`
/// is exact and this returns an error.
pub fn bound(p: usize, k: usize, r: usize) -> Result<Rat> {
    check_pkr(p, k, r)?;
    if saturated(p, r) {
        return Err(Error::InvalidInput(format!(
            "d_r > p(p+1)/2 for p={p}, r={r}: the exact saturation value p(p+1)/4 applies"
        )));
    }
    let (p, k, r) = (p as i64, k as i64, r as i64);
    Ok(Rat::ratio(p * (k + 2) + r * (p - k + 1), 4))
}

/// Exact learning coefficient where one is known, otherwise the upper bound
/// (capped at the saturation value `p(p+1)/4`, which always dominates).
pub fn learning_coefficient(p: usize, k: usize, r: usize) -> Result<LearningCoefficient> {
    check_pkr(p, k, r)?;
    let pi = p as i64;
    let ki = k as i64;
    let saturation = Rat::ratio(pi * (pi + 1), 4);

    if saturated(p, r) {
        return Ok(LearningCoefficient::exact(saturation, 1));
    }
    if r == k {
        let (d_k, _) = model_dimension(p, k)?;
        return Ok(LearningCoefficient::exact(Rat::ratio(d_k as i64, 2), 1));
    }
    if r == 0 {
        return Ok(if k <= p - 1 {
            let mult = if k == p - 1 && k > 0 { p as u32 - 1 } else { 1 };
            LearningCoefficient::exact(Rat::ratio(pi * (ki + 2), 4), mult)
        } else {
            LearningCoefficient::exact(Rat::ratio(pi * pi + pi + 1, 4), 1)
        });
    }
    if r == 1 {
        return Ok(if k + 2 <= p {
            LearningCoefficient::exact(Rat::ratio(pi * ki + 3 * pi - ki + 1, 4), 1)
        } else {
            LearningCoefficient::exact(saturation, 1)
        });
    }
    // 2 <= r <= k-1: only the bound is known (and conjectured tight for
    // k < p, so no tighter cap is applied).
    Ok(LearningCoefficient::upper_bound(bound(p, k, r)?))
}

/// Coefficient of the special one-factor stratum where the covariance has
/// exactly two non-zero off-diagonal entries: `((2p-1)/2, 1)`.
pub fn special_two_nonzero(p: usize) -> Result<LearningCoefficient> {
    if p < 2 {
        return Err(Error::InvalidInput(
            "two non-zero off-diagonal entries need p >= 2".into(),
        ));
    }
    Ok(LearningCoefficient::exact(Rat::ratio(2 * p as i64 - 1, 2), 1))
}

/// Converts the fiber-ideal RLCT to a learning coefficient via the reduction
/// `(2 l_k, m_k) = min rlct(I_{p,k}; 1) + (p, 0)`, i.e.
/// `l_k = (lambda + p)/2` with the multiplicity carried over.
pub fn fiber_rlct_to_learning(pair: &RlctPair, p: usize) -> LearningCoefficient {
    let value = &(&pair.lambda + &Rat::from_int(p as i64)) * &Rat::ratio(1, 2);
    LearningCoefficient::exact(value, pair.mult)
}

/// The full `(s, r)` table needed to run sBIC over models `M_0, ..., M_kmax`.
#[derive(Clone, Debug)]
pub struct PenaltyTable {
    p: usize,
    k_max: usize,
    /// `cells[s][r]` for `0 <= r <= s <= k_max`.
    cells: Vec<Vec<LearningCoefficient>>,
}

impl PenaltyTable {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn cell(&self, s: usize, r: usize) -> &LearningCoefficient {
        &self.cells[s][r]
    }

    pub(crate) fn cell_mut(&mut self, s: usize, r: usize) -> &mut LearningCoefficient {
        &mut self.cells[s][r]
    }

    /// CSV with columns `(p, k, r, value_num, value_den, mult, exactness)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,k,r,value_num,value_den,mult,exactness\n");
        for s in 0..=self.k_max {
            for r in 0..=s {
                let c = self.cell(s, r);
                let mult = c.mult.map(|m| m.to_string()).unwrap_or_default();
                let exactness = match c.exactness {
                    Exactness::Exact => "exact",
                    Exactness::UpperBound => "upper_bound",
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    self.p,
                    s,
                    r,
                    c.value.numer(),
                    c.value.denom(),
                    mult,
                    exactness
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            k: usize,
            r: usize,
            #[serde(flatten)]
            coeff: &'a LearningCoefficient,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            p: usize,
            k_max: usize,
            cells: Vec<Row<'a>>,
        }
        let mut cells = Vec::new();
        for s in 0..=self.k_max {
            for r in 0..=s {
                cells.push(Row {
                    k: s,
                    r,
                    coeff: self.cell(s, r),
                });
            }
        }
        serde_json::to_string_pretty(&Doc {
            p: self.p,
            k_max: self.k_max,
            cells,
        })
        .expect("table serializes")
    }
}

/// A table whose every `(s, r)` cell is `(min(d_s, p(p+1)/2)/2, 1)`: with
/// these penalties the sBIC fixed point collapses cell-by-cell onto BIC,
/// which makes this the self-test input for the reduction property.
pub fn half_dimension_table(p: usize, k_max: usize) -> Result<PenaltyTable> {
    let mut table = sbic_penalty_matrix(p, k_max)?;
    for s in 0..=k_max {
        let (_, effective) = model_dimension(p, s)?;
        for r in 0..=s {
            *table.cell_mut(s, r) =
                LearningCoefficient::exact(Rat::ratio(effective as i64, 2), 1);
        }
    }
    Ok(table)
}

/// Learning coefficients `l_{sr}` (and multiplicities where known) for all
/// `0 <= r <= s <= k_max`.
pub fn sbic_penalty_matrix(p: usize, k_max: usize) -> Result<PenaltyTable> {
    if k_max > p {
        return Err(Error::InvalidInput(format!("k_max = {k_max} exceeds p = {p}")));
    }
    let mut cells = Vec::with_capacity(k_max + 1);
    for s in 0..=k_max {
        let mut row = Vec::with_capacity(s + 1);
        for r in 0..=s {
            row.push(learning_coefficient(p, s, r)?);
        }
        cells.push(row);
    }
    Ok(PenaltyTable { p, k_max, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::ratio(n, d)
    }

    #[test]
    fn bound_examples() {
        assert_eq!(bound(5, 2, 0).unwrap(), rat(5, 1));
        assert_eq!(bound(5, 2, 1).unwrap(), rat(6, 1));
        assert_eq!(bound(5, 2, 2).unwrap(), rat(7, 1));
        // d_r > p(p+1)/2 is rejected with a pointer to the saturation value
        assert!(bound(2, 2, 1).is_err());
    }

    #[test]
    fn bound_at_r_equals_k_is_half_dimension() {
        for p in 1..=12usize {
            for k in 0..=p {
                let (d_k, _) = model_dimension(p, k).unwrap();
                if d_k <= (p as u64) * (p as u64 + 1) / 2 {
                    assert_eq!(bound(p, k, k).unwrap(), rat(d_k as i64, 2));
                }
            }
        }
    }

    #[test]
    fn dispatch_examples() {
        assert_eq!(
            learning_coefficient(5, 1, 0).unwrap(),
            LearningCoefficient::exact(rat(15, 4), 1)
        );
        // k = p-1 > 0 has multiplicity p-1
        assert_eq!(
            learning_coefficient(4, 3, 0).unwrap(),
            LearningCoefficient::exact(rat(5, 1), 3)
        );
        assert_eq!(
            learning_coefficient(5, 2, 1).unwrap(),
            LearningCoefficient::exact(rat(6, 1), 1)
        );
        assert_eq!(
            learning_coefficient(3, 2, 1).unwrap(),
            LearningCoefficient::exact(rat(3, 1), 1)
        );
        assert_eq!(
            learning_coefficient(3, 3, 0).unwrap(),
            LearningCoefficient::exact(rat(13, 4), 1)
        );
        // saturation: p=2, k=2, r=1 has d_1 = 4 > 3
        assert_eq!(
            learning_coefficient(2, 2, 1).unwrap(),
            LearningCoefficient::exact(rat(3, 2), 1)
        );
        // regular diagonal: r = k
        assert_eq!(
            learning_coefficient(5, 1, 1).unwrap(),
            LearningCoefficient::exact(rat(5, 1), 1)
        );
        // interior cell: only a bound
        let c = learning_coefficient(6, 3, 2).unwrap();
        assert_eq!(c.exactness, Exactness::UpperBound);
        assert_eq!(c.mult, None);
        assert_eq!(c.value, bound(6, 3, 2).unwrap());
    }

    #[test]
    fn interior_bound_is_not_capped() {
        // p=5, k=4, r=2: the bound 17/2 exceeds the saturation value 15/2,
        // and stays as-is (it is conjectured tight; only d_k/2 provably
        // dominates every cell).
        let c = learning_coefficient(5, 4, 2).unwrap();
        assert_eq!(c.exactness, Exactness::UpperBound);
        assert_eq!(c.value, rat(17, 2));
    }

    #[test]
    fn diagonal_truth_in_the_square_model_exceeds_saturation() {
        // l_{p0} = (p^2+p+1)/4 > p(p+1)/4 for every p: the diagonal stratum
        // of the k = p model is *more* expensive than its generic points.
        for p in 1..=12usize {
            let diag = learning_coefficient(p, p, 0).unwrap().value;
            let generic = rat((p * p + p) as i64, 4);
            assert!(diag > generic);
        }
    }

    #[test]
    fn prop_k2_r1_specials() {
        assert_eq!(learning_coefficient(2, 2, 1).unwrap().value, rat(3, 2));
        assert_eq!(learning_coefficient(3, 2, 1).unwrap().value, rat(3, 1));
        for p in 4..=12usize {
            assert_eq!(
                learning_coefficient(p, 2, 1).unwrap().value,
                rat(5 * p as i64 - 1, 4)
            );
        }
    }

    #[test]
    fn special_two_nonzero_examples() {
        assert_eq!(
            special_two_nonzero(3).unwrap(),
            LearningCoefficient::exact(rat(5, 2), 1)
        );
        assert_eq!(
            special_two_nonzero(5).unwrap(),
            LearningCoefficient::exact(rat(9, 2), 1)
        );
        assert!(special_two_nonzero(1).is_err());
        // the three one-factor strata are strictly ordered for p >= 3
        for p in 3..=12usize {
            let diag = learning_coefficient(p, 1, 0).unwrap().value;
            let two = special_two_nonzero(p).unwrap().value;
            let generic = learning_coefficient(p, 1, 1).unwrap().value;
            assert!(diag < two && two < generic, "p = {p}");
        }
    }

    #[test]
    fn fiber_reduction_examples() {
        // (p/2, 1) for p=3 maps to 3p/4 = 9/4
        let lc = fiber_rlct_to_learning(&RlctPair::new(rat(3, 2), 1), 3);
        assert_eq!(lc, LearningCoefficient::exact(rat(9, 4), 1));
        // (p(p-1)/2, p-1) for p=4 maps to (5, 3)
        let lc = fiber_rlct_to_learning(&RlctPair::new(rat(6, 1), 3), 4);
        assert_eq!(lc, LearningCoefficient::exact(rat(5, 1), 3));
        // identity at pair = (p, 1)
        let lc = fiber_rlct_to_learning(&RlctPair::new(rat(3, 1), 1), 3);
        assert_eq!(lc, LearningCoefficient::exact(rat(3, 1), 1));
    }

    #[test]
    fn penalty_matrix_p5_kmax1() {
        let table = sbic_penalty_matrix(5, 1).unwrap();
        assert_eq!(table.cell(0, 0).value, rat(5, 2));
        assert_eq!(table.cell(1, 0).value, rat(15, 4));
        assert_eq!(table.cell(1, 1).value, rat(5, 1));
    }

    #[test]
    fn penalty_matrix_invariants() {
        for p in 1..=12usize {
            let table = sbic_penalty_matrix(p, p).unwrap();
            for s in 0..=p {
                let (d_s, _) = model_dimension(p, s).unwrap();
                let cap = rat(d_s as i64, 2);
                for r in 0..=s {
                    let cell = table.cell(s, r);
                    // every value respects the parameter-dimension cap
                    assert!(cell.value <= cap, "p={p}, s={s}, r={r}");
                    // and its own Theorem-1 bound where that applies
                    if let Ok(b) = bound(p, s, r) {
                        assert!(cell.value <= b, "p={p}, s={s}, r={r}");
                    }
                    assert_eq!(cell.mult.is_some(), cell.is_exact());
                }
                // diagonal cells are d_s/2 whenever d_s fits the ambient space
                if d_s <= (p as u64) * (p as u64 + 1) / 2 {
                    assert_eq!(table.cell(s, s).value, rat(d_s as i64, 2));
                }
            }
        }
    }

    #[test]
    fn values_nondecreasing_in_r_before_saturation() {
        // Monotonicity in r holds over the cells not governed by the
        // saturation case, except for the documented k = p step from
        // (p^2+p+1)/4 down to p(p+1)/4. Saturated cells are all equal.
        for p in 1..=12usize {
            for k in 0..=p {
                let mut prev: Option<Rat> = None;
                for r in 0..=k {
                    let (d_r, _) = model_dimension(p, r).unwrap();
                    if d_r > (p as u64) * (p as u64 + 1) / 2 {
                        break;
                    }
                    let v = learning_coefficient(p, k, r).unwrap().value;
                    if let Some(prev) = prev {
                        if !(k == p && r == 1) {
                            assert!(prev <= v, "p={p}, k={k}, r={r}");
                        }
                    }
                    prev = Some(v);
                }
            }
        }
    }

    #[test]
    fn csv_export_shape() {
        let table = sbic_penalty_matrix(5, 2).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 1 + 6); // header + (0,0),(1,0),(1,1),(2,0),(2,1),(2,2)
        assert_eq!(lines[0], "p,k,r,value_num,value_den,mult,exactness");
        assert!(lines.iter().any(|l| l.starts_with("5,1,0,15,4,1,exact")));
        assert!(lines.iter().any(|l| l.starts_with("5,2,1,6,1,1,exact")));
    }
}
