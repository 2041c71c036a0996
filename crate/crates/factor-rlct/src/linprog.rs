//! Small-scale exact linear programming over rationals.
//!
//! A two-phase primal simplex with Bland's pivoting rule. Bland's rule is
//! slow but cycle-free and deterministic, which is what matters here: every
//! LP in this crate has at most a few dozen variables, and downstream code
//! relies on exact rational optima (the tau-distances of Newton polyhedra
//! are rationals with small denominators).
//!
//! Variables are free by default; sign restrictions are expressed as
//! ordinary inequality constraints. Rows of the form `x_i >= 0` are
//! recognized and turned into nonnegative columns instead of slack rows,
//! which keeps the face-membership tableaus small.

use crate::error::{Error, Result};
use crate::rational::Rat;

/// `minimize objective . x` subject to `eq . x = rhs` and `ineq . x >= rhs`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<Rat>,
    eq_constraints: Vec<(Vec<Rat>, Rat)>,
    ineq_constraints: Vec<(Vec<Rat>, Rat)>,
}

/// Outcome of [`solve_lp`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

impl LinearProgram {
    pub fn new(num_vars: usize, objective: Vec<Rat>) -> Result<Self> {
        if objective.len() != num_vars {
            return Err(Error::InvalidInput(format!(
                "objective has length {}, expected {}",
                objective.len(),
                num_vars
            )));
        }
        Ok(LinearProgram {
            num_vars,
            objective,
            eq_constraints: Vec::new(),
            ineq_constraints: Vec::new(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_eq(&mut self, coeffs: Vec<Rat>, rhs: Rat) -> Result<()> {
        self.check_len(&coeffs)?;
        self.eq_constraints.push((coeffs, rhs));
        Ok(())
    }

    /// Adds `coeffs . x >= rhs`.
    pub fn add_ineq(&mut self, coeffs: Vec<Rat>, rhs: Rat) -> Result<()> {
        self.check_len(&coeffs)?;
        self.ineq_constraints.push((coeffs, rhs));
        Ok(())
    }

    fn check_len(&self, coeffs: &[Rat]) -> Result<()> {
        if coeffs.len() != self.num_vars {
            return Err(Error::InvalidInput(format!(
                "constraint has length {}, expected {}",
                coeffs.len(),
                self.num_vars
            )));
        }
        Ok(())
    }

    pub fn eq_constraints(&self) -> &[(Vec<Rat>, Rat)] {
        &self.eq_constraints
    }

    pub fn ineq_constraints(&self) -> &[(Vec<Rat>, Rat)] {
        &self.ineq_constraints
    }

    pub fn objective(&self) -> &[Rat] {
        &self.objective
    }
}

/// Exact optimum of a small LP; deterministic for a fixed input.
pub fn solve_lp(lp: &LinearProgram) -> LpResult {
    Simplex::build(lp).run()
}

/// Dimension of the affine hull of a non-empty set of rational points,
/// by Gaussian elimination on difference vectors.
pub fn affine_rank(points: &[Vec<Rat>]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("affine_rank of empty point set".into()))?;
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput(
            "affine_rank: points of unequal dimension".into(),
        ));
    }
    let mut rows: Vec<Vec<Rat>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(first).map(|(a, b)| a - b).collect())
        .collect();
    Ok(row_rank(&mut rows))
}

fn row_rank(rows: &mut [Vec<Rat>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let dim = rows[0].len();
    let mut rank = 0;
    for col in 0..dim {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].recip();
        for c in col..dim {
            rows[rank][c] = &rows[rank][c] * &inv;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..dim {
                    let delta = &factor * &rows[rank][c];
                    rows[r][c] = &rows[r][c] - &delta;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

// ---------------------------------------------------------------------------
// Simplex internals
// ---------------------------------------------------------------------------

struct Simplex {
    /// m x (num_cols + 1) tableau; last entry of each row is the rhs.
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    num_cols: usize,
    first_artificial: usize,
    /// For each original variable: column of its positive part and, for free
    /// variables, the column of its negative part.
    pos_col: Vec<usize>,
    neg_col: Vec<Option<usize>>,
    objective: Vec<Rat>,
    num_vars: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Simplex {
        let n = lp.num_vars;
        // A row `c * x_i >= 0` with c > 0 just marks x_i as nonnegative.
        let mut nonneg = vec![false; n];
        let mut general_ineqs: Vec<&(Vec<Rat>, Rat)> = Vec::new();
        for row in &lp.ineq_constraints {
            let (coeffs, rhs) = row;
            let nz: Vec<usize> = (0..n).filter(|&i| !coeffs[i].is_zero()).collect();
            if rhs.is_zero() && nz.len() == 1 && coeffs[nz[0]].is_positive() {
                nonneg[nz[0]] = true;
            } else {
                general_ineqs.push(row);
            }
        }

        let mut pos_col = vec![0usize; n];
        let mut neg_col = vec![None; n];
        let mut num_cols = 0;
        for i in 0..n {
            pos_col[i] = num_cols;
            num_cols += 1;
            if !nonneg[i] {
                neg_col[i] = Some(num_cols);
                num_cols += 1;
            }
        }
        let slack_base = num_cols;
        num_cols += general_ineqs.len();
        let first_artificial = num_cols;

        let m = lp.eq_constraints.len() + general_ineqs.len();
        num_cols += m;

        let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut push_row = |coeffs: &[Rat], rhs: &Rat, slack: Option<usize>| {
            let mut row = vec![Rat::zero(); num_cols + 1];
            for i in 0..n {
                row[pos_col[i]] = coeffs[i].clone();
                if let Some(c) = neg_col[i] {
                    row[c] = -&coeffs[i];
                }
            }
            if let Some(c) = slack {
                row[c] = Rat::from_int(-1);
            }
            row[num_cols] = rhs.clone();
            if row[num_cols].is_negative() {
                for v in row.iter_mut() {
                    *v = -&*v;
                }
            }
            let art = first_artificial + rows.len();
            row[art] = Rat::one();
            basis.push(art);
            rows.push(row);
        };
        for (coeffs, rhs) in &lp.eq_constraints {
            push_row(coeffs, rhs, None);
        }
        for (idx, (coeffs, rhs)) in general_ineqs.iter().enumerate() {
            push_row(coeffs, rhs, Some(slack_base + idx));
        }

        Simplex {
            rows,
            basis,
            num_cols,
            first_artificial,
            pos_col,
            neg_col,
            objective: lp.objective.clone(),
            num_vars: n,
        }
    }

    fn run(mut self) -> LpResult {
        // Phase 1: minimize the sum of artificials.
        let mut cost = vec![Rat::zero(); self.num_cols];
        for c in self.first_artificial..self.num_cols {
            cost[c] = Rat::one();
        }
        match self.optimize(&cost, self.num_cols) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => unreachable!("phase-1 objective is bounded below"),
        }
        if !self.objective_value(&cost).is_zero() {
            return LpResult::Infeasible;
        }
        self.drive_out_artificials();

        // Phase 2: the real objective over non-artificial columns.
        let mut cost = vec![Rat::zero(); self.num_cols];
        for i in 0..self.num_vars {
            cost[self.pos_col[i]] = self.objective[i].clone();
            if let Some(c) = self.neg_col[i] {
                cost[c] = -&self.objective[i];
            }
        }
        match self.optimize(&cost, self.first_artificial) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => return LpResult::Unbounded,
        }

        let mut col_value = vec![Rat::zero(); self.num_cols];
        for (r, &b) in self.basis.iter().enumerate() {
            col_value[b] = self.rows[r][self.num_cols].clone();
        }
        let point: Vec<Rat> = (0..self.num_vars)
            .map(|i| match self.neg_col[i] {
                Some(c) => &col_value[self.pos_col[i]] - &col_value[c],
                None => col_value[self.pos_col[i]].clone(),
            })
            .collect();
        let value = point
            .iter()
            .zip(&self.objective)
            .fold(Rat::zero(), |acc, (x, c)| acc + x * c);
        LpResult::Optimal { value, point }
    }

    fn objective_value(&self, cost: &[Rat]) -> Rat {
        self.basis
            .iter()
            .enumerate()
            .fold(Rat::zero(), |acc, (r, &b)| {
                acc + &cost[b] * &self.rows[r][self.num_cols]
            })
    }

    /// Bland's rule: entering column is the smallest-index column with a
    /// negative reduced cost; leaving row breaks ratio ties by the smallest
    /// basic-variable index.
    fn optimize(&mut self, cost: &[Rat], usable_cols: usize) -> PhaseOutcome {
        loop {
            let entering = (0..usable_cols).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                self.reduced_cost(cost, j).is_negative()
            });
            let Some(col) = entering else {
                return PhaseOutcome::Optimal;
            };

            let mut leave: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                if !self.rows[r][col].is_positive() {
                    continue;
                }
                let ratio = &self.rows[r][self.num_cols] / &self.rows[r][col];
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return PhaseOutcome::Unbounded,
            }
        }
    }

    fn reduced_cost(&self, cost: &[Rat], j: usize) -> Rat {
        let mut d = cost[j].clone();
        for (r, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() && !self.rows[r][j].is_zero() {
                d = d - &cost[b] * &self.rows[r][j];
            }
        }
        d
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for v in self.rows[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..self.rows.len() {
            if r == row || self.rows[r][col].is_zero() {
                continue;
            }
            let factor = self.rows[r][col].clone();
            for c in 0..=self.num_cols {
                if !self.rows[row][c].is_zero() {
                    let delta = &factor * &self.rows[row][c];
                    self.rows[r][c] = &self.rows[r][c] - &delta;
                }
            }
        }
        self.basis[row] = col;
    }

    /// After phase 1, pivot any basic artificial (necessarily at value zero)
    /// onto a real column, or drop its row when the row is redundant.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < self.first_artificial {
                r += 1;
                continue;
            }
            let col = (0..self.first_artificial)
                .find(|&j| !self.rows[r][j].is_zero() && !self.basis.contains(&j));
            match col {
                Some(c) => {
                    self.pivot(r, c);
                    r += 1;
                }
                None => {
                    self.rows.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }
}
