//! Shared brute-force oracles for the integration suites. Everything here is
//! deliberately independent of the simplex implementation in the crate: LPs
//! are checked by exhaustive vertex enumeration, tau-distances by bisection
//! on a domination-feasibility test, and d=2 multiplicities by explicit
//! staircase face enumeration.
#![allow(dead_code)]

use factor_rlct::linprog::LinearProgram;
use factor_rlct::rational::Rat;

/// Solves `a x = b` exactly; `None` when the matrix is singular.
pub fn gaussian_solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for (row, _) in a.iter().zip(&b) {
        assert_eq!(row.len(), n);
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for c in col..n {
            a[col][c] = &a[col][c] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..n {
                    let d = &f * &a[col][c];
                    a[r][c] = &a[r][c] - &d;
                }
                let d = &f * &b[col];
                b[r] = &b[r] - &d;
            }
        }
    }
    Some(b)
}

/// All constraints of an LP in the uniform form `coeffs . x (cmp) rhs`.
struct Rows {
    eq: Vec<(Vec<Rat>, Rat)>,
    ge: Vec<(Vec<Rat>, Rat)>,
}

fn rows_of(lp: &LinearProgram) -> Rows {
    Rows {
        eq: lp.eq_constraints().to_vec(),
        ge: lp.ineq_constraints().to_vec(),
    }
}

fn dot(a: &[Rat], x: &[Rat]) -> Rat {
    a.iter().zip(x).fold(Rat::zero(), |acc, (c, v)| acc + c * v)
}

fn feasible(rows: &Rows, x: &[Rat]) -> bool {
    rows.eq.iter().all(|(a, b)| dot(a, x) == *b)
        && rows.ge.iter().all(|(a, b)| dot(a, x) >= *b)
}

/// Brute-force LP oracle for *feasible, bounded* programs: enumerates every
/// candidate vertex (solutions of n-subsets of active constraints) and takes
/// the best feasible one. Returns `None` when no candidate vertex is
/// feasible.
pub fn vertex_enumeration_optimum(lp: &LinearProgram) -> Option<(Rat, Vec<Rat>)> {
    let n = lp.num_vars();
    let rows = rows_of(lp);
    let mut all: Vec<(Vec<Rat>, Rat)> = rows.eq.clone();
    all.extend(rows.ge.iter().cloned());
    let m = all.len();
    if m < n {
        return None;
    }
    let mut best: Option<(Rat, Vec<Rat>)> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        // solve the active set
        let a: Vec<Vec<Rat>> = subset.iter().map(|&i| all[i].0.clone()).collect();
        let b: Vec<Rat> = subset.iter().map(|&i| all[i].1.clone()).collect();
        if let Some(x) = gaussian_solve(a, b) {
            if feasible(&rows, &x) {
                let value = dot(lp.objective(), &x);
                let better = match &best {
                    None => true,
                    Some((bv, _)) => value < *bv,
                };
                if better {
                    best = Some((value, x));
                }
            }
        }
        // next n-subset of 0..m in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + m - n {
                subset[i] += 1;
                for j in (i + 1)..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Bisection oracle for tau-distances
// ---------------------------------------------------------------------------

/// Domination feasibility: is there `theta` in the simplex with
/// `sum_i theta_i a_i <= t * (tau + 1)` coordinatewise? Decided exactly by
/// enumerating the vertices of the constraint polytope (a bounded subset of
/// the simplex, so nonempty iff it has a vertex).
pub fn domination_feasible(gens: &[Vec<u32>], tau: &[u32], t: &Rat) -> bool {
    let r = gens.len();
    let d = tau.len();
    // constraints on theta in R^r:
    //   sum theta = 1           (always active)
    //   theta_i >= 0            (r rows)
    //   -sum theta_i a_ij >= -t (tau_j + 1)   (d rows)
    let mut ge: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for i in 0..r {
        let mut row = vec![Rat::zero(); r];
        row[i] = Rat::one();
        ge.push((row, Rat::zero()));
    }
    for j in 0..d {
        let row: Vec<Rat> = gens
            .iter()
            .map(|g| -Rat::from_int(i64::from(g[j])))
            .collect();
        let rhs = -(t * &Rat::from_int(i64::from(tau[j]) + 1));
        ge.push((row, rhs));
    }
    let simplex_row: Vec<Rat> = vec![Rat::one(); r];
    let check = |x: &[Rat]| -> bool {
        dot(&simplex_row, x) == Rat::one() && ge.iter().all(|(a, b)| dot(a, x) >= *b)
    };
    if r == 1 {
        return check(&[Rat::one()]);
    }
    // choose r-1 active rows from ge; the simplex equality is always active
    let mut subset: Vec<usize> = (0..r - 1).collect();
    let m = ge.len();
    loop {
        let mut a: Vec<Vec<Rat>> = vec![simplex_row.clone()];
        let mut b: Vec<Rat> = vec![Rat::one()];
        for &i in &subset {
            a.push(ge[i].0.clone());
            b.push(ge[i].1.clone());
        }
        if let Some(x) = gaussian_solve(a, b) {
            if check(&x) {
                return true;
            }
        }
        let mut i = r - 1;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if subset[i] != i + m - (r - 1) {
                subset[i] += 1;
                for j in (i + 1)..(r - 1) {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Brute-force check of [`domination_feasible`]: walk the whole theta grid
/// with the given denominator and test domination directly.
pub fn grid_feasible(gens: &[Vec<u32>], tau: &[u32], t: &Rat, resolution: u32) -> bool {
    let r = gens.len();
    let d = tau.len();
    let bound: Vec<Rat> = (0..d)
        .map(|j| t * &Rat::from_int(i64::from(tau[j]) + 1))
        .collect();
    let mut counts = vec![0u32; r];
    fn walk(
        counts: &mut Vec<u32>,
        pos: usize,
        remaining: u32,
        gens: &[Vec<u32>],
        bound: &[Rat],
        resolution: u32,
    ) -> bool {
        if pos + 1 == counts.len() {
            counts[pos] = remaining;
            let d = bound.len();
            let ok = (0..d).all(|j| {
                let mut num = 0u64;
                for (i, g) in gens.iter().enumerate() {
                    num += u64::from(counts[i]) * u64::from(g[j]);
                }
                Rat::ratio(num as i64, i64::from(resolution)) <= bound[j]
            });
            return ok;
        }
        for c in 0..=remaining {
            counts[pos] = c;
            if walk(counts, pos + 1, remaining - c, gens, bound, resolution) {
                return true;
            }
        }
        false
    }
    walk(&mut counts, 0, resolution, gens, &bound, resolution)
}

/// Bisection bracket `[lo, hi]` for the tau-distance, with `hi - lo` at most
/// `width`. `lo` is always infeasible, `hi` always feasible.
pub fn bisect_tau_distance(gens: &[Vec<u32>], tau: &[u32], width: f64) -> (Rat, Rat) {
    // t = max_j a_ij / (tau_j + 1) dominates generator i on its own.
    let mut hi = Rat::zero();
    for g in gens {
        let mut t_i = Rat::zero();
        for j in 0..tau.len() {
            let q = Rat::ratio(i64::from(g[j]), i64::from(tau[j]) + 1);
            t_i = t_i.max(q);
        }
        if hi.is_zero() || t_i < hi {
            hi = t_i;
        }
    }
    assert!(domination_feasible(gens, tau, &hi));
    let mut lo = Rat::zero();
    assert!(!domination_feasible(gens, tau, &lo));
    let half = Rat::ratio(1, 2);
    while (&hi - &lo).to_f64() > width {
        let mid = (&lo + &hi) * half.clone();
        if domination_feasible(gens, tau, &mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Exhaustive face enumeration for d = 2 Newton polyhedra
// ---------------------------------------------------------------------------

/// Codimension of the minimal face of `conv(gens) + R^2_{>=0}` containing
/// `x`, by explicit staircase-hull enumeration: 0 interior, 1 edge or ray,
/// 2 vertex.
pub fn face_codim_2d(gens: &[Vec<u32>], x: &[Rat]) -> u32 {
    assert_eq!(x.len(), 2);
    let pts: Vec<(Rat, Rat)> = gens
        .iter()
        .map(|g| (Rat::from_int(i64::from(g[0])), Rat::from_int(i64::from(g[1]))))
        .collect();
    // Pareto-minimal generators (the only vertex candidates).
    let mut minimal: Vec<(Rat, Rat)> = Vec::new();
    for p in &pts {
        let dominated = pts
            .iter()
            .any(|q| q != p && q.0 <= p.0 && q.1 <= p.1);
        if !dominated && !minimal.contains(p) {
            minimal.push(p.clone());
        }
    }
    minimal.sort();
    // Lower convex hull of the staircase (slopes must strictly increase).
    let mut hull: Vec<(Rat, Rat)> = Vec::new();
    for p in minimal {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // keep b only if (a -> b -> p) turns left (cross > 0)
            let cross = &(&(&b.0 - &a.0) * &(&p.1 - &a.1)) - &(&(&b.1 - &a.1) * &(&p.0 - &a.0));
            if cross.is_positive() {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    // vertex?
    if hull.iter().any(|v| v.0 == x[0] && v.1 == x[1]) {
        return 2;
    }
    // bounded edges?
    for w in hull.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let cross = &(&(&b.0 - &a.0) * &(&x[1] - &a.1)) - &(&(&b.1 - &a.1) * &(&x[0] - &a.0));
        if cross.is_zero() && a.0 <= x[0] && x[0] <= b.0 {
            return 1;
        }
    }
    // vertical ray up from the first vertex, horizontal ray right from the last
    let first = hull.first().expect("non-empty hull");
    let last = hull.last().expect("non-empty hull");
    if x[0] == first.0 && x[1] >= first.1 {
        return 1;
    }
    if x[1] == last.1 && x[0] >= last.0 {
        return 1;
    }
    0
}
