//! RLCT of a monomial ideal via its Newton polyhedron.
//!
//! The Newton polyhedron of an ideal generated by monomials `w^{a_1}, ...,
//! w^{a_r}` is `conv{a_i} + R_{>=0}^d`. For an amplitude `w^tau`, the
//! tau-distance is the smallest `t` with `t*(tau+1)` in the polyhedron, and
//! the tau-multiplicity is the codimension of the minimal face containing
//! that point; the RLCT at the origin is `(1/distance, multiplicity)`.
//!
//! Membership in the polyhedron is equivalent to coordinatewise domination
//! of a convex combination of the generators, so the distance is one tiny
//! exact LP. The minimal face is recovered in V-representation: a generator
//! or a coordinate ray belongs to the face iff its weight can be made
//! positive in some representation of the point, which is again one LP per
//! candidate. The face dimension then comes from an exact affine rank.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linprog::{affine_rank, solve_lp, LinearProgram, LpResult};
use crate::rational::Rat;
use crate::rlct::RlctPair;

/// A monomial ideal, stored as the exponent vectors of its generators.
///
/// Duplicate generators are dropped on construction; a zero exponent vector
/// (the unit ideal) is rejected because the RLCT machinery does not apply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialIdeal {
    dim: usize,
    generators: Vec<Vec<u32>>,
}

impl MonomialIdeal {
    pub fn new(dim: usize, generators: Vec<Vec<u32>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("ideal dimension must be positive".into()));
        }
        if generators.is_empty() {
            return Err(Error::InvalidInput("ideal needs at least one generator".into()));
        }
        let mut seen = Vec::new();
        for g in generators {
            if g.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "generator has length {}, expected {}",
                    g.len(),
                    dim
                )));
            }
            if g.iter().all(|&e| e == 0) {
                return Err(Error::UnitIdeal);
            }
            if !seen.contains(&g) {
                seen.push(g);
            }
        }
        Ok(MonomialIdeal {
            dim,
            generators: seen,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<u32>] {
        &self.generators
    }

    /// The ideal `<w_1, ..., w_c>` of a codimension-`c` linear subspace of `R^d`.
    pub fn linear_subspace(codim: usize, dim: usize) -> Result<Self> {
        if codim == 0 || codim > dim {
            return Err(Error::InvalidInput(format!(
                "codimension {codim} out of range for dimension {dim}"
            )));
        }
        let gens = (0..codim)
            .map(|i| {
                let mut g = vec![0; dim];
                g[i] = 1;
                g
            })
            .collect();
        MonomialIdeal::new(dim, gens)
    }

    /// The reduced fiber ideal of a diagonal covariance in the one-factor
    /// model: `<w_i w_j : 1 <= i < j <= p>` in `R^p`.
    pub fn pairwise_products(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidInput("pairwise products need p >= 2".into()));
        }
        let mut gens = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                let mut g = vec![0; p];
                g[i] = 1;
                g[j] = 1;
                gens.push(g);
            }
        }
        MonomialIdeal::new(p, gens)
    }
}

/// Exponent vector of a monomial amplitude function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmplitudeExponent(pub Vec<u32>);

impl AmplitudeExponent {
    pub fn zeros(dim: usize) -> Self {
        AmplitudeExponent(vec![0; dim])
    }
}

/// Generators and coordinate rays spanning the minimal face of the Newton
/// polyhedron that contains a given point. Indices are zero-based positions
/// into `ideal.generators()` and coordinates respectively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceMembers {
    pub vertex_indices: BTreeSet<usize>,
    pub ray_indices: BTreeSet<usize>,
}

fn check_tau(ideal: &MonomialIdeal, tau: &AmplitudeExponent) -> Result<()> {
    if tau.0.len() != ideal.dim {
        return Err(Error::InvalidInput(format!(
            "tau has length {}, expected {}",
            tau.0.len(),
            ideal.dim
        )));
    }
    Ok(())
}

/// Smallest `t >= 0` with `t*(tau+1)` in the Newton polyhedron, as an exact
/// rational. Positive for every non-unit monomial ideal.
pub fn tau_distance(ideal: &MonomialIdeal, tau: &AmplitudeExponent) -> Result<Rat> {
    check_tau(ideal, tau)?;
    let d = ideal.dim;
    let r = ideal.generators.len();
    // Variables: [t, theta_1..theta_r]; minimize t.
    let mut objective = vec![Rat::zero(); 1 + r];
    objective[0] = Rat::one();
    let mut lp = LinearProgram::new(1 + r, objective)?;
    for j in 0..d {
        let mut row = vec![Rat::zero(); 1 + r];
        row[0] = Rat::from_int(i64::from(tau.0[j]) + 1);
        for (i, g) in ideal.generators.iter().enumerate() {
            row[1 + i] = Rat::from_int(-i64::from(g[j]));
        }
        lp.add_ineq(row, Rat::zero())?;
    }
    let mut simplex_row = vec![Rat::zero(); 1 + r];
    for v in simplex_row.iter_mut().skip(1) {
        *v = Rat::one();
    }
    lp.add_eq(simplex_row, Rat::one())?;
    for i in 0..r {
        let mut row = vec![Rat::zero(); 1 + r];
        row[1 + i] = Rat::one();
        lp.add_ineq(row, Rat::zero())?;
    }
    match solve_lp(&lp) {
        LpResult::Optimal { value, .. } => {
            assert!(
                value.is_positive(),
                "tau-distance of a non-unit monomial ideal must be positive"
            );
            Ok(value)
        }
        other => unreachable!("tau-distance LP is feasible and bounded, got {other:?}"),
    }
}

/// The point `delta_tau * (tau+1)` at which the ray meets the polyhedron.
pub fn tau_point(ideal: &MonomialIdeal, tau: &AmplitudeExponent) -> Result<Vec<Rat>> {
    let delta = tau_distance(ideal, tau)?;
    Ok(tau
        .0
        .iter()
        .map(|&t| &delta * &Rat::from_int(i64::from(t) + 1))
        .collect())
}

/// Whether `x` lies in the Newton polyhedron (an exact feasibility LP).
pub fn contains(ideal: &MonomialIdeal, x: &[Rat]) -> Result<bool> {
    check_point(ideal, x)?;
    Ok(matches!(
        solve_lp(&representation_lp(ideal, x, vec![Rat::zero(); ideal.generators.len() + ideal.dim])?),
        LpResult::Optimal { .. }
    ))
}

fn check_point(ideal: &MonomialIdeal, x: &[Rat]) -> Result<()> {
    if x.len() != ideal.dim {
        return Err(Error::InvalidInput(format!(
            "point has length {}, expected {}",
            x.len(),
            ideal.dim
        )));
    }
    Ok(())
}

/// LP over representations `x = sum theta_i a_i + mu`, `theta` in the
/// simplex, `mu >= 0`, with the given objective (to be minimized) over
/// variables `[theta_1..theta_r, mu_1..mu_d]`.
fn representation_lp(ideal: &MonomialIdeal, x: &[Rat], objective: Vec<Rat>) -> Result<LinearProgram> {
    let d = ideal.dim;
    let r = ideal.generators.len();
    let n = r + d;
    let mut lp = LinearProgram::new(n, objective)?;
    for j in 0..d {
        let mut row = vec![Rat::zero(); n];
        for (i, g) in ideal.generators.iter().enumerate() {
            row[i] = Rat::from_int(i64::from(g[j]));
        }
        row[r + j] = Rat::one();
        lp.add_eq(row, x[j].clone())?;
    }
    let mut simplex_row = vec![Rat::zero(); n];
    for v in simplex_row.iter_mut().take(r) {
        *v = Rat::one();
    }
    lp.add_eq(simplex_row, Rat::one())?;
    for i in 0..n {
        let mut row = vec![Rat::zero(); n];
        row[i] = Rat::one();
        lp.add_ineq(row, Rat::zero())?;
    }
    Ok(lp)
}

/// V-representation of the minimal face of the Newton polyhedron containing
/// `x`: a generator (or coordinate ray) is a member iff its weight has a
/// strictly positive maximum over all representations of `x`.
pub fn minimal_face_members(ideal: &MonomialIdeal, x: &[Rat]) -> Result<FaceMembers> {
    check_point(ideal, x)?;
    let d = ideal.dim;
    let r = ideal.generators.len();
    if !contains(ideal, x)? {
        return Err(Error::PointNotInPolyhedron);
    }
    let weight_positive = |var: usize| -> Result<bool> {
        let mut objective = vec![Rat::zero(); r + d];
        objective[var] = Rat::from_int(-1); // maximize the weight
        match solve_lp(&representation_lp(ideal, x, objective)?) {
            LpResult::Optimal { value, .. } => Ok(value.is_negative()),
            LpResult::Unbounded => Ok(true),
            LpResult::Infeasible => unreachable!("representation LP was feasible above"),
        }
    };
    // One tiny LP per candidate; independent, so run them in parallel.
    let flags: Vec<bool> = (0..r + d)
        .into_par_iter()
        .map(|v| weight_positive(v))
        .collect::<Result<_>>()?;
    let vertex_indices = (0..r).filter(|&i| flags[i]).collect();
    let ray_indices = (0..d).filter(|&j| flags[r + j]).collect();
    Ok(FaceMembers {
        vertex_indices,
        ray_indices,
    })
}

/// Codimension of the minimal face containing `delta_tau * (tau+1)`.
pub fn tau_multiplicity(ideal: &MonomialIdeal, tau: &AmplitudeExponent) -> Result<u32> {
    let x = tau_point(ideal, tau)?;
    let members = minimal_face_members(ideal, &x)?;
    let anchor = *members
        .vertex_indices
        .iter()
        .next()
        .expect("a point of the polyhedron has at least one vertex in its face");
    let mut points: Vec<Vec<Rat>> = members
        .vertex_indices
        .iter()
        .map(|&i| {
            ideal.generators[i]
                .iter()
                .map(|&e| Rat::from_int(i64::from(e)))
                .collect()
        })
        .collect();
    for &j in &members.ray_indices {
        let mut p: Vec<Rat> = ideal.generators[anchor]
            .iter()
            .map(|&e| Rat::from_int(i64::from(e)))
            .collect();
        p[j] = &p[j] + &Rat::one();
        points.push(p);
    }
    let face_dim = affine_rank(&points)?;
    Ok((ideal.dim - face_dim) as u32)
}

/// RLCT at the origin of a monomial ideal with monomial amplitude `w^tau`:
/// `(1/delta_tau, mu_tau)`.
pub fn rlct_monomial(ideal: &MonomialIdeal, tau: &AmplitudeExponent) -> Result<RlctPair> {
    let delta = tau_distance(ideal, tau)?;
    let mult = tau_multiplicity(ideal, tau)?;
    Ok(RlctPair::new(delta.recip(), mult))
}

// ---------------------------------------------------------------------------
// Ideal file format
// ---------------------------------------------------------------------------

/// On-disk description of a monomial RLCT problem:
/// `{"dim": d, "generators": [[..], ..], "tau": [..]?}`.
/// `tau` defaults to all zeros. Negative exponents are rejected.
#[derive(Debug, Serialize, Deserialize)]
pub struct IdealFile {
    pub dim: usize,
    pub generators: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<i64>>,
}

impl IdealFile {
    pub fn parse(text: &str) -> Result<(MonomialIdeal, AmplitudeExponent)> {
        let file: IdealFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("ideal file: {e}")))?;
        let to_u32 = |v: &[i64], what: &str| -> Result<Vec<u32>> {
            v.iter()
                .map(|&e| {
                    u32::try_from(e).map_err(|_| {
                        Error::Parse(format!("ideal file: negative exponent {e} in {what}"))
                    })
                })
                .collect()
        };
        let gens = file
            .generators
            .iter()
            .map(|g| to_u32(g, "generators"))
            .collect::<Result<Vec<_>>>()?;
        let ideal = MonomialIdeal::new(file.dim, gens)?;
        let tau = match &file.tau {
            Some(t) => {
                let t = to_u32(t, "tau")?;
                if t.len() != file.dim {
                    return Err(Error::Parse(format!(
                        "ideal file: tau has length {}, expected {}",
                        t.len(),
                        file.dim
                    )));
                }
                AmplitudeExponent(t)
            }
            None => AmplitudeExponent::zeros(file.dim),
        };
        Ok((ideal, tau))
    }
}
