//! Maximized Gaussian log-likelihood of factor models.
//!
//! BIC and sBIC scores need the maximum of the log-likelihood over each
//! model. For `k = 0` the maximizer is the diagonal of `S_n` in closed form;
//! for `k >= 1` this module runs the standard EM iteration for factor
//! analysis (closed-form E and M steps, monotone in the log-likelihood) from
//! several deterministic starts. Model sizes here are tiny (p <= ~12), so
//! robustness matters more than speed.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::factor::{neg_log_lik, FactorParams, SampleCovariance};
use crate::linalg::Matrix;
use crate::seeds::chunk_rng;

const MAX_ITERS: usize = 2000;
const REL_TOL: f64 = 1e-10;
const RANDOM_RESTARTS: usize = 3;

/// Maximized log-likelihoods for all models `k = 0..=k_max`, in order.
///
/// The `k`-th fit also seeds a start of the `(k+1)`-th (padded with a small
/// extra column), so the returned sequence is nondecreasing up to the EM
/// convergence tolerance.
pub fn max_log_likelihood_profile(
    s: &SampleCovariance,
    k_max: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = s.p();
    if k_max > p {
        return Err(Error::InvalidInput(format!("k_max = {k_max} exceeds p = {p}")));
    }
    let mut out = Vec::with_capacity(k_max + 1);
    let mut best_params: Option<FactorParams> = None;
    for k in 0..=k_max {
        let (ll, params) = fit_model(s, k, seed, best_params.as_ref())?;
        out.push(ll);
        best_params = Some(params);
    }
    Ok(out)
}

/// Maximized log-likelihood of the single model with `k` factors.
pub fn max_log_likelihood(s: &SampleCovariance, k: usize, seed: u64) -> Result<f64> {
    if k == 0 {
        return fit_model(s, 0, seed, None).map(|(ll, _)| ll);
    }
    max_log_likelihood_profile(s, k, seed).map(|v| v[k])
}

fn log_lik(s: &SampleCovariance, params: &FactorParams) -> Result<f64> {
    let sigma = crate::factor::parametrize(params);
    Ok(-(s.n() as f64) * neg_log_lik(&sigma, s)?)
}

fn fit_model(
    s: &SampleCovariance,
    k: usize,
    seed: u64,
    warm: Option<&FactorParams>,
) -> Result<(f64, FactorParams)> {
    let p = s.p();
    let diag: Vec<f64> = s.matrix().diagonal();
    if diag.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite(
            "sample covariance has a non-positive diagonal entry".into(),
        ));
    }
    if k == 0 {
        let params = FactorParams::new(diag.clone(), Matrix::zeros(p, 0))?;
        return Ok((log_lik(s, &params)?, params));
    }

    let mut starts: Vec<FactorParams> = Vec::new();
    // Warm start: pad the previous best loading matrix with a small column.
    if let Some(prev) = warm {
        let mut lambda = Matrix::zeros(p, k);
        for i in 0..p {
            for j in 0..prev.lambda().ncols().min(k) {
                lambda[(i, j)] = prev.lambda()[(i, j)];
            }
        }
        let mut rng = chunk_rng(seed, &[0xe3, k as u64, 0xffff]);
        for i in 0..p {
            lambda[(i, k - 1)] += 0.01 * diag[i].sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let psi: Vec<f64> = prev.psi().to_vec();
        starts.push(FactorParams::new(psi, lambda)?);
    }
    for restart in 0..RANDOM_RESTARTS {
        let mut rng = chunk_rng(seed, &[0xe3, k as u64, restart as u64]);
        let mut lambda = Matrix::zeros(p, k);
        for i in 0..p {
            for j in 0..k {
                lambda[(i, j)] =
                    (diag[i] / (2.0 * k as f64)).sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let psi: Vec<f64> = diag.iter().map(|&v| 0.5 * v).collect();
        starts.push(FactorParams::new(psi, lambda)?);
    }

    let mut best: Option<(f64, FactorParams)> = None;
    for start in starts {
        let (ll, params) = em(s, start)?;
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, params));
        }
    }
    Ok(best.expect("at least one start"))
}

/// One EM run; returns the final log-likelihood and parameters.
fn em(s: &SampleCovariance, start: FactorParams) -> Result<(f64, FactorParams)> {
    let p = s.p();
    let k = start.k();
    let floor = 1e-12 * s.matrix().max_abs().max(1.0);
    let mut psi = start.psi().to_vec();
    let mut lambda = start.lambda().clone();
    let mut ll = log_lik(s, &FactorParams::new(psi.clone(), lambda.clone())?)?;

    for _ in 0..MAX_ITERS {
        // E-step pieces, all k x k or k x p:
        //   M = I + Lambda^T Psi^{-1} Lambda,  beta = M^{-1} Lambda^T Psi^{-1}
        let mut lt_psi_inv = Matrix::zeros(k, p); // Lambda^T Psi^{-1}
        for j in 0..k {
            for i in 0..p {
                lt_psi_inv[(j, i)] = lambda[(i, j)] / psi[i];
            }
        }
        let mut m = Matrix::identity(k);
        for a in 0..k {
            for b in 0..k {
                let mut sum = 0.0;
                for i in 0..p {
                    sum += lt_psi_inv[(a, i)] * lambda[(i, b)];
                }
                m[(a, b)] += sum;
            }
        }
        let m_chol = m
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("EM inner matrix".into()))?;
        let mut beta = Matrix::zeros(k, p);
        for i in 0..p {
            let col: Vec<f64> = (0..k).map(|a| lt_psi_inv[(a, i)]).collect();
            let x = m_chol.solve_cholesky(&col);
            for a in 0..k {
                beta[(a, i)] = x[a];
            }
        }
        let m_inv = {
            let mut inv = Matrix::zeros(k, k);
            for b in 0..k {
                let mut e = vec![0.0; k];
                e[b] = 1.0;
                let x = m_chol.solve_cholesky(&e);
                for a in 0..k {
                    inv[(a, b)] = x[a];
                }
            }
            inv
        };
        // Sufficient statistics: B = S beta^T (p x k), A = beta S beta^T + M^{-1}.
        let b_mat = s.matrix().matmul(&beta.transpose());
        let a_mat = beta.matmul(&b_mat).add(&m_inv);
        // M-step: Lambda = B A^{-1}, psi_i = S_ii - (Lambda B^T)_ii.
        let a_chol = a_mat
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("EM moment matrix".into()))?;
        let mut new_lambda = Matrix::zeros(p, k);
        for i in 0..p {
            let row: Vec<f64> = (0..k).map(|j| b_mat[(i, j)]).collect();
            let x = a_chol.solve_cholesky(&row);
            for j in 0..k {
                new_lambda[(i, j)] = x[j];
            }
        }
        let mut new_psi = vec![0.0; p];
        for i in 0..p {
            let mut fitted = 0.0;
            for j in 0..k {
                fitted += new_lambda[(i, j)] * b_mat[(i, j)];
            }
            new_psi[i] = (s.matrix()[(i, i)] - fitted).max(floor);
        }
        lambda = new_lambda;
        psi = new_psi;
        let new_ll = log_lik(s, &FactorParams::new(psi.clone(), lambda.clone())?)?;
        let gain = new_ll - ll;
        ll = new_ll;
        if gain.abs() < REL_TOL * (1.0 + ll.abs()) {
            break;
        }
    }
    Ok((ll, FactorParams::new(psi, lambda)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{min_neg_log_lik, sample_data, FactorModelPoint};
    use approx::assert_relative_eq;

    #[test]
    fn zero_factor_closed_form() {
        let s = SampleCovariance::new(
            Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.5]]).unwrap(),
            50,
        )
        .unwrap();
        let ll = max_log_likelihood(&s, 0, 1).unwrap();
        let params = FactorParams::new(vec![2.0, 1.5], Matrix::zeros(2, 0)).unwrap();
        assert_relative_eq!(ll, log_lik(&s, &params).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn saturated_two_dim_model_attains_the_minimum() {
        // For p = 2 the one-factor model is saturated: the MLE achieves
        // l(S_n | S_n) exactly, which pins the EM answer in closed form.
        let point = FactorModelPoint::from_sigma(
            Matrix::from_rows(&[vec![2.0, 0.8], vec![0.8, 1.0]]).unwrap(),
        )
        .unwrap();
        let s = sample_data(&point, 300, 13).unwrap();
        let ll = max_log_likelihood(&s, 1, 7).unwrap();
        let target = -(s.n() as f64) * min_neg_log_lik(&s).unwrap();
        assert_relative_eq!(ll, target, epsilon = 1e-6, max_relative = 1e-8);
    }

    #[test]
    fn profile_is_nondecreasing_and_bounded() {
        let point = FactorModelPoint::from_sigma(Matrix::identity(5)).unwrap();
        let s = sample_data(&point, 200, 3).unwrap();
        let profile = max_log_likelihood_profile(&s, 2, 11).unwrap();
        for w in profile.windows(2) {
            assert!(w[1] >= w[0] - 1e-6, "profile decreased: {w:?}");
        }
        let saturated = -(s.n() as f64) * min_neg_log_lik(&s).unwrap();
        for ll in profile {
            assert!(ll <= saturated + 1e-8);
        }
    }

    #[test]
    fn em_recovers_strong_one_factor_structure() {
        let lambda = Matrix::from_rows(&[vec![1.5], vec![1.2], vec![-1.0], vec![0.8]]).unwrap();
        let params = FactorParams::new(vec![0.3, 0.4, 0.5, 0.6], lambda).unwrap();
        let point = FactorModelPoint::from_params(params.clone(), Some(1)).unwrap();
        let s = sample_data(&point, 20_000, 29).unwrap();
        let ll1 = max_log_likelihood(&s, 1, 5).unwrap();
        // the fitted model must beat the true parameters on the sample
        let at_truth = log_lik(&s, &params).unwrap();
        assert!(ll1 >= at_truth - 1e-6);
    }
}
