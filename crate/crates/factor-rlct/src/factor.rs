//! The Gaussian factor analysis model.
//!
//! A `k`-factor model for `p`-dimensional centered observations has
//! covariance `Sigma = diag(psi) + Lambda Lambda^T` with noise variances
//! `psi_i > 0` and a `p x k` loading matrix `Lambda`. This module provides
//! the parametrization, the model dimension, the Gaussian negative
//! log-likelihood, seeded data simulation, the sum of squared generators of
//! the reduced fiber ideal, one-factor stratum classification, and diagonal
//! rescaling (the torus action that leaves learning coefficients unchanged).
//!
//! Statistical code runs in f64; exact rationals live only in the polyhedral
//! modules.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seeds::{chunk_rng, chunks};

/// Relative tolerance for symmetry and provenance-consistency validation.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Default tolerance for counting non-zero loading entries during one-factor
/// stratum classification; inputs are synthetic, so this only absorbs
/// rescaling round-off.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

const SAMPLE_CHUNK: usize = 8192;

/// Noise variances and loading matrix of a factor model parametrization.
#[derive(Clone, Debug)]
pub struct FactorParams {
    psi: Vec<f64>,
    lambda: Matrix,
}

impl FactorParams {
    pub fn new(psi: Vec<f64>, lambda: Matrix) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::InvalidInput("psi must be non-empty".into()));
        }
        if psi.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput("all psi entries must be positive".into()));
        }
        if lambda.nrows() != psi.len() {
            return Err(Error::InvalidInput(format!(
                "lambda has {} rows, expected {}",
                lambda.nrows(),
                psi.len()
            )));
        }
        Ok(FactorParams { psi, lambda })
    }

    pub fn p(&self) -> usize {
        self.psi.len()
    }

    pub fn k(&self) -> usize {
        self.lambda.ncols()
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn lambda(&self) -> &Matrix {
        &self.lambda
    }
}

/// `diag(psi) + Lambda Lambda^T`; symmetric positive definite by construction.
pub fn parametrize(params: &FactorParams) -> Matrix {
    let lam_t = params.lambda.transpose();
    params.lambda.matmul(&lam_t).add(&Matrix::diag(&params.psi))
}

/// A fixed "true" covariance matrix, optionally with the parameters that
/// produced it and the minimum rank of any loading matrix achieving it.
///
/// The minimum rank `r` is carried as provenance rather than inferred: it is
/// an algebraic quantity and recovering it from a raw numerical matrix is
/// not attempted here.
#[derive(Clone, Debug)]
pub struct FactorModelPoint {
    sigma0: Matrix,
    provenance: Option<FactorParams>,
    min_rank: Option<usize>,
}

impl FactorModelPoint {
    /// Wraps a raw covariance matrix (no provenance).
    pub fn from_sigma(sigma0: Matrix) -> Result<Self> {
        FactorModelPoint::validate(sigma0, None, None)
    }

    /// Builds the covariance from parameters; `min_rank` must not exceed the
    /// numerical rank of the loading matrix.
    pub fn from_params(params: FactorParams, min_rank: Option<usize>) -> Result<Self> {
        let sigma0 = parametrize(&params);
        FactorModelPoint::validate(sigma0, Some(params), min_rank)
    }

    fn validate(
        sigma0: Matrix,
        provenance: Option<FactorParams>,
        min_rank: Option<usize>,
    ) -> Result<Self> {
        if !sigma0.is_square() {
            return Err(Error::InvalidInput("covariance must be square".into()));
        }
        if sigma0.asymmetry() > VALIDATION_TOL {
            return Err(Error::InvalidInput(format!(
                "covariance asymmetry {} exceeds {}",
                sigma0.asymmetry(),
                VALIDATION_TOL
            )));
        }
        if sigma0.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("covariance".into()));
        }
        if let Some(params) = &provenance {
            let rebuilt = parametrize(params);
            let scale = sigma0.max_abs().max(1.0);
            if rebuilt.sub(&sigma0).max_abs() > VALIDATION_TOL * scale {
                return Err(Error::InvalidInput(
                    "provenance does not reproduce the covariance".into(),
                ));
            }
            if let Some(r) = min_rank {
                if r > params.lambda.rank(1e-10) {
                    return Err(Error::InvalidInput(format!(
                        "min_rank {r} exceeds the rank of the loading matrix"
                    )));
                }
            }
        }
        Ok(FactorModelPoint {
            sigma0,
            provenance,
            min_rank,
        })
    }

    pub fn p(&self) -> usize {
        self.sigma0.nrows()
    }

    pub fn sigma0(&self) -> &Matrix {
        &self.sigma0
    }

    pub fn provenance(&self) -> Option<&FactorParams> {
        self.provenance.as_ref()
    }

    pub fn min_rank(&self) -> Option<usize> {
        self.min_rank
    }
}

/// A sample covariance matrix `S_n` together with its sample size.
#[derive(Clone, Debug)]
pub struct SampleCovariance {
    s: Matrix,
    n: usize,
}

impl SampleCovariance {
    pub fn new(s: Matrix, n: usize) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::InvalidInput("sample covariance must be square".into()));
        }
        if s.asymmetry() > VALIDATION_TOL {
            return Err(Error::InvalidInput("sample covariance is asymmetric".into()));
        }
        // Numerical PSD check: a small diagonal shift must make the matrix
        // positive definite (tolerates eigenvalues down to about -1e-10).
        let shift = 1e-10 * s.max_abs().max(1.0);
        let shifted = s.add(&Matrix::diag(&vec![shift; s.nrows()]));
        if shifted.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite(
                "sample covariance is not positive semidefinite".into(),
            ));
        }
        Ok(SampleCovariance { s, n })
    }

    pub fn p(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Model dimension `d_k = (k+1)p - k(k-1)/2` and its cap at the ambient
/// dimension, `min(d_k, p(p+1)/2)`.
pub fn model_dimension(p: usize, k: usize) -> Result<(u64, u64)> {
    if k > p {
        return Err(Error::InvalidInput(format!("k = {k} exceeds p = {p}")));
    }
    let (p64, k64) = (p as u64, k as u64);
    let d_k = (k64 + 1) * p64 - k64 * k64.saturating_sub(1) / 2;
    let ambient = p64 * (p64 + 1) / 2;
    Ok((d_k, d_k.min(ambient)))
}

/// Negated, scaled Gaussian log-likelihood
/// `(p/2) log(2 pi) + (1/2) log det(Sigma) + (1/2) trace(Sigma^{-1} S_n)`.
pub fn neg_log_lik(sigma: &Matrix, s: &SampleCovariance) -> Result<f64> {
    let p = s.p();
    if sigma.nrows() != p || !sigma.is_square() {
        return Err(Error::InvalidInput("sigma/sample shape mismatch".into()));
    }
    let l = sigma
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("sigma in neg_log_lik".into()))?;
    let log_det = Matrix::log_det_from_cholesky(&l);
    let mut trace = 0.0;
    for j in 0..p {
        let col: Vec<f64> = (0..p).map(|i| s.matrix()[(i, j)]).collect();
        let x = l.solve_cholesky(&col);
        trace += x[j];
    }
    Ok(0.5 * (p as f64) * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det + 0.5 * trace)
}

/// Minimum of the negated log-likelihood, attained at `Sigma = S_n`:
/// `(p/2) log(2 pi) + (1/2) log det(S_n) + p/2`.
pub fn min_neg_log_lik(s: &SampleCovariance) -> Result<f64> {
    let l = s
        .matrix()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("singular sample covariance".into()))?;
    let p = s.p() as f64;
    Ok(0.5 * p * (2.0 * std::f64::consts::PI).ln()
        + 0.5 * Matrix::log_det_from_cholesky(&l)
        + 0.5 * p)
}

/// Sample covariance of `n` i.i.d. `N(0, Sigma_0)` draws, via the Cholesky
/// factor of `Sigma_0`. Deterministic for a fixed seed, independent of the
/// number of worker threads. `n >= p+1` is recommended (below that `S_n` is
/// singular).
pub fn sample_data(point: &FactorModelPoint, n: usize, seed: u64) -> Result<SampleCovariance> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let p = point.p();
    let l = point
        .sigma0
        .cholesky()
        .expect("validated covariance is positive definite");
    let partials: Vec<Matrix> = chunks(n, SAMPLE_CHUNK)
        .into_par_iter()
        .enumerate()
        .map(|(chunk_idx, (_, len))| {
            let mut rng = chunk_rng(seed, &[0x5a17, chunk_idx as u64]);
            let mut acc = Matrix::zeros(p, p);
            let mut z = vec![0.0; p];
            let mut x = vec![0.0; p];
            for _ in 0..len {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                for i in 0..p {
                    let mut sum = 0.0;
                    for k in 0..=i {
                        sum += l[(i, k)] * z[k];
                    }
                    x[i] = sum;
                }
                for i in 0..p {
                    for j in 0..=i {
                        acc[(i, j)] += x[i] * x[j];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = Matrix::zeros(p, p);
    for part in partials {
        total = total.add(&part);
    }
    let inv_n = 1.0 / n as f64;
    let mut s = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let v = total[(i, j)] * inv_n;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    SampleCovariance::new(s, n)
}

/// Sample covariances of nested prefixes of one simulated data stream: the
/// entry for each requested `n` is `S_n` over the first `n` draws. Grid
/// values must be positive and strictly increasing. Used by experiments that
/// want the sample-size axis to share data randomness.
pub fn sample_data_prefixes(
    point: &FactorModelPoint,
    n_grid: &[usize],
    seed: u64,
) -> Result<Vec<SampleCovariance>> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "prefix grid must be positive and strictly increasing".into(),
        ));
    }
    let p = point.p();
    let l = point
        .sigma0
        .cholesky()
        .expect("validated covariance is positive definite");
    let mut rng = chunk_rng(seed, &[0x5a17, 0]);
    let mut acc = Matrix::zeros(p, p);
    let mut z = vec![0.0; p];
    let mut x = vec![0.0; p];
    let mut out = Vec::with_capacity(n_grid.len());
    let mut grid_iter = n_grid.iter().copied().peekable();
    for sample_idx in 1..=*n_grid.last().expect("non-empty grid") {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for i in 0..p {
            let mut sum = 0.0;
            for k in 0..=i {
                sum += l[(i, k)] * z[k];
            }
            x[i] = sum;
        }
        for i in 0..p {
            for j in 0..=i {
                acc[(i, j)] += x[i] * x[j];
            }
        }
        if grid_iter.peek() == Some(&sample_idx) {
            grid_iter.next();
            let inv_n = 1.0 / sample_idx as f64;
            let mut s = Matrix::zeros(p, p);
            for i in 0..p {
                for j in 0..=i {
                    let v = acc[(i, j)] * inv_n;
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            out.push(SampleCovariance::new(s, sample_idx)?);
        }
    }
    Ok(out)
}

/// Sum of squared generators of the reduced fiber ideal at `point`:
/// `sum_{i<j} (lambda_i . lambda_j - sigma_ij)^2`. Zero exactly on the real
/// fiber of the off-diagonal constraints.
pub fn fiber_sos(point: &FactorModelPoint, lambda: &Matrix) -> f64 {
    let p = point.p();
    assert_eq!(lambda.nrows(), p, "loading matrix must have p rows");
    let mut total = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            let mut dot = 0.0;
            for c in 0..lambda.ncols() {
                dot += lambda[(i, c)] * lambda[(j, c)];
            }
            let g = dot - point.sigma0[(i, j)];
            total += g * g;
        }
    }
    total
}

/// One-factor singularity strata, by the number of non-zero loading entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OneFactorStratum {
    /// More than two non-zero entries: generic along the one-factor model.
    GenericA,
    /// Exactly two non-zero entries: the special singular stratum.
    TwoNonzeroB,
    /// At most one non-zero entry: diagonal covariance.
    DiagonalC,
}

/// Classifies a one-factor point by counting loading entries exceeding `tol`
/// in absolute value. Requires provenance with `k = 1`; classification from
/// a raw covariance alone is not attempted.
pub fn classify_one_factor(point: &FactorModelPoint, tol: f64) -> Result<OneFactorStratum> {
    let params = point.provenance().ok_or_else(|| {
        Error::MissingProvenance("one-factor classification needs loading provenance".into())
    })?;
    if params.k() != 1 {
        return Err(Error::MissingProvenance(format!(
            "one-factor classification needs k = 1 provenance, got k = {}",
            params.k()
        )));
    }
    let nonzero = (0..params.p())
        .filter(|&i| params.lambda()[(i, 0)].abs() > tol)
        .count();
    Ok(match nonzero {
        0 | 1 => OneFactorStratum::DiagonalC,
        2 => OneFactorStratum::TwoNonzeroB,
        _ => OneFactorStratum::GenericA,
    })
}

/// Conjugates the covariance by `diag(gamma)`: `sigma0 <- G sigma0 G`,
/// `psi <- gamma^2 psi`, `lambda <- G lambda`. The minimum rank is preserved.
pub fn torus_rescale(point: &FactorModelPoint, gamma: &[f64]) -> Result<FactorModelPoint> {
    let p = point.p();
    if gamma.len() != p {
        return Err(Error::InvalidInput("gamma length must equal p".into()));
    }
    if gamma.iter().any(|&g| g == 0.0 || !g.is_finite()) {
        return Err(Error::InvalidInput("gamma entries must be non-zero".into()));
    }
    let mut sigma = point.sigma0.clone();
    for i in 0..p {
        for j in 0..p {
            sigma[(i, j)] *= gamma[i] * gamma[j];
        }
    }
    let provenance = match point.provenance() {
        Some(params) => {
            let psi: Vec<f64> = params
                .psi()
                .iter()
                .zip(gamma)
                .map(|(&v, &g)| v * g * g)
                .collect();
            let mut lambda = params.lambda().clone();
            for i in 0..p {
                for c in 0..lambda.ncols() {
                    lambda[(i, c)] *= gamma[i];
                }
            }
            Some(FactorParams::new(psi, lambda)?)
        }
        None => None,
    };
    FactorModelPoint::validate(sigma, provenance, point.min_rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_rows(&v.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn parametrize_examples() {
        // zero loadings give the identity
        let params = FactorParams::new(vec![1.0, 1.0], Matrix::zeros(2, 1)).unwrap();
        assert_eq!(parametrize(&params), Matrix::identity(2));

        // rank-one update: diagonal 2, off-diagonal 1
        let params = FactorParams::new(vec![1.0; 3], col(&[1.0, 1.0, 1.0])).unwrap();
        let sigma = parametrize(&params);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sigma[(i, j)], if i == j { 2.0 } else { 1.0 });
            }
        }

        // psi=(1,2), Lambda=((1,0),(1,1)) -> [[2,1],[1,4]]
        let lambda = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let params = FactorParams::new(vec![1.0, 2.0], lambda).unwrap();
        let sigma = parametrize(&params);
        assert_eq!(
            (sigma[(0, 0)], sigma[(0, 1)], sigma[(1, 0)], sigma[(1, 1)]),
            (2.0, 1.0, 1.0, 4.0)
        );
    }

    #[test]
    fn model_dimension_examples() {
        assert_eq!(model_dimension(5, 2).unwrap(), (14, 14));
        assert_eq!(model_dimension(3, 1).unwrap(), (6, 6));
        assert_eq!(model_dimension(3, 3).unwrap(), (9, 6));
        assert!(model_dimension(2, 3).is_err());
    }

    #[test]
    fn neg_log_lik_examples() {
        let p = 3;
        let s = SampleCovariance::new(Matrix::identity(p), 10).unwrap();
        let expected = 0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln() + 0.5 * p as f64;
        assert_relative_eq!(
            neg_log_lik(&Matrix::identity(p), &s).unwrap(),
            expected,
            epsilon = 1e-12
        );
        // scalar case: Sigma = 2, S = 2
        let s = SampleCovariance::new(Matrix::diag(&[2.0]), 5).unwrap();
        let sigma = Matrix::diag(&[2.0]);
        let expected = 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * 2.0_f64.ln() + 0.5;
        assert_relative_eq!(neg_log_lik(&sigma, &s).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn sample_minimizes_neg_log_lik() {
        let point = FactorModelPoint::from_params(
            FactorParams::new(vec![1.0; 3], col(&[1.0, 1.0, 1.0])).unwrap(),
            Some(1),
        )
        .unwrap();
        let s = sample_data(&point, 500, 7).unwrap();
        let at_min = min_neg_log_lik(&s).unwrap();
        assert_relative_eq!(
            neg_log_lik(s.matrix(), &s).unwrap(),
            at_min,
            epsilon = 1e-10
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut m = Matrix::identity(3);
            for i in 0..3 {
                m[(i, i)] += rng.sample::<f64, _>(StandardNormal).abs() + 0.1;
                for j in 0..i {
                    let v = 0.2 * rng.sample::<f64, _>(StandardNormal);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            if m.cholesky().is_some() {
                assert!(neg_log_lik(&m, &s).unwrap() >= at_min - 1e-12);
            }
        }
    }

    #[test]
    fn sample_data_law_of_large_numbers() {
        let point = FactorModelPoint::from_sigma(Matrix::identity(2)).unwrap();
        let s = sample_data(&point, 1_000_000, 11).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((s.matrix()[(i, j)] - target).abs() < 0.01);
            }
        }
    }

    #[test]
    fn sample_data_rank_one_at_n_1() {
        let point = FactorModelPoint::from_sigma(Matrix::identity(3)).unwrap();
        let s = sample_data(&point, 1, 5).unwrap();
        assert_eq!(s.matrix().rank(1e-9), 1);
    }

    #[test]
    fn sample_data_unbiased_over_seeds() {
        // Fixed-seed regression check of unbiasedness: the mean of S_n over
        // 100 seeds at n=1000 sits within 0.005 of Sigma_0 entrywise.
        let point = FactorModelPoint::from_sigma(Matrix::identity(3)).unwrap();
        let mut mean = Matrix::zeros(3, 3);
        for seed in 5000..5100 {
            mean = mean.add(&sample_data(&point, 1000, seed).unwrap().matrix().scaled(0.01));
        }
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (mean[(i, j)] - target).abs() < 0.005,
                    "entry ({i},{j}) = {}",
                    mean[(i, j)]
                );
            }
        }
    }

    #[test]
    fn sample_data_is_seed_deterministic() {
        let point = FactorModelPoint::from_sigma(Matrix::identity(3)).unwrap();
        let a = sample_data(&point, 20_000, 99).unwrap();
        let b = sample_data(&point, 20_000, 99).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn fiber_sos_examples() {
        // diagonal covariance, zero loadings: every generator vanishes
        let diag = FactorModelPoint::from_sigma(Matrix::identity(3)).unwrap();
        assert_eq!(fiber_sos(&diag, &Matrix::zeros(3, 1)), 0.0);

        // off-diagonals all 1: Lambda = 1 lies on the fiber, Lambda = 0 does not
        let point = FactorModelPoint::from_params(
            FactorParams::new(vec![1.0; 3], col(&[1.0, 1.0, 1.0])).unwrap(),
            Some(1),
        )
        .unwrap();
        assert_relative_eq!(fiber_sos(&point, &col(&[1.0, 1.0, 1.0])), 0.0);
        assert_relative_eq!(fiber_sos(&point, &Matrix::zeros(3, 1)), 3.0);
    }

    #[test]
    fn fiber_sos_orthogonal_invariance() {
        // right-multiplying Lambda by a rotation leaves Lambda Lambda^T fixed
        let point = FactorModelPoint::from_params(
            FactorParams::new(
                vec![1.0, 2.0, 1.5],
                Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 1.0], vec![-0.3, 0.7]]).unwrap(),
            )
            .unwrap(),
            None,
        )
        .unwrap();
        let lambda =
            Matrix::from_rows(&[vec![0.4, -1.0], vec![0.9, 0.2], vec![1.1, 0.3]]).unwrap();
        let base = fiber_sos(&point, &lambda);
        for angle in [0.3_f64, 1.2, 2.9] {
            let (s, c) = angle.sin_cos();
            let q = Matrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
            let rotated = lambda.matmul(&q);
            assert_relative_eq!(fiber_sos(&point, &rotated), base, epsilon = 1e-10);
        }
    }

    #[test]
    fn classify_one_factor_strata() {
        let make = |lam: &[f64]| {
            FactorModelPoint::from_params(
                FactorParams::new(vec![1.0; lam.len()], col(lam)).unwrap(),
                None,
            )
            .unwrap()
        };
        assert_eq!(
            classify_one_factor(&make(&[1.0, 1.0, 1.0]), DEFAULT_CLASSIFY_TOL).unwrap(),
            OneFactorStratum::GenericA
        );
        assert_eq!(
            classify_one_factor(&make(&[1.0, 1.0, 0.0]), DEFAULT_CLASSIFY_TOL).unwrap(),
            OneFactorStratum::TwoNonzeroB
        );
        assert_eq!(
            classify_one_factor(&make(&[0.0, 0.0, 0.0]), DEFAULT_CLASSIFY_TOL).unwrap(),
            OneFactorStratum::DiagonalC
        );
        let raw = FactorModelPoint::from_sigma(Matrix::identity(3)).unwrap();
        assert!(matches!(
            classify_one_factor(&raw, DEFAULT_CLASSIFY_TOL),
            Err(Error::MissingProvenance(_))
        ));
    }

    #[test]
    fn torus_rescale_examples() {
        let point = FactorModelPoint::from_sigma(Matrix::identity(3)).unwrap();
        let same = torus_rescale(&point, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(same.sigma0(), point.sigma0());

        let scaled = torus_rescale(&point, &[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(scaled.sigma0(), &Matrix::diag(&[4.0, 1.0, 1.0]));

        assert!(torus_rescale(&point, &[0.0, 1.0, 1.0]).is_err());

        let with_prov = FactorModelPoint::from_params(
            FactorParams::new(vec![1.0; 3], col(&[1.0, 1.0, 0.0])).unwrap(),
            Some(1),
        )
        .unwrap();
        let rescaled = torus_rescale(&with_prov, &[2.0, -1.0, 0.5]).unwrap();
        assert_eq!(rescaled.min_rank(), Some(1));
        // rescaled provenance still reproduces the rescaled covariance
        assert!(rescaled.provenance().is_some());
    }

    #[test]
    fn parametrize_is_positive_definite() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let p = 1 + (rng.random::<u32>() % 5) as usize;
            let k = (rng.random::<u32>() % 4).min(p as u32) as usize;
            let psi: Vec<f64> = (0..p)
                .map(|_| 0.05 + rng.sample::<f64, _>(StandardNormal).abs())
                .collect();
            let mut lambda = Matrix::zeros(p, k.max(1));
            for i in 0..p {
                for j in 0..k.max(1) {
                    lambda[(i, j)] = if k == 0 {
                        0.0
                    } else {
                        rng.sample(StandardNormal)
                    };
                }
            }
            let sigma = parametrize(&FactorParams::new(psi, lambda).unwrap());
            assert!(sigma.cholesky().is_some());
        }
    }
}
