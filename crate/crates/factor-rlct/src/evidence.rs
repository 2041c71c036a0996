//! Marginal likelihood estimation and singular model selection.
//!
//! The marginal likelihood of the `k`-factor model is the integral of
//! `exp(-n * l(Sigma_k(psi, Lambda) | S_n))` against the prior. It is
//! estimated here by plain prior sampling with a chunked, order-stable
//! log-sum-exp, which is transparent about its bias but has variance that
//! grows with `n`; experiments therefore stay at desk scale (p <= 3,
//! n <= 800) and average over replicates.
//!
//! The deviation `F_n = -log L - n * l(S_n | S_n)` grows like
//! `ell * log(n) - (m - 1) log log(n) + O(1)` with `ell` the learning
//! coefficient, so regressing `F_n` on `log n` recovers `ell`. BIC and sBIC
//! scores close the loop: BIC penalizes with half the model dimension, sBIC
//! with the learning-coefficient table, solving the usual fixed-point system
//! (positive root of a quadratic, model by model). The fixed-point
//! construction follows the sBIC literature; it is the one piece of
//! machinery here that the closed-form table does not supply itself.

use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{
    min_neg_log_lik, model_dimension, neg_log_lik, sample_data, FactorModelPoint, SampleCovariance,
};
use crate::linalg::Matrix;
use crate::mle::max_log_likelihood_profile;
use crate::seeds::{chunk_rng, chunks};
use crate::table::{sbic_penalty_matrix, PenaltyTable};

const DRAW_CHUNK: usize = 4096;

/// Prior: `psi_i ~ Exponential(psi_rate)` i.i.d., `Lambda_ij ~ N(0, lambda_sd^2)`
/// i.i.d. Everywhere positive, bounded and smooth on the parameter domain, so
/// learning coefficients do not depend on the specific rates chosen.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PriorSpec {
    pub psi_rate: f64,
    pub lambda_sd: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            psi_rate: 1.0,
            lambda_sd: 1.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.psi_rate > 0.0) || !(self.lambda_sd > 0.0) {
            return Err(Error::InvalidInput("prior rates must be positive".into()));
        }
        Ok(())
    }
}

/// A Monte-Carlo estimate of `log L_{k,n}(S_n)` with its delta-method
/// standard error.
#[derive(Clone, Debug, Serialize)]
pub struct EvidenceEstimate {
    pub log_marginal: f64,
    pub mc_stderr: f64,
    pub n: usize,
    pub k: usize,
    pub num_draws: usize,
    pub seed: u64,
}

/// Per-chunk shifted moments, merged in chunk order so the estimate does not
/// depend on the number of worker threads.
struct ChunkMoments {
    max: f64,
    sum_exp: f64,
    sum_exp_sq: f64,
}

/// Estimates the log marginal likelihood of the `k`-factor model by
/// averaging `exp(-n l(Sigma | S_n))` over `num_draws` prior draws.
///
/// The prior stream is ordered `psi` first and loading columns afterwards,
/// so runs with the same seed and growing `k` share their draws (nested
/// models see nested randomness).
pub fn log_marginal_likelihood(
    s: &SampleCovariance,
    k: usize,
    prior: &PriorSpec,
    num_draws: usize,
    seed: u64,
) -> Result<EvidenceEstimate> {
    prior.validate()?;
    if num_draws < 1000 {
        return Err(Error::InvalidInput("need at least 10^3 draws".into()));
    }
    if s.matrix().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("sample covariance".into()));
    }
    let p = s.p();
    let n = s.n();
    let exp_dist = Exp::new(prior.psi_rate).expect("validated rate");
    let moments: Vec<ChunkMoments> = chunks(num_draws, DRAW_CHUNK)
        .into_par_iter()
        .enumerate()
        .map(|(chunk_idx, (_, len))| {
            let mut rng = chunk_rng(seed, &[0xec1d, chunk_idx as u64]);
            let mut weights = Vec::with_capacity(len);
            let mut psi = vec![0.0; p];
            let mut lambda = Matrix::zeros(p, k);
            for _ in 0..len {
                for v in psi.iter_mut() {
                    *v = rng.sample(exp_dist);
                }
                for c in 0..k {
                    for i in 0..p {
                        lambda[(i, c)] = prior.lambda_sd * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                let mut sigma = lambda.matmul(&lambda.transpose());
                for i in 0..p {
                    sigma[(i, i)] += psi[i];
                }
                let w = match neg_log_lik(&sigma, s) {
                    Ok(ell) => -(n as f64) * ell,
                    Err(_) => f64::NEG_INFINITY,
                };
                weights.push(w);
            }
            let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return ChunkMoments {
                    max,
                    sum_exp: 0.0,
                    sum_exp_sq: 0.0,
                };
            }
            let mut sum_exp = 0.0;
            let mut sum_exp_sq = 0.0;
            for w in weights {
                let e = (w - max).exp();
                sum_exp += e;
                sum_exp_sq += e * e;
            }
            ChunkMoments {
                max,
                sum_exp,
                sum_exp_sq,
            }
        })
        .collect();

    let global_max = moments.iter().fold(f64::NEG_INFINITY, |m, c| m.max(c.max));
    if global_max == f64::NEG_INFINITY {
        return Err(Error::DegenerateEstimate(
            "every draw underflowed to zero likelihood".into(),
        ));
    }
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for c in &moments {
        if c.max == f64::NEG_INFINITY {
            continue;
        }
        let shift = (c.max - global_max).exp();
        s1 += shift * c.sum_exp;
        s2 += shift * shift * c.sum_exp_sq;
    }
    let n_draws = num_draws as f64;
    let mean = s1 / n_draws;
    let log_marginal = global_max + mean.ln();
    let var = ((s2 - s1 * s1 / n_draws) / (n_draws - 1.0)).max(0.0);
    let mc_stderr = (var / n_draws).sqrt() / mean;
    Ok(EvidenceEstimate {
        log_marginal,
        mc_stderr,
        n,
        k,
        num_draws,
        seed,
    })
}

/// Marginal-likelihood estimates for several sample covariances from one
/// shared prior-draw stream (common random numbers): every covariance sees
/// the same `num_draws` parameter draws, so the Monte-Carlo errors of the
/// estimates are positively correlated across the grid and each draw's
/// Cholesky factorization is reused. Marginally, each entry is the same
/// estimator as [`log_marginal_likelihood`].
pub fn log_marginal_likelihood_profile(
    samples: &[SampleCovariance],
    k: usize,
    prior: &PriorSpec,
    num_draws: usize,
    seed: u64,
) -> Result<Vec<EvidenceEstimate>> {
    prior.validate()?;
    if num_draws < 1000 {
        return Err(Error::InvalidInput("need at least 10^3 draws".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("no sample covariances".into()));
    }
    let p = samples[0].p();
    if samples.iter().any(|s| s.p() != p) {
        return Err(Error::InvalidInput("mixed dimensions in profile".into()));
    }
    for s in samples {
        if s.matrix().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("sample covariance".into()));
        }
    }
    let num_s = samples.len();
    let exp_dist = Exp::new(prior.psi_rate).expect("validated rate");
    let half_log_2pi = 0.5 * (p as f64) * (2.0 * std::f64::consts::PI).ln();
    let chunk_moments: Vec<Vec<ChunkMoments>> = chunks(num_draws, DRAW_CHUNK)
        .into_par_iter()
        .enumerate()
        .map(|(chunk_idx, (_, len))| {
            let mut rng = chunk_rng(seed, &[0xec1d, chunk_idx as u64]);
            let mut psi = vec![0.0; p];
            let mut lambda = Matrix::zeros(p, k);
            let mut weights: Vec<Vec<f64>> = vec![Vec::with_capacity(len); num_s];
            for _ in 0..len {
                for v in psi.iter_mut() {
                    *v = rng.sample(exp_dist);
                }
                for c in 0..k {
                    for i in 0..p {
                        lambda[(i, c)] = prior.lambda_sd * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                let mut sigma = lambda.matmul(&lambda.transpose());
                for i in 0..p {
                    sigma[(i, i)] += psi[i];
                }
                match sigma.cholesky() {
                    Some(l) => {
                        let log_det = Matrix::log_det_from_cholesky(&l);
                        for (s_idx, s) in samples.iter().enumerate() {
                            let mut trace = 0.0;
                            for j in 0..p {
                                let col: Vec<f64> =
                                    (0..p).map(|i| s.matrix()[(i, j)]).collect();
                                let x = l.solve_cholesky(&col);
                                trace += x[j];
                            }
                            let ell = half_log_2pi + 0.5 * log_det + 0.5 * trace;
                            weights[s_idx].push(-(s.n() as f64) * ell);
                        }
                    }
                    None => {
                        for w in weights.iter_mut() {
                            w.push(f64::NEG_INFINITY);
                        }
                    }
                }
            }
            weights
                .into_iter()
                .map(|ws| {
                    let max = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if max == f64::NEG_INFINITY {
                        return ChunkMoments {
                            max,
                            sum_exp: 0.0,
                            sum_exp_sq: 0.0,
                        };
                    }
                    let mut sum_exp = 0.0;
                    let mut sum_exp_sq = 0.0;
                    for w in ws {
                        let e = (w - max).exp();
                        sum_exp += e;
                        sum_exp_sq += e * e;
                    }
                    ChunkMoments {
                        max,
                        sum_exp,
                        sum_exp_sq,
                    }
                })
                .collect()
        })
        .collect();

    let n_draws = num_draws as f64;
    (0..num_s)
        .map(|s_idx| {
            let global_max = chunk_moments
                .iter()
                .fold(f64::NEG_INFINITY, |m, c| m.max(c[s_idx].max));
            if global_max == f64::NEG_INFINITY {
                return Err(Error::DegenerateEstimate(
                    "every draw underflowed to zero likelihood".into(),
                ));
            }
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for c in &chunk_moments {
                let c = &c[s_idx];
                if c.max == f64::NEG_INFINITY {
                    continue;
                }
                let shift = (c.max - global_max).exp();
                s1 += shift * c.sum_exp;
                s2 += shift * shift * c.sum_exp_sq;
            }
            let mean = s1 / n_draws;
            let var = ((s2 - s1 * s1 / n_draws) / (n_draws - 1.0)).max(0.0);
            Ok(EvidenceEstimate {
                log_marginal: global_max + mean.ln(),
                mc_stderr: (var / n_draws).sqrt() / mean,
                n: samples[s_idx].n(),
                k,
                num_draws,
                seed,
            })
        })
        .collect()
}

/// `F_n = -log L - n * l(S_n | S_n)`, the deviation that grows like
/// `ell * log n` in the Watanabe expansion.
pub fn watanabe_deviation(est: &EvidenceEstimate, s: &SampleCovariance) -> Result<f64> {
    if est.n != s.n() {
        return Err(Error::InvalidInput(
            "estimate and sample covariance disagree on n".into(),
        ));
    }
    Ok(-est.log_marginal - (est.n as f64) * min_neg_log_lik(s)?)
}

/// Least-squares fit `F_n ~ ell * log n + c` over `(n, F_n)` points.
/// Needs at least four distinct `n >= 20`. Returns `(ell_hat, intercept,
/// stderr)` with the residual-based slope standard error.
pub fn fit_learning_coefficient(points: &[(usize, f64)]) -> Result<(f64, f64, f64)> {
    let mut distinct: Vec<usize> = points.iter().map(|&(n, _)| n).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::DegenerateFit("need at least 4 distinct n values".into()));
    }
    if distinct.first().copied().unwrap_or(0) < 20 {
        return Err(Error::DegenerateFit("every n must be at least 20".into()));
    }
    let x: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|&(_, f)| f).collect();
    let m = x.len() as f64;
    let x_bar = x.iter().sum::<f64>() / m;
    let y_bar = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|&v| (v - x_bar) * (v - x_bar)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all n equal".into()));
    }
    let sxy: f64 = x
        .iter()
        .zip(&y)
        .map(|(&xv, &yv)| (xv - x_bar) * (yv - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let dof = (m - 2.0).max(1.0);
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(&xv, &yv)| {
            let r = yv - slope * xv - intercept;
            r * r
        })
        .sum();
    let stderr = (rss / dof / sxx).sqrt();
    Ok((slope, intercept, stderr))
}

/// `max_loglik - (min(d_k, p(p+1)/2) / 2) * log n`.
pub fn bic_score(max_loglik: f64, p: usize, k: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let (_, effective) = model_dimension(p, k)?;
    Ok(max_loglik - (effective as f64 / 2.0) * (n as f64).ln())
}

/// sBIC scores for the nested models `M_0, ..., M_kmax`.
///
/// With `L_ij = exp(maxloglik_i) * n^{-l_ij} * (log n)^{m_ij - 1}`, the
/// scores are `log L'_i` where the `L'_i > 0` solve
/// `sum_{j <= i} (L'_i - L_ij) L'_j = 0`, solved model by model as the
/// positive root of a quadratic. Bound-only table cells use `m = 1` by
/// convention. Everything is computed under a common exponential shift, so
/// large `n * loglik` magnitudes do not overflow.
pub fn sbic_scores(
    max_logliks: &[f64],
    p: usize,
    n: usize,
    penalties: &PenaltyTable,
) -> Result<Vec<f64>> {
    let k_max = penalties.k_max();
    if penalties.p() != p {
        return Err(Error::InvalidInput("penalty table is for a different p".into()));
    }
    if max_logliks.len() != k_max + 1 {
        return Err(Error::InvalidInput(format!(
            "need {} log-likelihoods, got {}",
            k_max + 1,
            max_logliks.len()
        )));
    }
    if max_logliks.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite max log-likelihood".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("sBIC needs n >= 2".into()));
    }
    let log_n = (n as f64).ln();
    let log_log_n = log_n.ln();
    // log L_ij for j <= i
    let log_l = |i: usize, j: usize| -> f64 {
        let cell = penalties.cell(i, j);
        let mult = cell.mult.unwrap_or(1);
        let mut v = max_logliks[i] - cell.value.to_f64() * log_n;
        if mult > 1 {
            v += f64::from(mult - 1) * log_log_n;
        }
        v
    };
    let mut shift = f64::NEG_INFINITY;
    for i in 0..=k_max {
        for j in 0..=i {
            shift = shift.max(log_l(i, j));
        }
    }
    let mut primed: Vec<f64> = Vec::with_capacity(k_max + 1);
    let mut scores = Vec::with_capacity(k_max + 1);
    for i in 0..=k_max {
        let l_ii = (log_l(i, i) - shift).exp();
        let mut b = -l_ii;
        let mut c = 0.0;
        for j in 0..i {
            b += primed[j];
            c += (log_l(i, j) - shift).exp() * primed[j];
        }
        let disc = (b * b + 4.0 * c).sqrt();
        // For b > 0 the direct formula cancels; the conjugate form is stable.
        let root = if b > 0.0 {
            if disc + b == 0.0 {
                0.0
            } else {
                2.0 * c / (disc + b)
            }
        } else {
            0.5 * (disc - b)
        };
        if !(root > 0.0) {
            return Err(Error::DegenerateEstimate(
                "sBIC fixed point degenerated to zero".into(),
            ));
        }
        primed.push(root);
        scores.push(root.ln() + shift);
    }
    Ok(scores)
}

// ---------------------------------------------------------------------------
// Experiment harnesses
// ---------------------------------------------------------------------------

/// One `(replicate, n)` cell of an evidence experiment.
#[derive(Clone, Debug, Serialize)]
pub struct EvidenceRow {
    pub replicate: usize,
    pub n: usize,
    pub k: usize,
    pub log_marginal: f64,
    pub mc_stderr: f64,
    pub f_n: f64,
}

/// Evidence experiment output: all rows plus one fitted slope per replicate.
#[derive(Clone, Debug, Serialize)]
pub struct EvidenceExperiment {
    pub rows: Vec<EvidenceRow>,
    /// `(ell_hat, intercept, stderr)` per replicate.
    pub fits: Vec<(f64, f64, f64)>,
    pub mean_slope: f64,
}

/// Simulates data from `point`, estimates `log L` for the `k`-factor model
/// on a grid of sample sizes, and fits the Watanabe slope per replicate.
///
/// Within a replicate the sample sizes are prefixes of one data stream and
/// the estimates share one prior-draw stream, so the randomness along the
/// sample-size axis is common across the grid.
pub fn evidence_experiment(
    point: &FactorModelPoint,
    k: usize,
    n_grid: &[usize],
    replicates: usize,
    num_draws: usize,
    prior: &PriorSpec,
    seed: u64,
) -> Result<EvidenceExperiment> {
    if n_grid.is_empty() || replicates == 0 {
        return Err(Error::InvalidInput("empty experiment grid".into()));
    }
    let mut sorted = n_grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let rows: Vec<Vec<EvidenceRow>> = (0..replicates)
        .into_par_iter()
        .map(|rep| -> Result<Vec<EvidenceRow>> {
            let data_seed = crate::seeds::derive_seed(seed, &[0xda7a, rep as u64]);
            let mc_seed = crate::seeds::derive_seed(seed, &[0xdca0, rep as u64]);
            let samples = crate::factor::sample_data_prefixes(point, &sorted, data_seed)?;
            let ests = log_marginal_likelihood_profile(&samples, k, prior, num_draws, mc_seed)?;
            samples
                .iter()
                .zip(&ests)
                .map(|(s, est)| {
                    Ok(EvidenceRow {
                        replicate: rep,
                        n: s.n(),
                        k,
                        log_marginal: est.log_marginal,
                        mc_stderr: est.mc_stderr,
                        f_n: watanabe_deviation(est, s)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<EvidenceRow> = rows.into_iter().flatten().collect();
    let mut fits = Vec::with_capacity(replicates);
    for rep in 0..replicates {
        let points: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.replicate == rep)
            .map(|r| (r.n, r.f_n))
            .collect();
        fits.push(fit_learning_coefficient(&points)?);
    }
    let mean_slope = fits.iter().map(|f| f.0).sum::<f64>() / fits.len() as f64;
    Ok(EvidenceExperiment {
        rows,
        fits,
        mean_slope,
    })
}

/// Selection frequencies of sBIC vs BIC over simulated replicates.
#[derive(Clone, Debug, Serialize)]
pub struct SbicExperiment {
    pub p: usize,
    pub k_max: usize,
    pub true_r: usize,
    pub n: usize,
    pub replicates: usize,
    /// Fraction of replicates in which each model was selected.
    pub sbic_freq: Vec<f64>,
    pub bic_freq: Vec<f64>,
}

/// The true covariance used by [`sbic_experiment`]: unit noise plus a
/// deterministic `p x r` loading matrix of full rank `r` (Vandermonde
/// columns, so every minor that should be non-zero is non-zero).
pub fn true_point_for_rank(p: usize, r: usize) -> Result<FactorModelPoint> {
    if r > p {
        return Err(Error::InvalidInput(format!("rank {r} exceeds p = {p}")));
    }
    let mut lambda = Matrix::zeros(p, r);
    for i in 0..p {
        let v = 0.6 + 0.8 * (i as f64 + 1.0) / p as f64;
        for j in 0..r {
            lambda[(i, j)] = v.powi(j as i32 + 1);
        }
    }
    let params = crate::factor::FactorParams::new(vec![1.0; p], lambda)?;
    FactorModelPoint::from_params(params, Some(r))
}

/// Simulates `replicates` data sets of size `n` from a rank-`true_r` truth,
/// fits every model `k <= k_max` by maximum likelihood, and records which
/// model BIC and sBIC select (ties go to the smaller model).
pub fn sbic_experiment(
    p: usize,
    k_max: usize,
    true_r: usize,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<SbicExperiment> {
    if replicates == 0 {
        return Err(Error::InvalidInput("need at least one replicate".into()));
    }
    let point = true_point_for_rank(p, true_r)?;
    let penalties = sbic_penalty_matrix(p, k_max)?;
    let selections: Vec<(usize, usize)> = (0..replicates)
        .into_par_iter()
        .map(|rep| -> Result<(usize, usize)> {
            let data_seed = crate::seeds::derive_seed(seed, &[0x5b1c, rep as u64]);
            let s = sample_data(&point, n, data_seed)?;
            let logliks = max_log_likelihood_profile(&s, k_max, data_seed ^ 0x5eed)?;
            let bic: Vec<f64> = (0..=k_max)
                .map(|k| bic_score(logliks[k], p, k, n))
                .collect::<Result<_>>()?;
            let sbic = sbic_scores(&logliks, p, n, &penalties)?;
            Ok((argmax(&sbic), argmax(&bic)))
        })
        .collect::<Result<_>>()?;
    let mut sbic_counts = vec![0usize; k_max + 1];
    let mut bic_counts = vec![0usize; k_max + 1];
    for (s_sel, b_sel) in selections {
        sbic_counts[s_sel] += 1;
        bic_counts[b_sel] += 1;
    }
    let to_freq = |counts: Vec<usize>| {
        counts
            .into_iter()
            .map(|c| c as f64 / replicates as f64)
            .collect()
    };
    Ok(SbicExperiment {
        p,
        k_max,
        true_r,
        n,
        replicates,
        sbic_freq: to_freq(sbic_counts),
        bic_freq: to_freq(bic_counts),
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
