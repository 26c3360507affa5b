//! Noisy log-likelihood estimators built from model simulations: the
//! empirical-likelihood estimator and the Gaussian synthetic likelihood.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::el::{solve_el, ConstraintMatrix, ElStatus, SolverOptions, LOG_ZERO};
use crate::error::{Error, Result};
use crate::models::GenerativeModel;
use crate::rng::Stream;
use crate::summaries::SummaryVector;

/// Largest covariance condition number the synthetic likelihood accepts.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "el")]
    EmpiricalLikelihood,
    #[serde(rename = "synthetic")]
    SyntheticLikelihood,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Simulated replicates per likelihood evaluation.
    pub m: usize,
    #[serde(default)]
    pub solver: SolverOptions,
    pub kind: EstimatorKind,
}

impl EstimatorConfig {
    pub fn empirical(m: usize) -> Self {
        Self {
            m,
            solver: SolverOptions::default(),
            kind: EstimatorKind::EmpiricalLikelihood,
        }
    }

    pub fn synthetic(m: usize) -> Self {
        Self {
            m,
            solver: SolverOptions::default(),
            kind: EstimatorKind::SyntheticLikelihood,
        }
    }

    /// Check `m` against the number of summaries `r`.
    pub fn validate(&self, r: usize) -> Result<()> {
        let needed = match self.kind {
            EstimatorKind::EmpiricalLikelihood => 2,
            EstimatorKind::SyntheticLikelihood => r + 2,
        };
        if self.m < needed {
            return Err(Error::Config(format!(
                "m = {} replicates is too few for {} summaries; need at least {needed}",
                self.m, r
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Diagnostics {
    El { status: ElStatus, iterations: usize },
    Synthetic { condition_number: f64 },
    /// Some simulated summary was not finite (for example an empty dataset).
    NonFiniteSummary,
    OutsideSupport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodEstimate {
    /// Finite, or [`LOG_ZERO`].
    pub log_value: f64,
    pub replicates: usize,
    pub diagnostics: Diagnostics,
}

impl LikelihoodEstimate {
    pub fn is_zero(&self) -> bool {
        self.log_value == LOG_ZERO
    }

    fn zero(replicates: usize, diagnostics: Diagnostics) -> Self {
        Self {
            log_value: LOG_ZERO,
            replicates,
            diagnostics,
        }
    }
}

/// Summaries of `m` datasets simulated at `theta`; replicate `i` uses
/// `stream.child(i)`.
pub fn simulate_replicates(
    model: &GenerativeModel,
    theta: &[f64],
    m: usize,
    stream: &Stream,
) -> Result<Vec<Vec<f64>>> {
    (0..m)
        .map(|i| {
            let mut row = Vec::with_capacity(model.summaries().len());
            model.simulate_summaries_into(theta, &stream.child(i as u64), &mut row)?;
            Ok(row)
        })
        .collect()
}

fn check_dims(sims: &[Vec<f64>], observed: &[f64]) -> Result<()> {
    if sims.is_empty() {
        return Err(Error::Shape("no simulated summaries".into()));
    }
    if let Some(row) = sims.iter().find(|row| row.len() != observed.len()) {
        return Err(Error::Shape(format!(
            "simulated summary has {} entries but the observed one has {}",
            row.len(),
            observed.len()
        )));
    }
    if observed.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("observed summaries must be finite".into()));
    }
    Ok(())
}

fn all_finite(sims: &[Vec<f64>]) -> bool {
    sims.iter().flatten().all(|v| v.is_finite())
}

/// Empirical log-likelihood of `observed` given simulated summary rows.
pub fn el_loglik_from_summaries(
    sims: &[Vec<f64>],
    observed: &[f64],
    opts: &SolverOptions,
) -> Result<LikelihoodEstimate> {
    check_dims(sims, observed)?;
    if !all_finite(sims) {
        return Ok(LikelihoodEstimate::zero(sims.len(), Diagnostics::NonFiniteSummary));
    }
    let h = ConstraintMatrix::from_differences(sims, observed)?;
    let sol = solve_el(&h, opts)?;
    Ok(LikelihoodEstimate {
        log_value: sol.log_el,
        replicates: sims.len(),
        diagnostics: Diagnostics::El {
            status: sol.status,
            iterations: sol.iterations,
        },
    })
}

/// Gaussian log density of `observed` under the sample mean and unbiased
/// sample covariance of the simulated summary rows.
pub fn synthetic_loglik_from_summaries(
    sims: &[Vec<f64>],
    observed: &[f64],
) -> Result<LikelihoodEstimate> {
    check_dims(sims, observed)?;
    let m = sims.len();
    let r = observed.len();
    if m < r + 2 {
        return Err(Error::Length { needed: r + 2, got: m });
    }
    if !all_finite(sims) {
        return Ok(LikelihoodEstimate::zero(m, Diagnostics::NonFiniteSummary));
    }
    let mut mean = DVector::<f64>::zeros(r);
    for row in sims {
        mean += DVector::from_column_slice(row);
    }
    mean /= m as f64;
    let mut cov = DMatrix::<f64>::zeros(r, r);
    for row in sims {
        let d = DVector::from_column_slice(row) - &mean;
        cov.syger(1.0, &d, &d, 1.0);
    }
    cov /= (m - 1) as f64;

    let eigen = cov.clone().symmetric_eigenvalues();
    let lo = eigen.min();
    let hi = eigen.max();
    let condition_number = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let diagnostics = Diagnostics::Synthetic { condition_number };
    if !(condition_number <= MAX_CONDITION_NUMBER) {
        return Ok(LikelihoodEstimate::zero(m, diagnostics));
    }
    let Some(chol) = cov.cholesky() else {
        return Ok(LikelihoodEstimate::zero(m, diagnostics));
    };
    let diff = DVector::from_column_slice(observed) - mean;
    let solved = chol.l().solve_lower_triangular(&diff).expect("cholesky factor is nonsingular");
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let log_value = -0.5 * (r as f64) * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * log_det
        - 0.5 * solved.norm_squared();
    Ok(LikelihoodEstimate {
        log_value,
        replicates: m,
        diagnostics,
    })
}

/// Empirical-likelihood estimate at `theta`.
pub fn el_loglik(
    model: &GenerativeModel,
    theta: &[f64],
    observed: &SummaryVector,
    cfg: &EstimatorConfig,
    stream: &Stream,
) -> Result<LikelihoodEstimate> {
    let sims = simulate_replicates(model, theta, cfg.m, stream)?;
    el_loglik_from_summaries(&sims, &observed.values, &cfg.solver)
}

/// Synthetic-likelihood estimate at `theta`.
pub fn synth_loglik(
    model: &GenerativeModel,
    theta: &[f64],
    observed: &SummaryVector,
    cfg: &EstimatorConfig,
    stream: &Stream,
) -> Result<LikelihoodEstimate> {
    let sims = simulate_replicates(model, theta, cfg.m, stream)?;
    synthetic_loglik_from_summaries(&sims, &observed.values)
}

/// Estimate at `theta` with the estimator chosen by `cfg.kind`; outside the
/// model support the estimate is zero without simulating.
pub fn estimate(
    model: &GenerativeModel,
    theta: &[f64],
    observed: &SummaryVector,
    cfg: &EstimatorConfig,
    stream: &Stream,
) -> Result<LikelihoodEstimate> {
    if !model.in_support(theta) {
        return Ok(LikelihoodEstimate::zero(0, Diagnostics::OutsideSupport));
    }
    match cfg.kind {
        EstimatorKind::EmpiricalLikelihood => el_loglik(model, theta, observed, cfg, stream),
        EstimatorKind::SyntheticLikelihood => synth_loglik(model, theta, observed, cfg, stream),
    }
}

/// Log prior plus estimated log likelihood; [`LOG_ZERO`] outside the support.
pub fn log_posterior_kernel(
    model: &GenerativeModel,
    theta: &[f64],
    observed: &SummaryVector,
    cfg: &EstimatorConfig,
    stream: &Stream,
) -> Result<f64> {
    let est = estimate(model, theta, observed, cfg, stream)?;
    if est.is_zero() {
        return Ok(LOG_ZERO);
    }
    Ok(model.prior().log_density(theta) + est.log_value)
}

/// Log-density evaluator consumed by the samplers. Implementations may be
/// noisy; `stream` supplies all randomness for one evaluation.
pub trait PosteriorKernel: Sync {
    fn dim(&self) -> usize;
    fn log_kernel(&self, theta: &[f64], stream: &Stream) -> f64;
    /// Starting points for retries when the initial state has zero density.
    fn sample_start(&self, stream: &Stream) -> Option<Vec<f64>> {
        let _ = stream;
        None
    }
    /// Smooth stand-in for the log kernel, finite wherever the kernel's
    /// support allows, used to steer the search for a starting point.
    fn surrogate_log_kernel(&self, theta: &[f64], stream: &Stream) -> Option<f64> {
        let _ = (theta, stream);
        None
    }
}

/// Log prior plus an independent-Gaussian fit of the observed summaries
/// against `m` simulated summary rows.
pub fn diagonal_gaussian_log_kernel(
    model: &GenerativeModel,
    theta: &[f64],
    observed: &SummaryVector,
    m: usize,
    stream: &Stream,
) -> Result<f64> {
    if !model.in_support(theta) {
        return Ok(LOG_ZERO);
    }
    let sims = simulate_replicates(model, theta, m, stream)?;
    if !all_finite(&sims) {
        return Ok(LOG_ZERO);
    }
    let mut total = model.prior().log_density(theta);
    for (k, obs) in observed.values.iter().enumerate() {
        let mean = sims.iter().map(|row| row[k]).sum::<f64>() / m as f64;
        let var = sims.iter().map(|row| (row[k] - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let sd = var.sqrt().max(1e-12 * (1.0 + mean.abs()));
        total -= 0.5 * ((obs - mean) / sd).powi(2) + sd.ln();
    }
    Ok(total)
}

/// Likelihood-free posterior for a model and observed summaries.
#[derive(Clone, Debug)]
pub struct Posterior {
    pub model: GenerativeModel,
    pub observed: SummaryVector,
    pub estimator: EstimatorConfig,
}

impl Posterior {
    pub fn new(
        model: GenerativeModel,
        observed: SummaryVector,
        estimator: EstimatorConfig,
    ) -> Result<Self> {
        if observed.len() != model.summaries().len() {
            return Err(Error::Shape(format!(
                "observed summary has {} entries but the model produces {}",
                observed.len(),
                model.summaries().len()
            )));
        }
        if !observed.is_finite() {
            return Err(Error::Domain("observed summaries must be finite".into()));
        }
        estimator.validate(observed.len())?;
        Ok(Self {
            model,
            observed,
            estimator,
        })
    }

    /// Summaries of `data` under the model's summary map, then [`Posterior::new`].
    pub fn from_data(
        model: GenerativeModel,
        data: &[f64],
        estimator: EstimatorConfig,
    ) -> Result<Self> {
        let observed = model.summaries().apply(data)?;
        Self::new(model, observed, estimator)
    }

    pub fn estimate(&self, theta: &[f64], stream: &Stream) -> Result<LikelihoodEstimate> {
        estimate(&self.model, theta, &self.observed, &self.estimator, stream)
    }
}

impl PosteriorKernel for Posterior {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_kernel(&self, theta: &[f64], stream: &Stream) -> f64 {
        // simulation errors only arise outside the support, which `estimate` screens
        log_posterior_kernel(&self.model, theta, &self.observed, &self.estimator, stream)
            .unwrap_or(LOG_ZERO)
    }

    fn sample_start(&self, stream: &Stream) -> Option<Vec<f64>> {
        Some(self.model.prior().sample(&mut stream.rng()))
    }

    fn surrogate_log_kernel(&self, theta: &[f64], stream: &Stream) -> Option<f64> {
        diagonal_gaussian_log_kernel(&self.model, theta, &self.observed, self.estimator.m, stream)
            .ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Example;

    #[test]
    fn two_replicates_symmetric_about_observed() {
        let est =
            el_loglik_from_summaries(&[vec![-1.0], vec![1.0]], &[0.0], &SolverOptions::default())
                .unwrap();
        assert!((est.log_value + 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn all_replicates_above_observed_is_zero() {
        let est = el_loglik_from_summaries(
            &[vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]],
            &[0.0, 0.0],
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(est.is_zero());
        assert!(matches!(est.diagnostics, Diagnostics::El { status: ElStatus::Infeasible, .. }));
    }

    #[test]
    fn non_finite_simulated_summary_is_zero() {
        let est = el_loglik_from_summaries(
            &[vec![-1.0], vec![f64::INFINITY], vec![1.0]],
            &[0.0],
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(est.is_zero());
        assert_eq!(est.diagnostics, Diagnostics::NonFiniteSummary);
    }

    #[test]
    fn synthetic_at_sample_mean_is_normalising_constant() {
        let sims = vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.0, -0.5], vec![0.5, 1.0]];
        let mean = [0.125, 0.25];
        let est = synthetic_loglik_from_summaries(&sims, &mean).unwrap();
        // unbiased covariance by hand
        let d: Vec<[f64; 2]> = sims.iter().map(|s| [s[0] - mean[0], s[1] - mean[1]]).collect();
        let c = |a: usize, b: usize| d.iter().map(|x| x[a] * x[b]).sum::<f64>() / 3.0;
        let det = c(0, 0) * c(1, 1) - c(0, 1) * c(0, 1);
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln();
        assert!((est.log_value - expected).abs() < 1e-12);
    }

    #[test]
    fn synthetic_standard_normal_at_two() {
        // mean 0, unbiased variance 1
        let a = (1.5f64).sqrt();
        let sims = vec![vec![-a], vec![0.0], vec![a], vec![0.0]];
        let est = synthetic_loglik_from_summaries(&sims, &[2.0]).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln() - 2.0;
        assert!((est.log_value - expected).abs() < 1e-12, "{}", est.log_value);
    }

    #[test]
    fn synthetic_singular_covariance_is_zero() {
        let sims = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![4.0, 8.0]];
        let est = synthetic_loglik_from_summaries(&sims, &[2.0, 4.0]).unwrap();
        assert!(est.is_zero());
        assert!(matches!(est.diagnostics, Diagnostics::Synthetic { .. }));
    }

    #[test]
    fn synthetic_rejects_too_few_replicates() {
        let sims = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 5.0]];
        assert!(synthetic_loglik_from_summaries(&sims, &[0.0, 0.0]).is_err());
        assert!(EstimatorConfig::synthetic(3).validate(2).is_err());
        assert!(EstimatorConfig::empirical(1).validate(1).is_err());
    }

    #[test]
    fn kernel_outside_prior_is_zero() {
        let ex = Example::Arch1;
        let model = ex.default_model();
        let data = ex.observed(model.n(), &Stream::new(1));
        let post = Posterior::from_data(model, &data, EstimatorConfig::empirical(20)).unwrap();
        assert_eq!(post.log_kernel(&[3.0, 1.5], &Stream::new(2)), LOG_ZERO);
        assert_eq!(post.log_kernel(&[-1.0, 0.5], &Stream::new(2)), LOG_ZERO);
    }

    #[test]
    fn kernel_adds_normal_prior() {
        let ex = Example::Normal;
        let model = ex.default_model();
        let data = ex.observed(100, &Stream::new(3));
        let post = Posterior::from_data(model.clone(), &data, EstimatorConfig::empirical(25)).unwrap();
        let stream = Stream::new(4);
        let est = post.estimate(&[0.0], &stream).unwrap();
        assert!(!est.is_zero());
        let k = post.log_kernel(&[0.0], &stream);
        let log_phi0 = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((k - (est.log_value + log_phi0)).abs() < 1e-12);
    }

    #[test]
    fn estimates_are_bounded_and_permutation_invariant() {
        let sims = vec![vec![-0.3, 1.2], vec![0.8, -0.4], vec![-0.5, -0.9], vec![0.2, 0.6], vec![0.4, 0.1]];
        let obs = [0.05, 0.1];
        let mut rev = sims.clone();
        rev.reverse();
        let opts = SolverOptions::default();
        let a = el_loglik_from_summaries(&sims, &obs, &opts).unwrap();
        let b = el_loglik_from_summaries(&rev, &obs, &opts).unwrap();
        assert!(a.log_value <= 0.0);
        assert!((a.log_value - b.log_value).abs() < 1e-12);
        let a = synthetic_loglik_from_summaries(&sims, &obs).unwrap();
        let b = synthetic_loglik_from_summaries(&rev, &obs).unwrap();
        assert!((a.log_value - b.log_value).abs() < 1e-12);
    }

    #[test]
    fn same_stream_same_estimate() {
        let ex = Example::Gk;
        let model = ex.default_model();
        let data = ex.observed(model.n(), &Stream::new(5));
        let post = Posterior::from_data(model, &data, EstimatorConfig::empirical(40)).unwrap();
        let s = Stream::new(6);
        assert_eq!(post.log_kernel(&ex.truth(), &s), post.log_kernel(&ex.truth(), &s));
    }
}
