//! Pseudo-marginal random-walk Metropolis.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pseudolik::PosteriorKernel;
use crate::rng::Stream;
use crate::summaries::quantile;

/// Target acceptance rate for burn-in adaptation.
pub const TARGET_ACCEPTANCE: f64 = 0.234;
/// Bounds of the adapted proposal-scale multiplier.
pub const SCALE_MULTIPLIER_BOUNDS: (f64, f64) = (0.1, 10.0);
/// Maximum number of starting-point evaluations before giving up.
pub const MAX_INIT_ATTEMPTS: usize = 1000;
/// Evaluations of the given start, with fresh noise, before prior redraws.
const INIT_RETRIES: usize = 100;
/// Attempts before this one search from the requested start, guided by the
/// kernel's surrogate when it has one; later ones redraw from the kernel's
/// own start distribution.
const LOCAL_SEARCH: usize = 800;

const PROPOSAL: u64 = 0;
const KERNEL: u64 = 1;
const INIT: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwmConfig {
    /// Stored iterations after burn-in.
    pub iterations: usize,
    pub burnin: usize,
    /// Diagonal proposal standard deviations.
    pub proposal_scale: Vec<f64>,
    /// Tune a global scale multiplier, within [`SCALE_MULTIPLIER_BOUNDS`],
    /// during burn-in.
    pub adapt: bool,
}

impl RwmConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.proposal_scale.len() != dim {
            return Err(Error::Config(format!(
                "proposal_scale has {} entries but the parameter has {dim}",
                self.proposal_scale.len()
            )));
        }
        if let Some(s) = self.proposal_scale.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Config(format!(
                "proposal_scale entries must be positive and finite, got {s}"
            )));
        }
        Ok(())
    }
}

/// Stored post-burn-in states of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub param_names: Vec<String>,
    pub draws: Vec<Vec<f64>>,
    pub log_kernels: Vec<f64>,
    /// Whether the move into each stored state was an accepted proposal.
    pub accepted: Vec<bool>,
    /// Proposal standard deviations after adaptation.
    pub proposal_scale: Vec<f64>,
    /// Global multiplier reached at the end of burn-in.
    pub scale_multiplier: f64,
    pub burnin: usize,
    pub burnin_acceptance_rate: f64,
    pub init: Vec<f64>,
    pub init_attempts: usize,
    /// Seed the chain's stream was derived from, when known.
    pub seed: Option<u64>,
}

/// Random-walk Metropolis with a cached (pseudo-marginal) kernel value.
///
/// Iteration `t` draws its proposal from `stream.path(&[0, t])` and evaluates
/// the kernel with `stream.path(&[1, t])`.
pub fn rwm_sample<K: PosteriorKernel + ?Sized>(
    kernel: &K,
    init: &[f64],
    cfg: &RwmConfig,
    stream: &Stream,
) -> Result<Chain> {
    let p = kernel.dim();
    if init.len() != p {
        return Err(Error::Config(format!(
            "init has {} entries but the parameter has {p}",
            init.len()
        )));
    }
    cfg.validate(p)?;

    let (mut current, mut current_lk, init_attempts) = initialise(kernel, init, &cfg.proposal_scale, stream)?;
    let init_state = current.clone();
    let mut log_mult = 0.0_f64;
    let mut proposal = vec![0.0; p];
    let mut draws = Vec::with_capacity(cfg.iterations);
    let mut log_kernels = Vec::with_capacity(cfg.iterations);
    let mut accepted = Vec::with_capacity(cfg.iterations);
    let mut burnin_accepts = 0usize;

    for t in 0..cfg.burnin + cfg.iterations {
        let mut rng = stream.path(&[PROPOSAL, t as u64]).rng();
        let mult = log_mult.exp();
        for k in 0..p {
            let eps: f64 = rng.sample(StandardNormal);
            proposal[k] = current[k] + mult * cfg.proposal_scale[k] * eps;
        }
        let u: f64 = rng.random();
        let lk = kernel.log_kernel(&proposal, &stream.path(&[KERNEL, t as u64]));
        let alpha = if lk.is_finite() {
            (lk - current_lk).exp().min(1.0)
        } else {
            0.0
        };
        let accept = lk.is_finite() && u < alpha;
        if accept {
            current.copy_from_slice(&proposal);
            current_lk = lk;
        }
        if t < cfg.burnin {
            burnin_accepts += accept as usize;
            if cfg.adapt {
                log_mult += ((t + 1) as f64).powf(-0.6) * (alpha - TARGET_ACCEPTANCE);
                log_mult = log_mult.clamp(
                    SCALE_MULTIPLIER_BOUNDS.0.ln(),
                    SCALE_MULTIPLIER_BOUNDS.1.ln(),
                );
            }
        } else {
            draws.push(current.clone());
            log_kernels.push(current_lk);
            accepted.push(accept);
        }
    }

    let multiplier = log_mult.exp();
    Ok(Chain {
        param_names: (0..p).map(|k| format!("theta{k}")).collect(),
        draws,
        log_kernels,
        accepted,
        proposal_scale: cfg.proposal_scale.iter().map(|s| s * multiplier).collect(),
        scale_multiplier: multiplier,
        burnin: cfg.burnin,
        burnin_acceptance_rate: if cfg.burnin > 0 {
            burnin_accepts as f64 / cfg.burnin as f64
        } else {
            f64::NAN
        },
        init: init_state,
        init_attempts,
        seed: None,
    })
}

fn initialise<K: PosteriorKernel + ?Sized>(
    kernel: &K,
    init: &[f64],
    scale: &[f64],
    stream: &Stream,
) -> Result<(Vec<f64>, f64, usize)> {
    let mut walker = init.to_vec();
    let mut walker_lk = f64::NEG_INFINITY;
    for attempt in 0..MAX_INIT_ATTEMPTS {
        let s = stream.path(&[INIT, attempt as u64]);
        let theta = if attempt < INIT_RETRIES {
            init.to_vec()
        } else if attempt < LOCAL_SEARCH {
            let step = attempt - INIT_RETRIES;
            let mut rng = s.child(0).rng();
            let jitter: Vec<f64> = scale
                .iter()
                .map(|sd| sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let proposal: Vec<f64> = walker.iter().zip(&jitter).map(|(x, e)| x + e).collect();
            match kernel.surrogate_log_kernel(&proposal, &s.child(2)) {
                // Metropolis walk on the surrogate from the requested start
                Some(lk) => {
                    let u: f64 = rng.random();
                    if lk.is_finite() && (walker_lk == f64::NEG_INFINITY || u.ln() < lk - walker_lk) {
                        walker = proposal;
                        walker_lk = lk;
                    }
                    walker.clone()
                }
                // widening random search around the requested start
                None => {
                    let width = 1.0 + step as f64 / 35.0;
                    init.iter().zip(&jitter).map(|(x, e)| x + width * e).collect()
                }
            }
        } else {
            match kernel.sample_start(&s.child(0)) {
                Some(theta) => theta,
                None => return Err(Error::Initialization(attempt)),
            }
        };
        let lk = kernel.log_kernel(&theta, &s.child(1));
        if lk.is_finite() {
            return Ok((theta, lk, attempt + 1));
        }
    }
    Err(Error::Initialization(MAX_INIT_ATTEMPTS))
}

/// Posterior summary of one coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub mcse: f64,
}

impl Chain {
    pub fn with_param_names(mut self, names: Vec<String>) -> Self {
        self.param_names = names;
        self
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.param_names.len()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.iter().filter(|a| **a).count() as f64 / self.len().max(1) as f64
    }

    pub fn mean(&self, k: usize) -> f64 {
        mean(&self.column(k))
    }

    pub fn sd(&self, k: usize) -> f64 {
        sample_sd(&self.column(k))
    }

    /// Equal-tailed credible interval at `level`.
    pub fn credible_interval(&self, k: usize, level: f64) -> Result<(f64, f64)> {
        let col = self.column(k);
        let tail = (1.0 - level) / 2.0;
        Ok((quantile(&col, tail)?, quantile(&col, 1.0 - tail)?))
    }

    /// Monte Carlo standard error of the mean by batch means.
    pub fn mcse(&self, k: usize) -> f64 {
        batch_means_mcse(&self.column(k))
    }

    pub fn summarize(&self) -> Result<Vec<CoordinateSummary>> {
        if self.is_empty() {
            return Err(Error::EmptyChain);
        }
        (0..self.dim())
            .map(|k| {
                let (lo, hi) = self.credible_interval(k, 0.95)?;
                Ok(CoordinateSummary {
                    name: self.param_names[k].clone(),
                    mean: self.mean(k),
                    sd: self.sd(k),
                    ci_lower: lo,
                    ci_upper: hi,
                    mcse: self.mcse(k),
                })
            })
            .collect()
    }

    /// CSV with a header of parameter names, `log_kernel`, `accepted`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.param_names.clone();
        header.push("log_kernel".into());
        header.push("accepted".into());
        w.write_record(&header)?;
        for ((d, lk), a) in self.draws.iter().zip(&self.log_kernels).zip(&self.accepted) {
            let mut rec: Vec<String> = d.iter().map(|v| v.to_string()).collect();
            rec.push(lk.to_string());
            rec.push(if *a { "1" } else { "0" }.into());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws from a chain CSV: every column except `log_kernel`, `accepted` and
/// `distance`.
pub fn read_chain_draws(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let keep: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| !matches!(*h, "log_kernel" | "accepted" | "distance"))
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::Config(format!("{} has no parameter columns", path.display())));
    }
    let names = keep.iter().map(|&i| header[i].to_string()).collect();
    let mut draws = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = keep
            .iter()
            .map(|&i| {
                rec[i].trim().parse::<f64>().map_err(|e| {
                    Error::Config(format!("{} row {}: {e}", path.display(), line + 2))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        draws.push(row);
    }
    Ok((names, draws))
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Batch-means standard error with `floor(sqrt(T))` batches.
pub fn batch_means_mcse(x: &[f64]) -> f64 {
    let n = x.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&x[b * size..(b + 1) * size]))
        .collect();
    sample_sd(&means) / (batches as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::el::LOG_ZERO;

    struct StdNormal;
    impl PosteriorKernel for StdNormal {
        fn dim(&self) -> usize {
            1
        }
        fn log_kernel(&self, theta: &[f64], _: &Stream) -> f64 {
            -0.5 * theta[0] * theta[0]
        }
    }

    /// Flat kernel that is zero on a random 90% of evaluations.
    struct Flaky;
    impl PosteriorKernel for Flaky {
        fn dim(&self) -> usize {
            1
        }
        fn log_kernel(&self, _: &[f64], stream: &Stream) -> f64 {
            if stream.rng().random::<f64>() < 0.1 {
                0.0
            } else {
                LOG_ZERO
            }
        }
    }

    /// Standard normal truncated to theta > 0, with an always-zero start region.
    struct HalfNormal;
    impl PosteriorKernel for HalfNormal {
        fn dim(&self) -> usize {
            1
        }
        fn log_kernel(&self, theta: &[f64], _: &Stream) -> f64 {
            if theta[0] > 0.0 {
                -0.5 * theta[0] * theta[0]
            } else {
                LOG_ZERO
            }
        }
        fn sample_start(&self, stream: &Stream) -> Option<Vec<f64>> {
            Some(vec![stream.rng().random::<f64>() * 2.0 - 1.0])
        }
    }

    /// Noisy kernel: stream-dependent value, used to check caching.
    struct Noisy;
    impl PosteriorKernel for Noisy {
        fn dim(&self) -> usize {
            1
        }
        fn log_kernel(&self, theta: &[f64], stream: &Stream) -> f64 {
            -0.5 * theta[0] * theta[0] + 0.3 * stream.rng().sample::<f64, _>(StandardNormal)
        }
    }

    fn cfg(iterations: usize, burnin: usize, scale: f64, adapt: bool) -> RwmConfig {
        RwmConfig {
            iterations,
            burnin,
            proposal_scale: vec![scale],
            adapt,
        }
    }

    #[test]
    fn exact_standard_normal_target() {
        let chain = rwm_sample(&StdNormal, &[0.0], &cfg(100_000, 1000, 2.4, false), &Stream::new(1)).unwrap();
        let m = chain.mean(0);
        let v = chain.sd(0).powi(2);
        assert!(m.abs() < 0.03, "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "var {v}");
        let acc = chain.acceptance_rate();
        assert!(acc > 0.05 && acc < 0.95, "acceptance {acc}");
    }

    #[test]
    fn zero_scale_is_config_error() {
        let err = rwm_sample(&StdNormal, &[0.0], &cfg(10, 0, 0.0, false), &Stream::new(1)).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn adaptation_moves_toward_target() {
        let chain = rwm_sample(&StdNormal, &[0.0], &cfg(20_000, 20_000, 20.0, true), &Stream::new(2)).unwrap();
        assert!(chain.scale_multiplier < 0.5, "{}", chain.scale_multiplier);
        let acc = chain.acceptance_rate();
        assert!((acc - TARGET_ACCEPTANCE).abs() < 0.08, "{acc}");
    }

    #[test]
    fn adaptation_stops_at_lower_bound_when_noise_caps_acceptance() {
        let chain = rwm_sample(&Flaky, &[0.0], &cfg(1000, 5000, 1.0, true), &Stream::new(4)).unwrap();
        assert!((chain.scale_multiplier - SCALE_MULTIPLIER_BOUNDS.0).abs() < 1e-12, "{}", chain.scale_multiplier);
        assert!(chain.acceptance_rate() < 0.2);
    }

    #[test]
    fn zero_density_start_is_redrawn() {
        let chain = rwm_sample(&HalfNormal, &[-1.0], &cfg(100, 0, 0.5, false), &Stream::new(3)).unwrap();
        assert!(chain.init_attempts > 1);
        assert!(chain.init[0] > 0.0);
        assert!(chain.draws.iter().all(|d| d[0] > 0.0));
        assert!(chain.log_kernels.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn no_finite_start_errors() {
        struct Never;
        impl PosteriorKernel for Never {
            fn dim(&self) -> usize {
                1
            }
            fn log_kernel(&self, _: &[f64], _: &Stream) -> f64 {
                LOG_ZERO
            }
            fn sample_start(&self, _: &Stream) -> Option<Vec<f64>> {
                Some(vec![0.0])
            }
        }
        let err = rwm_sample(&Never, &[0.0], &cfg(10, 0, 1.0, false), &Stream::new(4)).unwrap_err();
        assert!(matches!(err, Error::Initialization(_)));
    }

    #[test]
    fn cached_kernel_only_changes_on_acceptance() {
        let chain = rwm_sample(&Noisy, &[0.0], &cfg(5000, 0, 1.0, false), &Stream::new(5)).unwrap();
        for t in 1..chain.len() {
            if !chain.accepted[t] {
                assert_eq!(chain.log_kernels[t], chain.log_kernels[t - 1]);
                assert_eq!(chain.draws[t], chain.draws[t - 1]);
            }
        }
    }

    #[test]
    fn reproducible() {
        let a = rwm_sample(&Noisy, &[0.0], &cfg(2000, 500, 1.0, true), &Stream::new(6)).unwrap();
        let b = rwm_sample(&Noisy, &[0.0], &cfg(2000, 500, 1.0, true), &Stream::new(6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_means_of_iid_matches_sd_over_root_n() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..40_000).map(|_| rng.sample(StandardNormal)).collect();
        let se = batch_means_mcse(&x);
        assert!((se / (1.0 / 200.0) - 1.0).abs() < 0.25, "{se}");
    }

    #[test]
    fn csv_round_trip() {
        let chain = rwm_sample(&StdNormal, &[0.0], &cfg(50, 0, 1.0, false), &Stream::new(8))
            .unwrap()
            .with_param_names(vec!["mu".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.csv");
        chain.write_csv(&path).unwrap();
        let (names, draws) = read_chain_draws(&path).unwrap();
        assert_eq!(names, vec!["mu".to_string()]);
        assert_eq!(draws, chain.draws);
    }
}
