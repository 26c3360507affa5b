//! Single inference runs.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Method, Resolved, RunConfig};
use super::output::{write_json, write_manifest};
use crate::error::Result;
use crate::rng::Stream;
use crate::samplers::{
    regression_adjust, rejection_abc, rwm_sample, AbcConfig, AbcResult, AbcSelection, Chain,
    CoordinateSummary,
};
use crate::summaries::quantile;

/// Stream index of the MCMC chain under the run seed.
pub const CHAIN_STREAM: u64 = 1;
/// Stream index of the rejection-ABC simulations under the run seed.
pub const ABC_STREAM: u64 = 2;

/// Rejection-ABC details of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcSummary {
    pub total: usize,
    pub kept: usize,
    pub tolerance: f64,
    pub regression_adjusted: bool,
}

/// Scalar results of a run, written as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub example: String,
    pub method: String,
    pub n: usize,
    pub m: Option<usize>,
    pub seed: u64,
    pub summary_labels: Vec<String>,
    pub observed_summaries: Vec<f64>,
    pub param_names: Vec<String>,
    pub posterior: Vec<CoordinateSummary>,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    pub acceptance_rate: Option<f64>,
    pub burnin_acceptance_rate: Option<f64>,
    pub scale_multiplier: Option<f64>,
    pub init: Option<Vec<f64>>,
    pub abc: Option<AbcSummary>,
    pub wall_time_seconds: Option<f64>,
}

/// Draws of a run: an MCMC chain or a rejection-ABC sample.
#[derive(Clone, Debug)]
pub enum RunDraws {
    Chain(Chain),
    Abc(AbcResult),
}

impl RunDraws {
    pub fn draws(&self) -> &[Vec<f64>] {
        match self {
            RunDraws::Chain(c) => &c.draws,
            RunDraws::Abc(a) => a.posterior_draws(),
        }
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        match self {
            RunDraws::Chain(c) => c.write_csv(path),
            RunDraws::Abc(a) => a.write_csv(path),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub draws: RunDraws,
    pub summary: RunSummary,
}

/// Posterior mean, sd, equal-tailed 95% interval and standard error of each
/// coordinate of independent draws.
pub fn summarize_iid(names: &[String], draws: &[Vec<f64>]) -> Result<Vec<CoordinateSummary>> {
    if draws.is_empty() {
        return Err(crate::Error::EmptyChain);
    }
    let n = draws.len() as f64;
    (0..names.len())
        .map(|k| {
            let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            Ok(CoordinateSummary {
                name: names[k].clone(),
                mean,
                sd,
                ci_lower: quantile(&col, 0.025)?,
                ci_upper: quantile(&col, 0.975)?,
                mcse: sd / n.sqrt(),
            })
        })
        .collect()
}

/// Run the configured sampler and, with an `output_dir`, write
/// `chain.csv`, `summary.json` and `manifest.json` there.
pub fn run_inference(cfg: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let resolved = cfg.resolve()?;
    let outcome = run_resolved(cfg, &resolved)?;
    let mut outcome = outcome;
    if cfg.record_wall_time {
        outcome.summary.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    }
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        outcome.draws.write_csv(&dir.join("chain.csv"))?;
        write_json(&dir.join("summary.json"), &outcome.summary)?;
        write_manifest(dir, "run", cfg, cfg.seed, &["chain.csv", "summary.json"])?;
    }
    Ok(outcome)
}

/// Sample from an already resolved configuration without writing files.
pub fn run_resolved(cfg: &RunConfig, resolved: &Resolved) -> Result<RunOutcome> {
    let model = &resolved.model;
    let names = model.param_names();
    let root = Stream::new(cfg.seed);
    let mut summary = RunSummary {
        example: cfg.example.name().to_string(),
        method: cfg.method.name().to_string(),
        n: model.n(),
        m: None,
        seed: cfg.seed,
        summary_labels: resolved.observed.labels.clone(),
        observed_summaries: resolved.observed.values.clone(),
        param_names: names.clone(),
        posterior: Vec::new(),
        iterations: None,
        burnin: None,
        acceptance_rate: None,
        burnin_acceptance_rate: None,
        scale_multiplier: None,
        init: None,
        abc: None,
        wall_time_seconds: None,
    };
    let draws = match (&resolved.posterior, cfg.method) {
        (Some(posterior), _) => {
            let mut chain = rwm_sample(
                posterior,
                &resolved.init,
                &resolved.rwm,
                &root.child(CHAIN_STREAM),
            )?
            .with_param_names(names);
            chain.seed = Some(cfg.seed);
            summary.m = Some(posterior.estimator.m);
            summary.posterior = chain.summarize()?;
            summary.iterations = Some(resolved.rwm.iterations);
            summary.burnin = Some(resolved.rwm.burnin);
            summary.acceptance_rate = Some(chain.acceptance_rate());
            summary.burnin_acceptance_rate =
                Some(chain.burnin_acceptance_rate).filter(|v| v.is_finite());
            summary.scale_multiplier = Some(chain.scale_multiplier);
            summary.init = Some(chain.init.clone());
            RunDraws::Chain(chain)
        }
        (None, Method::RejectionAbc) => {
            let abc_cfg = AbcConfig {
                total: cfg.abc_total,
                selection: AbcSelection::Count(cfg.abc_keep),
            };
            let mut res = rejection_abc(
                model,
                &resolved.observed.values,
                &abc_cfg,
                &root.child(ABC_STREAM),
            )?;
            if cfg.regression_adjust {
                res.adjusted = Some(regression_adjust(&res, &resolved.observed.values)?);
            }
            summary.posterior = summarize_iid(&names, res.posterior_draws())?;
            summary.abc = Some(AbcSummary {
                total: res.total,
                kept: res.accepted.len(),
                tolerance: res.tolerance,
                regression_adjusted: res.adjusted.is_some(),
            });
            RunDraws::Abc(res)
        }
        (None, _) => unreachable!("likelihood methods always resolve a posterior"),
    };
    Ok(RunOutcome { draws, summary })
}
