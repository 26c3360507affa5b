//! Posterior concentration as the dataset grows, in the normal example.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{default_proposal_scale, Method, SummaryChoice};
use super::output::{write_json, write_manifest};
use crate::el::SolverOptions;
use crate::error::{Error, Result};
use crate::models::Example;
use crate::pseudolik::{EstimatorConfig, Posterior};
use crate::rng::Stream;
use crate::samplers::{rwm_sample, RwmConfig};

const DATA_STREAM: u64 = 0;
const CHAIN_STREAM: u64 = 1;

fn default_n_list() -> Vec<usize> {
    vec![100, 400, 1600]
}
fn default_m() -> usize {
    25
}
fn default_iterations() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}
fn default_summaries() -> SummaryChoice {
    "mean".into()
}
fn default_slack() -> f64 {
    1.15
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    /// Strictly increasing dataset sizes.
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_iterations")]
    pub burnin: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_summaries")]
    pub summaries: SummaryChoice,
    #[serde(default)]
    pub method: Method,
    /// Allowed growth of the posterior sd from one size to the next.
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_true")]
    pub adapt: bool,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub posterior_mean: f64,
    pub posterior_sd: f64,
    pub mcse: f64,
    /// Conjugate posterior mean `sum x / (n + 1)`.
    pub analytic_mean: f64,
    /// Conjugate posterior sd `1 / sqrt(n + 1)`.
    pub analytic_sd: f64,
    /// `|posterior mean - 0| < 3 posterior sd`.
    pub bias_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub slack: f64,
    pub rows: Vec<ConcentrationRow>,
    /// Every sd is below the previous one times `slack`.
    pub monotone_sd: bool,
    pub bias_ok: bool,
    pub passed: bool,
}

/// Run one chain per dataset size. The observed datasets come from a single
/// stream, so each is a prefix of the next larger one.
pub fn concentration_test(cfg: &ConcentrationConfig) -> Result<ConcentrationReport> {
    if cfg.n_list.is_empty() || cfg.n_list.windows(2).any(|w| w[0] >= w[1]) || cfg.n_list[0] == 0 {
        return Err(Error::Config("n_list must be positive and strictly increasing".into()));
    }
    if cfg.iterations == 0 || !(cfg.slack >= 1.0) {
        return Err(Error::Config("iterations must be positive and slack at least 1".into()));
    }
    let kind = cfg
        .method
        .estimator_kind()
        .ok_or_else(|| Error::Config("concentration test needs method el or synthetic".into()))?;
    let example = Example::Normal;
    let spec = cfg.summaries.resolve(example)?;
    let estimator = EstimatorConfig { m: cfg.m, solver: cfg.solver, kind };
    estimator.validate(spec.len())?;
    let root = Stream::new(cfg.seed);
    let largest = *cfg.n_list.last().expect("non-empty");
    let data = example.observed(largest, &root.child(DATA_STREAM));
    let truth = example.truth()[0];

    let rows: Vec<ConcentrationRow> = cfg
        .n_list
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let x = &data[..n];
            let model = example.model(n, spec.clone())?;
            let post = Posterior::from_data(model, x, estimator)?;
            let rwm = RwmConfig {
                iterations: cfg.iterations,
                burnin: cfg.burnin,
                proposal_scale: default_proposal_scale(example, n),
                adapt: cfg.adapt,
            };
            let init = [x.iter().sum::<f64>() / n as f64];
            let chain = rwm_sample(&post, &init, &rwm, &root.path(&[CHAIN_STREAM, i as u64]))?;
            let mean = chain.mean(0);
            let sd = chain.sd(0);
            Ok(ConcentrationRow {
                n,
                posterior_mean: mean,
                posterior_sd: sd,
                mcse: chain.mcse(0),
                analytic_mean: x.iter().sum::<f64>() / (n + 1) as f64,
                analytic_sd: 1.0 / ((n + 1) as f64).sqrt(),
                bias_ok: (mean - truth).abs() < 3.0 * sd,
            })
        })
        .collect::<Result<_>>()?;
    let monotone_sd = rows
        .windows(2)
        .all(|w| w[1].posterior_sd < w[0].posterior_sd * cfg.slack);
    let bias_ok = rows.iter().all(|r| r.bias_ok);
    let report = ConcentrationReport {
        slack: cfg.slack,
        rows,
        monotone_sd,
        bias_ok,
        passed: monotone_sd && bias_ok,
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("concentration.json"), &report)?;
        let mut w = csv::Writer::from_path(dir.join("concentration.csv"))?;
        w.write_record([
            "n",
            "posterior_mean",
            "posterior_sd",
            "mcse",
            "analytic_mean",
            "analytic_sd",
        ])?;
        for r in &report.rows {
            w.write_record([
                r.n.to_string(),
                r.posterior_mean.to_string(),
                r.posterior_sd.to_string(),
                r.mcse.to_string(),
                r.analytic_mean.to_string(),
                r.analytic_sd.to_string(),
            ])?;
        }
        w.flush()?;
        write_manifest(
            dir,
            "concentration",
            cfg,
            cfg.seed,
            &["concentration.csv", "concentration.json"],
        )?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_sizes() {
        let cfg = ConcentrationConfig {
            n_list: vec![400, 100],
            ..Default::default()
        };
        assert!(concentration_test(&cfg).unwrap_err().is_validation());
    }

    #[test]
    fn analytic_sd_decreases() {
        let cfg = ConcentrationConfig {
            n_list: vec![50, 200],
            iterations: 300,
            burnin: 300,
            ..Default::default()
        };
        let report = concentration_test(&cfg).unwrap();
        assert!(report.rows[1].analytic_sd < report.rows[0].analytic_sd);
        assert_eq!(report.rows.len(), 2);
    }
}
