//! Frequentist coverage of credible intervals in the normal location example.

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

fn default_n() -> usize {
    100
}
fn default_m() -> usize {
    25
}
fn default_iterations() -> usize {
    10_000
}
fn default_replicates() -> usize {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_level() -> f64 {
    0.95
}
fn default_true() -> bool {
    true
}
fn default_sets() -> Vec<SummaryChoice> {
    ["mean", "median", "mean_median", "four_moments"]
        .into_iter()
        .map(SummaryChoice::from)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_iterations")]
    pub burnin: usize,
    /// Independent datasets per constraint set.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_sets")]
    pub constraint_sets: Vec<SummaryChoice>,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub proposal_scale: Option<f64>,
    #[serde(default = "default_true")]
    pub adapt: bool,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub label: String,
    pub coverage: f64,
    pub average_length: f64,
    /// Replicates whose chain could not be started.
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub replicates: usize,
    pub nominal_level: f64,
    pub n: usize,
    pub m: usize,
    /// Exact conjugate posterior: nominal coverage and interval length.
    pub truth: CoverageRow,
    /// One row per requested constraint set, in request order.
    pub rows: Vec<CoverageRow>,
}

/// Interval for the true mean 0 from each replicate dataset under each
/// constraint set. Replicate `j` uses the same dataset for every set.
pub fn coverage_study(cfg: &CoverageConfig) -> Result<CoverageReport> {
    validate(cfg)?;
    let example = Example::Normal;
    let specs = cfg
        .constraint_sets
        .iter()
        .map(|c| c.resolve(example))
        .collect::<Result<Vec<_>>>()?;
    let kind = cfg
        .method
        .estimator_kind()
        .ok_or_else(|| Error::Config("coverage study needs method el or synthetic".into()))?;
    let root = Stream::new(cfg.seed);
    let scale = cfg
        .proposal_scale
        .unwrap_or_else(|| default_proposal_scale(example, cfg.n)[0]);
    let rwm = RwmConfig {
        iterations: cfg.iterations,
        burnin: cfg.burnin,
        proposal_scale: vec![scale],
        adapt: cfg.adapt,
    };
    rwm.validate(1)?;
    let truth = example.truth()[0];

    let datasets: Vec<Vec<f64>> = (0..cfg.replicates)
        .map(|j| example.observed(cfg.n, &root.path(&[DATA_STREAM, j as u64])))
        .collect();
    let mut models = Vec::with_capacity(specs.len());
    for spec in &specs {
        let model = example.model(cfg.n, spec.clone())?;
        EstimatorConfig { m: cfg.m, solver: cfg.solver, kind }.validate(spec.len())?;
        models.push(model);
    }

    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|s| (0..cfg.replicates).map(move |j| (s, j)))
        .collect();
    let intervals: Vec<Option<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(s, j)| {
            let estimator = EstimatorConfig { m: cfg.m, solver: cfg.solver, kind };
            let post = Posterior::from_data(models[s].clone(), &datasets[j], estimator)?;
            let init = [datasets[j].iter().sum::<f64>() / cfg.n as f64];
            let stream = root.path(&[CHAIN_STREAM, s as u64, j as u64]);
            match rwm_sample(&post, &init, &rwm, &stream) {
                Ok(chain) => Ok(Some(chain.credible_interval(0, cfg.level)?)),
                Err(Error::Initialization(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let rows = cfg
        .constraint_sets
        .iter()
        .enumerate()
        .map(|(s, choice)| {
            let mine = &intervals[s * cfg.replicates..(s + 1) * cfg.replicates];
            let ok: Vec<(f64, f64)> = mine.iter().flatten().copied().collect();
            let covered = ok.iter().filter(|(lo, hi)| *lo <= truth && truth <= *hi).count();
            CoverageRow {
                label: choice.label(),
                // a failed start counts as a miss
                coverage: covered as f64 / cfg.replicates as f64,
                average_length: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / ok.len() as f64
                },
                failed: cfg.replicates - ok.len(),
            }
        })
        .collect();
    let report = CoverageReport {
        replicates: cfg.replicates,
        nominal_level: cfg.level,
        n: cfg.n,
        m: cfg.m,
        truth: CoverageRow {
            label: "truth".into(),
            coverage: cfg.level,
            average_length: analytic_interval_length(cfg.n, cfg.level),
            failed: 0,
        },
        rows,
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("coverage.json"), &report)?;
        let mut w = csv::Writer::from_path(dir.join("coverage.csv"))?;
        w.write_record(["label", "coverage", "average_length", "failed"])?;
        for r in std::iter::once(&report.truth).chain(&report.rows) {
            w.write_record([
                r.label.clone(),
                r.coverage.to_string(),
                r.average_length.to_string(),
                r.failed.to_string(),
            ])?;
        }
        w.flush()?;
        write_manifest(dir, "coverage", cfg, cfg.seed, &["coverage.csv", "coverage.json"])?;
    }
    Ok(report)
}

/// Length of the equal-tailed interval of the `N(., 1/(n+1))` posterior.
pub fn analytic_interval_length(n: usize, level: f64) -> f64 {
    let z = crate::models::special::normal_quantile(0.5 + level / 2.0);
    2.0 * z / ((n + 1) as f64).sqrt()
}

fn validate(cfg: &CoverageConfig) -> Result<()> {
    if cfg.n == 0 || cfg.m == 0 || cfg.iterations == 0 || cfg.replicates == 0 {
        return Err(Error::Config(
            "n, m, iterations and replicates must be positive".into(),
        ));
    }
    if cfg.constraint_sets.is_empty() {
        return Err(Error::Config("constraint_sets is empty".into()));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::Config(format!("level {} must lie in (0, 1)", cfg.level)));
    }
    Ok(())
}
