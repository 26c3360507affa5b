//! JSON run configurations and their resolution into runnable pieces.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::el::SolverOptions;
use crate::error::{Error, Result};
use crate::models::{read_observed_csv, Example, GenerativeModel};
use crate::pseudolik::{EstimatorConfig, EstimatorKind, Posterior};
use crate::rng::Stream;
use crate::samplers::RwmConfig;
use crate::summaries::SummarySpec;

/// Inference method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Method {
    #[default]
    #[serde(rename = "el")]
    El,
    #[serde(rename = "synthetic")]
    Synthetic,
    #[serde(rename = "rejection-abc")]
    RejectionAbc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::El => "el",
            Method::Synthetic => "synthetic",
            Method::RejectionAbc => "rejection-abc",
        }
    }

    pub fn estimator_kind(self) -> Option<EstimatorKind> {
        match self {
            Method::El => Some(EstimatorKind::EmpiricalLikelihood),
            Method::Synthetic => Some(EstimatorKind::SyntheticLikelihood),
            Method::RejectionAbc => None,
        }
    }
}

/// A named preset of the example, or an explicit list of statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SummaryChoice {
    Preset(String),
    Explicit(SummarySpec),
}

impl SummaryChoice {
    pub fn resolve(&self, example: Example) -> Result<SummarySpec> {
        match self {
            SummaryChoice::Preset(name) => example.summary_preset(name),
            SummaryChoice::Explicit(spec) => Ok(spec.clone()),
        }
    }

    /// Preset name, or the statistic labels joined with `+`.
    pub fn label(&self) -> String {
        match self {
            SummaryChoice::Preset(name) => name.clone(),
            SummaryChoice::Explicit(spec) => spec.labels().join("+"),
        }
    }
}

impl From<&str> for SummaryChoice {
    fn from(s: &str) -> Self {
        SummaryChoice::Preset(s.to_string())
    }
}

fn default_iterations() -> usize {
    10_000
}
fn default_burnin() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}
fn default_true() -> bool {
    true
}
fn default_abc_total() -> usize {
    100_000
}
fn default_abc_keep() -> usize {
    1000
}

/// Configuration of a single inference run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub example: Example,
    #[serde(default)]
    pub method: Method,
    /// Dataset size; defaults to the example's.
    #[serde(default)]
    pub n: Option<usize>,
    /// Replicates per likelihood estimate; defaults to the example's.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Seed of the simulated observed dataset; defaults to `seed`.
    #[serde(default)]
    pub data_seed: Option<u64>,
    #[serde(default)]
    pub summaries: Option<SummaryChoice>,
    /// Observed data file, one value per line; otherwise simulated at the
    /// example's true parameter (or the shipped stereology fixture).
    #[serde(default)]
    pub observed: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Chain start; defaults to the example's true parameter.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    #[serde(default)]
    pub proposal_scale: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub adapt: bool,
    #[serde(default = "default_abc_total")]
    pub abc_total: usize,
    #[serde(default = "default_abc_keep")]
    pub abc_keep: usize,
    #[serde(default = "default_true")]
    pub regression_adjust: bool,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Include elapsed seconds in `summary.json` (makes it non-reproducible).
    #[serde(default)]
    pub record_wall_time: bool,
}

impl RunConfig {
    pub fn new(example: Example) -> Self {
        serde_json::from_value(serde_json::json!({ "example": example })).expect("defaults")
    }

    pub fn data_seed(&self) -> u64 {
        self.data_seed.unwrap_or(self.seed)
    }

    pub fn summary_choice(&self) -> SummaryChoice {
        self.summaries
            .clone()
            .unwrap_or_else(|| self.example.default_summaries().into())
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or_else(|| self.example.default_m())
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or_else(|| self.example.default_n())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n()),
            ("m", self.m()),
            ("iterations", self.iterations),
            ("abc_total", self.abc_total),
            ("abc_keep", self.abc_keep),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.abc_keep > self.abc_total {
            return Err(Error::Config(format!(
                "abc_keep ({}) exceeds abc_total ({})",
                self.abc_keep, self.abc_total
            )));
        }
        if self.example == Example::Stereo && self.n.is_some_and(|n| n != self.example.default_n())
        {
            return Err(Error::Config(
                "stereo datasets have a random size; n cannot be set".into(),
            ));
        }
        Ok(())
    }

    /// Model, observed summaries and sampler settings for this run.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let example = self.example;
        let spec = self.summary_choice().resolve(example)?;
        let n = self.n();
        let prior = match self.method {
            Method::RejectionAbc => example.abc_prior(),
            _ => example.prior(),
        };
        let model = example.model(n, spec)?.with_prior(prior)?;
        let data = match &self.observed {
            Some(path) => read_observed_csv(path)?,
            None => example.observed(n, &Stream::new(self.data_seed()).child(0)),
        };
        let observed = model.summaries().apply(&data)?;
        if !observed.is_finite() {
            return Err(Error::Domain("observed data has non-finite summaries".into()));
        }
        let p = model.dim();
        let init = self.init.clone().unwrap_or_else(|| example.truth());
        if init.len() != p {
            return Err(Error::Config(format!(
                "init has {} entries but `{}` has {p} parameters",
                init.len(),
                example.name()
            )));
        }
        let proposal_scale = self
            .proposal_scale
            .clone()
            .unwrap_or_else(|| default_proposal_scale(example, n));
        let rwm = RwmConfig {
            iterations: self.iterations,
            burnin: self.burnin,
            proposal_scale,
            adapt: self.adapt,
        };
        rwm.validate(p)?;
        let posterior = match self.method.estimator_kind() {
            Some(kind) => {
                let estimator = EstimatorConfig {
                    m: self.m(),
                    solver: self.solver,
                    kind,
                };
                Some(Posterior::new(model.clone(), observed.clone(), estimator)?)
            }
            None => None,
        };
        Ok(Resolved {
            model,
            data,
            observed,
            posterior,
            rwm,
            init,
        })
    }
}

/// Example proposal scales, shrunk with the posterior as `1/sqrt(n)`.
pub fn default_proposal_scale(example: Example, n: usize) -> Vec<f64> {
    let factor = (example.default_n() as f64 / n as f64).sqrt();
    example.proposal_scale().iter().map(|s| s * factor).collect()
}

/// A validated run configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub model: GenerativeModel,
    pub data: Vec<f64>,
    pub observed: crate::summaries::SummaryVector,
    /// `None` for rejection ABC.
    pub posterior: Option<Posterior>,
    pub rwm: RwmConfig,
    pub init: Vec<f64>,
}

/// Parse a JSON config file; malformed or unknown content is a validation
/// error.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_json(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}
