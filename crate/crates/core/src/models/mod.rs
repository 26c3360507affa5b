//! Generative models, priors and the four benchmark examples.

mod arch;
mod gk;
mod normal;
mod prior;
pub mod special;
mod stereo;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use arch::{simulate_arch1, Arch1, ArchParams};
pub use gk::{gk_quantile, simulate_gk, GAndK, GkParams, GK_C};
pub use normal::{simulate_normal, NormalLocation};
pub use prior::{Marginal, Prior};
pub use stereo::{
    gpd_sample, hard_stereo_spec, simulate_stereo, stereo_spec, stereo_summaries,
    synthetic_fixture, StereoInclusions, StereoParams, FIXTURE_SEED, FIXTURE_THETA,
    OBSERVED_COUNT, V0,
};

use crate::error::{Error, Result};
use crate::rng::{SimRng, Stream};
use crate::summaries::{Statistic, SummarySpec};

/// A parametric data-generating process.
///
/// `simulate` must be a pure function of `(theta, n, rng state)`.
pub trait Simulator: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn param_names(&self) -> Vec<String>;
    fn in_support(&self, theta: &[f64]) -> bool;
    fn simulate(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Vec<f64>;
}

/// Simulator together with its prior, dataset size and summary map.
#[derive(Clone, Debug)]
pub struct GenerativeModel {
    simulator: Arc<dyn Simulator>,
    prior: Prior,
    summaries: SummarySpec,
    n: usize,
}

impl GenerativeModel {
    pub fn new(
        simulator: Arc<dyn Simulator>,
        prior: Prior,
        summaries: SummarySpec,
        n: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("dataset size n must be positive".into()));
        }
        if prior.dim() != simulator.param_names().len() {
            return Err(Error::Config(format!(
                "prior has {} coordinates but `{}` has {} parameters",
                prior.dim(),
                simulator.name(),
                simulator.param_names().len()
            )));
        }
        Ok(Self {
            simulator,
            prior,
            summaries,
            n,
        })
    }

    pub fn name(&self) -> &str {
        self.simulator.name()
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn summaries(&self) -> &SummarySpec {
        &self.summaries
    }

    pub fn param_names(&self) -> Vec<String> {
        self.simulator.param_names()
    }

    pub fn with_summaries(&self, summaries: SummarySpec) -> Self {
        Self {
            summaries,
            ..self.clone()
        }
    }

    pub fn with_prior(&self, prior: Prior) -> Result<Self> {
        Self::new(self.simulator.clone(), prior, self.summaries.clone(), self.n)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.simulator.clone(), self.prior.clone(), self.summaries.clone(), n)
    }

    /// Inside both the simulator's parameter space and the prior's support.
    pub fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.simulator.in_support(theta) && self.prior.contains(theta)
    }

    pub fn simulate(&self, theta: &[f64], stream: &Stream) -> Result<Vec<f64>> {
        if !self.simulator.in_support(theta) {
            return Err(Error::Domain(format!(
                "{:?} is outside the `{}` parameter space",
                theta,
                self.name()
            )));
        }
        Ok(self.simulator.simulate(theta, self.n, &mut stream.rng()))
    }

    /// Summaries of a fresh dataset simulated at `theta`, appended to `out`.
    pub fn simulate_summaries_into(
        &self,
        theta: &[f64],
        stream: &Stream,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        let data = self.simulate(theta, stream)?;
        self.summaries.apply_into(&data, out)
    }
}

/// The built-in benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    Normal,
    Gk,
    Arch1,
    Stereo,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::Normal => "normal",
            Example::Gk => "gk",
            Example::Arch1 => "arch1",
            Example::Stereo => "stereo",
        }
    }

    pub fn simulator(self) -> Arc<dyn Simulator> {
        match self {
            Example::Normal => Arc::new(NormalLocation),
            Example::Gk => Arc::new(GAndK),
            Example::Arch1 => Arc::new(Arch1),
            Example::Stereo => Arc::new(StereoInclusions),
        }
    }

    pub fn prior(self) -> Prior {
        match self {
            Example::Normal => Prior::new(vec![Marginal::Normal { mean: 0.0, sd: 1.0 }]),
            Example::Gk => Prior::uniform_box(&[(0.0, 10.0); 4]),
            Example::Arch1 => Prior::uniform_box(&[(0.0, 5.0), (0.0, 1.0)]),
            Example::Stereo => Prior::uniform_box(&[(1.0, 200.0), (0.0, 10.0), (-5.0, 5.0)]),
        }
        .unwrap()
    }

    /// Narrower prior used by rejection ABC to save simulations.
    pub fn abc_prior(self) -> Prior {
        match self {
            Example::Gk => Prior::uniform_box(&[(2.0, 4.0), (0.0, 2.0), (0.0, 4.0), (0.0, 1.0)]).unwrap(),
            other => other.prior(),
        }
    }

    pub fn default_n(self) -> usize {
        match self {
            Example::Normal => 100,
            Example::Gk | Example::Arch1 => 1000,
            Example::Stereo => OBSERVED_COUNT,
        }
    }

    pub fn default_m(self) -> usize {
        match self {
            Example::Normal | Example::Stereo => 25,
            Example::Gk => 40,
            Example::Arch1 => 20,
        }
    }

    /// Parameter used to generate observed data.
    pub fn truth(self) -> Vec<f64> {
        match self {
            Example::Normal => vec![0.0],
            Example::Gk => vec![3.0, 1.0, 2.0, 0.5],
            Example::Arch1 => vec![3.0, 0.75],
            Example::Stereo => FIXTURE_THETA.to_vec(),
        }
    }

    /// Diagonal random-walk proposal scales before adaptation.
    pub fn proposal_scale(self) -> Vec<f64> {
        match self {
            Example::Normal => vec![0.2],
            Example::Gk => vec![0.05, 0.05, 0.15, 0.04],
            Example::Arch1 => vec![0.5, 0.06],
            Example::Stereo => vec![6.0, 0.6, 0.1],
        }
    }

    pub fn default_summaries(self) -> &'static str {
        match self {
            Example::Normal => "mean",
            Example::Gk => "mean_quartiles",
            Example::Arch1 => "autocov_abs_quartiles",
            Example::Stereo => "default",
        }
    }

    /// Named summary sets available for this example.
    pub fn summary_preset(self, name: &str) -> Result<SummarySpec> {
        use Statistic::*;
        let stats = match (self, name) {
            (Example::Normal, "mean") => vec![RawMoment(1.0)],
            (Example::Normal, "median") => vec![Quantile(0.5)],
            (Example::Normal, "two_moments") => vec![RawMoment(1.0), RawMoment(2.0)],
            (Example::Normal, "three_moments") => (1..=3).map(|k| RawMoment(k as f64)).collect(),
            (Example::Normal, "four_moments") => (1..=4).map(|k| RawMoment(k as f64)).collect(),
            (Example::Normal, "quartiles") => vec![Quantile(0.5), Quantile(0.25), Quantile(0.75)],
            (Example::Normal, "mean_median") => vec![RawMoment(1.0), Quantile(0.5)],
            (Example::Gk, "mean_quartiles") => {
                vec![RawMoment(1.0), Quantile(0.25), Quantile(0.5), Quantile(0.75)]
            }
            (Example::Gk, "octiles") => (1..8).map(|k| Quantile(k as f64 / 8.0)).collect(),
            (Example::Arch1, "autocov_abs_quartiles") => vec![
                Lag1AutocovSquares,
                QuantileOfAbs(0.25),
                QuantileOfAbs(0.5),
                QuantileOfAbs(0.75),
            ],
            (Example::Stereo, "default") => return Ok(stereo_spec()),
            (Example::Stereo, "hard") => return Ok(hard_stereo_spec()),
            _ => {
                return Err(Error::Config(format!(
                    "unknown summary set `{name}` for example `{}`; available: {}",
                    self.name(),
                    self.summary_presets().join(", ")
                )))
            }
        };
        SummarySpec::new(stats)
    }

    pub fn summary_presets(self) -> Vec<&'static str> {
        match self {
            Example::Normal => vec![
                "mean",
                "median",
                "two_moments",
                "three_moments",
                "four_moments",
                "quartiles",
                "mean_median",
            ],
            Example::Gk => vec!["mean_quartiles", "octiles"],
            Example::Arch1 => vec!["autocov_abs_quartiles"],
            Example::Stereo => vec!["default", "hard"],
        }
    }

    pub fn model(self, n: usize, summaries: SummarySpec) -> Result<GenerativeModel> {
        GenerativeModel::new(self.simulator(), self.prior(), summaries, n)
    }

    pub fn default_model(self) -> GenerativeModel {
        self.model(
            self.default_n(),
            self.summary_preset(self.default_summaries()).unwrap(),
        )
        .unwrap()
    }

    /// Observed data: the shipped fixture for stereology, otherwise a draw at
    /// [`truth`](Self::truth) from `stream`.
    pub fn observed(self, n: usize, stream: &Stream) -> Vec<f64> {
        match self {
            Example::Stereo => observed_stereo_fixture(),
            _ => self.simulator().simulate(&self.truth(), n, &mut stream.rng()),
        }
    }
}

impl std::str::FromStr for Example {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Example::Normal),
            "gk" => Ok(Example::Gk),
            "arch1" => Ok(Example::Arch1),
            "stereo" => Ok(Example::Stereo),
            other => Err(Error::Config(format!(
                "unknown example `{other}`; expected one of normal, gk, arch1, stereo"
            ))),
        }
    }
}

const STEREO_FIXTURE: &str = include_str!("../../data/stereo_observed.csv");

/// The shipped 112-value stereology dataset (synthetic stand-in, see
/// [`synthetic_fixture`]).
pub fn observed_stereo_fixture() -> Vec<f64> {
    parse_values(STEREO_FIXTURE).expect("shipped fixture parses")
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::Config(format!("observed data line {}: {e}", i + 1)))
        })
        .collect()
}

/// Observed data as one value per line; `#` lines are comments.
pub fn read_observed_csv(path: &Path) -> Result<Vec<f64>> {
    parse_values(&std::fs::read_to_string(path)?)
}

pub fn write_observed_csv(path: &Path, values: &[f64], comment: &str) -> Result<()> {
    let mut text = String::new();
    for line in comment.lines() {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for ex in [Example::Normal, Example::Gk, Example::Arch1, Example::Stereo] {
            for p in ex.summary_presets() {
                ex.summary_preset(p).unwrap();
            }
            assert!(ex.summary_preset("nope").is_err());
            let m = ex.default_model();
            assert_eq!(m.dim(), ex.truth().len());
            assert_eq!(m.dim(), ex.proposal_scale().len());
            assert!(m.in_support(&ex.truth()));
        }
    }

    #[test]
    fn parse_example_names() {
        assert_eq!("gk".parse::<Example>().unwrap(), Example::Gk);
        assert!("gandk".parse::<Example>().is_err());
    }

    #[test]
    fn support_combines_prior_and_model() {
        let m = Example::Gk.default_model();
        assert!(!m.in_support(&[3.0, 1.0, 2.0, 10.5]));
        assert!(!m.in_support(&[3.0, 1.0, 2.0]));
        assert!(m.simulate(&[3.0, -1.0, 2.0, 0.5], &Stream::new(1)).is_err());
    }

    #[test]
    fn observed_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        let values = vec![1.5, -2.25, 1e-7];
        write_observed_csv(&path, &values, "test data").unwrap();
        assert_eq!(read_observed_csv(&path).unwrap(), values);
    }
}
