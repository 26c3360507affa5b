use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::special::normal_log_density;
use crate::error::{Error, Result};

/// Independent prior for one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    /// Uniform on the open interval `(lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                Err(Error::Config(format!("uniform prior bounds ({lo}, {hi}) are not ordered and finite")))
            }
            Marginal::Normal { mean, sd } if !(mean.is_finite() && sd > 0.0 && sd.is_finite()) => {
                Err(Error::Config(format!("normal prior N({mean}, {sd}^2) is invalid")))
            }
            _ => Ok(()),
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => {
                if x > lo && x < hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Marginal::Normal { mean, sd } => normal_log_density(x, mean, sd),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => loop {
                let x = lo + (hi - lo) * rng.random::<f64>();
                if x > lo && x < hi {
                    break x;
                }
            },
            Marginal::Normal { mean, sd } => Normal::new(mean, sd).unwrap().sample(rng),
        }
    }
}

/// Product of independent marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Marginal>", into = "Vec<Marginal>")]
pub struct Prior {
    marginals: Vec<Marginal>,
}

impl TryFrom<Vec<Marginal>> for Prior {
    type Error = Error;
    fn try_from(m: Vec<Marginal>) -> Result<Self> {
        Prior::new(m)
    }
}

impl From<Prior> for Vec<Marginal> {
    fn from(p: Prior) -> Self {
        p.marginals
    }
}

impl Prior {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Config("prior has no coordinates".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(Self { marginals })
    }

    pub fn uniform_box(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|&(lo, hi)| Marginal::Uniform { lo, hi })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.marginals.len() {
            return f64::NEG_INFINITY;
        }
        self.marginals
            .iter()
            .zip(theta)
            .map(|(m, &x)| m.log_density(x))
            .sum()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.log_density(theta) > f64::NEG_INFINITY
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }
}
