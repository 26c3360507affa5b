use rand_distr::{Distribution, StandardNormal};

use super::Simulator;
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchParams {
    pub alpha0: f64,
    pub alpha1: f64,
}

impl ArchParams {
    pub fn new(alpha0: f64, alpha1: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(Error::Domain(format!("ARCH alpha0 must be positive, got {alpha0}")));
        }
        if !(alpha1 > 0.0 && alpha1 < 1.0) {
            return Err(Error::Domain(format!(
                "ARCH alpha1 must lie in (0, 1) for stationarity, got {alpha1}"
            )));
        }
        Ok(Self { alpha0, alpha1 })
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        match *theta {
            [a0, a1] => Self::new(a0, a1),
            _ => Err(Error::Shape(format!("ARCH(1) takes 2 parameters, got {}", theta.len()))),
        }
    }

    pub fn stationary_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.alpha1)
    }
}

/// ARCH(1) path started from the stationary standard deviation.
pub fn simulate_arch1(theta: &ArchParams, n: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut var = theta.stationary_variance();
    for _ in 0..n {
        let eps: f64 = StandardNormal.sample(rng);
        let x = var.sqrt() * eps;
        out.push(x);
        var = theta.alpha0 + theta.alpha1 * x * x;
    }
    out
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Arch1;

impl Simulator for Arch1 {
    fn name(&self) -> &str {
        "arch1"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["alpha0".into(), "alpha1".into()]
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        ArchParams::from_slice(theta).is_ok()
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Vec<f64> {
        let params = ArchParams::from_slice(theta).expect("theta checked against support");
        simulate_arch1(&params, n, rng)
    }
}
