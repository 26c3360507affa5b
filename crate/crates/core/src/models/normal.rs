use rand_distr::{Distribution, StandardNormal};

use super::Simulator;
use crate::rng::SimRng;

/// `n` i.i.d. draws from `N(mu, 1)`.
pub fn simulate_normal(mu: f64, n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n)
        .map(|_| mu + Distribution::<f64>::sample(&StandardNormal, rng))
        .collect()
}

/// Normal location model with unit variance.
#[derive(Clone, Copy, Debug, Default)]
pub struct NormalLocation;

impl Simulator for NormalLocation {
    fn name(&self) -> &str {
        "normal"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mu".into()]
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite()
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Vec<f64> {
        simulate_normal(theta[0], n, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn moments_of_a_million_draws() {
        let x = simulate_normal(0.0, 1_000_000, &mut Stream::new(11).rng());
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn deterministic() {
        let s = Stream::new(5).child(3);
        assert_eq!(simulate_normal(1.5, 50, &mut s.rng()), simulate_normal(1.5, 50, &mut s.rng()));
    }
}
