//! Inclusion diameters observed on a planar slice through a steel block.
//!
//! This is a simplified stand-in for the elliptical-inclusion slicing model,
//! not the exact observation mechanism:
//!
//! * the number of inclusions cut by the plane is `L ~ Poisson(lambda)`;
//! * each inclusion has largest diameter `V = v0 + GPD(sigma, xi)` and two
//!   further principal diameters `V * U`, `U ~ Uniform(0, 1)`;
//! * the axis perpendicular to the plane is chosen with probability
//!   proportional to its length relative to `V` (size-biased slicing), by
//!   rejection;
//! * the recorded planar diameter is the larger in-plane axis times the chord
//!   factor `sqrt(1 - D^2)`, `D ~ Uniform(-1, 1)` the normalised offset of the
//!   plane from the inclusion centre.
//!
//! Size bias acts on the shape only, so the construction stays well defined
//! for heavy GPD tails (`xi >= 1`) where `V` itself has no mean.

use rand::Rng;
use rand_distr::{Distribution, Open01, Poisson};

use super::Simulator;
use crate::error::{Error, Result};
use crate::rng::{SimRng, Stream};
use crate::summaries::{Statistic, SummarySpec, SummaryVector};

/// GPD threshold for the largest inclusion diameter.
pub const V0: f64 = 5.0;

/// Size of the observed slice.
pub const OBSERVED_COUNT: usize = 112;

/// Parameters used to generate the shipped synthetic fixture.
pub const FIXTURE_THETA: [f64; 3] = [112.0, 6.0, 0.1];
pub const FIXTURE_SEED: u64 = 20_070_112;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StereoParams {
    pub lambda: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl StereoParams {
    pub fn new(lambda: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("Poisson rate must be positive, got {lambda}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("GPD scale must be positive, got {sigma}")));
        }
        if !xi.is_finite() {
            return Err(Error::Domain("GPD shape must be finite".into()));
        }
        Ok(Self { lambda, sigma, xi })
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        match *theta {
            [l, s, x] => Self::new(l, s, x),
            _ => Err(Error::Shape(format!("stereology takes 3 parameters, got {}", theta.len()))),
        }
    }
}

/// Inverse-CDF draw from GPD(sigma, xi); bounded by `-sigma / xi` when `xi < 0`.
pub fn gpd_sample<R: Rng + ?Sized>(sigma: f64, xi: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    if xi.abs() < 1e-12 {
        -sigma * u.ln()
    } else {
        sigma / xi * (u.powf(-xi) - 1.0)
    }
}

fn planar_diameter<R: Rng + ?Sized>(theta: &StereoParams, rng: &mut R) -> f64 {
    let (v, others) = loop {
        let v = V0 + gpd_sample(theta.sigma, theta.xi, rng);
        let u1: f64 = rng.sample(Open01);
        let u2: f64 = rng.sample(Open01);
        let perpendicular = rng.random_range(0..3);
        let (rel, others) = match perpendicular {
            0 => (1.0, [u1, u2]),
            1 => (u1, [1.0, u2]),
            _ => (u2, [1.0, u1]),
        };
        if rng.random::<f64>() < rel {
            break (v, others);
        }
    };
    let in_plane = v * others[0].max(others[1]);
    let d: f64 = 2.0 * rng.sample::<f64, _>(Open01) - 1.0;
    in_plane * (1.0 - d * d).sqrt()
}

/// One slice: `L ~ Poisson(lambda)` planar diameters (possibly none).
pub fn simulate_stereo(theta: &StereoParams, rng: &mut SimRng) -> Vec<f64> {
    let count = Poisson::new(theta.lambda).unwrap().sample(rng) as usize;
    (0..count).map(|_| planar_diameter(theta, rng)).collect()
}

/// `((L - 112)/100, mean, median, fraction <= 6)`.
pub fn stereo_spec() -> SummarySpec {
    SummarySpec::new(vec![
        Statistic::Count { center: OBSERVED_COUNT as f64, scale: 100.0 },
        Statistic::RawMoment(1.0),
        Statistic::Quantile(0.5),
        Statistic::AtMost(6.0),
    ])
    .unwrap()
}

/// Extreme-order summaries `((L - 112)/112, min, max, median)`, which the model
/// matches poorly.
pub fn hard_stereo_spec() -> SummarySpec {
    SummarySpec::new(vec![
        Statistic::Count { center: OBSERVED_COUNT as f64, scale: OBSERVED_COUNT as f64 },
        Statistic::Min,
        Statistic::Max,
        Statistic::Quantile(0.5),
    ])
    .unwrap()
}

/// Summaries of one slice. An empty slice yields `+inf` in every entry but
/// the count, which makes any likelihood estimate using it zero.
pub fn stereo_summaries(data: &[f64]) -> SummaryVector {
    stereo_spec().apply(data).expect("stereology summaries are total")
}

/// Regenerates the shipped observed fixture: exactly 112 diameters drawn at
/// [`FIXTURE_THETA`]. Synthetic, not measured data.
pub fn synthetic_fixture() -> Vec<f64> {
    let theta = StereoParams::from_slice(&FIXTURE_THETA).unwrap();
    let mut rng = Stream::new(FIXTURE_SEED).rng();
    (0..OBSERVED_COUNT).map(|_| planar_diameter(&theta, &mut rng)).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StereoInclusions;

impl Simulator for StereoInclusions {
    fn name(&self) -> &str {
        "stereo"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["lambda".into(), "sigma".into(), "xi".into()]
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        StereoParams::from_slice(theta).is_ok()
    }

    /// Dataset size is random; `n` is ignored.
    fn simulate(&self, theta: &[f64], _n: usize, rng: &mut SimRng) -> Vec<f64> {
        let params = StereoParams::from_slice(theta).expect("theta checked against support");
        simulate_stereo(&params, rng)
    }
}
