//! Rejection ABC with linear regression adjustment.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::GenerativeModel;
use crate::rng::Stream;
use crate::summaries::quantile;

/// Prior simulations used to estimate the summary scales.
pub const SCALE_SIMULATIONS: usize = 10_000;

const CHUNK: usize = 4096;

/// Which simulations to keep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbcSelection {
    /// The `n` closest.
    Count(usize),
    /// The closest `ceil(f * total)`.
    Fraction(f64),
    /// Every draw with distance at most this.
    Tolerance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcConfig {
    pub total: usize,
    pub selection: AbcSelection,
}

impl AbcConfig {
    fn keep_count(&self) -> Result<Option<usize>> {
        if self.total == 0 {
            return Err(Error::Config("rejection ABC needs a positive simulation count".into()));
        }
        match self.selection {
            AbcSelection::Count(n) if n >= 1 && n <= self.total => Ok(Some(n)),
            AbcSelection::Count(n) => Err(Error::Config(format!(
                "keep count {n} must be between 1 and the simulation count {}",
                self.total
            ))),
            AbcSelection::Fraction(f) if f > 0.0 && f <= 1.0 => {
                Ok(Some(((f * self.total as f64).ceil() as usize).clamp(1, self.total)))
            }
            AbcSelection::Fraction(f) => {
                Err(Error::Config(format!("keep fraction {f} must lie in (0, 1]")))
            }
            AbcSelection::Tolerance(t) if t >= 0.0 => Ok(None),
            AbcSelection::Tolerance(t) => {
                Err(Error::Config(format!("tolerance {t} must be non-negative")))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcResult {
    pub param_names: Vec<String>,
    /// Kept parameters in increasing distance order.
    pub accepted: Vec<Vec<f64>>,
    /// Summaries simulated at each kept parameter.
    pub summaries: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    /// Largest kept distance, or the configured tolerance.
    pub tolerance: f64,
    /// Per-summary divisors used in the distance.
    pub scales: Vec<f64>,
    pub total: usize,
    /// Regression-adjusted parameters, when computed.
    pub adjusted: Option<Vec<Vec<f64>>>,
}

#[derive(PartialEq)]
struct Candidate {
    distance: f64,
    index: usize,
    theta: Vec<f64>,
    summary: Vec<f64>,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn draw(model: &GenerativeModel, stream: &Stream, i: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = stream.child(i as u64);
    let theta = model.prior().sample(&mut s.child(0).rng());
    let mut summary = Vec::with_capacity(model.summaries().len());
    if model.in_support(&theta) {
        model.simulate_summaries_into(&theta, &s.child(1), &mut summary)?;
    } else {
        summary.resize(model.summaries().len(), f64::INFINITY);
    }
    Ok((theta, summary))
}

/// Median absolute deviation of each finite summary column; columns with a
/// zero MAD fall back to the standard deviation, then to 1.
pub fn summary_scales(sims: &[Vec<f64>]) -> Result<Vec<f64>> {
    let r = sims.first().map_or(0, Vec::len);
    (0..r)
        .map(|k| {
            let col: Vec<f64> = sims.iter().map(|s| s[k]).filter(|v| v.is_finite()).collect();
            if col.len() < 2 {
                return Ok(1.0);
            }
            let med = quantile(&col, 0.5)?;
            let dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
            let mad = quantile(&dev, 0.5)?;
            if mad > 0.0 {
                return Ok(mad);
            }
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / (col.len() - 1) as f64)
                .sqrt();
            Ok(if sd > 0.0 { sd } else { 1.0 })
        })
        .collect()
}

fn distance(summary: &[f64], observed: &[f64], scales: &[f64]) -> f64 {
    summary
        .iter()
        .zip(observed)
        .zip(scales)
        .map(|((s, o), c)| ((s - o) / c).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Simulate `cfg.total` prior draws and keep those closest to `observed` in
/// scaled Euclidean distance. Draw `i` uses `stream.child(i)`.
pub fn rejection_abc(
    model: &GenerativeModel,
    observed: &[f64],
    cfg: &AbcConfig,
    stream: &Stream,
) -> Result<AbcResult> {
    if observed.len() != model.summaries().len() {
        return Err(Error::Shape(format!(
            "observed summary has {} entries but the model produces {}",
            observed.len(),
            model.summaries().len()
        )));
    }
    let keep = cfg.keep_count()?;
    let pilot_len = SCALE_SIMULATIONS.min(cfg.total);
    let pilot: Vec<(Vec<f64>, Vec<f64>)> = (0..pilot_len)
        .into_par_iter()
        .map(|i| draw(model, stream, i))
        .collect::<Result<_>>()?;
    let pilot_summaries: Vec<Vec<f64>> = pilot.iter().map(|(_, s)| s.clone()).collect();
    let scales = summary_scales(&pilot_summaries)?;

    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut kept: Vec<Candidate> = Vec::new();
    let mut offer = |c: Candidate| match (keep, cfg.selection) {
        (Some(n), _) => {
            if heap.len() < n {
                heap.push(c);
            } else if c < *heap.peek().expect("heap is full") {
                heap.pop();
                heap.push(c);
            }
        }
        (None, AbcSelection::Tolerance(t)) => {
            if c.distance <= t {
                kept.push(c);
            }
        }
        (None, _) => unreachable!("keep count is set for count and fraction selections"),
    };

    for (i, (theta, summary)) in pilot.into_iter().enumerate() {
        let distance = distance(&summary, observed, &scales);
        offer(Candidate {
            distance,
            index: i,
            theta,
            summary,
        });
    }
    let mut start = pilot_len;
    while start < cfg.total {
        let end = (start + CHUNK).min(cfg.total);
        let batch: Vec<Candidate> = (start..end)
            .into_par_iter()
            .map(|i| {
                let (theta, summary) = draw(model, stream, i)?;
                Ok(Candidate {
                    distance: distance(&summary, observed, &scales),
                    index: i,
                    theta,
                    summary,
                })
            })
            .collect::<Result<_>>()?;
        batch.into_iter().for_each(&mut offer);
        start = end;
    }

    let mut chosen = if keep.is_some() { heap.into_vec() } else { kept };
    chosen.sort();
    let tolerance = match cfg.selection {
        AbcSelection::Tolerance(t) => t,
        _ => chosen.last().map_or(0.0, |c| c.distance),
    };
    let mut result = AbcResult {
        param_names: model.param_names(),
        accepted: Vec::with_capacity(chosen.len()),
        summaries: Vec::with_capacity(chosen.len()),
        distances: Vec::with_capacity(chosen.len()),
        tolerance,
        scales,
        total: cfg.total,
        adjusted: None,
    };
    for c in chosen {
        result.accepted.push(c.theta);
        result.summaries.push(c.summary);
        result.distances.push(c.distance);
    }
    Ok(result)
}

/// Least-squares fit of `theta = a + B'(s - s_obs)` on the kept pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit {
    /// Intercepts `a`, one per parameter.
    pub intercept: Vec<f64>,
    /// `B`: one row per summary, one column per parameter. Rows of summaries
    /// with zero variance among the kept draws are zero.
    pub slopes: Vec<Vec<f64>>,
}

/// Fit the local-linear regression of parameters on summaries.
pub fn regression_fit(
    theta: &[Vec<f64>],
    summaries: &[Vec<f64>],
    observed: &[f64],
) -> Result<RegressionFit> {
    let n = theta.len();
    let r = observed.len();
    if n != summaries.len() {
        return Err(Error::Shape(format!(
            "{n} parameter rows but {} summary rows",
            summaries.len()
        )));
    }
    if n <= r + 1 {
        return Err(Error::Length { needed: r + 2, got: n });
    }
    let p = theta[0].len();
    if summaries.iter().flatten().chain(theta.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("regression inputs must be finite".into()));
    }
    let mean_of = |rows: &[Vec<f64>], k: usize| rows.iter().map(|row| row[k]).sum::<f64>() / n as f64;
    let theta_mean: Vec<f64> = (0..p).map(|k| mean_of(theta, k)).collect();
    let s_mean: Vec<f64> = (0..r).map(|k| mean_of(summaries, k)).collect();
    let active: Vec<usize> = (0..r)
        .filter(|&k| summaries.iter().any(|s| s[k] != summaries[0][k]))
        .collect();

    let mut slopes = vec![vec![0.0; p]; r];
    if !active.is_empty() {
        let x = DMatrix::from_fn(n, active.len(), |i, j| summaries[i][active[j]] - s_mean[active[j]]);
        let y = DMatrix::from_fn(n, p, |i, k| theta[i][k] - theta_mean[k]);
        let qr = x.qr();
        let rmat = qr.r();
        let diag_max = rmat.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if rmat.diagonal().iter().any(|v| v.abs() <= 1e-12 * diag_max) {
            return Err(Error::SingularDesign);
        }
        let qty = qr.q().transpose() * y;
        let b = rmat
            .solve_upper_triangular(&qty)
            .ok_or(Error::SingularDesign)?;
        for (j, &k) in active.iter().enumerate() {
            for c in 0..p {
                slopes[k][c] = b[(j, c)];
            }
        }
    }
    let intercept = (0..p)
        .map(|c| {
            theta_mean[c]
                - (0..r)
                    .map(|k| slopes[k][c] * (s_mean[k] - observed[k]))
                    .sum::<f64>()
        })
        .collect();
    Ok(RegressionFit { intercept, slopes })
}

/// `theta - B'(s - s_obs)` for every kept draw.
pub fn regression_adjust(result: &AbcResult, observed: &[f64]) -> Result<Vec<Vec<f64>>> {
    let fit = regression_fit(&result.accepted, &result.summaries, observed)?;
    Ok(apply_adjustment(&fit, &result.accepted, &result.summaries, observed))
}

pub fn apply_adjustment(
    fit: &RegressionFit,
    theta: &[Vec<f64>],
    summaries: &[Vec<f64>],
    observed: &[f64],
) -> Vec<Vec<f64>> {
    theta
        .iter()
        .zip(summaries)
        .map(|(t, s)| {
            t.iter()
                .enumerate()
                .map(|(c, &v)| {
                    let shift: f64 = (0..observed.len())
                        .filter(|&k| fit.slopes[k][c] != 0.0)
                        .map(|k| fit.slopes[k][c] * (s[k] - observed[k]))
                        .sum();
                    v - shift
                })
                .collect()
        })
        .collect()
}

impl AbcResult {
    /// Draws used as the posterior sample: adjusted when available.
    pub fn posterior_draws(&self) -> &[Vec<f64>] {
        self.adjusted.as_deref().unwrap_or(&self.accepted)
    }

    /// CSV of the posterior draws with their distance.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.param_names.clone();
        header.push("distance".into());
        w.write_record(&header)?;
        for (i, d) in self.posterior_draws().iter().enumerate() {
            let mut rec: Vec<String> = d.iter().map(|v| v.to_string()).collect();
            rec.push(self.distances[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
