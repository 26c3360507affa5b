//! Summary statistics used as empirical-likelihood constraints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(1/n) sum x^order`.
pub fn raw_moment(x: &[f64], order: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::Domain(format!("moment order must be positive, got {order}")));
    }
    let n = x.len() as f64;
    if order.fract() == 0.0 && order <= i32::MAX as f64 {
        let k = order as i32;
        return Ok(x.iter().map(|v| v.powi(k)).sum::<f64>() / n);
    }
    if let Some(v) = x.iter().find(|v| **v < 0.0) {
        return Err(Error::Domain(format!(
            "fractional moment {order} of negative value {v}"
        )));
    }
    Ok(x.iter().map(|v| v.powf(order)).sum::<f64>() / n)
}

/// Ranks and weight of a type-7 quantile: linear interpolation between order
/// statistics at plotting positions `(j-1)/(n-1)`.
fn type7_position(n: usize, level: f64) -> (usize, usize, f64) {
    let pos = level * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    (lo, hi, pos - lo as f64)
}

fn interpolate(lo: f64, hi: f64, frac: f64) -> f64 {
    lo + frac * (hi - lo)
}

/// Type-7 quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::Domain(format!("quantile level {level} outside [0, 1]")));
    }
    let (lo, hi, frac) = type7_position(sorted.len(), level);
    Ok(interpolate(sorted[lo], sorted[hi], frac))
}

/// Order statistics of `buf` at the requested ranks, by repeated selection
/// (cheaper than sorting for a handful of ranks). `buf` is reordered.
fn order_statistics(buf: &mut [f64], ranks: &[usize]) -> Vec<(usize, f64)> {
    let mut wanted = ranks.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let mut out = Vec::with_capacity(wanted.len());
    let mut start = 0;
    for k in wanted {
        let (_, v, _) = buf[start..].select_nth_unstable_by(k - start, f64::total_cmp);
        out.push((k, *v));
        start = k + 1;
    }
    out
}

fn lookup(stats: &[(usize, f64)], rank: usize) -> f64 {
    let i = stats.binary_search_by_key(&rank, |(k, _)| *k).expect("rank was requested");
    stats[i].1
}

pub fn quantile(x: &[f64], level: f64) -> Result<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    quantile_sorted(&sorted, level)
}

/// Fraction of entries at or above `threshold`.
pub fn up_crossing(x: &[f64], threshold: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    Ok(x.iter().filter(|v| **v >= threshold).count() as f64 / x.len() as f64)
}

/// Fraction of entries at or below `threshold`.
pub fn at_most(x: &[f64], threshold: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    Ok(x.iter().filter(|v| **v <= threshold).count() as f64 / x.len() as f64)
}

/// Lag-1 sample autocovariance of the squared series, normalised by `n`.
pub fn lag1_autocov_squares(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Length { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mean = x.iter().map(|v| v * v).sum::<f64>() / n;
    let acc: f64 = x
        .windows(2)
        .map(|w| (w[0] * w[0] - mean) * (w[1] * w[1] - mean))
        .sum();
    Ok(acc / n)
}

/// One summary statistic of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    RawMoment(f64),
    Quantile(f64),
    UpCrossing(f64),
    Lag1AutocovSquares,
    QuantileOfAbs(f64),
    /// Fraction of entries `<= threshold`.
    AtMost(f64),
    Min,
    Max,
    /// `(len - center) / scale`; defined for empty data.
    Count { center: f64, scale: f64 },
}

impl Statistic {
    pub fn label(&self) -> String {
        match self {
            Statistic::RawMoment(o) if *o == 1.0 => "mean".into(),
            Statistic::RawMoment(o) => format!("moment_{o}"),
            Statistic::Quantile(l) if *l == 0.5 => "median".into(),
            Statistic::Quantile(l) => format!("quantile_{l}"),
            Statistic::UpCrossing(t) => format!("up_crossing_{t}"),
            Statistic::Lag1AutocovSquares => "lag1_autocov_sq".into(),
            Statistic::QuantileOfAbs(l) => format!("abs_quantile_{l}"),
            Statistic::AtMost(t) => format!("at_most_{t}"),
            Statistic::Min => "min".into(),
            Statistic::Max => "max".into(),
            Statistic::Count { center, scale } => format!("count_{center}_{scale}"),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Statistic::RawMoment(o) if !(o > 0.0 && o.is_finite()) => {
                Err(Error::Domain(format!("moment order must be positive, got {o}")))
            }
            Statistic::Quantile(l) | Statistic::QuantileOfAbs(l) if !(0.0..=1.0).contains(&l) => {
                Err(Error::Domain(format!("quantile level {l} outside [0, 1]")))
            }
            Statistic::Count { scale, .. } if !(scale != 0.0 && scale.is_finite()) => {
                Err(Error::Domain("count scale must be finite and non-zero".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Ordered, validated list of statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Statistic>", into = "Vec<Statistic>")]
pub struct SummarySpec {
    stats: Vec<Statistic>,
}

impl TryFrom<Vec<Statistic>> for SummarySpec {
    type Error = Error;
    fn try_from(stats: Vec<Statistic>) -> Result<Self> {
        SummarySpec::new(stats)
    }
}

impl From<SummarySpec> for Vec<Statistic> {
    fn from(spec: SummarySpec) -> Self {
        spec.stats
    }
}

impl SummarySpec {
    pub fn new(stats: Vec<Statistic>) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::Config("summary spec is empty".into()));
        }
        for s in &stats {
            s.validate()?;
        }
        let labels: Vec<String> = stats.iter().map(Statistic::label).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Config(format!("duplicate summary `{l}`")));
            }
        }
        Ok(Self { stats })
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn stats(&self) -> &[Statistic] {
        &self.stats
    }

    pub fn labels(&self) -> Vec<String> {
        self.stats.iter().map(Statistic::label).collect()
    }

    /// Evaluate every statistic in order.
    ///
    /// Empty datasets are legal (a random-size simulator may return none); every
    /// statistic other than `Count` is then `+inf`, which the likelihood
    /// estimators treat as an impossible replicate.
    pub fn apply(&self, x: &[f64]) -> Result<SummaryVector> {
        let mut values = Vec::with_capacity(self.stats.len());
        self.apply_into(x, &mut values)?;
        Ok(SummaryVector {
            values,
            labels: self.labels(),
        })
    }

    /// Like [`apply`](Self::apply) but only the values, appended to `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if x.is_empty() {
            out.extend(self.stats.iter().map(|stat| match stat {
                Statistic::Count { center, scale } => (0.0 - center) / scale,
                _ => f64::INFINITY,
            }));
            return Ok(());
        }
        let n = x.len();
        let ranks = |abs: bool| -> Vec<usize> {
            let mut r = Vec::new();
            for stat in &self.stats {
                match (*stat, abs) {
                    (Statistic::Quantile(l), false) | (Statistic::QuantileOfAbs(l), true) => {
                        let (lo, hi, _) = type7_position(n, l);
                        r.extend([lo, hi]);
                    }
                    (Statistic::Min, false) => r.push(0),
                    (Statistic::Max, false) => r.push(n - 1),
                    _ => {}
                }
            }
            r
        };
        let plain_ranks = ranks(false);
        let plain = if plain_ranks.is_empty() {
            Vec::new()
        } else {
            order_statistics(&mut x.to_vec(), &plain_ranks)
        };
        let abs_ranks = ranks(true);
        let abs = if abs_ranks.is_empty() {
            Vec::new()
        } else {
            let mut buf: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            order_statistics(&mut buf, &abs_ranks)
        };
        let quantile_of = |table: &[(usize, f64)], level: f64| {
            let (lo, hi, frac) = type7_position(n, level);
            interpolate(lookup(table, lo), lookup(table, hi), frac)
        };
        for stat in &self.stats {
            let v = match *stat {
                Statistic::RawMoment(o) => raw_moment(x, o)?,
                Statistic::Quantile(l) => quantile_of(&plain, l),
                Statistic::UpCrossing(t) => up_crossing(x, t)?,
                Statistic::Lag1AutocovSquares => lag1_autocov_squares(x)?,
                Statistic::QuantileOfAbs(l) => quantile_of(&abs, l),
                Statistic::AtMost(t) => at_most(x, t)?,
                Statistic::Min => lookup(&plain, 0),
                Statistic::Max => lookup(&plain, n - 1),
                Statistic::Count { center, scale } => (n as f64 - center) / scale,
            };
            out.push(v);
        }
        Ok(())
    }
}

pub fn apply_spec(spec: &SummarySpec, x: &[f64]) -> Result<SummaryVector> {
    spec.apply(x)
}

/// Values of one dataset's summaries, labelled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryVector {
    pub values: Vec<f64>,
    pub labels: Vec<String>,
}

impl SummaryVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
