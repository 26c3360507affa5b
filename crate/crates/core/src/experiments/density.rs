//! Gaussian kernel density estimates of marginal posteriors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summaries::quantile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub coordinate: String,
    pub x: f64,
    pub density: f64,
}

/// Silverman's rule `0.9 min(sd, IQR/1.34) n^(-1/5)`; the IQR term is
/// skipped when it is zero.
pub fn silverman_bandwidth(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let iqr = quantile(x, 0.75)? - quantile(x, 0.25)?;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Density of one coordinate on `grid` equispaced points spanning the draw
/// range widened by three bandwidths on each side.
pub fn kde_grid(x: &[f64], grid: usize, name: &str) -> Result<Vec<(f64, f64)>> {
    if x.is_empty() {
        return Err(Error::EmptyChain);
    }
    if grid < 2 {
        return Err(Error::Config(format!("grid must have at least 2 points, got {grid}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("coordinate `{name}` has non-finite draws")));
    }
    let h = silverman_bandwidth(x)?;
    if !(h > 0.0) {
        return Err(Error::DegenerateBandwidth(name.to_string()));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let norm = 1.0 / (x.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok((0..grid)
        .map(|j| {
            let g = lo + (hi - lo) * j as f64 / (grid - 1) as f64;
            let d = x
                .iter()
                .map(|v| {
                    let u = (g - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm;
            (g, d)
        })
        .collect())
}

/// Long-format density table over every coordinate.
pub fn density_table(names: &[String], draws: &[Vec<f64>], grid: usize) -> Result<Vec<DensityRow>> {
    if draws.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut rows = Vec::with_capacity(names.len() * grid);
    for (k, name) in names.iter().enumerate() {
        let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        for (x, density) in kde_grid(&col, grid, name)? {
            rows.push(DensityRow {
                coordinate: name.clone(),
                x,
                density,
            });
        }
    }
    Ok(rows)
}

pub fn write_density_csv<W: std::io::Write>(rows: &[DensityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["coordinate", "x", "density"])?;
    for r in rows {
        w.write_record([r.coordinate.clone(), r.x.to_string(), r.density.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Density table of a chain CSV written to `output`, or stdout.
pub fn density_from_chain(chain: &Path, grid: usize, output: Option<&Path>) -> Result<Vec<DensityRow>> {
    let (names, draws) = crate::samplers::read_chain_draws(chain)?;
    let rows = density_table(&names, &draws, grid)?;
    match output {
        Some(path) => write_density_csv(&rows, std::fs::File::create(path)?)?,
        None => write_density_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::simulate_normal;
    use crate::rng::Stream;

    #[test]
    fn identical_draws_have_no_bandwidth() {
        let err = kde_grid(&[2.0; 50], 64, "mu").unwrap_err();
        assert!(matches!(err, Error::DegenerateBandwidth(_)));
    }

    #[test]
    fn empty_chain() {
        assert!(matches!(density_table(&["a".into()], &[], 10), Err(Error::EmptyChain)));
    }

    #[test]
    fn standard_normal_density_and_mass() {
        let x = simulate_normal(0.0, 20_000, &mut Stream::new(9).rng());
        let grid = kde_grid(&x, 512, "mu").unwrap();
        let at0 = grid
            .iter()
            .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
            .unwrap()
            .1;
        assert!((at0 - 0.398_942_280_401_432_7).abs() < 0.02, "{at0}");
        let mass: f64 = grid.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
        assert!((mass - 1.0).abs() < 0.01, "{mass}");
    }
}
