//! Constrained empirical likelihood over simulated replicates.
//!
//! Given rows `h_i = g(X_i) - g(X_obs)`, find weights on the simplex maximising
//! `prod(m * w_i)` subject to `sum(w_i * h_i) = 0`. The problem is solved through
//! its convex dual: minimise `D(lambda) = -sum log(1 + lambda' h_i)`, after which
//! `w_i = 1 / (m (1 + lambda' h_i))`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Log-likelihood value representing a zero likelihood.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

const DECREMENT_TOL: f64 = 1e-10;
const SIMPLEX_TOL: f64 = 1e-10;
const FULL_STEP_DECREMENT: f64 = 1e-2;

/// `m x r` matrix of replicate-minus-observed summary differences, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ConstraintMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "constraint matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    /// Rows `sims[i] - observed`.
    pub fn from_differences<R: AsRef<[f64]>>(sims: &[R], observed: &[f64]) -> Result<Self> {
        let cols = observed.len();
        let mut data = Vec::with_capacity(sims.len() * cols);
        for (i, s) in sims.iter().enumerate() {
            let s = s.as_ref();
            if s.len() != cols {
                return Err(Error::Shape(format!(
                    "replicate {i} has {} summaries, observed has {cols}",
                    s.len()
                )));
            }
            data.extend(s.iter().zip(observed).map(|(a, b)| a - b));
        }
        Self::from_row_major(sims.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.cols + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(p) => Err(Error::NonFiniteInput {
                row: p / self.cols,
                col: p % self.cols,
            }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feasibility {
    DefinitelyInfeasible,
    MaybeFeasible,
}

/// Necessary-condition screen: if any column is strictly one-signed the origin
/// cannot lie in the convex hull of the rows.
pub fn quick_infeasibility_check(h: &ConstraintMatrix) -> Feasibility {
    for k in 0..h.cols {
        let (mut pos, mut neg) = (true, true);
        for i in 0..h.rows {
            let v = h.get(i, k);
            pos &= v > 0.0;
            neg &= v < 0.0;
            if !pos && !neg {
                break;
            }
        }
        if pos || neg {
            return Feasibility::DefinitelyInfeasible;
        }
    }
    Feasibility::MaybeFeasible
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ElStatus {
    /// Origin strictly inside the hull; every weight positive.
    Interior,
    /// Origin (numerically) on the hull boundary; some weight is zero.
    Boundary,
    /// Origin outside the hull.
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop when the dual gradient's infinity norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Weights below this count as zero.
    pub weight_floor: f64,
    /// Newton iterates keep `1 + lambda' h_i >= domain_factor / m`.
    pub domain_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            weight_floor: 1e-12,
            domain_factor: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElSolution {
    pub weights: Vec<f64>,
    pub multiplier: Vec<f64>,
    /// `(1/m) sum log w_i`, or [`LOG_ZERO`] unless `status` is `Interior`.
    pub log_el: f64,
    pub status: ElStatus,
    pub iterations: usize,
}

impl ElSolution {
    fn zero(m: usize, r: usize, status: ElStatus, iterations: usize) -> Self {
        Self {
            weights: vec![0.0; m],
            multiplier: vec![0.0; r],
            log_el: LOG_ZERO,
            status,
            iterations,
        }
    }

    pub fn is_interior(&self) -> bool {
        self.status == ElStatus::Interior
    }
}

struct Dual<'a> {
    h: &'a ConstraintMatrix,
    lower: f64,
}

impl Dual<'_> {
    /// Fills `1 + lambda' h_i` per row; false as soon as one leaves the domain.
    fn denominators(&self, lambda: &[f64], out: &mut [f64]) -> bool {
        for (z, row) in out.iter_mut().zip(self.h.iter_rows()) {
            *z = 1.0 + row.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>();
            if !(*z >= self.lower) {
                return false;
            }
        }
        true
    }

    fn objective(z: &[f64]) -> f64 {
        -z.iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Gradient `-sum h_i / z_i` and Hessian `sum h_i h_i' / z_i^2`.
    fn derivatives(&self, z: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let r = self.h.cols;
        let mut grad = DVector::zeros(r);
        let mut hess = DMatrix::zeros(r, r);
        for (row, &zi) in self.h.iter_rows().zip(z) {
            let inv = 1.0 / zi;
            let inv2 = inv * inv;
            for a in 0..r {
                grad[a] -= row[a] * inv;
                for b in 0..=a {
                    hess[(a, b)] += row[a] * row[b] * inv2;
                }
            }
        }
        for a in 0..r {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        (grad, hess)
    }
}

fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
    let scale = 1.0 + hess.diagonal().iter().fold(0.0_f64, |a, &d| a.max(d));
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        for d in 0..h.nrows() {
            h[(d, d)] += ridge;
        }
        if let Some(chol) = h.cholesky() {
            let dir = -chol.solve(grad);
            if dir.iter().all(|v| v.is_finite()) {
                return Some(dir);
            }
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
    }
    None
}

/// Maximise the empirical likelihood of the replicates subject to the moment
/// constraints encoded by `h`.
pub fn solve_el(h: &ConstraintMatrix, opts: &SolverOptions) -> Result<ElSolution> {
    h.check_finite()?;
    let (m, r) = (h.rows, h.cols);
    if quick_infeasibility_check(h) == Feasibility::DefinitelyInfeasible {
        return Ok(ElSolution::zero(m, r, ElStatus::Infeasible, 0));
    }

    let mf = m as f64;
    let dual = Dual {
        h,
        lower: opts.domain_factor / mf,
    };
    // D(lambda) >= D* always; once D drops below m log(m * floor) the optimum
    // must carry a weight under the floor (or not exist).
    let floor_bound = mf * (mf * opts.weight_floor).ln();

    let mut lambda = vec![0.0; r];
    let mut z = vec![1.0; m];
    let mut trial_lambda = vec![0.0; r];
    let mut trial_z = vec![0.0; m];
    let mut value = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let (grad, hess) = dual.derivatives(&z);
        if value < floor_bound {
            break;
        }
        let Some(dir) = newton_direction(&grad, hess) else {
            break;
        };
        // Newton decrement: tends to zero at an interior optimum but stays near
        // one while the multiplier runs off to infinity (boundary/infeasible),
        // where the gradient alone would also vanish.
        let decrement = -grad.dot(&dir);
        if grad.amax() <= opts.tolerance && decrement <= DECREMENT_TOL {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;
        let slope = -decrement;
        // -log is self-concordant: with a small decrement the full Newton step
        // stays in the domain and converges quadratically. Line search there
        // would compare objective values below floating-point resolution.
        if decrement < FULL_STEP_DECREMENT {
            for (t, (l, d)) in trial_lambda.iter_mut().zip(lambda.iter().zip(dir.iter())) {
                *t = l + d;
            }
            if dual.denominators(&trial_lambda, &mut trial_z) {
                value = Dual::objective(&trial_z);
                std::mem::swap(&mut lambda, &mut trial_lambda);
                std::mem::swap(&mut z, &mut trial_z);
                continue;
            }
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for (t, (l, d)) in trial_lambda.iter_mut().zip(lambda.iter().zip(dir.iter())) {
                *t = l + step * d;
            }
            if dual.denominators(&trial_lambda, &mut trial_z) {
                let trial_value = Dual::objective(&trial_z);
                if trial_value <= value + 1e-4 * step * slope {
                    value = trial_value;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut lambda, &mut trial_lambda);
        std::mem::swap(&mut z, &mut trial_z);
    }

    if converged {
        polish(&dual, &mut lambda, &mut z, &mut trial_lambda, &mut trial_z);
        let weights: Vec<f64> = z.iter().map(|zi| 1.0 / (mf * zi)).collect();
        let closure = (weights.iter().sum::<f64>() - 1.0).abs();
        if closure > SIMPLEX_TOL {
            return Ok(ElSolution::zero(m, r, classify_failure(h, &z), iterations));
        }
        if weights.iter().all(|&w| w >= opts.weight_floor) {
            let log_el = weights.iter().map(|w| w.ln()).sum::<f64>() / mf;
            return Ok(ElSolution {
                weights,
                multiplier: lambda,
                log_el,
                status: ElStatus::Interior,
                iterations,
            });
        }
        return Ok(ElSolution {
            weights: weights
                .iter()
                .map(|&w| if w < opts.weight_floor { 0.0 } else { w })
                .collect(),
            multiplier: lambda,
            log_el: LOG_ZERO,
            status: ElStatus::Boundary,
            iterations,
        });
    }

    Ok(ElSolution::zero(m, r, classify_failure(h, &z), iterations))
}

/// A few undamped Newton steps past the tolerance so the primal identities hold
/// to near machine precision. Stops as soon as a step fails to help.
fn polish(
    dual: &Dual<'_>,
    lambda: &mut Vec<f64>,
    z: &mut Vec<f64>,
    trial_lambda: &mut Vec<f64>,
    trial_z: &mut Vec<f64>,
) {
    for _ in 0..4 {
        let (grad, hess) = dual.derivatives(z);
        let gnorm = grad.amax();
        if gnorm == 0.0 {
            return;
        }
        let Some(dir) = newton_direction(&grad, hess) else {
            return;
        };
        for (t, (l, d)) in trial_lambda.iter_mut().zip(lambda.iter().zip(dir.iter())) {
            *t = l + d;
        }
        if !dual.denominators(trial_lambda, trial_z) {
            return;
        }
        let (trial_grad, _) = dual.derivatives(trial_z);
        if trial_grad.amax() >= gnorm {
            return;
        }
        std::mem::swap(lambda, trial_lambda);
        std::mem::swap(z, trial_z);
    }
}

/// Newton did not converge. If the normalised dual weights nearly satisfy the
/// constraints the origin sits on the hull boundary; otherwise it is outside.
fn classify_failure(h: &ConstraintMatrix, z: &[f64]) -> ElStatus {
    let inv: Vec<f64> = z.iter().map(|v| 1.0 / v).collect();
    let total: f64 = inv.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return ElStatus::Infeasible;
    }
    let mut residual = vec![0.0; h.cols];
    for (row, w) in h.iter_rows().zip(&inv) {
        for (acc, v) in residual.iter_mut().zip(row) {
            *acc += w / total * v;
        }
    }
    let worst = residual.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if worst <= 1e-6 * (1.0 + h.max_abs()) {
        ElStatus::Boundary
    } else {
        ElStatus::Infeasible
    }
}

/// `(1/m) sum log w_i` at the optimum, [`LOG_ZERO`] when any weight is zero.
pub fn log_el_scaled(h: &ConstraintMatrix, opts: &SolverOptions) -> Result<f64> {
    Ok(solve_el(h, opts)?.log_el)
}
