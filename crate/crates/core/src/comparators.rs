//! Baseline selectors: marginal-correlation screening and coordinate
//! descent for soft-threshold and folded-concave penalties, with
//! warm-started regularization paths and cross-validated tuning.
//!
//! The penalized objective is `(2n)^-1 |y - x beta|^2 + sum_j p(|beta_j|)`.
//! The `(2n)^-1` scale makes the grid independent of the sample size and
//! gives the single-coordinate soft-threshold update its textbook form.
//! Grids and updates assume standardized columns; the functions do not
//! enforce that, so callers standardize first.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::core::{topk_abs, Dataset, SelectionMetrics, SparseVector, SupportSet};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Maximum coordinate-descent sweeps per grid point.
pub const MAX_SWEEPS: usize = 10_000;
/// Sweep convergence threshold on the largest coordinate change.
pub const COORD_TOL: f64 = 1e-7;

/// Penalty family for the coordinate-descent fitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltySpec {
    /// `p(t) = lambda t`.
    Lasso,
    /// Folded-concave penalty: linear to `lambda`, quadratic blend to
    /// `a lambda`, then flat at `lambda^2 (a + 1) / 2`. Requires `a > 2`.
    Scad { a: f64 },
}

impl PenaltySpec {
    /// Conventional shape parameter for the folded-concave penalty.
    pub const DEFAULT_A: f64 = 3.7;

    pub fn validate(&self) -> Result<()> {
        if let PenaltySpec::Scad { a } = self {
            if !a.is_finite() || *a <= 2.0 {
                return Err(Error::InvalidArgument(format!(
                    "scad shape a = {a} must be finite and exceed 2"
                )));
            }
        }
        Ok(())
    }

    /// Penalty value at `|theta| = t >= 0`.
    pub fn value(&self, t: f64, lambda: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match *self {
            PenaltySpec::Lasso => lambda * t,
            PenaltySpec::Scad { a } => {
                if t <= lambda {
                    lambda * t
                } else if t <= a * lambda {
                    (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
        }
    }
}

/// `sign(z) (|z| - lambda)_+`.
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    z.signum() * (z.abs() - lambda).max(0.0)
}

/// Exact minimizer over `theta` of the single-coordinate objective
/// `c/2 theta^2 - z theta + p(|theta|)` for curvature `c > 0`.
///
/// The folded-concave case splits into three segments; each contributes
/// its clamped stationary point, and the segment joints enter as
/// candidates so the concave middle segment (possible when `c` is small)
/// is still minimized exactly. Ties prefer the candidate closer to zero.
pub fn univariate_min(spec: &PenaltySpec, z: f64, c: f64, lambda: f64) -> f64 {
    if c <= 0.0 {
        // Degenerate (zero) column: pinned at zero.
        return 0.0;
    }
    match *spec {
        PenaltySpec::Lasso => soft_threshold(z, lambda) / c,
        PenaltySpec::Scad { a } => {
            let zz = z.abs();
            let mut candidates = vec![
                0.0,
                lambda,
                a * lambda,
                ((zz - lambda) / c).clamp(0.0, lambda),
                (zz / c).max(a * lambda),
            ];
            let curvature = c - 1.0 / (a - 1.0);
            if curvature > 0.0 {
                let t = (zz - a * lambda / (a - 1.0)) / curvature;
                candidates.push(t.clamp(lambda, a * lambda));
            }
            candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let objective = |t: f64| 0.5 * c * t * t - zz * t + spec.value(t, lambda);
            let mut best = candidates[0];
            let mut best_val = objective(best);
            for &t in &candidates[1..] {
                let v = objective(t);
                if v < best_val {
                    best = t;
                    best_val = v;
                }
            }
            if z < 0.0 {
                -best
            } else {
                best
            }
        }
    }
}

/// `(2n)^-1 |y - x beta|^2 + sum_j p(|beta_j|)`.
pub fn penalized_objective(
    data: &Dataset,
    spec: &PenaltySpec,
    lambda: f64,
    beta: &DVector<f64>,
) -> f64 {
    let resid = data.y() - data.x() * beta;
    let loss = resid.norm_squared() / (2.0 * data.n() as f64);
    loss + beta.iter().map(|b| spec.value(b.abs(), lambda)).sum::<f64>()
}

/// A converged (or capped) coordinate-descent solution.
#[derive(Debug, Clone)]
pub struct CdFit {
    pub beta: DVector<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Cyclic coordinate descent with residual maintenance.
///
/// Each coordinate solves its single-variable problem exactly; a sweep
/// visits every coordinate once. Stops when the largest coordinate change
/// in a sweep is at most [`COORD_TOL`], or after `max_sweeps`.
pub fn coordinate_descent(
    data: &Dataset,
    spec: &PenaltySpec,
    lambda: f64,
    init: Option<&DVector<f64>>,
    max_sweeps: usize,
) -> Result<CdFit> {
    spec.validate()?;
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda = {lambda} must be finite and positive"
        )));
    }
    if max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be positive".into()));
    }
    let n = data.n() as f64;
    let p = data.p();
    let mut beta = match init {
        Some(b) => {
            if b.len() != p {
                return Err(Error::InvalidArgument(format!(
                    "warm start has {} entries for {} columns",
                    b.len(),
                    p
                )));
            }
            b.clone()
        }
        None => DVector::zeros(p),
    };
    let curvatures: Vec<f64> =
        (0..p).map(|j| data.x().column(j).norm_squared() / n).collect();
    let mut resid = data.y() - data.x() * &beta;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            let xj = data.x().column(j);
            let z = xj.dot(&resid) / n + curvatures[j] * beta[j];
            let new = univariate_min(spec, z, curvatures[j], lambda);
            let delta = new - beta[j];
            if delta != 0.0 {
                resid.axpy(-delta, &xj.clone_owned(), 1.0);
                beta[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change <= COORD_TOL {
            converged = true;
            break;
        }
    }
    Ok(CdFit { beta, converged, sweeps })
}

/// One grid point of a regularization path.
#[derive(Debug, Clone)]
pub struct PathEntry {
    pub lambda: f64,
    pub beta: SparseVector,
    /// False when coordinate descent hit the sweep cap at this point.
    pub converged: bool,
}

impl PathEntry {
    pub fn support(&self) -> &SupportSet {
        self.beta.support()
    }
}

/// Regularization path over a decreasing grid.
#[derive(Debug, Clone)]
pub struct SelectionPath {
    pub entries: Vec<PathEntry>,
}

fn validate_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    for pair in lambdas.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::InvalidArgument(format!(
                "lambda grid must be strictly decreasing; saw {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if let Some(&bad) = lambdas.iter().find(|l| !l.is_finite() || **l <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda grid entries must be finite and positive; saw {bad}"
        )));
    }
    Ok(())
}

/// Default grid: `count` log-spaced values from
/// `lambda_max = max_j |n^-1 x_j' y|` down to `1e-3 lambda_max`.
pub fn default_lambda_grid(data: &Dataset, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
    }
    let n = data.n() as f64;
    let lambda_max = (data.x().transpose() * data.y())
        .iter()
        .map(|v| v.abs() / n)
        .fold(0.0f64, f64::max);
    if lambda_max <= 0.0 {
        return Err(Error::InvalidArgument(
            "response is orthogonal to every column; the null grid is undefined".into(),
        ));
    }
    let lo = (1e-3 * lambda_max).ln();
    let hi = lambda_max.ln();
    Ok((0..count)
        .map(|i| (hi + (lo - hi) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Fits the whole path, warm-starting each grid point from the previous
/// solution. Entries that hit the sweep cap are flagged, not fatal.
pub fn penalized_path(
    data: &Dataset,
    spec: &PenaltySpec,
    lambdas: &[f64],
) -> Result<SelectionPath> {
    spec.validate()?;
    validate_grid(lambdas)?;
    let mut entries = Vec::with_capacity(lambdas.len());
    let mut warm = DVector::zeros(data.p());
    for &lambda in lambdas {
        let fit = coordinate_descent(data, spec, lambda, Some(&warm), MAX_SWEEPS)?;
        warm = fit.beta.clone();
        let nonzero: Vec<usize> =
            (0..data.p()).filter(|&j| fit.beta[j] != 0.0).collect();
        let values: Vec<f64> = nonzero.iter().map(|&j| fit.beta[j]).collect();
        let beta = SparseVector::new(SupportSet::new(nonzero), values)?;
        entries.push(PathEntry { lambda, beta, converged: fit.converged });
    }
    Ok(SelectionPath { entries })
}

/// Cross-validation outcome: the chosen grid point and the CV curve.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub lambda_star: f64,
    pub lambda_star_index: usize,
    /// Mean held-out squared error per grid point, in grid order.
    pub cv_curve: Vec<f64>,
}

/// K-fold cross-validation over a decreasing grid.
///
/// Rows are shuffled with the caller's stream and dealt round-robin into
/// folds, so the assignment is a pure function of the stream state. Each
/// fold's complement is fitted over the full path (warm starts) and
/// scored on the held-out rows; the curve is total held-out squared error
/// divided by `n`. Ties prefer the larger `lambda`, the sparser model.
pub fn cross_validate(
    data: &Dataset,
    spec: &PenaltySpec,
    lambdas: &[f64],
    folds: usize,
    rng: &mut StreamRng,
) -> Result<CvResult> {
    spec.validate()?;
    validate_grid(lambdas)?;
    if folds < 2 || folds > data.n() {
        return Err(Error::InvalidArgument(format!(
            "folds = {} must lie in 2..={}",
            folds,
            data.n()
        )));
    }
    let mut order: Vec<usize> = (0..data.n()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(rng);
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (i, &row) in order.iter().enumerate() {
        assignment[i % folds].push(row);
    }
    if assignment.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("a cross-validation fold is empty".into()));
    }
    let mut total_sse = vec![0.0f64; lambdas.len()];
    for held_out in &assignment {
        let train_rows: Vec<usize> = {
            let held: std::collections::BTreeSet<usize> = held_out.iter().copied().collect();
            (0..data.n()).filter(|r| !held.contains(r)).collect()
        };
        let train = data.select_rows(&train_rows)?;
        let test = data.select_rows(held_out)?;
        let path = penalized_path(&train, spec, lambdas)?;
        for (k, entry) in path.entries.iter().enumerate() {
            let resid = test.predict(&entry.beta) - test.y();
            total_sse[k] += resid.norm_squared();
        }
    }
    let cv_curve: Vec<f64> =
        total_sse.iter().map(|s| s / data.n() as f64).collect();
    // First index attaining the minimum; the grid decreases, so earlier
    // means larger lambda.
    let mut best = 0usize;
    for (k, &v) in cv_curve.iter().enumerate() {
        if v < cv_curve[best] {
            best = k;
        }
    }
    Ok(CvResult { lambda_star: lambdas[best], lambda_star_index: best, cv_curve })
}

/// Screening by marginal correlation: the `k` columns with the largest
/// `|x_j' y|`. With columns on a common scale this equals the first
/// gradient expansion of the iterative solver started from zero.
pub fn sis(data: &Dataset, k: usize) -> Result<SupportSet> {
    if k == 0 || k > data.p() {
        return Err(Error::InvalidArgument(format!(
            "k = {} must lie in 1..={}",
            k,
            data.p()
        )));
    }
    let scores = data.x().transpose() * data.y();
    topk_abs(scores.as_slice(), k)
}

/// Selection metrics per path entry, in path order.
pub fn tpr_fdr_curve(path: &SelectionPath, truth: &SupportSet) -> Result<Vec<SelectionMetrics>> {
    path.entries
        .iter()
        .map(|e| SelectionMetrics::evaluate(e.support(), truth))
        .collect()
}
