//! Iterative hard thresholding with least-squares refits, and the
//! two-stage procedure that runs an exhaustive subset search on the
//! iterate's support.
//!
//! One iteration, starting from the current sparse iterate `beta_t`:
//!
//! 1. expand: take the `l` largest gradient coordinates and join them with
//!    the current support;
//! 2. refit least squares on the expanded support;
//! 3. project: keep the `pi` largest refit coefficients (never more than
//!    the expanded support offers);
//! 4. refit least squares on the projected support to get `beta_{t+1}`.
//!
//! Iterations stop when the iterate moves by at most `tol` in Euclidean
//! norm, or after `max_iter` steps (reported via the `converged` flag).
//! The final model of size `s_hat` keeps the `min(s_hat, pi)` largest
//! coefficients, adds the `max(0, s_hat - pi)` largest gradient
//! coordinates, and pads with further gradient coordinates (in descending
//! magnitude) until the support size is exactly `s_hat`. Built this way,
//! the selected sets are nested as `s_hat` grows, so a whole model-size
//! sweep costs one run of the loop.
//!
//! The loss is the unnormalized residual sum of squares `|x beta - y|^2`
//! with gradient `2 x' (x beta - y)`.

use nalgebra::DVector;

use crate::bss::{best_subset_on_support, BssResult};
use crate::core::{topk_abs, Dataset, SparseVector, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::ols_fit;
use serde::{Deserialize, Serialize};

/// Tuning for the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IhtConfig {
    /// Projection size: supports of iterates never exceed `pi`.
    pub pi: usize,
    /// Expansion size: gradient coordinates added per iteration.
    pub l: usize,
    /// Final model size.
    pub s_hat: usize,
    /// Convergence threshold on the iterate change; `None` selects
    /// `1e-8 * |y| / sqrt(n)`.
    pub tol: Option<f64>,
    /// Iteration cap.
    pub max_iter: usize,
}

impl IhtConfig {
    pub fn new(pi: usize, l: usize, s_hat: usize) -> Self {
        IhtConfig { pi, l, s_hat, tol: None, max_iter: 500 }
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        if self.pi == 0 || self.l == 0 || self.s_hat == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "pi, l, s_hat, and max_iter must all be positive".into(),
            ));
        }
        if self.l > data.p() {
            return Err(Error::InvalidArgument(format!(
                "expansion size {} exceeds {} columns",
                self.l,
                data.p()
            )));
        }
        if self.s_hat > data.p() {
            return Err(Error::InvalidArgument(format!(
                "model size {} exceeds {} columns",
                self.s_hat,
                data.p()
            )));
        }
        if self.pi + self.l > data.n() {
            return Err(Error::InvalidArgument(format!(
                "pi + l = {} exceeds {} rows; the expanded refit would be underdetermined",
                self.pi + self.l,
                data.n()
            )));
        }
        if let Some(t) = self.tol {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "tol {t} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }
}

/// One iteration's bookkeeping.
#[derive(Debug, Clone)]
pub struct IhtStepRecord {
    /// Support refit after gradient expansion.
    pub expanded: SupportSet,
    /// Support kept after projection.
    pub projected: SupportSet,
    /// Loss of the new iterate.
    pub loss: f64,
    /// Euclidean distance between consecutive iterates.
    pub step_change: f64,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct IhtRun {
    /// Final iterate (support size at most `pi`).
    pub beta: SparseVector,
    /// Model of size `s_hat` assembled from the final iterate.
    pub support: SupportSet,
    pub trace: Vec<IhtStepRecord>,
    /// False when the run stopped at `max_iter` without meeting `tol`.
    pub converged: bool,
}

/// Unnormalized squared-error loss `|x beta - y|^2`.
pub fn loss(data: &Dataset, beta: &SparseVector) -> Result<f64> {
    beta.support().check_bounds(data.p())?;
    let resid = data.predict(beta) - data.y();
    Ok(resid.norm_squared())
}

/// Loss gradient `2 x' (x beta - y)` as a dense length-p vector.
pub fn gradient(data: &Dataset, beta: &SparseVector) -> Result<DVector<f64>> {
    beta.support().check_bounds(data.p())?;
    let resid = data.predict(beta) - data.y();
    Ok(data.x().transpose() * resid * 2.0)
}

/// Largest-magnitude refit coefficients, ties toward the smaller index.
fn topk_of_fit(support: &SupportSet, coefficients: &[f64], r: usize) -> SupportSet {
    let mut order: Vec<usize> = (0..coefficients.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        coefficients[b]
            .abs()
            .partial_cmp(&coefficients[a].abs())
            .expect("refit coefficients are finite")
            .then(support.indices()[a].cmp(&support.indices()[b]))
    });
    SupportSet::new(order.into_iter().take(r).map(|i| support.indices()[i]))
}

/// One expand/refit/project/refit iteration.
pub fn iht_step(
    data: &Dataset,
    beta: &SparseVector,
    config: &IhtConfig,
) -> Result<(SparseVector, IhtStepRecord)> {
    config.validate(data)?;
    beta.support().check_bounds(data.p())?;
    if beta.support().len() > config.pi {
        return Err(Error::InvalidArgument(format!(
            "iterate support size {} exceeds pi = {}",
            beta.support().len(),
            config.pi
        )));
    }
    let grad = gradient(data, beta)?;
    let expansion = topk_abs(grad.as_slice(), config.l)?;
    let expanded = beta.support().union(&expansion);
    let wide = ols_fit(data, &expanded)?;
    let projected = topk_of_fit(&wide.support, &wide.coefficients, config.pi.min(expanded.len()));
    let narrow = ols_fit(data, &projected)?;
    let next = narrow.sparse();
    let record = IhtStepRecord {
        expanded,
        projected,
        loss: narrow.rss,
        step_change: next.l2_distance(beta),
    };
    Ok((next, record))
}

/// Runs the iteration from the zero vector and assembles the final model.
pub fn iht_run(data: &Dataset, config: &IhtConfig) -> Result<IhtRun> {
    config.validate(data)?;
    let tol = config
        .tol
        .unwrap_or_else(|| 1e-8 * data.y().norm() / (data.n() as f64).sqrt());
    let mut beta = SparseVector::zero();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let (next, record) = iht_step(data, &beta, config)?;
        let change = record.step_change;
        beta = next;
        trace.push(record);
        if change <= tol {
            converged = true;
            break;
        }
    }
    let support = final_support(data, &beta, config.pi, config.s_hat)?;
    Ok(IhtRun { beta, support, trace, converged })
}

/// Assembles the size-`s_hat` model from a converged iterate; see the
/// module docs for the composition rule.
pub fn final_support(
    data: &Dataset,
    beta: &SparseVector,
    pi: usize,
    s_hat: usize,
) -> Result<SupportSet> {
    let mut path = model_size_path(data, beta, pi, s_hat)?;
    Ok(path.pop().expect("path for s_hat >= 1 is nonempty"))
}

/// Final models for every size `1..=max_s_hat`, sharing one gradient
/// evaluation. The sets are nested: `path[i]` is a subset of `path[i+1]`.
pub fn model_size_path(
    data: &Dataset,
    beta: &SparseVector,
    pi: usize,
    max_s_hat: usize,
) -> Result<Vec<SupportSet>> {
    if pi == 0 {
        return Err(Error::InvalidArgument("pi must be positive".into()));
    }
    if max_s_hat == 0 || max_s_hat > data.p() {
        return Err(Error::InvalidArgument(format!(
            "model size {} must lie in 1..={}",
            max_s_hat,
            data.p()
        )));
    }
    beta.support().check_bounds(data.p())?;
    let grad = gradient(data, beta)?;

    // Coefficient indices by descending magnitude, then gradient indices
    // by descending magnitude; both with smaller-index tie-breaks.
    let coef_order: Vec<usize> = {
        let mut order: Vec<usize> = (0..beta.values().len()).collect();
        order.sort_unstable_by(|&a, &b| {
            beta.values()[b]
                .abs()
                .partial_cmp(&beta.values()[a].abs())
                .expect("coefficients are finite")
                .then(beta.support().indices()[a].cmp(&beta.support().indices()[b]))
        });
        order.into_iter().map(|i| beta.support().indices()[i]).collect()
    };
    let grad_order: Vec<usize> = {
        let mut order: Vec<usize> = (0..data.p()).collect();
        order.sort_unstable_by(|&a, &b| {
            grad[b]
                .abs()
                .partial_cmp(&grad[a].abs())
                .expect("gradient entries are finite")
                .then(a.cmp(&b))
        });
        order
    };

    let mut out = Vec::with_capacity(max_s_hat);
    for s_hat in 1..=max_s_hat {
        let keep = s_hat.min(pi).min(coef_order.len());
        let mut set: std::collections::BTreeSet<usize> =
            coef_order[..keep].iter().copied().collect();
        let from_grad = s_hat.saturating_sub(pi);
        let mut taken = 0usize;
        for &j in &grad_order {
            if taken < from_grad {
                set.insert(j);
                taken += 1;
            } else if set.len() < s_hat {
                set.insert(j);
            } else {
                break;
            }
        }
        debug_assert_eq!(set.len(), s_hat);
        out.push(SupportSet::new(set));
    }
    Ok(out)
}

/// Runs the iteration, then searches exhaustively for the best size-`s`
/// subset of the final iterate's support.
///
/// Requires `s <= pi + l`; errors from the subset search (including a
/// candidate support smaller than `s`) propagate.
pub fn two_stage(data: &Dataset, config: &IhtConfig, s: usize, budget: u64) -> Result<BssResult> {
    if s == 0 || s > config.pi + config.l {
        return Err(Error::InvalidArgument(format!(
            "second-stage size {} must lie in 1..={}",
            s,
            config.pi + config.l
        )));
    }
    let run = iht_run(data, config)?;
    best_subset_on_support(data, s, run.beta.support(), budget)
}
