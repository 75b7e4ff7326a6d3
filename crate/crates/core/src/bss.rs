//! Exhaustive best-subset search.
//!
//! `best_subset` enumerates every support of the requested size in
//! colexicographic order, refits least squares on each, and keeps the
//! support with the smallest residual sum of squares. The enumeration is
//! protected by an explicit budget: when `C(p, s_hat)` exceeds it the call
//! fails up front, carrying the required count, instead of silently
//! starting an infeasible scan.
//!
//! Tie handling is deterministic. The incumbent is replaced only on a
//! strict improvement beyond `1e-12 * |y|^2`; within that band the
//! lexicographically smallest support wins. `tie_count` reports how many
//! enumerated supports land within `1e-9 * |y|^2` of the minimum, so exact
//! ties (which signal an unidentifiable support) are visible to callers.

use crate::combin::{binomial, ColexCombinations};
use crate::core::{Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::ols_fit;
use crate::core::FitResult;

/// Outcome of a subset search.
#[derive(Debug, Clone)]
pub struct BssResult {
    /// Winning refit (support, coefficients, rss).
    pub best: FitResult,
    /// Number of enumerated supports with rss within `1e-9 * |y|^2` of the
    /// minimum. A value above 1 means the minimizer is not unique at that
    /// resolution.
    pub tie_count: usize,
    /// Total supports refit during the search.
    pub subsets_examined: u64,
}

/// Relative width of the strict-improvement band.
const IMPROVE_RTOL: f64 = 1e-12;

/// Relative width of the tie-counting band.
const TIE_RTOL: f64 = 1e-9;

fn search(data: &Dataset, s_hat: usize, pool: &[usize], budget: u64) -> Result<BssResult> {
    let required = binomial(pool.len(), s_hat);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let y_sq = data.y().norm_squared();
    let improve_tol = IMPROVE_RTOL * y_sq;
    let tie_tol = TIE_RTOL * y_sq;

    let mut best: Option<FitResult> = None;
    let mut min_rss = f64::INFINITY;
    let mut rss_seen: Vec<f64> = Vec::with_capacity(required as usize);
    for positions in ColexCombinations::new(pool.len(), s_hat) {
        let support = SupportSet::new(positions.iter().map(|&i| pool[i]));
        let fit = ols_fit(data, &support)?;
        min_rss = min_rss.min(fit.rss);
        rss_seen.push(fit.rss);
        best = match best {
            None => Some(fit),
            Some(cur) => {
                if fit.rss < cur.rss - improve_tol {
                    Some(fit)
                } else if fit.rss <= cur.rss + improve_tol && fit.support < cur.support {
                    Some(fit)
                } else {
                    Some(cur)
                }
            }
        };
    }
    let best = best.expect("enumeration yields at least one subset");
    let tie_count = rss_seen.iter().filter(|&&r| r <= min_rss + tie_tol).count();
    Ok(BssResult { best, tie_count, subsets_examined: rss_seen.len() as u64 })
}

/// Best size-`s_hat` support over all `p` columns.
///
/// Requires `1 <= s_hat <= min(n, p)` and `C(p, s_hat) <= budget`.
pub fn best_subset(data: &Dataset, s_hat: usize, budget: u64) -> Result<BssResult> {
    if s_hat == 0 || s_hat > data.n().min(data.p()) {
        return Err(Error::InvalidArgument(format!(
            "subset size {} must lie in 1..={}",
            s_hat,
            data.n().min(data.p())
        )));
    }
    let pool: Vec<usize> = (0..data.p()).collect();
    search(data, s_hat, &pool, budget)
}

/// Best size-`s_hat` support drawn from `candidate` only. Reported indices
/// refer to the original columns.
pub fn best_subset_on_support(
    data: &Dataset,
    s_hat: usize,
    candidate: &SupportSet,
    budget: u64,
) -> Result<BssResult> {
    candidate.check_bounds(data.p())?;
    if s_hat == 0 || s_hat > candidate.len() {
        return Err(Error::InvalidArgument(format!(
            "subset size {} must lie in 1..={} (candidate support size)",
            s_hat,
            candidate.len()
        )));
    }
    if s_hat > data.n() {
        return Err(Error::OverParameterized { support: s_hat, n: data.n() });
    }
    search(data, s_hat, candidate.indices(), budget)
}

/// Whether `s` fits nearly as well as `s_truth`:
/// `rss(s) <= rss(s_truth) + n * eta * tau`.
pub fn near_best_margin(
    data: &Dataset,
    s: &SupportSet,
    s_truth: &SupportSet,
    eta: f64,
    tau: f64,
) -> Result<bool> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta {eta} must lie in [0, 1)")));
    }
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidArgument(format!("tau {tau} must be finite and nonnegative")));
    }
    let r_s = ols_fit(data, s)?.rss;
    let r_truth = ols_fit(data, s_truth)?.rss;
    Ok(r_s <= r_truth + data.n() as f64 * eta * tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sup(ix: &[usize]) -> SupportSet {
        SupportSet::new(ix.iter().copied())
    }

    fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = stream(seed, 9, 1);
        let mut x = DMatrix::zeros(n, p);
        for i in 0..n {
            for j in 0..p {
                x[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Dataset::new(x, y).unwrap()
    }

    /// Orthonormal-column design: q r = qr(random), x = q.
    fn orthonormal_dataset(seed: u64, n: usize, p: usize, beta: &[f64]) -> Dataset {
        assert!(p <= n);
        let mut rng = stream(seed, 9, 2);
        let g = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let mut y = DVector::zeros(n);
        for (j, b) in beta.iter().enumerate() {
            y.axpy(*b, &q.column(j).clone_owned(), 1.0);
        }
        Dataset::new(q, y).unwrap()
    }

    #[test]
    fn recovers_single_noiseless_signal() {
        let data = orthonormal_dataset(3, 12, 4, &[2.0, 0.0, 0.0, 0.0]);
        let res = best_subset(&data, 1, 100).unwrap();
        assert_eq!(res.best.support, sup(&[0]));
        assert_relative_eq!(res.best.rss, 0.0, epsilon = 1e-18);
        assert_eq!(res.tie_count, 1);
        assert_eq!(res.subsets_examined, 4);
    }

    #[test]
    fn budget_guard_carries_required_count() {
        let data = random_dataset(4, 20, 10);
        match best_subset(&data, 4, 100) {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(required, 210);
                assert_eq!(budget, 100);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn validates_subset_size() {
        let data = random_dataset(5, 6, 10);
        assert!(best_subset(&data, 0, 100).is_err());
        assert!(best_subset(&data, 7, 100_000).is_err()); // exceeds n
    }

    #[test]
    fn rss_nonincreasing_in_subset_size() {
        let data = random_dataset(6, 25, 8);
        let mut last = f64::INFINITY;
        for s_hat in 1..=4 {
            let res = best_subset(&data, s_hat, 100_000).unwrap();
            assert!(res.best.rss <= last + 1e-10);
            last = res.best.rss;
        }
    }

    #[test]
    fn best_rss_bounds_random_subsets() {
        let data = random_dataset(7, 25, 9);
        let res = best_subset(&data, 3, 100_000).unwrap();
        let mut rng = stream(7, 9, 3);
        let y_sq = data.y().norm_squared();
        for _ in 0..100 {
            let subset = crate::combin::sample_subset(&mut rng, 9, 3);
            let r = crate::linalg::rss(&data, &SupportSet::new(subset)).unwrap();
            assert!(res.best.rss <= r + 1e-9 * y_sq);
        }
    }

    #[test]
    fn on_support_with_full_candidate_matches_unrestricted() {
        let data = random_dataset(8, 20, 7);
        let full = best_subset(&data, 2, 100_000).unwrap();
        let all = sup(&(0..7).collect::<Vec<_>>());
        let restricted = best_subset_on_support(&data, 2, &all, 100_000).unwrap();
        assert_eq!(full.best.support, restricted.best.support);
        assert_relative_eq!(full.best.rss, restricted.best.rss);
        assert_eq!(full.tie_count, restricted.tie_count);
    }

    #[test]
    fn on_support_single_candidate_subset() {
        let data = random_dataset(9, 20, 7);
        let cand = sup(&[1, 3, 5]);
        let res = best_subset_on_support(&data, 3, &cand, 10).unwrap();
        assert_eq!(res.best.support, cand);
        assert_eq!(res.subsets_examined, 1);
    }

    #[test]
    fn on_support_validates_candidate_size() {
        let data = random_dataset(10, 20, 7);
        let cand = sup(&[1, 3]);
        assert!(best_subset_on_support(&data, 3, &cand, 10).is_err());
    }

    #[test]
    fn near_best_margin_basics() {
        let data = orthonormal_dataset(11, 15, 5, &[3.0, 1.0, 0.0, 0.0, 0.0]);
        let truth = sup(&[0, 1]);
        // The truth itself is trivially near-best at any margin.
        assert!(near_best_margin(&data, &truth, &truth, 0.5, 1.0).unwrap());
        // A support missing the strong signal is not near-best at tau = 0.
        assert!(!near_best_margin(&data, &sup(&[1, 2]), &truth, 0.5, 0.0).unwrap());
        assert!(near_best_margin(&data, &truth, &truth, 1.5, 1.0).is_err());
        assert!(near_best_margin(&data, &truth, &truth, 0.5, -1.0).is_err());
    }
}
