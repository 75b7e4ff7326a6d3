//! Design diagnostics that decide whether a sparse signal is separable
//! from spurious supports.
//!
//! Everything here is a function of the sample covariance and the true
//! coefficient vector. The central object is the conditional covariance
//! `d(s)` of the missed signal columns given a candidate support `s`
//! (see [`crate::linalg::conditional_cov`]): when some false support
//! makes `d(s)` small in the direction of the missed coefficients,
//! subset search cannot tell that support from the truth.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, sample_subset, ColexCombinations};
use crate::core::{Dataset, SparseVector, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{checked_cholesky, conditional_cov, projection_residual, restricted_eigs, SampleCovariance};
use crate::rng::{domain, stream};

/// Outcome of a separation-margin scan over false supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Minimum margin found.
    pub value: f64,
    /// Support attaining the minimum (first attainer in scan order for
    /// the exhaustive scan; best sampled support otherwise).
    pub achieving_set: SupportSet,
    /// True when every qualifying support was scanned. A sampled scan
    /// only upper-bounds the true minimum.
    pub exact: bool,
    pub subsets_examined: u64,
}

struct Stratum {
    /// Number of true coordinates missed by supports in this stratum.
    missed: usize,
    count: u128,
}

fn complement_of(support: &SupportSet, p: usize) -> Vec<usize> {
    (0..p).filter(|j| !support.contains(*j)).collect()
}

/// Minimum separation margin of size-`s_hat` false supports that miss at
/// least a `delta` fraction of the true support.
///
/// For each qualifying support `s` (size `s_hat`, missing at least
/// `max(1, ceil(delta * s_star))` true coordinates, at least one spurious
/// coordinate), the margin is
///
/// `beta0' d(s) beta0 / |s \ s_star|`
///
/// with `beta0` the missed true coefficients. Scans are exhaustive when
/// the qualifying count fits the budget; otherwise `budget` supports are
/// sampled uniformly from the qualifying family using the stream
/// `(seed, TAU_SUBSETS, s_hat)`, and the report is flagged inexact.
pub fn tau_star(
    data: &Dataset,
    beta_true: &SparseVector,
    s_hat: usize,
    delta: f64,
    budget: u64,
    seed: u64,
) -> Result<SeparationReport> {
    let p = data.p();
    let s_star = beta_true.support();
    s_star.check_bounds(p)?;
    if s_star.is_empty() {
        return Err(Error::InvalidArgument("true support is empty".into()));
    }
    let s = s_star.len();
    if s_hat == 0 || s_hat > p {
        return Err(Error::InvalidArgument(format!(
            "s_hat = {s_hat} must lie in 1..={p}"
        )));
    }
    if s_hat > data.n() {
        return Err(Error::InvalidArgument(format!(
            "s_hat = {} exceeds {} rows; conditioning blocks would be singular",
            s_hat,
            data.n()
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} must lie in [0, 1]"
        )));
    }
    if delta < 1.0 / s as f64 && s_hat < s {
        return Err(Error::InvalidArgument(format!(
            "s_hat = {s_hat} below the true support size {s} needs delta >= 1/{s}"
        )));
    }
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }

    // Inclusive constraint |s_star \ s| >= delta * s, nudged so that an
    // exactly integral product is not rounded up by noise.
    let t_min = 1usize.max((delta * s as f64 - 1e-9).ceil() as usize);
    let t_lo = t_min.max((s + 1).saturating_sub(s_hat));
    let t_hi = s.min(p - s_hat);
    let mut strata = Vec::new();
    for missed in t_lo..=t_hi.max(t_lo).min(t_hi) {
        let kept = s - missed;
        let spurious = s_hat - kept;
        debug_assert!(spurious >= 1 && spurious <= p - s);
        strata.push(Stratum {
            missed,
            count: binomial(s, kept).saturating_mul(binomial(p - s, spurious)),
        });
    }
    let total: u128 = strata
        .iter()
        .fold(0u128, |acc, st| acc.saturating_add(st.count));
    if total == 0 {
        return Err(Error::InvalidArgument(
            "no qualifying false supports for these sizes".into(),
        ));
    }

    let spurious_pool = complement_of(s_star, p);
    let mut best_value = f64::INFINITY;
    let mut best_set: Option<SupportSet> = None;
    let mut examined: u64 = 0;
    let mut consider = |kept_ix: &[usize], spur_ix: &[usize]| -> Result<()> {
        let candidate = SupportSet::new(
            kept_ix
                .iter()
                .map(|&i| s_star.indices()[i])
                .chain(spur_ix.iter().map(|&i| spurious_pool[i])),
        );
        let d = conditional_cov(data, s_star, &candidate)?;
        let missed = s_star.difference(&candidate);
        let beta0 = DVector::from_iterator(
            missed.len(),
            missed.iter().map(|j| beta_true.get(j)),
        );
        let value = beta0.dot(&(&d * &beta0)) / spur_ix.len() as f64;
        examined += 1;
        if value < best_value {
            best_value = value;
            best_set = Some(candidate);
        }
        Ok(())
    };

    let exact = total <= budget as u128;
    if exact {
        for st in &strata {
            let kept = s - st.missed;
            let spurious = s_hat - kept;
            for kept_ix in ColexCombinations::new(s, kept) {
                for spur_ix in ColexCombinations::new(p - s, spurious) {
                    consider(&kept_ix, &spur_ix)?;
                }
            }
        }
    } else {
        let mut rng = stream(seed, domain::TAU_SUBSETS, s_hat as u64);
        for _ in 0..budget {
            let mut draw = rng.random_range(0..total);
            let st = strata
                .iter()
                .find(|st| {
                    if draw < st.count {
                        true
                    } else {
                        draw -= st.count;
                        false
                    }
                })
                .expect("draw below the stratum total");
            let kept = s - st.missed;
            let kept_ix = sample_subset(&mut rng, s, kept);
            let spur_ix = sample_subset(&mut rng, p - s, s_hat - kept);
            consider(&kept_ix, &spur_ix)?;
        }
    }
    Ok(SeparationReport {
        value: best_value,
        achieving_set: best_set.expect("at least one support was scanned"),
        exact,
        subsets_examined: examined,
    })
}

/// Minimum eigenvalue of `d(s)` over all size-`s` supports other than the
/// truth. Exhaustive when `C(p, s) - 1` fits the budget, otherwise a
/// sampled upper bound from the stream `(seed, LAMBDA_SUBSETS, s)`.
pub fn lambda_m(
    data: &Dataset,
    s_true: &SupportSet,
    budget: u64,
    seed: u64,
) -> Result<(f64, bool)> {
    let p = data.p();
    s_true.check_bounds(p)?;
    if s_true.is_empty() {
        return Err(Error::InvalidArgument("true support is empty".into()));
    }
    let s = s_true.len();
    if s >= p {
        return Err(Error::InvalidArgument(
            "the true support covers every column; no false supports exist".into(),
        ));
    }
    if s > data.n() {
        return Err(Error::InvalidArgument(format!(
            "support size {} exceeds {} rows; conditioning blocks would be singular",
            s,
            data.n()
        )));
    }
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    let mut best = f64::INFINITY;
    let mut eval = |candidate: &SupportSet| -> Result<()> {
        let d = conditional_cov(data, s_true, candidate)?;
        let min_eig = d
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        best = best.min(min_eig);
        Ok(())
    };
    let exact = binomial(p, s).saturating_sub(1) <= budget as u128;
    if exact {
        for subset in ColexCombinations::new(p, s) {
            let candidate = SupportSet::new(subset);
            if &candidate == s_true {
                continue;
            }
            eval(&candidate)?;
        }
    } else {
        let mut rng = stream(seed, domain::LAMBDA_SUBSETS, s as u64);
        let mut evaluated = 0u64;
        while evaluated < budget {
            let candidate = SupportSet::new(sample_subset(&mut rng, p, s));
            if &candidate == s_true {
                continue;
            }
            eval(&candidate)?;
            evaluated += 1;
        }
    }
    Ok((best, exact))
}

/// Smallest signal size that the separation `lambda_m_value` can support:
/// `(4 xi sigma / (1 - eta)) sqrt(log p / (n lambda))`.
///
/// Zero noise needs no margin, so `sigma = 0` returns 0. A nonpositive
/// separation cannot support any signal; that returns the infinity
/// sentinel rather than an error.
pub fn beta_min_threshold(
    lambda_m_value: f64,
    n: usize,
    p: usize,
    sigma: f64,
    xi: f64,
    eta: f64,
) -> Result<f64> {
    if p < 3 {
        return Err(Error::InvalidArgument(format!(
            "p = {p} must be at least 3 so log p exceeds 1"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} must be finite and nonnegative"
        )));
    }
    if !xi.is_finite() || xi <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "xi = {xi} must be finite and positive"
        )));
    }
    if !eta.is_finite() || !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} must lie in [0, 1)"
        )));
    }
    if lambda_m_value.is_nan() {
        return Err(Error::InvalidArgument("separation value is NaN".into()));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    if lambda_m_value <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let ratio = (p as f64).ln() / (n as f64 * lambda_m_value);
    Ok(4.0 * xi * sigma / (1.0 - eta) * ratio.sqrt())
}

/// Largest margin over single-swap supports: for each spurious `j`, the
/// support replaces true coordinate `j0` with `j`, and the margin is the
/// scalar `d(s)` times the squared dropped coefficient. Always exact;
/// there are only `p - s` swaps.
pub fn tau_sup(data: &Dataset, beta_true: &SparseVector, j0: usize) -> Result<f64> {
    let p = data.p();
    let s_star = beta_true.support();
    s_star.check_bounds(p)?;
    if !s_star.contains(j0) {
        return Err(Error::InvalidArgument(format!(
            "j0 = {j0} is not in the true support {s_star}"
        )));
    }
    if s_star.len() >= p {
        return Err(Error::InvalidArgument(
            "the true support covers every column; no swaps exist".into(),
        ));
    }
    let base = s_star.difference(&SupportSet::new([j0]));
    let xj0 = data.x().column(j0).clone_owned();
    let b2 = beta_true.get(j0).powi(2);
    let n = data.n() as f64;
    let mut best = f64::NEG_INFINITY;
    for j in complement_of(s_star, p) {
        let candidate = base.union(&SupportSet::new([j]));
        let resid = projection_residual(data, &candidate, &xj0)?;
        best = best.max(resid.norm_squared() / n * b2);
    }
    Ok(best)
}

/// Sup-norm of the regression of spurious columns on true ones:
/// `max over spurious j of |sigma[j, s] sigma[s, s]^{-1} signs|`.
/// Values below 1 are the classical consistency condition for the
/// soft-threshold penalty. Depends on the design only.
pub fn irrepresentable(data: &Dataset, s_true: &SupportSet, signs: &[f64]) -> Result<f64> {
    let p = data.p();
    s_true.check_bounds(p)?;
    if s_true.is_empty() {
        return Err(Error::InvalidArgument("true support is empty".into()));
    }
    if signs.len() != s_true.len() {
        return Err(Error::InvalidArgument(format!(
            "{} signs for a support of size {}",
            signs.len(),
            s_true.len()
        )));
    }
    if signs.iter().any(|v| v.abs() != 1.0) {
        return Err(Error::InvalidArgument(
            "signs must be exactly +1 or -1".into(),
        ));
    }
    let complement = complement_of(s_true, p);
    if complement.is_empty() {
        return Ok(0.0);
    }
    let cov = SampleCovariance::from_dataset(data);
    let block = cov.block(s_true.indices(), s_true.indices());
    let chol = checked_cholesky(block, &format!("covariance block for {s_true}"))?;
    let solved = chol.solve(&DVector::from_column_slice(signs));
    let cross = cov.block(&complement, s_true.indices());
    Ok((cross * solved).amax())
}

/// Restricted condition number of the design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    /// `l_max / alpha_min`.
    pub kappa: f64,
    /// Largest eigenvalue over covariance blocks of size `min(2 pi + l, p)`.
    pub l_max: f64,
    /// Smallest eigenvalue over blocks of size `min(2 pi + s, p)`.
    pub alpha_min: f64,
    pub exact: bool,
}

/// Restricted condition number at the block sizes an iterate sweep can
/// touch: upper extreme at size `2 pi + l`, lower at `2 pi + s`, both
/// capped at `p` (a block of size `p` is the whole covariance, which
/// bounds every smaller block by eigenvalue interlacing).
pub fn kappa(
    data: &Dataset,
    pi: usize,
    l: usize,
    s: usize,
    budget: u64,
    seed: u64,
) -> Result<KappaReport> {
    if pi == 0 || l == 0 || s == 0 {
        return Err(Error::InvalidArgument(
            "pi, l, and s must all be positive".into(),
        ));
    }
    let p = data.p();
    let size_upper = (2usize.saturating_mul(pi)).saturating_add(l).min(p);
    let size_lower = (2usize.saturating_mul(pi)).saturating_add(s).min(p);
    let upper = restricted_eigs(data, size_upper, budget, seed)?;
    let lower = if size_lower == size_upper {
        upper
    } else {
        restricted_eigs(data, size_lower, budget, seed)?
    };
    let l_max = upper.upper;
    let alpha_min = lower.lower;
    // Treat a lower extreme at rounding scale as zero: the ratio would be
    // pure noise.
    if alpha_min <= l_max * 1e-12 {
        return Err(Error::DegenerateDesign(format!(
            "restricted lower eigenvalue {alpha_min:.3e} is not meaningfully positive"
        )));
    }
    Ok(KappaReport {
        kappa: l_max / alpha_min,
        l_max,
        alpha_min,
        exact: upper.exact && lower.exact,
    })
}
