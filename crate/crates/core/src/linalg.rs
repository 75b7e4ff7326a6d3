//! Least-squares kernels and covariance-block computations.
//!
//! Every fit in this crate funnels through one least-squares routine:
//! a column-pivoted QR factorization whose rank is read off the factor
//! diagonal (threshold 1e-10 times the largest diagonal entry). When the
//! factor is rank deficient the minimum-norm solution is taken instead,
//! via an SVD with the matching relative cutoff. Sample covariances use
//! the 1/n convention: sigma_hat = x' x / n.

use nalgebra::{DMatrix, DVector};

use crate::combin::{binomial, sample_subset, ColexCombinations};
use crate::core::{Dataset, FitResult, SupportSet};
use crate::error::{Error, Result};
use crate::rng::{domain, stream};

/// Relative rank threshold shared by the QR and SVD paths.
const RANK_RTOL: f64 = 1e-10;

/// Condition-number ceiling for blocks that must be inverted.
const COND_LIMIT: f64 = 1e12;

/// Minimum-norm least-squares solution of `a * beta ~ b` for n >= k.
fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let k = a.ncols();
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let diag = r.diagonal();
    let lead = diag[0].abs();
    let rank = if lead == 0.0 {
        0
    } else {
        diag.iter().filter(|d| d.abs() > RANK_RTOL * lead).count()
    };
    if rank == k {
        let qty = qr.q().transpose() * b;
        if let Some(mut z) = r.solve_upper_triangular(&qty) {
            qr.p().inv_permute_rows(&mut z);
            return z;
        }
        // Triangular solve only fails on numerically zero pivots; fall
        // through to the rank-deficient path.
    }
    if rank == 0 {
        return DVector::zeros(k);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.solve(b, RANK_RTOL * smax)
        .unwrap_or_else(|_| DVector::zeros(k))
}

/// Ordinary least squares on the given support.
///
/// The empty support yields the null model with `rss = |y|^2`. Errors when
/// an index is out of bounds or the support has more columns than rows.
pub fn ols_fit(data: &Dataset, support: &SupportSet) -> Result<FitResult> {
    support.check_bounds(data.p())?;
    if support.len() > data.n() {
        return Err(Error::OverParameterized { support: support.len(), n: data.n() });
    }
    if support.is_empty() {
        return Ok(FitResult {
            support: SupportSet::empty(),
            coefficients: Vec::new(),
            rss: data.y().norm_squared(),
        });
    }
    let xs = data.x().select_columns(support.indices());
    let beta = least_squares(&xs, data.y());
    let resid = data.y() - &xs * &beta;
    Ok(FitResult {
        support: support.clone(),
        coefficients: beta.iter().copied().collect(),
        rss: resid.norm_squared(),
    })
}

/// Residual sum of squares after projecting `y` onto the span of the
/// support columns: `y' (I - P_S) y`.
pub fn rss(data: &Dataset, support: &SupportSet) -> Result<f64> {
    Ok(ols_fit(data, support)?.rss)
}

/// `(I - P_S) v`: the component of `v` orthogonal to the support columns.
pub fn projection_residual(data: &Dataset, support: &SupportSet, v: &DVector<f64>) -> Result<DVector<f64>> {
    support.check_bounds(data.p())?;
    if v.len() != data.n() {
        return Err(Error::InvalidArgument(format!(
            "vector length {} does not match {} rows",
            v.len(),
            data.n()
        )));
    }
    if support.len() > data.n() {
        return Err(Error::OverParameterized { support: support.len(), n: data.n() });
    }
    if support.is_empty() {
        return Ok(v.clone());
    }
    let xs = data.x().select_columns(support.indices());
    let beta = least_squares(&xs, v);
    Ok(v - &xs * &beta)
}

/// Sample covariance `x' x / n` of a dataset's design.
///
/// Symmetric by construction (the product is symmetrized to wash out
/// rounding) and positive semidefinite up to floating-point error.
#[derive(Debug, Clone)]
pub struct SampleCovariance {
    m: DMatrix<f64>,
}

impl SampleCovariance {
    pub fn from_dataset(data: &Dataset) -> Self {
        let mut m = data.x().transpose() * data.x() / data.n() as f64;
        let t = m.transpose();
        m += &t;
        m *= 0.5;
        SampleCovariance { m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn p(&self) -> usize {
        self.m.nrows()
    }

    /// Rectangular block indexed by row and column index lists.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.m[(rows[i], cols[j])])
    }
}

/// Checks that a symmetric block is positive definite with condition
/// number at most `COND_LIMIT`; returns its Cholesky factorization.
pub(crate) fn checked_cholesky(block: DMatrix<f64>, context: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let eigs = block.symmetric_eigenvalues();
    let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo <= 0.0 || hi / lo > COND_LIMIT {
        return Err(Error::SingularBlock { context: context.to_string() });
    }
    nalgebra::Cholesky::new(block).ok_or_else(|| Error::SingularBlock { context: context.to_string() })
}

/// Covariance of the missing signal columns after conditioning on a
/// candidate support: with `s0 = s_true \ s`,
///
/// `d(s) = sigma[s0,s0] - sigma[s0,s] sigma[s,s]^{-1} sigma[s,s0]`.
///
/// Returns a 0x0 matrix when `s` covers all of `s_true`. Errors when
/// `sigma[s,s]` is singular or has condition number above 1e12.
pub fn conditional_cov(data: &Dataset, s_true: &SupportSet, s: &SupportSet) -> Result<DMatrix<f64>> {
    s_true.check_bounds(data.p())?;
    s.check_bounds(data.p())?;
    let s0 = s_true.difference(s);
    let n = data.n() as f64;
    let x0 = data.x().select_columns(s0.indices());
    let sigma00 = x0.transpose() * &x0 / n;
    if s.is_empty() || s0.is_empty() {
        return Ok(sigma00);
    }
    let xs = data.x().select_columns(s.indices());
    let sigma_ss = xs.transpose() * &xs / n;
    let sigma_s0 = xs.transpose() * &x0 / n;
    let chol = checked_cholesky(sigma_ss, &format!("sample covariance block for {s}"))?;
    let solved = chol.solve(&sigma_s0);
    let mut d = sigma00 - sigma_s0.transpose() * solved;
    let t = d.transpose();
    d += &t;
    d *= 0.5;
    Ok(d)
}

/// Extremal eigenvalues of sample-covariance principal blocks of size `k`.
///
/// `upper` is the largest eigenvalue over blocks and `lower` the smallest;
/// by eigenvalue interlacing these equal the extrema over all blocks of
/// size at most `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedEigs {
    pub upper: f64,
    pub lower: f64,
    /// True when every size-k subset was visited. In the sampled regime
    /// `upper` is a lower bound of the true maximum and `lower` an upper
    /// bound of the true minimum.
    pub exact: bool,
}

/// Scans size-`k` principal blocks of the sample covariance. Enumerates
/// exhaustively when `C(p, k) <= budget`, otherwise evaluates `budget`
/// random subsets drawn from the stream `(seed, SUBSETS, k)`.
pub fn restricted_eigs(data: &Dataset, k: usize, budget: u64, seed: u64) -> Result<RestrictedEigs> {
    let p = data.p();
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!(
            "block size {k} must lie in 1..={p}"
        )));
    }
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    let cov = SampleCovariance::from_dataset(data);
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    let mut scan = |subset: &[usize]| {
        let eigs = cov.block(subset, subset).symmetric_eigenvalues();
        for e in eigs.iter() {
            upper = upper.max(*e);
            lower = lower.min(*e);
        }
    };
    let exact = binomial(p, k) <= budget as u128;
    if exact {
        for subset in ColexCombinations::new(p, k) {
            scan(&subset);
        }
    } else {
        let mut rng = stream(seed, domain::SUBSETS, k as u64);
        for _ in 0..budget {
            let subset = sample_subset(&mut rng, p, k);
            scan(&subset);
        }
    }
    Ok(RestrictedEigs { upper, lower, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sup(ix: &[usize]) -> SupportSet {
        SupportSet::new(ix.iter().copied())
    }

    fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = stream(seed, 9, 0);
        let mut x = DMatrix::zeros(n, p);
        for i in 0..n {
            for j in 0..p {
                x[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn ols_exact_on_square_system() {
        // x is invertible 2x2, so the fit interpolates and rss is 0.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, 5.0]);
        let data = Dataset::new(x, y).unwrap();
        let fit = ols_fit(&data, &sup(&[0, 1])).unwrap();
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.rss, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn ols_matches_normal_equations_on_random_instances() {
        for seed in 0..20 {
            let data = random_dataset(seed, 25, 8);
            let support = sup(&[0, 2, 5]);
            let fit = ols_fit(&data, &support).unwrap();
            let xs = data.x().select_columns(support.indices());
            let gram = xs.transpose() * &xs;
            let rhs = xs.transpose() * data.y();
            let beta = gram.try_inverse().unwrap() * rhs;
            for (a, b) in fit.coefficients.iter().zip(beta.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn ols_empty_support_is_null_model() {
        let data = random_dataset(1, 10, 3);
        let fit = ols_fit(&data, &SupportSet::empty()).unwrap();
        assert_relative_eq!(fit.rss, data.y().norm_squared());
        assert!(fit.coefficients.is_empty());
    }

    #[test]
    fn ols_min_norm_on_duplicated_column() {
        // Columns 0 and 1 are identical: the min-norm solution splits the
        // weight evenly instead of failing.
        let mut x = DMatrix::zeros(6, 2);
        for i in 0..6 {
            x[(i, 0)] = i as f64 + 1.0;
            x[(i, 1)] = i as f64 + 1.0;
        }
        let y = x.column(0) * 2.0;
        let data = Dataset::new(x, y.clone_owned()).unwrap();
        let fit = ols_fit(&data, &sup(&[0, 1])).unwrap();
        assert_relative_eq!(fit.rss, 0.0, epsilon = 1e-18);
        assert_relative_eq!(fit.coefficients[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ols_rejects_overparameterized_support() {
        let data = random_dataset(2, 3, 6);
        match ols_fit(&data, &sup(&[0, 1, 2, 3])) {
            Err(Error::OverParameterized { support, n }) => {
                assert_eq!((support, n), (4, 3));
            }
            other => panic!("expected over-parameterized error, got {other:?}"),
        }
    }

    #[test]
    fn rss_decreases_when_support_grows() {
        let data = random_dataset(3, 30, 6);
        let small = rss(&data, &sup(&[1, 3])).unwrap();
        let large = rss(&data, &sup(&[1, 2, 3])).unwrap();
        assert!(large <= small + 1e-10);
    }

    #[test]
    fn projection_residual_is_orthogonal_and_idempotent() {
        let data = random_dataset(4, 20, 5);
        let support = sup(&[0, 3]);
        let v = DVector::from_fn(20, |i, _| (i as f64).sin());
        let r = projection_residual(&data, &support, &v).unwrap();
        for &j in support.indices() {
            let dot = data.x().column(j).dot(&r);
            assert!(dot.abs() < 1e-10, "residual not orthogonal: {dot}");
        }
        let r2 = projection_residual(&data, &support, &r).unwrap();
        assert_relative_eq!((&r2 - &r).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn projection_residual_empty_support_is_identity() {
        let data = random_dataset(5, 8, 3);
        let v = DVector::from_fn(8, |i, _| i as f64);
        let r = projection_residual(&data, &SupportSet::empty(), &v).unwrap();
        assert_eq!(r, v);
    }

    #[test]
    fn sample_covariance_is_symmetric_psd() {
        let data = random_dataset(6, 40, 7);
        let cov = SampleCovariance::from_dataset(&data);
        let m = cov.matrix();
        for i in 0..7 {
            for j in 0..7 {
                assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-10);
            }
        }
        let min_eig = m
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig >= -1e-8);
    }

    #[test]
    fn conditional_cov_identity_design() {
        // Design columns sqrt(n) * e_i give exactly sigma = I, so
        // conditioning changes nothing: d = I on the missing block.
        let n = 4;
        let mut x = DMatrix::zeros(n, 4);
        for j in 0..4 {
            x[(j, j)] = (n as f64).sqrt();
        }
        let data = Dataset::new(x, DVector::zeros(n)).unwrap();
        let d = conditional_cov(&data, &sup(&[0, 1]), &sup(&[2])).unwrap();
        assert_eq!(d.nrows(), 2);
        assert_relative_eq!(d[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_cov_covered_truth_is_empty() {
        let data = random_dataset(7, 15, 5);
        let d = conditional_cov(&data, &sup(&[1, 2]), &sup(&[0, 1, 2])).unwrap();
        assert_eq!((d.nrows(), d.ncols()), (0, 0));
    }

    #[test]
    fn conditional_cov_empty_candidate_is_marginal_block() {
        let data = random_dataset(8, 15, 5);
        let d = conditional_cov(&data, &sup(&[1, 4]), &SupportSet::empty()).unwrap();
        let cov = SampleCovariance::from_dataset(&data);
        let expected = cov.block(&[1, 4], &[1, 4]);
        assert_relative_eq!((&d - &expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_cov_rejects_singular_block() {
        // Duplicate columns make sigma[S,S] exactly singular.
        let mut x = DMatrix::zeros(10, 3);
        for i in 0..10 {
            x[(i, 0)] = i as f64;
            x[(i, 1)] = i as f64;
            x[(i, 2)] = (i as f64).cos();
        }
        let data = Dataset::new(x, DVector::zeros(10)).unwrap();
        match conditional_cov(&data, &sup(&[2]), &sup(&[0, 1])) {
            Err(Error::SingularBlock { .. }) => {}
            other => panic!("expected singular block, got {other:?}"),
        }
    }

    #[test]
    fn schur_complement_matches_projected_gram() {
        // n * d(S) = x0' (I - P_S) x0, the projected Gram identity.
        for seed in 0..10 {
            let data = random_dataset(100 + seed, 30, 8);
            let s_true = sup(&[0, 1, 2]);
            let s = sup(&[2, 4, 6]);
            let d = conditional_cov(&data, &s_true, &s).unwrap();
            let s0 = s_true.difference(&s);
            let mut gram = DMatrix::zeros(s0.len(), s0.len());
            let cols: Vec<DVector<f64>> = s0
                .indices()
                .iter()
                .map(|&j| {
                    projection_residual(&data, &s, &data.x().column(j).clone_owned()).unwrap()
                })
                .collect();
            for a in 0..s0.len() {
                for b in 0..s0.len() {
                    gram[(a, b)] = cols[a].dot(&cols[b]);
                }
            }
            let lhs = d * data.n() as f64;
            assert_relative_eq!((&lhs - &gram).norm(), 0.0, epsilon = 1e-8 * gram.norm().max(1.0));
        }
    }

    #[test]
    fn restricted_eigs_identity_design() {
        let n = 6;
        let mut x = DMatrix::zeros(n, 6);
        for j in 0..6 {
            x[(j, j)] = (n as f64).sqrt();
        }
        let data = Dataset::new(x, DVector::zeros(n)).unwrap();
        let re = restricted_eigs(&data, 3, 1_000, 0).unwrap();
        assert!(re.exact);
        assert_relative_eq!(re.upper, 1.0, epsilon = 1e-10);
        assert_relative_eq!(re.lower, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn restricted_eigs_equicorrelated_pair() {
        // sigma = [[1, .5], [.5, 1]] realized exactly by sqrt(n) * sigma^{1/2}
        // rows padded with zeros; eigenvalues are 1.5 and 0.5.
        let q: f64 = 0.5;
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, q, q, 1.0]);
        let eig = nalgebra::SymmetricEigen::new(sigma);
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let n = 5;
        let mut x = DMatrix::zeros(n, 2);
        for i in 0..2 {
            for j in 0..2 {
                x[(i, j)] = root[(i, j)] * (n as f64).sqrt();
            }
        }
        let data = Dataset::new(x, DVector::zeros(n)).unwrap();
        let re = restricted_eigs(&data, 2, 10, 0).unwrap();
        assert!(re.exact);
        assert_relative_eq!(re.upper, 1.5, epsilon = 1e-10);
        assert_relative_eq!(re.lower, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn restricted_eigs_sampled_is_bounded_by_exact() {
        let data = random_dataset(11, 40, 12);
        let exact = restricted_eigs(&data, 3, 1_000, 0).unwrap();
        assert!(exact.exact);
        let sampled = restricted_eigs(&data, 3, 25, 7).unwrap();
        assert!(!sampled.exact);
        assert!(sampled.upper <= exact.upper + 1e-12);
        assert!(sampled.lower >= exact.lower - 1e-12);
    }

    #[test]
    fn restricted_eigs_validates_block_size() {
        let data = random_dataset(12, 10, 4);
        assert!(restricted_eigs(&data, 0, 10, 0).is_err());
        assert!(restricted_eigs(&data, 5, 10, 0).is_err());
    }
}
