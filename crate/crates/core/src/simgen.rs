//! Synthetic benchmark generation: structured covariances, chi-square
//! signal coefficients, Gaussian designs, and the correlated-noise column
//! augmentation used to stress selectors.
//!
//! All draws come from caller-provided streams (see [`crate::rng`]), so a
//! configuration plus a master seed pins every byte of a generated
//! dataset, and independent concerns (design, coefficients, appended
//! noise) never share a stream.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::core::{Dataset, SparseVector, SupportSet};
use crate::error::{Error, Result};
use crate::rng::{domain, stream, StreamRng};

/// Covariance structure for the design rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    /// `sigma[i, j] = q^|i - j|`.
    ExpDecay { q: f64 },
    /// Unit diagonal, `q` everywhere off it.
    Constant { q: f64 },
    /// `v diag(spikes) v' + i` with `v` a random column-orthonormal
    /// `p x k` matrix.
    Factor { k: usize, spikes: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub p: usize,
    pub kind: CovarianceKind,
}

impl CovarianceSpec {
    pub fn identity(p: usize) -> Self {
        CovarianceSpec { p, kind: CovarianceKind::Identity }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidArgument("covariance dimension is zero".into()));
        }
        match &self.kind {
            CovarianceKind::Identity => Ok(()),
            CovarianceKind::ExpDecay { q } | CovarianceKind::Constant { q } => {
                if !q.is_finite() || !(0.0..1.0).contains(q) {
                    return Err(Error::InvalidArgument(format!(
                        "correlation q = {q} must lie in [0, 1)"
                    )));
                }
                Ok(())
            }
            CovarianceKind::Factor { k, spikes } => {
                if *k == 0 || *k > self.p {
                    return Err(Error::InvalidArgument(format!(
                        "factor count {} must lie in 1..={}",
                        k, self.p
                    )));
                }
                if spikes.len() != *k {
                    return Err(Error::InvalidArgument(format!(
                        "{} spikes for {} factors",
                        spikes.len(),
                        k
                    )));
                }
                if spikes.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                    return Err(Error::InvalidArgument(
                        "factor spikes must be finite and positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Two-factor covariance with spikes proportional to the dimension.
pub fn spiky_strong(p: usize) -> CovarianceSpec {
    let pf = p as f64;
    CovarianceSpec { p, kind: CovarianceKind::Factor { k: 2, spikes: vec![2.0 * pf, pf] } }
}

/// Two-factor covariance with spikes proportional to the square root of
/// the dimension.
pub fn spiky_weak(p: usize) -> CovarianceSpec {
    let root = (p as f64).sqrt();
    CovarianceSpec { p, kind: CovarianceKind::Factor { k: 2, spikes: vec![2.0 * root, root] } }
}

/// A full benchmark scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: usize,
    /// True support size; the support is always `0..s`.
    pub s: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Smallest coefficient magnitude.
    pub beta_min: f64,
    /// Overrides the default sample size `ceil(2 s log p)`.
    #[serde(default)]
    pub n_override: Option<usize>,
    pub cov: CovarianceSpec,
    pub seed: u64,
}

impl SimConfig {
    pub fn n(&self) -> usize {
        self.n_override
            .unwrap_or_else(|| (2.0 * self.s as f64 * (self.p as f64).ln()).ceil() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.s > self.p {
            return Err(Error::InvalidArgument(format!(
                "support size {} must lie in 1..={}",
                self.s, self.p
            )));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sigma = {} must be finite and nonnegative",
                self.sigma
            )));
        }
        if !self.beta_min.is_finite() || self.beta_min <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "beta_min = {} must be finite and positive",
                self.beta_min
            )));
        }
        if self.cov.p != self.p {
            return Err(Error::InvalidArgument(format!(
                "covariance dimension {} does not match p = {}",
                self.cov.p, self.p
            )));
        }
        self.cov.validate()?;
        if self.n() == 0 {
            return Err(Error::InvalidArgument(
                "sample size resolves to zero; set n_override".into(),
            ));
        }
        Ok(())
    }
}

/// Materializes the covariance matrix. The factor variant draws its
/// orthonormal columns from the stream `(seed, COVARIANCE, 0)`; columns
/// are sign-fixed so the result is a pure function of the stream.
pub fn gen_covariance(spec: &CovarianceSpec, seed: u64) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let p = spec.p;
    Ok(match &spec.kind {
        CovarianceKind::Identity => DMatrix::identity(p, p),
        CovarianceKind::ExpDecay { q } => DMatrix::from_fn(p, p, |i, j| {
            q.powi((i as i32 - j as i32).abs())
        }),
        CovarianceKind::Constant { q } => {
            DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { *q })
        }
        CovarianceKind::Factor { k, spikes } => {
            let mut rng = stream(seed, domain::COVARIANCE, 0);
            let mut g: DMatrix<f64> = DMatrix::zeros(p, *k);
            for i in 0..p {
                for j in 0..*k {
                    g[(i, j)] = rng.sample(StandardNormal);
                }
            }
            let qr = g.qr();
            let mut v = qr.q();
            let r = qr.r();
            for j in 0..*k {
                if r[(j, j)] < 0.0 {
                    for i in 0..p {
                        v[(i, j)] = -v[(i, j)];
                    }
                }
            }
            let mut sigma = DMatrix::identity(p, p);
            for (j, spike) in spikes.iter().enumerate() {
                let col = v.column(j);
                // sigma += spike * col col'
                sigma.ger(*spike, &col.clone_owned(), &col.clone_owned(), 1.0);
            }
            sigma
        }
    })
}

/// Symmetric square root via the eigendecomposition. Eigenvalues in
/// `(-1e-8, 0)` are treated as rounding and clamped to zero; anything
/// more negative is a real indefiniteness and rejected.
pub fn covariance_root(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if sigma.nrows() != sigma.ncols() {
        return Err(Error::InvalidCovariance(format!(
            "matrix is {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let eig = sigma.clone().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda < -1e-8 {
            return Err(Error::InvalidCovariance(format!(
                "eigenvalue {lambda} is negative beyond rounding"
            )));
        }
        let root = lambda.max(0.0).sqrt();
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= root;
        }
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Signal coefficients: support `0..s`, each coefficient
/// `beta_min * (1 + z^2)` with `z` standard normal, so every magnitude
/// is at least `beta_min` and the relative excess has unit mean.
pub fn gen_beta(config: &SimConfig, rng: &mut StreamRng) -> Result<SparseVector> {
    config.validate()?;
    let values: Vec<f64> = (0..config.s)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            config.beta_min * (1.0 + z * z)
        })
        .collect();
    SparseVector::new(SupportSet::new(0..config.s), values)
}

/// Draws the design and response with a precomputed covariance root
/// (pass `None` for the identity). Rows are i.i.d. `root * z` with `z`
/// standard normal; the response adds `sigma`-scaled Gaussian noise.
/// Draw order is fixed: the design row-major first, then the noise, so
/// one stream yields one reproducible dataset.
pub fn sample_dataset_with_root(
    config: &SimConfig,
    beta: &SparseVector,
    root: Option<&DMatrix<f64>>,
    rng: &mut StreamRng,
) -> Result<Dataset> {
    config.validate()?;
    beta.support().check_bounds(config.p)?;
    let n = config.n();
    let p = config.p;
    if let Some(r) = root {
        if r.nrows() != p || r.ncols() != p {
            return Err(Error::InvalidCovariance(format!(
                "root is {}x{} for p = {}",
                r.nrows(),
                r.ncols(),
                p
            )));
        }
    }
    let mut draws = Vec::with_capacity(n * p);
    for _ in 0..n * p {
        draws.push(rng.sample::<f64, _>(StandardNormal));
    }
    let z = DMatrix::from_row_slice(n, p, &draws);
    // Row-wise x_i = root z_i; with a symmetric root that is X = Z root.
    let x = match root {
        Some(r) => &z * r,
        None => z,
    };
    let mut y = DVector::zeros(n);
    for (&j, &v) in beta.support().indices().iter().zip(beta.values()) {
        y.axpy(v, &x.column(j).clone_owned(), 1.0);
    }
    for i in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        y[i] += config.sigma * e;
    }
    Dataset::new(x, y)
}

/// [`sample_dataset_with_root`] with the root built from the config's
/// covariance spec (identity skips the transform).
pub fn sample_dataset(
    config: &SimConfig,
    beta: &SparseVector,
    rng: &mut StreamRng,
) -> Result<Dataset> {
    config.validate()?;
    let root = match config.cov.kind {
        CovarianceKind::Identity => None,
        _ => Some(covariance_root(&gen_covariance(&config.cov, config.seed)?)?),
    };
    sample_dataset_with_root(config, beta, root.as_ref(), rng)
}

/// Appends `p_n` pure-noise columns, mutually correlated at 0.5
/// (covariance `0.5 i + 0.5 11'`) but independent of everything already
/// in the dataset. Original columns and the response are untouched.
pub fn augment_noise(data: &Dataset, p_n: usize, rng: &mut StreamRng) -> Result<Dataset> {
    if p_n == 0 {
        return Err(Error::InvalidArgument("p_n must be positive".into()));
    }
    let n = data.n();
    let sigma = DMatrix::from_fn(p_n, p_n, |i, j| if i == j { 1.0 } else { 0.5 });
    let root = covariance_root(&sigma)?;
    let mut draws = Vec::with_capacity(n * p_n);
    for _ in 0..n * p_n {
        draws.push(rng.sample::<f64, _>(StandardNormal));
    }
    let noise = DMatrix::from_row_slice(n, p_n, &draws) * root;
    let mut x = DMatrix::zeros(n, data.p() + p_n);
    x.view_mut((0, 0), (n, data.p())).copy_from(data.x());
    x.view_mut((0, data.p()), (n, p_n)).copy_from(&noise);
    Dataset::new(x, data.y().clone())
}

/// Tiny fixed design where two spurious columns jointly reproduce the
/// two-column signal exactly: subset search at the true size ties, while
/// the columns stay individually well separated. `eta` in `(0, 1]`
/// controls how far the signal pair leaks outside the spurious span.
/// Returns the dataset (response `x beta` with the canonical
/// coefficients) and those coefficients.
pub fn corner_case_design(eta: f64) -> Result<(Dataset, SparseVector)> {
    if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} must lie in (0, 1]"
        )));
    }
    let r = (1.0 + eta * eta).sqrt();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = DMatrix::from_columns(&[
        DVector::from_column_slice(&[1.0 / r, 0.0, eta / r]),
        DVector::from_column_slice(&[1.0 / r, 0.0, -eta / r]),
        DVector::from_column_slice(&[h, h, 0.0]),
        DVector::from_column_slice(&[0.0, 1.0, 0.0]),
    ]);
    let c = r / 2.0;
    let beta = SparseVector::new(SupportSet::new([0usize, 1]), vec![c, c])?;
    let y = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    Ok((Dataset::new(x, y)?, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rss;
    use approx::assert_relative_eq;

    fn base_config(p: usize, s: usize) -> SimConfig {
        SimConfig {
            p,
            s,
            sigma: 0.3,
            beta_min: 0.1,
            n_override: None,
            cov: CovarianceSpec::identity(p),
            seed: 11,
        }
    }

    #[test]
    fn default_sample_sizes() {
        assert_eq!(base_config(100, 5).n(), 47);
        assert_eq!(base_config(200, 10).n(), 106);
        assert_eq!(base_config(1000, 50).n(), 691);
        let mut c = base_config(100, 5);
        c.n_override = Some(33);
        assert_eq!(c.n(), 33);
    }

    #[test]
    fn exp_decay_matrix_values() {
        let id = gen_covariance(
            &CovarianceSpec { p: 4, kind: CovarianceKind::ExpDecay { q: 0.0 } },
            0,
        )
        .unwrap();
        assert_relative_eq!((id - DMatrix::identity(4, 4)).norm(), 0.0);
        let m = gen_covariance(
            &CovarianceSpec { p: 3, kind: CovarianceKind::ExpDecay { q: 0.5 } },
            0,
        )
        .unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0],
        );
        assert_relative_eq!((m - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_correlation_matrix_values() {
        let m = gen_covariance(
            &CovarianceSpec { p: 3, kind: CovarianceKind::Constant { q: 0.8 } },
            0,
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[(i, j)], if i == j { 1.0 } else { 0.8 });
            }
        }
    }

    #[test]
    fn factor_covariance_structure() {
        let spec = spiky_strong(20);
        let sigma = gen_covariance(&spec, 5).unwrap();
        assert_relative_eq!((&sigma - sigma.transpose()).norm(), 0.0, epsilon = 1e-12);
        // Spectrum: the two spikes shifted by one, then flat ones.
        let mut eigs: Vec<f64> = sigma.symmetric_eigenvalues().iter().cloned().collect();
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_relative_eq!(eigs[0], 41.0, epsilon = 1e-8);
        assert_relative_eq!(eigs[1], 21.0, epsilon = 1e-8);
        for e in &eigs[2..] {
            assert_relative_eq!(*e, 1.0, epsilon = 1e-8);
        }
        // Reproducible in full.
        let again = gen_covariance(&spec, 5).unwrap();
        assert_eq!(sigma, again);
        let other = gen_covariance(&spec, 6).unwrap();
        assert!(sigma != other);
    }

    #[test]
    fn covariance_spec_validation() {
        assert!(CovarianceSpec { p: 3, kind: CovarianceKind::ExpDecay { q: 1.0 } }
            .validate()
            .is_err());
        assert!(CovarianceSpec { p: 3, kind: CovarianceKind::Constant { q: -0.1 } }
            .validate()
            .is_err());
        assert!(CovarianceSpec {
            p: 3,
            kind: CovarianceKind::Factor { k: 2, spikes: vec![1.0] }
        }
        .validate()
        .is_err());
        assert!(CovarianceSpec {
            p: 3,
            kind: CovarianceKind::Factor { k: 4, spikes: vec![1.0; 4] }
        }
        .validate()
        .is_err());
    }

    #[test]
    fn covariance_root_squares_back() {
        let spec = CovarianceSpec { p: 5, kind: CovarianceKind::ExpDecay { q: 0.6 } };
        let sigma = gen_covariance(&spec, 0).unwrap();
        let root = covariance_root(&sigma).unwrap();
        assert_relative_eq!((&root * &root - &sigma).norm(), 0.0, epsilon = 1e-10);
        assert_relative_eq!((&root - root.transpose()).norm(), 0.0, epsilon = 1e-10);
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(covariance_root(&indefinite).is_err());
    }

    #[test]
    fn beta_coefficients_sit_above_the_floor() {
        let config = base_config(50, 8);
        let mut rng = stream(config.seed, domain::BETA, 0);
        let beta = gen_beta(&config, &mut rng).unwrap();
        assert_eq!(beta.support(), &SupportSet::new(0..8));
        assert!(beta.values().iter().all(|v| *v >= config.beta_min));
    }

    #[test]
    fn beta_excess_has_unit_mean() {
        let mut config = base_config(3, 1);
        config.beta_min = 0.1;
        let mut rng = stream(3, domain::BETA, 0);
        let reps = 100_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            let beta = gen_beta(&config, &mut rng).unwrap();
            sum += beta.values()[0] / config.beta_min - 1.0;
        }
        let mean = sum / reps as f64;
        assert!((mean - 1.0).abs() < 0.02, "chi-square mean {mean}");
    }

    #[test]
    fn noiseless_response_is_exact() {
        let mut config = base_config(10, 3);
        config.sigma = 0.0;
        let mut beta_rng = stream(config.seed, domain::BETA, 0);
        let beta = gen_beta(&config, &mut beta_rng).unwrap();
        let mut rng = stream(config.seed, domain::DESIGN, 0);
        let data = sample_dataset(&config, &beta, &mut rng).unwrap();
        assert_eq!(data.n(), config.n());
        assert_relative_eq!((data.predict(&beta) - data.y()).norm(), 0.0);
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut config = base_config(6, 2);
        config.cov = CovarianceSpec { p: 6, kind: CovarianceKind::ExpDecay { q: 0.5 } };
        let beta = gen_beta(&config, &mut stream(config.seed, domain::BETA, 0)).unwrap();
        let a = sample_dataset(&config, &beta, &mut stream(config.seed, domain::DESIGN, 4)).unwrap();
        let b = sample_dataset(&config, &beta, &mut stream(config.seed, domain::DESIGN, 4)).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        let c = sample_dataset(&config, &beta, &mut stream(config.seed, domain::DESIGN, 5)).unwrap();
        assert!(a.x() != c.x());
    }

    #[test]
    fn sample_moments_approach_the_population() {
        let mut config = base_config(3, 1);
        config.n_override = Some(10_000);
        let beta = SparseVector::new(SupportSet::new([0usize]), vec![1.0]).unwrap();
        let mut rng = stream(9, domain::DESIGN, 0);
        let data = sample_dataset(&config, &beta, &mut rng).unwrap();
        let n = data.n() as f64;
        let cov = data.x().transpose() * data.x() / n;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)] - expected).abs() < 0.05);
            }
            let mean = data.x().column(i).sum() / n;
            assert!(mean.abs() < 0.05);
        }
    }

    #[test]
    fn augmentation_appends_correlated_noise() {
        let mut config = base_config(4, 2);
        config.n_override = Some(10_000);
        let beta = gen_beta(&config, &mut stream(1, domain::BETA, 0)).unwrap();
        let data = sample_dataset(&config, &beta, &mut stream(1, domain::DESIGN, 0)).unwrap();
        let augmented = augment_noise(&data, 2, &mut stream(1, domain::AUGMENT, 0)).unwrap();
        assert_eq!(augmented.p(), 6);
        assert_eq!(augmented.y(), data.y());
        assert_eq!(augmented.x().view((0, 0), (data.n(), 4)), data.x().view((0, 0), (data.n(), 4)));
        let a = augmented.x().column(4);
        let b = augmented.x().column(5);
        let n = data.n() as f64;
        let corr = a.dot(&b) / n / (a.norm_squared() / n).sqrt() / (b.norm_squared() / n).sqrt();
        assert!((corr - 0.5).abs() < 0.03, "correlation {corr}");
        assert!(augment_noise(&data, 0, &mut stream(1, domain::AUGMENT, 0)).is_err());
    }

    #[test]
    fn corner_design_ties_at_the_true_size() {
        let (data, beta) = corner_case_design(0.5).unwrap();
        assert_relative_eq!((data.predict(&beta) - data.y()).norm(), 0.0, epsilon = 1e-14);
        let truth = rss(&data, &SupportSet::new([0usize, 1])).unwrap();
        let mimic = rss(&data, &SupportSet::new([2usize, 3])).unwrap();
        assert!(truth.abs() < 1e-16 && mimic.abs() < 1e-16);
        assert!(corner_case_design(0.0).is_err());
        assert!(corner_case_design(1.5).is_err());
    }
}
