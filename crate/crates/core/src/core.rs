//! Shared data model: datasets, index supports, sparse coefficient
//! vectors, fitted models, and selection metrics.
//!
//! Conventions used everywhere in this crate:
//! - column indices are 0-based;
//! - a support is a strictly increasing list of column indices;
//! - ties in magnitude-based selection break toward the smaller index.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed design matrix `x` (n rows, p columns) with response `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Requires at least one row and one column, matching lengths, and
    /// finite entries throughout.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "design matrix must have at least one row and one column".into(),
            ));
        }
        if y.len() != x.nrows() {
            return Err(Error::InvalidArgument(format!(
                "response length {} does not match {} design rows",
                y.len(),
                x.nrows()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "design and response entries must be finite".into(),
            ));
        }
        Ok(Dataset { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// `x * beta` using only the stored nonzero pattern of `beta`.
    pub fn predict(&self, beta: &SparseVector) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        for (&j, &v) in beta.support().indices().iter().zip(beta.values()) {
            out.axpy(v, &self.x.column(j).clone_owned(), 1.0);
        }
        out
    }

    /// Copy of this dataset with standardized columns; the response is
    /// left untouched.
    pub fn standardized(&self, mode: Standardize) -> Result<Dataset> {
        let x = standardize_columns(&self.x, mode)?;
        Ok(Dataset { x, y: self.y.clone() })
    }

    /// Sub-dataset keeping the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("row selection is empty".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n()) {
            return Err(Error::InvalidArgument(format!(
                "row {bad} out of range for {} rows",
                self.n()
            )));
        }
        let x = DMatrix::from_fn(rows.len(), self.p(), |i, j| self.x[(rows[i], j)]);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.y[r]));
        Ok(Dataset { x, y })
    }
}

/// Strictly increasing, duplicate-free set of column indices.
///
/// `Ord` compares the index lists lexicographically, which is the tie-break
/// order used by the subset search.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Builds a support from arbitrary indices; sorts and deduplicates.
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SupportSet { indices: v }
    }

    pub fn empty() -> Self {
        SupportSet { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.indices);
        v.extend_from_slice(&other.indices);
        SupportSet::new(v)
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        SupportSet {
            indices: self.indices.iter().copied().filter(|&j| !other.contains(j)).collect(),
        }
    }

    pub fn intersection_size(&self, other: &SupportSet) -> usize {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.indices.iter().filter(|&&j| large.contains(j)).count()
    }

    /// Errors unless every index is below `p`.
    pub fn check_bounds(&self, p: usize) -> Result<()> {
        match self.max_index() {
            Some(m) if m >= p => Err(Error::InvalidArgument(format!(
                "support index {m} out of bounds for {p} columns"
            ))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for SupportSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Coefficient vector stored as a support plus aligned values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    support: SupportSet,
    values: Vec<f64>,
}

impl SparseVector {
    /// `values[i]` is the coefficient of column `support.indices()[i]`.
    pub fn new(support: SupportSet, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "support size {} does not match {} values",
                support.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(SparseVector { support, values })
    }

    pub fn zero() -> Self {
        SparseVector { support: SupportSet::empty(), values: Vec::new() }
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coefficient of column `j`, zero when `j` is outside the support.
    pub fn get(&self, j: usize) -> f64 {
        match self.support.indices().binary_search(&j) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn dense(&self, p: usize) -> DVector<f64> {
        let mut out = DVector::zeros(p);
        for (&j, &v) in self.support.indices().iter().zip(&self.values) {
            out[j] = v;
        }
        out
    }

    /// Euclidean distance to `other`, evaluated over the union of supports.
    pub fn l2_distance(&self, other: &SparseVector) -> f64 {
        let mut sum = 0.0;
        for j in self.support.union(&other.support).iter() {
            let d = self.get(j) - other.get(j);
            sum += d * d;
        }
        sum.sqrt()
    }
}

/// Least-squares refit on a fixed support.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub support: SupportSet,
    /// Aligned with `support.indices()`.
    pub coefficients: Vec<f64>,
    /// Residual sum of squares of the refit.
    pub rss: f64,
}

impl FitResult {
    pub fn sparse(&self) -> SparseVector {
        SparseVector { support: self.support.clone(), values: self.coefficients.clone() }
    }
}

/// True positive rate and false discovery rate of a selected support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionMetrics {
    pub tpr: f64,
    pub fdr: f64,
}

impl SelectionMetrics {
    pub fn evaluate(selected: &SupportSet, truth: &SupportSet) -> Result<SelectionMetrics> {
        Ok(SelectionMetrics { tpr: tpr(selected, truth)?, fdr: fdr(selected, truth) })
    }
}

/// |selected ∩ truth| / |truth|. Errors when `truth` is empty.
pub fn tpr(selected: &SupportSet, truth: &SupportSet) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("true support must be nonempty for TPR".into()));
    }
    Ok(selected.intersection_size(truth) as f64 / truth.len() as f64)
}

/// |selected \ truth| / max(|selected|, 1). An empty selection has FDR 0.
pub fn fdr(selected: &SupportSet, truth: &SupportSet) -> f64 {
    let false_pos = selected.len() - selected.intersection_size(truth);
    false_pos as f64 / selected.len().max(1) as f64
}

/// Indices of the `r` largest entries of `values` in absolute value.
/// Magnitude ties break toward the smaller index, so the result is unique.
pub fn topk_abs(values: &[f64], r: usize) -> Result<SupportSet> {
    if r > values.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot take top {r} of {} entries",
            values.len()
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("cannot rank NaN entries".into()));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_unstable_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .expect("NaN excluded above")
            .then(a.cmp(&b))
    });
    idx.truncate(r);
    Ok(SupportSet::new(idx))
}

/// Column scaling mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardize {
    /// Center each column, then divide by its sample standard deviation
    /// (n-1 denominator).
    ZScore,
    /// Center each column, then scale it to unit Euclidean norm.
    UnitNorm,
}

/// Column-wise standardization. Errors on the first degenerate column
/// (zero variance, or zero norm after centering), naming its index.
pub fn standardize_columns(x: &DMatrix<f64>, mode: Standardize) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "standardization needs at least two rows".into(),
        ));
    }
    let mut out = x.clone();
    for j in 0..x.ncols() {
        let mut col = out.column_mut(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|v| *v -= mean);
        let scale = match mode {
            Standardize::ZScore => (col.norm_squared() / (n as f64 - 1.0)).sqrt(),
            Standardize::UnitNorm => col.norm(),
        };
        if scale == 0.0 {
            return Err(Error::DegenerateColumn {
                index: j,
                reason: "constant column cannot be standardized",
            });
        }
        col.iter_mut().for_each(|v| *v /= scale);
    }
    Ok(out)
}
