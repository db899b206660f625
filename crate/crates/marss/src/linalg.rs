//! Dense matrix helpers: column-major vec/unvec, Kronecker products,
//! masked inverses and SVD rank.
//!
//! Everything here is a pure function of its inputs.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative tolerance for [`svd_rank`].
pub const RANK_TOL: f64 = 1e-10;

/// Diagonal entries at or below this are treated as structural zeros.
pub const ZERO_TOL: f64 = 1e-12;

/// Relative reciprocal condition number below which a block counts as singular.
const SINGULAR_RCOND: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("invalid mask: {0}")]
    Mask(String),
}

/// Column-stacking of `m`.
pub fn vec(m: &Mat) -> Vector {
    // nalgebra storage is already column-major.
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Result<Mat, LinalgError> {
    if v.len() != rows * cols {
        return Err(LinalgError::Dimension(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Mat::from_column_slice(rows, cols, v.as_slice()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Ordered selection of rows out of an `n`-dimensional space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSelector {
    n: usize,
    kept: Vec<usize>,
}

impl MaskSelector {
    pub fn new(n: usize, kept: Vec<usize>) -> Result<Self, LinalgError> {
        if kept.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LinalgError::Mask("indices must be strictly increasing".into()));
        }
        if kept.last().is_some_and(|&k| k >= n) {
            return Err(LinalgError::Mask(format!("index out of range for n = {n}")));
        }
        Ok(Self { n, kept })
    }

    pub fn from_bools(flags: &[bool]) -> Self {
        let kept = flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect();
        Self { n: flags.len(), kept }
    }

    pub fn all(n: usize) -> Self {
        Self { n, kept: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.kept.binary_search(&i).is_ok()
    }

    /// The complementary selector.
    pub fn complement(&self) -> Self {
        let kept = (0..self.n).filter(|i| !self.contains(*i)).collect();
        Self { n: self.n, kept }
    }

    /// The `p × n` extraction matrix Ω.
    pub fn matrix(&self) -> Mat {
        let mut om = Mat::zeros(self.kept.len(), self.n);
        for (r, &c) in self.kept.iter().enumerate() {
            om[(r, c)] = 1.0;
        }
        om
    }

    /// Diagonal `n × n` indicator of the kept rows.
    pub fn indicator(&self) -> Mat {
        let mut d = Mat::zeros(self.n, self.n);
        for &i in &self.kept {
            d[(i, i)] = 1.0;
        }
        d
    }

    /// Square sub-block `Ω M Ωᵀ`.
    pub fn sub_square(&self, m: &Mat) -> Mat {
        let k = self.kept.len();
        Mat::from_fn(k, k, |r, c| m[(self.kept[r], self.kept[c])])
    }

    /// Sub-vector `Ω v`.
    pub fn sub_vector(&self, v: &Vector) -> Vector {
        Vector::from_iterator(self.kept.len(), self.kept.iter().map(|&i| v[i]))
    }
}

/// Inverse of a square matrix, refusing numerically singular input.
pub fn checked_inverse(m: &Mat, what: &str) -> Result<Mat, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::Dimension(format!("{what}: matrix is not square")));
    }
    if m.nrows() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::Singular(format!("{what}: non-finite entries")));
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if max <= 0.0 || min <= max * SINGULAR_RCOND {
        return Err(LinalgError::Singular(format!(
            "{what}: smallest singular value {min:e} vs largest {max:e}"
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| LinalgError::Singular(what.to_string()))
}

/// `Ωᵀ (Ω M Ωᵀ)⁻¹ Ω`: the inverse of the kept block, padded with zeros.
pub fn masked_inverse(m: &Mat, keep: &MaskSelector) -> Result<Mat, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n || keep.n() != n {
        return Err(LinalgError::Dimension(format!(
            "masked_inverse: matrix {}x{} with mask over {}",
            m.nrows(),
            m.ncols(),
            keep.n()
        )));
    }
    let mut out = Mat::zeros(n, n);
    if keep.is_empty() {
        return Ok(out);
    }
    let inv = checked_inverse(&keep.sub_square(m), "masked_inverse block")?;
    for (r, &i) in keep.kept().iter().enumerate() {
        for (c, &j) in keep.kept().iter().enumerate() {
            out[(i, j)] = inv[(r, c)];
        }
    }
    Ok(out)
}

/// Numerical rank: singular values above `tol · σ_max`.
pub fn svd_rank(m: &Mat, tol: f64) -> (usize, Vector) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, Vector::zeros(0));
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let rank = if max <= 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tol * max).count()
    };
    (rank, sv)
}

/// Moore-Penrose pseudo-inverse with the default rank tolerance.
pub fn pinv(m: &Mat) -> Mat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Mat::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.max();
    svd.pseudo_inverse(max * RANK_TOL)
        .unwrap_or_else(|_| Mat::zeros(m.ncols(), m.nrows()))
}

/// Log-determinant of a symmetric positive definite matrix.
pub fn logdet_spd(m: &Mat, what: &str) -> Result<f64, LinalgError> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| LinalgError::Singular(format!("{what}: not positive definite")))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Square root factor `L` with `L Lᵀ = m` for a symmetric PSD matrix.
///
/// Eigenvalues below `-floor` are rejected; small negative ones are clipped.
pub fn psd_sqrt(m: &Mat, floor: f64, what: &str) -> Result<Mat, LinalgError> {
    if m.nrows() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -floor) {
        return Err(LinalgError::Singular(format!(
            "{what}: not positive semi-definite (eigenvalue {bad:e})"
        )));
    }
    let mut l = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    Ok(l)
}

/// Smallest eigenvalue of the symmetric part of `m` (0 for an empty matrix).
pub fn min_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetrize(m).symmetric_eigen().eigenvalues.min()
}

/// Zero rows and columns whose diagonal is at or below [`ZERO_TOL`].
pub fn zero_null_rows(m: &mut Mat) {
    let n = m.nrows();
    for i in 0..n {
        if m[(i, i)] <= ZERO_TOL {
            m.row_mut(i).fill(0.0);
            m.column_mut(i).fill(0.0);
        }
    }
}

/// Indices `i` where row `i` of `m` is entirely zero.
pub fn zero_rows(m: &Mat) -> Vec<bool> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().all(|&x| x == 0.0))
        .collect()
}
