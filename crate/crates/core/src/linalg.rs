//! Small dense linear algebra used by the pursuit algorithms.
//!
//! Everything here operates on matrices with at most a few hundred rows and
//! columns. The routines favour backward stability and determinism over speed:
//! least squares goes through Householder QR, Tikhonov systems through
//! Cholesky, and Gram spectra through cyclic Jacobi rotations.

use std::fmt;
use std::ops::{Deref, Index};

use thiserror::Error;

/// Numerical thresholds shared by every routine in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// A QR factorization is rank deficient if some `|R_jj|` falls below
    /// this fraction of the largest `|R_jj|`.
    pub rank_rtol: f64,
    /// Jacobi stops once the off-diagonal Frobenius norm drops below this
    /// fraction of the matrix Frobenius norm.
    pub jacobi_off_rtol: f64,
    pub jacobi_max_sweeps: usize,
    /// `lambda_min <= singular_rtol * lambda_max` counts as singular.
    pub singular_rtol: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    rank_rtol: 1e-10,
    jacobi_off_rtol: 1e-12,
    jacobi_max_sweeps: 100,
    singular_rtol: 1e-14,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is rank deficient: |R[{index},{index}]| = {diag:e} is below the rank threshold {threshold:e}")]
    RankDeficient { index: usize, diag: f64, threshold: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is numerically singular (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e})")]
    SingularMatrix { lambda_min: f64, lambda_max: f64 },
    #[error("non-finite entry encountered")]
    NonFinite,
    #[error("regularization parameter must be positive and finite, got {0}")]
    InvalidRegularization(f64),
    #[error("Jacobi eigenvalue iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn mismatch(msg: impl Into<String>) -> LinalgError {
    LinalgError::DimensionMismatch(msg.into())
}

/// Dense row-major matrix of finite `f64` values.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(mismatch(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(mismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(mismatch("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix from a closure `f(row, col)`. Panics on non-finite output.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j).powi(2)).sum::<f64>().sqrt()
    }

    /// Submatrix `A_S` made of the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() {
            return Err(mismatch("empty column selection"));
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(mismatch(format!("column {bad} out of range for {} columns", self.cols)));
        }
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(Self { rows: self.rows, cols: cols.len(), data })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Scales every column to unit Euclidean norm. Zero columns are left untouched.
    pub fn normalize_columns(&mut self) {
        for j in 0..self.cols {
            let norm = self.column_norm(j);
            if norm > 0.0 {
                for i in 0..self.rows {
                    self.data[i * self.cols + j] /= norm;
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.cols {
            return Err(mismatch(format!(
                "matvec: {}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(DenseVector((0..self.rows).map(|i| dot_unchecked(self.row(i), x)).collect()))
    }

    /// `Aᵀ y`. For a residual `r` this is the observation vector.
    pub fn matvec_transpose(&self, y: &[f64]) -> Result<DenseVector> {
        if y.len() != self.rows {
            return Err(mismatch(format!(
                "matvec_transpose: {}x{} matrix transposed times vector of length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Ok(DenseVector(out))
    }

    /// `AᵀA`, symmetric by construction.
    pub fn gram(&self) -> Self {
        let s = self.cols;
        let mut g = vec![0.0; s * s];
        for i in 0..self.rows {
            let row = self.row(i);
            for p in 0..s {
                let rp = row[p];
                if rp == 0.0 {
                    continue;
                }
                for q in p..s {
                    g[p * s + q] += rp * row[q];
                }
            }
        }
        for p in 0..s {
            for q in 0..p {
                g[p * s + q] = g[q * s + p];
            }
        }
        Self { rows: s, cols: s, data: g }
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Dense vector of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn norm2(&self) -> f64 {
        vec_norm2(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Self {
        v.0
    }
}

#[inline]
fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(mismatch(format!("dot: lengths {} and {}", a.len(), b.len())));
    }
    Ok(dot_unchecked(a, b))
}

pub fn vec_norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `a - b`, elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Result<DenseVector> {
    if a.len() != b.len() {
        return Err(mismatch(format!("sub: lengths {} and {}", a.len(), b.len())));
    }
    Ok(DenseVector(a.iter().zip(b).map(|(x, y)| x - y).collect()))
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.frobenius_norm()
}

/// Minimizer of `‖y − A z‖₂` for a full-column-rank `A`, via Householder QR.
pub fn least_squares(a: &DenseMatrix, y: &[f64]) -> Result<DenseVector> {
    let (m, s) = a.shape();
    if y.len() != m {
        return Err(mismatch(format!("least_squares: {m}x{s} matrix, rhs of length {}", y.len())));
    }
    if s > m {
        return Err(mismatch(format!("least_squares: underdetermined {m}x{s} system")));
    }

    // Column-major working copy; R ends up in the upper triangle.
    let mut qr: Vec<f64> = (0..s).flat_map(|j| (0..m).map(move |i| (i, j))).map(|(i, j)| a.get(i, j)).collect();
    let mut rhs = y.to_vec();
    let mut diag = vec![0.0; s];

    for k in 0..s {
        let col = &mut qr[k * m..(k + 1) * m];
        let norm = vec_norm2(&col[k..]);
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        // v = x - alpha e_1, stored in place of the column below the diagonal
        col[k] -= alpha;
        let vnorm_sq: f64 = col[k..].iter().map(|v| v * v).sum();
        diag[k] = alpha;
        if vnorm_sq == 0.0 {
            continue;
        }
        let v: Vec<f64> = col[k..].to_vec();
        for j in (k + 1)..s {
            let cj = &mut qr[j * m + k..(j + 1) * m];
            let f = 2.0 * dot_unchecked(&v, cj) / vnorm_sq;
            cj.iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
        }
        let f = 2.0 * dot_unchecked(&v, &rhs[k..]) / vnorm_sq;
        rhs[k..].iter_mut().zip(&v).for_each(|(r, vi)| *r -= f * vi);
    }

    let max_diag = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    let threshold = TOLERANCES.rank_rtol * max_diag;
    for (index, d) in diag.iter().enumerate() {
        if max_diag == 0.0 || d.abs() < threshold {
            return Err(LinalgError::RankDeficient { index, diag: d.abs(), threshold });
        }
    }

    let mut z = vec![0.0; s];
    for i in (0..s).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..s {
            acc -= qr[j * m + i] * z[j];
        }
        z[i] = acc / diag[i];
    }
    DenseVector::new(z)
}

/// Solves `G x = b` for symmetric positive definite `G` by Cholesky.
pub fn cholesky_solve(g: &DenseMatrix, b: &[f64]) -> Result<DenseVector> {
    let n = g.rows();
    if g.cols() != n || b.len() != n {
        return Err(mismatch(format!(
            "cholesky_solve: {}x{} matrix, rhs of length {}",
            g.rows(),
            g.cols(),
            b.len()
        )));
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = g.get(j, j);
        for p in 0..j {
            d -= l[j * n + p] * l[j * n + p];
        }
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut acc = g.get(i, j);
            for p in 0..j {
                acc -= l[i * n + p] * l[j * n + p];
            }
            l[i * n + j] = acc / d;
        }
    }
    // L w = b, then Lᵀ x = w
    let mut w = b.to_vec();
    for i in 0..n {
        for p in 0..i {
            w[i] -= l[i * n + p] * w[p];
        }
        w[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for p in (i + 1)..n {
            w[i] -= l[p * n + i] * w[p];
        }
        w[i] /= l[i * n + i];
    }
    DenseVector::new(w)
}

/// Tikhonov-regularized estimate `(AᵀA + αI)⁻¹ Aᵀ y`.
pub fn solve_tikhonov(a: &DenseMatrix, y: &[f64], alpha: f64) -> Result<DenseVector> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(LinalgError::InvalidRegularization(alpha));
    }
    let rhs = a.matvec_transpose(y)?;
    let mut g = a.gram();
    let n = g.rows();
    for i in 0..n {
        g.data[i * n + i] += alpha;
    }
    cholesky_solve(&g, &rhs)
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(g: &DenseMatrix) -> Result<Vec<f64>> {
    let n = g.rows();
    if g.cols() != n {
        return Err(mismatch(format!("symmetric_eigenvalues: {}x{} is not square", g.rows(), g.cols())));
    }
    let mut a = g.data.clone();
    let scale = g.frobenius_norm();
    let threshold = TOLERANCES.jacobi_off_rtol * scale;
    let off_norm = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                acc += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        acc.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == TOLERANCES.jacobi_max_sweeps {
            return Err(LinalgError::NoConvergence(sweeps));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= threshold;
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Smallest and largest eigenvalue of `AᵀA`, i.e. the squared extreme
/// singular values of `A`.
pub fn gram_eig_extremes(a: &DenseMatrix) -> Result<(f64, f64)> {
    let eig = symmetric_eigenvalues(&a.gram())?;
    Ok((eig[0], eig[eig.len() - 1]))
}

/// `σ_max(A) / σ_min(A)`.
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    let (lambda_min, lambda_max) = gram_eig_extremes(a)?;
    if lambda_max <= 0.0 || lambda_min <= TOLERANCES.singular_rtol * lambda_max {
        return Err(LinalgError::SingularMatrix { lambda_min, lambda_max });
    }
    Ok((lambda_max / lambda_min).sqrt())
}
