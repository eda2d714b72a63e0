//! Dense complex matrices and Hermitian spectral primitives.
//!
//! Storage is row-major. Products go through `matrixmultiply::zgemm`;
//! Hermitian eigendecompositions through `nalgebra`.

use std::ops::{Index, IndexMut};

use matrixmultiply::{CGemmOption, zgemm};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance on `‖M - M†‖_max` accepted by [`HermitianMatrix::new`].
pub const HERM_TOL: f64 = 1e-10;

/// Default pseudo-inverse cutoff for [`inv_sqrt`], relative to `λ_max`.
pub const INV_SQRT_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::from(diag[i]) } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = Self::zeros(m, n);
        gemm_into(
            m,
            k,
            n,
            &self.data,
            (k as isize, 1),
            &rhs.data,
            (n as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// `self† · rhs` without materializing the adjoint's transpose.
    pub fn adjoint_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "adjoint product of {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let conj = self.conj();
        let (m, k, n) = (self.cols, self.rows, rhs.cols);
        let mut out = Self::zeros(m, n);
        gemm_into(
            m,
            k,
            n,
            &conj.data,
            (1, self.cols as isize),
            &rhs.data,
            (n as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// `self · rhs†`.
    pub fn matmul_adjoint(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::DimensionMismatch(format!(
                "product with adjoint of {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let conj = rhs.conj();
        let (m, k, n) = (self.rows, self.cols, rhs.rows);
        let mut out = Self::zeros(m, n);
        gemm_into(
            m,
            k,
            n,
            &self.data,
            (k as isize, 1),
            &conj.data,
            (1, rhs.cols as isize),
            &mut out.data,
        );
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "matvec length mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self† v`.
    pub fn adjoint_matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.rows, "adjoint matvec length mismatch");
        let mut out = vec![ZERO; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    fn check_same_shape(&self, rhs: &Self) -> Result<()> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(self.zip_map(rhs, |a, b| a + b))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(self.zip_map(rhs, |a, b| a - b))
    }

    fn zip_map(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<f64> {
        if self.data.is_empty() {
            return Ok(0.0);
        }
        let gram = if self.rows <= self.cols {
            self.matmul_adjoint(self)?
        } else {
            self.adjoint_matmul(self)?
        };
        let top = HermitianMatrix::new(gram)?.lambda_max()?;
        Ok(top.max(0.0).sqrt())
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `C = A B` for explicit (row, column) strides of `A` and `B`; `C` is row-major `m x n`.
#[allow(clippy::too_many_arguments)]
fn gemm_into(
    m: usize,
    k: usize,
    n: usize,
    a: &[C64],
    (rsa, csa): (isize, isize),
    b: &[C64],
    (rsb, csb): (isize, isize),
    c: &mut [C64],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(ZERO);
        return;
    }
    assert!(c.len() >= m * n);
    // SAFETY: Complex<f64> is #[repr(C)] { re, im }, layout-identical to [f64; 2].
    // The strides index only within `a` (m x k), `b` (k x n) and `c` (m x n, row-major),
    // which the callers size accordingly, and `c` does not alias the inputs.
    unsafe {
        zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr().cast(),
            rsa,
            csa,
            b.as_ptr().cast(),
            rsb,
            csb,
            [0.0, 0.0],
            c.as_mut_ptr().cast(),
            n as isize,
            1,
        );
    }
}

/// A square matrix equal to its adjoint, stored symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Accepts `m` when `‖m - m†‖_max ≤ HERM_TOL · max(1, ‖m‖_max)` and stores `(m + m†)/2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        if !m.is_finite() {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        let n = m.rows;
        let scale = m.max_abs().max(1.0);
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if defect > HERM_TOL * scale {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian: ‖M - M†‖_max = {defect:e}"
            )));
        }
        let mut m = m;
        for i in 0..n {
            m[(i, i)] = C64::from(m[(i, i)].re);
            for j in i + 1..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Ok(Self(m))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diag(diag))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self(ComplexMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        Ok(Self(self.0.add(&rhs.0)?))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        Ok(Self(self.0.sub(&rhs.0)?))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.scale(C64::from(c)))
    }

    /// `self + c·I`.
    pub fn shift(&self, c: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.rows {
            m[(i, i)] += c;
        }
        Self(m)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut vals: Vec<f64> = self.0.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence("non-finite eigenvalue".into()));
        }
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    pub fn eig(&self) -> Result<Spectrum> {
        let n = self.dim();
        if n == 0 {
            return Ok(Spectrum {
                eigenvalues: Vec::new(),
                eigenvectors: Some(ComplexMatrix::zeros(0, 0)),
            });
        }
        let dec = SymmetricEigen::try_new(self.0.to_nalgebra(), f64::EPSILON, 1000 * n.max(10))
            .ok_or_else(|| {
                Error::NoConvergence(format!("Hermitian eigensolver, dimension {n}"))
            })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| dec.eigenvalues[i]).collect();
        let vecs = ComplexMatrix::from_nalgebra(&dec.eigenvectors);
        let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
        Ok(Spectrum {
            eigenvalues,
            eigenvectors: Some(eigenvectors),
        })
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or(0.0))
    }

    /// `f(M)` through the spectral decomposition.
    pub fn map_spectrum<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        let spec = self.eig()?;
        let mapped: Vec<f64> = spec.eigenvalues.iter().map(|&x| f(x)).collect();
        spec.with_eigenvalues(&mapped)
    }

    pub fn operator_norm(&self) -> Result<f64> {
        let vals = self.eigenvalues()?;
        Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// Ascending eigenvalues, optionally with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<ComplexMatrix>,
}

impl Spectrum {
    /// `V diag(values) V†`.
    pub fn with_eigenvalues(&self, values: &[f64]) -> Result<HermitianMatrix> {
        let v = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("spectrum carries no eigenvectors".into()))?;
        if values.len() != v.cols() {
            return Err(Error::DimensionMismatch("eigenvalue count".into()));
        }
        let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * values[j]);
        HermitianMatrix::new(scaled.matmul_adjoint(v)?)
    }

    pub fn reconstruct(&self) -> Result<HermitianMatrix> {
        self.with_eigenvalues(&self.eigenvalues)
    }
}

pub fn eig_hermitian(m: &HermitianMatrix) -> Result<Spectrum> {
    m.eig()
}

pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    m.operator_norm()
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(m: &HermitianMatrix) -> Result<f64> {
    Ok(m.eigenvalues()?.iter().map(|v| v.abs()).sum())
}

/// Spectral projection of `m` onto `max(λ, 0)`.
pub fn positive_part(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    m.map_spectrum(|x| x.max(0.0))
}

/// Orthogonal projector onto the span of eigenvectors with `λ ≥ 0`.
pub fn nonnegative_projector(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    m.map_spectrum(|x| if x >= 0.0 { 1.0 } else { 0.0 })
}

/// `M^{-1/2}` on eigenvalues above `tol · λ_max`, zero on the rest.
pub fn inv_sqrt(m: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let spec = m.eig()?;
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::Degenerate("no positive eigenvalue to invert".into()));
    }
    let cutoff = tol * top;
    let mapped: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 })
        .collect();
    spec.with_eigenvalues(&mapped)
}

/// Lower-triangular `L` with positive diagonal and `L L† = m`.
pub fn cholesky_lower(m: &HermitianMatrix) -> Result<ComplexMatrix> {
    let n = m.dim();
    let a = m.matrix();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let (head, tail) = l.data.split_at_mut(j * n);
        let row_j = &mut tail[..n];
        // off-diagonal entries of row j use rows < j, already complete
        for k in 0..j {
            let row_k = &head[k * n..k * n + k];
            let dot: C64 = row_j[..k].iter().zip(row_k).map(|(a, b)| a * b.conj()).sum();
            row_j[k] = (a[(j, k)] - dot) / head[k * n + k].re;
        }
        let diag = a[(j, j)].re - row_j[..j].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !(diag > 0.0) {
            return Err(Error::Degenerate(format!(
                "matrix is not positive definite (pivot {j} = {diag:e})"
            )));
        }
        row_j[j] = C64::from(diag.sqrt());
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix with non-zero diagonal.
pub fn lower_triangular_inverse(l: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = l.rows();
    if !l.is_square() {
        return Err(Error::DimensionMismatch("triangular inverse of a non-square matrix".into()));
    }
    // Row i of X = L⁻¹ solves x L = e_i; computed right to left.
    let mut x = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let row = &mut x.data[i * n..(i + 1) * n];
        for j in (0..=i).rev() {
            let mut acc = if i == j { ONE } else { ZERO };
            for k in j + 1..=i {
                acc -= row[k] * l.data[k * n + j];
            }
            let d = l.data[j * n + j];
            if d.norm() == 0.0 {
                return Err(Error::Degenerate("zero on the triangular diagonal".into()));
            }
            row[j] = acc / d;
        }
    }
    Ok(x)
}

/// Largest `|λ|` of a Hermitian operator given only through `apply`,
/// by Lanczos with full reorthogonalization.
pub fn lanczos_max_abs<F>(dim: usize, apply: F, start: &[C64], max_iter: usize, tol: f64) -> Result<f64>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    if start.len() != dim {
        return Err(Error::DimensionMismatch("Lanczos start vector".into()));
    }
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(start);
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("Lanczos start vector is zero".into()));
    }
    let mut basis: Vec<Vec<C64>> = vec![start.iter().map(|z| z / n0).collect()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut previous = f64::NAN;
    let steps = max_iter.min(dim);
    for it in 0..steps {
        let q = &basis[it];
        let mut w = apply(q);
        let alpha: f64 = q.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c: C64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = norm(&w);
        let estimate = tridiagonal_max_abs(&alphas, &betas);
        let converged =
            it >= 8 && (estimate - previous).abs() <= tol * estimate.abs().max(f64::MIN_POSITIVE);
        previous = estimate;
        if converged || beta <= 1e-13 * estimate.abs().max(1.0) || it + 1 == steps {
            return Ok(estimate);
        }
        betas.push(beta);
        basis.push(w.iter().map(|z| z / beta).collect());
    }
    Ok(previous)
}

fn tridiagonal_max_abs(alphas: &[f64], betas: &[f64]) -> f64 {
    let m = alphas.len();
    let t = DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    t.symmetric_eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pseudo_random(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        ComplexMatrix::from_fn(rows, cols, |_, _| c(next(), next()))
    }

    fn naive_matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        let g = pseudo_random(n, n, seed);
        HermitianMatrix::new(g.add(&g.adjoint()).unwrap()).unwrap()
    }

    #[test]
    fn products_match_triple_loop() {
        let a = pseudo_random(5, 7, 1);
        let b = pseudo_random(7, 3, 2);
        let p = a.matmul(&b).unwrap();
        let q = naive_matmul(&a, &b);
        assert!(p.sub(&q).unwrap().max_abs() < 1e-13);
        let d = pseudo_random(5, 4, 3);
        let p = a.adjoint_matmul(&d).unwrap();
        let q = naive_matmul(&a.adjoint(), &d);
        assert!(p.sub(&q).unwrap().max_abs() < 1e-13);
        let e = pseudo_random(6, 7, 4);
        let p = a.matmul_adjoint(&e).unwrap();
        let q = naive_matmul(&a, &e.adjoint());
        assert!(p.sub(&q).unwrap().max_abs() < 1e-13);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn matvec_agrees_with_matmul() {
        let a = pseudo_random(4, 6, 9);
        let v = pseudo_random(6, 1, 10);
        let w = a.matvec(v.as_slice());
        let m = a.matmul(&v).unwrap();
        for (x, y) in w.iter().zip(m.as_slice()) {
            assert!((x - y).norm() < 1e-14);
        }
        let u = pseudo_random(4, 1, 11);
        let w = a.adjoint_matvec(u.as_slice());
        let m = a.adjoint_matmul(&u).unwrap();
        for (x, y) in w.iter().zip(m.as_slice()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn construction_checks() {
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(HermitianMatrix::new(m.clone()).is_err());
        m[(1, 0)] = c(1.0, 1e-13);
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.matrix()[(1, 0)], h.matrix()[(0, 1)].conj());
        assert!(HermitianMatrix::new(ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn eigenvalues_of_small_examples() {
        let v = HermitianMatrix::from_real_diag(&[1.0, 0.0]).eigenvalues().unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
        let v = HermitianMatrix::identity(4).eigenvalues().unwrap();
        assert!(v.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let x = HermitianMatrix::new(ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == j { ZERO } else { ONE }
        }))
        .unwrap();
        let v = x.eigenvalues().unwrap();
        assert!((v[0] + 1.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigendecomposition_reconstructs() {
        for n in [1, 3, 8, 20] {
            let h = random_hermitian(n, n as u64);
            let spec = h.eig().unwrap();
            assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let v = spec.eigenvectors.as_ref().unwrap();
            let gram = v.adjoint_matmul(v).unwrap();
            assert!(gram.sub(&ComplexMatrix::identity(n)).unwrap().max_abs() < 1e-8);
            let r = spec.reconstruct().unwrap();
            let scale = h.operator_norm().unwrap();
            assert!(r.matrix().sub(h.matrix()).unwrap().max_abs() <= 1e-8 * scale);
            let sum: f64 = spec.eigenvalues.iter().sum();
            assert!((sum - h.trace()).abs() <= 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(ComplexMatrix::zeros(3, 3).operator_norm().unwrap(), 0.0);
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(2.0, 0.0);
        assert!((m.operator_norm().unwrap() - 2.0).abs() < 1e-12);
        // a permutation times phases is unitary
        let mut u = ComplexMatrix::zeros(3, 3);
        u[(0, 1)] = c(0.0, 1.0);
        u[(1, 2)] = c(-1.0, 0.0);
        u[(2, 0)] = c(0.6, 0.8);
        assert!((u.operator_norm().unwrap() - 1.0).abs() < 1e-12);
        let r = pseudo_random(3, 5, 3);
        assert!(r.operator_norm().unwrap() <= r.frobenius_norm() + 1e-12);
    }

    #[test]
    fn trace_norm_and_positive_part() {
        let m = HermitianMatrix::from_real_diag(&[1.0, -1.0]);
        assert!((trace_norm(&m).unwrap() - 2.0).abs() < 1e-14);
        let m = HermitianMatrix::from_real_diag(&[3.0, -1.0, 0.0]);
        assert!((trace_norm(&m).unwrap() - 4.0).abs() < 1e-14);
        let p = positive_part(&HermitianMatrix::from_real_diag(&[2.0, -3.0])).unwrap();
        assert!(p.matrix().sub(&ComplexMatrix::from_real_diag(&[2.0, 0.0])).unwrap().max_abs() < 1e-14);
        let h = random_hermitian(6, 77);
        let p = positive_part(&h).unwrap();
        let diff = p.sub(&h).unwrap();
        assert!(diff.lambda_min().unwrap() > -1e-10);
        let tn = trace_norm(&h).unwrap();
        let neg = positive_part(&h.scale(-1.0)).unwrap().trace();
        assert!((tn - (h.trace() + 2.0 * neg)).abs() < 1e-8);
    }

    #[test]
    fn inverse_square_root() {
        let m = inv_sqrt(&HermitianMatrix::identity(3), INV_SQRT_TOL).unwrap();
        assert!(m.matrix().sub(&ComplexMatrix::identity(3)).unwrap().max_abs() < 1e-14);
        let m = inv_sqrt(&HermitianMatrix::from_real_diag(&[4.0, 9.0]), INV_SQRT_TOL).unwrap();
        let want = ComplexMatrix::from_real_diag(&[0.5, 1.0 / 3.0]);
        assert!(m.matrix().sub(&want).unwrap().max_abs() < 1e-14);
        let m = inv_sqrt(&HermitianMatrix::from_real_diag(&[1.0, 0.0]), 1e-12).unwrap();
        let want = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(m.matrix().sub(&want).unwrap().max_abs() < 1e-14);
        assert!(matches!(inv_sqrt(&HermitianMatrix::zeros(2), 1e-12), Err(Error::Degenerate(_))));
        let g = pseudo_random(5, 5, 8);
        let s = HermitianMatrix::new(g.adjoint_matmul(&g).unwrap()).unwrap();
        let r = inv_sqrt(&s, INV_SQRT_TOL).unwrap();
        let p = r.matrix().matmul(s.matrix()).unwrap().matmul(r.matrix()).unwrap();
        assert!(p.sub(&ComplexMatrix::identity(5)).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn cholesky_and_triangular_inverse() {
        let g = pseudo_random(9, 6, 21);
        let s = HermitianMatrix::new(g.adjoint_matmul(&g).unwrap()).unwrap();
        let l = cholesky_lower(&s).unwrap();
        for i in 0..6 {
            assert!(l[(i, i)].re > 0.0 && l[(i, i)].im == 0.0);
            for j in i + 1..6 {
                assert_eq!(l[(i, j)], ZERO);
            }
        }
        let back = l.matmul_adjoint(&l).unwrap();
        assert!(back.sub(s.matrix()).unwrap().max_abs() < 1e-12);
        let li = lower_triangular_inverse(&l).unwrap();
        let id = li.matmul(&l).unwrap();
        assert!(id.sub(&ComplexMatrix::identity(6)).unwrap().max_abs() < 1e-12);
        let bad = HermitianMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(cholesky_lower(&bad).is_err());
    }

    #[test]
    fn lanczos_finds_extreme_modulus() {
        let h = random_hermitian(40, 5);
        let exact = h.operator_norm().unwrap();
        let start: Vec<C64> = (0..40).map(|i| c(1.0 + i as f64 * 0.01, 0.3)).collect();
        let got = lanczos_max_abs(40, |v| h.matrix().matvec(v), &start, 40, 1e-13).unwrap();
        assert!((got - exact).abs() < 1e-9 * exact, "{got} vs {exact}");
    }
}
