//! Dense complex matrices with tolerance-aware rank, inverse, characteristic
//! polynomial and generalized eigenspaces.
//!
//! Storage is row-major. Decompositions (SVD, LU, eigenvalues) are delegated to
//! `faer`; everything above them (thresholds, kernels, clustering,
//! Faddeev–LeVerrier) lives here.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Default relative tolerance for verification residuals.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative singular-value threshold used by every inverting operation.
/// Inputs with condition number above `1 / INVERSE_TOL` are rejected.
pub const INVERSE_TOL: f64 = 1e-12;

/// Eigenvalues closer than this (relative) are merged into one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Double-double complex scalar used by `char_poly`.
type Wide = num_complex::Complex<TwoFloat>;

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

/// A dense complex matrix. Zero-width matrices are allowed so that empty
/// subspace bases have a uniform representation.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                k / cols.max(1),
                k % cols.max(1)
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::from_vec(r, cols, rows.concat())
    }

    /// Convenience constructor for real matrices; panics on ragged input.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == cols), "ragged rows");
        Self::from_fn(r, cols, |i, j| cr(rows[i][j]))
    }

    pub fn from_diag(diag: &[Complex]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn column_vector(v: &[Complex]) -> Self {
        CMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<Complex> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> CMatrix {
        Self::from_fn(self.rows, 1, |i, _| self[(i, j)])
    }

    pub fn diagonal(&self) -> Vec<Complex> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Copy of the block starting at `(r0, c0)` with the given size.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Columns `idx` stacked side by side.
    pub fn select_columns(&self, idx: &[usize]) -> CMatrix {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn hstack(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    pub fn vstack(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        CMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn adjoint(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, z: Complex) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * z).collect() }
    }

    /// `self - z I`.
    pub fn shift(&self, z: Complex) -> CMatrix {
        assert!(self.is_square());
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] -= z;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest modulus among entries strictly below the diagonal.
    pub fn strictly_lower_max(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                worst = worst.max(self[(i, j)].norm());
            }
        }
        worst
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        self.strictly_lower_max() <= tol * self.frobenius_norm().max(1.0)
    }

    pub fn pow(&self, k: usize) -> CMatrix {
        assert!(self.is_square());
        let mut acc = CMatrix::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn determinant(&self) -> Complex {
        assert!(self.is_square());
        if self.rows == 0 {
            return cr(1.0);
        }
        self.to_faer().determinant()
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }

    pub(crate) fn from_faer(m: &Mat<Complex>) -> CMatrix {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        svd(self).s
    }

    /// Ratio of largest to smallest singular value (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        let s = self.singular_values();
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }

    pub fn approx_eq(&self, other: &CMatrix, tol: f64) -> bool {
        self.shape() == other.shape() && (self - other).max_abs() <= tol
    }
}

fn binop(a: &CMatrix, b: &CMatrix, op: impl Fn(Complex, Complex) -> Complex, name: &str) -> CMatrix {
    assert_eq!(a.shape(), b.shape(), "{name}: shape mismatch {:?} vs {:?}", a.shape(), b.shape());
    CMatrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| op(x, y)).collect(),
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        binop(self, rhs, |x, y| x + y, "add")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        binop(self, rhs, |x, y| x - y, "sub")
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(cr(-1.0))
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "mul: {:?} x {:?}", self.shape(), rhs.shape());
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex::new(0.0, 0.0) {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: CMatrix) -> CMatrix {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: &CMatrix) -> CMatrix {
                (&self).$f(rhs)
            }
        }
        impl $tr<CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: CMatrix) -> CMatrix {
                self.$f(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Full singular value decomposition `m = U diag(s) V^H` with `V` square
/// (`cols x cols`) so that trailing columns span the kernel.
pub(crate) struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub(crate) fn svd(m: &CMatrix) -> Svd {
    let (r, cols) = m.shape();
    if r == 0 || cols == 0 {
        return Svd { u: CMatrix::identity(r), s: Vec::new(), v: CMatrix::identity(cols) };
    }
    let dec = m.to_faer().svd().expect("svd did not converge");
    let (u, sv, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let s_len = r.min(cols);
    let mut order: Vec<usize> = (0..s_len).collect();
    order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));
    let s: Vec<f64> = order.iter().map(|&k| sv[k].re).collect();
    let v_order: Vec<usize> = order.iter().copied().chain(s_len..cols).collect();
    let u = CMatrix::from_fn(r, s_len, |i, j| u[(i, order[j])]);
    let v = CMatrix::from_fn(cols, cols, |i, j| v[(i, v_order[j])]);
    Svd { u, s, v }
}

/// Inverse together with the 2-norm condition estimate that was checked.
#[derive(Clone, Debug)]
pub struct Inverse {
    pub matrix: CMatrix,
    pub condition: f64,
}

/// Inverts `m`, rejecting it when `sigma_min <= tol * sigma_max`.
pub fn inverse(m: &CMatrix, tol: f64) -> Result<Inverse> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!("inverse of {}x{} matrix", m.rows, m.cols)));
    }
    if m.rows == 0 {
        return Ok(Inverse { matrix: m.clone(), condition: 1.0 });
    }
    let s = m.singular_values();
    let (largest, smallest) = (s[0], s[s.len() - 1]);
    if largest == 0.0 || smallest <= tol * largest {
        return Err(Error::SingularMatrix { smallest, largest });
    }
    let inv = m.to_faer().partial_piv_lu().inverse();
    Ok(Inverse { matrix: CMatrix::from_faer(&inv), condition: largest / smallest })
}

/// Shorthand for `inverse(m, INVERSE_TOL)` returning only the matrix.
pub fn inv(m: &CMatrix) -> Result<CMatrix> {
    inverse(m, INVERSE_TOL).map(|i| i.matrix)
}

/// Whether `m` passes the condition guard used for invertibility checks.
pub fn is_invertible(m: &CMatrix) -> bool {
    let s = m.singular_values();
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) => hi > 0.0 && lo > INVERSE_TOL * hi,
        _ => true,
    }
}

#[derive(Clone, Debug)]
pub struct RankKernel {
    pub rank: usize,
    /// Orthonormal kernel basis, one column per vector (`cols x (cols - rank)`).
    pub kernel: CMatrix,
    pub singular_values: Vec<f64>,
}

impl RankKernel {
    pub fn kernel_vectors(&self) -> Vec<CMatrix> {
        (0..self.kernel.cols()).map(|j| self.kernel.column(j)).collect()
    }
}

/// Numerical rank (singular values above `tol * sigma_max`) and an
/// orthonormal kernel basis.
pub fn rank_kernel(m: &CMatrix, tol: f64) -> RankKernel {
    let dec = svd(m);
    let largest = dec.s.first().copied().unwrap_or(0.0);
    let rank = if largest == 0.0 { 0 } else { dec.s.iter().filter(|&&x| x > tol * largest).count() };
    let idx: Vec<usize> = (rank..m.cols()).collect();
    RankKernel { rank, kernel: dec.v.select_columns(&idx), singular_values: dec.s }
}

pub fn rank(m: &CMatrix, tol: f64) -> usize {
    rank_kernel(m, tol).rank
}

/// Orthonormal basis of the column space, using the same threshold as `rank_kernel`.
pub fn range_basis(m: &CMatrix, tol: f64) -> CMatrix {
    let dec = svd(m);
    let largest = dec.s.first().copied().unwrap_or(0.0);
    let rank = if largest == 0.0 { 0 } else { dec.s.iter().filter(|&&x| x > tol * largest).count() };
    let idx: Vec<usize> = (0..rank).collect();
    dec.u.select_columns(&idx)
}

/// Coefficients `c_1..c_n` of `det(tI - m) = t^n + c_1 t^(n-1) + ... + c_n`
/// via the Faddeev–LeVerrier recurrence, carried out in double-double
/// arithmetic and rounded at the end.
pub fn char_poly(m: &CMatrix) -> Vec<Complex> {
    assert!(m.is_square(), "char_poly of non-square matrix");
    let n = m.rows();
    let zero = Wide::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
    let a: Vec<Wide> = m.data.iter().map(|z| Wide::new(TwoFloat::from(z.re), TwoFloat::from(z.im))).collect();
    let matmul = |x: &[Wide], y: &[Wide]| -> Vec<Wide> {
        let mut out = vec![zero; n * n];
        for i in 0..n {
            for k in 0..n {
                let xik = x[i * n + k];
                for j in 0..n {
                    out[i * n + j] += xik * y[k * n + j];
                }
            }
        }
        out
    };
    let mut coeffs = Vec::with_capacity(n);
    let mut mk = vec![zero; n * n];
    let mut prev = Wide::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    for k in 1..=n {
        // M_k = m M_{k-1} + c_{k-1} I
        let mut next = matmul(&a, &mk);
        for i in 0..n {
            next[i * n + i] += prev;
        }
        let prod = matmul(&a, &next);
        let trace = (0..n).fold(zero, |acc, i| acc + prod[i * n + i]);
        let ck = -trace / TwoFloat::from(k as f64);
        coeffs.push(c(f64::from(ck.re), f64::from(ck.im)));
        mk = next;
        prev = ck;
    }
    coeffs
}

/// Eigenvalues, in no particular order.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex> {
    assert!(m.is_square());
    if m.rows() == 0 {
        return Vec::new();
    }
    m.to_faer().eigenvalues().expect("eigenvalues did not converge")
}

fn same_cluster(a: Complex, b: Complex, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1.0)
}

/// An eigenvalue cluster: centroid and algebraic multiplicity.
#[derive(Clone, Copy, Debug)]
pub struct Cluster {
    pub center: Complex,
    pub multiplicity: usize,
}

/// Groups eigenvalues by single linkage at relative distance `rel`.
pub fn eigenvalue_clusters(m: &CMatrix, rel: f64) -> Vec<Cluster> {
    let eig = eigenvalues(m);
    let n = eig.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if same_cluster(eig[i], eig[j], rel) {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<(usize, Complex, usize)> = Vec::new();
    for i in 0..n {
        let root = find(&mut label, i);
        match clusters.iter_mut().find(|(r, _, _)| *r == root) {
            Some(entry) => {
                entry.1 += eig[i];
                entry.2 += 1;
            }
            None => clusters.push((root, eig[i], 1)),
        }
    }
    clusters
        .into_iter()
        .map(|(_, sum, k)| Cluster { center: sum / (k as f64), multiplicity: k })
        .collect()
}

/// Orthonormal basis (as columns) of the generalized eigenspace of `m` at `tau`.
///
/// The eigenvalue cluster of `tau` fixes the power `a` (its algebraic
/// multiplicity). The basis is the kernel of `(m - center I)^a`, where
/// `center` is the cluster centroid, with singular values below
/// `tol * ‖m - center I‖₂^a` counted as zero and at most `a` directions kept.
/// When `tau` is not near any eigenvalue the basis is empty.
pub fn generalized_eigenspace(m: &CMatrix, tau: Complex, tol: f64) -> CMatrix {
    assert!(m.is_square(), "generalized_eigenspace of non-square matrix");
    let n = m.rows();
    let eig = eigenvalues(m);
    let members: Vec<Complex> = eig.iter().copied().filter(|&l| same_cluster(l, tau, CLUSTER_TOL)).collect();
    if members.is_empty() {
        return CMatrix::zeros(n, 0);
    }
    let a = members.len();
    let center = members.iter().sum::<Complex>() / (a as f64);
    let shift = m.shift(center);
    // scale by the shift itself: the power is numerically zero when the cluster fills the space
    let scale = shift.singular_values().first().copied().unwrap_or(0.0).powi(a as i32);
    let dec = svd(&shift.pow(a));
    let small = dec.s.iter().filter(|&&s| s <= tol * scale).count();
    let dim = small.min(a);
    let idx: Vec<usize> = (n - dim..n).collect();
    dec.v.select_columns(&idx)
}

/// Orthogonal projector onto the span of orthonormal columns.
pub fn projector(basis: &CMatrix) -> CMatrix {
    basis * &basis.adjoint()
}

/// Minimum-norm least-squares solution of `a x = b` via the SVD.
pub fn lstsq(a: &CMatrix, b: &CMatrix, tol: f64) -> CMatrix {
    assert_eq!(a.rows(), b.rows(), "lstsq row mismatch");
    let dec = svd(a);
    let largest = dec.s.first().copied().unwrap_or(0.0);
    let uh_b = dec.u.adjoint() * b;
    let mut y = CMatrix::zeros(a.cols(), b.cols());
    for (k, &s) in dec.s.iter().enumerate() {
        if largest > 0.0 && s > tol * largest {
            for j in 0..b.cols() {
                y[(k, j)] = uh_b[(k, j)] / s;
            }
        }
    }
    &dec.v * &y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        assert!(a.approx_eq(b, tol), "{a:?}\n!=\n{b:?}");
    }

    #[test]
    fn svd_reconstructs_with_repeated_singular_values() {
        // block-diagonal copies of one unitary-times-scalar block give heavy multiplicities
        let block = CMatrix::from_rows(&[vec![c(0.0, 1.0), cr(1.0)], vec![cr(1.0), c(0.0, 1.0)]]).unwrap();
        let mut m = CMatrix::zeros(12, 6);
        for k in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    m[(2 * k + i, 2 * k + j)] = block[(i, j)];
                    m[(6 + 2 * k + i, 2 * k + j)] = block[(i, j)].conj();
                }
            }
        }
        for a in [m.clone(), m.adjoint()] {
            let dec = svd(&a);
            let s = CMatrix::from_diag(&dec.s.iter().map(|&x| cr(x)).collect::<Vec<_>>());
            let v_thin = dec.v.block(0, 0, a.cols(), dec.s.len());
            assert_close(&(&(&dec.u * &s) * &v_thin.adjoint()), &a, 1e-13);
            assert_close(&(&dec.v.adjoint() * &dec.v), &CMatrix::identity(a.cols()), 1e-13);
        }
    }

    #[test]
    fn inverse_identity_and_diagonal() {
        let id = CMatrix::identity(3);
        assert_close(&inverse(&id, INVERSE_TOL).unwrap().matrix, &id, 1e-15);
        let d = CMatrix::from_diag(&[cr(2.0), cr(0.5)]);
        let di = inverse(&d, INVERSE_TOL).unwrap();
        assert_close(&di.matrix, &CMatrix::from_diag(&[cr(0.5), cr(2.0)]), 1e-15);
        assert!((di.condition - 4.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_jordan_block() {
        let m = CMatrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let mi = inverse(&m, INVERSE_TOL).unwrap().matrix;
        assert_close(&mi, &CMatrix::from_real(&[&[1.0, -1.0], &[0.0, 1.0]]), 1e-14);
        assert_close(&(&m * &mi), &CMatrix::identity(2), 1e-14);
    }

    #[test]
    fn inverse_rejects_singular_and_non_square() {
        let m = CMatrix::from_real(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(inverse(&m, INVERSE_TOL), Err(Error::SingularMatrix { .. })));
        assert!(matches!(inverse(&CMatrix::zeros(2, 3), 1e-9), Err(Error::ShapeMismatch(_))));
        let ill = CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 1e-13]]);
        assert!(inverse(&ill, INVERSE_TOL).is_err());
    }

    #[test]
    fn rank_kernel_examples() {
        let z = rank_kernel(&CMatrix::zeros(2, 2), 1e-9);
        assert_eq!((z.rank, z.kernel.cols()), (0, 2));
        let id = rank_kernel(&CMatrix::identity(2), 1e-9);
        assert_eq!((id.rank, id.kernel.cols()), (2, 0));

        let m = CMatrix::from_real(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let rk = rank_kernel(&m, 1e-9);
        assert_eq!(rk.rank, 1);
        let k = rk.kernel.column(0);
        assert!((&m * &k).frobenius_norm() < 1e-14);
        // kernel is spanned by (2, -1)/sqrt(5), up to a phase
        let expected = CMatrix::column_vector(&[cr(2.0 / 5f64.sqrt()), cr(-1.0 / 5f64.sqrt())]);
        let overlap = (expected.adjoint() * &k)[(0, 0)].norm();
        assert!((overlap - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_kernel_of_wide_matrix() {
        let m = CMatrix::from_real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let rk = rank_kernel(&m, 1e-9);
        assert_eq!(rk.rank, 2);
        assert_eq!(rk.kernel.cols(), 1);
        assert!((rk.kernel[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn char_poly_examples() {
        let cp = char_poly(&CMatrix::identity(2));
        assert!((cp[0] - cr(-2.0)).norm() < 1e-15 && (cp[1] - cr(1.0)).norm() < 1e-15);
        let cp = char_poly(&CMatrix::from_diag(&[cr(2.0), cr(0.5)]));
        assert!((cp[0] - cr(-2.5)).norm() < 1e-15 && (cp[1] - cr(1.0)).norm() < 1e-15);
        let cp = char_poly(&CMatrix::from_real(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        assert!(cp[0].norm() < 1e-15 && (cp[1] - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn char_poly_matches_expanded_product() {
        // (t - 1)(t - 2i)(t + 3) expanded by hand: t^3 + (2 - 2i) t^2 + (-3 - 4i) t + 6i
        let m = CMatrix::from_diag(&[cr(1.0), c(0.0, 2.0), cr(-3.0)]);
        let cp = char_poly(&m);
        let expected = [c(2.0, -2.0), c(-3.0, -4.0), c(0.0, 6.0)];
        for (a, b) in cp.iter().zip(expected) {
            assert!((a - b).norm() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn generalized_eigenspace_examples() {
        assert_eq!(generalized_eigenspace(&CMatrix::identity(2), cr(1.0), 1e-9).cols(), 2);
        let d = CMatrix::from_diag(&[cr(1.0), cr(2.0)]);
        let g = generalized_eigenspace(&d, cr(2.0), 1e-9);
        assert_eq!(g.cols(), 1);
        assert!((g[(1, 0)].norm() - 1.0).abs() < 1e-14);
        let j = CMatrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(generalized_eigenspace(&j, cr(1.0), 1e-9).cols(), 2);
        assert_eq!(generalized_eigenspace(&d, cr(5.0), 1e-9).cols(), 0);
    }

    #[test]
    fn clusters_cover_dimension() {
        let m = CMatrix::from_real(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 3.0], &[0.0, 0.0, -1.0]]);
        let clusters = eigenvalue_clusters(&m, CLUSTER_TOL);
        assert_eq!(clusters.len(), 2);
        let total: usize = clusters.iter().map(|cl| generalized_eigenspace(&m, cl.center, 1e-9).cols()).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn lstsq_recovers_solution() {
        let a = CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 2.0], &[0.0, 0.0]]);
        let b = CMatrix::column_vector(&[cr(3.0), cr(4.0), cr(0.0)]);
        let x = lstsq(&a, &b, 1e-12);
        assert_close(&x, &CMatrix::column_vector(&[cr(3.0), cr(2.0)]), 1e-14);
    }
}
