//! The double `SL(n) × SL(n)` with moment map `(u, v) ↦ (u v u⁻¹, v⁻¹)`,
//! the right `N`-action, the torus projection `ψ`, the multiplicative Springer
//! map and Steinberg-fibre diagnostics.

use crate::cxmat::{char_poly, cr, inv, rank_kernel, CMatrix, Complex};
use crate::error::{Error, Result};

/// Tolerance for `det = 1` on double points and torus levels.
const DET_TOL: f64 = 1e-9;
/// Entries below this count as exact zeros for unitriangularity checks.
const EXACT_TOL: f64 = 1e-12;
/// Singular values between `tol * σ_max` and this ratio make a centralizer
/// dimension indeterminate.
const INDETERMINATE_RATIO: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct DoublePoint {
    u: CMatrix,
    v: CMatrix,
    borel: bool,
}

impl DoublePoint {
    /// A point of the double; `v` may be any element of `SL(n)`.
    pub fn new(u: CMatrix, v: CMatrix) -> Result<Self> {
        Self::build(u, v, false)
    }

    /// A point of `SL(n) × B`; `v` must be upper triangular.
    pub fn borel(u: CMatrix, v: CMatrix) -> Result<Self> {
        Self::build(u, v, true)
    }

    fn build(u: CMatrix, v: CMatrix, borel: bool) -> Result<Self> {
        if !u.is_square() || u.shape() != v.shape() {
            return Err(Error::ShapeMismatch(format!("u {:?}, v {:?}", u.shape(), v.shape())));
        }
        for (name, m) in [("u", &u), ("v", &v)] {
            let det = m.determinant();
            if (det - 1.0).norm() > DET_TOL {
                return Err(Error::InvalidInput(format!("det {name} = {det}, expected 1")));
            }
        }
        if borel && v.strictly_lower_max() > EXACT_TOL * v.frobenius_norm().max(1.0) {
            return Err(Error::NotBorel);
        }
        Ok(DoublePoint { u, v, borel })
    }

    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    pub fn is_borel(&self) -> bool {
        self.borel
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }
}

/// Diagonal torus element with product 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusLevel(Vec<Complex>);

impl TorusLevel {
    pub fn new(lambda: Vec<Complex>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidInput("empty torus level".into()));
        }
        if lambda.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::InvalidInput("torus level entries must be nonzero".into()));
        }
        let prod: Complex = lambda.iter().product();
        if (prod - 1.0).norm() > DET_TOL {
            return Err(Error::InvalidInput(format!("torus level product {prod}, expected 1")));
        }
        Ok(TorusLevel(lambda))
    }

    pub fn ones(n: usize) -> Self {
        TorusLevel(vec![cr(1.0); n])
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_diag(&self.0)
    }
}

/// `(μ_L, μ_R) = (u v u⁻¹, v⁻¹)`.
pub fn double_moment_map(p: &DoublePoint) -> Result<(CMatrix, CMatrix)> {
    let u_inv = inv(&p.u)?;
    Ok((&(&p.u * &p.v) * &u_inv, inv(&p.v)?))
}

fn check_unitriangular(m: &CMatrix) -> Result<()> {
    let diag_ok = m.diagonal().iter().all(|z| (z - 1.0).norm() <= EXACT_TOL);
    if !m.is_square() || !diag_ok || m.strictly_lower_max() > EXACT_TOL {
        return Err(Error::NotUnipotent);
    }
    Ok(())
}

/// Right `N`-action `(u, v) ↦ (u n⁻¹, n v n⁻¹)`.
pub fn n_action(p: &DoublePoint, n_elt: &CMatrix) -> Result<DoublePoint> {
    check_unitriangular(n_elt)?;
    if n_elt.shape() != p.u.shape() {
        return Err(Error::ShapeMismatch(format!("n has shape {:?}", n_elt.shape())));
    }
    let n_inv = inv(n_elt)?;
    let u = &p.u * &n_inv;
    let mut v = &(n_elt * &p.v) * &n_inv;
    if p.borel {
        // conjugation by N keeps v upper triangular with the same diagonal
        for i in 0..v.rows() {
            for j in 0..i {
                v[(i, j)] = cr(0.0);
            }
            v[(i, i)] = p.v[(i, i)];
        }
    }
    Ok(DoublePoint { u, v, borel: p.borel })
}

/// `ψ`: the diagonal of the Borel component.
pub fn psi(p: &DoublePoint) -> Result<TorusLevel> {
    if !p.borel {
        return Err(Error::NotBorel);
    }
    Ok(TorusLevel(p.v.diagonal()))
}

/// Characteristic-polynomial coefficients `c_1, …, c_{n-1}` (the last one is fixed by `det = 1`).
pub fn class_functions(m: &CMatrix) -> Vec<Complex> {
    let mut c = char_poly(m);
    c.pop();
    c
}

/// `max_k |c_k(m) - c_k(diag λ)| / (1 + |c_k(diag λ)|)`.
pub fn steinberg_membership(m: &CMatrix, lambda: &TorusLevel) -> Result<f64> {
    if m.shape() != (lambda.n(), lambda.n()) {
        return Err(Error::ShapeMismatch(format!("matrix {:?} vs level of size {}", m.shape(), lambda.n())));
    }
    let ours = class_functions(m);
    let reference = class_functions(&lambda.to_matrix());
    Ok(ours
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).norm() / (1.0 + b.norm()))
        .fold(0.0, f64::max))
}

/// Membership verdict at tolerance `tol`, with the achieved deviation.
pub fn is_steinberg_member(m: &CMatrix, lambda: &TorusLevel, tol: f64) -> Result<(bool, f64)> {
    let dev = steinberg_membership(m, lambda)?;
    Ok((dev <= tol, dev))
}

/// Multiplicative Springer map `u · (diag(λ) n) · u⁻¹`.
pub fn springer_image(u: &CMatrix, lambda: &TorusLevel, n_part: &CMatrix) -> Result<CMatrix> {
    check_unitriangular(n_part)?;
    if u.shape() != n_part.shape() || u.rows() != lambda.n() {
        return Err(Error::ShapeMismatch("u, λ and n must have matching size".into()));
    }
    let v = &lambda.to_matrix() * n_part;
    Ok(&(u * &v) * &inv(u)?)
}

/// Dimension of the traceless centralizer `{X : tr X = 0, mX = Xm}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentralizerDim {
    pub dim: usize,
    /// Set when a singular value of the commutator map falls between
    /// `tol * σ_max` and `1e-6 * σ_max`.
    pub indeterminate: bool,
}

impl CentralizerDim {
    /// Regular iff the centralizer has the minimal dimension `n - 1`.
    pub fn is_regular(&self, n: usize) -> bool {
        !self.indeterminate && self.dim + 1 == n
    }
}

/// Basis of traceless `n x n` matrices: off-diagonal units, then `E_ii - E_nn`.
fn traceless_basis(n: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(n * n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut e = CMatrix::zeros(n, n);
                e[(i, j)] = cr(1.0);
                basis.push(e);
            }
        }
    }
    for i in 0..n - 1 {
        let mut e = CMatrix::zeros(n, n);
        e[(i, i)] = cr(1.0);
        e[(n - 1, n - 1)] = cr(-1.0);
        basis.push(e);
    }
    basis
}

pub fn centralizer_dim(m: &CMatrix, tol: f64) -> CentralizerDim {
    assert!(m.is_square(), "centralizer of non-square matrix");
    let n = m.rows();
    if n == 1 {
        return CentralizerDim { dim: 0, indeterminate: false };
    }
    let basis = traceless_basis(n);
    let mut op = CMatrix::zeros(n * n, basis.len());
    for (col, x) in basis.iter().enumerate() {
        let comm = &(m * x) - &(x * m);
        for (row, &z) in comm.as_slice().iter().enumerate() {
            op[(row, col)] = z;
        }
    }
    let rk = rank_kernel(&op, tol);
    let hi = rk.singular_values.first().copied().unwrap_or(0.0);
    let indeterminate = hi > 0.0
        && rk.singular_values.iter().any(|&s| s > tol * hi && s <= INDETERMINATE_RATIO * hi);
    CentralizerDim { dim: basis.len() - rk.rank, indeterminate }
}

/// `‖(m - 1)^n‖_F / ‖m - 1‖_F^n`, zero when `m = 1`.
pub fn unipotent_residual(m: &CMatrix) -> f64 {
    assert!(m.is_square());
    let n = m.rows();
    let shifted = m.shift(cr(1.0));
    let base = shifted.frobenius_norm();
    if base == 0.0 {
        return 0.0;
    }
    shifted.pow(n).frobenius_norm() / base.powi(n as i32)
}

/// Companion matrix of `t^n - 1`, rescaled to determinant one.
pub fn companion_unity(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = cr(1.0);
    }
    m[(0, n - 1)] = cr(1.0);
    let det = m.determinant();
    m.scale(crate::normal_form::principal_root(det.inv(), n))
}

/// Largest deviation of `det m` from 1.
pub fn det_defect(m: &CMatrix) -> f64 {
    (m.determinant() - 1.0).norm()
}
