//! Borel normal form for full-flag quivers with surjective β, reconstruction
//! from `Y ∈ B_1`, the degree-`n` cover `ρ: B → B_1`, and lifted scalars.

use crate::cxmat::{self, cr, inv, rank_kernel, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::quiver::{
    act_gauge, max_relative_residual, stability_report, DimensionVector, GaugeElement, GaugeMode, Quiver,
    ScalarChain,
};

/// Strictly-lower entries above this (relative to the norm) disqualify a Borel element.
const LOWER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BorelVariant {
    /// Upper triangular with determinant 1.
    B,
    /// Upper triangular with leading diagonal entry 1.
    B1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BorelElement {
    m: CMatrix,
    variant: BorelVariant,
}

fn check_triangular(m: &CMatrix) -> Result<()> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::ShapeMismatch(format!("Borel element must be square, got {:?}", m.shape())));
    }
    if m.strictly_lower_max() > LOWER_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::NotBorel);
    }
    if let Some(index) = m.diagonal().iter().position(|z| z.norm() == 0.0) {
        return Err(Error::ZeroDiagonal { index });
    }
    Ok(())
}

/// Zeroes the strictly-lower part.
fn upper_part(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.rows(), m.cols(), |i, j| if i > j { cr(0.0) } else { m[(i, j)] })
}

impl BorelElement {
    /// Element of `B`: upper triangular, `det = 1` within `1e-9`.
    pub fn b(m: CMatrix) -> Result<Self> {
        check_triangular(&m)?;
        let m = upper_part(&m);
        let det: Complex = m.diagonal().iter().product();
        if (det - 1.0).norm() > cxmat::DEFAULT_TOL {
            return Err(Error::InvalidInput(format!("determinant {det} is not 1")));
        }
        Ok(BorelElement { m, variant: BorelVariant::B })
    }

    /// Element of `B_1`: upper triangular with leading entry 1.
    pub fn b1(m: CMatrix) -> Result<Self> {
        check_triangular(&m).map_err(|e| match e {
            Error::NotBorel => Error::NotUnitriangularLeading,
            other => other,
        })?;
        if (m[(0, 0)] - 1.0).norm() > LOWER_TOL {
            return Err(Error::NotUnitriangularLeading);
        }
        let mut m = upper_part(&m);
        m[(0, 0)] = cr(1.0);
        Ok(BorelElement { m, variant: BorelVariant::B1 })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn variant(&self) -> BorelVariant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn determinant(&self) -> Complex {
        self.m.diagonal().iter().product()
    }
}

/// Puts every `β_i` into the form `(0 I)` using `∏ SL(i) × SL(n)`.
///
/// Works from the top level down; the factor `h` that standardizes `β_k` is
/// applied at node `k + 1` and, block-diagonally as `diag(1, …, 1, h)`, at
/// every node above, which leaves the already standard `β`s untouched.
pub fn reduce_to_standard(quiver: &Quiver, tol: f64) -> Result<(GaugeElement, Quiver)> {
    let dims = quiver.dims().clone();
    if !dims.is_full_flag() {
        return Err(Error::InvalidQuiver("normal form needs a full flag".into()));
    }
    let report = stability_report(quiver, tol);
    if let Some(level) = report.levels.iter().position(|l| !l.beta_surjective) {
        return Err(Error::NotSurjective { level: level + 1 });
    }
    let n = dims.top();
    let mut cumulative = GaugeElement::identity(&dims);
    let mut current = quiver.clone();
    for k in (0..current.levels()).rev() {
        let beta = &current.betas()[k];
        let size = k + 2;
        let kernel = rank_kernel(beta, tol).kernel;
        if kernel.cols() != 1 {
            return Err(Error::NotSurjective { level: k + 1 });
        }
        // first row conj(kernel)^T is orthogonal to the rows of β, so h is invertible
        let first = kernel.column(0).adjoint();
        let mut h = first.vstack(beta);
        let det = h.determinant();
        if !(det.norm() > cxmat::INVERSE_TOL * h.frobenius_norm().powi(size as i32)) {
            return Err(Error::DeterminantFixupFailed { level: k + 1 });
        }
        // (0 I) ignores the first row, so rescaling it fixes det h = 1
        for j in 0..size {
            h[(0, j)] /= det;
        }
        let factors: Vec<CMatrix> = (0..=n - 1)
            .map(|node| {
                let d = node + 1;
                if d < size {
                    CMatrix::identity(d)
                } else {
                    let pad = d - size;
                    CMatrix::from_fn(d, d, |i, j| {
                        if i < pad || j < pad {
                            if i == j {
                                cr(1.0)
                            } else {
                                cr(0.0)
                            }
                        } else {
                            h[(i - pad, j - pad)]
                        }
                    })
                }
            })
            .collect();
        let step = GaugeElement::new(factors, vec![GaugeMode::SpecialLinear; n])
            .map_err(|_| Error::DeterminantFixupFailed { level: k + 1 })?;
        current = act_gauge(&current, &step, None)?;
        cumulative = step.compose(&cumulative);
    }
    // β's are standard up to roundoff; store the exact pattern
    let betas = (0..current.levels()).map(|k| standard_beta(k + 1)).collect();
    let reduced = Quiver::with_shapes(dims, current.alphas().to_vec(), betas)?;
    Ok((cumulative, reduced))
}

/// `(0 I_m)` of shape `m x (m + 1)`.
pub fn standard_beta(m: usize) -> CMatrix {
    CMatrix::from_fn(m, m + 1, |i, j| if j == i + 1 { cr(1.0) } else { cr(0.0) })
}

/// Rebuilds the standard-form quiver from `Y ∈ B_1`: `β_i = (0 I)`, `α_{n-1}`
/// is `Y - 1` without its first column, and each lower level comes from the
/// lower-right block rescaled by its leading entry `q_k`.
pub fn reconstruct_from_borel(y: &BorelElement, tol: f64) -> Result<(Quiver, ScalarChain)> {
    if y.variant != BorelVariant::B1 {
        return Err(Error::NotUnitriangularLeading);
    }
    let n = y.n();
    let mut alphas = vec![CMatrix::zeros(0, 0); n - 1];
    let mut q = vec![cr(1.0); n - 1];
    let mut current = y.m.clone();
    for size in (2..=n).rev() {
        let level = size - 2;
        let shifted = current.shift(cr(1.0));
        alphas[level] = shifted.block(0, 1, size, size - 1);
        let block = current.block(1, 1, size - 1, size - 1);
        let lead = block[(0, 0)];
        if lead.norm() == 0.0 {
            return Err(Error::ZeroDiagonal { index: n - size + 1 });
        }
        q[level] = lead;
        current = block.scale(lead.inv());
        current[(0, 0)] = cr(1.0);
    }
    let betas = (0..n - 1).map(|k| standard_beta(k + 1)).collect();
    let quiver = Quiver::new(DimensionVector::full_flag(n), alphas, betas)?;
    let chain = ScalarChain::new(q)?;
    let worst = max_relative_residual(&quiver, &chain)?;
    if !(worst <= tol) {
        return Err(Error::NotASolution { residual: worst, tolerance: tol });
    }
    Ok((quiver, chain))
}

/// Principal `n`-th root, treating a negative-zero imaginary part as `+0`.
pub fn principal_root(z: Complex, n: usize) -> Complex {
    let arg = (z.im + 0.0).atan2(z.re);
    Complex::from_polar(z.norm().powf(1.0 / n as f64), arg / n as f64)
}

/// Image of `ρ` with the accompanying consistency check.
#[derive(Clone, Debug)]
pub struct RhoImage {
    pub y: BorelElement,
    pub z1: Complex,
    /// `|z_1^n det ρ(b) - 1|`.
    pub det_residual: f64,
}

/// `ρ(b) = b / b_11`.
pub fn cover_rho(b: &BorelElement) -> Result<RhoImage> {
    let z1 = b.m[(0, 0)];
    if z1.norm() == 0.0 {
        return Err(Error::ZeroDiagonal { index: 0 });
    }
    let mut m = b.m.scale(z1.inv());
    m[(0, 0)] = cr(1.0);
    let y = BorelElement { m, variant: BorelVariant::B1 };
    let det_residual = (z1.powu(b.n() as u32) * y.determinant() - 1.0).norm();
    Ok(RhoImage { y, z1, det_residual })
}

#[derive(Clone, Debug)]
pub struct Lift {
    pub b: BorelElement,
    pub z1: Complex,
    /// `|det b - 1|`.
    pub det_residual: f64,
}

/// The `n` preimages `z_1 Y` of `Y` under `ρ`, with `z_1` running over the
/// `n`-th roots of `(det Y)^{-1}` counterclockwise from the principal root.
pub fn cover_lifts(y: &BorelElement) -> Result<Vec<Lift>> {
    if y.variant != BorelVariant::B1 {
        return Err(Error::NotUnitriangularLeading);
    }
    let n = y.n();
    let det = y.determinant();
    if det.norm() == 0.0 {
        return Err(Error::ZeroDiagonal { index: 0 });
    }
    let principal = principal_root(det.inv(), n);
    Ok((0..n)
        .map(|k| {
            let z1 = principal * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
            let m = y.m.scale(z1);
            let b = BorelElement { m, variant: BorelVariant::B };
            let det_residual = (b.determinant() - 1.0).norm();
            Lift { b, z1, det_residual }
        })
        .collect())
}

/// Solves `q_{i+1} = q̃_{i+1} / q̃_i` with `q̃_0 ⋯ q̃_{r-1} = 1`; the `r`
/// solutions differ by `r`-th roots of unity and `root_index` picks one,
/// counting counterclockwise from the principal root.
pub fn tilde_scalars(s: &ScalarChain, root_index: usize) -> Result<ScalarChain> {
    let r = s.len() + 1;
    if root_index >= r {
        return Err(Error::InvalidRootIndex { index: root_index, count: r });
    }
    if s.q().iter().any(|z| z.norm() == 0.0) {
        return Err(Error::InvalidScalars("scalars must be nonzero".into()));
    }
    // q̃_0^r ∏_k q_k^(r-k) = 1
    let weight: Complex = s
        .q()
        .iter()
        .enumerate()
        .map(|(m, &q)| q.powu((r - 1 - m) as u32))
        .product();
    let root = principal_root(weight.inv(), r)
        * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * root_index as f64 / r as f64);
    let mut lifted = Vec::with_capacity(r);
    lifted.push(root);
    for &q in s.q() {
        let prev = *lifted.last().expect("non-empty");
        lifted.push(prev * q);
    }
    Ok(ScalarChain::with_lift(s.q().to_vec(), lifted))
}

/// Consistency of a lifted chain.
#[derive(Clone, Copy, Debug)]
pub struct LiftCheck {
    /// `|q̃_0 ⋯ q̃_{r-1} - 1|`.
    pub product: f64,
    /// Worst `|q̃_{i+1}/q̃_i - q_{i+1}| / |q_{i+1}|`.
    pub ratio: f64,
    /// `|q̃_{r-1}^r - ∏ q_k^k| / |∏ q_k^k|`, the determinant of the standard `Y`.
    pub top_power: f64,
}

pub fn check_lift(s: &ScalarChain) -> Option<LiftCheck> {
    let lifted = s.lifted()?;
    let r = lifted.len();
    let product = (lifted.iter().product::<Complex>() - 1.0).norm();
    let ratio = s
        .q()
        .iter()
        .enumerate()
        .map(|(i, &q)| (lifted[i + 1] / lifted[i] - q).norm() / q.norm())
        .fold(0.0, f64::max);
    let det: Complex = s.q().iter().enumerate().map(|(m, &q)| q.powu((m + 1) as u32)).product();
    let top_power = (lifted[r - 1].powu(r as u32) - det).norm() / det.norm();
    Some(LiftCheck { product, ratio, top_power })
}

/// Relative residuals of `q̃_i (1 + β_{i+1}α_{i+1}) = q̃_{i+1} (1 + α_iβ_i)`.
pub fn lifted_residuals(quiver: &Quiver, s: &ScalarChain) -> Result<Vec<f64>> {
    let lifted = s
        .lifted()
        .ok_or_else(|| Error::InvalidScalars("chain carries no lift".into()))?;
    if lifted.len() != quiver.levels() + 1 {
        return Err(Error::ChainLengthMismatch { expected: quiver.levels() + 1, found: lifted.len() });
    }
    Ok((0..quiver.levels())
        .map(|k| {
            let lhs = quiver.one_plus_beta_alpha(k).scale(lifted[k]);
            let rhs = quiver.node_endo(k).scale(lifted[k + 1]);
            (&lhs - &rhs).frobenius_norm() / lhs.frobenius_norm().max(rhs.frobenius_norm())
        })
        .collect())
}

/// Entry-wise distance between `g_a g_b^{-1}` and the nearest unitriangular
/// matrix: zero exactly when `g_a ∈ N g_b`.
pub fn unitriangular_defect(ga: &CMatrix, gb: &CMatrix) -> Result<f64> {
    let ratio = ga * &inv(gb)?;
    let lower = ratio.strictly_lower_max();
    let diag = ratio.diagonal().iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
    Ok(lower.max(diag))
}
