//! The worked `SL(2)` example: `N`-invariants on `SL(2) × B`, their relation,
//! the quadric model, the real slice and the quiver-domain hypersurface.

use crate::cxmat::{c, cr, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::quiver::{DimensionVector, Quiver};
use crate::steinberg::{self, DoublePoint};

const RELATION_TOL: f64 = 1e-10;

/// `u = [[a, b], [c, d]] ∈ SL(2)` and `v = [[e, f], [0, e']] ∈ B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SL2Point {
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
    pub e: Complex,
    pub f: Complex,
    pub eprime: Complex,
}

impl SL2Point {
    pub fn new(u: [Complex; 4], e: Complex, f: Complex, eprime: Complex) -> Result<Self> {
        let [a, b, c, d] = u;
        let p = SL2Point { a, b, c, d, e, f, eprime };
        if (a * d - b * c - 1.0).norm() > RELATION_TOL {
            return Err(Error::InvalidInput(format!("ad - bc = {}, expected 1", a * d - b * c)));
        }
        if (e * eprime - 1.0).norm() > RELATION_TOL {
            return Err(Error::InvalidInput(format!("e e' = {}, expected 1", e * eprime)));
        }
        Ok(p)
    }

    /// Identity `u` with Borel part `(e, f, 1/e)`.
    pub fn with_borel(e: Complex, f: Complex) -> Result<Self> {
        if e.norm() == 0.0 {
            return Err(Error::ZeroE);
        }
        Self::new([cr(1.0), cr(0.0), cr(0.0), cr(1.0)], e, f, e.inv())
    }

    pub fn from_double(p: &DoublePoint) -> Result<Self> {
        if p.n() != 2 || !p.is_borel() {
            return Err(Error::InvalidInput("expected an SL(2) x B point".into()));
        }
        let (u, v) = (p.u(), p.v());
        Self::new([u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]], v[(0, 0)], v[(0, 1)], v[(1, 1)])
    }

    pub fn u(&self) -> CMatrix {
        CMatrix::from_rows(&[vec![self.a, self.b], vec![self.c, self.d]]).expect("2x2")
    }

    pub fn v(&self) -> CMatrix {
        CMatrix::from_rows(&[vec![self.e, self.f], vec![cr(0.0), self.eprime]]).expect("2x2")
    }

    pub fn to_double(&self) -> Result<DoublePoint> {
        DoublePoint::borel(self.u(), self.v())
    }
}

/// Generators of the `N`-invariant ring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SL2Invariants {
    pub a: Complex,
    pub c: Complex,
    pub e: Complex,
    pub eprime: Complex,
    pub x: Complex,
    pub y: Complex,
}

impl SL2Invariants {
    pub fn max_abs_diff(&self, other: &SL2Invariants) -> f64 {
        [
            self.a - other.a,
            self.c - other.c,
            self.e - other.e,
            self.eprime - other.eprime,
            self.x - other.x,
            self.y - other.y,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }
}

/// `x = af + (e' - e) b`, `y = cf + (e' - e) d`.
pub fn sl2_invariants(p: &SL2Point) -> SL2Invariants {
    let gap = p.eprime - p.e;
    SL2Invariants {
        a: p.a,
        c: p.c,
        e: p.e,
        eprime: p.eprime,
        x: p.a * p.f + gap * p.b,
        y: p.c * p.f + gap * p.d,
    }
}

/// `|cx - ay - (e - e')| + |e e' - 1|`.
pub fn sl2_relation_residual(p: &SL2Point) -> f64 {
    let inv = sl2_invariants(p);
    (inv.c * inv.x - inv.a * inv.y - (inv.e - inv.eprime)).norm() + (p.e * p.eprime - 1.0).norm()
}

/// The right `N`-action with `n = [[1, t], [0, 1]]`.
pub fn sl2_n_action(p: &SL2Point, t: Complex) -> Result<SL2Point> {
    let n = CMatrix::from_rows(&[vec![cr(1.0), t], vec![cr(0.0), cr(1.0)]]).expect("2x2");
    SL2Point::from_double(&steinberg::n_action(&p.to_double()?, &n)?)
}

/// Coordinates `(a, c, e, X, Y)` with `X = e x`, `Y = e y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadricCoords {
    pub a: Complex,
    pub c: Complex,
    pub e: Complex,
    pub big_x: Complex,
    pub big_y: Complex,
}

impl QuadricCoords {
    /// `|cX - aY - (e² - 1)|`.
    pub fn residual(&self) -> f64 {
        (self.c * self.big_x - self.a * self.big_y - (self.e * self.e - 1.0)).norm()
    }
}

pub fn sl2_quadric_coords(p: &SL2Point) -> Result<QuadricCoords> {
    if p.e.norm() == 0.0 {
        return Err(Error::ZeroE);
    }
    let inv = sl2_invariants(p);
    Ok(QuadricCoords { a: p.a, c: p.c, e: p.e, big_x: p.e * inv.x, big_y: p.e * inv.y })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealSlice {
    pub x: Complex,
    pub y: Complex,
    /// `|cx - ay - 2i sin θ|`.
    pub residual: f64,
    /// Residual of the sphere point `c = i x̄`, `a = -i ȳ` on `|x|² + |y|² = 2 sin θ`;
    /// `None` when `sin θ <= 0` or `(x, y) = 0`.
    pub sphere_residual: Option<f64>,
}

/// Evaluates the slice `e = e^{iθ}`, `f = 0` at `u ∈ SU(2)`.
pub fn sl2_real_slice(theta: f64, u: &CMatrix) -> Result<RealSlice> {
    if u.shape() != (2, 2) {
        return Err(Error::ShapeMismatch(format!("u has shape {:?}", u.shape())));
    }
    let unitary_defect = (&(&u.adjoint() * u) - &CMatrix::identity(2)).max_abs();
    if unitary_defect > RELATION_TOL || (u.determinant() - 1.0).norm() > RELATION_TOL {
        return Err(Error::NotUnitary);
    }
    let e = Complex::from_polar(1.0, theta);
    let p = SL2Point::new([u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]], e, cr(0.0), e.conj())?;
    let inv = sl2_invariants(&p);
    let two_i_sin = c(0.0, 2.0 * theta.sin());
    let residual = (inv.c * inv.x - inv.a * inv.y - two_i_sin).norm();

    let radius_sq = 2.0 * theta.sin();
    let norm = (inv.x.norm_sqr() + inv.y.norm_sqr()).sqrt();
    let sphere_residual = (radius_sq > 0.0 && norm > 0.0).then(|| {
        let k = radius_sq.sqrt() / norm;
        let (x, y) = (inv.x * k, inv.y * k);
        let (cc, aa) = (c(0.0, 1.0) * x.conj(), c(0.0, -1.0) * y.conj());
        (cc * x - aa * y - two_i_sin).norm()
    });
    Ok(RealSlice { x: inv.x, y: inv.y, residual, sphere_residual })
}

/// `1 + a₁b₁ + a₂b₂`, the determinant of `1 + αβ` for the `1 → 2` quiver.
pub fn sl2_domain_value(a1: Complex, a2: Complex, b1: Complex, b2: Complex) -> Complex {
    1.0 + a1 * b1 + a2 * b2
}

/// Whether `(a₁, a₂, b₁, b₂)` lies off the hypersurface `1 + a₁b₁ + a₂b₂ = 0`.
pub fn sl2_quiver_domain(a1: Complex, a2: Complex, b1: Complex, b2: Complex, tol: f64) -> bool {
    sl2_domain_value(a1, a2, b1, b2).norm() > tol
}

/// The `1 → 2` quiver with `α = (a₁, a₂)ᵀ`, `β = (b₁, b₂)`.
pub fn sl2_quiver(a1: Complex, a2: Complex, b1: Complex, b2: Complex) -> Result<Quiver> {
    let dims = DimensionVector::new(vec![1, 2])?;
    let alpha = CMatrix::column_vector(&[a1, a2]);
    let beta = CMatrix::from_rows(&[vec![b1, b2]])?;
    Quiver::new(dims, vec![alpha], vec![beta])
}
