//! Seeded generators for test data: bounded complex matrices, well-conditioned
//! special-linear elements, special-unitary elements and unitriangular matrices.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cxmat::{c, cr, CMatrix, Complex};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real and imaginary parts uniform in `[-bound, bound]`.
pub fn complex_in_box<R: Rng>(rng: &mut R, bound: f64) -> Complex {
    c(rng.gen_range(-bound..=bound), rng.gen_range(-bound..=bound))
}

/// Modulus log-uniform in `[lo, hi]`, uniform phase.
pub fn complex_annulus<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Complex {
    let r = (rng.gen_range(lo.ln()..=hi.ln())).exp();
    Complex::from_polar(r, rng.gen_range(0.0..2.0 * PI))
}

pub fn unit_complex<R: Rng>(rng: &mut R) -> Complex {
    Complex::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))
}

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, bound: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_in_box(rng, bound))
}

/// Random element of SL(n, C) with 2-norm condition number at most `max_cond`.
pub fn special_linear<R: Rng>(rng: &mut R, n: usize, max_cond: f64) -> CMatrix {
    if n == 1 {
        return CMatrix::identity(1);
    }
    loop {
        // identity plus a bounded perturbation keeps rejections rare
        let m = &CMatrix::identity(n) + &matrix(rng, n, n, 1.0);
        let cond = m.condition_number();
        if !cond.is_finite() || cond > max_cond {
            continue;
        }
        let det = m.determinant();
        let root = det.powf(1.0 / n as f64);
        return m.scale(root.inv());
    }
}

/// Random element of GL(n, C) with condition number at most `max_cond`.
pub fn general_linear<R: Rng>(rng: &mut R, n: usize, max_cond: f64) -> CMatrix {
    loop {
        let m = &CMatrix::identity(n) + &matrix(rng, n, n, 1.0);
        let cond = m.condition_number();
        if cond.is_finite() && cond <= max_cond {
            return m;
        }
    }
}

/// Random element of SU(n) from the QR factor of a random matrix.
pub fn special_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let m = matrix(rng, n, n, 1.0);
    let q = CMatrix::from_faer(&m.to_faer().qr().compute_Q());
    let det = q.determinant();
    let phase = Complex::from_polar(1.0, det.arg() / n as f64);
    q.scale(phase.inv())
}

/// Upper unitriangular matrix with strictly-upper entries in a box of size `bound`.
pub fn unitriangular<R: Rng>(rng: &mut R, n: usize, bound: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => cr(1.0),
        std::cmp::Ordering::Less => complex_in_box(rng, bound),
        std::cmp::Ordering::Greater => cr(0.0),
    })
}

/// Torus level: `n` nonzero entries with product exactly rescaled to 1.
pub fn torus_level<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex> {
    let mut lambda: Vec<Complex> = (0..n).map(|_| complex_annulus(rng, 0.5, 2.0)).collect();
    let prod: Complex = lambda[..n - 1].iter().product();
    lambda[n - 1] = prod.inv();
    lambda
}
