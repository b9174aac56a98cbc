//! Real group-valued implosion inside the quiver space: alcove points, unit-circle
//! scalar chains, square-root toric quivers, strata and stabilizers.
//!
//! The toric `Y` carries its diagonal in the reverse order of the standard-form
//! list: standard index `k` (1-based) sits at toric coordinate `n + 1 - k`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cxmat::{c, cr, lstsq, rank_kernel, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::normal_form::BorelElement;
use crate::quiver::{endo_y, max_relative_residual, sqrt_positive_cut, DimensionVector, Quiver, ScalarChain};

/// Tolerance on the alcove inequalities and on `Σθ = 0`.
const ALCOVE_TOL: f64 = 1e-12;
/// Default tolerance for detecting equal angles.
pub const RUN_TOL: f64 = 1e-8;
/// `|q| = 1` tolerance for the square-root construction.
const UNIT_TOL: f64 = 1e-9;
/// Products within this distance of 1 are treated as exactly 1.
const SNAP_TOL: f64 = 1e-12;
/// Relative singular-value threshold for the stabilizer system.
const RANK_TOL: f64 = 1e-9;
/// Absolute threshold for the rank of the projected kernel (orthonormal columns).
const PROJECTION_TOL: f64 = 1e-6;

/// `θ_1 ≥ … ≥ θ_n ≥ θ_1 - 2π` with `Σθ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlcovePoint {
    thetas: Vec<f64>,
}

impl AlcovePoint {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        let n = thetas.len();
        if n < 2 {
            return Err(Error::InvalidAlcove("need at least two angles".into()));
        }
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidAlcove("angles must be finite".into()));
        }
        if let Some(k) = (0..n - 1).find(|&k| thetas[k + 1] > thetas[k] + ALCOVE_TOL) {
            return Err(Error::InvalidAlcove(format!("theta_{} < theta_{}", k + 1, k + 2)));
        }
        if thetas[n - 1] < thetas[0] - 2.0 * PI - ALCOVE_TOL {
            return Err(Error::InvalidAlcove("theta_n < theta_1 - 2 pi".into()));
        }
        let sum: f64 = thetas.iter().sum();
        if sum.abs() > ALCOVE_TOL {
            return Err(Error::InvalidAlcove(format!("angles sum to {sum}, expected 0")));
        }
        Ok(AlcovePoint { thetas })
    }

    /// Point with cyclic gaps `d_k = θ_k - θ_{k+1}` and `d_n = θ_n - θ_1 + 2π`.
    pub fn from_gaps(gaps: &[f64]) -> Result<Self> {
        let n = gaps.len();
        if n < 2 || gaps.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidAlcove("gaps must be nonnegative, at least two".into()));
        }
        if (gaps.iter().sum::<f64>() - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::InvalidAlcove("gaps must sum to 2 pi".into()));
        }
        let mut offsets = vec![0.0; n];
        for k in 1..n {
            offsets[k] = offsets[k - 1] + gaps[k - 1];
        }
        let theta1 = offsets.iter().sum::<f64>() / n as f64;
        Self::new(offsets.iter().map(|o| theta1 - o).collect())
    }

    /// The point with all gaps equal: `θ_k = (n + 1 - 2k) π / n`.
    pub fn barycenter(n: usize) -> Self {
        AlcovePoint { thetas: (1..=n).map(|k| (n as f64 + 1.0 - 2.0 * k as f64) * PI / n as f64).collect() }
    }

    /// Vertex `j` (0-based): the gap `d_{j+1}` equals `2π`, all others vanish.
    pub fn vertex(n: usize, j: usize) -> Self {
        let mut gaps = vec![0.0; n];
        gaps[j % n] = 2.0 * PI;
        Self::from_gaps(&gaps).expect("vertex gaps are valid")
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn n(&self) -> usize {
        self.thetas.len()
    }

    /// Cyclic gaps `d_1, …, d_n`, all nonnegative and summing to `2π`.
    pub fn gaps(&self) -> Vec<f64> {
        let n = self.n();
        let mut d: Vec<f64> = (0..n - 1).map(|k| self.thetas[k] - self.thetas[k + 1]).collect();
        d.push(self.thetas[n - 1] - self.thetas[0] + 2.0 * PI);
        d
    }

    /// `(1 - t) self + t other`; the alcove is convex.
    pub fn interpolate(&self, other: &AlcovePoint, t: f64) -> Result<Self> {
        if other.n() != self.n() {
            return Err(Error::InvalidAlcove("alcove points of different size".into()));
        }
        let thetas = self.thetas.iter().zip(&other.thetas).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        Self::new(thetas)
    }
}

/// All grid points with gaps `m_k · 2π / steps`, `Σ m_k = steps`.
pub fn alcove_grid(n: usize, steps: usize) -> Vec<AlcovePoint> {
    let mut out = Vec::new();
    let mut parts = vec![0usize; n];
    compositions(steps, 0, &mut parts, &mut |m| {
        let gaps: Vec<f64> = m.iter().map(|&k| k as f64 * 2.0 * PI / steps as f64).collect();
        out.push(AlcovePoint::from_gaps(&gaps).expect("grid gaps are valid"));
    });
    out
}

fn compositions(remaining: usize, idx: usize, parts: &mut [usize], emit: &mut impl FnMut(&[usize])) {
    if idx == parts.len() - 1 {
        parts[idx] = remaining;
        emit(parts);
        return;
    }
    for k in (0..=remaining).rev() {
        parts[idx] = k;
        compositions(remaining - k, idx + 1, parts, emit);
    }
}

/// `diag(e^{i(θ_k - θ_1)})`, leading entry exactly 1.
pub fn alcove_to_b1(p: &AlcovePoint) -> BorelElement {
    let t1 = p.thetas[0];
    let diag: Vec<Complex> = p.thetas.iter().map(|&t| Complex::from_polar(1.0, t - t1)).collect();
    BorelElement::b1(CMatrix::from_diag(&diag)).expect("diagonal with leading 1")
}

/// `q_{n-k} = w_{k+1} / w_k`, computed from angle differences.
pub fn qs_from_alcove(p: &AlcovePoint) -> ScalarChain {
    let n = p.n();
    let mut q = vec![cr(1.0); n - 1];
    for k in 0..n - 1 {
        let diff = p.thetas[k + 1] - p.thetas[k];
        q[n - 2 - k] = if diff == 0.0 { cr(1.0) } else { Complex::from_polar(1.0, diff) };
    }
    ScalarChain::new(q).expect("unit scalars are nonzero")
}

/// Toric quiver with `ν = μ = √(q_j ⋯ q_k - 1)`, cut along the positive real axis.
pub fn hjs_toric_quiver(s: &ScalarChain) -> Result<Quiver> {
    if let Some((index, z)) = s.q().iter().enumerate().find(|(_, z)| (z.norm() - 1.0).abs() > UNIT_TOL) {
        return Err(Error::NotUnitModulus { index: index + 1, modulus: z.norm() });
    }
    let n = s.len() + 1;
    let mut alphas = Vec::with_capacity(n - 1);
    let mut betas = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let mut alpha = CMatrix::zeros(k + 2, k + 1);
        let mut beta = CMatrix::zeros(k + 1, k + 2);
        for j in 0..=k {
            let p = s.product(j, k) - 1.0;
            let root = if p.norm() <= SNAP_TOL { cr(0.0) } else { sqrt_positive_cut(p) };
            alpha[(j, j)] = root;
            beta[(j, j)] = root;
        }
        alphas.push(alpha);
        betas.push(beta);
    }
    Quiver::new(DimensionVector::full_flag(n), alphas, betas)
}

/// Equality classes of the `Y` diagonal and the data derived from them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumDescriptor {
    /// Classes of equal diagonal entries (1-based standard indices, each sorted,
    /// ordered by smallest member). Classes are cyclically consecutive.
    pub runs: Vec<Vec<usize>>,
    /// Strictly increasing flag of map ranks, ending at `n`.
    pub collapsed_dims: Vec<usize>,
    /// Sizes of the diagonal `SU(s)` blocks of the stabilizer.
    pub stabilizer_blocks: Vec<usize>,
}

impl StratumDescriptor {
    /// `Σ (s² - 1)` over the stabilizer blocks.
    pub fn predicted_dim(&self) -> usize {
        self.stabilizer_blocks.iter().map(|&s| s * s - 1).sum()
    }

    pub fn is_interior(&self) -> bool {
        self.stabilizer_blocks.is_empty()
    }

    /// Whether every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &StratumDescriptor) -> bool {
        self.runs.iter().all(|run| coarser.runs.iter().any(|c| run.iter().all(|i| c.contains(i))))
    }

    fn class_of(&self, index: usize) -> usize {
        self.runs.iter().position(|r| r.contains(&index)).expect("index covered by runs")
    }
}

pub fn stratum_of(p: &AlcovePoint, tol: f64) -> StratumDescriptor {
    let n = p.n();
    let gaps = p.gaps();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for (k, &d) in gaps.iter().enumerate() {
        if d <= tol {
            let (a, b) = (find(&mut parent, k), find(&mut parent, (k + 1) % n));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(pos) => runs[pos].push(i + 1),
            None => {
                roots.push(r);
                runs.push(vec![i + 1]);
            }
        }
    }
    let mut desc = StratumDescriptor { runs, collapsed_dims: Vec::new(), stabilizer_blocks: Vec::new() };
    desc.stabilizer_blocks = desc.runs.iter().map(Vec::len).filter(|&s| s >= 2).collect();

    // rank of α_k (node of dimension k+1): entries with q_{j+1} ⋯ q_{k+1} ≠ 1,
    // i.e. standard indices n - j and n - k - 1 in different classes
    let mut dims = Vec::new();
    for k in 0..n - 1 {
        let target = desc.class_of(n - k - 1);
        let count = (0..=k).filter(|&j| desc.class_of(n - j) != target).count();
        dims.push(count);
    }
    dims.push(n);
    let mut collapsed: Vec<usize> = Vec::new();
    for d in dims {
        if d > 0 && collapsed.last().is_none_or(|&last| d > last) {
            collapsed.push(d);
        }
    }
    desc.collapsed_dims = collapsed;
    desc
}

/// Outcome of the stabilizer computation at an alcove point.
#[derive(Clone, Debug)]
pub struct StabilizerReport {
    pub stratum: StratumDescriptor,
    pub predicted_dim: usize,
    /// Dimension of the `su(n)` part of the infinitesimal stabilizer in `su(n) ⊕ Lie(H)`.
    pub measured_dim: usize,
    /// Largest least-squares residual when pairing each block generator with some `η`.
    pub forward_residual: f64,
    /// Every level splits as a zero part plus an isomorphism on the complement.
    pub decomposition_ok: bool,
    pub quiver: Quiver,
}

impl StabilizerReport {
    pub fn forward_ok(&self, tol: f64) -> bool {
        self.forward_residual <= tol
    }
}

/// Real basis of `su(n)`: `i(E_jj - E_nn)`, `E_jk - E_kj`, `i(E_jk + E_kj)`.
fn su_basis(n: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(n * n - 1);
    for j in 0..n - 1 {
        let mut m = CMatrix::zeros(n, n);
        m[(j, j)] = c(0.0, 1.0);
        m[(n - 1, n - 1)] = c(0.0, -1.0);
        basis.push(m);
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut m = CMatrix::zeros(n, n);
            m[(j, k)] = cr(1.0);
            m[(k, j)] = cr(-1.0);
            basis.push(m);
            let mut m = CMatrix::zeros(n, n);
            m[(j, k)] = c(0.0, 1.0);
            m[(k, j)] = c(0.0, 1.0);
            basis.push(m);
        }
    }
    basis
}

/// Real basis of `sl(m, C)`: each complex basis element and `i` times it.
fn sl_real_basis(m: usize) -> Vec<CMatrix> {
    let mut complex = Vec::new();
    for j in 0..m {
        for k in 0..m {
            if j != k {
                let mut e = CMatrix::zeros(m, m);
                e[(j, k)] = cr(1.0);
                complex.push(e);
            }
        }
    }
    for j in 0..m.saturating_sub(1) {
        let mut e = CMatrix::zeros(m, m);
        e[(j, j)] = cr(1.0);
        e[(m - 1, m - 1)] = cr(-1.0);
        complex.push(e);
    }
    complex.into_iter().flat_map(|e| [e.clone(), e.scale(c(0.0, 1.0))]).collect()
}

/// Real coordinates of the infinitesimal action of `(η_0, …, η_{n-1})` on the quiver.
fn linearized_action(q: &Quiver, etas: &[Option<&CMatrix>]) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..q.levels() {
        let (alpha, beta) = (&q.alphas()[k], &q.betas()[k]);
        let mut d_alpha = CMatrix::zeros(alpha.rows(), alpha.cols());
        let mut d_beta = CMatrix::zeros(beta.rows(), beta.cols());
        if let Some(up) = etas[k + 1] {
            d_alpha = &d_alpha + &(up * alpha);
            d_beta = &d_beta - &(beta * up);
        }
        if let Some(down) = etas[k] {
            d_alpha = &d_alpha - &(alpha * down);
            d_beta = &d_beta + &(down * beta);
        }
        for z in d_alpha.as_slice().iter().chain(d_beta.as_slice()) {
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

struct ActionColumns {
    xi: Vec<Vec<f64>>,
    eta: Vec<Vec<f64>>,
}

fn action_columns(q: &Quiver) -> ActionColumns {
    let n = q.dims().top();
    let nodes = q.dims().len();
    let xi = su_basis(n)
        .iter()
        .map(|x| {
            let mut etas: Vec<Option<&CMatrix>> = vec![None; nodes];
            etas[nodes - 1] = Some(x);
            linearized_action(q, &etas)
        })
        .collect();
    let mut eta = Vec::new();
    for node in 1..nodes - 1 {
        for e in sl_real_basis(q.dims().as_slice()[node]) {
            let mut etas: Vec<Option<&CMatrix>> = vec![None; nodes];
            etas[node] = Some(&e);
            eta.push(linearized_action(q, &etas));
        }
    }
    ActionColumns { xi, eta }
}

fn columns_to_matrix(cols: &[&Vec<f64>], rows: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols.len(), |i, j| cr(cols[j][i]))
}

/// Generators of the predicted stabilizer, embedded in toric coordinates.
fn block_generators(stratum: &StratumDescriptor, n: usize) -> Vec<CMatrix> {
    let mut gens = Vec::new();
    for run in stratum.runs.iter().filter(|r| r.len() >= 2) {
        let coords: Vec<usize> = run.iter().map(|&k| n - k).collect();
        for local in su_basis(run.len()) {
            let mut m = CMatrix::zeros(n, n);
            for (a, &ia) in coords.iter().enumerate() {
                for (b, &ib) in coords.iter().enumerate() {
                    m[(ia, ib)] = local[(a, b)];
                }
            }
            gens.push(m);
        }
    }
    gens
}

fn decomposition_holds(q: &Quiver) -> bool {
    (0..q.levels()).all(|k| {
        let (alpha, beta) = (&q.alphas()[k], &q.betas()[k]);
        let ra = rank_kernel(alpha, RANK_TOL).rank;
        let rb = rank_kernel(beta, RANK_TOL).rank;
        let rba = rank_kernel(&(beta * alpha), RANK_TOL).rank;
        ra == rb && rb == rba
    })
}

/// Predicted versus measured stabilizer dimension at `p`.
pub fn stabilizer_check(p: &AlcovePoint, tol: f64) -> Result<StabilizerReport> {
    let n = p.n();
    let stratum = stratum_of(p, tol);
    let quiver = hjs_toric_quiver(&qs_from_alcove(p))?;
    let cols = action_columns(&quiver);
    let rows = cols.xi.first().map_or(0, Vec::len);

    let all: Vec<&Vec<f64>> = cols.xi.iter().chain(&cols.eta).collect();
    let system = columns_to_matrix(&all, rows);
    let rk = rank_kernel(&system, RANK_TOL);
    let measured_dim = if rk.singular_values.first().copied().unwrap_or(0.0) == 0.0 {
        cols.xi.len()
    } else {
        let projected = rk.kernel.block(0, 0, cols.xi.len(), rk.kernel.cols());
        projected.singular_values().iter().filter(|&&s| s > PROJECTION_TOL).count()
    };

    let eta_refs: Vec<&Vec<f64>> = cols.eta.iter().collect();
    let eta_matrix = columns_to_matrix(&eta_refs, rows);
    let mut forward_residual: f64 = 0.0;
    for g in block_generators(&stratum, n) {
        let mut etas: Vec<Option<&CMatrix>> = vec![None; quiver.dims().len()];
        etas[n - 1] = Some(&g);
        let target: Vec<Complex> = linearized_action(&quiver, &etas).iter().map(|&x| cr(-x)).collect();
        let b = CMatrix::column_vector(&target);
        let residual = if eta_matrix.cols() == 0 {
            b.frobenius_norm()
        } else {
            let eta = lstsq(&eta_matrix, &b, RANK_TOL);
            (&(&eta_matrix * &eta) - &b).frobenius_norm()
        };
        forward_residual = forward_residual.max(residual);
    }

    Ok(StabilizerReport {
        predicted_dim: stratum.predicted_dim(),
        measured_dim,
        forward_residual,
        decomposition_ok: decomposition_holds(&quiver),
        stratum,
        quiver,
    })
}

/// Per-point diagnostics for a grid scan.
#[derive(Clone, Debug)]
pub struct GridSample {
    pub point: AlcovePoint,
    pub residual: f64,
    /// Largest deviation between the reversed toric `Y` diagonal and `alcove_to_b1`.
    pub diagonal_mismatch: f64,
    pub stratum: StratumDescriptor,
    pub zero_quiver: bool,
}

/// Evaluates the toric construction on every grid point, in grid order.
pub fn scan_alcove_grid(n: usize, steps: usize, tol: f64) -> Result<Vec<GridSample>> {
    alcove_grid(n, steps)
        .into_par_iter()
        .map(|point| {
            let s = qs_from_alcove(&point);
            let quiver = hjs_toric_quiver(&s)?;
            let residual = max_relative_residual(&quiver, &s)?;
            let mut toric = endo_y(&quiver).diagonal();
            toric.reverse();
            let b1 = alcove_to_b1(&point).matrix().diagonal();
            let diagonal_mismatch = toric.iter().zip(&b1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let zero_quiver = quiver.max_map_norm() == 0.0;
            Ok(GridSample { stratum: stratum_of(&point, tol), point, residual, diagonal_mismatch, zero_quiver })
        })
        .collect()
}
