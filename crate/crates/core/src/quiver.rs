//! Flag quivers and the multiplicative moment-map equations
//!
//! ```text
//! 1 + β_{i+1} α_{i+1} = q_{i+1} (1 + α_i β_i),    i = 0, …, r-2
//! ```
//!
//! with the convention that node 0 is zero-dimensional (`α_0 β_0 = 0`).
//!
//! Indexing is 0-based throughout: node `k` carries `C^{dims[k]}`,
//! `alphas[k]` maps node `k` to node `k + 1` and `betas[k]` maps back, and
//! `q[k]` is the scalar of the equation living on node `k`. In the usual
//! 1-based notation `alphas[k] = α_{k+1}` and `q[k] = q_{k+1}`.

use crate::cxmat::{
    self, cr, eigenvalue_clusters, generalized_eigenspace, inv, is_invertible, projector, rank, CMatrix, Complex,
    CLUSTER_TOL,
};
use crate::error::{Error, Result};
use crate::normal_form::{reconstruct_from_borel, BorelElement};
use crate::random;

/// Strictly increasing dimension vector `n_1 < … < n_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionVector(Vec<usize>);

impl DimensionVector {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidQuiver("dims must be non-empty".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidQuiver("dims must be positive".into()));
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidQuiver("dims not strictly increasing".into()));
        }
        Ok(DimensionVector(dims))
    }

    /// `(1, 2, …, n)`.
    pub fn full_flag(n: usize) -> Self {
        DimensionVector((1..=n.max(1)).collect())
    }

    pub fn is_full_flag(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &d)| d == i + 1)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of nodes `r`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Top dimension `n = n_r`.
    pub fn top(&self) -> usize {
        *self.0.last().expect("non-empty")
    }
}

/// A point of `M_mult`: shapes match `dims` and every `1 + αβ`, `1 + βα` is invertible.
#[derive(Clone, Debug, PartialEq)]
pub struct Quiver {
    dims: DimensionVector,
    alphas: Vec<CMatrix>,
    betas: Vec<CMatrix>,
}

impl Quiver {
    pub fn new(dims: DimensionVector, alphas: Vec<CMatrix>, betas: Vec<CMatrix>) -> Result<Self> {
        let q = Self::with_shapes(dims, alphas, betas)?;
        q.check_invertibility()?;
        Ok(q)
    }

    /// Shape validation only; used internally where invertibility is inherited.
    pub(crate) fn with_shapes(dims: DimensionVector, alphas: Vec<CMatrix>, betas: Vec<CMatrix>) -> Result<Self> {
        let levels = dims.len() - 1;
        if alphas.len() != levels || betas.len() != levels {
            return Err(Error::InvalidQuiver(format!(
                "expected {levels} alpha and beta maps, got {} and {}",
                alphas.len(),
                betas.len()
            )));
        }
        let d = dims.as_slice();
        for k in 0..levels {
            if alphas[k].shape() != (d[k + 1], d[k]) {
                return Err(Error::InvalidQuiver(format!(
                    "alpha_{} has shape {:?}, expected {:?}",
                    k + 1,
                    alphas[k].shape(),
                    (d[k + 1], d[k])
                )));
            }
            if betas[k].shape() != (d[k], d[k + 1]) {
                return Err(Error::InvalidQuiver(format!(
                    "beta_{} has shape {:?}, expected {:?}",
                    k + 1,
                    betas[k].shape(),
                    (d[k], d[k + 1])
                )));
            }
        }
        Ok(Quiver { dims, alphas, betas })
    }

    fn check_invertibility(&self) -> Result<()> {
        for k in 0..self.levels() {
            if !is_invertible(&self.one_plus_alpha_beta(k)) {
                return Err(Error::InvalidQuiver(format!("1 + alpha_{0} beta_{0} is not invertible", k + 1)));
            }
            if !is_invertible(&self.one_plus_beta_alpha(k)) {
                return Err(Error::InvalidQuiver(format!("1 + beta_{0} alpha_{0} is not invertible", k + 1)));
            }
        }
        Ok(())
    }

    /// The quiver with every map zero.
    pub fn zero(dims: DimensionVector) -> Self {
        let d = dims.as_slice().to_vec();
        let alphas = (0..d.len() - 1).map(|k| CMatrix::zeros(d[k + 1], d[k])).collect();
        let betas = (0..d.len() - 1).map(|k| CMatrix::zeros(d[k], d[k + 1])).collect();
        Quiver { dims, alphas, betas }
    }

    pub fn dims(&self) -> &DimensionVector {
        &self.dims
    }

    pub fn alphas(&self) -> &[CMatrix] {
        &self.alphas
    }

    pub fn betas(&self) -> &[CMatrix] {
        &self.betas
    }

    /// Number of arrows pairs, `r - 1`.
    pub fn levels(&self) -> usize {
        self.alphas.len()
    }

    /// `1 + alphas[k] betas[k]`, acting on node `k + 1`.
    pub fn one_plus_alpha_beta(&self, k: usize) -> CMatrix {
        let n = self.dims.as_slice()[k + 1];
        &CMatrix::identity(n) + &(&self.alphas[k] * &self.betas[k])
    }

    /// `1 + betas[k] alphas[k]`, acting on node `k`.
    pub fn one_plus_beta_alpha(&self, k: usize) -> CMatrix {
        let n = self.dims.as_slice()[k];
        &CMatrix::identity(n) + &(&self.betas[k] * &self.alphas[k])
    }

    /// Endomorphism `1 + α β` arriving at node `k` (identity at node 0).
    pub fn node_endo(&self, k: usize) -> CMatrix {
        if k == 0 {
            CMatrix::identity(self.dims.as_slice()[0])
        } else {
            self.one_plus_alpha_beta(k - 1)
        }
    }

    /// Largest Frobenius norm among all maps.
    pub fn max_map_norm(&self) -> f64 {
        self.alphas.iter().chain(&self.betas).map(CMatrix::frobenius_norm).fold(0.0, f64::max)
    }

    /// Largest entry-wise difference to another quiver of the same shape.
    pub fn max_abs_diff(&self, other: &Quiver) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.alphas
            .iter()
            .zip(&other.alphas)
            .chain(self.betas.iter().zip(&other.betas))
            .map(|(a, b)| (a - b).max_abs())
            .fold(0.0, f64::max)
    }
}

/// The scalars `q_1, …, q_{r-1}`, optionally with a lift `q̃_0, …, q̃_{r-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarChain {
    q: Vec<Complex>,
    lifted: Option<Vec<Complex>>,
}

impl ScalarChain {
    pub fn new(q: Vec<Complex>) -> Result<Self> {
        if let Some(k) = q.iter().position(|z| z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidScalars(format!("q_{} must be finite and nonzero", k + 1)));
        }
        Ok(ScalarChain { q, lifted: None })
    }

    pub fn from_reals(q: &[f64]) -> Result<Self> {
        Self::new(q.iter().map(|&x| cr(x)).collect())
    }

    pub(crate) fn with_lift(q: Vec<Complex>, lifted: Vec<Complex>) -> Self {
        ScalarChain { q, lifted: Some(lifted) }
    }

    pub fn ones(len: usize) -> Self {
        ScalarChain { q: vec![cr(1.0); len], lifted: None }
    }

    pub fn q(&self) -> &[Complex] {
        &self.q
    }

    pub fn lifted(&self) -> Option<&[Complex]> {
        self.lifted.as_deref()
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// `q[from] · q[from+1] · … · q[to]` (inclusive, 0-based).
    pub fn product(&self, from: usize, to: usize) -> Complex {
        self.q[from..=to].iter().product()
    }

    /// Diagonal of the standard-form `Y`: `(1, q_{r-1}, q_{r-1}q_{r-2}, …, q_{r-1}…q_1)`.
    pub fn standard_diagonal(&self) -> Vec<Complex> {
        let r = self.q.len() + 1;
        let mut out = vec![cr(1.0)];
        let mut acc = cr(1.0);
        for k in (0..r - 1).rev() {
            acc *= self.q[k];
            out.push(acc);
        }
        out
    }

    fn check_len(&self, quiver: &Quiver) -> Result<()> {
        if self.q.len() != quiver.levels() {
            return Err(Error::ChainLengthMismatch { expected: quiver.levels(), found: self.q.len() });
        }
        Ok(())
    }
}

/// Whether a gauge factor must have determinant one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeMode {
    SpecialLinear,
    GeneralLinear,
}

/// One invertible factor per node, `g_1, …, g_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeElement {
    factors: Vec<CMatrix>,
    modes: Vec<GaugeMode>,
}

impl GaugeElement {
    pub fn new(factors: Vec<CMatrix>, modes: Vec<GaugeMode>) -> Result<Self> {
        if factors.len() != modes.len() {
            return Err(Error::InvalidGauge("one mode per factor required".into()));
        }
        for (k, (g, mode)) in factors.iter().zip(&modes).enumerate() {
            if !g.is_square() {
                return Err(Error::InvalidGauge(format!("g_{} is not square", k + 1)));
            }
            if !is_invertible(g) {
                return Err(Error::InvalidGauge(format!("g_{} is not invertible", k + 1)));
            }
            if *mode == GaugeMode::SpecialLinear && (g.determinant() - cr(1.0)).norm() > cxmat::DEFAULT_TOL {
                return Err(Error::InvalidGauge(format!("det g_{} != 1", k + 1)));
            }
        }
        Ok(GaugeElement { factors, modes })
    }

    /// Special-linear factors at every node.
    pub fn special(factors: Vec<CMatrix>) -> Result<Self> {
        let modes = vec![GaugeMode::SpecialLinear; factors.len()];
        Self::new(factors, modes)
    }

    pub fn identity(dims: &DimensionVector) -> Self {
        GaugeElement {
            factors: dims.as_slice().iter().map(|&d| CMatrix::identity(d)).collect(),
            modes: vec![GaugeMode::SpecialLinear; dims.len()],
        }
    }

    /// Random special-linear gauge with every factor of condition at most `max_cond`.
    pub fn random_special<R: rand::Rng>(rng: &mut R, dims: &DimensionVector, max_cond: f64) -> Self {
        let factors = dims.as_slice().iter().map(|&d| random::special_linear(rng, d, max_cond)).collect();
        GaugeElement { factors, modes: vec![GaugeMode::SpecialLinear; dims.len()] }
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn modes(&self) -> &[GaugeMode] {
        &self.modes
    }

    pub fn inverse(&self) -> Result<Self> {
        let factors = self.factors.iter().map(inv).collect::<Result<Vec<_>>>()?;
        Ok(GaugeElement { factors, modes: self.modes.clone() })
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GaugeElement) -> Self {
        assert_eq!(self.factors.len(), other.factors.len());
        let factors = self.factors.iter().zip(&other.factors).map(|(a, b)| a * b).collect();
        let modes = self
            .modes
            .iter()
            .zip(&other.modes)
            .map(|(a, b)| if *a == GaugeMode::SpecialLinear && *b == GaugeMode::SpecialLinear { *a } else { GaugeMode::GeneralLinear })
            .collect();
        GaugeElement { factors, modes }
    }
}

/// Residual matrices `R_i = (1 + β_{i+1}α_{i+1}) - q_{i+1}(1 + α_iβ_i)`.
pub fn residuals(quiver: &Quiver, s: &ScalarChain) -> Result<Vec<CMatrix>> {
    s.check_len(quiver)?;
    Ok((0..quiver.levels())
        .map(|k| &quiver.one_plus_beta_alpha(k) - &quiver.node_endo(k).scale(s.q[k]))
        .collect())
}

/// `‖R_i‖_F / max(‖1 + β_{i+1}α_{i+1}‖_F, |q_{i+1}| ‖1 + α_iβ_i‖_F)` per level.
pub fn relative_residuals(quiver: &Quiver, s: &ScalarChain) -> Result<Vec<f64>> {
    s.check_len(quiver)?;
    Ok((0..quiver.levels())
        .map(|k| {
            let lhs = quiver.one_plus_beta_alpha(k);
            let rhs = quiver.node_endo(k).scale(s.q[k]);
            let scale = lhs.frobenius_norm().max(rhs.frobenius_norm());
            (&lhs - &rhs).frobenius_norm() / scale
        })
        .collect())
}

pub fn max_relative_residual(quiver: &Quiver, s: &ScalarChain) -> Result<f64> {
    Ok(relative_residuals(quiver, s)?.into_iter().fold(0.0, f64::max))
}

/// Recovers `q` level by level as `trace((1+βα)(1+αβ)^{-1}) / n`, then checks
/// every relative residual against `tol`.
pub fn infer_scalars(quiver: &Quiver, tol: f64) -> Result<ScalarChain> {
    let dims = quiver.dims.as_slice();
    let mut q = Vec::with_capacity(quiver.levels());
    for k in 0..quiver.levels() {
        let endo_inv = inv(&quiver.node_endo(k))?;
        q.push((&quiver.one_plus_beta_alpha(k) * &endo_inv).trace() / dims[k] as f64);
    }
    let chain = ScalarChain::new(q).map_err(|_| Error::NotASolution { residual: f64::INFINITY, tolerance: tol })?;
    let worst = max_relative_residual(quiver, &chain)?;
    if !(worst <= tol) {
        return Err(Error::NotASolution { residual: worst, tolerance: tol });
    }
    Ok(chain)
}

/// Gauge action `α_k ↦ g_{k+1} α_k g_k^{-1}`, `β_k ↦ g_k β_k g_{k+1}^{-1}`; the
/// optional `left` factor multiplies the top-node factor from the left.
pub fn act_gauge(quiver: &Quiver, g: &GaugeElement, left: Option<&CMatrix>) -> Result<Quiver> {
    let dims = quiver.dims.as_slice();
    if g.factors.len() != dims.len() {
        return Err(Error::ShapeMismatch(format!("gauge has {} factors for {} nodes", g.factors.len(), dims.len())));
    }
    for (k, f) in g.factors.iter().enumerate() {
        if f.shape() != (dims[k], dims[k]) {
            return Err(Error::ShapeMismatch(format!("g_{} has shape {:?}", k + 1, f.shape())));
        }
    }
    let mut factors = g.factors.clone();
    if let Some(l) = left {
        let top = dims.len() - 1;
        if l.shape() != (dims[top], dims[top]) {
            return Err(Error::ShapeMismatch(format!("left factor has shape {:?}", l.shape())));
        }
        factors[top] = l * &factors[top];
    }
    let inverses = factors.iter().map(inv).collect::<Result<Vec<_>>>()?;
    let alphas = (0..quiver.levels()).map(|k| &(&factors[k + 1] * &quiver.alphas[k]) * &inverses[k]).collect();
    let betas = (0..quiver.levels()).map(|k| &(&factors[k] * &quiver.betas[k]) * &inverses[k + 1]).collect();
    Quiver::with_shapes(quiver.dims.clone(), alphas, betas)
}

/// Group-valued moment map `(α, β) ↦ (1 + βα, (1 + αβ)^{-1})` of a length-one quiver.
pub fn vdb_moment_map(alpha: &CMatrix, beta: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if alpha.rows() != beta.cols() || alpha.cols() != beta.rows() {
        return Err(Error::ShapeMismatch(format!("alpha {:?} vs beta {:?}", alpha.shape(), beta.shape())));
    }
    let ba = &CMatrix::identity(alpha.cols()) + &(beta * alpha);
    let ab = &CMatrix::identity(alpha.rows()) + &(alpha * beta);
    if !is_invertible(&ba) {
        let s = ba.singular_values();
        return Err(Error::SingularMatrix { smallest: *s.last().unwrap_or(&0.0), largest: *s.first().unwrap_or(&0.0) });
    }
    Ok((ba, inv(&ab)?))
}

/// `Y = 1 + α_{r-1} β_{r-1}` on the top node.
pub fn endo_y(quiver: &Quiver) -> CMatrix {
    quiver.node_endo(quiver.levels())
}

/// Additive parameters `λ_{i+1} = tr(β_{i+1}α_{i+1} - α_iβ_i)/n_{i+1}` and the
/// worst relative off-scalar residual.
#[derive(Clone, Debug)]
pub struct AdditiveResiduals {
    pub lambdas: Vec<Complex>,
    pub residual: f64,
}

fn additive_terms(quiver: &Quiver, k: usize) -> (CMatrix, f64) {
    let ba = &quiver.betas[k] * &quiver.alphas[k];
    let ab = if k == 0 {
        CMatrix::zeros(ba.rows(), ba.cols())
    } else {
        &quiver.alphas[k - 1] * &quiver.betas[k - 1]
    };
    let scale = (ba.frobenius_norm() + ab.frobenius_norm()).max(1.0);
    (&ba - &ab, scale)
}

pub fn additive_residuals(quiver: &Quiver) -> AdditiveResiduals {
    let dims = quiver.dims.as_slice();
    let mut lambdas = Vec::with_capacity(quiver.levels());
    let mut residual = 0.0f64;
    for k in 0..quiver.levels() {
        let (diff, scale) = additive_terms(quiver, k);
        let lambda = diff.trace() / dims[k] as f64;
        residual = residual.max(diff.shift(lambda).frobenius_norm() / scale);
        lambdas.push(lambda);
    }
    AdditiveResiduals { lambdas, residual }
}

/// Worst relative residual of `β_{i+1}α_{i+1} - α_iβ_i = λ_{i+1} I` at the given λ.
pub fn additive_residual_at(quiver: &Quiver, lambdas: &[Complex]) -> Result<f64> {
    if lambdas.len() != quiver.levels() {
        return Err(Error::ChainLengthMismatch { expected: quiver.levels(), found: lambdas.len() });
    }
    Ok((0..quiver.levels())
        .map(|k| {
            let (diff, scale) = additive_terms(quiver, k);
            diff.shift(lambdas[k]).frobenius_norm() / scale
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelStability {
    pub alpha_injective: bool,
    pub beta_surjective: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub levels: Vec<LevelStability>,
    /// Every level has an injective α or a surjective β.
    pub free: bool,
    /// All α injective, or all β surjective.
    pub stable_for_h: bool,
    /// Both properties at every level.
    pub stable_for_full_group: bool,
}

pub fn stability_report(quiver: &Quiver, tol: f64) -> StabilityReport {
    let dims = quiver.dims.as_slice();
    let levels: Vec<LevelStability> = (0..quiver.levels())
        .map(|k| LevelStability {
            alpha_injective: rank(&quiver.alphas[k], tol) == dims[k],
            beta_surjective: rank(&quiver.betas[k], tol) == dims[k],
        })
        .collect();
    let free = levels.iter().all(|l| l.alpha_injective || l.beta_surjective);
    let all_inj = levels.iter().all(|l| l.alpha_injective);
    let all_surj = levels.iter().all(|l| l.beta_surjective);
    let both = levels.iter().all(|l| l.alpha_injective && l.beta_surjective);
    StabilityReport { levels, free, stable_for_h: all_inj || all_surj, stable_for_full_group: both }
}

/// Roots `1, q_{r-1}, q_{r-1}q_{r-2}, …, q_{r-1}…q_1` of the polynomial annihilating `Y`.
fn minpoly_roots(s: &ScalarChain) -> Vec<Complex> {
    s.standard_diagonal()
}

/// `‖P(Y)‖_F / ∏ ‖Y - c_j‖_F` for `P(t) = (t-1)(t-q_{r-1})…(t-q_{r-1}…q_1)`.
pub fn minpoly_residual(quiver: &Quiver, s: &ScalarChain) -> Result<f64> {
    s.check_len(quiver)?;
    let y = endo_y(quiver);
    let mut acc = CMatrix::identity(y.rows());
    let mut denom = 1.0;
    for root in minpoly_roots(s) {
        let factor = y.shift(root);
        denom *= factor.frobenius_norm();
        acc = &acc * &factor;
    }
    let num = acc.frobenius_norm();
    Ok(if denom == 0.0 { num } else { num / denom })
}

/// Worst relative residual of `X_k X = (Q_k - 1) X_k + Q_k X_{k+1}` with
/// `X_k = α_{r-1}…α_{r-k} β_{r-k}…β_{r-1}`, `Q_k = q_{r-1}…q_{r-k}`, `X_r = 0`.
pub fn xk_recursion_residual(quiver: &Quiver, s: &ScalarChain) -> Result<f64> {
    s.check_len(quiver)?;
    let levels = quiver.levels();
    if levels == 0 {
        return Ok(0.0);
    }
    let n = quiver.dims.top();
    // xs[k-1] = X_k for k = 1..=levels, plus X_r = 0 at the end
    let mut xs = Vec::with_capacity(levels + 1);
    let mut left = CMatrix::identity(n);
    let mut right = CMatrix::identity(n);
    for k in 1..=levels {
        let idx = levels - k;
        left = &left * &quiver.alphas[idx];
        right = &quiver.betas[idx] * &right;
        xs.push(&left * &right);
    }
    xs.push(CMatrix::zeros(n, n));
    let x = xs[0].clone();
    let xn = x.frobenius_norm();
    let mut worst = 0.0f64;
    let mut qk = cr(1.0);
    for k in 1..=levels {
        qk *= s.q[levels - k];
        let xk = &xs[k - 1];
        let next = &xs[k];
        let lhs = xk * &x;
        let rhs = &xk.scale(qk - 1.0) + &next.scale(qk);
        let denom = xk.frobenius_norm() * xn + (qk - 1.0).norm() * xk.frobenius_norm() + qk.norm() * next.frobenius_norm();
        let err = (&lhs - &rhs).frobenius_norm();
        if denom > 0.0 {
            worst = worst.max(err / denom);
        } else {
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Decomposition data for one arrow pair between nodes `k` and `k + 1`.
#[derive(Clone, Debug)]
pub struct LevelDecomposition {
    /// `‖(1 - P_{k+1}) α_k V_k‖ / ‖α_k‖`.
    pub alpha_leakage: f64,
    /// `‖(1 - P_k) β_k V_{k+1}‖ / ‖β_k‖`.
    pub beta_leakage: f64,
    /// Distance between the projectors onto `ker(1 + α_{k-1}β_{k-1} - τ_k)^m`
    /// and `ker(1 + β_kα_k - τ_{k+1})^m`, or infinity if the dimensions differ.
    pub kernel_mismatch: f64,
    /// Singular values of the restricted `α_k: V_k → V_{k+1}` and `β_k: V_{k+1} → V_k`.
    pub alpha_restricted_sv: Vec<f64>,
    pub beta_restricted_sv: Vec<f64>,
    /// Parameter at node `k + 1`; the restricted maps must be isomorphisms when it is not 1.
    pub upper_parameter: Complex,
    pub isomorphism_expected: bool,
    /// `σ_min > 1e-6 σ_max` for both restricted maps (and square).
    pub isomorphism: bool,
}

/// Subquiver attached to one eigenvalue `τ` of `Y`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub tau: Complex,
    /// Per-node parameters `τ / (q_{k+1} … q_{r-1})`.
    pub node_parameters: Vec<Complex>,
    /// Orthonormal bases (columns) of the generalized eigenspaces, one per node.
    pub bases: Vec<CMatrix>,
    pub levels: Vec<LevelDecomposition>,
}

impl EigenDecomposition {
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(CMatrix::cols).collect()
    }

    pub fn max_leakage(&self) -> f64 {
        self.levels.iter().map(|l| l.alpha_leakage.max(l.beta_leakage)).fold(0.0, f64::max)
    }

    pub fn max_kernel_mismatch(&self) -> f64 {
        self.levels.iter().map(|l| l.kernel_mismatch).fold(0.0, f64::max)
    }

    /// Every level expected to be an isomorphism is one.
    pub fn isomorphisms_hold(&self) -> bool {
        self.levels.iter().all(|l| !l.isomorphism_expected || l.isomorphism)
    }
}

const ISO_RATIO: f64 = 1e-6;

fn leakage(map: &CMatrix, source: &CMatrix, target: &CMatrix) -> f64 {
    let norm = map.frobenius_norm();
    if norm == 0.0 || source.cols() == 0 {
        return 0.0;
    }
    let image = map * source;
    let proj = projector(target);
    (&image - &(&proj * &image)).frobenius_norm() / norm
}

fn restricted_singular_values(map: &CMatrix, source: &CMatrix, target: &CMatrix) -> Vec<f64> {
    if source.cols() == 0 || target.cols() == 0 {
        return Vec::new();
    }
    (&(&target.adjoint() * map) * source).singular_values()
}

fn is_iso(sv: &[f64], dim_src: usize, dim_tgt: usize) -> bool {
    if dim_src != dim_tgt {
        return false;
    }
    if dim_src == 0 {
        return true;
    }
    let hi = sv[0];
    let lo = sv[sv.len() - 1];
    hi > 0.0 && lo > ISO_RATIO * hi
}

fn subspace_mismatch(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.cols() != b.cols() {
        return f64::INFINITY;
    }
    if a.cols() == 0 {
        return 0.0;
    }
    (&projector(a) - &projector(b)).frobenius_norm()
}

/// Splits the quiver along the generalized eigenspaces attached to `τ` at the top node.
pub fn eigenspace_decompose(quiver: &Quiver, s: &ScalarChain, tau: Complex, tol: f64) -> Result<EigenDecomposition> {
    let worst = max_relative_residual(quiver, s)?;
    if !(worst <= tol) {
        return Err(Error::NotASolution { residual: worst, tolerance: tol });
    }
    let r = quiver.dims.len();
    let mut params = vec![tau; r];
    for k in (0..r - 1).rev() {
        params[k] = params[k + 1] / s.q[k];
    }
    let bases: Vec<CMatrix> = (0..r).map(|k| generalized_eigenspace(&quiver.node_endo(k), params[k], tol)).collect();
    let mut levels = Vec::with_capacity(r - 1);
    for k in 0..r - 1 {
        let alpha = &quiver.alphas[k];
        let beta = &quiver.betas[k];
        let other = generalized_eigenspace(&quiver.one_plus_beta_alpha(k), params[k + 1], tol);
        let alpha_sv = restricted_singular_values(alpha, &bases[k], &bases[k + 1]);
        let beta_sv = restricted_singular_values(beta, &bases[k + 1], &bases[k]);
        let upper = params[k + 1];
        let expected = (upper - 1.0).norm() > CLUSTER_TOL * upper.norm().max(1.0);
        let (dk, dk1) = (bases[k].cols(), bases[k + 1].cols());
        levels.push(LevelDecomposition {
            alpha_leakage: leakage(alpha, &bases[k], &bases[k + 1]),
            beta_leakage: leakage(beta, &bases[k + 1], &bases[k]),
            kernel_mismatch: subspace_mismatch(&bases[k], &other),
            isomorphism: is_iso(&alpha_sv, dk, dk1) && is_iso(&beta_sv, dk1, dk),
            alpha_restricted_sv: alpha_sv,
            beta_restricted_sv: beta_sv,
            upper_parameter: upper,
            isomorphism_expected: expected,
        });
    }
    Ok(EigenDecomposition { tau, node_parameters: params, bases, levels })
}

/// Decomposes along every eigenvalue cluster of `Y`.
pub fn full_decomposition(quiver: &Quiver, s: &ScalarChain, tol: f64) -> Result<Vec<EigenDecomposition>> {
    eigenvalue_clusters(&endo_y(quiver), CLUSTER_TOL)
        .into_iter()
        .map(|cl| eigenspace_decompose(quiver, s, cl.center, tol))
        .collect()
}

/// How the toric products `μν = p` are split into `ν` and `μ`.
#[derive(Clone, Debug)]
pub enum ToricSplit {
    /// `ν = μ = √p` with the principal square root.
    Principal,
    /// `ν = μ = √p` with the branch cut on the positive real axis (argument in `[0, 2π)`).
    PositiveCut,
    /// Explicit `ν` per level (`nus[k][j]` for `α_{k+1}`), with `μ = p / ν`.
    Nu(Vec<Vec<Complex>>),
}

/// Toric products `p[k][j] = q_{j+1} ⋯ q_{k+1} - 1` for `α_{k+1}`, `j ≤ k`.
pub fn toric_products(s: &ScalarChain) -> Vec<Vec<Complex>> {
    (0..s.len()).map(|k| (0..=k).map(|j| s.product(j, k) - 1.0).collect()).collect()
}

/// Square root with argument in `[0, π)`, i.e. cut along the positive real axis.
pub fn sqrt_positive_cut(z: Complex) -> Complex {
    if z.norm() == 0.0 {
        return cr(0.0);
    }
    let mut arg = z.arg();
    if arg < 0.0 {
        arg += 2.0 * std::f64::consts::PI;
    }
    Complex::from_polar(z.norm().sqrt(), arg / 2.0)
}

/// Full-flag toric quiver: `α_k`, `β_k` diagonal with `μ_j^k ν_j^k = q_j ⋯ q_k - 1`.
pub fn gen_toric(n: usize, s: &ScalarChain, split: &ToricSplit) -> Result<Quiver> {
    if n < 1 {
        return Err(Error::InvalidScalars("n must be positive".into()));
    }
    if s.len() != n - 1 {
        return Err(Error::ChainLengthMismatch { expected: n - 1, found: s.len() });
    }
    if s.q.iter().any(|z| z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidScalars("scalars must be finite and nonzero".into()));
    }
    let products = toric_products(s);
    let dims = DimensionVector::full_flag(n);
    let mut alphas = Vec::with_capacity(n - 1);
    let mut betas = Vec::with_capacity(n - 1);
    for (k, row) in products.iter().enumerate() {
        let size = k + 1;
        let mut alpha = CMatrix::zeros(size + 1, size);
        let mut beta = CMatrix::zeros(size, size + 1);
        for (j, &p) in row.iter().enumerate() {
            let (nu, mu) = match split {
                ToricSplit::Principal => (p.sqrt(), p.sqrt()),
                ToricSplit::PositiveCut => (sqrt_positive_cut(p), sqrt_positive_cut(p)),
                ToricSplit::Nu(nus) => {
                    let nu = *nus.get(k).and_then(|v| v.get(j)).ok_or_else(|| {
                        Error::InvalidScalars(format!("missing nu for alpha_{} entry {}", k + 1, j + 1))
                    })?;
                    if nu.norm() == 0.0 {
                        if p.norm() != 0.0 {
                            return Err(Error::InvalidScalars(format!(
                                "nu for alpha_{} entry {} is zero but the product is not",
                                k + 1,
                                j + 1
                            )));
                        }
                        (nu, cr(0.0))
                    } else {
                        (nu, p / nu)
                    }
                }
            };
            alpha[(j, j)] = nu;
            beta[(j, j)] = mu;
        }
        alphas.push(alpha);
        betas.push(beta);
    }
    Quiver::new(dims, alphas, betas).map_err(|e| Error::InvalidScalars(e.to_string()))
}

/// Options for `gen_random_with`.
#[derive(Clone, Copy, Debug)]
pub struct RandomOptions {
    /// Off-diagonal entries of `Y` have real and imaginary parts in `[-bound, bound]`.
    pub entry_bound: f64,
    /// Diagonal of `Y` forced to 1, so every `q_i = 1`.
    pub unipotent: bool,
}

impl Default for RandomOptions {
    fn default() -> Self {
        RandomOptions { entry_bound: 10.0, unipotent: false }
    }
}

/// Random full-flag solution in standard form, built from a random `Y ∈ B_1`.
pub fn gen_random(dims: &DimensionVector, seed: u64) -> Result<(Quiver, ScalarChain)> {
    gen_random_with(dims, seed, RandomOptions::default())
}

pub fn gen_random_with(dims: &DimensionVector, seed: u64, opts: RandomOptions) -> Result<(Quiver, ScalarChain)> {
    if !dims.is_full_flag() {
        return Err(Error::InvalidQuiver("random generation needs a full flag".into()));
    }
    let n = dims.top();
    let mut rng = random::rng(seed);
    let y = CMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => cr(0.0),
        std::cmp::Ordering::Equal if i == 0 || opts.unipotent => cr(1.0),
        std::cmp::Ordering::Equal => random::complex_annulus(&mut rng, 0.5, 2.0),
        std::cmp::Ordering::Less => random::complex_in_box(&mut rng, opts.entry_bound),
    });
    let borel = BorelElement::b1(y)?;
    reconstruct_from_borel(&borel, cxmat::DEFAULT_TOL)
}
