//! Classical-quantum states and the entropic quantities used to analyse
//! privacy amplification against quantum side information.
//!
//! Bipartite operators are ordered `A (x) B`: row index `a * d_b + b`. In a
//! [`CqState`] the classical register plays the role of `A` and the quantum
//! side information (`E` or `B`) is stored as one block per classical value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash_families::{HashFamily, HashFamilyDescriptor, DEFAULT_AUDIT_BUDGET};
use crate::qmat::{
    func_from_eig, herm_eig, mat_func, partial_trace, tensor, trace_norm, ComplexMatrix,
    HermEig, HermitianOperator, MatFunc, Subsystem, C64, SUPPORT_CUTOFF,
};

/// Blocks may dip this far below zero and still count as positive.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Slack on "trace at most one".
pub const TRACE_TOL: f64 = 1e-10;
/// Default certified duality gap for [`hmin_cq`].
pub const DEFAULT_HMIN_TOL: f64 = 1e-9;
/// Commutator norm below which blocks count as commuting.
pub const COMMUTING_TOL: f64 = 1e-10;

fn ensure_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

fn ensure_subnormalized(rho: &HermitianOperator) -> Result<()> {
    let t = rho.trace();
    if t > 1.0 + TRACE_TOL {
        return Err(Error::TraceTooLarge(t));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// states

/// `rho_XE = sum_x |x><x| (x) rho_E^[x]` with subnormalized positive blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqState {
    labels: Vec<String>,
    blocks: Vec<HermitianOperator>,
}

impl CqState {
    pub fn new(labels: Vec<String>, blocks: Vec<HermitianOperator>) -> Result<Self> {
        if labels.is_empty() || labels.len() != blocks.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} blocks",
                labels.len(),
                blocks.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if !labels.iter().all(|l| seen.insert(l)) {
            return Err(Error::Parameter("labels must be distinct".into()));
        }
        let d = blocks[0].dim();
        for b in &blocks {
            ensure_dim(b.dim(), d, "block dimension")?;
            let low = b.lambda_min()?;
            if low < -POSITIVITY_TOL {
                return Err(Error::NotPositive(low));
            }
        }
        let state = Self { labels, blocks };
        let t = state.trace();
        if t > 1.0 + TRACE_TOL {
            return Err(Error::TraceTooLarge(t));
        }
        if !(t > 0.0) {
            return Err(Error::Parameter("state has zero trace".into()));
        }
        Ok(state)
    }

    /// Labels `"0"`, `"1"`, ... in block order.
    pub fn from_blocks(blocks: Vec<HermitianOperator>) -> Result<Self> {
        let labels = (0..blocks.len()).map(|i| i.to_string()).collect();
        Self::new(labels, blocks)
    }

    /// Diagonal (classical) side information: `probs[x][e] = P(x, e)`.
    pub fn classical(probs: &[Vec<f64>]) -> Result<Self> {
        Self::from_blocks(probs.iter().map(|row| HermitianOperator::from_diag(row)).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn blocks(&self) -> &[HermitianOperator] {
        &self.blocks
    }

    /// Number of classical values (`d_A`).
    pub fn n_labels(&self) -> usize {
        self.blocks.len()
    }

    /// Dimension of the quantum side information.
    pub fn dim_e(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// `rho_E = sum_x rho_E^[x]`.
    pub fn marginal(&self) -> HermitianOperator {
        let mut m = HermitianOperator::zeros(self.dim_e());
        for b in &self.blocks {
            m = &m + b;
        }
        m
    }

    /// Distribution of the classical register.
    pub fn probabilities(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace()).collect()
    }

    /// The full block-diagonal operator on `X (x) E`.
    pub fn to_operator(&self) -> HermitianOperator {
        let (n, d) = (self.n_labels(), self.dim_e());
        let mut m = ComplexMatrix::zeros(n * d, n * d);
        for (x, b) in self.blocks.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    m[(x * d + i, x * d + j)] = b.matrix()[(i, j)];
                }
            }
        }
        HermitianOperator::symmetrize(&m)
    }

    /// Same blocks under new labels, e.g. after a deterministic relabeling.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Result<Self> {
        let n_out = (0..self.n_labels()).map(&f).max().unwrap_or(0) + 1;
        let mut blocks = vec![HermitianOperator::zeros(self.dim_e()); n_out];
        for (x, b) in self.blocks.iter().enumerate() {
            blocks[f(x)] = &blocks[f(x)] + b;
        }
        Self::from_blocks(blocks)
    }

    /// Applies `V . V^dagger` to every block.
    pub fn map_blocks(&self, v: &ComplexMatrix) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.conjugate_by(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            labels: self.labels.clone(),
            blocks,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: CqState = serde_json::from_str(s)?;
        Self::new(raw.labels, raw.blocks)
    }
}

/// The state after hashing: blocks `rho_E^[f,z] = sum_{x: f(x) = z} rho_E^[x]`
/// for every family member `f` (uniformly weighted) and every output `z`.
#[derive(Clone, Debug)]
pub struct HashedState {
    desc: HashFamilyDescriptor,
    blocks: Vec<Vec<HermitianOperator>>,
    marginal: HermitianOperator,
}

impl HashedState {
    pub fn descriptor(&self) -> &HashFamilyDescriptor {
        &self.desc
    }

    pub fn n_functions(&self) -> usize {
        self.blocks.len()
    }

    pub fn output_values(&self) -> usize {
        1 << self.desc.l()
    }

    /// Blocks for family member `f`, indexed by output value.
    pub fn function_blocks(&self, f: usize) -> &[HermitianOperator] {
        &self.blocks[f]
    }

    /// `rho_ZE` for the fixed member `f`.
    pub fn function_state(&self, f: usize) -> Result<CqState> {
        CqState::from_blocks(self.blocks[f].clone())
    }

    pub fn marginal(&self) -> &HermitianOperator {
        &self.marginal
    }

    /// Total trace of `rho_FZE`.
    pub fn trace(&self) -> f64 {
        let p = 1.0 / self.n_functions() as f64;
        self.blocks
            .iter()
            .map(|bs| p * bs.iter().map(|b| b.trace()).sum::<f64>())
            .sum()
    }
}

/// Pushes a CQ state through every member of a hash family. Label index `i`
/// is the input value `x = i`.
pub fn apply_hash(rho: &CqState, desc: &HashFamilyDescriptor) -> Result<HashedState> {
    apply_hash_with_budget(rho, desc, DEFAULT_AUDIT_BUDGET)
}

/// [`apply_hash`] with an explicit cap on `|F| * |X|` hash evaluations.
pub fn apply_hash_with_budget(
    rho: &CqState,
    desc: &HashFamilyDescriptor,
    budget: u64,
) -> Result<HashedState> {
    let n_labels = rho.n_labels();
    if desc.n() >= 64 || (n_labels as u64) > 1u64 << desc.n() {
        return Err(Error::Parameter(format!(
            "{n_labels} labels do not fit in {} input bits",
            desc.n()
        )));
    }
    let seed_bits = desc.seed_bits();
    let needed = if seed_bits >= 64 {
        f64::INFINITY
    } else {
        (1u64 << seed_bits) as f64 * n_labels as f64
    };
    if needed > budget as f64 {
        return Err(Error::AuditBudget {
            needed,
            budget: budget as f64,
        });
    }
    let family = HashFamily::new(desc.clone())?;
    let d = rho.dim_e();
    let outputs = 1usize << desc.l();
    let mut blocks = Vec::with_capacity(1 << seed_bits);
    for seed in 0..1u64 << seed_bits {
        let mut per_z = vec![HermitianOperator::zeros(d); outputs];
        for (x, b) in rho.blocks().iter().enumerate() {
            let z = family.hash_u64(x as u64, seed)? as usize;
            per_z[z] = &per_z[z] + b;
        }
        blocks.push(per_z);
    }
    Ok(HashedState {
        desc: desc.clone(),
        blocks,
        marginal: rho.marginal(),
    })
}

/// `|phi>` on a composite space with the given factor dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureStateVector {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

impl PureStateVector {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        if dims.iter().product::<usize>() != amplitudes.len() {
            return Err(Error::Dimension(format!(
                "dims {dims:?} for {} amplitudes",
                amplitudes.len()
            )));
        }
        Ok(Self { amplitudes, dims })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Refines the factorization, e.g. `[d_a * d_b, r]` into `[d_a, d_b, r]`.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        Self::new(self.amplitudes.clone(), dims)
    }

    /// `|phi><phi|`.
    pub fn density(&self) -> HermitianOperator {
        HermitianOperator::projector(&self.amplitudes)
    }

    /// Reduced state on the listed factors (in ascending order).
    pub fn reduced(&self, keep: &[usize]) -> Result<HermitianOperator> {
        if keep.iter().any(|&k| k >= self.dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Dimension(format!("cannot keep factors {keep:?} of {:?}", self.dims)));
        }
        let traced: Vec<usize> = (0..self.dims.len()).filter(|i| !keep.contains(i)).collect();
        let dk: usize = keep.iter().map(|&i| self.dims[i]).product();
        let dt: usize = traced.iter().map(|&i| self.dims[i]).product();
        // reorder amplitudes into a dk x dt matrix psi, then rho = psi psi^dagger
        let strides: Vec<usize> = (0..self.dims.len())
            .map(|i| self.dims[i + 1..].iter().product())
            .collect();
        let index = |kept: usize, tr: usize| {
            let mut idx = 0;
            let mut rem = kept;
            for &i in keep.iter().rev() {
                idx += (rem % self.dims[i]) * strides[i];
                rem /= self.dims[i];
            }
            let mut rem = tr;
            for &i in traced.iter().rev() {
                idx += (rem % self.dims[i]) * strides[i];
                rem /= self.dims[i];
            }
            idx
        };
        let psi = ComplexMatrix::from_fn(dk, dt, |i, j| self.amplitudes[index(i, j)]);
        Ok(HermitianOperator::symmetrize(&(&psi * &psi.dagger())))
    }

    /// `(op (x) I) |phi>` with `op` acting on factor `factor`.
    pub fn apply_local(&self, op: &ComplexMatrix, factor: usize) -> Result<Self> {
        let d = self.dims[factor];
        if op.rows() != d || op.cols() != d {
            return Err(Error::Dimension(format!("operator of size {} on factor of dim {d}", op.rows())));
        }
        let inner: usize = self.dims[factor + 1..].iter().product();
        let outer: usize = self.dims[..factor].iter().product();
        let mut out = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        for o in 0..outer {
            for i in 0..d {
                for j in 0..d {
                    let c = op[(i, j)];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for r in 0..inner {
                        out[(o * d + i) * inner + r] += c * self.amplitudes[(o * d + j) * inner + r];
                    }
                }
            }
        }
        Self::new(out, self.dims.clone())
    }
}

/// `|phi> = sum_i sqrt(lambda_i) |v_i> (x) |i>` over the support of `rho`;
/// factors are `sys_dims` followed by a purifying factor of dimension `rank`.
pub fn purify(rho: &HermitianOperator, sys_dims: &[usize]) -> Result<PureStateVector> {
    let d = rho.dim();
    ensure_dim(sys_dims.iter().product(), d, "purify factor dimensions")?;
    let e = herm_eig(rho)?;
    if let Some(&low) = e.values.first() {
        if low < -crate::qmat::NEGATIVE_TOL {
            return Err(Error::NotPositive(low));
        }
    }
    let cut = e.cutoff();
    let support: Vec<usize> = (0..d).filter(|&k| e.values[k] > cut).collect();
    let r = support.len().max(1);
    let mut amps = vec![C64::new(0.0, 0.0); d * r];
    for (c, &k) in support.iter().enumerate() {
        let s = e.values[k].sqrt();
        for i in 0..d {
            amps[i * r + c] = e.vectors[(i, k)] * s;
        }
    }
    let mut dims = sys_dims.to_vec();
    dims.push(r);
    PureStateVector::new(amps, dims)
}

// ---------------------------------------------------------------------------
// distances

/// `0.5 * ||rho - tau||_1`.
pub fn trace_distance(rho: &HermitianOperator, tau: &HermitianOperator) -> Result<f64> {
    ensure_dim(rho.dim(), tau.dim(), "trace distance")?;
    Ok(0.5 * trace_norm((rho - tau).matrix())?)
}

/// `tr |sqrt(rho) sqrt(tau)| = tr sqrt(sqrt(tau) rho sqrt(tau))`.
fn root_fidelity(rho: &HermitianOperator, tau: &HermitianOperator) -> Result<f64> {
    let st = mat_func(tau, MatFunc::Sqrt)?;
    let inner = rho.conjugate_by(st.matrix())?;
    let e = herm_eig(&inner)?;
    Ok(e.values.iter().map(|v| v.max(0.0).sqrt()).sum())
}

fn generalized_fidelity_from(root: f64, tr_rho: f64, tr_tau: f64) -> f64 {
    root + ((1.0 - tr_rho).max(0.0) * (1.0 - tr_tau).max(0.0)).sqrt()
}

fn purified_from_fidelity(f: f64) -> f64 {
    (1.0 - f.min(1.0).powi(2)).max(0.0).sqrt()
}

/// `tr |sqrt(rho) sqrt(tau)| + sqrt((1 - tr rho)(1 - tr tau))`.
pub fn generalized_fidelity(rho: &HermitianOperator, tau: &HermitianOperator) -> Result<f64> {
    ensure_dim(rho.dim(), tau.dim(), "fidelity")?;
    ensure_subnormalized(rho)?;
    ensure_subnormalized(tau)?;
    let root = root_fidelity(rho, tau)?;
    Ok(generalized_fidelity_from(root, rho.trace(), tau.trace()))
}

/// `sqrt(1 - F^2)` with the generalized fidelity `F`.
pub fn purified_distance(rho: &HermitianOperator, tau: &HermitianOperator) -> Result<f64> {
    Ok(purified_from_fidelity(generalized_fidelity(rho, tau)?))
}

impl CqState {
    /// Trace distance between two CQ states with the same labels, blockwise.
    pub fn trace_distance(&self, other: &CqState) -> Result<f64> {
        self.check_compatible(other)?;
        let mut s = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            s += trace_norm((a - b).matrix())?;
        }
        Ok(0.5 * s)
    }

    /// Purified distance between two CQ states with the same labels, blockwise.
    pub fn purified_distance(&self, other: &CqState) -> Result<f64> {
        self.check_compatible(other)?;
        let mut root = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            root += root_fidelity(a, b)?;
        }
        Ok(purified_from_fidelity(generalized_fidelity_from(
            root,
            self.trace(),
            other.trace(),
        )))
    }

    fn check_compatible(&self, other: &CqState) -> Result<()> {
        ensure_dim(self.n_labels(), other.n_labels(), "label count")?;
        ensure_dim(self.dim_e(), other.dim_e(), "side-information dimension")
    }
}

// ---------------------------------------------------------------------------
// collision entropy and max-relative entropy

/// `tr(P_sigma^perp rho)` relative to `tr rho`: how much of `rho` lies
/// outside the support of `sigma`.
fn support_leak(rho: &HermitianOperator, sigma_eig: &HermEig) -> f64 {
    let cut = sigma_eig.cutoff();
    let mut leak = 0.0;
    for (k, &v) in sigma_eig.values.iter().enumerate() {
        if v.abs() <= cut {
            leak += rho.expectation(&sigma_eig.vector(k));
        }
    }
    leak
}

fn support_contains(rho: &HermitianOperator, sigma_eig: &HermEig) -> bool {
    let scale = rho.trace().abs().max(rho.matrix().max_abs());
    support_leak(rho, sigma_eig) <= 1e-9 * scale.max(1e-300)
}

/// `Gamma_C(rho_AB | sigma_B) = tr (rho_AB (I (x) sigma_B^{-1/2}))^2`.
pub fn collision_gamma(
    rho_ab: &HermitianOperator,
    dims: (usize, usize),
    sigma_b: &HermitianOperator,
) -> Result<f64> {
    ensure_dim(dims.1, sigma_b.dim(), "sigma dimension")?;
    let rho_b = partial_trace(rho_ab, dims, Subsystem::B)?;
    let e = herm_eig(sigma_b)?;
    if !support_contains(&rho_b, &e) {
        return Err(Error::SupportTooSmall);
    }
    let s = func_from_eig(&e, MatFunc::InvSqrtSupport)?;
    let w = &ComplexMatrix::identity(dims.0);
    let m = rho_ab.matrix() * &tensor(w, s.matrix());
    Ok((&m * &m).trace().re)
}

/// `sum_x tr(rho^[x] s rho^[x] s)` with `s = sigma^{-1/2}` on its support.
pub fn collision_gamma_cq(rho: &CqState, sigma: &HermitianOperator) -> Result<f64> {
    ensure_dim(rho.dim_e(), sigma.dim(), "sigma dimension")?;
    let e = herm_eig(sigma)?;
    if !support_contains(&rho.marginal(), &e) {
        return Err(Error::SupportTooSmall);
    }
    let s = func_from_eig(&e, MatFunc::InvSqrtSupport)?;
    Ok(rho.blocks().iter().map(|b| sandwich_trace(b, b, &s)).sum())
}

/// `Gamma_C(rho_FZE | rho_F (x) tau_E) = sum_f p_f sum_z tr(rho^[f,z] s rho^[f,z] s)`.
pub fn collision_gamma_hashed(rho: &HashedState, tau: &HermitianOperator) -> Result<f64> {
    ensure_dim(rho.marginal.dim(), tau.dim(), "tau dimension")?;
    let e = herm_eig(tau)?;
    if !support_contains(&rho.marginal, &e) {
        return Err(Error::SupportTooSmall);
    }
    let s = func_from_eig(&e, MatFunc::InvSqrtSupport)?;
    let p = 1.0 / rho.n_functions() as f64;
    Ok(rho
        .blocks
        .iter()
        .map(|bs| p * bs.iter().map(|b| sandwich_trace(b, b, &s)).sum::<f64>())
        .sum())
}

/// `tr(a s b s)`.
pub fn sandwich_trace(a: &HermitianOperator, b: &HermitianOperator, s: &HermitianOperator) -> f64 {
    let left = a.matrix() * s.matrix();
    let right = b.matrix() * s.matrix();
    (&left * &right).trace().re
}

/// `D_max(rho || tau) = log2 || tau^{-1/2} rho tau^{-1/2} ||`, or `+inf`
/// when `rho` is not supported inside `tau`.
pub fn dmax(rho: &HermitianOperator, tau: &HermitianOperator) -> Result<f64> {
    ensure_dim(rho.dim(), tau.dim(), "dmax")?;
    let e = herm_eig(tau)?;
    if !support_contains(rho, &e) {
        return Ok(f64::INFINITY);
    }
    let s = func_from_eig(&e, MatFunc::InvSqrtSupport)?;
    let m = rho.conjugate_by(s.matrix())?;
    Ok(m.lambda_max()?.log2())
}

/// `-D_max(rho_AB || I_A (x) rho_B)`.
pub fn hmin_alt(rho_ab: &HermitianOperator, dims: (usize, usize)) -> Result<f64> {
    let rho_b = partial_trace(rho_ab, dims, Subsystem::B)?;
    let id_rho_b = HermitianOperator::symmetrize(&tensor(
        &ComplexMatrix::identity(dims.0),
        rho_b.matrix(),
    ));
    Ok(-dmax(rho_ab, &id_rho_b)?)
}

/// [`hmin_alt`] for a CQ state, blockwise.
pub fn hmin_alt_cq(rho: &CqState) -> Result<f64> {
    let s = mat_func(&rho.marginal(), MatFunc::InvSqrtSupport)?;
    let mut worst = f64::NEG_INFINITY;
    for b in rho.blocks() {
        worst = worst.max(b.conjugate_by(s.matrix())?.lambda_max()?);
    }
    Ok(-worst.log2())
}

/// `log2 || tr_A Pi_rho ||`, the closed form of `max_sigma log tr(Pi_rho (I (x) sigma))`.
pub fn hmax_alt(rho_ab: &HermitianOperator, dims: (usize, usize)) -> Result<f64> {
    let pi = mat_func(rho_ab, MatFunc::SupportProjector)?;
    let pb = partial_trace(&pi, dims, Subsystem::B)?;
    Ok(pb.lambda_max()?.log2())
}

/// `(I (x) V) rho (I (x) V^dagger)` for `side = B`, `(V (x) I) rho (V^dagger (x) I)`
/// for `side = A`. `V` must be an isometry.
pub fn apply_isometry(
    rho: &HermitianOperator,
    dims: (usize, usize),
    v: &ComplexMatrix,
    side: Subsystem,
) -> Result<HermitianOperator> {
    ensure_dim(dims.0 * dims.1, rho.dim(), "state dimension")?;
    check_isometry(v)?;
    let full = match side {
        Subsystem::A => {
            ensure_dim(v.cols(), dims.0, "isometry input")?;
            tensor(v, &ComplexMatrix::identity(dims.1))
        }
        Subsystem::B => {
            ensure_dim(v.cols(), dims.1, "isometry input")?;
            tensor(&ComplexMatrix::identity(dims.0), v)
        }
    };
    rho.conjugate_by(&full)
}

/// [`apply_isometry`] on the side-information space of a CQ state.
pub fn apply_isometry_cq(rho: &CqState, v: &ComplexMatrix) -> Result<CqState> {
    check_isometry(v)?;
    ensure_dim(v.cols(), rho.dim_e(), "isometry input")?;
    rho.map_blocks(v)
}

fn check_isometry(v: &ComplexMatrix) -> Result<()> {
    let dev = (&v.dagger() * v).max_abs_diff(&ComplexMatrix::identity(v.cols()));
    if !(dev <= 1e-10) {
        return Err(Error::NotIsometry(dev));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// distance from uniform

/// How the side-information operator in the distance from uniform is chosen.
#[derive(Clone, Debug)]
pub enum SigmaMode {
    /// A caller-supplied operator with `tr sigma = tr rho_B`.
    Fixed(HermitianOperator),
    /// `sigma = rho_B`.
    Marginal,
    /// Local search over `sigma`, starting at the marginal; the result is an
    /// upper bound on the minimum, not a certified value.
    Search,
}

/// `0.5 * sum_x || rho^[x] - sigma / d_A ||_1`.
fn du_blocks(blocks: &[HermitianOperator], sigma: &HermitianOperator, d_a: f64) -> Result<f64> {
    let w = sigma.scale(1.0 / d_a);
    let mut s = 0.0;
    for b in blocks {
        s += trace_norm((b - &w).matrix())?;
    }
    Ok(0.5 * s)
}

fn check_fixed_trace(sigma: &HermitianOperator, rho_b: &HermitianOperator) -> Result<()> {
    ensure_dim(sigma.dim(), rho_b.dim(), "sigma dimension")?;
    if (sigma.trace() - rho_b.trace()).abs() > 1e-9 {
        return Err(Error::TraceMismatch {
            sigma: sigma.trace(),
            rho: rho_b.trace(),
        });
    }
    Ok(())
}

/// Distance from uniform of the classical register given the side information.
pub fn dist_uniform(rho: &CqState, mode: &SigmaMode) -> Result<f64> {
    let rho_b = rho.marginal();
    let d_a = rho.n_labels() as f64;
    match mode {
        SigmaMode::Fixed(sigma) => {
            check_fixed_trace(sigma, &rho_b)?;
            du_blocks(rho.blocks(), sigma, d_a)
        }
        SigmaMode::Marginal => du_blocks(rho.blocks(), &rho_b, d_a),
        SigmaMode::Search => search_sigma(rho.blocks(), &rho_b, d_a),
    }
}

/// Distance from uniform of the hash output given the function and the side
/// information: `0.5 * sum_f p_f sum_z || rho^[f,z] - 2^-l sigma ||_1`.
/// In search mode `sigma` is optimized separately for every `f`, which is
/// optimal for operators block-diagonal in `F`.
pub fn dist_uniform_hashed(rho: &HashedState, mode: &SigmaMode) -> Result<f64> {
    let d_z = rho.output_values() as f64;
    let p = 1.0 / rho.n_functions() as f64;
    let mut total = 0.0;
    for bs in &rho.blocks {
        total += p * match mode {
            SigmaMode::Fixed(sigma) => {
                check_fixed_trace(sigma, &rho.marginal)?;
                du_blocks(bs, sigma, d_z)?
            }
            SigmaMode::Marginal => du_blocks(bs, &rho.marginal, d_z)?,
            SigmaMode::Search => search_sigma(bs, &rho.marginal, d_z)?,
        };
    }
    Ok(total)
}

/// Nelder-Mead over `sigma = t * L L^dagger / tr(L L^dagger)` with `L` lower
/// triangular, started from the marginal. Never worse than the marginal.
fn search_sigma(blocks: &[HermitianOperator], rho_b: &HermitianOperator, d_a: f64) -> Result<f64> {
    let baseline = du_blocks(blocks, rho_b, d_a)?;
    let d = rho_b.dim();
    let t = rho_b.trace();
    if d == 1 || t <= 0.0 {
        return Ok(baseline);
    }
    // parameters: real diagonal, then re/im of the strict lower triangle
    let to_sigma = |p: &[f64]| -> HermitianOperator {
        let mut l = ComplexMatrix::zeros(d, d);
        let mut k = d;
        for i in 0..d {
            l[(i, i)] = C64::new(p[i], 0.0);
            for j in 0..i {
                l[(i, j)] = C64::new(p[k], p[k + 1]);
                k += 2;
            }
        }
        let g = &l * &l.dagger();
        let tr = g.trace().re;
        HermitianOperator::symmetrize(&g.scale(t / tr.max(1e-300)))
    };
    // start from the Cholesky factor of the (slightly regularized) marginal
    let reg = &rho_b.scale(1.0 / t) + &HermitianOperator::identity(d).scale(1e-6);
    let chol = cholesky_c(reg.matrix()).ok_or(Error::NotPositive(rho_b.lambda_min()?))?;
    let mut start = vec![0.0; d * d];
    let mut k = d;
    for i in 0..d {
        start[i] = chol[(i, i)].re;
        for j in 0..i {
            start[k] = chol[(i, j)].re;
            start[k + 1] = chol[(i, j)].im;
            k += 2;
        }
    }
    let objective = |p: &[f64]| du_blocks(blocks, &to_sigma(p), d_a).unwrap_or(f64::INFINITY);
    let best = nelder_mead(&objective, &start, 0.1, 2000, 1e-12);
    Ok(baseline.min(objective(&best)))
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-8 { step * v[i].abs() } else { step * 0.1 };
        simplex.push(v);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    simplex[best].clone()
}

// ---------------------------------------------------------------------------
// min-entropy of CQ states

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HminMethod {
    /// Pairwise commuting blocks: exact formula in a common eigenbasis.
    Commuting,
    /// Two labels: the Helstrom closed form.
    Helstrom,
    /// Interior-point refinement of the dual program, certified by a
    /// measurement built from the barrier's central path.
    Barrier,
}

/// Certified bounds on the guessing probability `p` and the corresponding
/// min-entropy.
#[derive(Clone, Debug)]
pub struct MinEntropy {
    /// `-log2(p_upper)`; a certified lower bound on the min-entropy.
    pub h: f64,
    /// `-log2(p_lower)`; a certified upper bound on the min-entropy.
    pub h_upper: f64,
    /// Guessing probability achieved by an explicit measurement.
    pub p_lower: f64,
    /// Trace of a feasible dual operator.
    pub p_upper: f64,
    /// The feasible dual operator normalized to unit trace; `rho^[x] <= p_upper * sigma`.
    pub sigma: HermitianOperator,
    /// `p_upper - p_lower`.
    pub gap: f64,
    pub method: HminMethod,
}

impl MinEntropy {
    /// The feasible dual operator `p_upper * sigma`.
    pub fn sigma_unnormalized(&self) -> HermitianOperator {
        self.sigma.scale(self.p_upper)
    }
}

/// Min-entropy of the classical register given the side information, by
/// the method best suited to the blocks, with certified duality gap `<= tol`.
pub fn hmin_cq(rho: &CqState, tol: f64) -> Result<MinEntropy> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    if blocks_commute(rho.blocks()) {
        if let Some(r) = solve_commuting(rho.blocks())? {
            return Ok(r);
        }
    }
    if rho.n_labels() == 2 {
        let r = solve_helstrom(rho.blocks())?;
        if r.gap <= tol {
            return Ok(r);
        }
    }
    solve_barrier(rho.blocks(), tol)
}

/// [`hmin_cq`] with a forced method, for cross-validation.
pub fn hmin_cq_with(rho: &CqState, tol: f64, method: HminMethod) -> Result<MinEntropy> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    match method {
        HminMethod::Commuting => {
            if !blocks_commute(rho.blocks()) {
                return Err(Error::Parameter("blocks do not commute".into()));
            }
            solve_commuting(rho.blocks())?
                .ok_or_else(|| Error::Parameter("no common eigenbasis found".into()))
        }
        HminMethod::Helstrom => {
            if rho.n_labels() != 2 {
                return Err(Error::Parameter("Helstrom needs exactly two labels".into()));
            }
            solve_helstrom(rho.blocks())
        }
        HminMethod::Barrier => solve_barrier(rho.blocks(), tol),
    }
}

fn blocks_commute(blocks: &[HermitianOperator]) -> bool {
    for (i, a) in blocks.iter().enumerate() {
        for b in &blocks[i + 1..] {
            if crate::qmat::commutator_norm(a.matrix(), b.matrix()) >= COMMUTING_TOL {
                return false;
            }
        }
    }
    true
}

/// Guessing probability of a POVM and a feasible version of a dual candidate.
struct Certificate {
    lower: f64,
    upper: f64,
    sigma: HermitianOperator,
}

/// Makes `sigma` dual feasible by adding `max_x lambda_max(rho^[x] - sigma)_+ * I`
/// and evaluates `sum_x tr(rho^[x] M_x)` for the POVM `povm`.
fn certify(
    blocks: &[HermitianOperator],
    povm: &[HermitianOperator],
    sigma: &HermitianOperator,
) -> Result<Certificate> {
    let d = sigma.dim();
    let mut shift: f64 = 0.0;
    for b in blocks {
        shift = shift.max((b - sigma).lambda_max()?);
    }
    let sigma = if shift > 0.0 {
        sigma + &HermitianOperator::identity(d).scale(shift)
    } else {
        sigma.clone()
    };
    let lower = blocks
        .iter()
        .zip(povm)
        .map(|(b, m)| (b.matrix() * m.matrix()).trace().re)
        .sum::<f64>();
    Ok(Certificate {
        lower,
        upper: sigma.trace(),
        sigma,
    })
}

fn finish(c: Certificate, method: HminMethod) -> MinEntropy {
    let lower = c.lower.min(c.upper);
    MinEntropy {
        h: -c.upper.log2(),
        h_upper: -lower.log2(),
        p_lower: lower,
        p_upper: c.upper,
        sigma: c.sigma.scale(1.0 / c.upper),
        gap: c.upper - lower,
        method,
    }
}

/// Exact solution when all blocks share an eigenbasis: guess the most likely
/// label for every basis vector. Returns `None` if the basis found by
/// diagonalizing a generic combination fails to diagonalize every block.
fn solve_commuting(blocks: &[HermitianOperator]) -> Result<Option<MinEntropy>> {
    let d = blocks[0].dim();
    let mut combo = HermitianOperator::zeros(d);
    for (x, b) in blocks.iter().enumerate() {
        // irrational weights keep accidental degeneracies away
        let w = 1.0 + ((x + 1) as f64 * 0.618_033_988_749_895).fract();
        combo = &combo + &b.scale(w);
    }
    let v = herm_eig(&combo)?.vectors;
    let vd = v.dagger();
    let mut diag = Vec::with_capacity(blocks.len());
    for b in blocks {
        let m = &(&vd * b.matrix()) * &v;
        let off = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm())
            .fold(0.0, f64::max);
        if off > 1e-9 * b.matrix().max_abs().max(1e-300) && off > 1e-14 {
            return Ok(None);
        }
        diag.push((0..d).map(|i| m[(i, i)].re).collect::<Vec<f64>>());
    }
    let mut povm = vec![ComplexMatrix::zeros(d, d); blocks.len()];
    let mut sigma_diag = vec![0.0; d];
    for j in 0..d {
        let (best, val) = diag
            .iter()
            .enumerate()
            .map(|(x, dx)| (x, dx[j]))
            .fold((0, f64::NEG_INFINITY), |a, c| if c.1 > a.1 { c } else { a });
        sigma_diag[j] = val;
        let vj = v.column(j);
        povm[best] = &povm[best] + &ComplexMatrix::outer(&vj, &vj);
    }
    let povm: Vec<_> = povm.iter().map(HermitianOperator::symmetrize).collect();
    let sigma = HermitianOperator::symmetrize(&(&(&v * &ComplexMatrix::from_diag(&sigma_diag)) * &vd));
    Ok(Some(finish(certify(blocks, &povm, &sigma)?, HminMethod::Commuting)))
}

/// `p = (tr(rho0 + rho1) + ||rho0 - rho1||_1) / 2`, measured by the projector
/// onto the positive part of `rho0 - rho1`, with dual `(rho0 + rho1 + |rho0 - rho1|) / 2`.
fn solve_helstrom(blocks: &[HermitianOperator]) -> Result<MinEntropy> {
    let diff = &blocks[0] - &blocks[1];
    let e = herm_eig(&diff)?;
    let abs = func_from_eig(&e, MatFunc::Abs)?;
    let pos = e.reconstruct(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let d = diff.dim();
    let neg = &HermitianOperator::identity(d) - &pos;
    let sigma = (&(&blocks[0] + &blocks[1]) + &abs).scale(0.5);
    Ok(finish(certify(blocks, &[pos, neg], &sigma)?, HminMethod::Helstrom))
}

/// Pretty-good measurement `M_x = rho^{-1/2} rho^[x] rho^{-1/2}`, completed
/// on the kernel of the marginal.
fn pretty_good_measurement(blocks: &[HermitianOperator]) -> Result<Vec<HermitianOperator>> {
    let d = blocks[0].dim();
    let mut marginal = HermitianOperator::zeros(d);
    for b in blocks {
        marginal = &marginal + b;
    }
    let e = herm_eig(&marginal)?;
    let s = func_from_eig(&e, MatFunc::InvSqrtSupport)?;
    let support = func_from_eig(&e, MatFunc::SupportProjector)?;
    let mut povm = blocks
        .iter()
        .map(|b| b.conjugate_by(s.matrix()))
        .collect::<Result<Vec<_>>>()?;
    povm[0] = &povm[0] + &(&HermitianOperator::identity(d) - &support);
    normalize_povm(&povm)
}

/// `T^{-1/2} Z_x T^{-1/2}` with `T = sum_x Z_x`, so the elements sum to `I`.
fn normalize_povm(z: &[HermitianOperator]) -> Result<Vec<HermitianOperator>> {
    let d = z[0].dim();
    let mut t = HermitianOperator::zeros(d);
    for zx in z {
        t = &t + zx;
    }
    let e = herm_eig(&t)?;
    if e.values[0] <= SUPPORT_CUTOFF * e.values[d - 1] {
        return Err(Error::Parameter("measurement operators do not span the space".into()));
    }
    let s = e.reconstruct(|v| 1.0 / v.sqrt());
    z.iter().map(|zx| zx.conjugate_by(s.matrix())).collect()
}

/// Orthonormal Hermitian basis of `d x d` matrices, as coordinate maps.
struct HermBasis {
    d: usize,
}

impl HermBasis {
    fn len(&self) -> usize {
        self.d * self.d
    }

    /// `c_k = tr(X E_k)`.
    fn coords(&self, x: &ComplexMatrix) -> Vec<f64> {
        let d = self.d;
        let mut c = Vec::with_capacity(d * d);
        for i in 0..d {
            c.push(x[(i, i)].re);
        }
        let r2 = std::f64::consts::SQRT_2;
        for i in 0..d {
            for j in i + 1..d {
                let a = (x[(i, j)] + x[(j, i)].conj()) * 0.5;
                c.push(r2 * a.re);
                c.push(-r2 * a.im);
            }
        }
        c
    }

    fn matrix(&self, c: &[f64]) -> ComplexMatrix {
        let d = self.d;
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = C64::new(c[i], 0.0);
        }
        let r2 = std::f64::consts::SQRT_2;
        let mut k = d;
        for i in 0..d {
            for j in i + 1..d {
                let z = C64::new(c[k], -c[k + 1]) / r2;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 2;
            }
        }
        m
    }

    fn element(&self, k: usize) -> ComplexMatrix {
        let mut c = vec![0.0; self.len()];
        c[k] = 1.0;
        self.matrix(&c)
    }
}

/// Cholesky factor of a Hermitian positive-definite matrix, or `None`.
fn cholesky_c(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)].re;
        for k in 0..j {
            s -= l[(j, k)].norm_sqr();
        }
        if !(s > 0.0) {
            return None;
        }
        let ljj = s.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut z = a[(i, j)];
            for k in 0..j {
                z -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = z / ljj;
        }
    }
    Some(l)
}

/// Inverse of a Hermitian positive-definite matrix from its Cholesky factor.
fn inverse_from_cholesky(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    // lower-triangular inverse by forward substitution
    let mut li = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        li[(j, j)] = C64::new(1.0 / l[(j, j)].re, 0.0);
        for i in j + 1..n {
            let mut z = C64::new(0.0, 0.0);
            for k in j..i {
                z -= l[(i, k)] * li[(k, j)];
            }
            li[(i, j)] = z / l[(i, i)].re;
        }
    }
    &li.dagger() * &li
}

/// Solves `H x = b` for symmetric positive-definite `H` with diagonal
/// scaling; adds a small ridge if the factorization breaks down.
fn solve_spd(h: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / h[i][i].abs().max(1e-300).sqrt()).collect();
    for ridge in [0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| h[i][j] * scale[i] * scale[j]).collect())
            .collect();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += ridge;
        }
        let mut ok = true;
        for j in 0..n {
            let mut s = a[j][j];
            for k in 0..j {
                s -= a[j][k] * a[j][k];
            }
            if !(s > 0.0) {
                ok = false;
                break;
            }
            a[j][j] = s.sqrt();
            for i in j + 1..n {
                let mut z = a[i][j];
                for k in 0..j {
                    z -= a[i][k] * a[j][k];
                }
                a[i][j] = z / a[j][j];
            }
        }
        if !ok {
            continue;
        }
        let mut y: Vec<f64> = (0..n).map(|i| b[i] * scale[i]).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] -= a[i][k] * y[k];
            }
            y[i] /= a[i][i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= a[k][i] * y[k];
            }
            y[i] /= a[i][i];
        }
        return Some((0..n).map(|i| y[i] * scale[i]).collect());
    }
    None
}

const BARRIER_MAX_OUTER: usize = 60;
const BARRIER_MAX_NEWTON: usize = 80;
const BARRIER_GROWTH: f64 = 8.0;

/// Log-barrier path following on `min tr sigma s.t. sigma - rho^[x] > 0`.
/// Each outer step is certified: the shifted iterate bounds `p` from above
/// and the normalized barrier multipliers `S_x^{-1}` form a POVM whose
/// success probability bounds `p` from below.
fn solve_barrier(blocks: &[HermitianOperator], tol: f64) -> Result<MinEntropy> {
    let d = blocks[0].dim();
    let m = blocks.len();
    let basis = HermBasis { d };
    let elems: Vec<ComplexMatrix> = (0..basis.len()).map(|k| basis.element(k)).collect();

    let pgm = pretty_good_measurement(blocks)?;
    let mut y = HermitianOperator::zeros(d);
    for (b, mx) in blocks.iter().zip(&pgm) {
        y = &y + &HermitianOperator::symmetrize(&(b.matrix() * mx.matrix()));
    }
    let start = certify(blocks, &pgm, &y)?;
    let mut best = start;
    if best.upper - best.lower <= tol {
        return Ok(finish(best, HminMethod::Barrier));
    }

    // strictly feasible start
    let margin = (best.upper - best.lower).max(1e-6 * best.upper.max(1e-300)) / d as f64;
    let mut sigma = &best.sigma + &HermitianOperator::identity(d).scale(margin);
    let mut t = (m * d) as f64 / (best.upper - best.lower).max(1e-300);

    let slacks = |s: &HermitianOperator| -> Option<Vec<ComplexMatrix>> {
        blocks
            .iter()
            .map(|b| cholesky_c((s - b).matrix()).map(|l| inverse_from_cholesky(&l)))
            .collect()
    };

    for _ in 0..BARRIER_MAX_OUTER {
        // centering
        for _ in 0..BARRIER_MAX_NEWTON {
            let Some(inv) = slacks(&sigma) else { break };
            let mut sum_inv = ComplexMatrix::zeros(d, d);
            for s in &inv {
                sum_inv = &sum_inv + s;
            }
            let mut g = basis.coords(&sum_inv);
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = -*gk + if k < d { t } else { 0.0 };
            }
            let n = basis.len();
            let mut h = vec![vec![0.0; n]; n];
            for s in &inv {
                for (k, ek) in elems.iter().enumerate() {
                    let a = &(s * ek) * s;
                    let row = basis.coords(&a);
                    for l in 0..n {
                        h[k][l] += row[l];
                    }
                }
            }
            for k in 0..n {
                for l in 0..k {
                    let v = 0.5 * (h[k][l] + h[l][k]);
                    h[k][l] = v;
                    h[l][k] = v;
                }
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(step) = solve_spd(&h, &neg_g) else { break };
            let dec2: f64 = -g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
            if !(dec2 > 1e-20) {
                break;
            }
            let lambda = dec2.sqrt();
            let mut alpha = if lambda < 0.25 { 1.0 } else { 1.0 / (1.0 + lambda) };
            let dm = HermitianOperator::symmetrize(&basis.matrix(&step));
            let mut moved = false;
            for _ in 0..60 {
                let cand = &sigma + &dm.scale(alpha);
                if slacks(&cand).is_some() {
                    sigma = cand;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved || dec2 < 1e-12 {
                break;
            }
        }

        // certificate from the current iterate
        if let Some(inv) = slacks(&sigma) {
            let z: Vec<HermitianOperator> = inv.iter().map(HermitianOperator::symmetrize).collect();
            if let Ok(povm) = normalize_povm(&z) {
                let c = certify(blocks, &povm, &sigma)?;
                let better_upper = c.upper < best.upper;
                let lower = c.lower.max(best.lower);
                if better_upper {
                    best = Certificate { lower, ..c };
                } else {
                    best.lower = lower;
                }
            }
        }
        if best.upper - best.lower <= tol {
            return Ok(finish(best, HminMethod::Barrier));
        }
        t *= BARRIER_GROWTH;
    }
    Err(Error::SolverGap {
        lower: best.lower,
        upper: best.upper,
    })
}

// ---------------------------------------------------------------------------
// smoothing

/// Output of [`smooth_for_collision`].
#[derive(Clone, Debug)]
pub struct Smoothed {
    /// Normalized CQ state close to the input.
    pub state: CqState,
    /// Purified distance between the input and `state`.
    pub distance: f64,
    /// Min-entropy of the input used to build the smoothing projector.
    pub hmin: MinEntropy,
    /// Rank of the discarded part of the side-information space.
    pub discarded_rank: usize,
}

/// Constructs a normalized CQ state within purified distance `eps_bar` of
/// `rho` whose collision quantity relative to its own marginal is at most
/// `2^-H (2 / eps_bar^2 + 1)`.
///
/// With `Gamma = rho_B^{-1/2} sigma* rho_B^{-1/2}` for the optimal `sigma*`,
/// the largest eigenspaces of `Gamma` are discarded (projector `P^perp`) as
/// long as `tr(P^perp rho_B) <= eps_bar^2 / 2`. Each block becomes
/// `K rho^[x] K^dagger + Delta / d_X` with `K = rho_B^{1/2} P rho_B^{-1/2}`
/// and `Delta = rho_B - K rho_B K^dagger`.
pub fn smooth_for_collision(rho: &CqState, eps_bar: f64) -> Result<Smoothed> {
    if !(eps_bar > 0.0) {
        return Err(Error::Parameter(format!("eps_bar must be positive, got {eps_bar}")));
    }
    if (rho.trace() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("state must be normalized, trace {}", rho.trace())));
    }
    let hmin = hmin_cq(rho, DEFAULT_HMIN_TOL)?;
    let rho_b = rho.marginal();
    let d = rho_b.dim();
    let eb = herm_eig(&rho_b)?;
    let sqrt_b = func_from_eig(&eb, MatFunc::Sqrt)?;
    let inv_sqrt_b = func_from_eig(&eb, MatFunc::InvSqrtSupport)?;
    let gamma = hmin.sigma.conjugate_by(inv_sqrt_b.matrix())?;
    let eg = herm_eig(&gamma)?;

    // group eigenvalues of Gamma into clusters, largest first
    let top = eg.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cluster_tol = 1e-9 * top.max(1e-300);
    let budget = eps_bar * eps_bar / 2.0;
    let mut removed: Vec<usize> = Vec::new();
    let mut used = 0.0;
    let mut k = d;
    while k > 0 {
        let mut j = k - 1;
        while j > 0 && eg.values[k - 1] - eg.values[j - 1] <= cluster_tol {
            j -= 1;
        }
        let cost: f64 = (j..k).map(|i| rho_b.expectation(&eg.vector(i))).sum();
        if used + cost > budget {
            break;
        }
        used += cost;
        removed.extend(j..k);
        k = j;
    }
    let kept = eg.reconstruct_subset(&(0..d).filter(|i| !removed.contains(i)).collect::<Vec<_>>());
    let kop = &(sqrt_b.matrix() * kept.matrix()) * inv_sqrt_b.matrix();
    let tilde_b = rho_b.conjugate_by(&kop)?;
    let delta_b = &rho_b - &tilde_b;
    let spread = delta_b.scale(1.0 / rho.n_labels() as f64);
    let blocks = rho
        .blocks()
        .iter()
        .map(|b| Ok(&b.conjugate_by(&kop)? + &spread))
        .collect::<Result<Vec<_>>>()?;
    let state = CqState::new(rho.labels().to_vec(), blocks)?;
    let distance = rho.purified_distance(&state)?;
    if distance > eps_bar + 1e-8 {
        return Err(Error::SmoothingViolated {
            achieved: distance,
            target: eps_bar,
        });
    }
    Ok(Smoothed {
        state,
        distance,
        hmin,
        discarded_rank: removed.len(),
    })
}

impl HermEig {
    /// Projector onto the span of the listed eigenvectors.
    pub fn reconstruct_subset(&self, indices: &[usize]) -> HermitianOperator {
        let n = self.values.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for &k in indices {
            let v = self.vector(k);
            m = &m + &ComplexMatrix::outer(&v, &v);
        }
        HermitianOperator::symmetrize(&m)
    }
}
