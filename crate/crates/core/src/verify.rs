//! Randomized and exhaustive numerical checks of the extraction bounds and
//! the operator inequalities behind them.
//!
//! Every suite is driven by ChaCha20 seeded with the suite seed; instance
//! `i` draws from stream `i`, so results do not depend on evaluation order
//! and instances run in parallel.

use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bounds::{thm_almost_delta, thm_two_universal_delta};
use crate::error::{Error, Result};
use crate::hash_families::{FamilyKind, HashFamilyDescriptor};
use crate::qinfo::{
    apply_hash, apply_isometry, collision_gamma, collision_gamma_cq, collision_gamma_hashed,
    dist_uniform, dist_uniform_hashed, dmax, hmax_alt, hmin_alt, hmin_alt_cq, hmin_cq,
    purified_distance, purify, sandwich_trace, smooth_for_collision, trace_distance, CqState,
    PureStateVector, SigmaMode, DEFAULT_HMIN_TOL,
};
use crate::qmat::{
    mat_func, schatten_norm, tensor, trace_norm, ComplexMatrix, HermitianOperator,
    MatFunc, Subsystem, C64,
};

/// Base numerical tolerance of the harness.
pub const VERIFY_TOL: f64 = 1e-7;
/// Slack granted to every inequality: three times [`VERIFY_TOL`].
pub const SLACK: f64 = 3.0 * VERIFY_TOL;
/// Smoothing parameters scanned for the almost-universal bound.
pub const EPS_BAR_GRID: [f64; 3] = [0.05, 0.1, 0.3];

pub const SUITES: [&str; 10] = [
    "metric",
    "hoelder",
    "mirror",
    "projection",
    "collision",
    "entropy-duality",
    "lhl",
    "average",
    "smoothing",
    "guessing-monotonicity",
];

// ---------------------------------------------------------------------------
// random states

/// How [`random_cq`] shapes the side information.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    /// Blocks `p_x U diag(w) U^dagger` with at most `r` nonzero weights.
    RandomRank(usize),
    /// Diagonal blocks drawn from a random joint distribution.
    Classical,
    /// One random pure state per label.
    PureSideInfo,
    /// A few heavy labels; the remaining labels carry pure, nearly
    /// distinguishable side information.
    AdversarialPeaked,
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKind::RandomRank(r) => write!(f, "random-rank-{r}"),
            StateKind::Classical => f.write_str("classical"),
            StateKind::PureSideInfo => f.write_str("pure-side-info"),
            StateKind::AdversarialPeaked => f.write_str("adversarial-peaked"),
        }
    }
}

impl FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(StateKind::Classical),
            "pure-side-info" => Ok(StateKind::PureSideInfo),
            "adversarial-peaked" => Ok(StateKind::AdversarialPeaked),
            _ => s
                .strip_prefix("random-rank-")
                .and_then(|r| r.parse().ok())
                .filter(|&r| r > 0)
                .map(StateKind::RandomRank)
                .ok_or_else(|| Error::Parameter(format!("unknown state kind {s:?}"))),
        }
    }
}

impl Serialize for StateKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Gaussian matrix.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary: Gram-Schmidt on the columns of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, d);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for _ in 0..2 {
            for u in &cols {
                let p: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Random pure state vector.
pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Unit-trace density operator of rank `min(rank, d)`: `G G^dagger / tr`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> HermitianOperator {
    let g = ginibre(rng, d, rank.clamp(1, d));
    let m = &g * &g.dagger();
    let t = m.trace().re;
    HermitianOperator::symmetrize(&m.scale(1.0 / t))
}

/// Random rank-`k` orthogonal projector.
pub fn random_projector<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> HermitianOperator {
    let u = random_unitary(rng, d);
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..k.min(d) {
        let c = u.column(j);
        m = &m + &ComplexMatrix::outer(&c, &c);
    }
    HermitianOperator::symmetrize(&m)
}

fn exp_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

/// Random normalized CQ state with `n_labels` classical values.
pub fn random_cq<R: Rng + ?Sized>(
    rng: &mut R,
    n_labels: usize,
    d_e: usize,
    kind: StateKind,
) -> Result<CqState> {
    if n_labels == 0 || d_e == 0 || n_labels > 1 << 16 || d_e > 64 {
        return Err(Error::Dimension(format!(
            "{n_labels} labels with side dimension {d_e}"
        )));
    }
    let blocks: Vec<HermitianOperator> = match kind {
        StateKind::RandomRank(r) => {
            let p = exp_weights(rng, n_labels);
            p.iter()
                .map(|&px| {
                    let u = random_unitary(rng, d_e);
                    let mut w = exp_weights(rng, d_e);
                    for wi in w.iter_mut().skip(r.max(1)) {
                        *wi = 0.0;
                    }
                    let t: f64 = w.iter().sum();
                    let diag = ComplexMatrix::from_diag(&w.iter().map(|v| px * v / t).collect::<Vec<_>>());
                    HermitianOperator::symmetrize(&(&(&u * &diag) * &u.dagger()))
                })
                .collect()
        }
        StateKind::Classical => {
            let p = exp_weights(rng, n_labels * d_e);
            p.chunks(d_e).map(HermitianOperator::from_diag).collect()
        }
        StateKind::PureSideInfo => {
            let p = exp_weights(rng, n_labels);
            p.iter()
                .map(|&px| HermitianOperator::projector(&random_ket(rng, d_e)).scale(px))
                .collect()
        }
        StateKind::AdversarialPeaked => {
            let heavy = rng.random_range(1..=n_labels.min(4));
            let q = if heavy == n_labels { 1.0 } else { rng.random_range(0.6..0.99) };
            let hw = exp_weights(rng, heavy);
            (0..n_labels)
                .map(|x| {
                    let px = if x < heavy {
                        q * hw[x]
                    } else {
                        (1.0 - q) / (n_labels - heavy) as f64
                    };
                    HermitianOperator::projector(&random_ket(rng, d_e)).scale(px)
                })
                .collect()
        }
    };
    let total: f64 = blocks.iter().map(|b| b.trace()).sum();
    CqState::from_blocks(blocks.iter().map(|b| b.scale(1.0 / total)).collect())
}

/// [`random_cq`] from a fixed seed.
pub fn random_cq_seeded(n_labels: usize, d_e: usize, kind: StateKind, seed: u64) -> Result<CqState> {
    random_cq(&mut ChaCha20Rng::seed_from_u64(seed), n_labels, d_e, kind)
}

// ---------------------------------------------------------------------------
// reports

/// One inequality `lhs <= rhs + tol`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            tol,
        }
    }

    /// `|lhs - rhs| <= tol`, encoded as `|lhs - rhs| <= 0 + tol`.
    pub fn equal(name: impl Into<String>, a: f64, b: f64, tol: f64) -> Self {
        Self::new(name, (a - b).abs(), 0.0, tol)
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn pass(&self) -> bool {
        self.lhs <= self.rhs + self.tol
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub params: Value,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl InstanceRecord {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(Check::pass)
    }

    pub fn worst_margin(&self) -> f64 {
        self.checks
            .iter()
            .map(Check::margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// A failing instance with everything needed to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Failure {
    #[serde(flatten)]
    pub record: InstanceRecord,
    pub state: Option<Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub worst_margin: f64,
    pub passed: bool,
    pub digest: String,
    pub failures: Vec<Failure>,
    #[serde(skip)]
    pub records: Vec<InstanceRecord>,
}

impl VerifyReport {
    fn assemble(suite: &str, seed: u64, trials: usize, results: Vec<TrialOutcome>) -> Self {
        let mut results = results;
        results.sort_by_key(|r| r.record.index);
        let records: Vec<InstanceRecord> = results.iter().map(|r| r.record.clone()).collect();
        let worst_margin = records
            .iter()
            .map(InstanceRecord::worst_margin)
            .fold(f64::INFINITY, f64::min);
        let failures: Vec<Failure> = results
            .into_iter()
            .filter(|r| !r.record.pass())
            .map(|r| Failure {
                record: r.record,
                state: r.state,
            })
            .collect();
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&records).unwrap_or_default());
        let digest = hex::encode(h.finalize());
        Self {
            suite: suite.to_string(),
            seed,
            trials,
            worst_margin,
            passed: failures.is_empty(),
            digest,
            failures,
            records,
        }
    }

    /// Number of individual inequalities checked.
    pub fn check_count(&self) -> usize {
        self.records.iter().map(|r| r.checks.len()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct TrialOutcome {
    record: InstanceRecord,
    state: Option<Value>,
}

/// Output of a single trial before it is turned into a record.
struct Trial {
    params: Value,
    checks: Vec<Check>,
    state: Option<Value>,
}

fn trial_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_trials(
    suite: &str,
    trials: usize,
    seed: u64,
    f: impl Fn(&mut ChaCha20Rng, usize) -> Result<Trial> + Sync,
) -> Result<VerifyReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let results: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            match f(&mut rng, i) {
                Ok(t) => TrialOutcome {
                    record: InstanceRecord {
                        index: i,
                        params: t.params,
                        checks: t.checks,
                        error: None,
                    },
                    state: t.state,
                },
                Err(e) => TrialOutcome {
                    record: InstanceRecord {
                        index: i,
                        params: json!({ "seed": seed, "stream": i }),
                        checks: Vec::new(),
                        error: Some(e.to_string()),
                    },
                    state: None,
                },
            }
        })
        .collect();
    Ok(VerifyReport::assemble(suite, seed, trials, results))
}

fn state_value(rho: &CqState) -> Option<Value> {
    serde_json::to_value(rho).ok()
}

/// Runs a named property suite.
pub fn run_suite(name: &str, trials: usize, seed: u64) -> Result<VerifyReport> {
    let f: fn(&mut ChaCha20Rng, usize) -> Result<Trial> = match name {
        "metric" => metric_trial,
        "hoelder" => hoelder_trial,
        "mirror" => mirror_trial,
        "projection" => projection_trial,
        "collision" => collision_trial,
        "entropy-duality" => duality_trial,
        "lhl" => lhl_trial,
        "average" => average_trial,
        "smoothing" => smoothing_trial,
        "guessing-monotonicity" => monotonicity_trial,
        _ => return Err(Error::UnknownSuite(name.to_string())),
    };
    run_trials(name, trials, seed, f)
}

// ---------------------------------------------------------------------------
// leftover hash lemma instances

/// One enumerable privacy-amplification instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub l: usize,
    pub d_e: usize,
    pub family: FamilyKind,
    pub kind: StateKind,
    pub seed: u64,
}

impl InstanceSpec {
    /// Family used for this instance: polynomial hashing uses blocks of `l`
    /// bits, the concatenated family an intermediate field of `l + 1` bits.
    pub fn descriptor(&self) -> Result<HashFamilyDescriptor> {
        match self.family {
            FamilyKind::Multiply => HashFamilyDescriptor::multiply(self.n, self.l),
            FamilyKind::Polynomial => HashFamilyDescriptor::polynomial(self.n, self.l),
            FamilyKind::Concatenated => HashFamilyDescriptor::concatenated(self.n, self.l, self.l + 1),
        }
    }

    fn validate(&self) -> Result<HashFamilyDescriptor> {
        let desc = self.descriptor()?;
        if self.n > 4 || desc.seed_bits() > 16 || self.d_e == 0 || self.d_e > 4 {
            return Err(Error::Parameter(format!(
                "instance outside the enumerable range: n={}, seed bits={}, d_E={}",
                self.n,
                desc.seed_bits(),
                self.d_e
            )));
        }
        Ok(desc)
    }

    pub fn state(&self) -> Result<CqState> {
        random_cq_seeded(1 << self.n, self.d_e, self.kind, self.seed)
    }
}

/// Checks the two-universal bound (for families with `delta <= 2^-l`) and
/// the almost-universal bound for every `eps_bar` in [`EPS_BAR_GRID`], all
/// at `eps = 0`, on the given state. The distance is evaluated with the
/// marginal as side-information operator; the min-entropy is the solver's
/// certified lower bound.
pub fn lhl_checks(spec: &InstanceSpec, rho: &CqState) -> Result<Vec<Check>> {
    let desc = spec.validate()?;
    let hashed = apply_hash(rho, &desc)?;
    let du = dist_uniform_hashed(&hashed, &SigmaMode::Marginal)?;
    let h = hmin_cq(rho, DEFAULT_HMIN_TOL)?.h;
    let l = spec.l as f64;
    let delta = desc.theoretical_delta();
    let delta_f = delta.to_f64().unwrap_or(f64::INFINITY);
    let mut checks = Vec::new();
    let two_universal = delta * num_bigint::BigInt::from(1u64 << spec.l)
        <= num_rational::BigRational::from_integer(1.into());
    if two_universal {
        checks.push(Check::new("two-universal", du, thm_two_universal_delta(l, h, 0.0)?, SLACK));
    }
    for eb in EPS_BAR_GRID {
        checks.push(Check::new(
            format!("almost-universal eps_bar={eb}"),
            du,
            thm_almost_delta(l, delta_f, h, 0.0, eb)?,
            SLACK,
        ));
    }
    Ok(checks)
}

/// Single-instance report for [`lhl_checks`] on the instance's random state.
pub fn verify_lhl(spec: &InstanceSpec) -> Result<VerifyReport> {
    let rho = spec.state()?;
    let checks = lhl_checks(spec, &rho)?;
    let outcome = TrialOutcome {
        record: InstanceRecord {
            index: 0,
            params: serde_json::to_value(spec)?,
            checks,
            error: None,
        },
        state: state_value(&rho),
    };
    Ok(VerifyReport::assemble("lhl", spec.seed, 1, vec![outcome]))
}

/// Checks behind averaging the distance from uniform over the family:
/// pinching a joint operator `sigma_FE` (coherent across `F` when the joint
/// space is small) to its diagonal `F`-blocks never increases the distance;
/// a shared `sigma_E` gives equality between the average and the joint
/// distance; per-function search is no worse than the joint marginal value.
pub fn average_checks<R: Rng + ?Sized>(
    spec: &InstanceSpec,
    rho: &CqState,
    rng: &mut R,
) -> Result<Vec<Check>> {
    let desc = spec.validate()?;
    let hashed = apply_hash(rho, &desc)?;
    let nf = hashed.n_functions();
    let d = rho.dim_e();
    let dz = hashed.output_values();
    let pf = 1.0 / nf as f64;
    let rho_e = hashed.marginal().clone();
    let joint = nf * d;

    let coherent = joint <= 64;
    let c: f64 = rng.random_range(0.0..1.0);
    let product = HermitianOperator::symmetrize(&tensor(
        &ComplexMatrix::identity(nf).scale(pf),
        rho_e.matrix(),
    ));
    let noise = if coherent {
        random_density(rng, joint, joint)
    } else {
        let mut m = ComplexMatrix::zeros(joint, joint);
        for f in 0..nf {
            let b = random_density(rng, d, d);
            for i in 0..d {
                for j in 0..d {
                    m[(f * d + i, f * d + j)] = b.matrix()[(i, j)] * pf;
                }
            }
        }
        HermitianOperator::symmetrize(&m)
    };
    let t = rho_e.trace();
    let sigma_fe = &product.scale(1.0 - c) + &noise.scale(c * t);

    // right-hand side on the joint F (x) E space, block-diagonal in Z
    let mut rhs = 0.0;
    for z in 0..dz {
        let mut rho_z = ComplexMatrix::zeros(joint, joint);
        for f in 0..nf {
            let b = &hashed.function_blocks(f)[z];
            for i in 0..d {
                for j in 0..d {
                    rho_z[(f * d + i, f * d + j)] = b.matrix()[(i, j)] * pf;
                }
            }
        }
        rhs += trace_norm(&(&rho_z - &sigma_fe.matrix().scale(1.0 / dz as f64)))?;
    }
    rhs *= 0.5;

    // the same quantity with sigma_FE replaced by its diagonal F-blocks
    let mut pinched = 0.0;
    let mut shared = 0.0;
    let mut searched = 0.0;
    let omega = 1.0 / dz as f64;
    for f in 0..nf {
        let block = HermitianOperator::symmetrize(&ComplexMatrix::from_fn(d, d, |i, j| {
            sigma_fe.matrix()[(f * d + i, f * d + j)]
        }));
        for b in hashed.function_blocks(f) {
            pinched += trace_norm((&b.scale(pf) - &block.scale(omega)).matrix())?;
        }
        let rho_f = hashed.function_state(f)?;
        shared += pf * dist_uniform(&rho_f, &SigmaMode::Fixed(rho_e.clone()))?;
        searched += pf * dist_uniform(&rho_f, &SigmaMode::Search)?;
    }
    pinched *= 0.5;
    let joint_marginal = dist_uniform_hashed(&hashed, &SigmaMode::Marginal)?;
    Ok(vec![
        Check::new("pinching", pinched, rhs, SLACK),
        Check::equal("shared sigma", shared, joint_marginal, SLACK),
        Check::new("average with search", searched, joint_marginal, SLACK),
    ])
}

/// Configuration matrix for the hashing suites: `n`, `l`, `d_E`, family.
fn lhl_config(i: usize) -> (usize, usize, usize, FamilyKind) {
    let families = [FamilyKind::Multiply, FamilyKind::Polynomial, FamilyKind::Concatenated];
    let n = [3, 4][i % 2];
    let l = [1, 2][(i / 2) % 2];
    let d_e = [1, 2, 3][(i / 4) % 3];
    let family = families[(i / 12) % 3];
    (n, l, d_e, family)
}

fn lhl_kind(i: usize, d_e: usize) -> StateKind {
    match (i / 36) % 4 {
        0 => StateKind::RandomRank(d_e),
        1 => StateKind::Classical,
        2 => StateKind::PureSideInfo,
        _ => StateKind::AdversarialPeaked,
    }
}

/// The `i`-th instance of the hashing configuration matrix.
pub fn lhl_instance<R: Rng + ?Sized>(rng: &mut R, i: usize) -> InstanceSpec {
    let (n, l, d_e, family) = lhl_config(i);
    InstanceSpec {
        n,
        l,
        d_e,
        family,
        kind: lhl_kind(i, d_e),
        seed: rng.random(),
    }
}

fn lhl_trial(rng: &mut ChaCha20Rng, i: usize) -> Result<Trial> {
    let spec = lhl_instance(rng, i);
    let rho = spec.state()?;
    Ok(Trial {
        params: serde_json::to_value(&spec)?,
        checks: lhl_checks(&spec, &rho)?,
        state: state_value(&rho),
    })
}

fn average_trial(rng: &mut ChaCha20Rng, i: usize) -> Result<Trial> {
    let spec = lhl_instance(rng, i);
    let rho = spec.state()?;
    Ok(Trial {
        params: serde_json::to_value(&spec)?,
        checks: average_checks(&spec, &rho, rng)?,
        state: state_value(&rho),
    })
}

// ---------------------------------------------------------------------------
// operator inequalities

fn subnormalized<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianOperator {
    let rank = rng.random_range(1..=d);
    let t: f64 = rng.random_range(0.3..=1.0);
    random_density(rng, d, rank).scale(t)
}

/// Trace distance generalized to subnormalized operators.
fn generalized_trace_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    Ok(trace_distance(a, b)? + 0.5 * (a.trace() - b.trace()).abs())
}

fn metric_trial(rng: &mut ChaCha20Rng, _: usize) -> Result<Trial> {
    let d = rng.random_range(2..=4);
    let (a, b, c) = (subnormalized(rng, d), subnormalized(rng, d), subnormalized(rng, d));
    let pab = purified_distance(&a, &b)?;
    let pbc = purified_distance(&b, &c)?;
    let pac = purified_distance(&a, &c)?;
    // blockwise projection of two CQ states
    let n_labels = rng.random_range(2..=3);
    let kind = StateKind::RandomRank(d);
    let x = random_cq(rng, n_labels, d, kind)?;
    let y = random_cq(rng, n_labels, d, kind)?;
    let k = rng.random_range(0..=d);
    let proj = random_projector(rng, d, k);
    let px = x.map_blocks(proj.matrix())?;
    let py = y.map_blocks(proj.matrix())?;
    let before = x.purified_distance(&y)?;
    let after = if px.trace() > 0.0 && py.trace() > 0.0 {
        px.purified_distance(&py)?
    } else {
        0.0
    };
    Ok(Trial {
        params: json!({ "d": d, "labels": n_labels, "projector_rank": k }),
        checks: vec![
            Check::new("triangle", pac, pab + pbc, SLACK),
            Check::new("trace distance below purified", generalized_trace_distance(&a, &b)?, pab, SLACK),
            Check::new("projection monotone", after, before, SLACK),
        ],
        state: state_value(&x),
    })
}

fn hoelder_trial(rng: &mut ChaCha20Rng, _: usize) -> Result<Trial> {
    let d = rng.random_range(2..=4);
    let (a, b, c) = (ginibre(rng, d, d), ginibre(rng, d, d), ginibre(rng, d, d));
    let lhs = trace_norm(&(&(&a * &b) * &c))?;
    let mut checks = Vec::new();
    for (r, s, t) in [(4.0, 2.0, 4.0), (3.0, 3.0, 3.0)] {
        let rhs = schatten_norm(&a, r)? * schatten_norm(&b, s)? * schatten_norm(&c, t)?;
        checks.push(Check::new(format!("hoelder ({r},{s},{t})"), lhs, rhs, SLACK * rhs.max(1.0)));
    }
    Ok(Trial {
        params: json!({ "d": d }),
        checks,
        state: None,
    })
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

const MIRROR_TOL: f64 = 1e-9;

fn mirror_trial(rng: &mut ChaCha20Rng, _: usize) -> Result<Trial> {
    let da = rng.random_range(2..=4);
    let db = rng.random_range(2..=4);
    let r = rng.random_range(1..=da.min(db));
    let lambda = exp_weights(rng, r);
    let ua = random_unitary(rng, da);
    let ub = random_unitary(rng, db);
    // |phi> = sum_i sqrt(lambda_i) |a_i> |b_i>
    let mut amps = vec![C64::new(0.0, 0.0); da * db];
    for (i, li) in lambda.iter().enumerate() {
        let s = li.sqrt();
        for p in 0..da {
            for q in 0..db {
                amps[p * db + q] += ua[(p, i)] * ub[(q, i)] * s;
            }
        }
    }
    let phi = PureStateVector::new(amps, vec![da, db])?;
    let rho_a = phi.reduced(&[0])?;
    let rho_b = phi.reduced(&[1])?;

    // X supported on supp rho_A, transposed in the Schmidt bases
    let support_a = mat_func(&rho_a, MatFunc::SupportProjector)?;
    let x = &(support_a.matrix() * &ginibre(rng, da, da)) * support_a.matrix();
    let mut xt = ComplexMatrix::zeros(db, db);
    for i in 0..r {
        for j in 0..r {
            let ai = ua.column(i);
            let aj = ua.column(j);
            let xa = x.apply(&aj)?;
            let xij: C64 = ai.iter().zip(&xa).map(|(u, v)| u.conj() * v).sum();
            let bj = ub.column(j);
            let bi = ub.column(i);
            xt = &xt + &ComplexMatrix::outer(&bj, &bi).scale_c(xij);
        }
    }
    let sqrt_b = mat_func(&rho_b, MatFunc::Sqrt)?;
    let inv_sqrt_b = mat_func(&rho_b, MatFunc::InvSqrtSupport)?;
    let dual = &(sqrt_b.matrix() * &xt) * inv_sqrt_b.matrix();
    let left = phi.apply_local(&x, 0)?;
    let right = phi.apply_local(&dual, 1)?;
    let mut checks = vec![Check::new("mirror", max_diff(left.amplitudes(), right.amplitudes()), 0.0, MIRROR_TOL)];
    for (name, f) in [("sqrt", MatFunc::Sqrt), ("support projector", MatFunc::SupportProjector)] {
        let fa = mat_func(&rho_a, f)?;
        let fb = mat_func(&rho_b, f)?;
        let l = phi.apply_local(fa.matrix(), 0)?;
        let rr = phi.apply_local(fb.matrix(), 1)?;
        checks.push(Check::new(
            format!("mirror function {name}"),
            max_diff(l.amplitudes(), rr.amplitudes()),
            0.0,
            MIRROR_TOL,
        ));
    }
    Ok(Trial {
        params: json!({ "d_a": da, "d_b": db, "schmidt_rank": r }),
        checks,
        state: None,
    })
}

fn projection_trial(rng: &mut ChaCha20Rng, _: usize) -> Result<Trial> {
    let d = rng.random_range(2..=5);
    let rho = subnormalized(rng, d);
    let k = rng.random_range(0..=d);
    let proj = random_projector(rng, d, k);
    let projected = rho.conjugate_by(proj.matrix())?;
    let perp = &HermitianOperator::identity(d) - &proj;
    let t = (perp.matrix() * rho.matrix()).trace().re;
    let rhs = (2.0 * t - t * t).max(0.0).sqrt();
    Ok(Trial {
        params: json!({ "d": d, "projector_rank": k }),
        checks: vec![Check::new("projection distance", purified_distance(&rho, &projected)?, rhs, SLACK)],
        state: None,
    })
}

fn collision_trial(rng: &mut ChaCha20Rng, _: usize) -> Result<Trial> {
    let mut checks = Vec::new();

    // D_max(rho || I (x) sigma) >= log Gamma_C(rho | sigma) - log tr rho
    let da = rng.random_range(2..=4);
    let db = rng.random_range(2..=4);
    let rho = subnormalized(rng, da * db);
    let sigma = random_density(rng, db, db);
    let gamma = collision_gamma(&rho, (da, db), &sigma)?;
    let id_sigma = HermitianOperator::symmetrize(&tensor(&ComplexMatrix::identity(da), sigma.matrix()));
    let d = dmax(&rho, &id_sigma)?;
    checks.push(Check::new("collision below dmax", gamma.log2() - rho.trace().log2(), d, SLACK));

    // Gamma_C(rho | sigma*) <= 2^-H with the solver's optimal sigma
    let n_labels = rng.random_range(2..=4);
    let d_e = rng.random_range(2..=4);
    let kind = [StateKind::RandomRank(d_e), StateKind::PureSideInfo, StateKind::AdversarialPeaked]
        [rng.random_range(0..3)];
    let cq = random_cq(rng, n_labels, d_e, kind)?;
    let hm = hmin_cq(&cq, DEFAULT_HMIN_TOL)?;
    let g = collision_gamma_cq(&cq, &hm.sigma)?;
    checks.push(Check::new("collision below guessing", g, hm.p_upper, 1e-6 * hm.p_upper));
    checks.push(Check::new("solver gap", hm.gap, 0.0, 1e-8));

    // distance from uniform bounded by collision entropy for a random tau
    let tau = random_density(rng, d_e, d_e);
    let rho_e = cq.marginal();
    let s = mat_func(&tau, MatFunc::InvSqrtSupport)?;
    let g_tau = collision_gamma_cq(&cq, &tau)?;
    let cross = sandwich_trace(&rho_e, &rho_e, &s);
    let du = dist_uniform(&cq, &SigmaMode::Marginal)?;
    let rhs = 0.5 * (n_labels as f64 * g_tau - cross).max(0.0).sqrt();
    checks.push(Check::new("uniform below collision", du, rhs, SLACK));

    // collision entropy after hashing
    let n = if n_labels <= 2 { 1 } else { 2 };
    let desc = if rng.random_bool(0.5) {
        HashFamilyDescriptor::multiply(n.max(2), 1)?
    } else {
        HashFamilyDescriptor::polynomial(n.max(2), 1)?
    };
    let padded = pad_labels(&cq, 1 << desc.n())?;
    let hashed = apply_hash(&padded, &desc)?;
    let lhs = collision_gamma_hashed(&hashed, &tau)?;
    let delta = desc.theoretical_delta().to_f64().unwrap_or(f64::INFINITY);
    let rhs = collision_gamma_cq(&padded, &tau)? + delta * cross;
    checks.push(Check::new("collision after hashing", lhs, rhs, SLACK * rhs.max(1.0)));

    Ok(Trial {
        params: json!({ "d_a": da, "d_b": db, "labels": n_labels, "d_e": d_e, "kind": kind, "family": desc.to_string() }),
        checks,
        state: state_value(&cq),
    })
}

/// Appends zero blocks so the state has exactly `n` labels.
fn pad_labels(rho: &CqState, n: usize) -> Result<CqState> {
    let mut blocks = rho.blocks().to_vec();
    blocks.resize(n.max(blocks.len()), HermitianOperator::zeros(rho.dim_e()));
    CqState::from_blocks(blocks)
}

fn duality_trial(rng: &mut ChaCha20Rng, _: usize) -> Result<Trial> {
    let da = rng.random_range(2..=3);
    let db = rng.random_range(2..=3);
    let rank = rng.random_range(1..=da * db);
    let rho = random_density(rng, da * db, rank);
    let phi = purify(&rho, &[da, db])?;
    let r = phi.dims()[2];
    let rho_ac = phi.reduced(&[0, 2])?;
    let hmax = hmax_alt(&rho, (da, db))?;
    let hmin_c = hmin_alt(&rho_ac, (da, r))?;
    let mut checks = vec![Check::equal("max/min duality", hmax, -hmin_c, 1e-8)];

    // isometric embedding of B into a larger space
    let big = db + rng.random_range(0..=2);
    let u = random_unitary(rng, big);
    let v = ComplexMatrix::from_fn(big, db, |i, j| u[(i, j)]);
    let out = apply_isometry(&rho, (da, db), &v, Subsystem::B)?;
    checks.push(Check::equal(
        "hmin isometry invariance",
        hmin_alt(&rho, (da, db))?,
        hmin_alt(&out, (da, big))?,
        1e-8,
    ));
    checks.push(Check::equal("hmax isometry invariance", hmax, hmax_alt(&out, (da, big))?, 1e-8));

    // H_alt <= H_min - log(1/tr rho) on subnormalized CQ states
    let n_labels = rng.random_range(2..=4);
    let d_e = rng.random_range(1..=3);
    let t: f64 = rng.random_range(0.3..=1.0);
    let cq = random_cq(rng, n_labels, d_e, StateKind::RandomRank(d_e))?;
    let cq = CqState::from_blocks(cq.blocks().iter().map(|b| b.scale(t)).collect())?;
    let hm = hmin_cq(&cq, DEFAULT_HMIN_TOL)?;
    checks.push(Check::new(
        "alternative min-entropy below min-entropy",
        hmin_alt_cq(&cq)?,
        hm.h_upper - (1.0 / cq.trace()).log2(),
        SLACK,
    ));
    Ok(Trial {
        params: json!({ "d_a": da, "d_b": db, "rank": rank, "embed": big, "labels": n_labels, "d_e": d_e }),
        checks,
        state: state_value(&cq),
    })
}

fn smoothing_trial(rng: &mut ChaCha20Rng, i: usize) -> Result<Trial> {
    let d_e = 2 + i % 2;
    let kind = [StateKind::RandomRank(d_e), StateKind::PureSideInfo, StateKind::AdversarialPeaked][i % 3];
    let rho = random_cq(rng, 3, d_e, kind)?;
    let mut checks = Vec::new();
    for eb in [0.05, 0.2] {
        let s = smooth_for_collision(&rho, eb)?;
        let g = collision_gamma_cq(&s.state, &s.state.marginal())?;
        let bound = s.hmin.p_upper * (2.0 / (eb * eb) + 1.0);
        checks.push(Check::new(format!("smoothed distance eps_bar={eb}"), s.distance, eb, 1e-6 * eb));
        checks.push(Check::new(format!("smoothed collision eps_bar={eb}"), g, bound, 1e-6 * bound));
    }
    Ok(Trial {
        params: json!({ "labels": 3, "d_e": d_e, "kind": kind }),
        checks,
        state: state_value(&rho),
    })
}

fn monotonicity_trial(rng: &mut ChaCha20Rng, _: usize) -> Result<Trial> {
    let n_labels = rng.random_range(2..=6);
    let d_e = rng.random_range(1..=3);
    let kind = [StateKind::RandomRank(d_e), StateKind::Classical, StateKind::PureSideInfo]
        [rng.random_range(0..3)];
    let rho = random_cq(rng, n_labels, d_e, kind)?;
    let m = rng.random_range(1..=n_labels);
    let map: Vec<usize> = (0..n_labels).map(|_| rng.random_range(0..m)).collect();
    let out = rho.relabel(|x| map[x])?;
    let h_in = hmin_cq(&rho, DEFAULT_HMIN_TOL)?;
    let h_out = hmin_cq(&out, DEFAULT_HMIN_TOL)?;
    let mut checks = vec![Check::new("relabeling", h_out.h, h_in.h_upper, SLACK)];

    // uniform output independent of E has exactly l bits
    let l = rng.random_range(0..=3);
    let rho_e = random_density(rng, d_e, d_e);
    let uniform = CqState::from_blocks(vec![rho_e.scale(1.0 / (1u32 << l) as f64); 1 << l])?;
    let hu = hmin_cq(&uniform, DEFAULT_HMIN_TOL)?;
    checks.push(Check::equal("uniform independent", hu.h, l as f64, SLACK));
    Ok(Trial {
        params: json!({ "labels": n_labels, "d_e": d_e, "kind": kind, "map": map, "l": l }),
        checks,
        state: state_value(&rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let c = random_cq(&mut rng, 4, 3, StateKind::Classical).unwrap();
        for b in c.blocks() {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert_eq!(b.matrix()[(i, j)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
        for kind in [
            StateKind::RandomRank(2),
            StateKind::Classical,
            StateKind::PureSideInfo,
            StateKind::AdversarialPeaked,
        ] {
            let s = random_cq(&mut rng, 5, 3, kind).unwrap();
            assert!((s.trace() - 1.0).abs() < 1e-12);
            let a = random_cq_seeded(5, 3, kind, 99).unwrap().to_json().unwrap();
            let b = random_cq_seeded(5, 3, kind, 99).unwrap().to_json().unwrap();
            assert_eq!(a, b);
            assert_eq!(kind.to_string().parse::<StateKind>().unwrap(), kind);
        }
        let u = random_unitary(&mut rng, 4);
        assert!((&u.dagger() * &u).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        assert!(random_cq(&mut rng, 0, 2, StateKind::Classical).is_err());
        assert!("random-rank-0".parse::<StateKind>().is_err());
    }

    #[test]
    fn perfect_source_has_zero_distance() {
        for n in [3, 4] {
            let rho = CqState::classical(&vec![vec![1.0 / (1 << n) as f64]; 1 << n]).unwrap();
            for l in 1..=2 {
                let spec = InstanceSpec {
                    n,
                    l,
                    d_e: 1,
                    family: FamilyKind::Multiply,
                    kind: StateKind::Classical,
                    seed: 0,
                };
                let hashed = apply_hash(&rho, &spec.descriptor().unwrap()).unwrap();
                let du = dist_uniform_hashed(&hashed, &SigmaMode::Marginal).unwrap();
                // alpha = 0 maps everything to zero, every other seed is a bijection
                // on the top bits, so only the zero seed contributes
                let expected = 0.5 * (1.0 - 1.0 / (1 << l) as f64) * 2.0 / (1 << n) as f64;
                assert!((du - expected).abs() < 1e-12, "{du} vs {expected}");
                assert!(lhl_checks(&spec, &rho).unwrap().iter().all(Check::pass));
            }
        }
        // l = n: the nonzero seeds are bijections with zero distance
        let n = 3;
        let rho = CqState::classical(&vec![vec![0.125]; 8]).unwrap();
        let desc = HashFamilyDescriptor::multiply(n, n).unwrap();
        let hashed = apply_hash(&rho, &desc).unwrap();
        for f in 1..8 {
            let s = hashed.function_state(f).unwrap();
            assert!(dist_uniform(&s, &SigmaMode::Marginal).unwrap() < 1e-15);
        }
    }

    #[test]
    fn deterministic_source() {
        let mut probs = vec![vec![0.0]; 8];
        probs[5][0] = 1.0;
        let rho = CqState::classical(&probs).unwrap();
        let spec = InstanceSpec {
            n: 3,
            l: 1,
            d_e: 1,
            family: FamilyKind::Multiply,
            kind: StateKind::Classical,
            seed: 0,
        };
        let hashed = apply_hash(&rho, &spec.descriptor().unwrap()).unwrap();
        let du = dist_uniform_hashed(&hashed, &SigmaMode::Marginal).unwrap();
        assert!((du - 0.5).abs() < 1e-15);
        let checks = lhl_checks(&spec, &rho).unwrap();
        assert!(checks[0].rhs >= 0.5);
        assert!(checks.iter().all(Check::pass));
    }

    #[test]
    fn average_form_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let spec = InstanceSpec {
            n: 3,
            l: 1,
            d_e: 2,
            family: FamilyKind::Multiply,
            kind: StateKind::RandomRank(2),
            seed: 5,
        };
        let rho_e = random_density(&mut rng, 2, 2);
        let product = CqState::from_blocks(vec![rho_e.scale(0.125); 8]).unwrap();
        let checks = average_checks(&spec, &product, &mut rng).unwrap();
        assert!(checks.iter().all(Check::pass));
        // the zero multiplier is a constant function, so only it contributes
        assert!((checks[2].lhs - 0.5 / 8.0).abs() < 1e-9, "{checks:?}");
        let rho = spec.state().unwrap();
        let checks = average_checks(&spec, &rho, &mut rng).unwrap();
        assert!(checks.iter().all(Check::pass), "{checks:?}");
    }

    #[test]
    fn unknown_suite_and_zero_trials() {
        assert!(matches!(run_suite("nope", 1, 0), Err(Error::UnknownSuite(_))));
        assert!(matches!(run_suite("hoelder", 0, 0), Err(Error::ZeroTrials)));
    }

    #[test]
    fn suites_pass_and_reproduce() {
        for name in SUITES {
            let a = run_suite(name, 12, 42).unwrap();
            assert!(a.passed, "{name}: {}", a.to_json().unwrap());
            let b = run_suite(name, 12, 42).unwrap();
            assert_eq!(a.digest, b.digest);
        }
    }

    #[test]
    fn verify_lhl_single() {
        let spec = InstanceSpec {
            n: 4,
            l: 2,
            d_e: 3,
            family: FamilyKind::Concatenated,
            kind: StateKind::AdversarialPeaked,
            seed: 11,
        };
        let r = verify_lhl(&spec).unwrap();
        assert!(r.passed);
        assert_eq!(r.records[0].checks.len(), EPS_BAR_GRID.len());
        let big = InstanceSpec { n: 5, ..spec };
        assert!(verify_lhl(&big).is_err());
    }
}
