//! Python bindings: field arithmetic, hash families, bound calculators,
//! classical-quantum states and the verification suites.

use leftover::bounds;
use leftover::gf2poly::{self, BitPolynomial};
use leftover::hash_families::{audit_collision_prob, HashFamily, HashFamilyDescriptor, Seed};
use leftover::qinfo::{self, CqState, HminMethod, MinEntropy, SigmaMode, DEFAULT_HMIN_TOL};
use leftover::qmat::{ComplexMatrix, HermitianOperator};
use leftover::verify::{self, StateKind};
use num_bigint::BigUint;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: leftover::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_poly(v: &BigUint) -> BitPolynomial {
    let bytes = v.to_bytes_le();
    BitPolynomial::from_bytes_le(&bytes, 8 * bytes.len())
}

fn from_poly(p: &BitPolynomial) -> BigUint {
    BigUint::from_bytes_le(&p.to_bytes_le(p.bit_len()))
}

/// Carry-less product of two polynomials over GF(2) given as integers.
#[pyfunction]
fn clmul(a: BigUint, b: BigUint) -> BigUint {
    from_poly(&gf2poly::clmul(&to_poly(&a), &to_poly(&b)))
}

#[pyfunction]
fn is_irreducible(m: BigUint) -> PyResult<bool> {
    gf2poly::is_irreducible(&to_poly(&m)).map_err(py_err)
}

/// Smallest irreducible polynomial of the given degree, as an integer.
#[pyfunction]
fn smallest_irreducible(degree: usize) -> PyResult<BigUint> {
    gf2poly::smallest_irreducible(degree)
        .map(|p| from_poly(&p))
        .map_err(py_err)
}

/// A seeded hash family given by a descriptor such as `"multiply:64:32"`,
/// `"polynomial:1024:64:64"` or `"concatenated:1024:128:160"`.
#[pyclass(name = "HashFamily", frozen)]
struct PyHashFamily {
    inner: HashFamily,
}

#[pymethods]
impl PyHashFamily {
    #[new]
    fn new(descriptor: &str) -> PyResult<Self> {
        let desc: HashFamilyDescriptor = descriptor.parse().map_err(py_err)?;
        Ok(Self {
            inner: HashFamily::new(desc).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.descriptor().n()
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.descriptor().l()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.descriptor().k()
    }

    #[getter]
    fn seed_bits(&self) -> usize {
        self.inner.descriptor().seed_bits()
    }

    /// Collision bound as `(numerator, denominator)`.
    fn theoretical_delta(&self) -> (BigUint, BigUint) {
        let d = self.inner.descriptor().theoretical_delta();
        (
            d.numer().to_biguint().unwrap_or_default(),
            d.denom().to_biguint().unwrap_or_default(),
        )
    }

    /// Exact maximum collision probability over distinct inputs, as
    /// `(numerator, denominator)`.
    fn audit(&self) -> PyResult<(BigUint, BigUint)> {
        let d = audit_collision_prob(self.inner.descriptor()).map_err(py_err)?;
        Ok((
            d.numer().to_biguint().unwrap_or_default(),
            d.denom().to_biguint().unwrap_or_default(),
        ))
    }

    /// Hashes the `n`-bit integer `x` with the integer seed.
    fn hash(&self, x: BigUint, seed: BigUint) -> PyResult<BigUint> {
        let seed = Seed::new(to_poly(&seed), self.seed_bits()).map_err(py_err)?;
        self.inner
            .hash(&to_poly(&x), &seed)
            .map(|z| from_poly(&z))
            .map_err(py_err)
    }

    /// Hashes the first `n` bits of `data` with a hex seed; returns the
    /// output bits packed little-endian into bytes.
    fn extract(&self, data: &[u8], seed_hex: &str) -> PyResult<Vec<u8>> {
        leftover::cli::extract_bytes(self.inner.descriptor(), seed_hex, data).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("HashFamily('{}')", self.inner.descriptor())
    }
}

#[pyfunction]
fn classical_delta(l: f64, hmin: f64) -> f64 {
    bounds::classical_delta(l, hmin)
}

#[pyfunction]
fn extractable_bits(hmin: f64, delta: f64) -> PyResult<u64> {
    bounds::extractable_bits(hmin, delta).map_err(py_err)
}

/// Optimized distance for a `delta`-almost two-universal family; returns
/// `(distance, minimizing eps)`.
#[pyfunction]
fn general_delta(l: f64, delta: f64, hmin: f64) -> PyResult<(f64, f64)> {
    let g = bounds::general_delta(l, delta, hmin).map_err(py_err)?;
    Ok((g.delta, g.eps_star))
}

#[pyfunction]
#[pyo3(signature = (l, hmin, eps=0.0))]
fn two_universal_bound(l: f64, hmin: f64, eps: f64) -> PyResult<f64> {
    bounds::thm_two_universal_delta(l, hmin, eps).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (l, delta, hmin, eps_bar, eps=0.0))]
fn almost_universal_bound(l: f64, delta: f64, hmin: f64, eps_bar: f64, eps: f64) -> PyResult<f64> {
    bounds::thm_almost_delta(l, delta, hmin, eps, eps_bar).map_err(py_err)
}

/// Parameters of the short-seed concatenated construction, as a dict.
#[pyfunction]
fn short_seed_params<'py>(py: Python<'py>, n: u64, l: u64, eps: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = bounds::short_seed_params(n, l, eps).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("n", p.n)?;
    d.set_item("l", p.l)?;
    d.set_item("eps", p.eps)?;
    d.set_item("k", p.k)?;
    d.set_item("s", p.s)?;
    d.set_item("delta1", p.delta1)?;
    d.set_item("delta2", p.delta2)?;
    d.set_item("log2_delta", p.log2_delta())?;
    Ok(d)
}

fn operator(rows: Vec<Vec<Complex64>>) -> PyResult<HermitianOperator> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("operator must be a square matrix"));
    }
    let m = ComplexMatrix::new(d, d, rows.into_iter().flatten().collect()).map_err(py_err)?;
    HermitianOperator::new(m).map_err(py_err)
}

fn rows(op: &HermitianOperator) -> Vec<Vec<Complex64>> {
    let d = op.dim();
    op.matrix().data().chunks(d.max(1)).map(<[Complex64]>::to_vec).collect()
}

fn min_entropy_dict<'py>(py: Python<'py>, m: &MinEntropy) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("h", m.h)?;
    d.set_item("h_upper", m.h_upper)?;
    d.set_item("p_lower", m.p_lower)?;
    d.set_item("p_upper", m.p_upper)?;
    d.set_item("gap", m.gap)?;
    d.set_item("method", format!("{:?}", m.method).to_lowercase())?;
    d.set_item("sigma", rows(&m.sigma))?;
    Ok(d)
}

/// Classical register with quantum side information: one positive block
/// per label, with total trace at most one.
#[pyclass(name = "CqState", frozen)]
struct PyCqState {
    inner: CqState,
}

#[pymethods]
impl PyCqState {
    /// Builds a state from a list of square complex matrices.
    #[new]
    #[pyo3(signature = (blocks, labels=None))]
    fn new(blocks: Vec<Vec<Vec<Complex64>>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let ops = blocks.into_iter().map(operator).collect::<PyResult<Vec<_>>>()?;
        let inner = match labels {
            Some(l) => CqState::new(l, ops),
            None => CqState::from_blocks(ops),
        }
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Diagonal side information: `probs[x][e] = P(x, e)`.
    #[staticmethod]
    fn classical(probs: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: CqState::classical(&probs).map_err(py_err)?,
        })
    }

    /// Random normalized state; `kind` is one of `random-rank-<r>`,
    /// `classical`, `pure-side-info`, `adversarial-peaked`.
    #[staticmethod]
    #[pyo3(signature = (n_labels, dim_e, kind="random-rank-1", seed=0))]
    fn random(n_labels: usize, dim_e: usize, kind: &str, seed: u64) -> PyResult<Self> {
        let kind: StateKind = kind.parse().map_err(py_err)?;
        Ok(Self {
            inner: verify::random_cq_seeded(n_labels, dim_e, kind, seed).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CqState::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[getter]
    fn n_labels(&self) -> usize {
        self.inner.n_labels()
    }

    #[getter]
    fn dim_e(&self) -> usize {
        self.inner.dim_e()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    fn blocks(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.inner.blocks().iter().map(rows).collect()
    }

    fn marginal(&self) -> Vec<Vec<Complex64>> {
        rows(&self.inner.marginal())
    }

    /// Certified min-entropy of the label given the side information.
    /// `method` forces `commuting`, `helstrom` or `barrier`.
    #[pyo3(signature = (tol=DEFAULT_HMIN_TOL, method=None))]
    fn hmin<'py>(&self, py: Python<'py>, tol: f64, method: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
        let m = match method {
            None => qinfo::hmin_cq(&self.inner, tol),
            Some(name) => {
                let method = match name {
                    "commuting" => HminMethod::Commuting,
                    "helstrom" => HminMethod::Helstrom,
                    "barrier" => HminMethod::Barrier,
                    _ => return Err(PyValueError::new_err(format!("unknown method {name:?}"))),
                };
                qinfo::hmin_cq_with(&self.inner, tol, method)
            }
        }
        .map_err(py_err)?;
        min_entropy_dict(py, &m)
    }

    /// Distance of the label from uniform given the side information, with
    /// `sigma` equal to the marginal (`marginal`) or locally optimized
    /// (`search`).
    #[pyo3(signature = (mode="marginal"))]
    fn dist_uniform(&self, mode: &str) -> PyResult<f64> {
        qinfo::dist_uniform(&self.inner, &sigma_mode(mode)?).map_err(py_err)
    }

    /// Distance from uniform of the hash output given the function and the
    /// side information.
    #[pyo3(signature = (family, mode="marginal"))]
    fn hashed_dist_uniform(&self, family: &str, mode: &str) -> PyResult<f64> {
        let desc: HashFamilyDescriptor = family.parse().map_err(py_err)?;
        let hashed = qinfo::apply_hash(&self.inner, &desc).map_err(py_err)?;
        qinfo::dist_uniform_hashed(&hashed, &sigma_mode(mode)?).map_err(py_err)
    }

    /// Nearby state with controlled collision entropy; returns
    /// `(state, purified distance, discarded rank)`.
    fn smooth(&self, eps_bar: f64) -> PyResult<(PyCqState, f64, usize)> {
        let s = qinfo::smooth_for_collision(&self.inner, eps_bar).map_err(py_err)?;
        Ok((PyCqState { inner: s.state }, s.distance, s.discarded_rank))
    }

    fn trace_distance(&self, other: &PyCqState) -> PyResult<f64> {
        self.inner.trace_distance(&other.inner).map_err(py_err)
    }

    fn purified_distance(&self, other: &PyCqState) -> PyResult<f64> {
        self.inner.purified_distance(&other.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("CqState(n_labels={}, dim_e={})", self.inner.n_labels(), self.inner.dim_e())
    }
}

fn sigma_mode(mode: &str) -> PyResult<SigmaMode> {
    match mode {
        "marginal" => Ok(SigmaMode::Marginal),
        "search" => Ok(SigmaMode::Search),
        _ => Err(PyValueError::new_err(format!("unknown mode {mode:?}"))),
    }
}

/// Runs a verification suite and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (suite, trials=100, seed=0))]
fn run_suite(py: Python<'_>, suite: &str, trials: usize, seed: u64) -> PyResult<String> {
    py.detach(|| verify::run_suite(suite, trials, seed).and_then(|r| r.to_json()))
        .map_err(py_err)
}

#[pyfunction]
fn suites() -> Vec<&'static str> {
    verify::SUITES.to_vec()
}

#[pymodule(name = "leftover")]
fn leftover_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(clmul, m)?)?;
    m.add_function(wrap_pyfunction!(is_irreducible, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_irreducible, m)?)?;
    m.add_function(wrap_pyfunction!(classical_delta, m)?)?;
    m.add_function(wrap_pyfunction!(extractable_bits, m)?)?;
    m.add_function(wrap_pyfunction!(general_delta, m)?)?;
    m.add_function(wrap_pyfunction!(two_universal_bound, m)?)?;
    m.add_function(wrap_pyfunction!(almost_universal_bound, m)?)?;
    m.add_function(wrap_pyfunction!(short_seed_params, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(suites, m)?)?;
    m.add_class::<PyHashFamily>()?;
    m.add_class::<PyCqState>()?;
    Ok(())
}
