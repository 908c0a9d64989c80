//! Dense complex matrices for small quantum systems (dimension <= 64).
//!
//! Hermitian spectra come from a cyclic complex Jacobi eigensolver. Matrix
//! functions, trace norms and generalized inverses are all built on it, with
//! one global rule for deciding the support of an operator: eigenvalues whose
//! magnitude is below [`SUPPORT_CUTOFF`] times the largest magnitude count as
//! zero.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative eigenvalue cutoff separating the support from the kernel.
pub const SUPPORT_CUTOFF: f64 = 1e-10;
/// Largest allowed `max |M - M^dagger|` for a Hermitian operator.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues below `-NEGATIVE_TOL` make an operator "not positive".
pub const NEGATIVE_TOL: f64 = 1e-8;
pub const MAX_JACOBI_SWEEPS: usize = 100;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(rows, cols, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Column vector.
    pub fn column_vector(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |a_ij - b_ij|`, infinite on a shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.check_same_shape(other).is_err() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max row sum of absolute values.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on a shape mismatch; use [`ComplexMatrix::matmul`] to get an error.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix shapes agree")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix shapes agree")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix shapes agree")
    }
}

/// Kronecker product `A (x) B`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |i, j| {
        a[(i / b.rows, j / b.cols)] * b[(i % b.rows, j % b.cols)]
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Traces out one factor of a `d_a * d_b` square matrix, keeping `keep`.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if !m.is_square() || m.rows != da * db {
        return Err(Error::Dimension(format!(
            "dims {da}x{db} do not factor a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    Ok(match keep {
        Subsystem::A => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    })
}

/// A square matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianOperator(ComplexMatrix);

impl TryFrom<ComplexMatrix> for HermitianOperator {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermitianOperator> for ComplexMatrix {
    fn from(h: HermitianOperator) -> ComplexMatrix {
        h.0
    }
}

impl HermitianOperator {
    /// Checks `max |M - M^dagger| <= 1e-12` and stores the Hermitian part.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.rows, m.cols)));
        }
        let err = m.hermiticity_error();
        if !(err <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(err));
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Hermitian part of a square matrix, for results that are Hermitian in
    /// exact arithmetic (e.g. `A rho A^dagger`) but carry rounding error.
    pub fn symmetrize(m: &ComplexMatrix) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        Self(m.hermitian_part())
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn from_diag(values: &[f64]) -> Self {
        Self(ComplexMatrix::from_diag(values))
    }

    /// `|v><v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::symmetrize(&ComplexMatrix::outer(v, v))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.try_add(&other.0)?))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.try_sub(&other.0)?))
    }

    /// `A M A^dagger`.
    pub fn conjugate_by(&self, a: &ComplexMatrix) -> Result<Self> {
        let m = a.matmul(&self.0)?.matmul(&a.dagger())?;
        Ok(Self::symmetrize(&m))
    }

    /// `<v| M |v>`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let mv = self.0.apply(v).expect("vector length matches");
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }

    pub fn eig(&self) -> Result<HermEig> {
        herm_eig(self)
    }

    pub fn func(&self, f: MatFunc) -> Result<Self> {
        mat_func(self, f)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(herm_eig(self)?.values)
    }

    pub fn op_norm(&self) -> Result<f64> {
        op_norm(self)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(*herm_eig(self)?.values.last().unwrap_or(&0.0))
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(*herm_eig(self)?.values.first().unwrap_or(&0.0))
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        self.try_add(rhs).expect("dimensions agree")
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;

    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        self.try_sub(rhs).expect("dimensions agree")
    }
}

/// Spectral decomposition `M = V diag(values) V^dagger`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermEig {
    /// `V diag(f(values)) V^dagger`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mut m = ComplexMatrix::zeros(n, n);
        for (k, &w) in fv.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    m[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        HermitianOperator::symmetrize(&m)
    }

    /// Magnitude below which an eigenvalue is treated as zero.
    pub fn cutoff(&self) -> f64 {
        SUPPORT_CUTOFF * self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn rank(&self) -> usize {
        let c = self.cutoff();
        self.values.iter().filter(|v| v.abs() > c).count()
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
pub fn herm_eig(m: &HermitianOperator) -> Result<HermEig> {
    let n = m.dim();
    let mut a = m.0.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = 1e-15 * scale;
    let mut converged = scale == 0.0;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged || off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let residual = off_diagonal_norm(&a);
        if residual > target {
            return Err(Error::NoConvergence { residual });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermEig { values, vectors })
}

/// One Jacobi rotation zeroing `a[p][q]`: a phase `diag(1, e^{-i phi})`
/// makes the pivot real, then a real rotation diagonalizes the 2x2 block.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
    if mag < 1e-300 || mag <= f64::EPSILON * 1e-3 * (app.abs().min(aqq.abs())) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = (apq / mag).conj();
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    let (jpp, jpq, jqp, jqq) = (C64::new(c, 0.0), C64::new(s, 0.0), phase * -s, phase * c);
    let n = a.rows;
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatFunc {
    Sqrt,
    /// Generalized inverse square root, taken on the support only.
    InvSqrtSupport,
    SupportProjector,
    Abs,
}

/// Applies `f` to the spectrum of `m`.
pub fn mat_func(m: &HermitianOperator, f: MatFunc) -> Result<HermitianOperator> {
    let e = herm_eig(m)?;
    func_from_eig(&e, f)
}

pub fn func_from_eig(e: &HermEig, f: MatFunc) -> Result<HermitianOperator> {
    let cut = e.cutoff();
    Ok(match f {
        MatFunc::Sqrt => {
            if let Some(&low) = e.values.first() {
                if low < -NEGATIVE_TOL {
                    return Err(Error::NotPositive(low));
                }
            }
            e.reconstruct(|v| if v > cut { v.sqrt() } else { 0.0 })
        }
        MatFunc::InvSqrtSupport => e.reconstruct(|v| if v > cut { 1.0 / v.sqrt() } else { 0.0 }),
        MatFunc::SupportProjector => e.reconstruct(|v| if v.abs() > cut { 1.0 } else { 0.0 }),
        MatFunc::Abs => e.reconstruct(f64::abs),
    })
}

/// Largest eigenvalue magnitude.
pub fn op_norm(m: &HermitianOperator) -> Result<f64> {
    let e = herm_eig(m)?;
    Ok(e.values.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{}x{} is not square", m.rows, m.cols)));
    }
    if m.hermiticity_error() <= HERMITIAN_TOL * m.max_abs().max(1.0) {
        let e = herm_eig(&HermitianOperator::symmetrize(m))?;
        return Ok(e.values.iter().map(|v| v.abs()).sum());
    }
    singular_values(m).map(|s| s.iter().sum())
}

/// Singular values via the Hermitian spectrum of `M^dagger M`, descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let gram = HermitianOperator::symmetrize(&(&m.dagger() * m));
    let e = herm_eig(&gram)?;
    let cut = e.cutoff();
    let mut s: Vec<f64> = e
        .values
        .iter()
        .map(|&v| if v > cut { v.sqrt() } else { 0.0 })
        .collect();
    s.reverse();
    Ok(s)
}

/// Schatten `p`-norm `(sum_i s_i^p)^(1/p)`.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    Ok(singular_values(m)?.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Traces out one factor of a bipartite Hermitian operator.
pub fn partial_trace(
    m: &HermitianOperator,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<HermitianOperator> {
    Ok(HermitianOperator::symmetrize(&partial_trace_matrix(&m.0, dims, keep)?))
}

/// Frobenius norm of `AB - BA`.
pub fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (&(a * b) - &(b * a)).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha20Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn random_hermitian(rng: &mut ChaCha20Rng, n: usize) -> HermitianOperator {
        HermitianOperator::symmetrize(&random_matrix(rng, n, n))
    }

    fn random_psd(rng: &mut ChaCha20Rng, n: usize) -> HermitianOperator {
        let g = random_matrix(rng, n, n);
        HermitianOperator::symmetrize(&(&g * &g.dagger()))
    }

    /// Real symmetric 2x2 closed form, for a sign-convention-free oracle.
    fn eig2(a: f64, b: f64, d: f64) -> (f64, f64) {
        let m = (a + d) / 2.0;
        let r = (((a - d) / 2.0).powi(2) + b * b).sqrt();
        (m - r, m + r)
    }

    fn check_decomposition(m: &HermitianOperator) {
        let e = herm_eig(m).unwrap();
        let n = m.dim();
        let v = &e.vectors;
        let vd = &(&v.dagger() * v);
        assert!(vd.max_abs_diff(&ComplexMatrix::identity(n)) <= 1e-10);
        let mv = m.matrix() * v;
        let vl = v * &ComplexMatrix::from_diag(&e.values);
        let scale = m.matrix().inf_norm().max(1e-300);
        assert!(mv.max_abs_diff(&vl) <= 1e-10 * scale);
        assert!(e.reconstruct(|x| x).matrix().max_abs_diff(m.matrix()) <= 1e-10 * scale);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_examples() {
        assert_eq!(herm_eig(&HermitianOperator::identity(3)).unwrap().values, vec![1.0; 3]);
        let e = herm_eig(&HermitianOperator::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        let x = HermitianOperator::new(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()).unwrap();
        let e = herm_eig(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let y = HermitianOperator::new(
            ComplexMatrix::new(2, 2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).unwrap(),
        )
        .unwrap();
        check_decomposition(&y);
        let (lo, hi) = eig2(0.3, 0.7, -1.2);
        let m = HermitianOperator::new(ComplexMatrix::from_real(2, 2, &[0.3, 0.7, 0.7, -1.2]).unwrap()).unwrap();
        let e = herm_eig(&m).unwrap();
        assert!((e.values[0] - lo).abs() < 1e-14 && (e.values[1] - hi).abs() < 1e-14);
        check_decomposition(&HermitianOperator::zeros(4));
    }

    #[test]
    fn hermitian_validation() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.5, 0.0]).unwrap();
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian(_))));
        assert!(ComplexMatrix::from_real(2, 2, &[f64::NAN, 0.0, 0.0, 0.0]).is_err());
        assert!(ComplexMatrix::from_real(2, 2, &[0.0; 3]).is_err());
    }

    #[test]
    fn reconstruction_on_random_matrices() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for n in [2usize, 3, 4, 8, 16] {
            for _ in 0..1000 {
                check_decomposition(&random_hermitian(&mut rng, n));
            }
        }
        // degenerate spectra and a larger case
        let g = random_matrix(&mut rng, 6, 2);
        check_decomposition(&HermitianOperator::symmetrize(&(&g * &g.dagger())));
        check_decomposition(&random_hermitian(&mut rng, 64));
    }

    #[test]
    fn mat_func_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let g = random_matrix(&mut rng, 4, 2);
        let p = mat_func(&HermitianOperator::symmetrize(&(&g * &g.dagger())), MatFunc::SupportProjector).unwrap();
        let sp = mat_func(&p, MatFunc::Sqrt).unwrap();
        assert!(sp.matrix().max_abs_diff(p.matrix()) < 1e-12);
        assert!((p.trace() - 2.0).abs() < 1e-12);

        let inv = mat_func(&HermitianOperator::from_diag(&[4.0, 0.0]), MatFunc::InvSqrtSupport).unwrap();
        assert!(inv.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[0.5, 0.0])) < 1e-15);
        let abs = mat_func(&HermitianOperator::from_diag(&[-2.0, 3.0]), MatFunc::Abs).unwrap();
        assert!(abs.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[2.0, 3.0])) < 1e-15);
        assert!(matches!(
            mat_func(&HermitianOperator::from_diag(&[-1e-6, 1.0]), MatFunc::Sqrt),
            Err(Error::NotPositive(_))
        ));
        assert!(mat_func(&HermitianOperator::from_diag(&[-1e-11, 1.0]), MatFunc::Sqrt).is_ok());

        let a = random_psd(&mut rng, 5);
        let s = mat_func(&a, MatFunc::Sqrt).unwrap();
        assert!((s.matrix() * s.matrix()).max_abs_diff(a.matrix()) < 1e-10 * a.matrix().max_abs());
    }

    #[test]
    fn norms() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let g = random_matrix(&mut rng, 5, 3);
        let p = mat_func(&HermitianOperator::symmetrize(&(&g * &g.dagger())), MatFunc::SupportProjector).unwrap();
        assert!((trace_norm(p.matrix()).unwrap() - 3.0).abs() < 1e-10);
        assert!((op_norm(&p).unwrap() - 1.0).abs() < 1e-10);
        assert!((trace_norm(&ComplexMatrix::from_diag(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-15);
        for n in [2usize, 3, 5] {
            for _ in 0..50 {
                let m = random_matrix(&mut rng, n, n);
                // oracle: square roots of the Gram spectrum
                let gram = HermitianOperator::symmetrize(&(&m.dagger() * &m));
                let oracle: f64 = herm_eig(&gram).unwrap().values.iter().map(|v| v.max(0.0).sqrt()).sum();
                assert!((trace_norm(&m).unwrap() - oracle).abs() < 1e-10 * oracle.max(1.0));
                // a unitary-invariant check independent of the Gram route
                let h = random_hermitian(&mut rng, n);
                let direct: f64 = herm_eig(&h).unwrap().values.iter().map(|v| v.abs()).sum();
                assert!((trace_norm(h.matrix()).unwrap() - direct).abs() < 1e-12 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn tensor_and_partial_trace() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4));
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let rho = random_psd(&mut rng, 2);
        let sigma = random_psd(&mut rng, 3);
        let t = HermitianOperator::symmetrize(&tensor(rho.matrix(), sigma.matrix()));
        let a = partial_trace(&t, (2, 3), Subsystem::A).unwrap();
        assert!(a.matrix().max_abs_diff(&rho.matrix().scale(sigma.trace())) < 1e-12);
        let b = partial_trace(&t, (2, 3), Subsystem::B).unwrap();
        assert!(b.matrix().max_abs_diff(&sigma.matrix().scale(rho.trace())) < 1e-12);
        assert!(partial_trace(&t, (2, 2), Subsystem::A).is_err());
    }

    #[test]
    fn hoelder_inequality() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for trial in 0..1000 {
            let n = 2 + trial % 3;
            let (a, b, c) = (
                random_matrix(&mut rng, n, n),
                random_matrix(&mut rng, n, n),
                random_matrix(&mut rng, n, n),
            );
            let lhs = trace_norm(&(&(&a * &b) * &c)).unwrap();
            for (r, s, t) in [(4.0, 2.0, 4.0), (3.0, 3.0, 3.0)] {
                let rhs = schatten_norm(&a, r).unwrap()
                    * schatten_norm(&b, s).unwrap()
                    * schatten_norm(&c, t).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-10), "{lhs} > {rhs}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partial_trace_preserves_trace(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let m = random_hermitian(&mut rng, da * db);
            for keep in [Subsystem::A, Subsystem::B] {
                let p = partial_trace(&m, (da, db), keep).unwrap();
                prop_assert!((p.trace() - m.trace()).abs() < 1e-12);
            }
        }
    }
}
