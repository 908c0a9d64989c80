//! Polynomials over GF(2) and the binary extension fields GF(2^n).
//!
//! A [`BitPolynomial`] stores its coefficients little-endian in packed 64-bit
//! words: bit `i` of the value is the coefficient of `x^i`. The word vector
//! never carries trailing zero words, so structural equality is polynomial
//! equality. The zero polynomial has degree `-1`.
//!
//! Multiplication is carry-less (XOR accumulates partial products). Above a
//! word-count threshold the product switches to Karatsuba; below it a
//! schoolbook word loop with a portable 64x64 kernel is used.

use std::collections::HashMap;
use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Word count at which [`clmul`] switches from schoolbook to Karatsuba.
pub const DEFAULT_KARATSUBA_THRESHOLD: usize = 64;

/// A polynomial over GF(2), little-endian bit packed.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitPolynomial {
    words: Vec<u64>,
}

impl BitPolynomial {
    pub fn zero() -> Self {
        Self { words: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_u64(1)
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::from_u64(2)
    }

    /// The monomial `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut p = Self::zero();
        p.set_bit(k, true);
        p
    }

    pub fn from_u64(v: u64) -> Self {
        Self::from_words(vec![v])
    }

    pub fn from_u128(v: u128) -> Self {
        Self::from_words(vec![v as u64, (v >> 64) as u64])
    }

    pub fn from_words(mut words: Vec<u64>) -> Self {
        while words.last() == Some(&0) {
            words.pop();
        }
        Self { words }
    }

    /// Reads the first `nbits` bits of `bytes`, bit `i` taken from
    /// `bytes[i / 8] >> (i % 8)`. Missing bytes read as zero.
    pub fn from_bytes_le(bytes: &[u8], nbits: usize) -> Self {
        let nwords = nbits.div_ceil(64);
        let mut words = vec![0u64; nwords];
        for (i, chunk) in bytes.chunks(8).enumerate().take(nwords) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_le_bytes(buf);
        }
        let mut p = Self::from_words(words);
        p.truncate(nbits);
        p
    }

    /// Packs the low `nbits` bits into `ceil(nbits / 8)` bytes (inverse of
    /// [`BitPolynomial::from_bytes_le`]).
    pub fn to_bytes_le(&self, nbits: usize) -> Vec<u8> {
        let nbytes = nbits.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for i in 0..nbytes {
            let w = self.words.get(i / 8).copied().unwrap_or(0);
            out.push((w >> (8 * (i % 8))) as u8);
        }
        if !nbits.is_multiple_of(8) {
            if let Some(last) = out.last_mut() {
                *last &= (1u8 << (nbits % 8)) - 1;
            }
        }
        out
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.words.len() == 1 && self.words[0] == 1
    }

    /// Index of the highest set coefficient, `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        match self.words.last() {
            None => -1,
            Some(&top) => {
                (64 * (self.words.len() - 1) + 63 - top.leading_zeros() as usize) as i64
            }
        }
    }

    /// Number of bits needed to hold the value (`degree + 1`).
    pub fn bit_len(&self) -> usize {
        (self.degree() + 1) as usize
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        let w = i / 64;
        if value {
            if self.words.len() <= w {
                self.words.resize(w + 1, 0);
            }
            self.words[w] |= 1 << (i % 64);
        } else if w < self.words.len() {
            self.words[w] &= !(1 << (i % 64));
            self.normalize();
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// The value as a `u64` if it fits.
    pub fn as_u64(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn as_u128(&self) -> Option<u128> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0] as u128),
            2 => Some(self.words[0] as u128 | (self.words[1] as u128) << 64),
            _ => None,
        }
    }

    /// Keeps only the coefficients of `x^0 .. x^(nbits-1)` (reduction mod `x^nbits`).
    pub fn truncate(&mut self, nbits: usize) {
        let nwords = nbits.div_ceil(64);
        self.words.truncate(nwords);
        if !nbits.is_multiple_of(64) {
            if let Some(last) = self.words.get_mut(nwords - 1) {
                *last &= (1u64 << (nbits % 64)) - 1;
            }
        }
        self.normalize();
    }

    pub fn low_bits(&self, nbits: usize) -> Self {
        let mut p = self.clone();
        p.truncate(nbits);
        p
    }

    /// Coefficients `x^from .. x^(from+len-1)`, shifted down to start at `x^0`.
    pub fn bit_range(&self, from: usize, len: usize) -> Self {
        let mut p = self.shr(from);
        p.truncate(len);
        p
    }

    pub fn shl(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let (ws, bs) = (k / 64, k % 64);
        let mut out = vec![0u64; self.words.len() + ws + 1];
        for (i, &w) in self.words.iter().enumerate() {
            out[i + ws] |= w << bs;
            if bs != 0 {
                out[i + ws + 1] |= w >> (64 - bs);
            }
        }
        Self::from_words(out)
    }

    pub fn shr(&self, k: usize) -> Self {
        let (ws, bs) = (k / 64, k % 64);
        if ws >= self.words.len() {
            return Self::zero();
        }
        let src = &self.words[ws..];
        let mut out = vec![0u64; src.len()];
        for i in 0..src.len() {
            out[i] = src[i] >> bs;
            if bs != 0 && i + 1 < src.len() {
                out[i] |= src[i + 1] << (64 - bs);
            }
        }
        Self::from_words(out)
    }

    /// XORs `other * x^shift` into `self` in place.
    fn xor_shifted(&mut self, other: &[u64], shift: usize) {
        if other.is_empty() {
            return;
        }
        let (ws, bs) = (shift / 64, shift % 64);
        let need = other.len() + ws + 1;
        if self.words.len() < need {
            self.words.resize(need, 0);
        }
        for (i, &w) in other.iter().enumerate() {
            self.words[i + ws] ^= w << bs;
            if bs != 0 {
                self.words[i + ws + 1] ^= w >> (64 - bs);
            }
        }
        self.normalize();
    }

    /// `self^2`; over GF(2) this just spreads the bits apart.
    pub fn square(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.words.len());
        for &w in &self.words {
            out.push(spread_bits(w as u32));
            out.push(spread_bits((w >> 32) as u32));
        }
        Self::from_words(out)
    }

    fn normalize(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

fn spread_bits(v: u32) -> u64 {
    let mut x = v as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

impl BitXor for &BitPolynomial {
    type Output = BitPolynomial;

    fn bitxor(self, rhs: &BitPolynomial) -> BitPolynomial {
        let (long, short) = if self.words.len() >= rhs.words.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut words = long.words.clone();
        for (w, s) in words.iter_mut().zip(&short.words) {
            *w ^= s;
        }
        BitPolynomial::from_words(words)
    }
}

impl BitXor for BitPolynomial {
    type Output = BitPolynomial;

    fn bitxor(self, rhs: BitPolynomial) -> BitPolynomial {
        &self ^ &rhs
    }
}

impl BitXorAssign<&BitPolynomial> for BitPolynomial {
    fn bitxor_assign(&mut self, rhs: &BitPolynomial) {
        self.xor_shifted(&rhs.words, 0);
    }
}

impl From<u64> for BitPolynomial {
    fn from(v: u64) -> Self {
        Self::from_u64(v)
    }
}

impl fmt::Debug for BitPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitPolynomial(0x{:x})", self)
    }
}

/// Big-endian hex of the integer whose bit `i` is the coefficient of `x^i`.
impl fmt::LowerHex for BitPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.words.split_last() {
            None => write!(f, "0"),
            Some((top, rest)) => {
                write!(f, "{top:x}")?;
                for w in rest.iter().rev() {
                    write!(f, "{w:016x}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for BitPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for i in (0..self.bit_len()).rev() {
            if !self.bit(i) {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "1")?,
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// carry-less multiplication

/// 64x64 -> 128 carry-less product, 4-bit windowed.
#[inline]
fn clmul64(a: u64, b: u64) -> (u64, u64) {
    let mut table = [0u128; 16];
    let a = a as u128;
    for i in 1..16usize {
        table[i] = if i & 1 == 1 {
            table[i - 1] ^ a
        } else {
            table[i >> 1] << 1
        };
    }
    let mut acc = 0u128;
    for nib in (0..16).rev() {
        acc <<= 4;
        acc ^= table[((b >> (4 * nib)) & 0xF) as usize];
    }
    (acc as u64, (acc >> 64) as u64)
}

fn schoolbook(a: &[u64], b: &[u64], out: &mut [u64]) {
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let (lo, hi) = clmul64(x, y);
            out[i + j] ^= lo;
            out[i + j + 1] ^= hi;
        }
    }
}

/// XORs `a * b` into `out`; `out.len() >= a.len() + b.len()`.
fn mul_into(a: &[u64], b: &[u64], out: &mut [u64], threshold: usize) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    let (a, b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if b.len() <= threshold {
        schoolbook(a, b, out);
        return;
    }
    if a.len() > b.len() + b.len() / 2 {
        // unbalanced: slice the longer operand into chunks of the shorter size
        for (c, chunk) in a.chunks(b.len()).enumerate() {
            let off = c * b.len();
            mul_into(chunk, b, &mut out[off..], threshold);
        }
        return;
    }
    let m = a.len().div_ceil(2);
    let (a0, a1) = a.split_at(m.min(a.len()));
    let (b0, b1) = b.split_at(m.min(b.len()));

    let mut z0 = vec![0u64; a0.len() + b0.len()];
    mul_into(a0, b0, &mut z0, threshold);
    let mut z2 = vec![0u64; a1.len() + b1.len()];
    mul_into(a1, b1, &mut z2, threshold);

    let mut sa = a0.to_vec();
    for (s, &w) in sa.iter_mut().zip(a1) {
        *s ^= w;
    }
    let mut sb = b0.to_vec();
    for (s, &w) in sb.iter_mut().zip(b1) {
        *s ^= w;
    }
    let mut z1 = vec![0u64; sa.len() + sb.len()];
    mul_into(&sa, &sb, &mut z1, threshold);
    for (i, &w) in z0.iter().enumerate() {
        z1[i] ^= w;
    }
    for (i, &w) in z2.iter().enumerate() {
        z1[i] ^= w;
    }

    for (i, &w) in z0.iter().enumerate() {
        out[i] ^= w;
    }
    for (i, &w) in z1.iter().enumerate() {
        out[i + m] ^= w;
    }
    for (i, &w) in z2.iter().enumerate() {
        out[i + 2 * m] ^= w;
    }
}

/// Carry-less product of two polynomials over GF(2).
pub fn clmul(a: &BitPolynomial, b: &BitPolynomial) -> BitPolynomial {
    clmul_with_threshold(a, b, DEFAULT_KARATSUBA_THRESHOLD)
}

/// [`clmul`] with an explicit Karatsuba cutover (in 64-bit words).
pub fn clmul_with_threshold(a: &BitPolynomial, b: &BitPolynomial, threshold: usize) -> BitPolynomial {
    if a.is_zero() || b.is_zero() {
        return BitPolynomial::zero();
    }
    let mut out = vec![0u64; a.words.len() + b.words.len() + 1];
    mul_into(&a.words, &b.words, &mut out, threshold.max(1));
    BitPolynomial::from_words(out)
}

// ---------------------------------------------------------------------------
// division

/// `p mod m` over GF(2).
pub fn mod_reduce(p: &BitPolynomial, m: &BitPolynomial) -> Result<BitPolynomial> {
    if m.is_zero() {
        return Err(Error::ZeroModulus);
    }
    let dm = m.degree() as usize;
    if p.degree() < m.degree() {
        return Ok(p.clone());
    }
    if dm == 0 {
        return Ok(BitPolynomial::zero());
    }
    let tail = m.low_bits(dm);
    if tail.count_ones() <= 32 && (tail.degree() as usize) <= dm / 2 {
        Ok(fold_reduce(p.clone(), dm, &tail))
    } else {
        Ok(long_division(p, m).1)
    }
}

/// Reduction by `x^dm + tail` when `tail` is sparse and low degree:
/// `hi * x^dm + lo == lo + hi * tail`.
fn fold_reduce(mut p: BitPolynomial, dm: usize, tail: &BitPolynomial) -> BitPolynomial {
    let terms: Vec<usize> = (0..tail.bit_len()).filter(|&i| tail.bit(i)).collect();
    while p.degree() >= dm as i64 {
        let hi = p.shr(dm);
        p.truncate(dm);
        for &t in &terms {
            p.xor_shifted(&hi.words, t);
        }
    }
    p
}

/// Quotient and remainder of `p / m`; `m` must be nonzero.
fn long_division(p: &BitPolynomial, m: &BitPolynomial) -> (BitPolynomial, BitPolynomial) {
    let dm = m.degree();
    let mut r = p.clone();
    let mut q = BitPolynomial::zero();
    while r.degree() >= dm {
        let shift = (r.degree() - dm) as usize;
        q.set_bit(shift, true);
        r.xor_shifted(&m.words, shift);
    }
    (q, r)
}

/// Quotient and remainder of `p / m`.
pub fn div_rem(p: &BitPolynomial, m: &BitPolynomial) -> Result<(BitPolynomial, BitPolynomial)> {
    if m.is_zero() {
        return Err(Error::ZeroModulus);
    }
    Ok(long_division(p, m))
}

pub fn gcd(a: &BitPolynomial, b: &BitPolynomial) -> BitPolynomial {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_zero() {
        let r = long_division(&a, &b).1;
        a = b;
        b = r;
    }
    a
}

// ---------------------------------------------------------------------------
// fields

/// A concrete representation of GF(2^n): the polynomial ring modulo an
/// irreducible of degree `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldContext {
    n: usize,
    modulus: BitPolynomial,
}

impl FieldContext {
    /// GF(2^n) reduced by [`smallest_irreducible`]`(n)`.
    pub fn new(n: usize) -> Result<Self> {
        let modulus = smallest_irreducible(n)?;
        Ok(Self { n, modulus })
    }

    pub fn with_modulus(modulus: BitPolynomial) -> Result<Self> {
        if !is_irreducible(&modulus)? {
            return Err(Error::Reducible);
        }
        Ok(Self {
            n: modulus.degree() as usize,
            modulus,
        })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &BitPolynomial {
        &self.modulus
    }

    pub fn contains(&self, a: &BitPolynomial) -> bool {
        a.degree() < self.n as i64
    }

    fn check(&self, a: &BitPolynomial) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::OutOfField {
                degree: a.degree(),
                n: self.n,
            })
        }
    }

    fn reduce(&self, p: &BitPolynomial) -> BitPolynomial {
        mod_reduce(p, &self.modulus).expect("modulus is nonzero")
    }

    pub fn mul(&self, a: &BitPolynomial, b: &BitPolynomial) -> Result<BitPolynomial> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.reduce(&clmul(a, b)))
    }

    pub fn square(&self, a: &BitPolynomial) -> Result<BitPolynomial> {
        self.check(a)?;
        Ok(self.reduce(&a.square()))
    }

    pub fn pow(&self, a: &BitPolynomial, mut e: u128) -> Result<BitPolynomial> {
        self.check(a)?;
        let mut base = a.clone();
        let mut acc = BitPolynomial::one();
        if self.n == 0 {
            return Ok(BitPolynomial::zero());
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = self.reduce(&clmul(&acc, &base));
            }
            e >>= 1;
            if e > 0 {
                base = self.reduce(&base.square());
            }
        }
        Ok(acc)
    }

    /// Multiplicative inverse as `a^(2^n - 2)`; `None` for zero.
    pub fn inverse(&self, a: &BitPolynomial) -> Result<Option<BitPolynomial>> {
        self.check(a)?;
        if a.is_zero() {
            return Ok(None);
        }
        // 2^n - 2 = 2 + 4 + ... + 2^(n-1)
        let mut acc = BitPolynomial::one();
        let mut sq = a.clone();
        for _ in 1..self.n {
            sq = self.reduce(&sq.square());
            acc = self.reduce(&clmul(&acc, &sq));
        }
        Ok(Some(acc))
    }
}

/// Reduced product in GF(2^n).
pub fn gf_mul(a: &BitPolynomial, b: &BitPolynomial, ctx: &FieldContext) -> Result<BitPolynomial> {
    ctx.mul(a, b)
}

/// `a^e` in GF(2^n) by square-and-multiply.
pub fn gf_pow(a: &BitPolynomial, e: u128, ctx: &FieldContext) -> Result<BitPolynomial> {
    ctx.pow(a, e)
}

// ---------------------------------------------------------------------------
// irreducibility

fn prime_factors(mut k: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= k {
        if k.is_multiple_of(p) {
            out.push(p);
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        p += 1;
    }
    if k > 1 {
        out.push(k);
    }
    out
}

/// Rabin's test: `m` of degree `k` is irreducible iff `x^(2^k) = x (mod m)`
/// and `gcd(x^(2^(k/p)) - x, m) = 1` for every prime `p | k`.
pub fn is_irreducible(m: &BitPolynomial) -> Result<bool> {
    let k = m.degree();
    if k < 1 {
        return Err(Error::DegreeZero);
    }
    let k = k as usize;
    if k == 1 {
        return Ok(true);
    }
    if !m.bit(0) {
        return Ok(false);
    }
    let primes = prime_factors(k);
    let mut wanted: Vec<usize> = primes.iter().map(|p| k / p).collect();
    wanted.sort_unstable();

    let x = BitPolynomial::x();
    let mut power = x.clone();
    let mut next = wanted.iter().peekable();
    for i in 1..=k {
        power = mod_reduce(&power.square(), m)?;
        if next.peek() == Some(&&i) {
            next.next();
            let h = &power ^ &x;
            if !gcd(&h, m).is_one() {
                return Ok(false);
            }
        }
    }
    Ok(power == x)
}

/// Irreducible polynomials of degree `<= max_deg` as `u64`, by sieving.
fn small_irreducibles(max_deg: usize) -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    debug_assert!(max_deg <= SIEVE_DEGREE);
    TABLE.get_or_init(|| {
        let mut out: Vec<u64> = Vec::new();
        for cand in 2u64..(1u64 << (SIEVE_DEGREE + 1)) {
            let d = 63 - cand.leading_zeros() as usize;
            let reducible = out.iter().any(|&f| {
                let df = 63 - f.leading_zeros() as usize;
                2 * df <= d && u64_mod(cand, f) == 0
            });
            if !reducible {
                out.push(cand);
            }
        }
        out
    })
}

const SIEVE_DEGREE: usize = 12;

fn u64_mod(mut a: u64, m: u64) -> u64 {
    let dm = 63 - m.leading_zeros();
    while a != 0 && 63 - a.leading_zeros() >= dm {
        a ^= m << (63 - a.leading_zeros() - dm);
    }
    a
}

fn has_small_factor(p: &BitPolynomial) -> bool {
    let deg = p.degree() as usize;
    small_irreducibles(SIEVE_DEGREE).iter().any(|&f| {
        let df = 63 - f.leading_zeros() as usize;
        2 * df <= deg && mod_reduce(p, &BitPolynomial::from_u64(f)).unwrap().is_zero()
    })
}

/// The irreducible polynomial of the given degree with the smallest value as
/// a little-endian integer. Results are memoized process-wide.
pub fn smallest_irreducible(degree: usize) -> Result<BitPolynomial> {
    static CACHE: OnceLock<Mutex<HashMap<usize, BitPolynomial>>> = OnceLock::new();
    if degree < 1 {
        return Err(Error::DegreeZero);
    }
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&degree) {
        return Ok(p.clone());
    }
    let found = search_irreducible(degree);
    cache.lock().unwrap().insert(degree, found.clone());
    Ok(found)
}

fn search_irreducible(degree: usize) -> BitPolynomial {
    if degree == 1 {
        return BitPolynomial::x();
    }
    let lead = BitPolynomial::monomial(degree);
    // constant term must be set (else x divides); weight must be odd (else x+1 divides)
    let mut tail: u64 = 1;
    loop {
        if tail.count_ones().is_multiple_of(2) {
            let cand = &lead ^ &BitPolynomial::from_u64(tail);
            if !has_small_factor(&cand) && is_irreducible(&cand).unwrap() {
                return cand;
            }
        }
        tail += 2;
        assert!(
            degree >= 64 || tail < 1u64 << degree,
            "an irreducible polynomial exists for every degree"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Bit-at-a-time shift-and-xor product, kept independent of the word kernels.
    fn reference_clmul(a: &BitPolynomial, b: &BitPolynomial) -> BitPolynomial {
        let mut acc = BitPolynomial::zero();
        for i in 0..a.bit_len() {
            if a.bit(i) {
                acc = &acc ^ &b.shl(i);
            }
        }
        acc
    }

    fn u64_clmul(a: u64, b: u64) -> u128 {
        let mut acc = 0u128;
        for i in 0..64 {
            if (b >> i) & 1 == 1 {
                acc ^= (a as u128) << i;
            }
        }
        acc
    }

    /// Irreducibility by trial division over every polynomial of degree <= deg/2.
    fn trial_division_irreducible(m: u64) -> bool {
        let d = 63 - m.leading_zeros();
        if d == 0 {
            return false;
        }
        (2u64..(1u64 << (d / 2 + 1))).all(|f| 63 - f.leading_zeros() > d / 2 || u64_mod(m, f) != 0)
    }

    #[test]
    fn clmul_examples() {
        let a = BitPolynomial::from_u64(0xdead_beef);
        assert_eq!(clmul(&a, &BitPolynomial::one()), a);
        assert_eq!(
            clmul(&BitPolynomial::from_u64(0b11), &BitPolynomial::from_u64(0b11)),
            BitPolynomial::from_u64(0b101)
        );
        // frozen from reference_clmul
        let p = clmul(&BitPolynomial::from_u64(0x53), &BitPolynomial::from_u64(0xCA));
        assert_eq!(p, reference_clmul(&BitPolynomial::from_u64(0x53), &BitPolynomial::from_u64(0xCA)));
        assert_eq!(p.as_u64(), Some(0x3F7E));
    }

    #[test]
    fn aes_inverse_pair() {
        let m = BitPolynomial::from_u64(0x11B);
        let p = clmul(&BitPolynomial::from_u64(0x53), &BitPolynomial::from_u64(0xCA));
        assert!(mod_reduce(&p, &m).unwrap().is_one());
        // brute-force inverse search agrees
        let ctx = FieldContext::with_modulus(m).unwrap();
        let a = BitPolynomial::from_u64(0x53);
        let inv = (1u64..256)
            .find(|&b| ctx.mul(&a, &BitPolynomial::from_u64(b)).unwrap().is_one())
            .unwrap();
        assert_eq!(inv, 0xCA);
        assert_eq!(ctx.inverse(&a).unwrap().unwrap().as_u64(), Some(0xCA));
    }

    #[test]
    fn mod_reduce_edges() {
        let p = BitPolynomial::from_u64(0b101);
        let m = BitPolynomial::from_u64(0b10011);
        assert_eq!(mod_reduce(&p, &m).unwrap(), p);
        assert!(mod_reduce(&m, &m).unwrap().is_zero());
        assert!(matches!(mod_reduce(&p, &BitPolynomial::zero()), Err(Error::ZeroModulus)));
        assert!(mod_reduce(&p, &BitPolynomial::one()).unwrap().is_zero());
    }

    #[test]
    fn gf16_examples() {
        let ctx = FieldContext::with_modulus(BitPolynomial::from_u64(0b10011)).unwrap();
        let a = BitPolynomial::from_u64(0b0011);
        assert_eq!(ctx.mul(&a, &BitPolynomial::one()).unwrap(), a);
        assert!(ctx.mul(&BitPolynomial::zero(), &a).unwrap().is_zero());
        assert_eq!(
            ctx.mul(&a, &BitPolynomial::from_u64(0b0111)).unwrap().as_u64(),
            Some(0b1001)
        );
        assert!(matches!(
            ctx.mul(&BitPolynomial::from_u64(0b10000), &a),
            Err(Error::OutOfField { .. })
        ));
        assert_eq!(ctx.pow(&a, 1).unwrap(), a);
        assert!(ctx.pow(&a, 0).unwrap().is_one());
        assert!(ctx.pow(&BitPolynomial::one(), 12345).unwrap().is_one());
        // x has order 15; iterated multiplication agrees
        let x = BitPolynomial::x();
        assert!(ctx.pow(&x, 15).unwrap().is_one());
        let mut acc = BitPolynomial::one();
        for i in 1..=15 {
            acc = ctx.mul(&acc, &x).unwrap();
            assert_eq!(acc.is_one(), i == 15);
        }
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&BitPolynomial::from_u64(0b111)).unwrap());
        assert!(!is_irreducible(&BitPolynomial::from_u64(0b101)).unwrap());
        assert!(is_irreducible(&BitPolynomial::from_u64(0b10011)).unwrap());
        assert!(trial_division_irreducible(0b10011));
        assert!(matches!(is_irreducible(&BitPolynomial::one()), Err(Error::DegreeZero)));
        assert!(matches!(is_irreducible(&BitPolynomial::zero()), Err(Error::DegreeZero)));
    }

    #[test]
    fn rabin_matches_trial_division_up_to_degree_12() {
        for m in 2u64..(1 << 13) {
            assert_eq!(
                is_irreducible(&BitPolynomial::from_u64(m)).unwrap(),
                trial_division_irreducible(m),
                "m = {m:#b}"
            );
        }
    }

    #[test]
    fn smallest_irreducible_examples() {
        assert_eq!(smallest_irreducible(1).unwrap().as_u64(), Some(0b10));
        assert_eq!(smallest_irreducible(2).unwrap().as_u64(), Some(0b111));
        // ascending scan with the trial-division oracle
        for d in 1..=16u32 {
            let oracle = ((1u64 << d)..(1u64 << (d + 1)))
                .find(|&m| trial_division_irreducible(m))
                .unwrap();
            assert_eq!(smallest_irreducible(d as usize).unwrap().as_u64(), Some(oracle));
        }
        assert_eq!(smallest_irreducible(8).unwrap().as_u64(), Some(0x11B));
        assert!(matches!(smallest_irreducible(0), Err(Error::DegreeZero)));
    }

    #[test]
    fn bytes_round_trip_and_truncation() {
        let bytes = [0xAB, 0xCD, 0xEF, 0x01, 0x23];
        let p = BitPolynomial::from_bytes_le(&bytes, 36);
        assert_eq!(p.to_bytes_le(36), vec![0xAB, 0xCD, 0xEF, 0x01, 0x03]);
        assert_eq!(p.as_u64(), Some(0x3_01EF_CDAB));
        assert_eq!(BitPolynomial::from_bytes_le(&bytes, 0), BitPolynomial::zero());
        assert_eq!(BitPolynomial::from_u64(0xF0).low_bits(4), BitPolynomial::zero());
    }

    #[test]
    fn degree_and_display() {
        assert_eq!(BitPolynomial::zero().degree(), -1);
        assert_eq!(BitPolynomial::one().degree(), 0);
        assert_eq!(BitPolynomial::monomial(200).degree(), 200);
        assert_eq!(BitPolynomial::from_u64(0b10011).to_string(), "x^4 + x + 1");
        assert_eq!(format!("{:x}", BitPolynomial::monomial(64)), "10000000000000000");
    }

    #[test]
    fn karatsuba_matches_schoolbook_on_large_operands() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        for (la, lb) in [(300usize, 300usize), (517, 129), (1024, 1000), (65, 3)] {
            let a = BitPolynomial::from_words((0..la).map(|_| rng.random()).collect());
            let b = BitPolynomial::from_words((0..lb).map(|_| rng.random()).collect());
            assert_eq!(clmul_with_threshold(&a, &b, 1), clmul_with_threshold(&a, &b, usize::MAX));
            assert_eq!(clmul_with_threshold(&a, &b, 8), clmul(&a, &b));
        }
    }

    #[test]
    fn reduction_paths_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let m = smallest_irreducible(300).unwrap();
        for _ in 0..50 {
            let p = BitPolynomial::from_words((0..10).map(|_| rng.random()).collect());
            assert_eq!(mod_reduce(&p, &m).unwrap(), long_division(&p, &m).1);
        }
    }

    #[test]
    fn multiply_bijection_exhaustive_small_fields() {
        for n in [4usize, 8] {
            let ctx = FieldContext::new(n).unwrap();
            for d in 1u64..(1 << n) {
                let d = BitPolynomial::from_u64(d);
                let mut seen = vec![false; 1 << n];
                for a in 0u64..(1 << n) {
                    let v = ctx.mul(&d, &BitPolynomial::from_u64(a)).unwrap();
                    let v = v.as_u64().unwrap() as usize;
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
        }
    }

    fn arb_poly(max_words: usize) -> impl Strategy<Value = BitPolynomial> {
        prop::collection::vec(any::<u64>(), 0..=max_words).prop_map(BitPolynomial::from_words)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn clmul_matches_bitwise_reference(a in arb_poly(4), b in arb_poly(4)) {
            let p = clmul(&a, &b);
            prop_assert_eq!(&p, &reference_clmul(&a, &b));
            prop_assert_eq!(&p, &clmul(&b, &a));
            if !a.is_zero() && !b.is_zero() {
                prop_assert_eq!(p.degree(), a.degree() + b.degree());
            }
            let x = &a ^ &b;
            prop_assert!(x.degree() <= a.degree().max(b.degree()));
        }

        #[test]
        fn word_kernel_matches_u128_reference(a in any::<u64>(), b in any::<u64>()) {
            let (lo, hi) = clmul64(a, b);
            prop_assert_eq!((lo as u128) | ((hi as u128) << 64), u64_clmul(a, b));
        }

        #[test]
        fn square_is_self_product(a in arb_poly(6)) {
            prop_assert_eq!(a.square(), clmul(&a, &a));
        }

        #[test]
        fn division_identity(p in arb_poly(5), m in arb_poly(2)) {
            prop_assume!(!m.is_zero());
            let (q, r) = div_rem(&p, &m).unwrap();
            prop_assert!(r.degree() < m.degree());
            prop_assert_eq!(&clmul(&q, &m) ^ &r, p.clone());
            prop_assert_eq!(mod_reduce(&p, &m).unwrap(), r);
        }

        #[test]
        fn field_axioms(seed in any::<u64>(), which in 0usize..4) {
            use rand::{Rng, SeedableRng};
            let n = [4usize, 8, 16, 64][which];
            let ctx = FieldContext::new(n).unwrap();
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let mut el = || {
                let v: u64 = rng.random();
                BitPolynomial::from_u64(if n == 64 { v } else { v & ((1 << n) - 1) })
            };
            let (a, b, c) = (el(), el(), el());
            let ab = ctx.mul(&a, &b).unwrap();
            prop_assert_eq!(&ab, &ctx.mul(&b, &a).unwrap());
            prop_assert_eq!(
                ctx.mul(&ab, &c).unwrap(),
                ctx.mul(&a, &ctx.mul(&b, &c).unwrap()).unwrap()
            );
            prop_assert_eq!(
                ctx.mul(&a, &(&b ^ &c)).unwrap(),
                &ab ^ &ctx.mul(&a, &c).unwrap()
            );
            if !a.is_zero() {
                let inv = ctx.pow(&a, (1u128 << n) - 2).unwrap();
                prop_assert!(ctx.mul(&a, &inv).unwrap().is_one());
                prop_assert_eq!(Some(inv), ctx.inverse(&a).unwrap());
            }
        }
    }
}
