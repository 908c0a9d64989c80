//! Seeded hash families over GF(2^n) and exhaustive collision auditing.
//!
//! * `Multiply`: `x * alpha` in GF(2^n), keep the low `l` bits. Two-universal.
//! * `Polynomial`: split `x` into `r` blocks of `k` bits and evaluate
//!   `x_1 a^(r-1) + ... + x_r` in GF(2^k). `(r-1)/2^k`-almost two-universal.
//! * `Concatenated`: a polynomial stage over GF(2^k) followed by a multiply
//!   stage over GF(2^k) truncated to `l` bits. Collision bounds add.
//!
//! Bit strings are [`BitPolynomial`] values: bit `i` of an input is the
//! coefficient of `x^i`. Block `x_1` holds input bits `0..k`; the final block
//! is zero-padded in its high bits.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2poly::{BitPolynomial, FieldContext};

/// Default cap on `2^seed_bits * 2^(2n)` for exhaustive audits.
pub const DEFAULT_AUDIT_BUDGET: u64 = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Multiply,
    Polynomial,
    Concatenated,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Multiply => "multiply",
            FamilyKind::Polynomial => "polynomial",
            FamilyKind::Concatenated => "concatenated",
        }
    }
}

/// Full description of a hash family. Serializes to `kind:n:l[:k[:r]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct HashFamilyDescriptor {
    kind: FamilyKind,
    n: usize,
    l: usize,
    k: usize,
}

impl HashFamilyDescriptor {
    pub fn multiply(n: usize, l: usize) -> Result<Self> {
        check_lengths(n, l)?;
        Ok(Self {
            kind: FamilyKind::Multiply,
            n,
            l,
            k: n,
        })
    }

    /// Polynomial family with output width `k` and `ceil(n / k)` blocks.
    pub fn polynomial(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Parameter("n and k must be at least 1".into()));
        }
        Ok(Self {
            kind: FamilyKind::Polynomial,
            n,
            l: k,
            k,
        })
    }

    pub fn concatenated(n: usize, l: usize, k: usize) -> Result<Self> {
        check_lengths(n, l)?;
        if l > k {
            return Err(Error::IntermediateTooSmall { l, k });
        }
        Ok(Self {
            kind: FamilyKind::Concatenated,
            n,
            l,
            k,
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Input bits.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Output bits.
    pub fn l(&self) -> usize {
        self.l
    }

    /// Degree of the field the family computes in (`n` for `Multiply`).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of `k`-bit blocks the input is split into (1 for `Multiply`).
    pub fn blocks(&self) -> usize {
        match self.kind {
            FamilyKind::Multiply => 1,
            _ => self.n.div_ceil(self.k),
        }
    }

    pub fn seed_bits(&self) -> usize {
        match self.kind {
            FamilyKind::Multiply => self.n,
            FamilyKind::Polynomial => self.k,
            FamilyKind::Concatenated => 2 * self.k,
        }
    }

    /// The collision bound the construction guarantees.
    pub fn theoretical_delta(&self) -> BigRational {
        let pow2 = |e: usize| BigInt::one() << e;
        let poly = || BigRational::new(BigInt::from(self.blocks() - 1), pow2(self.k));
        match self.kind {
            FamilyKind::Multiply => BigRational::new(BigInt::one(), pow2(self.l)),
            FamilyKind::Polynomial => poly(),
            FamilyKind::Concatenated => poly() + BigRational::new(BigInt::one(), pow2(self.l)),
        }
    }
}

fn check_lengths(n: usize, l: usize) -> Result<()> {
    if l == 0 || n == 0 {
        return Err(Error::Parameter("n and l must be at least 1".into()));
    }
    if l > n {
        return Err(Error::OutputLongerThanInput { l, n });
    }
    Ok(())
}

/// Collision bound of a descriptor as an exact rational.
pub fn theoretical_delta(desc: &HashFamilyDescriptor) -> BigRational {
    desc.theoretical_delta()
}

impl fmt::Display for HashFamilyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.kind.name();
        match self.kind {
            FamilyKind::Multiply => write!(f, "{name}:{}:{}", self.n, self.l),
            FamilyKind::Polynomial => {
                write!(f, "{name}:{}:{}:{}:{}", self.n, self.l, self.k, self.blocks())
            }
            FamilyKind::Concatenated => write!(f, "{name}:{}:{}:{}", self.n, self.l, self.k),
        }
    }
}

impl FromStr for HashFamilyDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Descriptor(format!("{s:?}: {why}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let nums = parts[1..]
            .iter()
            .map(|p| p.parse::<usize>().map_err(|_| bad("fields must be non-negative integers")))
            .collect::<Result<Vec<_>>>()?;
        let desc = match (parts[0].to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("multiply", [n, l]) => Self::multiply(*n, *l)?,
            ("polynomial", [n, l, k] | [n, l, k, _]) => {
                if l != k {
                    return Err(bad("polynomial output width must equal k"));
                }
                Self::polynomial(*n, *k)?
            }
            ("concatenated", [n, l, k]) => Self::concatenated(*n, *l, *k)?,
            ("multiply" | "polynomial" | "concatenated", _) => return Err(bad("wrong field count")),
            _ => return Err(bad("unknown family kind")),
        };
        if let (FamilyKind::Polynomial, [_, _, _, r]) = (desc.kind, nums.as_slice()) {
            if *r != desc.blocks() {
                return Err(bad("block count must be ceil(n / k)"));
            }
        }
        Ok(desc)
    }
}

impl TryFrom<String> for HashFamilyDescriptor {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<HashFamilyDescriptor> for String {
    fn from(d: HashFamilyDescriptor) -> String {
        d.to_string()
    }
}

/// A seed of exactly `len` bits. For `Concatenated` the first-stage element
/// occupies the low `k` bits and the second-stage element the next `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Seed {
    bits: BitPolynomial,
    len: usize,
}

impl Seed {
    pub fn new(bits: BitPolynomial, len: usize) -> Result<Self> {
        if bits.bit_len() > len {
            return Err(Error::SeedLength {
                expected: len,
                got: bits.bit_len(),
            });
        }
        Ok(Self { bits, len })
    }

    pub fn from_u64(v: u64, len: usize) -> Result<Self> {
        Self::new(BitPolynomial::from_u64(v), len)
    }

    /// Parses hex where each pair of digits is one byte and byte `j` holds
    /// bits `8j..8j+8`. A trailing unpaired digit is the low nibble of the
    /// last byte. Exactly `ceil(len / 4)` digits are required.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        if hex.len() != len.div_ceil(4) {
            return Err(Error::SeedLength {
                expected: len,
                got: 4 * hex.len(),
            });
        }
        let bytes = decode_hex_le(hex)?;
        let bits = BitPolynomial::from_bytes_le(&bytes, 8 * bytes.len());
        Self::new(bits, len)
    }

    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let mut s = hex::encode(self.bits.to_bytes_le(8 * digits.div_ceil(2)));
        if digits % 2 == 1 {
            // final byte only has its low nibble in play
            let last = s.pop().unwrap();
            s.pop();
            s.push(last);
        }
        s
    }

    pub fn bits(&self) -> &BitPolynomial {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

fn decode_hex_le(hex: &str) -> Result<Vec<u8>> {
    let bad = || Error::Parameter(format!("invalid hex string {hex:?}"));
    let (pairs, tail) = hex.split_at(hex.len() - hex.len() % 2);
    let mut bytes = hex::decode(pairs).map_err(|_| bad())?;
    if !tail.is_empty() {
        bytes.push(u8::from_str_radix(tail, 16).map_err(|_| bad())?);
    }
    Ok(bytes)
}

/// Low `l` bits of `x * alpha` in the given field.
pub fn multiply_hash(
    x: &BitPolynomial,
    alpha: &BitPolynomial,
    l: usize,
    field: &FieldContext,
) -> Result<BitPolynomial> {
    if l > field.degree() {
        return Err(Error::OutputLongerThanInput {
            l,
            n: field.degree(),
        });
    }
    Ok(field.mul(x, alpha)?.low_bits(l))
}

/// Horner evaluation of `sum_i x_i alpha^(r-i)` over the `k`-bit blocks of
/// the `n`-bit input, where `k` is the field degree.
pub fn poly_hash(
    x: &BitPolynomial,
    alpha: &BitPolynomial,
    n: usize,
    field: &FieldContext,
) -> Result<BitPolynomial> {
    if x.bit_len() > n {
        return Err(Error::InputLength {
            expected: n,
            got: x.bit_len(),
        });
    }
    let k = field.degree();
    let mut acc = BitPolynomial::zero();
    for i in 0..n.div_ceil(k) {
        let block = x.bit_range(i * k, k.min(n - i * k));
        acc = &field.mul(&acc, alpha)? ^ &block;
    }
    Ok(acc)
}

/// Polynomial stage keyed by `alpha1`, then multiply stage keyed by
/// `alpha2`, both over GF(2^k), truncated to `l` bits.
pub fn concat_hash(
    x: &BitPolynomial,
    alpha1: &BitPolynomial,
    alpha2: &BitPolynomial,
    n: usize,
    l: usize,
    field: &FieldContext,
) -> Result<BitPolynomial> {
    if l > field.degree() {
        return Err(Error::IntermediateTooSmall {
            l,
            k: field.degree(),
        });
    }
    let inner = poly_hash(x, alpha1, n, field)?;
    multiply_hash(&inner, alpha2, l, field)
}

/// A descriptor together with the field it computes in.
#[derive(Clone, Debug)]
pub struct HashFamily {
    desc: HashFamilyDescriptor,
    field: FieldContext,
}

impl HashFamily {
    pub fn new(desc: HashFamilyDescriptor) -> Result<Self> {
        let field = FieldContext::new(desc.k)?;
        Ok(Self { desc, field })
    }

    pub fn descriptor(&self) -> &HashFamilyDescriptor {
        &self.desc
    }

    pub fn field(&self) -> &FieldContext {
        &self.field
    }

    /// Evaluates the member selected by `seed` on the `n`-bit input `x`.
    pub fn hash(&self, x: &BitPolynomial, seed: &Seed) -> Result<BitPolynomial> {
        let d = &self.desc;
        if seed.len() != d.seed_bits() {
            return Err(Error::SeedLength {
                expected: d.seed_bits(),
                got: seed.len(),
            });
        }
        if x.bit_len() > d.n {
            return Err(Error::InputLength {
                expected: d.n,
                got: x.bit_len(),
            });
        }
        match d.kind {
            FamilyKind::Multiply => multiply_hash(x, seed.bits(), d.l, &self.field),
            FamilyKind::Polynomial => poly_hash(x, seed.bits(), d.n, &self.field),
            FamilyKind::Concatenated => {
                let a1 = seed.bits().low_bits(d.k);
                let a2 = seed.bits().bit_range(d.k, d.k);
                concat_hash(x, &a1, &a2, d.n, d.l, &self.field)
            }
        }
    }

    /// [`HashFamily::hash`] for families whose input, seed and output fit in
    /// a machine word.
    pub fn hash_u64(&self, x: u64, seed: u64) -> Result<u64> {
        let seed = Seed::from_u64(seed, self.desc.seed_bits())?;
        let z = self.hash(&BitPolynomial::from_u64(x), &seed)?;
        Ok(z.as_u64().expect("output fits in a word"))
    }

    /// Outputs `f_seed(x)` for every `x < 2^n`; requires `n < 64`.
    pub fn table(&self, seed: u64) -> Result<Vec<u64>> {
        if self.desc.n >= 64 || self.desc.seed_bits() > 64 || self.desc.l > 64 {
            return Err(Error::Parameter("family too wide to tabulate".into()));
        }
        (0..1u64 << self.desc.n).map(|x| self.hash_u64(x, seed)).collect()
    }

    /// Number of family members, if it fits in a `u64`.
    pub fn size(&self) -> Option<u64> {
        let s = self.desc.seed_bits();
        (s < 64).then(|| 1u64 << s)
    }
}

/// Exact maximum collision probability over distinct input pairs, by
/// enumerating every seed, with the default budget.
pub fn audit_collision_prob(desc: &HashFamilyDescriptor) -> Result<BigRational> {
    audit_collision_prob_with_budget(desc, DEFAULT_AUDIT_BUDGET)
}

/// [`audit_collision_prob`] with an explicit cap on `2^seed_bits * 2^(2n)`.
pub fn audit_collision_prob_with_budget(
    desc: &HashFamilyDescriptor,
    budget: u64,
) -> Result<BigRational> {
    let log_needed = desc.seed_bits() + 2 * desc.n;
    let needed = 2f64.powi(log_needed as i32);
    if budget == 0 || log_needed >= 64 || (1u64 << log_needed) > budget {
        return Err(Error::AuditBudget {
            needed,
            budget: budget as f64,
        });
    }
    let family = HashFamily::new(desc.clone())?;
    let inputs = 1usize << desc.n;
    let seeds = 1u64 << desc.seed_bits();
    // collision counts for pairs x < x', packed upper-triangular
    let row = |x: usize| x * (2 * inputs - x - 1) / 2;
    let mut counts = vec![0u32; inputs * (inputs - 1) / 2];
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 1 << desc.l];
    for seed in 0..seeds {
        for b in buckets.iter_mut() {
            b.clear();
        }
        for (x, z) in family.table(seed)?.into_iter().enumerate() {
            buckets[z as usize].push(x);
        }
        for b in &buckets {
            for (i, &x) in b.iter().enumerate() {
                let base = row(x);
                for &y in &b[i + 1..] {
                    counts[base + y - x - 1] += 1;
                }
            }
        }
    }
    let worst = counts.iter().copied().max().unwrap_or(0);
    if worst == 0 {
        return Ok(BigRational::zero());
    }
    Ok(BigRational::new(BigInt::from(worst), BigInt::from(seeds)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Direct pairwise count, independent of the bucket bookkeeping.
    fn naive_audit(desc: &HashFamilyDescriptor) -> BigRational {
        let fam = HashFamily::new(desc.clone()).unwrap();
        let seeds = 1u64 << desc.seed_bits();
        let tables: Vec<Vec<u64>> = (0..seeds).map(|s| fam.table(s).unwrap()).collect();
        let inputs = 1usize << desc.n();
        let mut worst = 0;
        for x in 0..inputs {
            for y in x + 1..inputs {
                let c = tables.iter().filter(|t| t[x] == t[y]).count();
                worst = worst.max(c);
            }
        }
        ratio(worst as i64, seeds as i64)
    }

    #[test]
    fn multiply_examples() {
        let field = FieldContext::with_modulus(BitPolynomial::from_u64(0b10011)).unwrap();
        let x = BitPolynomial::from_u64(0b0011);
        let a = BitPolynomial::from_u64(0b0111);
        assert_eq!(multiply_hash(&x, &a, 2, &field).unwrap().as_u64(), Some(0b01));
        assert_eq!(
            multiply_hash(&x, &BitPolynomial::one(), 2, &field).unwrap(),
            x.low_bits(2)
        );
        assert!(multiply_hash(&BitPolynomial::zero(), &a, 3, &field).unwrap().is_zero());
        assert!(matches!(
            multiply_hash(&x, &a, 5, &field),
            Err(Error::OutputLongerThanInput { .. })
        ));
        assert!(matches!(
            HashFamilyDescriptor::multiply(4, 5),
            Err(Error::OutputLongerThanInput { .. })
        ));
    }

    #[test]
    fn poly_examples() {
        let field = FieldContext::new(4).unwrap();
        let x = BitPolynomial::from_u64(0xABC);
        // alpha = 0 leaves the last block
        assert_eq!(poly_hash(&x, &BitPolynomial::zero(), 12, &field).unwrap().as_u64(), Some(0xA));
        assert!(poly_hash(&BitPolynomial::zero(), &BitPolynomial::from_u64(7), 12, &field)
            .unwrap()
            .is_zero());
        // r = 1 ignores alpha
        let y = BitPolynomial::from_u64(0x9);
        for a in 0..16 {
            assert_eq!(poly_hash(&y, &BitPolynomial::from_u64(a), 4, &field).unwrap(), y);
        }
        // padded final block: n = 10 gives blocks 0xC, 0xB, 0x2
        let a = BitPolynomial::from_u64(0b0010);
        let x10 = x.low_bits(10);
        let manual = {
            let m = |p: &BitPolynomial, q: u64| field.mul(p, &BitPolynomial::from_u64(q)).unwrap();
            let a2 = m(&a, 2);
            &(&m(&a2, 0xC) ^ &m(&a, 0xB)) ^ &BitPolynomial::from_u64(0x2)
        };
        assert_eq!(poly_hash(&x10, &a, 10, &field).unwrap(), manual);
    }

    #[test]
    fn concat_examples() {
        let desc = HashFamilyDescriptor::concatenated(16, 2, 7).unwrap();
        let fam = HashFamily::new(desc).unwrap();
        for seed in [0u64, 1, 0x3FFF, 0x1234] {
            assert_eq!(fam.hash_u64(0, seed).unwrap(), 0);
        }
        // alpha2 = 1
        let field = fam.field().clone();
        let x = BitPolynomial::from_u64(0xBEEF);
        let a1 = BitPolynomial::from_u64(0x55);
        let seed = Seed::new(&a1 ^ &BitPolynomial::one().shl(7), 14).unwrap();
        let inner = poly_hash(&x, &a1, 16, &field).unwrap();
        assert_eq!(fam.hash(&x, &seed).unwrap(), inner.low_bits(2));
        assert!(matches!(
            HashFamilyDescriptor::concatenated(16, 8, 7),
            Err(Error::IntermediateTooSmall { .. })
        ));
    }

    #[test]
    fn concat_n16_l2_eps_half() {
        // k = floor(2 + log2(16/2) + log2(4)) = 7
        let k = crate::bounds::short_seed_params(16, 2, 0.5).unwrap().k;
        assert_eq!(k, 7);
        let fam = HashFamily::new(HashFamilyDescriptor::concatenated(16, 2, 7).unwrap()).unwrap();
        // stage oracle: u64 shift-and-xor over x^7 + x + 1, 7-bit blocks low first
        let field = FieldContext::new(7).unwrap();
        assert_eq!(field.modulus().as_u64(), Some(0b10000011));
        let (a1, a2) = (0x45u64, 0x2Bu64);
        let x = 0x1234u64;
        let blocks = [x & 0x7F, (x >> 7) & 0x7F, x >> 14];
        let mul = |p: u64, q: u64| {
            let mut acc = 0u64;
            for i in 0..7 {
                if (q >> i) & 1 == 1 {
                    acc ^= p << i;
                }
            }
            for i in (7..14).rev() {
                if (acc >> i) & 1 == 1 {
                    acc ^= 0b10000011 << (i - 7);
                }
            }
            acc
        };
        let mut h = 0;
        for b in blocks {
            h = mul(h, a1) ^ b;
        }
        let expected = mul(h, a2) & 0b11;
        assert_eq!(fam.hash_u64(x, a1 | a2 << 7).unwrap(), expected);
        assert_eq!(expected, 0b10);
    }

    #[test]
    fn theoretical_delta_examples() {
        let m = HashFamilyDescriptor::multiply(8, 8).unwrap();
        assert_eq!(theoretical_delta(&m), ratio(1, 256));
        let p = HashFamilyDescriptor::polynomial(50, 10).unwrap();
        assert_eq!(p.blocks(), 5);
        assert_eq!(theoretical_delta(&p), ratio(4, 1024));
        let c = HashFamilyDescriptor::concatenated(50, 8, 10).unwrap();
        assert_eq!(theoretical_delta(&c), ratio(1, 256) + ratio(4, 1024));
        assert_eq!(c.seed_bits(), 20);
    }

    #[test]
    fn audit_examples() {
        let m = HashFamilyDescriptor::multiply(4, 2).unwrap();
        assert_eq!(audit_collision_prob(&m).unwrap(), ratio(1, 4));
        let p = HashFamilyDescriptor::polynomial(12, 4).unwrap();
        let d = audit_collision_prob(&p).unwrap();
        assert!(d <= ratio(2, 16));
        assert_eq!(d, ratio(2, 16));
        assert!(matches!(
            audit_collision_prob_with_budget(&m, 0),
            Err(Error::AuditBudget { .. })
        ));
        let big = HashFamilyDescriptor::multiply(16, 4).unwrap();
        assert!(matches!(audit_collision_prob(&big), Err(Error::AuditBudget { .. })));
    }

    #[test]
    fn audit_matches_naive_pair_count() {
        for desc in [
            HashFamilyDescriptor::multiply(4, 1).unwrap(),
            HashFamilyDescriptor::multiply(5, 3).unwrap(),
            HashFamilyDescriptor::polynomial(8, 3).unwrap(),
            HashFamilyDescriptor::concatenated(6, 2, 3).unwrap(),
        ] {
            assert_eq!(audit_collision_prob(&desc).unwrap(), naive_audit(&desc), "{desc}");
        }
    }

    #[test]
    fn multiply_collision_count_is_exact() {
        for n in [4usize, 8] {
            for l in 1..=4 {
                let fam = HashFamily::new(HashFamilyDescriptor::multiply(n, l).unwrap()).unwrap();
                let tables: Vec<Vec<u64>> = (0..1u64 << n).map(|s| fam.table(s).unwrap()).collect();
                let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(n as u64 * 10 + l as u64);
                for _ in 0..50 {
                    let x = rng.random_range(0..1usize << n);
                    let y = rng.random_range(0..1usize << n);
                    if x == y {
                        continue;
                    }
                    let c = tables.iter().filter(|t| t[x] == t[y]).count();
                    assert_eq!(c, 1 << (n - l));
                }
            }
        }
    }

    #[test]
    fn descriptor_text_round_trip() {
        for s in ["multiply:8:3", "polynomial:12:4:4:3", "concatenated:1024:16:32"] {
            let d: HashFamilyDescriptor = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
            assert_eq!(d.to_string().parse::<HashFamilyDescriptor>().unwrap(), d);
        }
        let d: HashFamilyDescriptor = "polynomial:12:4:4".parse().unwrap();
        assert_eq!(d.to_string(), "polynomial:12:4:4:3");
        for bad in ["", "multiply", "multiply:8", "polynomial:12:4:4:2", "polynomial:12:3:4", "toeplitz:8:2", "multiply:x:2"] {
            assert!(bad.parse::<HashFamilyDescriptor>().is_err(), "{bad}");
        }
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, "\"polynomial:12:4:4:3\"");
    }

    #[test]
    fn seed_hex() {
        let s = Seed::from_hex("a5", 8).unwrap();
        assert_eq!(s.bits().as_u64(), Some(0xa5));
        assert_eq!(s.to_hex(), "a5");
        let s = Seed::from_hex("3412b", 20).unwrap();
        assert_eq!(s.bits().as_u64(), Some(0xb1234));
        assert_eq!(s.to_hex(), "3412b");
        let s = Seed::from_hex("7", 3).unwrap();
        assert_eq!(s.bits().as_u64(), Some(7));
        assert!(Seed::from_hex("f", 3).is_err());
        assert!(Seed::from_hex("a5a5", 8).is_err());
        assert!(Seed::from_hex("zz", 8).is_err());
    }

    proptest! {
        #[test]
        fn poly_hash_is_linear(x in any::<u64>(), y in any::<u64>(), a in 0u64..1024) {
            let field = FieldContext::new(10).unwrap();
            let (x, y) = (BitPolynomial::from_u64(x), BitPolynomial::from_u64(y));
            let a = BitPolynomial::from_u64(a);
            let hx = poly_hash(&x, &a, 64, &field).unwrap();
            let hy = poly_hash(&y, &a, 64, &field).unwrap();
            prop_assert_eq!(poly_hash(&(&x ^ &y), &a, 64, &field).unwrap(), &hx ^ &hy);
        }

        #[test]
        fn concat_is_composition(x in any::<u64>(), a1 in 0u64..(1 << 13), a2 in 0u64..(1 << 13)) {
            let fam = HashFamily::new(HashFamilyDescriptor::concatenated(64, 5, 13).unwrap()).unwrap();
            let field = fam.field();
            let xp = BitPolynomial::from_u64(x);
            let inner = poly_hash(&xp, &BitPolynomial::from_u64(a1), 64, field).unwrap();
            let outer = multiply_hash(&inner, &BitPolynomial::from_u64(a2), 5, field).unwrap();
            prop_assert_eq!(fam.hash_u64(x, a1 | a2 << 13).unwrap(), outer.as_u64().unwrap());
        }

        #[test]
        fn seed_hex_round_trip(v in any::<u64>(), len in 1usize..=64) {
            let v = if len == 64 { v } else { v & ((1 << len) - 1) };
            let s = Seed::from_u64(v, len).unwrap();
            prop_assert_eq!(Seed::from_hex(&s.to_hex(), len).unwrap(), s);
        }
    }
}
