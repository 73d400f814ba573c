//! Prime field arithmetic.
//!
//! Two fields are in play: the computation field `K` every secret lives in, and the
//! (much larger) authentication field `F` used by information checking. Both are
//! prime fields `GF(q)` with `q < 2^63`, so sums fit a `u64` and products are
//! reduced through `u128`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

/// Largest admissible modulus (exclusive).
pub const MAX_MODULUS: u64 = 1 << 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} exceeds the supported bound 2^63")]
    ModulusTooLarge(u128),
    #[error("operands belong to different fields (GF({0}) vs GF({1}))")]
    MismatchedFields(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("target field GF({modulus}) too small to encode {len} elements of GF({base})")]
    FieldTooSmall { modulus: u64, base: u64, len: usize },
    #[error("value {value} is not a valid encoding of {len} elements of GF({base})")]
    InvalidEncoding { value: u64, base: u64, len: usize },
}

/// What a field is used for. Only affects how randomness sources classify draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldRole {
    Computation,
    Authentication,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    modulus: u64,
    role: FieldRole,
}

impl FieldSpec {
    pub fn new(modulus: u64, role: FieldRole) -> Result<Self, FieldError> {
        if modulus >= MAX_MODULUS {
            return Err(FieldError::ModulusTooLarge(modulus as u128));
        }
        if !is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(FieldSpec { modulus, role })
    }

    pub fn computation(modulus: u64) -> Result<Self, FieldError> {
        Self::new(modulus, FieldRole::Computation)
    }

    pub fn authentication(modulus: u64) -> Result<Self, FieldError> {
        Self::new(modulus, FieldRole::Authentication)
    }

    /// Smallest prime authentication field with `q_F > max(q_K^rows, 3^k)`.
    ///
    /// `3^k` is the size of `GF(3^k)`; it keeps the chance that a guessed key
    /// matches one of `k` check vectors below `2^-k`.
    pub fn authentication_for(
        computation: &FieldSpec,
        rows: usize,
        k: usize,
    ) -> Result<Self, FieldError> {
        let mut bound: u128 = 1;
        for _ in 0..rows {
            bound = bound.saturating_mul(computation.modulus as u128);
            if bound >= MAX_MODULUS as u128 {
                return Err(FieldError::ModulusTooLarge(bound));
            }
        }
        let three_k = (0..k).try_fold(1u128, |acc, _| {
            let next = acc * 3;
            (next < MAX_MODULUS as u128).then_some(next)
        });
        let bound =
            bound.max(three_k.ok_or(FieldError::ModulusTooLarge(3u128.saturating_pow(k as u32)))?);
        let q = next_prime_above(bound)?;
        Ok(FieldSpec {
            modulus: q,
            role: FieldRole::Authentication,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            value: 0,
            modulus: self.modulus,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            value: 1 % self.modulus,
            modulus: self.modulus,
        }
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.modulus,
            modulus: self.modulus,
        }
    }

    /// Reduces a signed integer into the field.
    pub fn elem_i64(&self, value: i64) -> FieldElement {
        let m = self.modulus as i128;
        let v = (value as i128).rem_euclid(m) as u64;
        FieldElement {
            value: v,
            modulus: self.modulus,
        }
    }

    pub fn elems(&self, values: &[u64]) -> Vec<FieldElement> {
        values.iter().map(|&v| self.elem(v)).collect()
    }

    pub fn contains(&self, x: &FieldElement) -> bool {
        x.modulus == self.modulus
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.modulus)
    }
}

/// An element of `GF(q)`. Carries its modulus so mixing fields is detectable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn zero_like(&self) -> Self {
        FieldElement {
            value: 0,
            modulus: self.modulus,
        }
    }

    pub fn one_like(&self) -> Self {
        FieldElement {
            value: 1,
            modulus: self.modulus,
        }
    }

    /// Re-reads the integer representative in another field.
    pub fn lift(&self, target: &FieldSpec) -> FieldElement {
        target.elem(self.value)
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, FieldError> {
        self.same(&rhs)?;
        Ok(self + rhs)
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, FieldError> {
        self.same(&rhs)?;
        Ok(self - rhs)
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, FieldError> {
        self.same(&rhs)?;
        Ok(self * rhs)
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self, FieldError> {
        self.same(&rhs)?;
        Ok(self * rhs.inverse()?)
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inverse(&self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let (mut old_r, mut r) = (self.value as i128, self.modulus as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_s, s) = (s, old_s - q * s);
        }
        debug_assert_eq!(old_r, 1);
        let v = old_s.rem_euclid(self.modulus as i128) as u64;
        Ok(FieldElement {
            value: v,
            modulus: self.modulus,
        })
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut base = *self;
        let mut acc = self.one_like();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    fn same(&self, rhs: &Self) -> Result<(), FieldError> {
        if self.modulus != rhs.modulus {
            return Err(FieldError::MismatchedFields(self.modulus, rhs.modulus));
        }
        Ok(())
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operator impls panic on mixed fields; `checked_*` and `field_op` report it instead.

impl Add for FieldElement {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus, "mixed-field addition");
        let s = self.value + rhs.value;
        let value = if s >= self.modulus {
            s - self.modulus
        } else {
            s
        };
        FieldElement {
            value,
            modulus: self.modulus,
        }
    }
}

impl Sub for FieldElement {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus, "mixed-field subtraction");
        let value = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.value + self.modulus - rhs.value
        };
        FieldElement {
            value,
            modulus: self.modulus,
        }
    }
}

impl Mul for FieldElement {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus, "mixed-field multiplication");
        let value = ((self.value as u128 * rhs.value as u128) % self.modulus as u128) as u64;
        FieldElement {
            value,
            modulus: self.modulus,
        }
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        self.zero_like() - self
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn field_op(
    x: FieldElement,
    y: FieldElement,
    kind: FieldOp,
) -> Result<FieldElement, FieldError> {
    match kind {
        FieldOp::Add => x.checked_add(y),
        FieldOp::Sub => x.checked_sub(y),
        FieldOp::Mul => x.checked_mul(y),
        FieldOp::Div => x.checked_div(y),
    }
}

/// Packs a share vector over `K` into one element of `target` as the
/// little-endian base-`|K|` integer `sum_j shares[j] * |K|^j`.
pub fn encode_shares(
    shares: &[FieldElement],
    base: &FieldSpec,
    target: &FieldSpec,
) -> Result<FieldElement, FieldError> {
    check_capacity(base, target, shares.len())?;
    let q = base.modulus() as u128;
    let mut acc: u128 = 0;
    for s in shares.iter().rev() {
        debug_assert!(base.contains(s));
        acc = acc * q + s.value() as u128;
    }
    Ok(target.elem(acc as u64))
}

/// Inverse of [`encode_shares`] for a sequence of known length.
pub fn decode_shares(
    encoded: FieldElement,
    len: usize,
    base: &FieldSpec,
    target: &FieldSpec,
) -> Result<Vec<FieldElement>, FieldError> {
    let capacity = check_capacity(base, target, len)?;
    if encoded.value() as u128 >= capacity {
        return Err(FieldError::InvalidEncoding {
            value: encoded.value(),
            base: base.modulus(),
            len,
        });
    }
    let q = base.modulus();
    let mut rest = encoded.value();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(base.elem(rest % q));
        rest /= q;
    }
    Ok(out)
}

fn check_capacity(base: &FieldSpec, target: &FieldSpec, len: usize) -> Result<u128, FieldError> {
    let mut cap: u128 = 1;
    for _ in 0..len {
        cap = cap.saturating_mul(base.modulus() as u128);
    }
    if target.modulus() as u128 <= cap {
        return Err(FieldError::FieldTooSmall {
            modulus: target.modulus(),
            base: base.modulus(),
            len,
        });
    }
    Ok(cap)
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime strictly greater than `bound`, if it is below [`MAX_MODULUS`].
pub fn next_prime_above(bound: u128) -> Result<u64, FieldError> {
    let mut candidate = bound + 1;
    loop {
        if candidate >= MAX_MODULUS as u128 {
            return Err(FieldError::ModulusTooLarge(candidate));
        }
        if is_prime(candidate as u64) {
            return Ok(candidate as u64);
        }
        candidate += 1;
    }
}
