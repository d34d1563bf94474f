//! Capped relative precision p-adic numbers.
//!
//! A nonzero value is stored as `p^val * unit` where `unit` is a p-adic unit
//! known modulo `p^prec`. Values that cannot be told apart from zero are kept as
//! an explicit marker recording how far they are known to vanish: `O(p^k)`, or
//! an exact zero. Every operation propagates the absolute precision
//! `val + prec` the way hand computation would, so cancellation shows up as a
//! zero marker rather than as spurious digits.

use std::cmp::min;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::scalar::Coefficient;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("relative precision must be at least 1")]
    ZeroPrecision,
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Indistinguishable from zero; `Some(k)` means known to lie in `p^k Z_p`,
    /// `None` means exactly zero.
    Zero { known_to: Option<i64> },
    Nonzero { val: i64, unit: BigInt, prec: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicNumber {
    p: u64,
    repr: Repr,
}

pub(crate) fn pow_p(p: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

/// `(v_p(n), n / p^v)` for nonzero `n`.
pub fn split_valuation(p: u64, n: &BigInt) -> (u32, BigInt) {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (v, m);
        }
        m = q;
        v += 1;
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.extended_gcd(m);
    debug_assert!(e.gcd.is_one(), "not invertible");
    e.x.mod_floor(m)
}

fn add_opt(a: Option<i64>, b: i64) -> Option<i64> {
    a.map(|x| x.saturating_add(b))
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(min(x, y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl PadicNumber {
    pub fn check_prime(p: u64) -> Result<(), PadicError> {
        if num_prime::nt_funcs::is_prime64(p) {
            Ok(())
        } else {
            Err(PadicError::NotPrime(p))
        }
    }

    pub fn zero(p: u64) -> Self {
        PadicNumber { p, repr: Repr::Zero { known_to: None } }
    }

    /// `O(p^k)`: zero as far as the first `k` absolute digits go.
    pub fn zero_to(p: u64, k: i64) -> Self {
        PadicNumber { p, repr: Repr::Zero { known_to: Some(k) } }
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_int(p, &BigInt::one(), prec)
    }

    /// `p^val * unit` with `unit` known modulo `p^prec`. A `unit` divisible by
    /// `p` is normalised, giving up the corresponding relative digits.
    pub fn from_parts(p: u64, val: i64, unit: BigInt, prec: u32) -> Result<Self, PadicError> {
        if prec == 0 {
            return Err(PadicError::ZeroPrecision);
        }
        Ok(Self::normalise(p, val, unit, prec))
    }

    /// An integer known to `prec` significant digits.
    pub fn from_int(p: u64, n: &BigInt, prec: u32) -> Self {
        assert!(prec >= 1);
        if n.is_zero() {
            return Self::zero(p);
        }
        let (v, u) = split_valuation(p, n);
        Self::normalise(p, v as i64, u, prec)
    }

    pub fn from_i64(p: u64, n: i64, prec: u32) -> Self {
        Self::from_int(p, &BigInt::from(n), prec)
    }

    fn normalise(p: u64, val: i64, unit: BigInt, prec: u32) -> Self {
        let modulus = pow_p(p, prec);
        let unit = unit.mod_floor(&modulus);
        if unit.is_zero() {
            return Self::zero_to(p, val + prec as i64);
        }
        let (e, u) = split_valuation(p, &unit);
        PadicNumber { p, repr: Repr::Nonzero { val: val + e as i64, unit: u, prec: prec - e } }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Exact valuation, or `None` when the value is indistinguishable from zero.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Nonzero { val, .. } => Some(*val),
            Repr::Zero { .. } => None,
        }
    }

    /// A lower bound for the valuation; `None` stands for `+infinity`.
    pub fn valuation_lower_bound(&self) -> Option<i64> {
        match &self.repr {
            Repr::Nonzero { val, .. } => Some(*val),
            Repr::Zero { known_to } => *known_to,
        }
    }

    /// Absolute precision: the value is known modulo `p^k`. `None` for exact zero.
    pub fn absolute_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Nonzero { val, prec, .. } => Some(val + *prec as i64),
            Repr::Zero { known_to } => *known_to,
        }
    }

    /// Number of known significant digits (0 for zero markers).
    pub fn relative_precision(&self) -> u32 {
        match &self.repr {
            Repr::Nonzero { prec, .. } => *prec,
            Repr::Zero { .. } => 0,
        }
    }

    pub fn unit(&self) -> Option<&BigInt> {
        match &self.repr {
            Repr::Nonzero { unit, .. } => Some(unit),
            Repr::Zero { .. } => None,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { known_to: None })
    }

    pub fn is_zero_like(&self) -> bool {
        matches!(self.repr, Repr::Zero { .. })
    }

    /// Value modulo `p^k` as an integer in `[0, p^k)`, if it is integral and known that far.
    pub fn residue_mod(&self, k: u32) -> Option<BigInt> {
        match &self.repr {
            Repr::Zero { known_to } => match known_to {
                None => Some(BigInt::zero()),
                Some(a) if *a >= k as i64 => Some(BigInt::zero()),
                _ => None,
            },
            Repr::Nonzero { val, unit, prec } => {
                if *val < 0 || val + (*prec as i64) < k as i64 {
                    return None;
                }
                if *val >= k as i64 {
                    return Some(BigInt::zero());
                }
                let m = pow_p(self.p, k);
                Some((unit * pow_p(self.p, *val as u32)).mod_floor(&m))
            }
        }
    }

    /// Drops digits so that the value is known at most modulo `p^k`.
    pub fn truncate_absolute(&self, k: i64) -> Self {
        match &self.repr {
            Repr::Zero { known_to } => {
                Self::zero_to(self.p, known_to.map_or(k, |a| min(a, k)))
            }
            Repr::Nonzero { val, unit, prec } => {
                if *val >= k {
                    Self::zero_to(self.p, k)
                } else {
                    let new_prec = min(*prec as i64, k - val) as u32;
                    Self::normalise(self.p, *val, unit.clone(), new_prec)
                }
            }
        }
    }

    fn same_prime(&self, rhs: &Self) {
        assert_eq!(self.p, rhs.p, "p-adic prime mismatch");
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.same_prime(rhs);
        match (&self.repr, &rhs.repr) {
            (Repr::Zero { known_to: a }, Repr::Zero { known_to: b }) => {
                PadicNumber { p: self.p, repr: Repr::Zero { known_to: min_opt(*a, *b) } }
            }
            (Repr::Zero { known_to }, Repr::Nonzero { .. }) => rhs.absorb_zero(*known_to),
            (Repr::Nonzero { .. }, Repr::Zero { known_to }) => self.absorb_zero(*known_to),
            (
                Repr::Nonzero { val: v1, unit: u1, prec: r1 },
                Repr::Nonzero { val: v2, unit: u2, prec: r2 },
            ) => {
                let abs = min(v1 + *r1 as i64, v2 + *r2 as i64);
                let v = min(*v1, *v2);
                let sum = u1 * pow_p(self.p, (v1 - v) as u32) + u2 * pow_p(self.p, (v2 - v) as u32);
                let width = (abs - v) as u32;
                let sum = sum.mod_floor(&pow_p(self.p, width));
                if sum.is_zero() {
                    Self::zero_to(self.p, abs)
                } else {
                    Self::normalise(self.p, v, sum, width)
                }
            }
        }
    }

    fn absorb_zero(&self, known_to: Option<i64>) -> Self {
        match known_to {
            None => self.clone(),
            Some(k) => self.truncate_absolute(k),
        }
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Zero { .. } => self.clone(),
            Repr::Nonzero { val, unit, prec } => {
                let m = pow_p(self.p, *prec);
                PadicNumber {
                    p: self.p,
                    repr: Repr::Nonzero { val: *val, unit: (-unit).mod_floor(&m), prec: *prec },
                }
            }
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.same_prime(rhs);
        let p = self.p;
        match (&self.repr, &rhs.repr) {
            (Repr::Zero { known_to: None }, _) | (_, Repr::Zero { known_to: None }) => Self::zero(p),
            (Repr::Zero { known_to: Some(a) }, Repr::Zero { known_to: Some(b) }) => {
                Self::zero_to(p, a.saturating_add(*b))
            }
            (Repr::Zero { known_to: Some(a) }, Repr::Nonzero { val, .. })
            | (Repr::Nonzero { val, .. }, Repr::Zero { known_to: Some(a) }) => {
                Self::zero_to(p, a.saturating_add(*val))
            }
            (
                Repr::Nonzero { val: v1, unit: u1, prec: r1 },
                Repr::Nonzero { val: v2, unit: u2, prec: r2 },
            ) => {
                let prec = min(*r1, *r2);
                let unit = (u1 * u2).mod_floor(&pow_p(p, prec));
                PadicNumber { p, repr: Repr::Nonzero { val: v1 + v2, unit, prec } }
            }
        }
    }

    /// Product with an exact integer: relative precision is preserved.
    pub fn mul_int(&self, n: &BigInt) -> Self {
        if n.is_zero() {
            return Self::zero(self.p);
        }
        let (e, m) = split_valuation(self.p, n);
        match &self.repr {
            Repr::Zero { known_to } => PadicNumber {
                p: self.p,
                repr: Repr::Zero { known_to: add_opt(*known_to, e as i64) },
            },
            Repr::Nonzero { val, unit, prec } => {
                let unit = (unit * m).mod_floor(&pow_p(self.p, *prec));
                PadicNumber { p: self.p, repr: Repr::Nonzero { val: val + e as i64, unit, prec: *prec } }
            }
        }
    }

    /// Quotient by a nonzero exact integer: the absolute precision drops by `v_p(n)`.
    pub fn div_int(&self, n: u64) -> Self {
        assert!(n != 0, "division by zero");
        let (e, m) = split_valuation(self.p, &BigInt::from(n));
        match &self.repr {
            Repr::Zero { known_to } => PadicNumber {
                p: self.p,
                repr: Repr::Zero { known_to: add_opt(*known_to, -(e as i64)) },
            },
            Repr::Nonzero { val, unit, prec } => {
                let modulus = pow_p(self.p, *prec);
                let unit = (unit * mod_inverse(&m, &modulus)).mod_floor(&modulus);
                PadicNumber { p: self.p, repr: Repr::Nonzero { val: val - e as i64, unit, prec: *prec } }
            }
        }
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, k: i64) -> Self {
        match &self.repr {
            Repr::Zero { known_to } => {
                PadicNumber { p: self.p, repr: Repr::Zero { known_to: add_opt(*known_to, k) } }
            }
            Repr::Nonzero { val, unit, prec } => PadicNumber {
                p: self.p,
                repr: Repr::Nonzero { val: val + k, unit: unit.clone(), prec: *prec },
            },
        }
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero { known_to: None } => write!(f, "0"),
            Repr::Zero { known_to: Some(k) } => write!(f, "O({}^{})", self.p, k),
            Repr::Nonzero { val, unit, prec } => {
                write!(f, "{}^{} * {} + O({}^{})", self.p, val, unit, self.p, val + *prec as i64)
            }
        }
    }
}

impl Coefficient for PadicNumber {
    fn zero_like(&self) -> Self {
        PadicNumber::zero(self.p)
    }

    fn one_like(&self) -> Self {
        // Exact one cannot be expressed with a finite cap; carry the operand's
        // precision, or a generous default for zero markers.
        let prec = match self.relative_precision() {
            0 => 64,
            r => r,
        };
        PadicNumber::one(self.p, prec)
    }

    fn add(&self, rhs: &Self) -> Self {
        PadicNumber::add(self, rhs)
    }

    fn sub(&self, rhs: &Self) -> Self {
        PadicNumber::sub(self, rhs)
    }

    fn mul(&self, rhs: &Self) -> Self {
        PadicNumber::mul(self, rhs)
    }

    fn neg(&self) -> Self {
        PadicNumber::neg(self)
    }

    fn mul_int(&self, n: &BigInt) -> Self {
        PadicNumber::mul_int(self, n)
    }

    fn div_int(&self, n: u64) -> Self {
        PadicNumber::div_int(self, n)
    }

    fn is_zero_like(&self) -> bool {
        PadicNumber::is_zero_like(self)
    }

    /// `O(p^k)` with `k <= 0` does not even certify integrality.
    fn precision_exhausted(&self) -> bool {
        matches!(self.repr, Repr::Zero { known_to: Some(k) } if k <= 0)
    }
}

/// Value of a rational `num / den` as a p-adic number with `prec` digits.
pub fn from_ratio(p: u64, num: &BigInt, den: &BigInt, prec: u32) -> PadicNumber {
    assert!(!den.is_zero());
    if num.is_zero() {
        return PadicNumber::zero(p);
    }
    let (vn, un) = split_valuation(p, num);
    let (vd, ud) = split_valuation(p, den);
    let m = pow_p(p, prec);
    let unit = if ud.is_negative() { -(un * mod_inverse(&(-ud), &m)) } else { un * mod_inverse(&ud, &m) };
    PadicNumber::normalise(p, vn as i64 - vd as i64, unit, prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> PadicNumber {
        PadicNumber::from_i64(5, n, 6)
    }

    #[test]
    fn construction_normalises() {
        let x = PadicNumber::from_parts(5, 0, BigInt::from(50), 4).unwrap();
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.relative_precision(), 2);
        assert_eq!(x.absolute_precision(), Some(4));
        let z = PadicNumber::from_parts(5, 1, BigInt::from(625), 4).unwrap();
        assert!(z.is_zero_like());
        assert_eq!(z.valuation_lower_bound(), Some(5));
        assert!(PadicNumber::from_parts(5, 0, BigInt::one(), 0).is_err());
    }

    #[test]
    fn add_tracks_cancellation() {
        let a = q(7);
        let b = q(-7);
        let s = a.add(&b);
        assert!(s.is_zero_like());
        assert_eq!(s.absolute_precision(), Some(6));
        let c = q(3).add(&q(2));
        assert_eq!(c.valuation(), Some(1));
        assert_eq!(c.relative_precision(), 5);
        assert_eq!(c.residue_mod(6), Some(BigInt::from(5)));
    }

    #[test]
    fn add_mixed_precision() {
        let a = PadicNumber::from_i64(5, 1, 2);
        let b = PadicNumber::from_i64(5, 1, 10);
        let s = a.add(&b);
        assert_eq!(s.absolute_precision(), Some(2));
        assert_eq!(s.residue_mod(2), Some(BigInt::from(2)));
        let z = PadicNumber::zero_to(5, 3);
        assert_eq!(b.add(&z).absolute_precision(), Some(3));
        assert_eq!(PadicNumber::zero(5).add(&b), b);
    }

    #[test]
    fn mul_and_div() {
        let a = q(10);
        let b = q(15);
        let prod = a.mul(&b);
        assert_eq!(prod.valuation(), Some(2));
        assert_eq!(prod.residue_mod(8), Some(BigInt::from(150)));
        let half = q(1).div_int(2);
        assert_eq!(half.mul_int(&BigInt::from(2)).sub(&q(1)).is_zero_like(), true);
        let fifth = q(1).div_int(5);
        assert_eq!(fifth.valuation(), Some(-1));
        assert_eq!(fifth.absolute_precision(), Some(5));
        let z = PadicNumber::zero_to(5, 3).div_int(25);
        assert_eq!(z.valuation_lower_bound(), Some(1));
    }

    #[test]
    fn scale_by_p_shifts_valuation() {
        let u = q(3);
        let s = u.mul_int(&BigInt::from(5));
        assert_eq!(s.valuation(), Some(1));
        assert_eq!(s.relative_precision(), u.relative_precision());
        assert_eq!(u.shift(2).valuation(), Some(2));
    }

    #[test]
    fn negation_roundtrip() {
        let a = q(-4);
        assert_eq!(a.residue_mod(2), Some(BigInt::from(21)));
        assert!(a.add(&a.neg()).is_zero_like());
        assert_eq!(a.neg().residue_mod(6), Some(BigInt::from(4)));
    }

    #[test]
    fn ratio_conversion() {
        let x = from_ratio(5, &BigInt::from(1), &BigInt::from(-3), 6);
        assert!(x.mul_int(&BigInt::from(-3)).sub(&q(1)).is_zero_like());
        let y = from_ratio(5, &BigInt::from(2), &BigInt::from(25), 6);
        assert_eq!(y.valuation(), Some(-2));
    }

    #[test]
    fn agreement_is_up_to_common_precision() {
        let a = PadicNumber::from_i64(5, 26, 2);
        let b = PadicNumber::from_i64(5, 1, 8);
        assert!(a.agrees_with(&b));
        assert!(!PadicNumber::from_i64(5, 26, 3).agrees_with(&b));
    }
}
