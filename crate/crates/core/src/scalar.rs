//! Scalar traits shared by the dimension bookkeeping and the series code.
//!
//! The integer-valued tables (graded dimensions, bound recursions) are generic
//! over [`ExactInt`], so the same code runs on `i64`/`i128` with overflow
//! detection and on `BigInt` without limits. Truncated series are generic over
//! [`Coefficient`], implemented by capped-precision p-adic numbers and by exact
//! rationals.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("integer overflow while computing {what}")]
pub struct Overflow {
    pub what: &'static str,
}

/// An exact integer type: machine integers with checked arithmetic, or `BigInt`.
pub trait ExactInt:
    Integer
    + Signed
    + Clone
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + CheckedAdd
    + CheckedSub
    + CheckedMul
    + Send
    + Sync
    + 'static
{
    fn add_checked(&self, rhs: &Self, what: &'static str) -> Result<Self, Overflow> {
        self.checked_add(rhs).ok_or(Overflow { what })
    }

    fn sub_checked(&self, rhs: &Self, what: &'static str) -> Result<Self, Overflow> {
        self.checked_sub(rhs).ok_or(Overflow { what })
    }

    fn mul_checked(&self, rhs: &Self, what: &'static str) -> Result<Self, Overflow> {
        self.checked_mul(rhs).ok_or(Overflow { what })
    }

    fn from_u64_checked(v: u64, what: &'static str) -> Result<Self, Overflow> {
        Self::from_u64(v).ok_or(Overflow { what })
    }

    fn pow_checked(&self, exp: u32, what: &'static str) -> Result<Self, Overflow> {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc.mul_checked(self, what)?;
        }
        Ok(acc)
    }

    fn to_bigint(&self) -> BigInt {
        // Display is exact for every implementor.
        self.to_string().parse().expect("decimal rendering of an integer")
    }
}

impl<T> ExactInt for T where
    T: Integer
        + Signed
        + Clone
        + Debug
        + Display
        + FromPrimitive
        + ToPrimitive
        + CheckedAdd
        + CheckedSub
        + CheckedMul
        + Send
        + Sync
        + 'static
{
}

/// Ring operations needed by truncated power series and iterated integration.
///
/// Constants are produced "like" an existing value so that context such as the
/// prime of a p-adic number travels with them.
pub trait Coefficient: Clone + Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplication by an exact integer.
    fn mul_int(&self, n: &BigInt) -> Self;
    /// Division by a nonzero exact integer.
    fn div_int(&self, n: u64) -> Self;
    /// True when the value cannot be distinguished from zero.
    fn is_zero_like(&self) -> bool;
    /// Equality up to the precision both sides actually carry.
    fn agrees_with(&self, rhs: &Self) -> bool {
        self.sub(rhs).is_zero_like()
    }
    /// True when no digit of the value is known any more.
    fn precision_exhausted(&self) -> bool {
        false
    }
}

impl Coefficient for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }

    fn one_like(&self) -> Self {
        BigRational::one()
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn mul_int(&self, n: &BigInt) -> Self {
        self * BigRational::from_integer(n.clone())
    }

    fn div_int(&self, n: u64) -> Self {
        assert!(n != 0, "division by zero");
        self / BigRational::from_integer(BigInt::from(n))
    }

    fn is_zero_like(&self) -> bool {
        self.is_zero()
    }
}
