//! From a separation modulus `M` to the integer `N` killing `J(Q)` modulo the
//! reduction kernel, and the prime set `T_0 = S ∪ {q | N}`.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_prime::nt_funcs::factors;
use num_prime::FactorizationConfig;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{pow_p, PadicNumber};
use crate::schema::{decimal, lenient};

/// Pollard rho attempts allowed per composite cofactor above `2^128`.
pub const DEFAULT_RHO_TRIALS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("abelian variety dimension must be at least 1")]
    ZeroDimension,
    #[error("#J(F_p) must be at least 1, got {0}")]
    NonPositiveCount(BigInt),
    #[error("modulus exponent M must be at least 1, got {0}")]
    ModulusTooSmall(u32),
    #[error("N must be at least 1, got {0}")]
    NonPositiveN(BigInt),
    #[error("L-polynomial: {0}")]
    BadLPolynomial(String),
    #[error("factorization of {n} not finished within the budget; unfactored part(s): {remaining:?}")]
    FactorizationBudgetExceeded { n: BigInt, remaining: Vec<String> },
}

/// `#J(F_p)` together with `p` and the dimension `g` of `J`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobianLocalData {
    #[serde(deserialize_with = "lenient::deserialize")]
    pub p: u64,
    #[serde(deserialize_with = "lenient::deserialize")]
    pub g: u32,
    #[serde(with = "decimal")]
    pub count_fp: BigInt,
}

/// `count_fp` lies outside `[(sqrt p - 1)^(2g), (sqrt p + 1)^(2g)]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeilWarning {
    pub message: String,
}

impl JacobianLocalData {
    pub fn new(p: u64, g: u32, count_fp: BigInt) -> Result<Self, ArithError> {
        let d = JacobianLocalData { p, g, count_fp };
        d.validate()?;
        Ok(d)
    }

    /// From `L(T) = 1 + a_1 T + ... + p^g T^(2g)` (coefficients in increasing
    /// degree); `#J(F_p) = L(1)`.
    pub fn from_l_polynomial(p: u64, coeffs: &[BigInt]) -> Result<Self, ArithError> {
        PadicNumber::check_prime(p).map_err(|_| ArithError::NotPrime(p))?;
        if coeffs.len() < 3 || coeffs.len() % 2 == 0 {
            return Err(ArithError::BadLPolynomial(format!(
                "expected an even degree 2g >= 2, got {} coefficients",
                coeffs.len()
            )));
        }
        let g = ((coeffs.len() - 1) / 2) as u32;
        if !coeffs[0].is_one() {
            return Err(ArithError::BadLPolynomial(format!("constant term must be 1, got {}", coeffs[0])));
        }
        let lead = &coeffs[2 * g as usize];
        if *lead != pow_p(p, g) {
            return Err(ArithError::BadLPolynomial(format!("leading coefficient must be p^g = {}, got {lead}", pow_p(p, g))));
        }
        // Functional equation: a_(2g-i) = p^(g-i) a_i.
        for i in 0..g as usize {
            if coeffs[2 * g as usize - i] != &coeffs[i] * pow_p(p, g - i as u32) {
                return Err(ArithError::BadLPolynomial(format!("coefficient {} violates a_(2g-i) = p^(g-i) a_i", 2 * g as usize - i)));
            }
        }
        Self::new(p, g, coeffs.iter().sum())
    }

    pub fn validate(&self) -> Result<(), ArithError> {
        PadicNumber::check_prime(self.p).map_err(|_| ArithError::NotPrime(self.p))?;
        if self.g == 0 {
            return Err(ArithError::ZeroDimension);
        }
        if !self.count_fp.is_positive() {
            return Err(ArithError::NonPositiveCount(self.count_fp.clone()));
        }
        Ok(())
    }

    /// Exact comparison against the Weil interval.
    pub fn weil_check(&self) -> Option<WeilWarning> {
        // (sqrt p ± 1)^(2g) = (p + 1 ± 2 sqrt p)^g = A ± B sqrt p
        let p = BigInt::from(self.p);
        let (mut a, mut b) = (BigInt::one(), BigInt::zero());
        for _ in 0..self.g {
            let na = &a * (&p + 1u32) + &b * 2u32 * &p;
            let nb = &a * 2u32 + &b * (&p + 1u32);
            a = na;
            b = nb;
        }
        // x <= B sqrt p for x of either sign
        let within = |x: BigInt| !x.is_positive() || &x * &x <= &b * &b * &p;
        let above_lower = within(&a - &self.count_fp);
        let below_upper = within(&self.count_fp - &a);
        if above_lower && below_upper {
            None
        } else {
            Some(WeilWarning {
                message: format!(
                    "#J(F_p) = {} lies outside the Weil interval for p = {}, g = {}",
                    self.count_fp, self.p, self.g
                ),
            })
        }
    }
}

/// `#J(Z/p^M) = #J(F_p) p^(g (M - 1))`.
pub fn jacobian_order_mod(data: &JacobianLocalData, m: u32) -> Result<BigInt, ArithError> {
    data.validate()?;
    if m < 1 {
        return Err(ArithError::ModulusTooSmall(m));
    }
    Ok(&data.count_fp * pow_p(data.p, data.g * (m - 1)))
}

/// An `N` with `N J(Q)` inside the kernel of reduction modulo `p^M`: the order of `J(Z/p^M)`.
pub fn annihilator_n(data: &JacobianLocalData, m: u32) -> Result<BigInt, ArithError> {
    jacobian_order_mod(data, m)
}

/// Distinct prime divisors of `n >= 1`, ascending.
pub fn prime_divisors(n: &BigInt, rho_trials: usize) -> Result<BTreeSet<BigInt>, ArithError> {
    if !n.is_positive() {
        return Err(ArithError::NonPositiveN(n.clone()));
    }
    let target: BigUint = n.magnitude().clone();
    if target.is_one() {
        return Ok(BTreeSet::new());
    }
    let mut config = FactorizationConfig::strict();
    config.rho_trials = rho_trials;
    let (found, rest) = factors(target, Some(config));
    if let Some(rest) = rest {
        return Err(ArithError::FactorizationBudgetExceeded {
            n: n.clone(),
            remaining: rest.iter().map(|r| r.to_string()).collect(),
        });
    }
    Ok(found.into_keys().map(|q| BigInt::from_biguint(Sign::Plus, q)).collect())
}

/// `S ∪ {primes dividing N}`.
pub fn enlarged_prime_set(s: &BTreeSet<u64>, n: &BigInt) -> Result<BTreeSet<BigInt>, ArithError> {
    enlarged_prime_set_with(s, n, DEFAULT_RHO_TRIALS)
}

pub fn enlarged_prime_set_with(
    s: &BTreeSet<u64>,
    n: &BigInt,
    rho_trials: usize,
) -> Result<BTreeSet<BigInt>, ArithError> {
    if let Some(&q) = s.iter().find(|&&q| PadicNumber::check_prime(q).is_err()) {
        return Err(ArithError::NotPrime(q));
    }
    let mut out = prime_divisors(n, rho_trials)?;
    out.extend(s.iter().map(|&q| BigInt::from(q)));
    Ok(out)
}

/// True when every element of `t0` divides `n * prod(s)`.
pub fn divides_n_times_s(t0: &BTreeSet<BigInt>, n: &BigInt, s: &BTreeSet<u64>) -> bool {
    let m = s.iter().fold(n.clone(), |acc, &q| acc * q);
    t0.iter().all(|q| m.is_multiple_of(q))
}
