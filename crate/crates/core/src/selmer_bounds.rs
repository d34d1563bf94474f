//! Upper bounds for the refined Selmer variety against lower bounds for the
//! de Rham quotient `U^dr_n / F^0`, and the least level where they cross.
//!
//! The Selmer side starts at the Mordell–Weil rank (`UB(2) = rank`) and grows
//! by the dimension of the minus part of each graded piece plus the local `H^2`
//! contributions at the bad primes and at `p`; global `Sha^2` is taken to vanish.
//! The de Rham side starts at `LB(2) = g` and grows by `r_n - g^n`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie_dims::{graded_dims, DimsError, Genus, GradedDims};
use crate::scalar::{ExactInt, Overflow};
use crate::schema::{display_string, lenient, lenient_opt_set};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Dims(#[from] DimsError),
    #[error(transparent)]
    Overflow(#[from] Overflow),
    #[error("graded piece of odd degree n = {n} has odd dimension; the half-dimension rule does not apply")]
    ParityViolation { n: usize },
    #[error("n = {n} is below the minimum {min} for this bound")]
    LevelTooSmall { n: usize, min: usize },
    #[error("invalid curve parameters: {0}")]
    InvalidParams(String),
}

/// How the minus-part of a graded piece is bounded.
///
/// `Faithful` halves `r_n` for odd `n` (pure weight `n` with odd `n`) and uses
/// the tautological `r_n` for even `n`. `PaperVerbatim` reproduces the two
/// displayed growth inequalities literally: `ceil(r_n / 2)` on steps that land
/// on an odd level (i.e. `n` even) and `r_n` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParityMode {
    #[default]
    Faithful,
    PaperVerbatim,
}

impl ParityMode {
    pub fn label(self) -> &'static str {
        match self {
            ParityMode::Faithful => "faithful",
            ParityMode::PaperVerbatim => "paper_verbatim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    BadPrime,
    GoodP,
}

/// Curve data consumed by the bound engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveParams {
    #[serde(deserialize_with = "lenient::deserialize")]
    pub g: Genus,
    #[serde(deserialize_with = "lenient::deserialize")]
    pub bad_prime_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "lenient_opt_set::deserialize")]
    pub bad_primes: Option<BTreeSet<u64>>,
    #[serde(deserialize_with = "lenient::deserialize")]
    pub p: u64,
    #[serde(deserialize_with = "lenient::deserialize")]
    pub mw_rank: u64,
}

impl CurveParams {
    pub fn new(g: Genus, bad_prime_count: usize, p: u64, mw_rank: u64) -> Self {
        CurveParams { g, bad_prime_count, bad_primes: None, p, mw_rank }
    }

    pub fn with_bad_primes(g: Genus, bad_primes: BTreeSet<u64>, p: u64, mw_rank: u64) -> Self {
        CurveParams { g, bad_prime_count: bad_primes.len(), bad_primes: Some(bad_primes), p, mw_rank }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        if !num_prime::nt_funcs::is_prime64(self.p) {
            return Err(BoundsError::InvalidParams(format!("p = {} is not prime", self.p)));
        }
        if let Some(s) = &self.bad_primes {
            if s.len() != self.bad_prime_count {
                return Err(BoundsError::InvalidParams(format!(
                    "bad_prime_count = {} but {} bad primes listed",
                    self.bad_prime_count,
                    s.len()
                )));
            }
            if s.contains(&self.p) {
                return Err(BoundsError::InvalidParams(format!(
                    "p = {} must be a prime of good reduction",
                    self.p
                )));
            }
            if let Some(q) = s.iter().find(|q| !num_prime::nt_funcs::is_prime64(**q)) {
                return Err(BoundsError::InvalidParams(format!("bad prime {q} is not prime")));
            }
        }
        Ok(())
    }
}

/// Upper bound for the dimension of the minus part of the degree-`n` graded piece.
pub fn minus_dim_bound<T: ExactInt>(
    dims: &GradedDims<T>,
    n: usize,
    mode: ParityMode,
) -> Result<T, BoundsError> {
    let r = dims.try_r(n)?.clone();
    let two = T::one() + T::one();
    let odd = n % 2 == 1;
    Ok(match mode {
        ParityMode::Faithful if odd => {
            let (half, rem) = r.div_rem(&two);
            if !rem.is_zero() {
                return Err(BoundsError::ParityViolation { n });
            }
            half
        }
        ParityMode::Faithful => r,
        // Step consuming degree n lands on level n + 1; odd target iff n even.
        ParityMode::PaperVerbatim if !odd => (r + T::one()).div_floor(&two),
        ParityMode::PaperVerbatim => r,
    })
}

/// Local `H^2` dimension bound for the degree-`n` graded piece.
///
/// At a bad prime: `n g^n + n(n-1)/2 (2g-2)^2 g^(n-2)`; at `p`: `n g^n`.
pub fn local_h2_bound<T: ExactInt>(g: Genus, n: usize, place: Place) -> Result<T, BoundsError> {
    if n < 1 {
        return Err(BoundsError::LevelTooSmall { n, min: 1 });
    }
    let what = "local H^2 bound";
    let gt = T::from_u64_checked(g.get() as u64, what)?;
    let nt = T::from_u64_checked(n as u64, what)?;
    let main = nt.mul_checked(&gt.pow_checked(n as u32, what)?, what)?;
    match place {
        Place::GoodP => Ok(main),
        Place::BadPrime if n == 1 => Ok(main),
        Place::BadPrime => {
            let pairs = T::from_u64_checked((n * (n - 1) / 2) as u64, what)?;
            let two_g_minus_two = T::from_u64_checked(2 * g.get() as u64 - 2, what)?;
            let extra = pairs
                .mul_checked(&two_g_minus_two.mul_checked(&two_g_minus_two, what)?, what)?
                .mul_checked(&gt.pow_checked(n as u32 - 2, what)?, what)?;
            Ok(main.add_checked(&extra, what)?)
        }
    }
}

/// Increment of the Selmer upper bound contributed by the degree-`n` piece (`n >= 2`).
pub fn h1_step_bound<T: ExactInt>(
    dims: &GradedDims<T>,
    n: usize,
    s_count: usize,
    mode: ParityMode,
) -> Result<T, BoundsError> {
    if n < 2 {
        return Err(BoundsError::LevelTooSmall { n, min: 2 });
    }
    let what = "H^1 step bound";
    let g = dims.genus();
    let s = T::from_u64_checked(s_count as u64, what)?;
    let minus = minus_dim_bound(dims, n, mode)?;
    let bad = s.mul_checked(&local_h2_bound::<T>(g, n, Place::BadPrime)?, what)?;
    let good = local_h2_bound::<T>(g, n, Place::GoodP)?;
    Ok(minus.add_checked(&bad, what)?.add_checked(&good, what)?)
}

/// `UB(2) .. UB(n_cap)`; entry `i` is the bound at level `i + 2`.
pub fn selmer_ub_table<T: ExactInt>(
    params: &CurveParams,
    dims: &GradedDims<T>,
    n_cap: usize,
    mode: ParityMode,
) -> Result<Vec<T>, BoundsError> {
    if n_cap < 2 {
        return Err(BoundsError::LevelTooSmall { n: n_cap, min: 2 });
    }
    let mut out = Vec::with_capacity(n_cap - 1);
    out.push(T::from_u64_checked(params.mw_rank, "Mordell-Weil rank")?);
    for n in 2..n_cap {
        let step = h1_step_bound(dims, n, params.bad_prime_count, mode)?;
        let next = out[n - 2].add_checked(&step, "Selmer upper bound")?;
        out.push(next);
    }
    Ok(out)
}

/// `LB(2) .. LB(n_cap)`; entry `i` is the bound at level `i + 2`.
pub fn derham_lb_table<T: ExactInt>(dims: &GradedDims<T>, n_cap: usize) -> Result<Vec<T>, BoundsError> {
    if n_cap < 2 {
        return Err(BoundsError::LevelTooSmall { n: n_cap, min: 2 });
    }
    let what = "de Rham lower bound";
    let g = T::from_u64_checked(dims.genus().get() as u64, what)?;
    // r_1 - g^1 with r_1 = 2g.
    let mut out = vec![dims.try_r(1)?.sub_checked(&g, what)?];
    for n in 2..n_cap {
        let gn = g.pow_checked(n as u32, what)?;
        let inc = dims.try_r(n)?.sub_checked(&gn, what)?;
        let inc = if inc > T::zero() { inc } else { T::zero() };
        let next = out[n - 2].add_checked(&inc, what)?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(bound(serialize = "T: std::fmt::Display"))]
pub struct BoundRow<T> {
    pub n: usize,
    #[serde(serialize_with = "display_string::serialize")]
    pub selmer_ub: T,
    #[serde(serialize_with = "display_string::serialize")]
    pub derham_lb: T,
}

/// Both bound sequences over `n = 2..=n_cap` and the least crossing level, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundTable<T> {
    pub params: CurveParams,
    pub mode: ParityMode,
    pub rows: Vec<BoundRow<T>>,
    pub halting_level: Option<usize>,
}

impl<T: ExactInt> BoundTable<T> {
    pub fn n_cap(&self) -> usize {
        self.rows.last().map_or(1, |r| r.n)
    }

    /// Checks the table's own invariants (monotone columns, minimality of `t`).
    pub fn check_invariants(&self) -> bool {
        let monotone = self.rows.windows(2).all(|w| {
            w[0].selmer_ub <= w[1].selmer_ub && w[0].derham_lb <= w[1].derham_lb
        });
        let first = self.rows.iter().find(|r| r.selmer_ub < r.derham_lb).map(|r| r.n);
        monotone && first == self.halting_level
    }
}

/// Result of the halting search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halting<T> {
    Found { t: usize, table: BoundTable<T> },
    NotFoundWithin { n_cap: usize, table: BoundTable<T> },
}

impl<T> Halting<T> {
    pub fn table(&self) -> &BoundTable<T> {
        match self {
            Halting::Found { table, .. } | Halting::NotFoundWithin { table, .. } => table,
        }
    }

    pub fn t(&self) -> Option<usize> {
        match self {
            Halting::Found { t, .. } => Some(*t),
            Halting::NotFoundWithin { .. } => None,
        }
    }
}

/// Builds the bound table for `params` from precomputed graded dimensions.
pub fn bound_table<T: ExactInt>(
    params: &CurveParams,
    dims: &GradedDims<T>,
    n_cap: usize,
    mode: ParityMode,
) -> Result<BoundTable<T>, BoundsError> {
    params.validate()?;
    if dims.genus() != params.g {
        return Err(BoundsError::InvalidParams(format!(
            "graded dimensions computed for g = {} but curve has g = {}",
            dims.genus(),
            params.g
        )));
    }
    let ub = selmer_ub_table(params, dims, n_cap, mode)?;
    let lb = derham_lb_table(dims, n_cap)?;
    let rows: Vec<BoundRow<T>> = ub
        .into_iter()
        .zip(lb)
        .enumerate()
        .map(|(i, (selmer_ub, derham_lb))| BoundRow { n: i + 2, selmer_ub, derham_lb })
        .collect();
    let halting_level = rows.iter().find(|r| r.selmer_ub < r.derham_lb).map(|r| r.n);
    Ok(BoundTable { params: params.clone(), mode, rows, halting_level })
}

/// Least `n` in `[2, n_cap]` with `UB(n) < LB(n)`.
pub fn halting_level<T: ExactInt>(
    params: &CurveParams,
    n_cap: usize,
    mode: ParityMode,
) -> Result<Halting<T>, BoundsError> {
    if n_cap < 2 {
        return Err(BoundsError::LevelTooSmall { n: n_cap, min: 2 });
    }
    let dims = graded_dims::<T>(params.g, (n_cap - 1).max(1))?;
    halting_level_with(params, &dims, n_cap, mode)
}

pub fn halting_level_with<T: ExactInt>(
    params: &CurveParams,
    dims: &GradedDims<T>,
    n_cap: usize,
    mode: ParityMode,
) -> Result<Halting<T>, BoundsError> {
    let table = bound_table(params, dims, n_cap, mode)?;
    Ok(match table.halting_level {
        Some(t) => Halting::Found { t, table },
        None => Halting::NotFoundWithin { n_cap, table },
    })
}

/// `C(2m, m) g^(2m)`: dimension of the `(m, m)` part of `H_1^{⊗2m}`.
///
/// Bounds the middle Hodge component of an even-degree graded piece. Not used by
/// any bound in this module, which keeps the tautological `r_n` for even `n`.
pub fn middle_hodge_dimension<T: ExactInt>(g: Genus, m: usize) -> Result<T, Overflow> {
    let what = "middle Hodge dimension";
    let mut binom = T::one();
    for k in 0..m {
        // C(2m, k+1) = C(2m, k) * (2m - k) / (k + 1), exact at every step.
        binom = binom.mul_checked(&T::from_u64_checked((2 * m - k) as u64, what)?, what)?;
        binom = binom / T::from_u64_checked((k + 1) as u64, what)?;
    }
    let g2m = T::from_u64_checked(g.get() as u64, what)?.pow_checked(2 * m as u32, what)?;
    binom.mul_checked(&g2m, what)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn g2() -> Genus {
        Genus::new(2).unwrap()
    }

    fn dims2(n: usize) -> GradedDims<i64> {
        graded_dims(g2(), n).unwrap()
    }

    fn params(s: usize, rank: u64) -> CurveParams {
        CurveParams::new(g2(), s, 5, rank)
    }

    #[test]
    fn minus_part_faithful() {
        let d = dims2(5);
        assert_eq!(minus_dim_bound(&d, 3, ParityMode::Faithful).unwrap(), 8);
        assert_eq!(minus_dim_bound(&d, 1, ParityMode::Faithful).unwrap(), 2);
        assert_eq!(minus_dim_bound(&d, 2, ParityMode::Faithful).unwrap(), 5);
    }

    #[test]
    fn minus_part_verbatim() {
        let d = dims2(5);
        // n = 2 lands on level 3: ceil(5 / 2).
        assert_eq!(minus_dim_bound(&d, 2, ParityMode::PaperVerbatim).unwrap(), 3);
        assert_eq!(minus_dim_bound(&d, 3, ParityMode::PaperVerbatim).unwrap(), 16);
        assert_eq!(minus_dim_bound(&d, 4, ParityMode::PaperVerbatim).unwrap(), 23);
    }

    #[test]
    fn minus_part_out_of_range() {
        let d = dims2(3);
        assert!(matches!(
            minus_dim_bound(&d, 4, ParityMode::Faithful),
            Err(BoundsError::Dims(DimsError::OutOfRange { .. }))
        ));
    }

    #[test]
    fn local_h2_values() {
        assert_eq!(local_h2_bound::<i64>(g2(), 2, Place::BadPrime).unwrap(), 12);
        assert_eq!(local_h2_bound::<i64>(g2(), 2, Place::GoodP).unwrap(), 8);
        assert_eq!(local_h2_bound::<i64>(g2(), 1, Place::BadPrime).unwrap(), 2);
        // 3*8 + 3*4*2
        assert_eq!(local_h2_bound::<i64>(g2(), 3, Place::BadPrime).unwrap(), 48);
        assert!(local_h2_bound::<i64>(g2(), 0, Place::GoodP).is_err());
    }

    #[test]
    fn step_bounds() {
        let d = dims2(5);
        assert_eq!(h1_step_bound(&d, 2, 1, ParityMode::Faithful).unwrap(), 25);
        assert_eq!(h1_step_bound(&d, 3, 1, ParityMode::Faithful).unwrap(), 80);
        assert_eq!(h1_step_bound(&d, 2, 0, ParityMode::Faithful).unwrap(), 13);
        assert!(matches!(
            h1_step_bound(&d, 1, 0, ParityMode::Faithful),
            Err(BoundsError::LevelTooSmall { .. })
        ));
    }

    #[test]
    fn ub_and_lb_tables() {
        let d = dims2(5);
        let ub = selmer_ub_table(&params(1, 0), &d, 3, ParityMode::Faithful).unwrap();
        assert_eq!(ub, vec![0, 25]);
        let ub = selmer_ub_table(&params(1, 5), &d, 3, ParityMode::Faithful).unwrap();
        assert_eq!(ub, vec![5, 30]);
        let lb = derham_lb_table(&d, 4).unwrap();
        assert_eq!(lb, vec![2, 3, 11]);
    }

    #[test]
    fn halting_base_case() {
        for mode in [ParityMode::Faithful, ParityMode::PaperVerbatim] {
            let h = halting_level::<BigInt>(&params(1, 0), 10, mode).unwrap();
            assert_eq!(h.t(), Some(2));
            assert!(h.table().check_invariants());
            let h = halting_level::<BigInt>(&params(1, 0), 2, mode).unwrap();
            assert_eq!(h.t(), Some(2));
        }
    }

    #[test]
    fn halting_not_found_within_small_cap() {
        let h = halting_level::<BigInt>(&params(1, 4), 3, ParityMode::Faithful).unwrap();
        assert!(matches!(h, Halting::NotFoundWithin { n_cap: 3, .. }));
        assert_eq!(h.table().rows.len(), 2);
    }

    #[test]
    fn params_validation() {
        let mut p = params(1, 0);
        p.p = 4;
        assert!(p.validate().is_err());
        let bad = CurveParams::with_bad_primes(g2(), [5].into(), 5, 0);
        assert!(bad.validate().is_err());
        let mut mismatch = CurveParams::with_bad_primes(g2(), [11].into(), 5, 0);
        mismatch.bad_prime_count = 2;
        assert!(mismatch.validate().is_err());
        assert!(CurveParams::with_bad_primes(g2(), [9].into(), 5, 0).validate().is_err());
        assert!(CurveParams::with_bad_primes(g2(), [11].into(), 5, 0).validate().is_ok());
    }

    #[test]
    fn middle_hodge() {
        assert_eq!(middle_hodge_dimension::<i64>(g2(), 1).unwrap(), 2 * 4);
        assert_eq!(middle_hodge_dimension::<i64>(g2(), 2).unwrap(), 6 * 16);
        assert_eq!(middle_hodge_dimension::<i64>(Genus::new(3).unwrap(), 3).unwrap(), 20 * 729);
    }
}
