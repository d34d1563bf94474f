//! Graded dimensions of the lower-central-series Lie algebra of a surface group.
//!
//! For a genus `g` surface group the degree-`n` graded piece has dimension
//! `r_n`, determined by the necklace-type identity
//!
//! ```text
//! sum_{d | n} d * r_d = L_n,   L_n = (g + sqrt(g^2-1))^n + (g - sqrt(g^2-1))^n
//! ```
//!
//! `L_n` satisfies `L_0 = 2`, `L_1 = 2g`, `L_n = 2g L_{n-1} - L_{n-2}`, so
//! everything is computed in exact integer arithmetic and `r_n` is recovered by
//! Möbius inversion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{ExactInt, Overflow};

/// Largest `n_max` accepted unless a caller raises it explicitly.
pub const DEFAULT_N_MAX_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimsError {
    #[error("genus must satisfy g >= 2 (hyperbolic curve), got g = {0}")]
    GenusTooSmall(i64),
    #[error("n_max = {n_max} exceeds the configured cap {cap}")]
    NMaxTooLarge { n_max: usize, cap: usize },
    #[error("n_max must be at least {min}, got {n_max}")]
    NMaxTooSmall { n_max: usize, min: usize },
    #[error("Möbius sum at n = {n} is not divisible by n (internal consistency failure)")]
    NotDivisible { n: usize },
    #[error("index n = {n} outside the valid range {lo}..={hi}")]
    OutOfRange { n: usize, lo: usize, hi: usize },
    #[error(transparent)]
    Overflow(#[from] Overflow),
}

/// Genus of a proper smooth hyperbolic curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Genus(u32);

impl Genus {
    pub fn new(g: i64) -> Result<Self, DimsError> {
        if g < 2 || g > u32::MAX as i64 {
            return Err(DimsError::GenusTooSmall(g));
        }
        Ok(Genus(g as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<i64> for Genus {
    type Error = DimsError;

    fn try_from(g: i64) -> Result<Self, Self::Error> {
        Genus::new(g)
    }
}

impl From<Genus> for i64 {
    fn from(g: Genus) -> i64 {
        g.0 as i64
    }
}

impl std::fmt::Display for Genus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `L_0 .. L_{n_max}` by the three-term recurrence.
pub fn lucas_sequence<T: ExactInt>(g: Genus, n_max: usize) -> Result<Vec<T>, DimsError> {
    let two_g = T::from_u64_checked(2 * g.get() as u64, "2g")?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(T::one() + T::one());
    if n_max >= 1 {
        out.push(two_g.clone());
    }
    for n in 2..=n_max {
        let next = two_g
            .mul_checked(&out[n - 1], "Lucas term")?
            .sub_checked(&out[n - 2], "Lucas term")?;
        out.push(next);
    }
    Ok(out)
}

/// Möbius function by trial division.
pub fn mobius(mut n: usize) -> i8 {
    assert!(n >= 1);
    let mut sign = 1i8;
    let mut d = 2usize;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// The sequence `r_1 .. r_{n_max}` together with the Lucas terms it inverts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedDims<T> {
    genus: Genus,
    r: Vec<T>,
    lucas: Vec<T>,
}

/// Graded dimensions up to `n_max`, with the default cap on `n_max`.
pub fn graded_dims<T: ExactInt>(g: Genus, n_max: usize) -> Result<GradedDims<T>, DimsError> {
    graded_dims_capped(g, n_max, DEFAULT_N_MAX_CAP)
}

pub fn graded_dims_capped<T: ExactInt>(
    g: Genus,
    n_max: usize,
    cap: usize,
) -> Result<GradedDims<T>, DimsError> {
    if n_max < 1 {
        return Err(DimsError::NMaxTooSmall { n_max, min: 1 });
    }
    if n_max > cap {
        return Err(DimsError::NMaxTooLarge { n_max, cap });
    }
    let lucas = lucas_sequence::<T>(g, n_max)?;
    let mu: Vec<i8> = std::iter::once(0).chain((1..=n_max).map(mobius)).collect();

    let mut r = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut acc = T::zero();
        for d in (1..=n).filter(|d| n % d == 0) {
            match mu[n / d] {
                1 => acc = acc.add_checked(&lucas[d], "Möbius sum")?,
                -1 => acc = acc.sub_checked(&lucas[d], "Möbius sum")?,
                _ => {}
            }
        }
        let n_t = T::from_u64_checked(n as u64, "n")?;
        let (q, rem) = acc.div_rem(&n_t);
        if !rem.is_zero() {
            return Err(DimsError::NotDivisible { n });
        }
        r.push(q);
    }
    Ok(GradedDims { genus: g, r, lucas })
}

impl<T: ExactInt> GradedDims<T> {
    pub fn genus(&self) -> Genus {
        self.genus
    }

    pub fn n_max(&self) -> usize {
        self.r.len()
    }

    /// `r_n` for `1 <= n <= n_max`.
    pub fn r(&self, n: usize) -> &T {
        assert!(n >= 1 && n <= self.n_max(), "graded degree {n} out of range");
        &self.r[n - 1]
    }

    pub fn try_r(&self, n: usize) -> Result<&T, DimsError> {
        if n >= 1 && n <= self.n_max() {
            Ok(&self.r[n - 1])
        } else {
            Err(DimsError::OutOfRange { n, lo: 1, hi: self.n_max() })
        }
    }

    /// `L_n` for `0 <= n <= n_max`.
    pub fn lucas(&self, n: usize) -> &T {
        &self.lucas[n]
    }

    pub fn graded(&self) -> &[T] {
        &self.r
    }

    pub fn lucas_terms(&self) -> &[T] {
        &self.lucas
    }

    /// `dim U_n = r_1 + ... + r_{n-1}` for `2 <= n <= n_max + 1`.
    pub fn cumulative_dim(&self, n: usize) -> Result<T, DimsError> {
        if n < 2 || n > self.n_max() + 1 {
            return Err(DimsError::OutOfRange { n, lo: 2, hi: self.n_max() + 1 });
        }
        self.r[..n - 1]
            .iter()
            .try_fold(T::zero(), |acc, x| acc.add_checked(x, "cumulative dimension"))
            .map_err(Into::into)
    }

    /// Checks `sum_{d | n} d r_d = L_n` for every stored `n`.
    pub fn witt_identity_holds(&self) -> Result<bool, Overflow> {
        for n in 1..=self.n_max() {
            let mut acc = T::zero();
            for d in (1..=n).filter(|d| n % d == 0) {
                let d_t = T::from_u64_checked(d as u64, "d")?;
                acc = acc.add_checked(&d_t.mul_checked(self.r(d), "Witt sum")?, "Witt sum")?;
            }
            if &acc != self.lucas(n) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Odd degrees whose graded dimension is odd. Empty in every range tested so far.
    pub fn odd_degree_parity_violations(&self) -> Vec<usize> {
        let two = T::one() + T::one();
        (1..=self.n_max())
            .step_by(2)
            .filter(|&n| !self.r(n).is_multiple_of(&two))
            .collect()
    }

    pub fn is_positive(&self) -> bool {
        self.r.iter().all(|x| x > &T::zero()) && self.lucas.iter().all(|x| x > &T::zero())
    }
}

impl<T: ExactInt> GradedDims<T> {
    /// Re-express the table in another integer type.
    pub fn convert<U: ExactInt>(&self) -> Result<GradedDims<U>, Overflow> {
        let conv = |x: &T| -> Result<U, Overflow> {
            U::from_str_radix(&x.to_string(), 10).map_err(|_| Overflow { what: "conversion" })
        };
        Ok(GradedDims {
            genus: self.genus,
            r: self.r.iter().map(conv).collect::<Result<_, _>>()?,
            lucas: self.lucas.iter().map(conv).collect::<Result<_, _>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn g(v: i64) -> Genus {
        Genus::new(v).unwrap()
    }

    #[test]
    fn lucas_small_genus_two() {
        let l = lucas_sequence::<i64>(g(2), 5).unwrap();
        assert_eq!(l, vec![2, 4, 14, 52, 194, 724]);
        assert_eq!(lucas_sequence::<i64>(g(2), 0).unwrap(), vec![2]);
    }

    #[test]
    fn genus_below_two_rejected() {
        assert_eq!(Genus::new(1), Err(DimsError::GenusTooSmall(1)));
        assert!(Genus::new(0).is_err());
        assert!(Genus::new(-3).is_err());
    }

    #[test]
    fn graded_dims_genus_two_and_three() {
        let d = graded_dims::<i64>(g(2), 5).unwrap();
        assert_eq!(d.graded(), &[4, 5, 16, 45, 144]);
        let d3 = graded_dims::<i64>(g(3), 2).unwrap();
        assert_eq!(*d3.r(2), 14);
        for genus in 2..7 {
            assert_eq!(*graded_dims::<i64>(g(genus), 1).unwrap().r(1), 2 * genus);
        }
    }

    #[test]
    fn cumulative_dims() {
        let d = graded_dims::<i64>(g(2), 5).unwrap();
        assert_eq!(d.cumulative_dim(2).unwrap(), 4);
        assert_eq!(d.cumulative_dim(3).unwrap(), 9);
        assert_eq!(d.cumulative_dim(4).unwrap(), 25);
        assert_eq!(d.cumulative_dim(6).unwrap(), 214);
        assert!(matches!(d.cumulative_dim(1), Err(DimsError::OutOfRange { .. })));
        assert!(matches!(d.cumulative_dim(7), Err(DimsError::OutOfRange { .. })));
    }

    #[test]
    fn n_max_bounds() {
        assert!(matches!(graded_dims::<i64>(g(2), 0), Err(DimsError::NMaxTooSmall { .. })));
        assert!(matches!(
            graded_dims_capped::<i64>(g(2), 50, 40),
            Err(DimsError::NMaxTooLarge { .. })
        ));
    }

    #[test]
    fn machine_integers_overflow_loudly() {
        // L_n for g = 2 passes i64::MAX near n = 33.
        assert!(matches!(graded_dims::<i64>(g(2), 40), Err(DimsError::Overflow(_))));
        let big = graded_dims::<BigInt>(g(2), 40).unwrap();
        assert!(big.witt_identity_holds().unwrap());
    }

    #[test]
    fn mobius_values() {
        let got: Vec<i8> = (1..=12).map(mobius).collect();
        assert_eq!(got, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0]);
    }

    #[test]
    fn parity_and_positivity() {
        for genus in 2..=6 {
            let d = graded_dims::<BigInt>(g(genus), 64).unwrap();
            assert!(d.odd_degree_parity_violations().is_empty(), "g = {genus}");
            assert!(d.is_positive());
        }
    }

    #[test]
    fn graded_dims_approach_lucas_over_n() {
        let half = BigRational::new(1.into(), 2.into());
        for genus in 2..=6 {
            let d = graded_dims::<BigInt>(g(genus), 64).unwrap();
            for n in 4..=64 {
                let ratio = BigRational::new(d.r(n) * BigInt::from(n), d.lucas(n).clone());
                assert!(ratio > half && ratio <= BigRational::from_integer(1.into()), "g = {genus}, n = {n}");
            }
        }
    }

    #[test]
    fn convert_between_scalars() {
        let d = graded_dims::<BigInt>(g(2), 10).unwrap();
        let small: GradedDims<i64> = d.convert().unwrap();
        assert_eq!(small, graded_dims::<i64>(g(2), 10).unwrap());
    }
}
