//! Truncated power series `c_0 + c_1 z + ... + c_D z^D` over any [`Coefficient`] ring.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::scalar::Coefficient;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<C> {
    coeffs: Vec<C>,
}

impl<C: Coefficient> TruncatedSeries<C> {
    /// Panics on an empty coefficient list: a series always has a constant term.
    pub fn new(coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least one coefficient");
        TruncatedSeries { coeffs }
    }

    /// The constant `c` truncated at degree `degree`.
    pub fn constant(c: C, degree: usize) -> Self {
        let zero = c.zero_like();
        let mut coeffs = vec![zero; degree + 1];
        coeffs[0] = c;
        TruncatedSeries { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &C {
        &self.coeffs[i]
    }

    pub fn into_coeffs(self) -> Vec<C> {
        self.coeffs
    }

    pub fn truncate(&self, degree: usize) -> Self {
        let d = degree.min(self.degree());
        TruncatedSeries { coeffs: self.coeffs[..=d].to_vec() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let d = self.degree().min(rhs.degree());
        TruncatedSeries { coeffs: (0..=d).map(|i| self.coeffs[i].add(&rhs.coeffs[i])).collect() }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let d = self.degree().min(rhs.degree());
        TruncatedSeries { coeffs: (0..=d).map(|i| self.coeffs[i].sub(&rhs.coeffs[i])).collect() }
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(C::neg).collect() }
    }

    /// Cauchy product truncated at the smaller of the two degrees.
    pub fn mul(&self, rhs: &Self) -> Self {
        let d = self.degree().min(rhs.degree());
        let coeffs = (0..=d)
            .map(|k| {
                (0..=k).fold(self.coeffs[0].zero_like(), |acc, i| {
                    acc.add(&self.coeffs[i].mul(&rhs.coeffs[k - i]))
                })
            })
            .collect();
        TruncatedSeries { coeffs }
    }

    pub fn scale(&self, c: &C) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect() }
    }

    pub fn mul_int(&self, n: &BigInt) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|x| x.mul_int(n)).collect() }
    }

    /// `∫_0^z`, truncated at `degree`; the constant term is an exact zero.
    pub fn integrate(&self, degree: usize) -> Self {
        let zero = self.coeffs[0].zero_like();
        let coeffs = (0..=degree)
            .map(|m| match m {
                0 => zero.clone(),
                m if m - 1 <= self.degree() => self.coeffs[m - 1].div_int(m as u64),
                _ => zero.clone(),
            })
            .collect();
        TruncatedSeries { coeffs }
    }

    pub fn derivative(&self) -> Self {
        if self.degree() == 0 {
            return TruncatedSeries { coeffs: vec![self.coeffs[0].zero_like()] };
        }
        let coeffs = (1..=self.degree())
            .map(|i| self.coeffs[i].mul_int(&BigInt::from(i)))
            .collect();
        TruncatedSeries { coeffs }
    }

    /// Value of the truncated polynomial at an exact integer.
    pub fn eval_int(&self, x: &BigInt) -> C {
        let mut acc = self.coeffs[self.degree()].clone();
        for c in self.coeffs[..self.degree()].iter().rev() {
            acc = acc.mul_int(x).add(c);
        }
        acc
    }

    /// `f(a + b z)` for exact integers `a`, `b`, computed on the truncation.
    pub fn compose_affine(&self, a: &BigInt, b: &BigInt) -> Self {
        let d = self.degree();
        let zero = self.coeffs[0].zero_like();
        let mut acc = vec![zero.clone(); d + 1];
        acc[0] = self.coeffs[d].clone();
        for i in (0..d).rev() {
            // acc <- acc * (a + b z) + c_i
            let mut next = vec![zero.clone(); d + 1];
            for j in 0..=d {
                let mut t = if a.is_zero() { zero.clone() } else { acc[j].mul_int(a) };
                if j > 0 && !b.is_zero() {
                    t = t.add(&acc[j - 1].mul_int(b));
                }
                next[j] = t;
            }
            next[0] = next[0].add(&self.coeffs[i]);
            acc = next;
        }
        TruncatedSeries { coeffs: acc }
    }

    /// Coefficientwise agreement to the precision both sides carry.
    pub fn agrees_with(&self, rhs: &Self) -> bool {
        self.degree() == rhs.degree() && self.coeffs.iter().zip(&rhs.coeffs).all(|(a, b)| a.agrees_with(b))
    }

    pub fn is_zero_like(&self) -> bool {
        self.coeffs.iter().all(C::is_zero_like)
    }

    /// `z`, truncated at `degree >= 1`, with `one` as the unit coefficient.
    pub fn variable(one: C, degree: usize) -> Self {
        let zero = one.zero_like();
        let mut coeffs = vec![zero; degree + 1];
        if degree >= 1 {
            coeffs[1] = one;
        }
        TruncatedSeries { coeffs }
    }
}

/// Integer polynomial helpers used by tests and fixtures.
pub fn int_poly<C: Coefficient>(template: &C, coeffs: &[i64]) -> TruncatedSeries<C> {
    let one = template.one_like();
    TruncatedSeries::new(
        coeffs
            .iter()
            .map(|&c| if c == 0 { one.zero_like() } else { one.mul_int(&BigInt::from(c)) })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicNumber;
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn qs(v: &[i64]) -> TruncatedSeries<BigRational> {
        int_poly(&q(1), v)
    }

    #[test]
    fn add_and_mul_small() {
        let a = qs(&[1, 1, 0]);
        let b = qs(&[1, -1, 0]);
        assert_eq!(a.add(&b), qs(&[2, 0, 0]));
        assert_eq!(a.mul(&b), qs(&[1, 0, -1]));
        // truncation follows the shorter operand
        assert_eq!(qs(&[1, 1]).mul(&qs(&[1, 1, 1])).degree(), 1);
    }

    #[test]
    fn integrate_and_differentiate() {
        let one = qs(&[1, 0, 0, 0]);
        let z = one.integrate(3);
        assert_eq!(z, qs(&[0, 1, 0, 0]));
        let z2 = z.integrate(3);
        assert_eq!(z2.coeff(2), &BigRational::new(BigInt::from(1), BigInt::from(2)));
        assert_eq!(z2.derivative().truncate(2), z.truncate(2));
    }

    #[test]
    fn affine_composition() {
        // (z^2 - z)(1 + 5z) expansion checked by hand: f(1 + 5z) = 5z + 25z^2
        let f = qs(&[0, -1, 1]);
        let g = f.compose_affine(&BigInt::from(1), &BigInt::from(5));
        assert_eq!(g, qs(&[0, 5, 25]));
        assert_eq!(f.eval_int(&BigInt::from(3)), q(6));
    }

    #[test]
    fn padic_scale_shifts_valuations() {
        let t = PadicNumber::one(5, 6);
        let f = int_poly(&t, &[1, 2, 3]);
        let g = f.scale(&PadicNumber::from_i64(5, 5, 6));
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert_eq!(b.valuation(), a.valuation().map(|v| v + 1));
        }
    }
}
