//! Words over `{1..k}`, their shuffle product, and the iterated integrals
//! `a_w(z) = ∫_0^z f_{i_1} a_{i_2 ... i_l}` of a system of one-forms `f_i(z) dz`
//! on a residue disk with base point `z = 0`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::PadicNumber;
use crate::padic_series::{PadicSeries, SeriesError};
use crate::scalar::Coefficient;
use crate::series::TruncatedSeries;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordsError {
    #[error("a form system needs at least one form")]
    NoForms,
    #[error("form {index} has truncation degree {got}, expected {expected}")]
    DegreeMismatch { index: usize, got: usize, expected: usize },
    #[error("form {index} has a pole of order {order}; only regular forms can be integrated")]
    FormNotRegular { index: usize, order: u32 },
    #[error("letter {letter} outside the alphabet 1..={k}")]
    LetterOutOfRange { letter: u32, k: usize },
    #[error("truncation {trunc} exceeds the forms' degree {degree}")]
    TruncationTooLarge { trunc: usize, degree: usize },
    #[error("precision exhausted at coefficient z^{index} of a_{word}")]
    PrecisionExhausted { word: Word, index: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A finite sequence of letters from `{1..k}`; the empty word stands for `1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }
}

impl From<&[u32]> for Word {
    fn from(v: &[u32]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All riffle interleavings of `u` and `v`, with multiplicity.
pub fn shuffle(u: &Word, v: &Word) -> BTreeMap<Word, u64> {
    let mut out = BTreeMap::new();
    let mut buf = Vec::with_capacity(u.len() + v.len());
    riffle(u.letters(), v.letters(), &mut buf, &mut out);
    out
}

fn riffle(u: &[u32], v: &[u32], buf: &mut Vec<u32>, out: &mut BTreeMap<Word, u64>) {
    if u.is_empty() || v.is_empty() {
        let mut w = buf.clone();
        w.extend_from_slice(u);
        w.extend_from_slice(v);
        *out.entry(Word(w)).or_insert(0) += 1;
        return;
    }
    buf.push(u[0]);
    riffle(&u[1..], v, buf, out);
    buf.pop();
    buf.push(v[0]);
    riffle(u, &v[1..], buf, out);
    buf.pop();
}

/// Expansions `f_1 .. f_k` of the forms on one disk, plus the unit used for `a_∅`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormSystem<C> {
    forms: Vec<TruncatedSeries<C>>,
    one: C,
}

impl<C: Coefficient> FormSystem<C> {
    pub fn new(forms: Vec<TruncatedSeries<C>>, one: C) -> Result<Self, WordsError> {
        let first = forms.first().ok_or(WordsError::NoForms)?;
        let expected = first.degree();
        if let Some((index, f)) = forms.iter().enumerate().find(|(_, f)| f.degree() != expected) {
            return Err(WordsError::DegreeMismatch { index, got: f.degree(), expected });
        }
        Ok(FormSystem { forms, one })
    }

    pub fn k(&self) -> usize {
        self.forms.len()
    }

    pub fn degree(&self) -> usize {
        self.forms[0].degree()
    }

    pub fn form(&self, letter: u32) -> &TruncatedSeries<C> {
        &self.forms[letter as usize - 1]
    }

    fn check(&self, w: &Word, trunc: usize) -> Result<(), WordsError> {
        if trunc > self.degree() {
            return Err(WordsError::TruncationTooLarge { trunc, degree: self.degree() });
        }
        match w.letters().iter().find(|&&l| l == 0 || l as usize > self.k()) {
            Some(&letter) => Err(WordsError::LetterOutOfRange { letter, k: self.k() }),
            None => Ok(()),
        }
    }
}

/// Suffix integrals shared across the words of one evaluation.
struct Integrator<'a, C> {
    fs: &'a FormSystem<C>,
    trunc: usize,
    memo: HashMap<Vec<u32>, TruncatedSeries<C>>,
}

impl<C: Coefficient> Integrator<'_, C> {
    fn integral(&mut self, letters: &[u32]) -> Result<TruncatedSeries<C>, WordsError> {
        if let Some(s) = self.memo.get(letters) {
            return Ok(s.clone());
        }
        let s = match letters.split_first() {
            None => TruncatedSeries::constant(self.fs.one.clone(), self.trunc),
            Some((&i, rest)) => {
                let inner = self.integral(rest)?;
                let integrand = self.fs.form(i).truncate(self.trunc).mul(&inner);
                let s = integrand.integrate(self.trunc);
                if let Some(index) = s.coeffs().iter().position(C::precision_exhausted) {
                    return Err(WordsError::PrecisionExhausted { word: Word(letters.to_vec()), index });
                }
                s
            }
        };
        self.memo.insert(letters.to_vec(), s.clone());
        Ok(s)
    }
}

/// `a_w` truncated at `trunc`.
pub fn iterated_integral<C: Coefficient>(
    fs: &FormSystem<C>,
    w: &Word,
    trunc: usize,
) -> Result<TruncatedSeries<C>, WordsError> {
    fs.check(w, trunc)?;
    Integrator { fs, trunc, memo: HashMap::new() }.integral(w.letters())
}

/// A finite combination `sum_w c_w a_w`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observable<C> {
    terms: BTreeMap<Word, C>,
}

impl<C: Coefficient> Observable<C> {
    pub fn new() -> Self {
        Observable { terms: BTreeMap::new() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, C)>) -> Self {
        let mut obs = Self::new();
        for (w, c) in terms {
            obs.add_term(w, c);
        }
        obs
    }

    pub fn add_term(&mut self, w: Word, c: C) {
        let sum = match self.terms.remove(&w) {
            Some(old) => old.add(&c),
            None => c,
        };
        if !sum.is_zero_like() {
            self.terms.insert(w, sum);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Word, C> {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Product in the shuffle algebra.
    pub fn shuffle_product(&self, rhs: &Self) -> Self {
        let mut out = Self::new();
        for (u, cu) in &self.terms {
            for (v, cv) in &rhs.terms {
                let c = cu.mul(cv);
                for (w, mult) in shuffle(u, v) {
                    out.add_term(w, c.mul_int(&BigInt::from(mult)));
                }
            }
        }
        out
    }
}

/// `sum_w c_w a_w(z)` truncated at `trunc`.
pub fn evaluate_observable<C: Coefficient>(
    obs: &Observable<C>,
    fs: &FormSystem<C>,
    trunc: usize,
) -> Result<TruncatedSeries<C>, WordsError> {
    for w in obs.terms.keys() {
        fs.check(w, trunc)?;
    }
    let mut integ = Integrator { fs, trunc, memo: HashMap::new() };
    let zero = fs.one.zero_like();
    let mut acc = TruncatedSeries::constant(zero, trunc);
    for (w, c) in &obs.terms {
        acc = acc.add(&integ.integral(w.letters())?.scale(c));
    }
    Ok(acc)
}

/// The observable as a p-adic series ready for zero separation.
pub fn observable_series(
    obs: &Observable<PadicNumber>,
    fs: &FormSystem<PadicNumber>,
    trunc: usize,
    tail_guarantee: usize,
) -> Result<PadicSeries, WordsError> {
    let s = evaluate_observable(obs, fs, trunc)?;
    Ok(PadicSeries::from_series(fs.one.p(), s, tail_guarantee)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::int_poly;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn w(v: &[u32]) -> Word {
        Word(v.to_vec())
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn const_one(trunc: usize) -> FormSystem<BigRational> {
        let mut c = vec![0; trunc + 1];
        c[0] = 1;
        FormSystem::new(vec![int_poly(&q(1, 1), &c)], q(1, 1)).unwrap()
    }

    #[test]
    fn shuffle_small_cases() {
        assert_eq!(shuffle(&w(&[1]), &w(&[2])), BTreeMap::from([(w(&[1, 2]), 1), (w(&[2, 1]), 1)]));
        assert_eq!(shuffle(&w(&[1]), &w(&[1])), BTreeMap::from([(w(&[1, 1]), 2)]));
        assert_eq!(
            shuffle(&w(&[1, 2]), &w(&[3])),
            BTreeMap::from([(w(&[1, 2, 3]), 1), (w(&[1, 3, 2]), 1), (w(&[3, 1, 2]), 1)])
        );
        assert_eq!(shuffle(&w(&[]), &w(&[2, 1])), BTreeMap::from([(w(&[2, 1]), 1)]));
    }

    #[test]
    fn powers_of_z() {
        let fs = const_one(6);
        let a1 = iterated_integral(&fs, &w(&[1]), 6).unwrap();
        assert_eq!(a1.coeffs()[1], q(1, 1));
        let a11 = iterated_integral(&fs, &w(&[1, 1]), 6).unwrap();
        assert_eq!(a11.coeffs()[2], q(1, 2));
        let a111 = iterated_integral(&fs, &w(&[1, 1, 1]), 6).unwrap();
        assert_eq!(a111.coeffs()[3], q(1, 6));
        for (k, fact) in [(1usize, 1i64), (2, 2), (3, 6), (4, 24)] {
            let ak = iterated_integral(&fs, &Word(vec![1; k]), 6).unwrap();
            let mut pow = a1.clone();
            for _ in 1..k {
                pow = pow.mul(&a1);
            }
            assert_eq!(ak.mul_int(&BigInt::from(fact)), pow, "k = {k}");
        }
    }

    #[test]
    fn empty_word_is_one() {
        let fs = const_one(4);
        let a = iterated_integral(&fs, &w(&[]), 4).unwrap();
        assert_eq!(a, TruncatedSeries::constant(q(1, 1), 4));
    }

    #[test]
    fn rejects_bad_words_and_truncations() {
        let fs = const_one(4);
        assert!(matches!(iterated_integral(&fs, &w(&[2]), 4), Err(WordsError::LetterOutOfRange { .. })));
        assert!(matches!(iterated_integral(&fs, &w(&[0]), 4), Err(WordsError::LetterOutOfRange { .. })));
        assert!(matches!(iterated_integral(&fs, &w(&[1]), 5), Err(WordsError::TruncationTooLarge { .. })));
    }

    #[test]
    fn observables() {
        let fs = const_one(5);
        let one = Observable::from_terms([(w(&[]), q(1, 1))]);
        assert_eq!(evaluate_observable(&one, &fs, 5).unwrap(), TruncatedSeries::constant(q(1, 1), 5));
        let cancel = Observable::from_terms([(w(&[1]), q(1, 1)), (w(&[1]), q(-1, 1))]);
        assert!(cancel.is_empty());
        assert!(evaluate_observable(&cancel, &fs, 5).unwrap().is_zero_like());

        let a1 = Observable::from_terms([(w(&[1]), q(1, 1))]);
        let sq = a1.shuffle_product(&a1);
        assert_eq!(sq.terms(), &BTreeMap::from([(w(&[1, 1]), q(2, 1))]));
        let mut diff = Observable::from_terms([(w(&[1, 1]), q(2, 1))]);
        for (word, c) in sq.terms() {
            diff.add_term(word.clone(), c.neg());
        }
        assert!(evaluate_observable(&diff, &fs, 5).unwrap().is_zero_like());
    }

    #[test]
    fn padic_precision_exhaustion_is_reported() {
        let p = 3;
        // f = O(p^1) everywhere: repeated division by 3 eats the known digits.
        let f = TruncatedSeries::new(vec![PadicNumber::zero_to(p, 1); 10]);
        let fs = FormSystem::new(vec![f], PadicNumber::one(p, 1)).unwrap();
        let err = iterated_integral(&fs, &w(&[1]), 9).unwrap_err();
        assert!(matches!(err, WordsError::PrecisionExhausted { .. }), "{err}");
    }

    fn padic_forms(p: u64, prec: u32, raw: &[Vec<i64>]) -> FormSystem<PadicNumber> {
        let forms = raw.iter().map(|c| int_poly(&PadicNumber::one(p, prec), c)).collect();
        FormSystem::new(forms, PadicNumber::one(p, prec)).unwrap()
    }

    fn v_factorial(p: u64, m: usize) -> i64 {
        (1..=m as u64).map(|mut j| {
            let mut v = 0;
            while j % p == 0 {
                j /= p;
                v += 1;
            }
            v
        }).sum()
    }

    fn word_strategy(k: u32, max_len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(1..=k, 0..=max_len).prop_map(Word)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn shuffle_multiplicity_is_binomial(u in word_strategy(3, 4), v in word_strategy(3, 4)) {
            let total: u64 = shuffle(&u, &v).values().sum();
            let (a, b) = (u.len() as u64, v.len() as u64);
            let binom = (1..=a).fold(1u64, |acc, i| acc * (b + i) / i);
            prop_assert_eq!(total, binom);
        }

        #[test]
        fn shuffle_identity_rational(
            raw in prop::collection::vec(prop::collection::vec(-9i64..10, 9), 2),
            u in word_strategy(2, 2),
            v in word_strategy(2, 2),
        ) {
            let forms = raw.iter().map(|c| int_poly(&q(1, 1), c)).collect();
            let fs = FormSystem::new(forms, q(1, 1)).unwrap();
            let lhs = iterated_integral(&fs, &u, 8).unwrap().mul(&iterated_integral(&fs, &v, 8).unwrap());
            let sum = Observable::from_terms(shuffle(&u, &v).into_iter().map(|(w, m)| (w, q(m as i64, 1))));
            prop_assert_eq!(lhs, evaluate_observable(&sum, &fs, 8).unwrap());
        }

        #[test]
        fn padic_integrals_vanish_at_base_point_and_respect_valuation_bound(
            p in prop::sample::select(vec![2u64, 3, 5]),
            raw in prop::collection::vec(prop::collection::vec(-30i64..30, 13), 2),
            word in word_strategy(2, 4),
        ) {
            let fs = padic_forms(p, 10, &raw);
            let a = iterated_integral(&fs, &word, 12).unwrap();
            if !word.is_empty() {
                prop_assert!(a.coeffs()[0].is_exact_zero());
            }
            for (m, c) in a.coeffs().iter().enumerate() {
                if let Some(v) = c.valuation_lower_bound() {
                    prop_assert!(v >= -v_factorial(p, m), "z^{} has valuation {}", m, v);
                }
            }
        }
    }
}
