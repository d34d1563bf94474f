//! JSON shapes for series payloads, plus serde helpers that accept integers
//! either as JSON numbers or as decimal strings.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::iterated_words::{FormSystem, Observable, Word, WordsError};
use crate::padic::PadicNumber;
use crate::padic_series::{Chart, PadicSeries, ResidueDisk};
use crate::series::TruncatedSeries;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

impl SchemaError {
    pub fn at(path: impl Into<String>, msg: impl Into<String>) -> Self {
        SchemaError::Invalid { path: path.into(), msg: msg.into() }
    }

    pub fn path(&self) -> &str {
        match self {
            SchemaError::Invalid { path, .. } => path,
        }
    }
}

struct IntText;

impl Visitor<'_> for IntText {
    type Value = String;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an integer or a decimal string")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<String, E> {
        Ok(v.to_string())
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<String, E> {
        Ok(v.to_string())
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<String, E> {
        Ok(v.trim().to_string())
    }
}

fn int_text<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    d.deserialize_any(IntText)
}

/// `BigInt` as a decimal string; reads numbers too.
pub mod decimal {
    use super::*;

    pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let t = int_text(d)?;
        BigInt::from_str(&t).map_err(|_| de::Error::custom(format!("not a decimal integer: {t:?}")))
    }
}

/// Machine integers written as numbers; reads numbers or decimal strings.
pub mod lenient {
    use super::*;

    pub fn deserialize<'de, D, T>(d: D) -> Result<T, D::Error>
    where
        D: Deserializer<'de>,
        T: TryFrom<i64>,
        T::Error: fmt::Display,
    {
        let t = int_text(d)?;
        let v = i64::from_str(&t).map_err(|_| de::Error::custom(format!("not an integer: {t:?}")))?;
        T::try_from(v).map_err(de::Error::custom)
    }
}

/// Any displayable integer as a decimal string.
pub mod display_string {
    use super::*;

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }
}

pub mod lenient_opt_set {
    use super::*;

    #[derive(Deserialize)]
    struct Item(#[serde(deserialize_with = "lenient::deserialize")] u64);

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BTreeSet<u64>>, D::Error> {
        let v: Option<Vec<Item>> = Option::deserialize(d)?;
        Ok(v.map(|items| items.into_iter().map(|i| i.0).collect()))
    }
}

/// A big integer that serializes as a decimal string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecimalInt(#[serde(with = "decimal")] pub BigInt);

impl From<BigInt> for DecimalInt {
    fn from(n: BigInt) -> Self {
        DecimalInt(n)
    }
}

impl fmt::Display for DecimalInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Valuation field: an integer, or `"inf"` for an exact zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValJson {
    Finite(i64),
    Infinite,
}

impl Serialize for ValJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ValJson::Finite(v) => s.serialize_i64(*v),
            ValJson::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ValJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let t = int_text(d)?;
        if t.eq_ignore_ascii_case("inf") {
            return Ok(ValJson::Infinite);
        }
        i64::from_str(&t)
            .map(ValJson::Finite)
            .map_err(|_| de::Error::custom(format!("valuation must be an integer or \"inf\", got {t:?}")))
    }
}

/// One coefficient `p^val * unit`, `unit` known modulo `p^prec`.
///
/// `unit = "0"` encodes a value only known to lie in `p^val Z_p`;
/// `val = "inf"` encodes an exact zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffJson {
    pub val: ValJson,
    #[serde(default, with = "decimal")]
    pub unit: BigInt,
    #[serde(default, deserialize_with = "lenient::deserialize")]
    pub prec: u32,
}

impl CoeffJson {
    pub fn to_padic(&self, p: u64, path: &str) -> Result<PadicNumber, SchemaError> {
        match self.val {
            ValJson::Infinite => Ok(PadicNumber::zero(p)),
            ValJson::Finite(v) if self.unit.is_zero() => Ok(PadicNumber::zero_to(p, v)),
            ValJson::Finite(v) => PadicNumber::from_parts(p, v, self.unit.clone(), self.prec)
                .map_err(|e| SchemaError::at(format!("{path}.prec"), e.to_string())),
        }
    }

    pub fn from_padic(x: &PadicNumber) -> Self {
        match (x.valuation(), x.unit()) {
            (Some(v), Some(u)) => {
                CoeffJson { val: ValJson::Finite(v), unit: u.clone(), prec: x.relative_precision() }
            }
            _ => match x.valuation_lower_bound() {
                Some(k) => CoeffJson { val: ValJson::Finite(k), unit: BigInt::zero(), prec: 0 },
                None => CoeffJson { val: ValJson::Infinite, unit: BigInt::zero(), prec: 0 },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiskJson {
    pub center_label: String,
    pub coeffs: Vec<CoeffJson>,
    #[serde(deserialize_with = "lenient::deserialize")]
    pub trunc: usize,
    #[serde(deserialize_with = "lenient::deserialize")]
    pub weierstrass_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartJson {
    pub chart_id: String,
    #[serde(deserialize_with = "lenient::deserialize")]
    pub p: u64,
    pub disks: Vec<DiskJson>,
}

pub fn coeffs_to_padic(p: u64, coeffs: &[CoeffJson], path: &str) -> Result<Vec<PadicNumber>, SchemaError> {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.to_padic(p, &format!("{path}[{i}]")))
        .collect()
}

impl DiskJson {
    pub fn to_series(&self, p: u64, path: &str) -> Result<PadicSeries, SchemaError> {
        if self.coeffs.is_empty() {
            return Err(SchemaError::at(format!("{path}.coeffs"), "at least one coefficient required"));
        }
        if self.trunc + 1 != self.coeffs.len() {
            return Err(SchemaError::at(
                format!("{path}.trunc"),
                format!("trunc = {} but {} coefficients given", self.trunc, self.coeffs.len()),
            ));
        }
        if self.weierstrass_bound > self.trunc {
            return Err(SchemaError::at(
                format!("{path}.weierstrass_bound"),
                format!("{} exceeds trunc = {}", self.weierstrass_bound, self.trunc),
            ));
        }
        let coeffs = coeffs_to_padic(p, &self.coeffs, &format!("{path}.coeffs"))?;
        PadicSeries::new(p, coeffs, self.weierstrass_bound).map_err(|e| SchemaError::at(path, e.to_string()))
    }

    pub fn from_series(center_label: &str, f: &PadicSeries) -> Self {
        DiskJson {
            center_label: center_label.to_string(),
            coeffs: f.coeffs().iter().map(CoeffJson::from_padic).collect(),
            trunc: f.degree(),
            weierstrass_bound: f.tail_guarantee(),
        }
    }
}

impl ChartJson {
    pub fn to_chart(&self, path: &str) -> Result<Chart, SchemaError> {
        PadicNumber::check_prime(self.p).map_err(|e| SchemaError::at(format!("{path}.p"), e.to_string()))?;
        let disks = self
            .disks
            .iter()
            .enumerate()
            .map(|(i, d)| {
                Ok(ResidueDisk {
                    center_label: d.center_label.clone(),
                    series: d.to_series(self.p, &format!("{path}.disks[{i}]"))?,
                })
            })
            .collect::<Result<_, SchemaError>>()?;
        Ok(Chart { chart_id: self.chart_id.clone(), p: self.p, disks })
    }

    pub fn from_chart(c: &Chart) -> Self {
        ChartJson {
            chart_id: c.chart_id.clone(),
            p: c.p,
            disks: c.disks.iter().map(|d| DiskJson::from_series(&d.center_label, &d.series)).collect(),
        }
    }
}

pub fn charts_from_json(charts: &[ChartJson], path: &str) -> Result<Vec<Chart>, SchemaError> {
    charts.iter().enumerate().map(|(i, c)| c.to_chart(&format!("{path}[{i}]"))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormJson {
    pub coeffs: Vec<CoeffJson>,
    /// Order of a pole at the disk center; only `0` can be integrated.
    #[serde(default, deserialize_with = "lenient::deserialize")]
    pub pole_order: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSystemJson {
    #[serde(deserialize_with = "lenient::deserialize")]
    pub p: u64,
    pub forms: Vec<FormJson>,
    /// Relative precision of the unit `a_∅`; defaults to the largest in the forms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_prec: Option<u32>,
}

impl FormSystemJson {
    pub fn to_forms(&self, path: &str) -> Result<FormSystem<PadicNumber>, SchemaError> {
        PadicNumber::check_prime(self.p).map_err(|e| SchemaError::at(format!("{path}.p"), e.to_string()))?;
        let mut forms = Vec::with_capacity(self.forms.len());
        for (i, f) in self.forms.iter().enumerate() {
            let fpath = format!("{path}.forms[{i}]");
            if f.pole_order > 0 {
                let e = WordsError::FormNotRegular { index: i, order: f.pole_order };
                return Err(SchemaError::at(format!("{fpath}.pole_order"), e.to_string()));
            }
            if f.coeffs.is_empty() {
                return Err(SchemaError::at(format!("{fpath}.coeffs"), "at least one coefficient required"));
            }
            forms.push(TruncatedSeries::new(coeffs_to_padic(self.p, &f.coeffs, &format!("{fpath}.coeffs"))?));
        }
        let prec = self.working_prec.unwrap_or_else(|| {
            forms.iter().flat_map(|f| f.coeffs().iter().map(|c| c.relative_precision())).max().unwrap_or(0)
        });
        if prec == 0 {
            return Err(SchemaError::at(format!("{path}.working_prec"), "must be at least 1"));
        }
        FormSystem::new(forms, PadicNumber::one(self.p, prec))
            .map_err(|e| SchemaError::at(format!("{path}.forms"), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub word: Word,
    pub coeff: CoeffJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableJson {
    pub terms: Vec<TermJson>,
}

impl ObservableJson {
    pub fn to_observable(&self, p: u64, path: &str) -> Result<Observable<PadicNumber>, SchemaError> {
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| Ok((t.word.clone(), t.coeff.to_padic(p, &format!("{path}.terms[{i}].coeff"))?)))
            .collect::<Result<Vec<_>, SchemaError>>()?;
        Ok(Observable::from_terms(terms))
    }
}
