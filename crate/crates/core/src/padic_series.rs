//! Power series over `Q_p` on a residue disk: Newton polygons, root counting,
//! and recursive isolation of zeros into sub-disks `{x : v(x - c) >= M}`.
//!
//! A residue disk is parametrised by a coordinate `z` with the disk equal to
//! `Z_p` in that coordinate. Sub-disks are explored by the substitution
//! `z <- c + p^M z`, which keeps every series integral-coordinate and lets a
//! Newton polygon count the zeros of each class.

use num_bigint::BigInt;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{pow_p, PadicNumber};
use crate::series::TruncatedSeries;

/// Default recursion depth for zero isolation.
pub const DEFAULT_DEPTH_CAP: u32 = 12;

/// Extra levels allowed when refining a simple zero towards a Hensel point.
const HENSEL_REFINE_LIMIT: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("tail guarantee {tail} exceeds truncation degree {degree}")]
    TailBeyondTruncation { tail: usize, degree: usize },
    #[error("all coefficients up to the tail guarantee are indistinguishable from zero")]
    AllCoefficientsIndistinguishableFromZero,
    #[error("coefficient {index} is only known to be O(p^{known_to}); it could change the Newton polygon")]
    PrecisionTooLowForHull { index: usize, known_to: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PadicSeries {
    p: u64,
    series: TruncatedSeries<PadicNumber>,
    tail_guarantee: usize,
}

impl PadicSeries {
    /// `tail_guarantee` is the index `d*` past which coefficients do not affect
    /// the zeros in the closed unit disk (a Weierstrass-degree bound).
    pub fn new(p: u64, coeffs: Vec<PadicNumber>, tail_guarantee: usize) -> Result<Self, SeriesError> {
        PadicNumber::check_prime(p).map_err(|_| SeriesError::NotPrime(p))?;
        if let Some(c) = coeffs.iter().find(|c| c.p() != p) {
            return Err(SeriesError::PrimeMismatch(p, c.p()));
        }
        if coeffs.is_empty() {
            return Err(SeriesError::TailBeyondTruncation { tail: tail_guarantee, degree: 0 });
        }
        let degree = coeffs.len() - 1;
        if tail_guarantee > degree {
            return Err(SeriesError::TailBeyondTruncation { tail: tail_guarantee, degree });
        }
        Ok(PadicSeries { p, series: TruncatedSeries::new(coeffs), tail_guarantee })
    }

    /// An integer polynomial with every coefficient known to `prec` digits.
    pub fn from_int_poly(p: u64, coeffs: &[BigInt], prec: u32) -> Result<Self, SeriesError> {
        let cs: Vec<PadicNumber> = coeffs.iter().map(|c| PadicNumber::from_int(p, c, prec)).collect();
        let d = cs.len().saturating_sub(1);
        Self::new(p, cs, d)
    }

    pub fn from_i64_poly(p: u64, coeffs: &[i64], prec: u32) -> Result<Self, SeriesError> {
        let big: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        Self::from_int_poly(p, &big, prec)
    }

    pub fn from_series(p: u64, series: TruncatedSeries<PadicNumber>, tail_guarantee: usize) -> Result<Self, SeriesError> {
        Self::new(p, series.into_coeffs(), tail_guarantee)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.series.degree()
    }

    pub fn tail_guarantee(&self) -> usize {
        self.tail_guarantee
    }

    pub fn coeffs(&self) -> &[PadicNumber] {
        self.series.coeffs()
    }

    pub fn as_series(&self) -> &TruncatedSeries<PadicNumber> {
        &self.series
    }

    /// Lowers every coefficient to absolute precision at most `k`.
    pub fn with_absolute_precision(&self, k: i64) -> Self {
        let coeffs = self.coeffs().iter().map(|c| c.truncate_absolute(k)).collect();
        PadicSeries { p: self.p, series: TruncatedSeries::new(coeffs), tail_guarantee: self.tail_guarantee }
    }

    fn recentered(&self, center: &BigInt, scale: &BigInt) -> PadicSeries {
        let s = self.series.compose_affine(center, scale);
        let d = s.degree();
        PadicSeries { p: self.p, series: s, tail_guarantee: d }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesOp {
    Add,
    Mul,
    Scale(PadicNumber),
}

/// Coefficientwise arithmetic on two series over the same prime.
///
/// The result is truncated at the smaller degree. Its tail guarantee is the
/// larger of the operands' for `Add`, their sum for `Mul` (both capped by the
/// result degree), and unchanged for `Scale`, which ignores `b`.
pub fn series_arith(a: &PadicSeries, b: &PadicSeries, op: SeriesOp) -> Result<PadicSeries, SeriesError> {
    if a.p != b.p {
        return Err(SeriesError::PrimeMismatch(a.p, b.p));
    }
    match op {
        SeriesOp::Add => {
            let s = a.series.add(&b.series);
            let d = s.degree();
            PadicSeries::from_series(a.p, s, a.tail_guarantee.max(b.tail_guarantee).min(d))
        }
        SeriesOp::Mul => {
            let s = a.series.mul(&b.series);
            let d = s.degree();
            PadicSeries::from_series(a.p, s, (a.tail_guarantee + b.tail_guarantee).min(d))
        }
        SeriesOp::Scale(c) => {
            if c.p() != a.p {
                return Err(SeriesError::PrimeMismatch(a.p, c.p()));
            }
            PadicSeries::from_series(a.p, a.series.scale(&c), a.tail_guarantee)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    /// Slope of the segment; the corresponding roots have valuation `-slope`.
    pub slope: Ratio<i64>,
}

impl Segment {
    pub fn length(&self) -> usize {
        self.end - self.start
    }
}

/// Lower convex hull of `{(i, v(c_i))}` over the coefficients up to the tail guarantee.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    pub vertices: Vec<(usize, i64)>,
}

impl NewtonPolygon {
    pub fn segments(&self) -> Vec<Segment> {
        self.vertices
            .windows(2)
            .map(|w| Segment {
                start: w[0].0,
                end: w[1].0,
                slope: Ratio::new(w[1].1 - w[0].1, (w[1].0 - w[0].0) as i64),
            })
            .collect()
    }

    /// Zeros at the origin: the coefficients left of the first vertex are exact zeros.
    pub fn roots_at_origin(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.0)
    }

    /// Height of the hull above index `i`, for `i` inside its horizontal range.
    pub fn height_at(&self, i: usize) -> Option<Ratio<i64>> {
        let w = self.vertices.windows(2).find(|w| w[0].0 <= i && i <= w[1].0);
        match w {
            Some(w) => {
                let slope = Ratio::new(w[1].1 - w[0].1, (w[1].0 - w[0].0) as i64);
                Some(Ratio::from_integer(w[0].1) + slope * Ratio::from_integer((i - w[0].0) as i64))
            }
            None if self.vertices.len() == 1 && self.vertices[0].0 == i => {
                Some(Ratio::from_integer(self.vertices[0].1))
            }
            None => None,
        }
    }
}

fn cross(o: (usize, i64), a: (usize, i64), b: (usize, i64)) -> i128 {
    let (ox, oy) = (o.0 as i128, o.1 as i128);
    (a.0 as i128 - ox) * (b.1 as i128 - oy) - (a.1 as i128 - oy) * (b.0 as i128 - ox)
}

fn lower_hull(points: &[(usize, i64)]) -> Vec<(usize, i64)> {
    let mut hull: Vec<(usize, i64)> = Vec::with_capacity(points.len());
    for &pt in points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0 {
            hull.pop();
        }
        hull.push(pt);
    }
    hull
}

/// Newton polygon of the coefficients `0..=tail_guarantee`.
///
/// A coefficient only known as `O(p^k)` is rejected if a value of valuation
/// `>= k` there could alter the hull.
pub fn newton_polygon(f: &PadicSeries) -> Result<NewtonPolygon, SeriesError> {
    newton_polygon_of(&f.coeffs()[..=f.tail_guarantee])
}

fn newton_polygon_of(coeffs: &[PadicNumber]) -> Result<NewtonPolygon, SeriesError> {
    let points: Vec<(usize, i64)> = coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.valuation().map(|v| (i, v)))
        .collect();
    if points.is_empty() {
        return Err(SeriesError::AllCoefficientsIndistinguishableFromZero);
    }
    let poly = NewtonPolygon { vertices: lower_hull(&points) };
    for (i, c) in coeffs.iter().enumerate() {
        if c.valuation().is_some() || c.is_exact_zero() {
            continue;
        }
        let k = c.valuation_lower_bound().expect("finite zero marker");
        let below = match poly.height_at(i) {
            Some(h) => Ratio::from_integer(k) < h,
            None => true,
        };
        if below {
            return Err(SeriesError::PrecisionTooLowForHull { index: i, known_to: k });
        }
    }
    Ok(poly)
}

/// Number of zeros (over `C_p`, with multiplicity) of valuation `>= lambda`
/// among the coefficients `coeffs`, treated as a polynomial.
///
/// This is the rightmost index minimising `v(c_i) + lambda * i`.
pub fn count_roots_valuation_at_least(coeffs: &[PadicNumber], lambda: i64) -> Result<usize, SeriesError> {
    let mut best: Option<(i64, usize)> = None;
    for (i, c) in coeffs.iter().enumerate() {
        if let Some(v) = c.valuation() {
            let w = v + lambda * i as i64;
            if best.is_none_or(|(b, _)| w <= b) {
                best = Some((w, i));
            }
        }
    }
    let (min, idx) = best.ok_or(SeriesError::AllCoefficientsIndistinguishableFromZero)?;
    for (i, c) in coeffs.iter().enumerate() {
        if c.valuation().is_some() || c.is_exact_zero() {
            continue;
        }
        let k = c.valuation_lower_bound().expect("finite zero marker");
        let w = k + lambda * i as i64;
        if (i > idx && w <= min) || (i < idx && w < min) {
            return Err(SeriesError::PrecisionTooLowForHull { index: i, known_to: k });
        }
    }
    Ok(idx)
}

/// Zeros of valuation `>= 1`: candidates in the open residue disk `pZ_p`.
pub fn root_count_positive_valuation(f: &PadicSeries) -> Result<usize, SeriesError> {
    count_roots_valuation_at_least(&f.coeffs()[..=f.tail_guarantee], 1)
}

/// Zeros in the closed unit disk (valuation `>= 0`).
pub fn root_count_closed_disk(f: &PadicSeries) -> Result<usize, SeriesError> {
    count_roots_valuation_at_least(&f.coeffs()[..=f.tail_guarantee], 0)
}

/// A point `x` of the disk with `v(f(x)) > 2 v(f'(x))`: Newton iteration from
/// `x` converges to the unique zero with `v(root - x) > v(f'(x))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HenselCertificate {
    #[serde(with = "crate::schema::decimal")]
    pub point: BigInt,
    /// `x` is given modulo `p^point_depth` (its base-`p` digits).
    pub point_depth: u32,
    /// Lower bound for `v(f(x))` (exact unless the value is a zero marker).
    pub value_valuation: i64,
    pub derivative_valuation: i64,
}

impl HenselCertificate {
    pub fn verify(&self, f: &PadicSeries) -> bool {
        let fx = f.as_series().eval_int(&self.point);
        let dfx = f.as_series().derivative().eval_int(&self.point);
        match (fx.valuation_lower_bound(), dfx.valuation()) {
            (None, Some(e)) => e == self.derivative_valuation,
            (Some(v), Some(e)) => v > 2 * e && e == self.derivative_valuation && v >= self.value_valuation,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroDisk {
    pub chart_id: String,
    pub center_label: String,
    /// Base-`p` digits of the disk center in the local coordinate, least significant first.
    pub center_digits: Vec<u64>,
    pub depth: u32,
    pub zero_count: u32,
    /// Set when no Hensel point could be certified within the available precision.
    pub multiplicity_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<HenselCertificate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    PrecisionExhausted,
    MultipleRootSuspected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationFailure {
    pub chart_id: String,
    pub center_label: String,
    pub center_digits: Vec<u64>,
    pub depth: u32,
    pub kind: FailureKind,
    /// Zeros in the unresolved class, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_count: Option<u32>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IsolationOutcome {
    /// Zeros of the series in the whole disk `Z_p` (over `C_p`), when decidable.
    pub disk_zero_count: Option<u32>,
    pub disks: Vec<ZeroDisk>,
    pub failures: Vec<IsolationFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsolationError {
    #[error("precision exhausted at depth {depth}: {detail}")]
    PrecisionExhausted { depth: u32, detail: String },
    #[error("{count} zeros remain in one class at depth cap {depth}; multiple zero suspected")]
    MultipleRootSuspected { depth: u32, count: u32 },
}

pub fn digits_to_int(p: u64, digits: &[u64]) -> BigInt {
    digits.iter().rev().fold(BigInt::from(0), |acc, &d| acc * BigInt::from(p) + BigInt::from(d))
}

struct Isolator<'a> {
    f: &'a PadicSeries,
    chart_id: &'a str,
    center_label: &'a str,
    depth_cap: u32,
    out: IsolationOutcome,
}

impl Isolator<'_> {
    fn class_series(&self, digits: &[u64]) -> PadicSeries {
        let center = digits_to_int(self.f.p, digits);
        self.f.recentered(&center, &pow_p(self.f.p, digits.len() as u32))
    }

    fn fail(&mut self, digits: &[u64], kind: FailureKind, zero_count: Option<u32>, detail: String) {
        self.out.failures.push(IsolationFailure {
            chart_id: self.chart_id.to_string(),
            center_label: self.center_label.to_string(),
            center_digits: digits.to_vec(),
            depth: digits.len() as u32,
            kind,
            zero_count,
            detail,
        });
    }

    /// Visits the `p` classes one level below the disk with center `prefix`.
    fn split(&mut self, prefix: &mut Vec<u64>) {
        for c in 0..self.f.p {
            prefix.push(c);
            let depth = prefix.len() as u32;
            match root_count_closed_disk(&self.class_series(prefix)) {
                Err(e) => self.fail(prefix, FailureKind::PrecisionExhausted, None, e.to_string()),
                Ok(0) => {}
                Ok(1) => {
                    let certificate = self.certify(prefix);
                    self.out.disks.push(ZeroDisk {
                        chart_id: self.chart_id.to_string(),
                        center_label: self.center_label.to_string(),
                        center_digits: prefix.clone(),
                        depth,
                        zero_count: 1,
                        multiplicity_flag: certificate.is_none(),
                        certificate,
                    });
                }
                Ok(n) if depth >= self.depth_cap => self.fail(
                    prefix,
                    FailureKind::MultipleRootSuspected,
                    Some(n as u32),
                    format!("{n} zeros still share a class at the depth cap"),
                ),
                Ok(_) => self.split(prefix),
            }
            prefix.pop();
        }
    }

    /// Walks down the unique class holding the zero until Hensel's criterion holds.
    fn certify(&self, digits: &[u64]) -> Option<HenselCertificate> {
        let poly = self.f.as_series();
        let deriv = poly.derivative();
        let mut digits = digits.to_vec();
        let limit = digits.len() as u32 + HENSEL_REFINE_LIMIT;
        loop {
            let x = digits_to_int(self.f.p, &digits);
            let fx = poly.eval_int(&x);
            let dfx = deriv.eval_int(&x);
            if let Some(e) = dfx.valuation() {
                match fx.valuation_lower_bound() {
                    None => {
                        return Some(HenselCertificate {
                            point: x,
                            point_depth: digits.len() as u32,
                            value_valuation: i64::MAX,
                            derivative_valuation: e,
                        })
                    }
                    Some(v) if v > 2 * e => {
                        return Some(HenselCertificate {
                            point: x,
                            point_depth: digits.len() as u32,
                            value_valuation: v,
                            derivative_valuation: e,
                        })
                    }
                    _ => {}
                }
            }
            if digits.len() as u32 >= limit {
                return None;
            }
            let mut next = None;
            for c in 0..self.f.p {
                digits.push(c);
                let n = root_count_closed_disk(&self.class_series(&digits));
                digits.pop();
                match n {
                    Ok(1) => {
                        next = Some(c);
                        break;
                    }
                    Ok(_) => {}
                    Err(_) => return None,
                }
            }
            digits.push(next?);
        }
    }
}

/// Splits the residue disk `Z_p` (in the coordinate of `f`) into classes holding at most one zero.
pub fn isolate_zeros_outcome(f: &PadicSeries, chart_id: &str, center_label: &str, depth_cap: u32) -> IsolationOutcome {
    let mut iso = Isolator { f, chart_id, center_label, depth_cap: depth_cap.max(1), out: IsolationOutcome::default() };
    match root_count_closed_disk(f) {
        Err(e) => iso.fail(&[], FailureKind::PrecisionExhausted, None, e.to_string()),
        Ok(0) => iso.out.disk_zero_count = Some(0),
        Ok(n) => {
            iso.out.disk_zero_count = Some(n as u32);
            iso.split(&mut Vec::new());
        }
    }
    iso.out
}

/// Zero disks for `f`; any unresolved class is an error.
pub fn isolate_zeros(f: &PadicSeries, chart_id: &str, depth_cap: u32) -> Result<Vec<ZeroDisk>, IsolationError> {
    let out = isolate_zeros_outcome(f, chart_id, "", depth_cap);
    if let Some(fail) = out.failures.iter().find(|f| f.kind == FailureKind::MultipleRootSuspected) {
        return Err(IsolationError::MultipleRootSuspected {
            depth: fail.depth,
            count: fail.zero_count.unwrap_or(0),
        });
    }
    if let Some(fail) = out.failures.first() {
        return Err(IsolationError::PrecisionExhausted { depth: fail.depth, detail: fail.detail.clone() });
    }
    Ok(out.disks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueDisk {
    pub center_label: String,
    pub series: PadicSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub chart_id: String,
    pub p: u64,
    pub disks: Vec<ResidueDisk>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparationStatus {
    Separated,
    PrecisionExhausted,
    MultipleRootSuspected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub disks: Vec<ZeroDisk>,
    #[serde(rename = "M")]
    pub m: u32,
    pub status: SeparationStatus,
    pub diagnostics: Vec<IsolationFailure>,
}

/// Runs zero isolation on every residue disk of every chart.
///
/// `M` is the largest depth of any emitted disk (at least 1). Disks are
/// processed in parallel; the output order is chart order, then disk order.
pub fn separation_modulus(charts: &[Chart], depth_cap: u32) -> SeparationReport {
    let jobs: Vec<(&Chart, &ResidueDisk)> =
        charts.iter().flat_map(|c| c.disks.iter().map(move |d| (c, d))).collect();
    let outcomes: Vec<IsolationOutcome> = jobs
        .par_iter()
        .map(|(c, d)| isolate_zeros_outcome(&d.series, &c.chart_id, &d.center_label, depth_cap))
        .collect();

    let mut disks = Vec::new();
    let mut diagnostics = Vec::new();
    for o in outcomes {
        disks.extend(o.disks);
        diagnostics.extend(o.failures);
    }
    let m = disks.iter().map(|d| d.depth).max().unwrap_or(1).max(1);
    let status = if diagnostics.iter().any(|f| f.kind == FailureKind::MultipleRootSuspected) {
        SeparationStatus::MultipleRootSuspected
    } else if !diagnostics.is_empty() {
        SeparationStatus::PrecisionExhausted
    } else {
        SeparationStatus::Separated
    };
    SeparationReport { disks, m, status, diagnostics }
}
