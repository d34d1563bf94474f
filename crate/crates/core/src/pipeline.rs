//! End-to-end driver: halting level `t`, separation modulus `M`, annihilator
//! `N` and prime set `T_0`, plus the plain tabular rendering used by the CLI.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::descent_arith::{annihilator_n, enlarged_prime_set, JacobianLocalData};
use crate::padic_series::{separation_modulus, SeparationReport, SeparationStatus, DEFAULT_DEPTH_CAP};
use crate::schema::{charts_from_json, lenient, ChartJson, DecimalInt};
use crate::selmer_bounds::{halting_level, BoundRow, CurveParams, Halting, ParityMode};

pub const DEFAULT_N_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    #[serde(alias = "plain_table")]
    Table,
}

fn default_n_cap() -> usize {
    DEFAULT_N_CAP
}

fn default_depth_cap() -> u32 {
    DEFAULT_DEPTH_CAP
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub curve: CurveParams,
    #[serde(default)]
    pub mode: ParityMode,
    #[serde(default = "default_n_cap", deserialize_with = "lenient::deserialize")]
    pub n_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charts: Option<Vec<ChartJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian: Option<JacobianLocalData>,
    #[serde(default = "default_depth_cap", deserialize_with = "lenient::deserialize")]
    pub depth_cap: u32,
    #[serde(default)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    Halt,
    Separate,
    Order,
    Primes,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::Halt => "halt",
            Stage::Separate => "separate",
            Stage::Order => "order",
            Stage::Primes => "primes",
        })
    }
}

/// Process exit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Input,
    BoundSearchExhausted,
    SeparationFailed,
    Internal,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Input => 2,
            ExitKind::BoundSearchExhausted => 3,
            ExitKind::SeparationFailed => 4,
            ExitKind::Internal => 5,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("[{stage}] {message}")]
pub struct StageError {
    pub stage: Stage,
    pub kind: ExitKind,
    pub message: String,
    /// Whatever the failing stage managed to produce.
    pub partial: Option<serde_json::Value>,
}

impl StageError {
    pub fn input(message: impl Into<String>) -> Self {
        StageError { stage: Stage::Input, kind: ExitKind::Input, message: message.into(), partial: None }
    }

    fn at(stage: Stage, kind: ExitKind, message: impl Into<String>) -> Self {
        StageError { stage, kind, message: message.into(), partial: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HaltingSummary {
    pub mode: ParityMode,
    pub n_cap: usize,
    pub t: Option<usize>,
    pub rows: Vec<BoundRow<BigInt>>,
}

impl HaltingSummary {
    pub fn from_halting(h: &Halting<BigInt>) -> Self {
        let table = h.table();
        HaltingSummary { mode: table.mode, n_cap: table.n_cap(), t: h.t(), rows: table.rows.clone() }
    }
}

/// One document holding every stage's output and the input that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub input: PipelineConfig,
    pub t: usize,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N")]
    pub n: DecimalInt,
    #[serde(rename = "T0")]
    pub t0: Vec<DecimalInt>,
    pub halting: HaltingSummary,
    pub separation: SeparationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weil_warning: Option<String>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), StageError> {
        self.curve.validate().map_err(|e| StageError::input(format!("curve: {e}")))?;
        if let Some(j) = &self.jacobian {
            j.validate().map_err(|e| StageError::input(format!("jacobian: {e}")))?;
            if j.p != self.curve.p {
                return Err(StageError::input(format!("jacobian.p = {} differs from curve.p = {}", j.p, self.curve.p)));
            }
            if j.g != self.curve.g.get() {
                return Err(StageError::input(format!("jacobian.g = {} differs from curve.g = {}", j.g, self.curve.g)));
            }
        }
        if let Some(charts) = &self.charts {
            if let Some((i, c)) = charts.iter().enumerate().find(|(_, c)| c.p != self.curve.p) {
                return Err(StageError::input(format!("charts[{i}].p = {} differs from curve.p = {}", c.p, self.curve.p)));
            }
        }
        if self.depth_cap < 1 {
            return Err(StageError::input("depth_cap must be at least 1"));
        }
        Ok(())
    }
}

pub fn run_halting(config: &PipelineConfig, mode: ParityMode) -> Result<Halting<BigInt>, StageError> {
    halting_level::<BigInt>(&config.curve, config.n_cap, mode)
        .map_err(|e| StageError::at(Stage::Halt, ExitKind::Input, e.to_string()))
}

pub fn run_separation(charts: &[ChartJson], depth_cap: u32) -> Result<SeparationReport, StageError> {
    if depth_cap < 1 {
        return Err(StageError::input("depth_cap must be at least 1"));
    }
    let charts = charts_from_json(charts, "charts").map_err(|e| StageError::input(e.to_string()))?;
    Ok(separation_modulus(&charts, depth_cap))
}

/// Runs every stage in order; the first failure aborts with its stage label.
pub fn run_report(config: &PipelineConfig) -> Result<Report, StageError> {
    config.validate()?;
    let jacobian = config.jacobian.as_ref().ok_or_else(|| StageError::input("missing field: jacobian"))?;
    let charts = config.charts.as_deref().ok_or_else(|| StageError::input("missing field: charts"))?;
    let bad_primes: &BTreeSet<u64> = config
        .curve
        .bad_primes
        .as_ref()
        .ok_or_else(|| StageError::input("missing field: curve.bad_primes (needed for T0)"))?;

    let halting = run_halting(config, config.mode)?;
    let summary = HaltingSummary::from_halting(&halting);
    let t = match halting.t() {
        Some(t) => t,
        None => {
            let mut e = StageError::at(
                Stage::Halt,
                ExitKind::BoundSearchExhausted,
                format!("no halting level within n_cap = {}", config.n_cap),
            );
            e.partial = serde_json::to_value(&summary).ok();
            return Err(e);
        }
    };

    let separation = run_separation(charts, config.depth_cap)?;
    if separation.status != SeparationStatus::Separated {
        let mut e = StageError::at(
            Stage::Separate,
            ExitKind::SeparationFailed,
            format!("separation status {:?}", separation.status),
        );
        e.partial = serde_json::to_value(&separation).ok();
        return Err(e);
    }

    let n = annihilator_n(jacobian, separation.m)
        .map_err(|e| StageError::at(Stage::Order, ExitKind::Input, e.to_string()))?;
    let t0 = enlarged_prime_set(bad_primes, &n)
        .map_err(|e| StageError::at(Stage::Primes, ExitKind::Input, e.to_string()))?;

    Ok(Report {
        input: config.clone(),
        t,
        m: separation.m,
        n: DecimalInt(n),
        t0: t0.into_iter().map(DecimalInt).collect(),
        halting: summary,
        separation,
        weil_warning: jacobian.weil_check().map(|w| w.message),
    })
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Right-aligned columns separated by two spaces.
    pub fn to_plain(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| {
                std::iter::once(&self.header[j])
                    .chain(self.rows.iter().filter_map(|r| r.get(j)))
                    .map(|c| c.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let mut out = line(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

impl Report {
    /// `stage,key,value` rows covering the headline numbers.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(["key", "value"]);
        t.push(["t".to_string(), self.t.to_string()]);
        t.push(["M".to_string(), self.m.to_string()]);
        t.push(["N".to_string(), self.n.to_string()]);
        let t0: Vec<String> = self.t0.iter().map(|q| q.to_string()).collect();
        t.push(["T0".to_string(), t0.join(" ")]);
        t.push(["separation_status".to_string(), format!("{:?}", self.separation.status)]);
        if let Some(w) = &self.weil_warning {
            t.push(["weil_warning".to_string(), w.clone()]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_dims::Genus;
    use crate::padic_series::ResidueDisk;
    use crate::padic_series::{Chart, PadicSeries};

    fn chart(id: &str, polys: &[&[i64]]) -> ChartJson {
        let disks = polys
            .iter()
            .enumerate()
            .map(|(i, c)| ResidueDisk {
                center_label: format!("{id}{i}"),
                series: PadicSeries::from_i64_poly(5, c, 8).unwrap(),
            })
            .collect();
        ChartJson::from_chart(&Chart { chart_id: id.into(), p: 5, disks })
    }

    fn config() -> PipelineConfig {
        PipelineConfig {
            curve: CurveParams::with_bad_primes(Genus::new(2).unwrap(), [11].into(), 5, 0),
            mode: ParityMode::Faithful,
            n_cap: 16,
            charts: Some(vec![chart("A", &[&[0, -1, 1], &[0, -5, 1]])]),
            jacobian: Some(JacobianLocalData::new(5, 2, BigInt::from(41)).unwrap()),
            depth_cap: 12,
            output: OutputFormat::Json,
        }
    }

    #[test]
    fn report_composes_stages() {
        let r = run_report(&config()).unwrap();
        assert_eq!((r.t, r.m), (2, 2));
        assert_eq!(r.n.0, BigInt::from(41 * 25));
        let t0: Vec<String> = r.t0.iter().map(|q| q.to_string()).collect();
        assert_eq!(t0, ["5", "11", "41"]);
        assert!(r.weil_warning.is_none());
    }

    #[test]
    fn missing_or_inconsistent_input() {
        let mut c = config();
        c.jacobian = None;
        let e = run_report(&c).unwrap_err();
        assert_eq!((e.kind.code(), e.message.as_str()), (2, "missing field: jacobian"));
        let mut c = config();
        c.charts.as_mut().unwrap()[0].p = 7;
        assert_eq!(run_report(&c).unwrap_err().kind, ExitKind::Input);
        let mut c = config();
        c.curve.bad_primes = None;
        assert!(run_report(&c).unwrap_err().message.contains("curve.bad_primes"));
    }

    #[test]
    fn failing_stages_map_to_exit_codes() {
        let mut c = config();
        c.curve.mw_rank = 30;
        c.n_cap = 4;
        let e = run_report(&c).unwrap_err();
        assert_eq!((e.stage, e.kind.code()), (Stage::Halt, 3));
        assert!(e.partial.is_some());
        let mut c = config();
        c.charts = Some(vec![chart("D", &[&[0, 0, 1]])]);
        let e = run_report(&c).unwrap_err();
        assert_eq!((e.stage, e.kind.code()), (Stage::Separate, 4));
    }

    #[test]
    fn report_input_round_trips() {
        let r = run_report(&config()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let back: PipelineConfig = serde_json::from_value(v["input"].clone()).unwrap();
        assert_eq!(back, config());
    }

    #[test]
    fn tables_render() {
        let mut t = Table::new(["n", "r"]);
        t.push(["1", "4"]);
        t.push(["10", "1440"]);
        assert_eq!(t.to_csv(), "n,r\n1,4\n10,1440\n");
        assert_eq!(t.to_plain(), " n     r\n 1     4\n10  1440\n");
    }
}
