//! Two-sided search: an increasing enumeration `A_0 ⊆ A_1 ⊆ ...` squeezed
//! against a decreasing sieve `B_0 ⊇ B_1 ⊇ ...`, stopping at the first
//! `(n, m)` on the schedule with `A_n = B_m`.
//!
//! Whenever both sides are materialised `A_n ⊆ B_m` must hold; a violation
//! means the two sides describe different sets and is reported as an error.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Id = String;
pub type LevelSet = BTreeSet<Id>;

/// Increasing family of finite sets.
pub trait LowerEnumerator {
    fn level(&mut self, n: usize) -> LevelSet;
}

/// Decreasing family of finite sets over the same identifiers.
pub trait UpperSieve {
    fn level(&mut self, m: usize) -> LevelSet;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

/// Which side advances at each step. When a side has reached its cap the
/// other one advances instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Strict alternation beginning with the given side.
    Alternate(Side),
    /// A repeating pattern, e.g. two lower steps per upper step.
    Cycle(Vec<Side>),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Alternate(Side::Lower)
    }
}

impl Schedule {
    fn side(&self, step: usize) -> Side {
        match self {
            Schedule::Alternate(first) => {
                if step % 2 == 0 {
                    *first
                } else {
                    match first {
                        Side::Lower => Side::Upper,
                        Side::Upper => Side::Lower,
                    }
                }
            }
            Schedule::Cycle(pattern) if pattern.is_empty() => Side::Lower,
            Schedule::Cycle(pattern) => pattern[step % pattern.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub n_cap: usize,
    pub m_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum DescentOutcome {
    Converged { set: LevelSet, n: usize, m: usize },
    CapExceeded { n_cap: usize, m_cap: usize, lower_last: LevelSet, upper_last: LevelSet },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub n: usize,
    pub m: usize,
    pub lower: LevelSet,
    pub upper: LevelSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentRun {
    pub outcome: DescentOutcome,
    /// Every `(A_n, B_m)` pair compared, in order.
    pub trace: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescentError {
    #[error("A_{n} is not contained in B_{m}; offending elements {extra:?}")]
    ContainmentViolated { n: usize, m: usize, extra: Vec<Id> },
    #[error("lower sets shrink between levels {n} and {}", n + 1)]
    LowerNotIncreasing { n: usize },
    #[error("upper sets grow between levels {m} and {}", m + 1)]
    UpperNotDecreasing { m: usize },
    #[error("no meeting within n <= {n_cap}, m <= {m_cap}")]
    CapExceeded { n_cap: usize, m_cap: usize },
}

impl DescentError {
    /// Converts a cap outcome into an error for callers that need convergence.
    pub fn require_converged(run: &DescentRun) -> Result<(), DescentError> {
        match &run.outcome {
            DescentOutcome::Converged { .. } => Ok(()),
            DescentOutcome::CapExceeded { n_cap, m_cap, .. } => {
                Err(DescentError::CapExceeded { n_cap: *n_cap, m_cap: *m_cap })
            }
        }
    }
}

fn check_sandwich(n: usize, m: usize, a: &LevelSet, b: &LevelSet) -> Result<(), DescentError> {
    if a.is_subset(b) {
        Ok(())
    } else {
        Err(DescentError::ContainmentViolated { n, m, extra: a.difference(b).cloned().collect() })
    }
}

/// Runs the search from `(0, 0)` until the sets meet or both caps are reached.
pub fn run_descent<L: LowerEnumerator, U: UpperSieve>(
    lower: &mut L,
    upper: &mut U,
    schedule: &Schedule,
    caps: Caps,
) -> Result<DescentRun, DescentError> {
    let (mut n, mut m) = (0, 0);
    let mut a = lower.level(0);
    let mut b = upper.level(0);
    let mut trace = Vec::new();
    for step in 0.. {
        check_sandwich(n, m, &a, &b)?;
        trace.push(Step { n, m, lower: a.clone(), upper: b.clone() });
        if a == b {
            return Ok(DescentRun { outcome: DescentOutcome::Converged { set: a, n, m }, trace });
        }
        let wanted = schedule.side(step);
        let side = match (wanted, n < caps.n_cap, m < caps.m_cap) {
            (_, false, false) => {
                let outcome = DescentOutcome::CapExceeded {
                    n_cap: caps.n_cap,
                    m_cap: caps.m_cap,
                    lower_last: a,
                    upper_last: b,
                };
                return Ok(DescentRun { outcome, trace });
            }
            (Side::Lower, true, _) | (Side::Upper, true, false) => Side::Lower,
            _ => Side::Upper,
        };
        match side {
            Side::Lower => {
                let next = lower.level(n + 1);
                if !a.is_subset(&next) {
                    return Err(DescentError::LowerNotIncreasing { n });
                }
                a = next;
                n += 1;
            }
            Side::Upper => {
                let next = upper.level(m + 1);
                if !next.is_subset(&b) {
                    return Err(DescentError::UpperNotDecreasing { m });
                }
                b = next;
                m += 1;
            }
        }
    }
    unreachable!()
}

/// Level sets read from a table; levels past the end repeat the last entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableLevels(pub Vec<LevelSet>);

impl TableLevels {
    fn at(&self, i: usize) -> LevelSet {
        self.0.get(i).or(self.0.last()).cloned().unwrap_or_default()
    }
}

impl LowerEnumerator for TableLevels {
    fn level(&mut self, n: usize) -> LevelSet {
        self.at(n)
    }
}

impl UpperSieve for TableLevels {
    fn level(&mut self, m: usize) -> LevelSet {
        self.at(m)
    }
}

/// A mock instance: both tables, the caps and optionally a schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentFixture {
    pub name: String,
    pub lower: TableLevels,
    pub upper: TableLevels,
    pub n_cap: usize,
    pub m_cap: usize,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<DescentOutcome>,
}

impl DescentFixture {
    pub fn run(&self) -> Result<DescentRun, DescentError> {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        run_descent(&mut lower, &mut upper, &self.schedule, Caps { n_cap: self.n_cap, m_cap: self.m_cap })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[&str]) -> LevelSet {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn table(levels: &[&[&str]]) -> TableLevels {
        TableLevels(levels.iter().map(|l| set(l)).collect())
    }

    fn caps(n_cap: usize, m_cap: usize) -> Caps {
        Caps { n_cap, m_cap }
    }

    #[test]
    fn meets_at_two_two() {
        let mut a = table(&[&[], &["1"], &["1", "2"], &["1", "2"]]);
        let mut b = table(&[&["1", "2", "3"], &["1", "2", "3"], &["1", "2"]]);
        let run = run_descent(&mut a, &mut b, &Schedule::default(), caps(10, 10)).unwrap();
        assert_eq!(run.outcome, DescentOutcome::Converged { set: set(&["1", "2"]), n: 2, m: 2 });
        assert_eq!(run.trace.len(), 5);
    }

    #[test]
    fn empty_sets_meet_immediately() {
        let mut a = table(&[&[]]);
        let mut b = table(&[&[]]);
        let run = run_descent(&mut a, &mut b, &Schedule::default(), caps(0, 0)).unwrap();
        assert_eq!(run.outcome, DescentOutcome::Converged { set: set(&[]), n: 0, m: 0 });
    }

    #[test]
    fn sieve_that_never_shrinks_hits_the_caps() {
        let mut a = table(&[&["1"]]);
        let mut b = table(&[&["1", "2"]]);
        let run = run_descent(&mut a, &mut b, &Schedule::default(), caps(3, 4)).unwrap();
        match &run.outcome {
            DescentOutcome::CapExceeded { n_cap: 3, m_cap: 4, lower_last, upper_last } => {
                assert_eq!((lower_last, upper_last), (&set(&["1"]), &set(&["1", "2"])));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(run.trace.last().map(|s| (s.n, s.m)), Some((3, 4)));
        assert!(DescentError::require_converged(&run).is_err());
    }

    #[test]
    fn inconsistent_instances_are_errors() {
        let mut a = table(&[&["9"]]);
        let mut b = table(&[&["1"]]);
        let err = run_descent(&mut a, &mut b, &Schedule::default(), caps(2, 2)).unwrap_err();
        assert_eq!(err, DescentError::ContainmentViolated { n: 0, m: 0, extra: vec!["9".into()] });

        let mut a = table(&[&["1"], &[]]);
        let mut b = table(&[&["1", "2"]]);
        assert_eq!(
            run_descent(&mut a, &mut b, &Schedule::default(), caps(2, 2)).unwrap_err(),
            DescentError::LowerNotIncreasing { n: 0 }
        );
        let mut a = table(&[&[]]);
        let mut b = table(&[&["1"], &["1", "2"]]);
        assert_eq!(
            run_descent(&mut a, &mut b, &Schedule::Alternate(Side::Upper), caps(2, 2)).unwrap_err(),
            DescentError::UpperNotDecreasing { m: 0 }
        );
    }

    #[test]
    fn schedules() {
        let s = Schedule::Cycle(vec![Side::Lower, Side::Lower, Side::Upper]);
        let got: Vec<Side> = (0..4).map(|i| s.side(i)).collect();
        assert_eq!(got, vec![Side::Lower, Side::Lower, Side::Upper, Side::Lower]);
        assert_eq!(Schedule::Alternate(Side::Upper).side(1), Side::Lower);
    }

    #[test]
    fn fixture_json() {
        let text = r#"{"name":"t","lower":[[],["a"]],"upper":[["a","b"],["a"]],"n_cap":3,"m_cap":3}"#;
        let f: DescentFixture = serde_json::from_str(text).unwrap();
        let run = f.run().unwrap();
        assert_eq!(run.outcome, DescentOutcome::Converged { set: set(&["a"]), n: 1, m: 1 });
        let json = serde_json::to_value(&run.outcome).unwrap();
        assert_eq!(json["result"], "converged");
    }

    proptest! {
        /// Random nested instances: the run stops at the first scheduled pair
        /// whose sets agree, and never earlier.
        #[test]
        fn stops_at_first_meeting(
            target_size in 0usize..5,
            extra in 0usize..5,
            a_steps in prop::collection::vec(0usize..3, 0..5),
            b_steps in prop::collection::vec(0usize..3, 0..5),
            cap in 0usize..8,
        ) {
            let target: Vec<String> = (0..target_size).map(|i| format!("t{i}")).collect();
            let junk: Vec<String> = (0..extra).map(|i| format!("x{i}")).collect();
            let mut lower = vec![LevelSet::new()];
            let mut k = 0;
            for s in &a_steps {
                k = (k + s).min(target.len());
                lower.push(target[..k].iter().cloned().collect());
            }
            let mut upper = vec![target.iter().chain(&junk).cloned().collect::<LevelSet>()];
            let mut j = junk.len();
            for s in &b_steps {
                j = j.saturating_sub(*s);
                upper.push(target.iter().chain(&junk[..j]).cloned().collect());
            }
            let (mut a, mut b) = (TableLevels(lower.clone()), TableLevels(upper.clone()));
            let run = run_descent(&mut a, &mut b, &Schedule::default(), caps(cap, cap)).unwrap();
            let at = |t: &Vec<LevelSet>, i: usize| t.get(i).or(t.last()).unwrap().clone();
            for s in &run.trace[..run.trace.len() - 1] {
                prop_assert_ne!(at(&lower, s.n), at(&upper, s.m));
            }
            if let DescentOutcome::Converged { set, n, m } = &run.outcome {
                prop_assert_eq!(set, &at(&lower, *n));
                prop_assert_eq!(set, &at(&upper, *m));
            }
        }
    }
}
