//! Outcomes of grid comparisons, certificate checks and audits.

use std::fmt;

use num_bigint::BigUint;
use serde::Serialize;

use crate::eval::{eval_points, EvalError, Evaluator, Grid};
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub point: Vec<u64>,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InconclusivePoint {
    pub point: Vec<u64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub label: String,
    pub status: Status,
    pub points_checked: u64,
    pub mismatch_count: u64,
    /// every mismatch, in point order
    pub mismatches: Vec<Mismatch>,
    pub inconclusive_count: u64,
    /// the first few inconclusive points
    pub inconclusive: Vec<InconclusivePoint>,
}

const LISTED_INCONCLUSIVE: usize = 16;

impl VerificationReport {
    pub fn new(label: impl Into<String>) -> Self {
        VerificationReport {
            label: label.into(),
            status: Status::Pass,
            points_checked: 0,
            mismatch_count: 0,
            mismatches: Vec::new(),
            inconclusive_count: 0,
            inconclusive: Vec::new(),
        }
    }

    pub fn record_pass(&mut self) {
        self.points_checked += 1;
    }

    pub fn record_passes(&mut self, n: u64) {
        self.points_checked += n;
    }

    pub fn record_mismatch(&mut self, point: Vec<u64>, expected: impl fmt::Display, actual: impl fmt::Display) {
        self.points_checked += 1;
        self.mismatch_count += 1;
        self.mismatches.push(Mismatch {
            point,
            expected: expected.to_string(),
            actual: actual.to_string(),
        });
        self.status = Status::Fail;
    }

    pub fn record_inconclusive(&mut self, point: Vec<u64>, reason: impl fmt::Display) {
        self.points_checked += 1;
        self.inconclusive_count += 1;
        if self.inconclusive.len() < LISTED_INCONCLUSIVE {
            self.inconclusive.push(InconclusivePoint {
                point,
                reason: reason.to_string(),
            });
        }
        if self.status == Status::Pass {
            self.status = Status::Inconclusive;
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn first_mismatch(&self) -> Option<&Mismatch> {
        self.mismatches.first()
    }
}

/// Serializes a big natural as a decimal string.
pub(crate) fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn point_text(p: &[u64]) -> String {
    let parts: Vec<String> = p.iter().map(u64::to_string).collect();
    format!("({})", parts.join(", "))
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {} points", self.status, self.label, self.points_checked)?;
        if let Some(m) = self.first_mismatch() {
            write!(
                f,
                ", {} mismatches, first at {}: expected {}, got {}",
                self.mismatch_count,
                point_text(&m.point),
                m.expected,
                m.actual
            )?;
        }
        if let Some(p) = self.inconclusive.first() {
            write!(
                f,
                ", {} inconclusive, first at {} ({})",
                self.inconclusive_count,
                point_text(&p.point),
                p.reason
            )?;
        }
        Ok(())
    }
}

/// Compares `actual` against the reference `expected` at every grid point.
/// Evaluation failures on either side make a point inconclusive, never a pass.
pub fn verify_equivalence(label: &str, expected: &Term, actual: &Term, grid: &Grid, ev: &Evaluator<'_>) -> VerificationReport {
    let want = eval_points(expected, grid, ev);
    let got = eval_points(actual, grid, ev);
    let mut report = VerificationReport::new(label);
    for ((point, w), (_, g)) in want.into_iter().zip(got) {
        compare_point(&mut report, point, w, g);
    }
    report
}

pub(crate) fn compare_point(
    report: &mut VerificationReport,
    point: Vec<u64>,
    expected: Result<BigUint, EvalError>,
    actual: Result<BigUint, EvalError>,
) {
    match (expected, actual) {
        (Ok(w), Ok(g)) if w == g => report.record_pass(),
        (Ok(w), Ok(g)) => report.record_mismatch(point, w, g),
        (Err(e), _) | (_, Err(e)) => report.record_inconclusive(point, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::EvalLimits;
    use crate::syntax::parse;

    #[test]
    fn statuses() {
        let ev = Evaluator::new(EvalLimits::default());
        let grid = Grid::square(0..=3, 2);
        let r = verify_equivalence("same", &parse("x + y").unwrap(), &parse("y + x").unwrap(), &grid, &ev);
        assert_eq!((r.status, r.points_checked), (Status::Pass, 16));
        let r = verify_equivalence("off", &parse("x + y").unwrap(), &parse("x + y + x").unwrap(), &grid, &ev);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.mismatch_count, 12);
        assert_eq!(r.first_mismatch().unwrap().point, vec![1, 0]);
        let tight = Evaluator::new(EvalLimits { max_bits: 8, max_steps: 100 });
        let r = verify_equivalence("tower", &parse("2^x").unwrap(), &parse("2^x + 0").unwrap(), &Grid::square(0..=9, 1), &tight);
        assert_eq!(r.status, Status::Inconclusive);
        assert_eq!(r.inconclusive_count, 2);
    }
}
