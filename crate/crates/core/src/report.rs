//! Pass/fail bookkeeping shared by every inequality check.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exactfn::{to_f64_down, to_f64_up};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub point: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of checking `lhs ≥ rhs` (or the claim's own orientation) over a
/// set of points.
///
/// `violations` is empty exactly when `worst_margin ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub claim_id: String,
    pub points_checked: usize,
    pub violations: Vec<Violation>,
    pub worst_margin: f64,
    /// Auxiliary quantities (bounds used, sups found, norms).
    pub metrics: BTreeMap<String, f64>,
}

impl InequalityReport {
    pub fn new(claim_id: impl Into<String>) -> Self {
        InequalityReport {
            claim_id: claim_id.into(),
            points_checked: 0,
            violations: Vec::new(),
            worst_margin: f64::INFINITY,
            metrics: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Records one check with a floating margin; negative means violated.
    pub fn record(&mut self, point: f64, lhs: f64, rhs: f64, margin: f64) {
        self.points_checked += 1;
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if margin < 0.0 {
            self.violations.push(Violation { point, lhs, rhs });
        }
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
    }

    /// Records `lhs ≥ rhs` decided in exact arithmetic. The stored margin
    /// keeps the sign of the exact difference.
    pub fn record_exact_ge(&mut self, point: f64, lhs: &BigRational, rhs: &BigRational) {
        let diff = lhs - rhs;
        let margin = signed_f64(&diff);
        self.record(point, to_f64_down(lhs), to_f64_up(rhs), margin);
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    /// Merges reports of the same claim computed over disjoint ranges, in
    /// the order given.
    pub fn merge(claim_id: impl Into<String>, parts: impl IntoIterator<Item = InequalityReport>) -> Self {
        let mut out = InequalityReport::new(claim_id);
        for p in parts {
            out.points_checked += p.points_checked;
            out.violations.extend(p.violations);
            if p.worst_margin < out.worst_margin {
                out.worst_margin = p.worst_margin;
            }
            out.metrics.extend(p.metrics);
        }
        out
    }

    /// Finite `worst_margin` for serialization (JSON has no infinity).
    pub fn finalize(mut self) -> Self {
        if self.points_checked == 0 || !self.worst_margin.is_finite() {
            if self.worst_margin == f64::INFINITY {
                self.worst_margin = 0.0;
            } else if self.worst_margin == f64::NEG_INFINITY {
                self.worst_margin = -f64::MAX;
            }
        }
        self
    }
}

/// Nearest `f64` to `x` that never loses its sign to underflow.
pub(crate) fn signed_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let f = if x.is_negative() {
        to_f64_down(x)
    } else {
        to_f64_down(x).max(0.0)
    };
    if f == 0.0 {
        if x.is_negative() {
            -f64::MIN_POSITIVE
        } else {
            f64::MIN_POSITIVE
        }
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactfn::{int, rat};

    #[test]
    fn violations_iff_negative_margin() {
        let mut r = InequalityReport::new("t");
        r.record_exact_ge(1.0, &int(3), &rat(3, 8));
        assert!(r.passed() && r.worst_margin > 0.0);
        r.record_exact_ge(2.0, &int(1), &int(1));
        assert!(r.passed() && r.worst_margin == 0.0);
        let tiny = BigRational::new(1.into(), num_bigint::BigInt::from(10).pow(400));
        r.record_exact_ge(3.0, &int(0), &tiny);
        assert!(!r.passed() && r.worst_margin < 0.0);
    }

    #[test]
    fn empty_report_serializes_finite() {
        let r = InequalityReport::new("empty").finalize();
        assert_eq!(r.worst_margin, 0.0);
    }
}
