//! Node-visit accounting.
//!
//! Every traversal in this crate is graded in *node visits*: one visit per
//! term node whose structure (constructor, children, stored hash) is
//! examined. Identity-token comparisons, token folds and cached-word
//! compares examine no term structure and cost zero visits. The convention
//! makes benchmark results machine-independent and bit-stable across runs.

use thiserror::Error;

/// Why a traversal stopped before producing a value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraverseError {
    /// The visit budget was exceeded. This is a normal benchmark outcome,
    /// not a failure.
    #[error("node-visit budget exhausted")]
    BudgetExhausted,
    /// A dual-check run observed the accelerated and reference paths
    /// disagreeing. This is always a bug (or an injected fault).
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

/// Counts node visits against an optional budget.
///
/// Meters are per-invocation: each benchmark run or equality query owns one.
/// The meter also tracks how many structural-equality walks were started,
/// which lets tests assert that identity-only code paths never fall back to
/// structural comparison.
#[derive(Debug, Clone)]
pub struct VisitMeter {
    visits: u64,
    budget: Option<u64>,
    struct_eq_calls: u64,
}

impl VisitMeter {
    pub fn unbounded() -> Self {
        VisitMeter { visits: 0, budget: None, struct_eq_calls: 0 }
    }

    pub fn with_budget(budget: u64) -> Self {
        VisitMeter { visits: 0, budget: Some(budget), struct_eq_calls: 0 }
    }

    pub fn from_budget(budget: Option<u64>) -> Self {
        VisitMeter { visits: 0, budget, struct_eq_calls: 0 }
    }

    /// Records `n` node visits. Fails once the running total exceeds the
    /// budget; completing with exactly the budgeted count is allowed.
    #[inline]
    pub fn record(&mut self, n: u64) -> Result<(), TraverseError> {
        self.visits += n;
        match self.budget {
            Some(limit) if self.visits > limit => Err(TraverseError::BudgetExhausted),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// Number of structural-equality walks started under this meter.
    pub fn struct_eq_calls(&self) -> u64 {
        self.struct_eq_calls
    }

    #[inline]
    pub(crate) fn note_struct_eq(&mut self) {
        self.struct_eq_calls += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_allows_exact_fill() {
        let mut m = VisitMeter::with_budget(3);
        assert!(m.record(3).is_ok());
        assert_eq!(m.visits(), 3);
        assert_eq!(m.record(1), Err(TraverseError::BudgetExhausted));
    }

    #[test]
    fn unbounded_never_fails() {
        let mut m = VisitMeter::unbounded();
        for _ in 0..1000 {
            m.record(1000).unwrap();
        }
        assert_eq!(m.visits(), 1_000_000);
    }
}
