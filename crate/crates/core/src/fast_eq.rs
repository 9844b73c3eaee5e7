//! Identity-accelerated structural equality.
//!
//! [`term_eq_one_off`] checks identity at the root only and falls back to
//! the full pure comparison. [`term_dec_eq`] checks identity at every pair
//! it examines and, for `Add` nodes, compares the stored hash codes before
//! descending into children, so mismatches prune in O(1) and shared bases
//! resolve without unfolding. All three entry points are extensionally equal
//! to [`term_eq_pure`](crate::term::term_eq_pure).

use crate::meter::{TraverseError, VisitMeter};
use crate::prims::PurityMode;
use crate::term::{term_eq_pure_in, TermRef, TermView};

/// An equality verdict carrying the contract that it matches the pure
/// structural comparison on the same pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqDecision {
    IsTrue,
    IsFalse,
}

impl EqDecision {
    pub fn to_bool(self) -> bool {
        matches!(self, EqDecision::IsTrue)
    }

    fn of(b: bool) -> EqDecision {
        if b {
            EqDecision::IsTrue
        } else {
            EqDecision::IsFalse
        }
    }
}

fn dec_eq_accelerated(
    a: &TermRef,
    b: &TermRef,
    meter: &mut VisitMeter,
) -> Result<EqDecision, TraverseError> {
    meter.note_struct_eq();
    let mut pairs = vec![(a, b)];
    while let Some((x, y)) = pairs.pop() {
        meter.record(2)?;
        if x.same_node(y) {
            continue;
        }
        match (x.view(), y.view()) {
            (TermView::One, TermView::One) => {}
            (
                TermView::Add { left: xl, right: xr, hash: xh },
                TermView::Add { left: yl, right: yr, hash: yh },
            ) => {
                // Stored hashes are compared before the children; unequal
                // hashes prove structural inequality. Equal hashes are only
                // advisory and the recursion resolves collisions.
                if xh != yh {
                    return Ok(EqDecision::IsFalse);
                }
                pairs.push((xr, yr));
                pairs.push((xl, yl));
            }
            _ => return Ok(EqDecision::IsFalse),
        }
    }
    Ok(EqDecision::IsTrue)
}

/// Decides structural equality with an identity check on every examined
/// pair and hash-first comparison of `Add` nodes.
pub fn term_dec_eq_in(
    mode: PurityMode,
    a: &TermRef,
    b: &TermRef,
    meter: &mut VisitMeter,
) -> Result<EqDecision, TraverseError> {
    match mode {
        PurityMode::Accelerated => dec_eq_accelerated(a, b, meter),
        PurityMode::Reference => Ok(EqDecision::of(term_eq_pure_in(a, b, meter)?)),
        PurityMode::DualCheck => {
            let accelerated = dec_eq_accelerated(a, b, meter)?;
            let reference = term_eq_pure_in(a, b, meter)?;
            if accelerated.to_bool() != reference {
                return Err(TraverseError::ContractViolation(format!(
                    "term_dec_eq: accelerated verdict {accelerated:?} disagrees with pure equality {reference}"
                )));
            }
            Ok(accelerated)
        }
    }
}

pub fn term_dec_eq(a: &TermRef, b: &TermRef) -> EqDecision {
    term_dec_eq_in(PurityMode::Accelerated, a, b, &mut VisitMeter::unbounded())
        .expect("unbounded accelerated comparison cannot fail")
}

/// Boolean projection of [`term_dec_eq`].
pub fn term_eq_rec_in(
    mode: PurityMode,
    a: &TermRef,
    b: &TermRef,
    meter: &mut VisitMeter,
) -> Result<bool, TraverseError> {
    Ok(term_dec_eq_in(mode, a, b, meter)?.to_bool())
}

pub fn term_eq_rec(a: &TermRef, b: &TermRef) -> bool {
    term_dec_eq(a, b).to_bool()
}

/// Identity check at the root only; on failure falls back to the full pure
/// comparison, so it is exponential on structurally equal terms whose roots
/// differ no matter how much they share below.
pub fn term_eq_one_off_in(
    mode: PurityMode,
    a: &TermRef,
    b: &TermRef,
    meter: &mut VisitMeter,
) -> Result<bool, TraverseError> {
    match mode {
        PurityMode::Accelerated => {
            meter.record(2)?;
            if a.same_node(b) {
                return Ok(true);
            }
            term_eq_pure_in(a, b, meter)
        }
        PurityMode::Reference => term_eq_pure_in(a, b, meter),
        PurityMode::DualCheck => {
            meter.record(2)?;
            let accelerated =
                if a.same_node(b) { true } else { term_eq_pure_in(a, b, meter)? };
            let reference = term_eq_pure_in(a, b, meter)?;
            if accelerated != reference {
                return Err(TraverseError::ContractViolation(format!(
                    "term_eq_one_off: accelerated result {accelerated} disagrees with pure equality {reference}"
                )));
            }
            Ok(accelerated)
        }
    }
}

pub fn term_eq_one_off(a: &TermRef, b: &TermRef) -> bool {
    term_eq_one_off_in(PurityMode::Accelerated, a, b, &mut VisitMeter::unbounded())
        .expect("unbounded accelerated comparison cannot fail")
}
