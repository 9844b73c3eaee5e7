//! The sealed identity primitives.
//!
//! Each primitive has an accelerated path that may consult node identities,
//! a pure reference path that never does, and a dual-checking mode that runs
//! both and fails loudly if they can be told apart. Callers must uphold the
//! documented contracts (reflexivity for relations, result-independence for
//! continuations); the dual-check mode is how those contracts are audited
//! empirically.

use std::fmt::Debug;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::meter::{TraverseError, VisitMeter};
use crate::share::ShareState;
use crate::term::{term_eq_pure_in, IdentityToken, TermRef};

/// Which path of a sealed primitive runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurityMode {
    /// Consult identities; the production configuration.
    Accelerated,
    /// Never consult identities; the pure reference semantics.
    Reference,
    /// Run both paths and fail with `ContractViolation` if they disagree.
    DualCheck,
}

/// Outcome of an imprecise identity test: either nothing is known, or the
/// two handles are the same node (which implies structural equality).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdEqResult {
    Unknown,
    YesEqual,
}

// Test hook: makes the accelerated fast path of `with_id_eq` return false
// for identity-equal inputs, deliberately breaking its contract so that the
// dual-check machinery can be shown to catch real divergence.
static FAULT_ID_EQ: AtomicBool = AtomicBool::new(false);

pub fn inject_id_eq_fault(enabled: bool) {
    FAULT_ID_EQ.store(enabled, Ordering::SeqCst);
}

fn id_eq_fast_path_value(ids_equal: bool, k_value: impl FnOnce() -> bool) -> bool {
    if ids_equal {
        !FAULT_ID_EQ.load(Ordering::Relaxed)
    } else {
        k_value()
    }
}

/// Identity-accelerated boolean test.
///
/// Contract: identity of `x` and `y` implies `k() = true` (the thunk
/// realizes a reflexive check). Accelerated: returns true without calling
/// `k` when the identities match, otherwise returns `k()`. Reference:
/// always `k()`.
pub fn with_id_eq(
    mode: PurityMode,
    x: &TermRef,
    y: &TermRef,
    mut k: impl FnMut() -> bool,
) -> Result<bool, TraverseError> {
    match mode {
        PurityMode::Accelerated => Ok(id_eq_fast_path_value(x.same_node(y), &mut k)),
        PurityMode::Reference => Ok(k()),
        PurityMode::DualCheck => {
            let accelerated = id_eq_fast_path_value(x.same_node(y), &mut k);
            let reference = k();
            if accelerated != reference {
                return Err(TraverseError::ContractViolation(format!(
                    "with_id_eq: accelerated path returned {accelerated}, reference path returned {reference}"
                )));
            }
            Ok(accelerated)
        }
    }
}

/// Wraps a reflexive binary relation so that identity-equal arguments
/// short-circuit to true. The returned relation is extensionally equal to
/// `rel`.
pub fn with_id_rel<R>(
    mode: PurityMode,
    rel: R,
) -> impl Fn(&TermRef, &TermRef) -> Result<bool, TraverseError>
where
    R: Fn(&TermRef, &TermRef) -> bool,
{
    move |x, y| with_id_eq(mode, x, y, || rel(x, y))
}

/// Imprecise identity test: the continuation sees `YesEqual` only when the
/// identities match, and must return the same result either way whenever
/// both branches are legal (the subsingleton contract).
pub fn with_id_eq_result<V, K>(
    mode: PurityMode,
    x: &TermRef,
    y: &TermRef,
    mut k: K,
) -> Result<V, TraverseError>
where
    V: PartialEq + Debug,
    K: FnMut(IdEqResult) -> V,
{
    let ids_equal = x.same_node(y);
    match mode {
        PurityMode::Accelerated => {
            Ok(k(if ids_equal { IdEqResult::YesEqual } else { IdEqResult::Unknown }))
        }
        PurityMode::Reference => Ok(k(IdEqResult::Unknown)),
        PurityMode::DualCheck => {
            let unknown = k(IdEqResult::Unknown);
            if ids_equal {
                let yes = k(IdEqResult::YesEqual);
                if unknown != yes {
                    return Err(TraverseError::ContractViolation(format!(
                        "with_id_eq_result: k(Unknown) = {unknown:?} but k(YesEqual) = {yes:?}"
                    )));
                }
                Ok(yes)
            } else {
                Ok(unknown)
            }
        }
    }
}

/// Identity-token observation: the continuation must be result-independent
/// of the token it is given. Accelerated passes the real token, reference
/// passes the null token.
pub fn with_id_token<V, K>(mode: PurityMode, x: &TermRef, mut k: K) -> Result<V, TraverseError>
where
    V: PartialEq + Debug,
    K: FnMut(IdentityToken) -> V,
{
    match mode {
        PurityMode::Accelerated => Ok(k(x.identity())),
        PurityMode::Reference => Ok(k(IdentityToken::NULL)),
        PurityMode::DualCheck => {
            let on_null = k(IdentityToken::NULL);
            let on_real = k(x.identity());
            if on_null != on_real {
                return Err(TraverseError::ContractViolation(format!(
                    "with_id_token: k(null) = {on_null:?} but k(token) = {on_real:?}"
                )));
            }
            Ok(on_real)
        }
    }
}

/// Rewrites `x` into a structurally equal, maximally shared term using a
/// fresh state. The pure reference semantics is the identity function.
pub fn share_common(x: &TermRef) -> TermRef {
    share_common_in(PurityMode::Accelerated, x, &mut VisitMeter::unbounded())
        .expect("accelerated share_common cannot fail")
}

pub fn share_common_in(
    mode: PurityMode,
    x: &TermRef,
    meter: &mut VisitMeter,
) -> Result<TermRef, TraverseError> {
    let mut state = ShareState::new();
    with_share_common(mode, x, &mut state, meter)
}

/// Like [`share_common`] but reuses and extends `state`, so re-sharing an
/// already-shared term is a no-op. Returns the accelerated (canonical)
/// result; in dual-check mode the reference observable (structural
/// equality with the input) is asserted first.
pub fn with_share_common(
    mode: PurityMode,
    x: &TermRef,
    state: &mut ShareState,
    meter: &mut VisitMeter,
) -> Result<TermRef, TraverseError> {
    match mode {
        PurityMode::Accelerated => state.canonicalize(x, meter),
        PurityMode::Reference => Ok(x.clone()),
        PurityMode::DualCheck => {
            let canonical = state.canonicalize(x, meter)?;
            if !term_eq_pure_in(&canonical, x, meter)? {
                return Err(TraverseError::ContractViolation(
                    "with_share_common: canonicalized term is not structurally equal to its input"
                        .to_string(),
                ));
            }
            Ok(canonical)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{distinct_nodes, mk_add, mk_one, term_eq_pure, tower, twin_disjoint};

    #[test]
    fn id_eq_fast_path_skips_the_thunk() {
        let t = tower(6).unwrap();
        let mut calls = 0;
        let result = with_id_eq(PurityMode::Accelerated, &t, &t.clone(), || {
            calls += 1;
            true
        })
        .unwrap();
        assert!(result);
        assert_eq!(calls, 0);
    }

    #[test]
    fn id_eq_falls_through_on_distinct_identities() {
        let a = mk_one();
        let b = mk_add(mk_one(), mk_one());
        let r = with_id_eq(PurityMode::Accelerated, &a, &b, || term_eq_pure(&a, &b)).unwrap();
        assert!(!r);
    }

    #[test]
    fn id_eq_reference_always_runs_the_thunk() {
        let t = mk_one();
        let mut calls = 0;
        let r = with_id_eq(PurityMode::Reference, &t, &t.clone(), || {
            calls += 1;
            true
        })
        .unwrap();
        assert!(r);
        assert_eq!(calls, 1);
    }

    #[test]
    fn id_rel_accelerates_reflexive_relations() {
        let eq = with_id_rel(PurityMode::DualCheck, term_eq_pure);
        let t = tower(4).unwrap();
        assert!(eq(&t, &t.clone()).unwrap());
        let one = mk_one();
        let add = mk_add(mk_one(), mk_one());
        assert!(!eq(&one, &add).unwrap());
    }

    #[test]
    fn id_rel_short_circuits_without_evaluating_the_relation() {
        use std::cell::Cell;
        let calls = Cell::new(0u32);
        let relation = |x: &TermRef, y: &TermRef| {
            calls.set(calls.get() + 1);
            term_eq_pure(x, y)
        };
        let eq = with_id_rel(PurityMode::Accelerated, relation);
        // Unfolding this shape would take ~2^41 steps; identity makes it free.
        let t = tower(40).unwrap();
        assert!(eq(&t, &t.clone()).unwrap());
        assert_eq!(calls.get(), 0);
    }

    #[test]
    fn id_eq_result_branches() {
        let t = mk_add(mk_one(), mk_one());
        let u = t.clone();
        let cached = 42u64;
        // Entry contract: the cached value equals what recomputation yields.
        let recompute = || 42u64;
        let v = with_id_eq_result(PurityMode::Accelerated, &t, &u, |r| match r {
            IdEqResult::YesEqual => cached,
            IdEqResult::Unknown => recompute(),
        })
        .unwrap();
        assert_eq!(v, 42);

        let distinct = mk_add(mk_one(), mk_one());
        let v = with_id_eq_result(PurityMode::Accelerated, &t, &distinct, |r| match r {
            IdEqResult::YesEqual => 1u64,
            IdEqResult::Unknown => 0u64,
        })
        .unwrap();
        assert_eq!(v, 0, "distinct handles must look unknown");

        let v = with_id_eq_result(PurityMode::DualCheck, &t, &u, |r| match r {
            IdEqResult::YesEqual => cached,
            IdEqResult::Unknown => recompute(),
        })
        .unwrap();
        assert_eq!(v, 42);
    }

    #[test]
    fn id_eq_result_dual_check_catches_branch_dependence() {
        let t = mk_one();
        let u = t.clone();
        let err = with_id_eq_result(PurityMode::DualCheck, &t, &u, |r| match r {
            IdEqResult::YesEqual => 1u64,
            IdEqResult::Unknown => 2u64,
        })
        .unwrap_err();
        assert!(matches!(err, TraverseError::ContractViolation(_)));
    }

    #[test]
    fn id_token_modes() {
        let t = mk_one();
        // Constant continuations are trivially token-independent.
        assert_eq!(with_id_token(PurityMode::Accelerated, &t, |_| 7u64).unwrap(), 7);
        assert_eq!(with_id_token(PurityMode::DualCheck, &t, |_| 7u64).unwrap(), 7);
        // The reference path always passes the null token.
        let raw = with_id_token(PurityMode::Reference, &t, |tok| tok.raw()).unwrap();
        assert_eq!(raw, 0);
        // Token-dependent continuations violate the contract.
        let err = with_id_token(PurityMode::DualCheck, &t, |tok| tok.raw()).unwrap_err();
        assert!(matches!(err, TraverseError::ContractViolation(_)));
    }

    #[test]
    fn share_common_collapses_twins() {
        for n in 0..8u32 {
            let t = twin_disjoint(n).unwrap();
            let shared = share_common(&t);
            assert_eq!(distinct_nodes(&shared), u64::from(n) + 2);
            assert!(term_eq_pure(&shared, &t));
        }
    }

    #[test]
    fn share_common_on_a_leaf() {
        let s = share_common(&mk_one());
        assert!(s.is_one());
    }

    #[test]
    fn share_common_reference_is_identity() {
        let t = twin_disjoint(4).unwrap();
        let r = share_common_in(PurityMode::Reference, &t, &mut VisitMeter::unbounded()).unwrap();
        assert!(r.same_node(&t));
    }

    #[test]
    fn with_share_common_dual_check_passes() {
        let mut state = ShareState::new();
        let t = twin_disjoint(5).unwrap();
        let c = with_share_common(PurityMode::DualCheck, &t, &mut state, &mut VisitMeter::unbounded())
            .unwrap();
        assert!(term_eq_pure(&c, &t));
    }
}
