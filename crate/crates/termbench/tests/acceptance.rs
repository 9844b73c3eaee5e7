//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test -p termbench --test acceptance -- --nocapture` to
//! see the per-criterion lines; every tolerance is pinned in this file.

use std::process::Command;

use termdag::fast_eq::{term_eq_one_off_in, term_eq_rec_in};
use termdag::prims::{share_common, with_share_common, PurityMode};
use termdag::verify::check_max_sharing;
use termdag::{
    distinct_nodes, eval_nat_naive, random_term, run_variant, term_eq_one_off, term_eq_pure,
    term_eq_rec, tower, tree_nodes, twin_disjoint, twin_shared, ShareState, TermRef,
    TraverseError, VariantId, VisitMeter,
};

const BUDGET: u64 = 10_000_000;
const BUCKETS: usize = 4096;

fn pass(criterion: u32, label: &str) {
    println!("[acceptance] criterion {criterion} ({label}): PASS");
}

fn seeded(i: u64, salt: u64) -> u64 {
    i.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt)
}

/// Criterion 1, oracle equivalence, exact, < 30 s.
///
/// All eight variants return the reference value on 10^4 seeded random
/// terms (tree size <= 2^12, reuse probability in {0, 0.5, 0.9}), and both
/// accelerated equality tests agree with pure equality on 10^4 pairs.
#[test]
fn criterion_1_oracle_equivalence() {
    let probs = [0.0, 0.5, 0.9];
    for i in 0..10_000u64 {
        let budget = 4 + (i % 9) as u32; // tree size <= 2^12
        let t = random_term(seeded(i, 1), budget, probs[(i % 3) as usize]);
        let expected = eval_nat_naive(&t, None).value;
        for v in VariantId::ALL {
            let out = run_variant(v, &t, None, BUCKETS);
            assert_eq!(out.value, expected, "variant {v} diverged on term {i}");
        }
    }

    for i in 0..10_000u64 {
        let budget = 4 + (i % 9) as u32;
        let a = random_term(seeded(i, 2), budget, probs[(i % 3) as usize]);
        let b = match i % 4 {
            0 => a.clone(),
            1 => random_term(seeded(i, 2), budget, probs[(i % 3) as usize]),
            2 => random_term(seeded(i, 3), budget, probs[(i % 3) as usize]),
            _ => share_common(&a),
        };
        let expected = term_eq_pure(&a, &b);
        assert_eq!(term_eq_rec(&a, &b), expected, "term_eq_rec diverged on pair {i}");
        assert_eq!(term_eq_one_off(&a, &b), expected, "term_eq_one_off diverged on pair {i}");
    }
    pass(1, "oracle equivalence");
}

fn median_doubling_ratio(samples: &[(u32, u64)]) -> f64 {
    let mut ratios: Vec<f64> = Vec::new();
    for &(n, visits) in samples {
        if let Some(&(_, double)) = samples.iter().find(|(m, _)| u64::from(*m) == 2 * u64::from(n))
        {
            ratios.push(double as f64 / visits.max(1) as f64);
        }
    }
    assert!(!ratios.is_empty(), "no doubling pairs sampled");
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ratios[ratios.len() / 2]
}

/// Criterion 2, tower scaling: variants 1-4 exhaust a 10^7-visit budget
/// from n = 32 on, variants 5-8 complete n = 2^16 within 10*(n+1) visits
/// and double with ratio <= 2.5.
#[test]
fn criterion_2_tower_scaling() {
    for v in &VariantId::ALL[0..4] {
        for n in [32u32, 33, 40, 64] {
            let t = tower(n).unwrap();
            let out = run_variant(*v, &t, Some(BUDGET), BUCKETS);
            assert!(out.budget_exhausted(), "variant {v} completed tower {n} in {} visits", out.visits);
        }
    }
    for v in &VariantId::ALL[4..8] {
        let mut samples = Vec::new();
        for k in 10..=16u32 {
            let n = 1u32 << k;
            let t = tower(n).unwrap();
            let out = run_variant(*v, &t, Some(BUDGET), BUCKETS);
            let visits = out.visits;
            assert!(!out.budget_exhausted(), "variant {v} exhausted on tower {n}");
            assert!(
                visits <= 10 * (u64::from(n) + 1),
                "variant {v} took {visits} visits on tower {n}"
            );
            samples.push((n, visits));
        }
        let ratio = median_doubling_ratio(&samples);
        assert!(ratio <= 2.5, "variant {v} doubling ratio {ratio}");
    }
    pass(2, "tower scaling");
}

/// Criterion 3, twin-disjoint scaling: variants 1-5 exhaust the budget
/// from n = 32 on, variants 6-8 complete n = 2^16 within 10*(2n+3) visits.
#[test]
fn criterion_3_twin_disjoint_scaling() {
    for v in &VariantId::ALL[0..5] {
        for n in [32u32, 33, 40, 64] {
            let t = twin_disjoint(n).unwrap();
            let out = run_variant(*v, &t, Some(BUDGET), BUCKETS);
            assert!(
                out.budget_exhausted(),
                "variant {v} completed twin-disjoint {n} in {} visits",
                out.visits
            );
        }
    }
    for v in &VariantId::ALL[5..8] {
        let mut samples = Vec::new();
        for k in 10..=16u32 {
            let n = 1u32 << k;
            let t = twin_disjoint(n).unwrap();
            let out = run_variant(*v, &t, Some(BUDGET), BUCKETS);
            let visits = out.visits;
            assert!(!out.budget_exhausted(), "variant {v} exhausted on twin-disjoint {n}");
            assert!(
                visits <= 10 * (2 * u64::from(n) + 3),
                "variant {v} took {visits} visits on twin-disjoint {n}"
            );
            samples.push((n, visits));
        }
        let ratio = median_doubling_ratio(&samples);
        assert!(ratio <= 2.5, "variant {v} doubling ratio {ratio}");
    }
    pass(3, "twin-disjoint scaling");
}

/// Criterion 4, equality visit bounds: recursive equality resolves shared
/// twins in at most 8 visits at any height, while the one-off check
/// exhausts 10^6 visits from height 30 on.
#[test]
fn criterion_4_equality_claims() {
    for n in [10u32, 20, 30, 40] {
        let (a, b) = twin_shared(n).unwrap();
        let mut meter = VisitMeter::unbounded();
        let eq = term_eq_rec_in(PurityMode::Accelerated, &a, &b, &mut meter).unwrap();
        assert!(eq, "shared twins at height {n} compared unequal");
        assert!(meter.visits() <= 8, "height {n} took {} visits", meter.visits());
    }
    for n in [30u32, 40] {
        let (a, b) = twin_shared(n).unwrap();
        let mut meter = VisitMeter::with_budget(1_000_000);
        let result = term_eq_one_off_in(PurityMode::Accelerated, &a, &b, &mut meter);
        assert_eq!(result, Err(TraverseError::BudgetExhausted), "one-off completed at {n}");
    }
    pass(4, "equality visit bounds");
}

/// Criterion 5, maximal sharing, exact: after share_common every
/// structurally equal subterm pair is identity-equal (exhaustive pairwise
/// audit) and the output is structurally equal to the input.
#[test]
fn criterion_5_max_sharing() {
    let probs = [0.0, 0.5, 0.9];
    for i in 0..1_000u64 {
        let budget = 4 + (i % 7) as u32; // tree size <= 2^10
        let t = random_term(seeded(i, 5), budget, probs[(i % 3) as usize]);
        let shared = share_common(&t);
        assert!(term_eq_pure(&shared, &t), "sharing changed term {i}");
        if let Err(msg) = check_max_sharing(&shared) {
            panic!("term {i}: {msg}");
        }
    }
    pass(5, "maximal sharing");
}

/// Criterion 6, sealing: the dual-check verify suite reports zero
/// divergences, and an injected fault in the identity fast path is caught
/// with exit code 1.
#[test]
fn criterion_6_sealing() {
    let report = termdag::verify::run_verify(7, 100);
    assert!(
        report.passed(),
        "dual-check divergences: {:?}",
        report.failures().collect::<Vec<_>>()
    );

    let bin = env!("CARGO_BIN_EXE_termbench");
    let clean = Command::new(bin).args(["verify", "--iterations", "60"]).output().unwrap();
    assert!(clean.status.success(), "verify failed: {:?}", clean);

    let faulted = Command::new(bin)
        .args(["verify", "--iterations", "60", "--inject-fault"])
        .output()
        .unwrap();
    assert_eq!(faulted.status.code(), Some(1), "injected fault was not detected");
    pass(6, "sealing dual-check");
}

/// Criterion 7, incremental no-op: a second canonicalization of the same
/// term through a retained state performs zero interner insertions and
/// returns an identity-equal root.
#[test]
fn criterion_7_incremental_noop() {
    let terms: Vec<TermRef> = vec![
        twin_disjoint(8).unwrap(),
        tower(12).unwrap(),
        random_term(99, 9, 0.5),
    ];
    for t in terms {
        let mut state = ShareState::new();
        let first =
            with_share_common(PurityMode::Accelerated, &t, &mut state, &mut VisitMeter::unbounded())
                .unwrap();
        let inserted = state.interner_insertions();
        let second =
            with_share_common(PurityMode::Accelerated, &t, &mut state, &mut VisitMeter::unbounded())
                .unwrap();
        assert_eq!(state.interner_insertions(), inserted, "re-sharing inserted into the interner");
        assert!(first.same_node(&second), "re-sharing returned a different root");
    }
    pass(7, "incremental no-op");
}

/// Criterion 8, node counts: tower(n) has n+1 distinct and 2^(n+1)-1 tree
/// nodes for n <= 20, verified by traversal.
#[test]
fn criterion_8_tower_counts() {
    for n in 0..=20u32 {
        let t = tower(n).unwrap();
        assert_eq!(distinct_nodes(&t), u64::from(n) + 1, "distinct count at {n}");
        let tree = tree_nodes(&t);
        assert_eq!(tree, num_bigint::BigUint::from((1u64 << (n + 1)) - 1), "tree count at {n}");
    }
    pass(8, "tower node counts");
}
