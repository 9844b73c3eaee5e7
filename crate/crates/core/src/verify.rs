//! Randomized verification suites.
//!
//! These suites execute the sealing contract: every identity-accelerated
//! path must be observably identical to its pure reference path, every
//! cache must return exactly what the function it serves computes, and the
//! structural invariants (hash consistency, maximal sharing) must hold on
//! generated workloads. Failures carry a counterexample description,
//! shrunk to a minimal failing subterm where the predicate allows it.

use num_bigint::BigUint;

use crate::cache::{EqStrategy, HashStrategy, IdCache, MemoCache};
use crate::eval::{eval_nat_big, eval_nat_id_cache_in, eval_nat_naive_in, run_variant_in, VariantId};
use crate::fast_eq::{term_eq_one_off_in, term_eq_rec_in};
use crate::meter::VisitMeter;
use crate::prims::{
    share_common_in, with_id_eq, with_id_eq_result, with_id_rel, with_id_token, with_share_common,
    IdEqResult, PurityMode,
};
use crate::share::ShareState;
use crate::term::{
    distinct_nodes, distinct_subterms, fast_hash, mk_add, mk_one, random_term, slow_hash,
    term_eq_pure, tower, tree_nodes, twin_disjoint, twin_shared, TermRef, TermView,
};

const MODES: [PurityMode; 3] =
    [PurityMode::Accelerated, PurityMode::Reference, PurityMode::DualCheck];

#[derive(Debug, Default)]
pub struct SuiteResult {
    pub name: String,
    pub checks: u64,
    pub failures: Vec<String>,
}

#[derive(Debug, Default)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn checks(&self) -> u64 {
        self.suites.iter().map(|s| s.checks).sum()
    }

    pub fn failures(&self) -> impl Iterator<Item = &String> {
        self.suites.iter().flat_map(|s| s.failures.iter())
    }

    pub fn failure_count(&self) -> usize {
        self.suites.iter().map(|s| s.failures.len()).sum()
    }

    pub fn passed(&self) -> bool {
        self.failure_count() == 0
    }
}

struct Suite {
    result: SuiteResult,
}

impl Suite {
    fn new(name: &str) -> Suite {
        Suite { result: SuiteResult { name: name.to_string(), ..Default::default() } }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.result.checks += 1;
        if !ok && self.result.failures.len() < 32 {
            self.result.failures.push(describe());
        }
    }
}

fn mix_seed(seed: u64, i: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(i.wrapping_mul(0x2545_f491_4f6c_dd1d))
        .wrapping_add(salt)
}

fn sample_term(seed: u64, i: u64, salt: u64) -> TermRef {
    let s = mix_seed(seed, i, salt);
    let budget = 4 + (s % 5) as u32; // tree size <= 2^8
    let prob = [0.0, 0.5, 0.9][(s >> 8) as usize % 3];
    random_term(s, budget, prob)
}

fn sample_pair(seed: u64, i: u64) -> (TermRef, TermRef) {
    let a = sample_term(seed, i, 1);
    match i % 4 {
        0 => {
            let b = a.clone();
            (a, b)
        }
        // Rebuilding from the same parameters gives a structurally equal,
        // identity-disjoint twin.
        1 => {
            let s = mix_seed(seed, i, 1);
            let b = random_term(s, 4 + (s % 5) as u32, [0.0, 0.5, 0.9][(s >> 8) as usize % 3]);
            (a, b)
        }
        2 => (a, sample_term(seed, i, 2)),
        _ => {
            let b = crate::prims::share_common(&a);
            (a, b)
        }
    }
}

/// A small s-expression rendering, cut off past `cap` nodes.
fn render(t: &TermRef, cap: &mut u32) -> String {
    if *cap == 0 {
        return "\u{2026}".to_string();
    }
    *cap -= 1;
    match t.view() {
        TermView::One => "1".to_string(),
        TermView::Add { left, right, .. } => {
            format!("(+ {} {})", render(left, cap), render(right, cap))
        }
    }
}

fn describe_term(t: &TermRef) -> String {
    format!(
        "distinct={} tree={} term={}",
        distinct_nodes(t),
        tree_nodes(t),
        render(t, &mut 24)
    )
}

/// Walks down into children while they still fail, yielding a minimal
/// failing subterm for the report.
fn shrink_failing(t: &TermRef, fails: &dyn Fn(&TermRef) -> bool) -> TermRef {
    let mut current = t.clone();
    loop {
        let next = match current.view() {
            TermView::Add { left, right, .. } => {
                if fails(left) {
                    Some(left.clone())
                } else if fails(right) {
                    Some(right.clone())
                } else {
                    None
                }
            }
            TermView::One => None,
        };
        match next {
            Some(n) => current = n,
            None => return current,
        }
    }
}

fn hash_suite(seed: u64, iterations: u64) -> SuiteResult {
    let mut suite = Suite::new("hash-consistency");
    for i in 0..iterations {
        let t = sample_term(seed, i, 10);
        let ok = fast_hash(&t) == slow_hash(&t);
        suite.check(ok, || {
            let bad = shrink_failing(&t, &|u| fast_hash(u) != slow_hash(u));
            format!("stored hash diverges from structural hash on {}", describe_term(&bad))
        });
    }
    // Fixed shapes with extreme sharing. Structural recomputation costs the
    // full tree size, so the heights stay modest.
    if iterations > 0 {
        for n in [0u32, 1, 5, 12, 20] {
            let t = tower(n).unwrap();
            suite.check(fast_hash(&t) == slow_hash(&t), || {
                format!("stored hash diverges on the height-{n} shared shape")
            });
        }
    }
    suite.result
}

fn equality_suite(seed: u64, iterations: u64) -> SuiteResult {
    let mut suite = Suite::new("equality-oracle");
    for i in 0..iterations {
        let (a, b) = sample_pair(seed, i);
        let expected = term_eq_pure(&a, &b);
        suite.check(term_eq_pure(&b, &a) == expected, || {
            format!("pure equality is asymmetric on {} / {}", describe_term(&a), describe_term(&b))
        });
        suite.check(term_eq_pure(&a, &a), || {
            format!("pure equality is irreflexive on {}", describe_term(&a))
        });
        for mode in MODES {
            let rec = term_eq_rec_in(mode, &a, &b, &mut VisitMeter::unbounded());
            suite.check(rec == Ok(expected), || {
                format!(
                    "term_eq_rec {mode:?} returned {rec:?}, pure equality says {expected} on {} / {}",
                    describe_term(&a),
                    describe_term(&b)
                )
            });
            let one_off = term_eq_one_off_in(mode, &a, &b, &mut VisitMeter::unbounded());
            suite.check(one_off == Ok(expected), || {
                format!(
                    "term_eq_one_off {mode:?} returned {one_off:?}, pure equality says {expected} on {} / {}",
                    describe_term(&a),
                    describe_term(&b)
                )
            });
        }
    }
    suite.result
}

fn prims_suite(seed: u64, iterations: u64) -> SuiteResult {
    let mut suite = Suite::new("identity-primitives");
    for i in 0..iterations {
        let (a, b) = sample_pair(seed, i);

        // with_id_eq over a reflexive relation, including same-handle pairs.
        let expected = term_eq_pure(&a, &b);
        for (x, y) in [(&a, &b), (&a, &a.clone())] {
            let want = if x.same_node(y) { true } else { expected };
            let got = with_id_eq(PurityMode::DualCheck, x, y, || term_eq_pure(x, y));
            suite.check(got == Ok(want), || {
                format!("with_id_eq dual check: got {got:?}, want {want} on {}", describe_term(x))
            });
        }
        let accelerated = with_id_eq(PurityMode::Accelerated, &a, &a.clone(), || false);
        suite.check(accelerated == Ok(true), || {
            "with_id_eq returned false on identity-equal inputs".to_string()
        });

        // with_id_rel: the returned relation is extensionally the original.
        let rel = with_id_rel(PurityMode::DualCheck, term_eq_pure);
        let got = rel(&a, &b);
        suite.check(got == Ok(expected), || {
            format!(
                "with_id_rel(term_eq_pure) returned {got:?}, direct evaluation says {expected}"
            )
        });

        // with_id_eq_result with a lawful continuation: the cached value of
        // a is consulted only when identity proves the probe is a.
        let cached = eval_nat_naive_in(&a, &mut VisitMeter::unbounded()).unwrap();
        for mode in MODES {
            let got = with_id_eq_result(mode, &a, &b, |r| match r {
                IdEqResult::YesEqual => cached,
                IdEqResult::Unknown => {
                    eval_nat_naive_in(&b, &mut VisitMeter::unbounded()).unwrap()
                }
            });
            let want = eval_nat_naive_in(&b, &mut VisitMeter::unbounded()).unwrap();
            suite.check(got == Ok(want), || {
                format!("with_id_eq_result {mode:?}: got {got:?}, want {want}")
            });
        }

        // with_id_token with a token-independent bucket lookup.
        let entries = [(a.identity(), cached)];
        for mode in MODES {
            let got = with_id_token(mode, &a, |tok| {
                entries
                    .iter()
                    .find(|(id, _)| *id == tok)
                    .map(|(_, v)| *v)
                    .unwrap_or_else(|| eval_nat_naive_in(&a, &mut VisitMeter::unbounded()).unwrap())
            });
            suite.check(got == Ok(cached), || {
                format!("with_id_token {mode:?}: got {got:?}, want {cached}")
            });
        }
        let constant = with_id_token(PurityMode::DualCheck, &a, |_| 11u64);
        suite.check(constant == Ok(11), || format!("constant continuation broke: {constant:?}"));
        let null_token = with_id_token(PurityMode::Reference, &a, |tok| tok.raw());
        suite.check(null_token == Ok(0), || {
            format!("reference path must pass the null token, got {null_token:?}")
        });
    }
    suite.result
}

/// Exhaustive max-sharing audit: every pair of distinct subterms must be
/// structurally unequal. Pairs are first grouped by recomputed structural
/// hash, since unequal hashes prove inequality; the surviving pairs are compared
/// with the pure equality oracle.
pub fn check_max_sharing(t: &TermRef) -> Result<(), String> {
    let subterms = distinct_subterms(t);
    let mut hashed: Vec<(u64, &TermRef)> =
        subterms.iter().map(|s| (slow_hash(s).0, s)).collect();
    hashed.sort_by_key(|(h, _)| *h);
    let mut start = 0;
    while start < hashed.len() {
        let mut end = start + 1;
        while end < hashed.len() && hashed[end].0 == hashed[start].0 {
            end += 1;
        }
        for i in start..end {
            for j in (i + 1)..end {
                let (u, v) = (hashed[i].1, hashed[j].1);
                if term_eq_pure(u, v) {
                    return Err(format!(
                        "distinct nodes are structurally equal after sharing: {} / {}",
                        describe_term(u),
                        describe_term(v)
                    ));
                }
            }
        }
        start = end;
    }
    Ok(())
}

fn sharing_suite(seed: u64, iterations: u64) -> SuiteResult {
    let mut suite = Suite::new("share-common");
    for i in 0..iterations {
        let t = sample_term(seed, i, 30);

        for mode in MODES {
            let got = share_common_in(mode, &t, &mut VisitMeter::unbounded());
            let ok = matches!(&got, Ok(r) if term_eq_pure(r, &t));
            suite.check(ok, || {
                format!("share_common {mode:?} changed the term {}", describe_term(&t))
            });
        }

        let shared = crate::prims::share_common(&t);
        suite.check(check_max_sharing(&shared).is_ok(), || {
            check_max_sharing(&shared).unwrap_err()
        });

        // Incremental state: re-sharing is a no-op, and structurally equal
        // terms canonicalize to identity-equal results.
        let mut state = ShareState::new();
        let c1 =
            with_share_common(PurityMode::DualCheck, &t, &mut state, &mut VisitMeter::unbounded())
                .unwrap();
        let inserted = state.interner_insertions();
        let c2 =
            with_share_common(PurityMode::Accelerated, &c1, &mut state, &mut VisitMeter::unbounded())
                .unwrap();
        suite.check(c1.same_node(&c2) && state.interner_insertions() == inserted, || {
            format!("re-sharing was not a no-op on {}", describe_term(&t))
        });
        let twin = {
            let s = mix_seed(seed, i, 30);
            random_term(s, 4 + (s % 5) as u32, [0.0, 0.5, 0.9][(s >> 8) as usize % 3])
        };
        let c3 = state.canonicalize(&twin, &mut VisitMeter::unbounded()).unwrap();
        suite.check(c1.same_node(&c3), || {
            "structurally equal terms canonicalized to different nodes in one state".to_string()
        });
    }
    if iterations > 0 {
        for n in [0u32, 3, 8] {
            let t = twin_disjoint(n).unwrap();
            let shared = crate::prims::share_common(&t);
            suite.check(distinct_nodes(&shared) == u64::from(n) + 2, || {
                format!("twin arms did not collapse at height {n}")
            });
        }
    }
    suite.result
}

fn cache_suite(seed: u64, iterations: u64) -> SuiteResult {
    let mut suite = Suite::new("caches");
    let strategy_pairs = [
        (EqStrategy::Slow, HashStrategy::Slow),
        (EqStrategy::Slow, HashStrategy::Fast),
        (EqStrategy::Fast, HashStrategy::Slow),
        (EqStrategy::Fast, HashStrategy::Fast),
    ];
    for i in 0..iterations {
        // A query sequence with repeats, twins and shared structure.
        let base = sample_term(seed, i, 40);
        let queries: Vec<TermRef> = vec![
            base.clone(),
            base.clone(),
            sample_term(seed, i, 41),
            crate::prims::share_common(&base),
            sample_term(seed, i, 40),
        ];
        let expected: Vec<u64> = queries
            .iter()
            .map(|q| eval_nat_naive_in(q, &mut VisitMeter::unbounded()).unwrap())
            .collect();

        for (eq, hash) in strategy_pairs {
            let mut cache = MemoCache::new(eq, hash);
            let mut meter = VisitMeter::unbounded();
            for (q, want) in queries.iter().zip(&expected) {
                let got = cache.get_or_insert(PurityMode::Accelerated, q, &mut meter, || {
                    eval_nat_naive_in(q, &mut VisitMeter::unbounded())
                });
                suite.check(got == Ok(*want), || {
                    format!("memo cache ({eq:?}, {hash:?}) returned {got:?}, want {want}")
                });
            }
        }

        for bucket_count in [1usize, 2, 4096] {
            for mode in MODES {
                let mut cache = IdCache::with_reference(bucket_count, |t| {
                    eval_nat_naive_in(t, &mut VisitMeter::unbounded()).unwrap()
                });
                let mut meter = VisitMeter::unbounded();
                for (q, want) in queries.iter().zip(&expected) {
                    let got = eval_nat_id_cache_in(mode, q, &mut cache, &mut meter);
                    suite.check(got == Ok(*want), || {
                        format!(
                            "id-cache eval (buckets={bucket_count}, {mode:?}) returned {got:?}, want {want}"
                        )
                    });
                }
                suite.check(meter.struct_eq_calls() == 0, || {
                    format!(
                        "id-cache path performed {} structural equality calls",
                        meter.struct_eq_calls()
                    )
                });
            }
        }
    }
    suite.result
}

fn variants_suite(seed: u64, iterations: u64) -> SuiteResult {
    let mut suite = Suite::new("evaluator-variants");
    for i in 0..iterations {
        let t = sample_term(seed, i, 50);
        let expected = eval_nat_naive_in(&t, &mut VisitMeter::unbounded()).unwrap();
        let modulus = BigUint::from(u64::MAX) + 1u32;
        let exact: u64 = (eval_nat_big(&t) % &modulus).try_into().unwrap();
        suite.check(expected == exact, || {
            format!("wrapping evaluation diverged from exact arithmetic on {}", describe_term(&t))
        });
        for v in VariantId::ALL {
            for mode in MODES {
                let got = run_variant_in(mode, v, &t, None, 64);
                let ok = matches!(&got, Ok(out) if out.value == Some(expected));
                suite.check(ok, || {
                    format!(
                        "variant {v} in {mode:?} returned {got:?}, want {expected} on {}",
                        describe_term(&t)
                    )
                });
            }
        }
    }
    if iterations > 0 {
        // The shared-twin equality story at fixed sizes.
        for n in [6u32, 10] {
            let (a, b) = twin_shared(n).unwrap();
            let mut meter = VisitMeter::unbounded();
            let eq = term_eq_rec_in(PurityMode::Accelerated, &a, &b, &mut meter);
            suite.check(eq == Ok(true) && meter.visits() <= 8, || {
                format!("shared twins at height {n} took {} visits", meter.visits())
            });
        }
        let one = mk_one();
        let add = mk_add(mk_one(), mk_one());
        suite.check(!crate::fast_eq::term_eq_rec(&one, &add), || {
            "constructor mismatch not detected".to_string()
        });
    }
    suite.result
}

/// Runs every suite. `iterations` scales the randomized workload; zero runs
/// nothing and reports zero checks.
pub fn run_verify(seed: u64, iterations: u64) -> VerifyReport {
    VerifyReport {
        suites: vec![
            hash_suite(seed, iterations),
            equality_suite(seed, iterations),
            prims_suite(seed, iterations),
            sharing_suite(seed, iterations),
            cache_suite(seed, iterations),
            variants_suite(seed, iterations),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_pass() {
        let report = run_verify(7, 10);
        assert!(report.passed(), "failures: {:?}", report.failures().collect::<Vec<_>>());
        assert!(report.checks() > 0);
    }

    #[test]
    fn zero_iterations_reports_zero_checks() {
        let report = run_verify(7, 0);
        assert!(report.passed());
        assert_eq!(report.checks(), 0);
    }

    #[test]
    fn max_sharing_check_accepts_and_rejects() {
        let t = crate::prims::share_common(&twin_disjoint(5).unwrap());
        assert!(check_max_sharing(&t).is_ok());
        // An unshared twin pair has structurally equal distinct nodes.
        assert!(check_max_sharing(&twin_disjoint(5).unwrap()).is_err());
    }
}
