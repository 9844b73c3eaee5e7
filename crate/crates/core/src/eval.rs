//! The reference evaluator and its eight instrumented variants.
//!
//! Every variant computes the same function (the number a term denotes,
//! with 64-bit wrapping arithmetic) and differs only in how it exploits
//! sharing. Values agree exactly wherever two variants both complete; an
//! exact big-integer evaluator backs that claim at sizes where it is cheap.
//!
//! Evaluation is iterative (explicit frames, never call-stack recursion)
//! and graded in node visits against an optional budget, so asymptotics are
//! measured deterministically instead of by wall clock.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigUint;

use crate::cache::{EqStrategy, HashStrategy, IdCache, MemoCache};
use crate::meter::{TraverseError, VisitMeter};
use crate::prims::{share_common_in, PurityMode};
use crate::term::{IdentityToken, TermRef, TermView};

/// Result of one instrumented evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOutcome {
    /// The value mod 2^64, or `None` when the visit budget ran out.
    pub value: Option<u64>,
    pub visits: u64,
    pub wall_nanos: u64,
}

impl EvalOutcome {
    pub fn budget_exhausted(&self) -> bool {
        self.value.is_none()
    }
}

/// The eight evaluator variants, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantId {
    /// 1: tree recursion, no caching.
    NoCache,
    /// 2: memo cache, pure equality, recomputed structural hash.
    CacheSlowEqSlowHash,
    /// 3: memo cache, pure equality, intrusive hash.
    CacheSlowEqFastHash,
    /// 4: memo cache, accelerated equality, recomputed structural hash.
    CacheFastEqSlowHash,
    /// 5: memo cache, accelerated equality, intrusive hash.
    CacheFastEqFastHash,
    /// 6: variant 5 preceded by share-common.
    CacheFastEqFastHashRobust,
    /// 7: identity-keyed bucket cache, no structural equality at all.
    IdCache,
    /// 8: variant 7 preceded by share-common.
    IdCacheRobust,
}

impl VariantId {
    pub const ALL: [VariantId; 8] = [
        VariantId::NoCache,
        VariantId::CacheSlowEqSlowHash,
        VariantId::CacheSlowEqFastHash,
        VariantId::CacheFastEqSlowHash,
        VariantId::CacheFastEqFastHash,
        VariantId::CacheFastEqFastHashRobust,
        VariantId::IdCache,
        VariantId::IdCacheRobust,
    ];

    pub fn index(self) -> u8 {
        match self {
            VariantId::NoCache => 1,
            VariantId::CacheSlowEqSlowHash => 2,
            VariantId::CacheSlowEqFastHash => 3,
            VariantId::CacheFastEqSlowHash => 4,
            VariantId::CacheFastEqFastHash => 5,
            VariantId::CacheFastEqFastHashRobust => 6,
            VariantId::IdCache => 7,
            VariantId::IdCacheRobust => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VariantId::NoCache => "no-cache",
            VariantId::CacheSlowEqSlowHash => "cache-slow-eq-slow-hash",
            VariantId::CacheSlowEqFastHash => "cache-slow-eq-fast-hash",
            VariantId::CacheFastEqSlowHash => "cache-fast-eq-slow-hash",
            VariantId::CacheFastEqFastHash => "cache-fast-eq-fast-hash",
            VariantId::CacheFastEqFastHashRobust => "cache-fast-eq-fast-hash-robust",
            VariantId::IdCache => "id-cache",
            VariantId::IdCacheRobust => "id-cache-robust",
        }
    }

    pub fn from_index(i: u8) -> Option<VariantId> {
        VariantId::ALL.get(i.checked_sub(1)? as usize).copied()
    }
}

impl std::str::FromStr for VariantId {
    type Err = String;

    /// Accepts a variant name or its 1-based index.
    fn from_str(s: &str) -> Result<VariantId, String> {
        if let Ok(i) = s.parse::<u8>() {
            return VariantId::from_index(i).ok_or_else(|| format!("variant index {i} out of 1..=8"));
        }
        VariantId::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

impl std::fmt::Display for VariantId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tree recursion with no caching: one visit per tree node.
pub fn eval_nat_naive_in(t: &TermRef, meter: &mut VisitMeter) -> Result<u64, TraverseError> {
    enum Frame<'a> {
        Enter(&'a TermRef),
        Combine,
    }
    let mut work = vec![Frame::Enter(t)];
    let mut vals: Vec<u64> = Vec::new();
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Enter(node) => {
                meter.record(1)?;
                match node.view() {
                    TermView::One => vals.push(1),
                    TermView::Add { left, right, .. } => {
                        work.push(Frame::Combine);
                        work.push(Frame::Enter(right));
                        work.push(Frame::Enter(left));
                    }
                }
            }
            Frame::Combine => {
                let r = vals.pop().expect("value stack underflow");
                let l = vals.pop().expect("value stack underflow");
                vals.push(l.wrapping_add(r));
            }
        }
    }
    Ok(vals.pop().expect("value stack underflow"))
}

/// Uncached reference evaluation under an optional visit budget.
pub fn eval_nat_naive(t: &TermRef, budget: Option<u64>) -> EvalOutcome {
    let mut meter = VisitMeter::from_budget(budget);
    let start = Instant::now();
    let value = eval_nat_naive_in(t, &mut meter);
    finish(value, &meter, start).expect("naive evaluation performs no dual checks")
}

/// The plain (never-wrapping) value of a term; linear in graph size.
/// Cross-checks the wrapping evaluators at sizes where exact arithmetic is
/// affordable.
pub fn eval_nat_big(t: &TermRef) -> BigUint {
    enum Frame<'a> {
        Enter(&'a TermRef),
        Exit(&'a TermRef),
    }
    let mut values: HashMap<IdentityToken, BigUint> = HashMap::new();
    let mut work = vec![Frame::Enter(t)];
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Enter(node) => {
                if values.contains_key(&node.identity()) {
                    continue;
                }
                match node.view() {
                    TermView::One => {
                        values.insert(node.identity(), BigUint::from(1u32));
                    }
                    TermView::Add { left, right, .. } => {
                        work.push(Frame::Exit(node));
                        work.push(Frame::Enter(right));
                        work.push(Frame::Enter(left));
                    }
                }
            }
            Frame::Exit(node) => {
                if let TermView::Add { left, right, .. } = node.view() {
                    let total = &values[&left.identity()] + &values[&right.identity()];
                    values.insert(node.identity(), total);
                }
            }
        }
    }
    values.remove(&t.identity()).expect("value of root missing")
}

/// Memoized evaluation: every call (including leaves) is looked up first;
/// computed `Add` values are inserted. Leaves are recomputed, not cached.
pub fn eval_nat_memo_in(
    mode: PurityMode,
    t: &TermRef,
    cache: &mut MemoCache,
    meter: &mut VisitMeter,
) -> Result<u64, TraverseError> {
    enum Frame<'a> {
        Enter(&'a TermRef),
        Combine(&'a TermRef),
    }
    let mut work = vec![Frame::Enter(t)];
    let mut vals: Vec<u64> = Vec::new();
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Enter(node) => {
                if let Some(v) = cache.lookup(mode, node, meter)? {
                    vals.push(v);
                    continue;
                }
                meter.record(1)?;
                match node.view() {
                    TermView::One => vals.push(1),
                    TermView::Add { left, right, .. } => {
                        work.push(Frame::Combine(node));
                        work.push(Frame::Enter(right));
                        work.push(Frame::Enter(left));
                    }
                }
            }
            Frame::Combine(node) => {
                let r = vals.pop().expect("value stack underflow");
                let l = vals.pop().expect("value stack underflow");
                let v = l.wrapping_add(r);
                cache.insert(node, v, meter)?;
                vals.push(v);
            }
        }
    }
    Ok(vals.pop().expect("value stack underflow"))
}

/// Evaluation through an identity-keyed cache: children are fetched from
/// the cache before being evaluated, and stored once computed. This is the
/// defunctionalized form of passing the evaluator itself as the cache-miss
/// continuation, rendered with explicit frames so depth is unbounded.
pub fn eval_nat_id_cache_in(
    mode: PurityMode,
    t: &TermRef,
    cache: &mut IdCache,
    meter: &mut VisitMeter,
) -> Result<u64, TraverseError> {
    enum Frame<'a> {
        Eval(&'a TermRef),
        Fetch(&'a TermRef),
        Store(&'a TermRef),
        Combine,
    }
    let mut work = vec![Frame::Eval(t)];
    let mut vals: Vec<u64> = Vec::new();
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Eval(node) => {
                meter.record(1)?;
                match node.view() {
                    TermView::One => vals.push(1),
                    TermView::Add { left, right, .. } => {
                        work.push(Frame::Combine);
                        work.push(Frame::Fetch(right));
                        work.push(Frame::Fetch(left));
                    }
                }
            }
            Frame::Fetch(node) => match cache.lookup(mode, node)? {
                Some(v) => vals.push(v),
                None => {
                    work.push(Frame::Store(node));
                    work.push(Frame::Eval(node));
                }
            },
            Frame::Store(node) => {
                let v = *vals.last().expect("value stack underflow");
                cache.insert(mode, node, v);
            }
            Frame::Combine => {
                let r = vals.pop().expect("value stack underflow");
                let l = vals.pop().expect("value stack underflow");
                vals.push(l.wrapping_add(r));
            }
        }
    }
    Ok(vals.pop().expect("value stack underflow"))
}

/// Accelerated, unbounded identity-cache evaluation against an external
/// cache, which persists across calls.
pub fn eval_nat_id_cache(t: &TermRef, cache: &mut IdCache) -> u64 {
    eval_nat_id_cache_in(PurityMode::Accelerated, t, cache, &mut VisitMeter::unbounded())
        .expect("unbounded accelerated evaluation cannot fail")
}

fn naive_value(t: &TermRef) -> u64 {
    eval_nat_naive_in(t, &mut VisitMeter::unbounded()).expect("unbounded meter cannot fail")
}

fn memo_variant(v: VariantId) -> Option<(EqStrategy, HashStrategy)> {
    match v {
        VariantId::CacheSlowEqSlowHash => Some((EqStrategy::Slow, HashStrategy::Slow)),
        VariantId::CacheSlowEqFastHash => Some((EqStrategy::Slow, HashStrategy::Fast)),
        VariantId::CacheFastEqSlowHash => Some((EqStrategy::Fast, HashStrategy::Slow)),
        VariantId::CacheFastEqFastHash | VariantId::CacheFastEqFastHashRobust => {
            Some((EqStrategy::Fast, HashStrategy::Fast))
        }
        _ => None,
    }
}

/// Runs one variant under `mode` with a fresh cache and, for the robust
/// variants, a fresh share state. Budget exhaustion is reported in the
/// outcome; only dual-check divergence is an error.
pub fn run_variant_in(
    mode: PurityMode,
    v: VariantId,
    t: &TermRef,
    budget: Option<u64>,
    bucket_count: usize,
) -> Result<EvalOutcome, TraverseError> {
    let mut meter = VisitMeter::from_budget(budget);
    let start = Instant::now();
    let value = match v {
        VariantId::NoCache => eval_nat_naive_in(t, &mut meter),
        VariantId::CacheSlowEqSlowHash
        | VariantId::CacheSlowEqFastHash
        | VariantId::CacheFastEqSlowHash
        | VariantId::CacheFastEqFastHash => {
            let (eq, hash) = memo_variant(v).expect("memo variant");
            let mut cache = MemoCache::new(eq, hash);
            eval_nat_memo_in(mode, t, &mut cache, &mut meter)
        }
        VariantId::CacheFastEqFastHashRobust => {
            let (eq, hash) = memo_variant(v).expect("memo variant");
            share_common_in(mode, t, &mut meter).and_then(|shared| {
                let mut cache = MemoCache::new(eq, hash);
                eval_nat_memo_in(mode, &shared, &mut cache, &mut meter)
            })
        }
        VariantId::IdCache => {
            let mut cache = id_cache_for(mode, bucket_count);
            eval_nat_id_cache_in(mode, t, &mut cache, &mut meter)
        }
        VariantId::IdCacheRobust => share_common_in(mode, t, &mut meter).and_then(|shared| {
            let mut cache = id_cache_for(mode, bucket_count);
            eval_nat_id_cache_in(mode, &shared, &mut cache, &mut meter)
        }),
    };
    finish(value, &meter, start)
}

fn id_cache_for(mode: PurityMode, bucket_count: usize) -> IdCache {
    if mode == PurityMode::DualCheck {
        IdCache::with_reference(bucket_count, naive_value)
    } else {
        IdCache::new(bucket_count)
    }
}

fn finish(
    value: Result<u64, TraverseError>,
    meter: &VisitMeter,
    start: Instant,
) -> Result<EvalOutcome, TraverseError> {
    let wall_nanos = start.elapsed().as_nanos() as u64;
    match value {
        Ok(v) => Ok(EvalOutcome { value: Some(v), visits: meter.visits(), wall_nanos }),
        Err(TraverseError::BudgetExhausted) => {
            Ok(EvalOutcome { value: None, visits: meter.visits(), wall_nanos })
        }
        Err(err @ TraverseError::ContractViolation(_)) => Err(err),
    }
}

/// Accelerated [`run_variant_in`].
pub fn run_variant(v: VariantId, t: &TermRef, budget: Option<u64>, bucket_count: usize) -> EvalOutcome {
    run_variant_in(PurityMode::Accelerated, v, t, budget, bucket_count)
        .expect("accelerated runs perform no dual checks")
}
