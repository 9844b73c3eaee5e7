//! Two cache families for memoized term traversals.
//!
//! [`MemoCache`] maps terms to values through pluggable equality and hash
//! strategies; the four strategy pairs return identical values and differ
//! only in node-visit cost. [`IdCache`] is a fixed-bucket cache keyed by
//! identity token: lookups are imprecise (a structurally equal entry under a
//! different identity is a miss) and never perform structural equality, so
//! they cost zero node visits.
//!
//! Buckets are scanned newest-entry-first. The memo protocol inserts a node
//! right before its value is reused, so the matching entry is at the head of
//! its chain and a hit costs one candidate comparison even when degenerate
//! hash values pile many entries into one bucket.

use crate::fast_eq::term_eq_rec_in;
use crate::meter::{TraverseError, VisitMeter};
use crate::prims::PurityMode;
use crate::term::{fast_hash_in, slow_hash_in, term_eq_pure_in, HashCode, IdentityToken, TermRef, FNV_PRIME};

/// How a [`MemoCache`] compares a probe against a stored key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqStrategy {
    /// Pure structural comparison, no identity shortcuts.
    Slow,
    /// Identity-accelerated comparison with hash-first pruning.
    Fast,
}

/// How a [`MemoCache`] hashes a key, once per lookup and once per insert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashStrategy {
    /// Full structural recomputation, Θ(tree size) per use.
    Slow,
    /// The intrusive stored hash, O(1).
    Fast,
}

#[derive(Debug)]
struct MemoEntry {
    key: TermRef,
    hash: HashCode,
    value: u64,
}

/// Open-hashing memo map from terms to values.
#[derive(Debug)]
pub struct MemoCache {
    eq: EqStrategy,
    hash: HashStrategy,
    buckets: Vec<Vec<MemoEntry>>,
    len: usize,
}

fn scramble(h: HashCode) -> u64 {
    // splitmix64 finalizer; the raw mix chain has degenerate low bits on
    // tower-shaped terms.
    let mut z = h.0;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl MemoCache {
    pub fn new(eq: EqStrategy, hash: HashStrategy) -> MemoCache {
        MemoCache { eq, hash, buckets: (0..16).map(|_| Vec::new()).collect(), len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn key_hash(&self, t: &TermRef, meter: &mut VisitMeter) -> Result<HashCode, TraverseError> {
        match self.hash {
            HashStrategy::Slow => slow_hash_in(t, meter),
            HashStrategy::Fast => fast_hash_in(t, meter),
        }
    }

    fn bucket_of(&self, h: HashCode) -> usize {
        (scramble(h) as usize) & (self.buckets.len() - 1)
    }

    /// Hashes `t` per the hash strategy and compares hash-matching
    /// candidates per the equality strategy, newest first.
    pub fn lookup(
        &self,
        mode: PurityMode,
        t: &TermRef,
        meter: &mut VisitMeter,
    ) -> Result<Option<u64>, TraverseError> {
        let h = self.key_hash(t, meter)?;
        for entry in self.buckets[self.bucket_of(h)].iter().rev() {
            if entry.hash != h {
                continue;
            }
            let equal = match self.eq {
                EqStrategy::Slow => term_eq_pure_in(&entry.key, t, meter)?,
                EqStrategy::Fast => term_eq_rec_in(mode, &entry.key, t, meter)?,
            };
            if equal {
                return Ok(Some(entry.value));
            }
        }
        Ok(None)
    }

    /// Inserts without probing for duplicates; the memo protocol only
    /// inserts keys whose lookup just missed.
    pub fn insert(
        &mut self,
        t: &TermRef,
        value: u64,
        meter: &mut VisitMeter,
    ) -> Result<(), TraverseError> {
        let h = self.key_hash(t, meter)?;
        if (self.len + 1) * 4 > self.buckets.len() * 3 {
            self.grow();
        }
        let idx = self.bucket_of(h);
        self.buckets[idx].push(MemoEntry { key: t.clone(), hash: h, value });
        self.len += 1;
        Ok(())
    }

    pub fn get_or_insert(
        &mut self,
        mode: PurityMode,
        t: &TermRef,
        meter: &mut VisitMeter,
        compute: impl FnOnce() -> Result<u64, TraverseError>,
    ) -> Result<u64, TraverseError> {
        if let Some(v) = self.lookup(mode, t, meter)? {
            return Ok(v);
        }
        let v = compute()?;
        self.insert(t, v, meter)?;
        Ok(v)
    }

    fn grow(&mut self) {
        let doubled = self.buckets.len() * 2;
        let old = std::mem::replace(&mut self.buckets, (0..doubled).map(|_| Vec::new()).collect());
        // Draining in order keeps every chain newest-last.
        for bucket in old {
            for entry in bucket {
                let idx = self.bucket_of(entry.hash);
                self.buckets[idx].push(entry);
            }
        }
    }
}

/// A cached input/value pair carrying the contract `value = f(input)` for
/// the function the cache serves.
#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub input: TermRef,
    pub value: u64,
}

fn fold_token(tok: IdentityToken) -> u64 {
    let u = tok.raw();
    (u ^ (u >> 32)).wrapping_mul(FNV_PRIME)
}

/// Scans a bucket with imprecise identity tests only: an entry matches only
/// when it is the same node as `x`, per `with_id_eq_result` semantics:
/// the reference path learns nothing and always misses. On exhausting the
/// list `k` computes the value and `update` receives the new entry.
///
/// `reference`, when present, is the pure function the cache serves; the
/// dual-check mode audits every hit against it.
pub fn id_bucket_lookup(
    mode: PurityMode,
    entries: &[CacheEntry],
    x: &TermRef,
    reference: Option<fn(&TermRef) -> u64>,
    k: impl FnOnce() -> Result<u64, TraverseError>,
    update: impl FnOnce(CacheEntry),
) -> Result<u64, TraverseError> {
    if let Some(value) = scan_bucket(mode, entries, x, reference)? {
        return Ok(value);
    }
    let value = k()?;
    update(CacheEntry { input: x.clone(), value });
    Ok(value)
}

fn scan_bucket(
    mode: PurityMode,
    entries: &[CacheEntry],
    x: &TermRef,
    reference: Option<fn(&TermRef) -> u64>,
) -> Result<Option<u64>, TraverseError> {
    for entry in entries.iter().rev() {
        let hit = match mode {
            PurityMode::Reference => false,
            PurityMode::Accelerated | PurityMode::DualCheck => entry.input.same_node(x),
        };
        if !hit {
            continue;
        }
        if mode == PurityMode::DualCheck {
            if let Some(f) = reference {
                let expected = f(x);
                if entry.value != expected {
                    return Err(TraverseError::ContractViolation(format!(
                        "id cache entry holds {} but the reference function computes {}",
                        entry.value, expected
                    )));
                }
            }
        }
        return Ok(Some(entry.value));
    }
    Ok(None)
}

/// Fixed-bucket cache keyed by identity token. No resizing; correctness is
/// independent of the bucket count. Entries hold live handles so the keyed
/// identities stay valid for the cache's lifetime.
#[derive(Debug)]
pub struct IdCache {
    buckets: Vec<Vec<CacheEntry>>,
    reference: Option<fn(&TermRef) -> u64>,
}

pub const DEFAULT_BUCKET_COUNT: usize = 4096;

impl IdCache {
    pub fn new(bucket_count: usize) -> IdCache {
        assert!(bucket_count >= 1, "IdCache requires at least one bucket");
        IdCache { buckets: (0..bucket_count).map(|_| Vec::new()).collect(), reference: None }
    }

    /// Attaches the pure function this cache serves, enabling entry-contract
    /// audits in dual-check mode.
    pub fn with_reference(bucket_count: usize, f: fn(&TermRef) -> u64) -> IdCache {
        let mut c = IdCache::new(bucket_count);
        c.reference = Some(f);
        c
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn len(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.iter().all(Vec::is_empty)
    }

    /// Bucket selection folds the identity token; the reference path folds
    /// the null token instead, sending every probe to one bucket. The whole
    /// lookup is token-independent in its returned value, which is what
    /// makes passing the real token sound.
    fn bucket_index(&self, mode: PurityMode, x: &TermRef) -> usize {
        let token = match mode {
            PurityMode::Reference => IdentityToken::NULL,
            PurityMode::Accelerated | PurityMode::DualCheck => x.identity(),
        };
        (fold_token(token) % self.buckets.len() as u64) as usize
    }

    /// Identity-only lookup; never structural, costs zero node visits.
    pub fn lookup(&self, mode: PurityMode, x: &TermRef) -> Result<Option<u64>, TraverseError> {
        let bucket = &self.buckets[self.bucket_index(mode, x)];
        scan_bucket(mode, bucket, x, self.reference)
    }

    pub fn insert(&mut self, mode: PurityMode, x: &TermRef, value: u64) {
        let idx = self.bucket_index(mode, x);
        self.buckets[idx].push(CacheEntry { input: x.clone(), value });
    }

    /// Lookup-or-compute; `k` receives the cache so it may recurse.
    pub fn get_or_insert(
        &mut self,
        mode: PurityMode,
        x: &TermRef,
        k: impl FnOnce(&mut IdCache) -> Result<u64, TraverseError>,
    ) -> Result<u64, TraverseError> {
        if let Some(v) = self.lookup(mode, x)? {
            return Ok(v);
        }
        let v = k(self)?;
        self.insert(mode, x, v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{mk_add, mk_one, tower};

    fn unb() -> VisitMeter {
        VisitMeter::unbounded()
    }

    #[test]
    fn memo_miss_computes_and_inserts() {
        let mut cache = MemoCache::new(EqStrategy::Fast, HashStrategy::Fast);
        let one = mk_one();
        let mut meter = unb();
        let v = cache
            .get_or_insert(PurityMode::Accelerated, &one, &mut meter, || Ok(1))
            .unwrap();
        assert_eq!(v, 1);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn memo_hit_skips_compute_and_is_cheap() {
        let mut cache = MemoCache::new(EqStrategy::Fast, HashStrategy::Fast);
        let t = tower(16).unwrap();
        let mut meter = unb();
        cache.insert(&t, 65536, &mut meter).unwrap();

        let mut meter = unb();
        let v = cache
            .get_or_insert(PurityMode::Accelerated, &t, &mut meter, || {
                panic!("hit must not recompute")
            })
            .unwrap();
        assert_eq!(v, 65536);
        // one fast-hash visit plus an identity-resolved candidate pair
        assert!(meter.visits() <= 3, "visits = {}", meter.visits());
    }

    #[test]
    fn memo_hit_on_disjoint_tower_is_exponential() {
        let n = 14u32;
        let mut cache = MemoCache::new(EqStrategy::Fast, HashStrategy::Fast);
        let a = tower(n).unwrap();
        let b = tower(n).unwrap();
        let mut meter = unb();
        cache.insert(&a, 1 << n, &mut meter).unwrap();

        let mut meter = unb();
        let v = cache.lookup(PurityMode::Accelerated, &b, &mut meter).unwrap();
        assert_eq!(v, Some(1 << n), "structural equality still finds the entry");
        assert!(
            meter.visits() >= (1 << n),
            "identity-disjoint hit must fall back on structural equality, visits = {}",
            meter.visits()
        );
    }

    #[test]
    fn memo_strategies_agree_on_values() {
        let pairs = [
            (EqStrategy::Slow, HashStrategy::Slow),
            (EqStrategy::Slow, HashStrategy::Fast),
            (EqStrategy::Fast, HashStrategy::Slow),
            (EqStrategy::Fast, HashStrategy::Fast),
        ];
        let keys: Vec<_> = (0..40u64).map(|s| crate::term::random_term(s, 6, 0.4)).collect();
        let mut baseline: Option<Vec<u64>> = None;
        for (eq, hash) in pairs {
            let mut cache = MemoCache::new(eq, hash);
            let mut meter = unb();
            let mut got = Vec::new();
            for (i, k) in keys.iter().enumerate() {
                let v = cache
                    .get_or_insert(PurityMode::Accelerated, k, &mut meter, || Ok(i as u64 % 7))
                    .unwrap();
                got.push(v);
            }
            match &baseline {
                None => baseline = Some(got),
                Some(b) => assert_eq!(b, &got),
            }
        }
    }

    #[test]
    fn id_bucket_hit_returns_stored_value() {
        let x = mk_add(mk_one(), mk_one());
        let entries = vec![CacheEntry { input: x.clone(), value: 2 }];
        let v = id_bucket_lookup(
            PurityMode::Accelerated,
            &entries,
            &x,
            None,
            || panic!("k must not run on a hit"),
            |_| panic!("update must not run on a hit"),
        )
        .unwrap();
        assert_eq!(v, 2);
    }

    #[test]
    fn id_bucket_miss_runs_k_and_update_once() {
        let x = mk_one();
        let mut updates = Vec::new();
        let v = id_bucket_lookup(PurityMode::Accelerated, &[], &x, None, || Ok(1), |e| {
            updates.push(e)
        })
        .unwrap();
        assert_eq!(v, 1);
        assert_eq!(updates.len(), 1);
        assert!(updates[0].input.same_node(&x));
    }

    #[test]
    fn id_bucket_treats_structural_twins_as_misses() {
        let stored = mk_add(mk_one(), mk_one());
        let probe = mk_add(mk_one(), mk_one());
        let entries = vec![CacheEntry { input: stored, value: 2 }];
        let mut missed = false;
        let v = id_bucket_lookup(
            PurityMode::Accelerated,
            &entries,
            &probe,
            None,
            || {
                missed = true;
                Ok(2)
            },
            |_| {},
        )
        .unwrap();
        assert_eq!(v, 2);
        assert!(missed, "identity-distinct candidates must miss");
    }

    #[test]
    fn id_cache_repeat_query_hits() {
        for buckets in [1usize, 2, 4096] {
            let mut cache = IdCache::new(buckets);
            let x = tower(8).unwrap();
            let v1 = cache
                .get_or_insert(PurityMode::Accelerated, &x, |_| Ok(256))
                .unwrap();
            let v2 = cache
                .get_or_insert(PurityMode::Accelerated, &x, |_| {
                    panic!("second query of the same handle must hit")
                })
                .unwrap();
            assert_eq!((v1, v2), (256, 256));
            assert_eq!(cache.len(), 1);
        }
    }

    #[test]
    fn id_cache_reference_mode_never_hits() {
        let mut cache = IdCache::new(8);
        let x = mk_one();
        cache.insert(PurityMode::Reference, &x, 1);
        assert_eq!(cache.lookup(PurityMode::Reference, &x).unwrap(), None);
        // the accelerated path would have found it in the null bucket only
        // if the tokens folded alike; reference inserts all go to bucket 0
        cache.insert(PurityMode::Reference, &x, 1);
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn id_cache_dual_check_audits_entries() {
        fn always_three(_: &TermRef) -> u64 {
            3
        }
        let mut cache = IdCache::with_reference(4, always_three);
        let x = mk_one();
        cache.insert(PurityMode::Accelerated, &x, 3);
        assert_eq!(cache.lookup(PurityMode::DualCheck, &x).unwrap(), Some(3));

        let mut bad = IdCache::with_reference(4, always_three);
        bad.insert(PurityMode::Accelerated, &x, 5);
        let err = bad.lookup(PurityMode::DualCheck, &x).unwrap_err();
        assert!(matches!(err, TraverseError::ContractViolation(_)));
    }
}
