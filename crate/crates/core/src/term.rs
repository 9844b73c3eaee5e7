//! The term datatype with an intrusive hash code, its pure reference
//! operations, and builders for the benchmark shapes.
//!
//! Terms are immutable nodes behind shared handles ([`TermRef`]). A handle
//! exposes a stable [`IdentityToken`]: two live handles with equal tokens
//! refer to the same node. By default the token is the machine-word identity
//! of the shared allocation (valid because allocations never move and caches
//! retain handles to every node they key by). Setting
//! `TERMBENCH_DETERMINISTIC_IDS=1` before first use switches the whole
//! process to sequential tokens for golden tests.
//!
//! Every `Add` node stores `mix(fast_hash(left), fast_hash(right))` so that
//! hashing is O(1); [`slow_hash`] recomputes the same value structurally and
//! costs the full tree size. Traversals here and everywhere else in the crate
//! use explicit work lists, never call-stack recursion: benchmark depths
//! reach the hundreds of thousands.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::meter::{TraverseError, VisitMeter};

/// Default cap on builder depth; generous enough for every benchmark size.
pub const DEFAULT_DEPTH_LIMIT: u32 = 1 << 20;

pub(crate) const FNV_PRIME: u64 = 1_099_511_628_211;
const ONE_HASH: u64 = 7;

/// 64-bit structural hash code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashCode(pub u64);

/// Opaque machine-word identity of a live node. Stable for the node's
/// lifetime; distinct live nodes have distinct tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdentityToken(u64);

impl IdentityToken {
    /// The null token, used by reference paths that must not observe
    /// identity.
    pub const NULL: IdentityToken = IdentityToken(0);

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// Combines two hash codes: `mix(a, b) = (a * 1099511628211 + b) mod 2^64`.
pub fn mix(a: HashCode, b: HashCode) -> HashCode {
    HashCode(a.0.wrapping_mul(FNV_PRIME).wrapping_add(b.0))
}

#[derive(Debug)]
enum TermKind {
    One,
    Add { left: TermRef, right: TermRef, hash: HashCode },
}

#[derive(Debug)]
pub struct TermNode {
    seq: u64,
    kind: TermKind,
}

impl Drop for TermNode {
    /// Dismantles iteratively: dropping the last handle to a deep chain
    /// would otherwise recurse once per level and overflow the stack.
    fn drop(&mut self) {
        let mut work: Vec<TermRef> = Vec::new();
        take_children(&mut self.kind, &mut work);
        while let Some(mut child) = work.pop() {
            if let Some(node) = Arc::get_mut(&mut child.node) {
                // Uniquely owned: steal its children before its own drop
                // runs, so that drop only ever sees leaves.
                take_children(&mut node.kind, &mut work);
            }
        }
    }
}

fn take_children(kind: &mut TermKind, out: &mut Vec<TermRef>) {
    if matches!(kind, TermKind::Add { .. }) {
        if let TermKind::Add { left, right, .. } = std::mem::replace(kind, TermKind::One) {
            out.push(left);
            out.push(right);
        }
    }
}

/// Shared, immutable handle to a term node. Cloning is cheap and preserves
/// identity.
#[derive(Debug, Clone)]
pub struct TermRef {
    node: Arc<TermNode>,
}

/// A borrowed view of a node's structure.
pub enum TermView<'a> {
    One,
    Add { left: &'a TermRef, right: &'a TermRef, hash: HashCode },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum IdMode {
    Address,
    Sequential,
}

fn id_mode() -> IdMode {
    static MODE: OnceLock<IdMode> = OnceLock::new();
    *MODE.get_or_init(|| {
        match std::env::var("TERMBENCH_DETERMINISTIC_IDS") {
            Ok(v) if v == "1" => IdMode::Sequential,
            _ => IdMode::Address,
        }
    })
}

// Sequential tokens start at 1; 0 is reserved for IdentityToken::NULL.
static NEXT_SEQ: AtomicU64 = AtomicU64::new(1);

fn fresh_seq() -> u64 {
    match id_mode() {
        IdMode::Address => 0,
        IdMode::Sequential => NEXT_SEQ.fetch_add(1, Ordering::Relaxed),
    }
}

impl TermRef {
    fn new(kind: TermKind) -> TermRef {
        TermRef { node: Arc::new(TermNode { seq: fresh_seq(), kind }) }
    }

    /// The node's identity token, constant for the handle's lifetime.
    pub fn identity(&self) -> IdentityToken {
        match id_mode() {
            IdMode::Address => IdentityToken(Arc::as_ptr(&self.node) as usize as u64),
            IdMode::Sequential => IdentityToken(self.node.seq),
        }
    }

    /// True when both handles refer to the same node.
    pub fn same_node(&self, other: &TermRef) -> bool {
        self.identity() == other.identity()
    }

    pub fn view(&self) -> TermView<'_> {
        match &self.node.kind {
            TermKind::One => TermView::One,
            TermKind::Add { left, right, hash } => {
                TermView::Add { left, right, hash: *hash }
            }
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node.kind, TermKind::One)
    }
}

/// Allocates a fresh `One` node. Every call yields a new identity; the
/// sharing engine is what collapses equal leaves, not the constructor.
pub fn mk_one() -> TermRef {
    TermRef::new(TermKind::One)
}

/// Smart constructor for `Add`: stores `mix(fast_hash(l), fast_hash(r))` so
/// the hash of the new node never requires a traversal.
pub fn mk_add(left: TermRef, right: TermRef) -> TermRef {
    let hash = mix(fast_hash(&left), fast_hash(&right));
    TermRef::new(TermKind::Add { left, right, hash })
}

/// O(1) hash: `7` for `One`, the stored code for `Add`.
pub fn fast_hash(t: &TermRef) -> HashCode {
    match &t.node.kind {
        TermKind::One => HashCode(ONE_HASH),
        TermKind::Add { hash, .. } => *hash,
    }
}

/// Metered [`fast_hash`]: reading one node costs one visit.
pub fn fast_hash_in(t: &TermRef, meter: &mut VisitMeter) -> Result<HashCode, TraverseError> {
    meter.record(1)?;
    Ok(fast_hash(t))
}

/// Full structural recomputation of the hash, ignoring stored codes.
/// Costs one visit per tree node, i.e. Θ(tree size).
pub fn slow_hash_in(t: &TermRef, meter: &mut VisitMeter) -> Result<HashCode, TraverseError> {
    enum Frame<'a> {
        Enter(&'a TermRef),
        Combine,
    }
    let mut work = vec![Frame::Enter(t)];
    let mut vals: Vec<HashCode> = Vec::new();
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Enter(node) => {
                meter.record(1)?;
                match node.view() {
                    TermView::One => vals.push(HashCode(ONE_HASH)),
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
                vals.push(mix(l, r));
            }
        }
    }
    Ok(vals.pop().expect("value stack underflow"))
}

pub fn slow_hash(t: &TermRef) -> HashCode {
    slow_hash_in(t, &mut VisitMeter::unbounded()).expect("unbounded meter cannot fail")
}

/// Structural equality by tree recursion: no identity shortcuts, no use of
/// stored hashes. This is the reference implementation every accelerated
/// equality must match. Costs two visits per examined pair.
pub fn term_eq_pure_in(a: &TermRef, b: &TermRef, meter: &mut VisitMeter) -> Result<bool, TraverseError> {
    meter.note_struct_eq();
    let mut pairs = vec![(a, b)];
    while let Some((x, y)) = pairs.pop() {
        meter.record(2)?;
        match (x.view(), y.view()) {
            (TermView::One, TermView::One) => {}
            (
                TermView::Add { left: xl, right: xr, .. },
                TermView::Add { left: yl, right: yr, .. },
            ) => {
                pairs.push((xr, yr));
                pairs.push((xl, yl));
            }
            _ => return Ok(false),
        }
    }
    Ok(true)
}

pub fn term_eq_pure(a: &TermRef, b: &TermRef) -> bool {
    term_eq_pure_in(a, b, &mut VisitMeter::unbounded()).expect("unbounded meter cannot fail")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("requested depth {n} exceeds the limit {limit}")]
pub struct DepthLimitExceeded {
    pub n: u32,
    pub limit: u32,
}

/// `tower(0) = one`, `tower(n+1) = add(t, t)` with the sub-tower built once
/// and shared: n+1 distinct nodes, 2^(n+1)-1 tree nodes.
pub fn tower(n: u32) -> Result<TermRef, DepthLimitExceeded> {
    tower_with_limit(n, DEFAULT_DEPTH_LIMIT)
}

pub fn tower_with_limit(n: u32, limit: u32) -> Result<TermRef, DepthLimitExceeded> {
    if n > limit {
        return Err(DepthLimitExceeded { n, limit });
    }
    let mut t = mk_one();
    for _ in 0..n {
        t = mk_add(t.clone(), t);
    }
    Ok(t)
}

/// Two distinct `add(t, t)` roots over one shared tower of height `n`.
pub fn twin_shared(n: u32) -> Result<(TermRef, TermRef), DepthLimitExceeded> {
    let t = tower(n)?;
    let a = mk_add(t.clone(), t.clone());
    let b = mk_add(t.clone(), t);
    Ok((a, b))
}

/// `add(a, b)` where `a` and `b` are independently built towers of height
/// `n` sharing no node identities: 2n+3 distinct nodes.
pub fn twin_disjoint(n: u32) -> Result<TermRef, DepthLimitExceeded> {
    let a = tower(n)?;
    let b = tower(n)?;
    Ok(mk_add(a, b))
}

/// Deterministic random term DAG. Keeps a pool of built subterms; each child
/// position reuses a pooled node with probability `reuse_prob` (sharing its
/// identity) and otherwise builds fresh structure. With `reuse_prob = 0`
/// every node identity in the result is distinct. The unfolded tree size
/// never exceeds `2^size_budget`.
pub fn random_term(seed: u64, size_budget: u32, reuse_prob: f64) -> TermRef {
    assert!(size_budget >= 1, "size_budget must be at least 1");
    assert!((0.0..=1.0).contains(&reuse_prob), "reuse_prob must be a probability");
    let max_tree: u64 = 1 << size_budget.min(40);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // All built subterms with their tree sizes, candidates for reuse.
    let mut pool: Vec<(TermRef, u64)> = Vec::new();

    enum Frame {
        Build { budget: u64 },
        Combine,
    }
    let mut work = vec![Frame::Build { budget: max_tree }];
    let mut out: Vec<(TermRef, u64)> = Vec::new();
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Build { budget } => {
                if reuse_prob > 0.0 && rng.gen_bool(reuse_prob) && !pool.is_empty() {
                    // A few random probes instead of a full scan keeps
                    // generation linear; if none fits the budget we fall
                    // through and build fresh structure.
                    let picked = (0..8)
                        .map(|_| rng.gen_range(0..pool.len()))
                        .find(|&idx| pool[idx].1 <= budget);
                    if let Some(idx) = picked {
                        out.push(pool[idx].clone());
                        continue;
                    }
                }
                if budget < 3 || !rng.gen_bool(0.75) {
                    let leaf = mk_one();
                    pool.push((leaf.clone(), 1));
                    out.push((leaf, 1));
                } else {
                    // Fixed split: the right child's budget does not depend
                    // on how much of its budget the left child actually used.
                    let left_budget = rng.gen_range(1..=budget - 2);
                    work.push(Frame::Combine);
                    work.push(Frame::Build { budget: budget - 1 - left_budget });
                    work.push(Frame::Build { budget: left_budget });
                }
            }
            Frame::Combine => {
                let (r, r_size) = out.pop().expect("builder stack underflow");
                let (l, l_size) = out.pop().expect("builder stack underflow");
                let t = mk_add(l, r);
                let size = 1 + l_size + r_size;
                pool.push((t.clone(), size));
                out.push((t, size));
            }
        }
    }
    let (t, _) = out.pop().expect("builder produced no term");
    t
}

/// All distinct nodes (by identity) reachable from `t`, including `t`.
pub fn distinct_subterms(t: &TermRef) -> Vec<TermRef> {
    let mut seen: HashSet<IdentityToken> = HashSet::new();
    let mut out: Vec<TermRef> = Vec::new();
    let mut work = vec![t.clone()];
    while let Some(node) = work.pop() {
        if !seen.insert(node.identity()) {
            continue;
        }
        if let TermView::Add { left, right, .. } = node.view() {
            work.push(left.clone());
            work.push(right.clone());
        }
        out.push(node);
    }
    out
}

/// Number of distinct nodes (by identity) reachable from `t`.
pub fn distinct_nodes(t: &TermRef) -> u64 {
    let mut seen: HashSet<IdentityToken> = HashSet::new();
    let mut work = vec![t];
    while let Some(node) = work.pop() {
        if !seen.insert(node.identity()) {
            continue;
        }
        if let TermView::Add { left, right, .. } = node.view() {
            work.push(right);
            work.push(left);
        }
    }
    seen.len() as u64
}

/// Tree-node count of `t` when fully unfolded, computed DAG-wise (one pass
/// over distinct nodes). Exact even when the count dwarfs 2^64.
pub fn tree_nodes(t: &TermRef) -> BigUint {
    enum Frame<'a> {
        Enter(&'a TermRef),
        Exit(&'a TermRef),
    }
    let mut sizes: HashMap<IdentityToken, BigUint> = HashMap::new();
    let mut work = vec![Frame::Enter(t)];
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Enter(node) => {
                if sizes.contains_key(&node.identity()) {
                    continue;
                }
                match node.view() {
                    TermView::One => {
                        sizes.insert(node.identity(), BigUint::from(1u32));
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
                    let total = 1u32 + &sizes[&left.identity()] + &sizes[&right.identity()];
                    sizes.insert(node.identity(), total);
                }
            }
        }
    }
    sizes.remove(&t.identity()).expect("size of root missing")
}
