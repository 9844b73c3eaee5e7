//! Incremental canonicalization: rewrite terms so that every structural
//! equivalence class is represented by exactly one node.
//!
//! [`ShareState`] owns two maps. `memo` sends the identity of an
//! already-processed node to its canonical representative, letting repeat
//! canonicalizations short-circuit whole subtrees. `interner` sends a
//! structural key (constructor tag plus the identity tokens of *canonical*
//! children) to the canonical node for that shape. Keying by identity is
//! only sound while the keyed nodes stay alive, so the state retains a
//! handle to every source node it has memoized and to every canonical node
//! it has interned.

use std::collections::HashMap;

use crate::meter::{TraverseError, VisitMeter};
use crate::term::{mk_add, IdentityToken, TermRef, TermView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StructuralKey {
    One,
    Add(IdentityToken, IdentityToken),
}

/// Canonicalization state mapping node identities to maximally shared nodes.
///
/// Single-owner: concurrent canonicalizations need separate states.
#[derive(Debug, Default)]
pub struct ShareState {
    memo: HashMap<IdentityToken, TermRef>,
    interner: HashMap<StructuralKey, TermRef>,
    retained: Vec<TermRef>,
    insertions: u64,
}

impl ShareState {
    pub fn new() -> ShareState {
        ShareState::default()
    }

    /// Number of canonical nodes interned so far (one per structural class).
    pub fn interner_len(&self) -> usize {
        self.interner.len()
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Running count of interner insertions; a repeat canonicalization of an
    /// already-shared term performs none.
    pub fn interner_insertions(&self) -> u64 {
        self.insertions
    }

    fn intern(&mut self, key: StructuralKey, candidate: TermRef) -> TermRef {
        if let Some(canonical) = self.interner.get(&key) {
            return canonical.clone();
        }
        self.insertions += 1;
        self.interner.insert(key, candidate.clone());
        // A canonical node is its own representative.
        self.memo.insert(candidate.identity(), candidate.clone());
        candidate
    }

    /// Returns a maximally shared term structurally equal to `t`, reusing
    /// and extending this state. Iterative post-order; a memoized subtree
    /// costs exactly one visit.
    pub fn canonicalize(&mut self, t: &TermRef, meter: &mut VisitMeter) -> Result<TermRef, TraverseError> {
        enum Frame<'a> {
            Enter(&'a TermRef),
            Build(&'a TermRef),
        }
        let mut work = vec![Frame::Enter(t)];
        let mut done: Vec<TermRef> = Vec::new();
        while let Some(frame) = work.pop() {
            match frame {
                Frame::Enter(node) => {
                    meter.record(1)?;
                    if let Some(canonical) = self.memo.get(&node.identity()) {
                        done.push(canonical.clone());
                        continue;
                    }
                    match node.view() {
                        TermView::One => {
                            let canonical = self.intern(StructuralKey::One, node.clone());
                            self.remember(node, &canonical);
                            done.push(canonical);
                        }
                        TermView::Add { left, right, .. } => {
                            work.push(Frame::Build(node));
                            work.push(Frame::Enter(right));
                            work.push(Frame::Enter(left));
                        }
                    }
                }
                Frame::Build(node) => {
                    let canon_r = done.pop().expect("canonical stack underflow");
                    let canon_l = done.pop().expect("canonical stack underflow");
                    let key = StructuralKey::Add(canon_l.identity(), canon_r.identity());
                    let canonical = if let Some(existing) = self.interner.get(&key) {
                        existing.clone()
                    } else {
                        let children_already_canonical = match node.view() {
                            TermView::Add { left, right, .. } => {
                                left.same_node(&canon_l) && right.same_node(&canon_r)
                            }
                            TermView::One => unreachable!("Build frame on a leaf"),
                        };
                        let candidate = if children_already_canonical {
                            node.clone()
                        } else {
                            mk_add(canon_l, canon_r)
                        };
                        self.intern(key, candidate)
                    };
                    self.remember(node, &canonical);
                    done.push(canonical);
                }
            }
        }
        Ok(done.pop().expect("canonical stack underflow"))
    }

    /// Memoizes `source -> canonical`, keeping the source handle alive so
    /// its identity token cannot be reused while this state exists.
    fn remember(&mut self, source: &TermRef, canonical: &TermRef) {
        if source.same_node(canonical) {
            return; // already self-memoized by intern()
        }
        self.memo.insert(source.identity(), canonical.clone());
        self.retained.push(source.clone());
    }
}
