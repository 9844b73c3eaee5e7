//! A term-DAG toolkit that hides identity-based (memory-address-style)
//! optimizations behind interfaces that are observably equivalent to pure
//! reference implementations.
//!
//! The term language has two constructors, `One` and `Add`, with an intrusive
//! hash code stored in every `Add` node. Heavily shared terms are cheap as
//! graphs but exponentially large as trees, so every operation here is graded
//! by *node visits* (structural examinations of term nodes) rather than wall
//! time:
//!
//! - [`term`]: the term type, pure reference operations and shape builders;
//! - [`prims`]: the sealed identity primitives (identity equality, imprecise
//!   identity test, identity-token observation, share-common), each with an
//!   accelerated path, a pure reference path and a dual-checking mode;
//! - [`fast_eq`]: identity-accelerated structural equality;
//! - [`cache`]: memo caches with pluggable equality/hash strategies and an
//!   identity-keyed fixed-bucket cache;
//! - [`share`]: the incremental canonicalization (maximal-sharing) engine;
//! - [`eval`]: the reference evaluator and its eight instrumented variants;
//! - [`verify`]: randomized suites checking that accelerated and reference
//!   paths are indistinguishable.

pub mod cache;
pub mod eval;
pub mod fast_eq;
pub mod meter;
pub mod prims;
pub mod share;
pub mod term;
pub mod verify;

pub use cache::{CacheEntry, EqStrategy, HashStrategy, IdCache, MemoCache};
pub use eval::{eval_nat_naive, run_variant, EvalOutcome, VariantId};
pub use fast_eq::{term_dec_eq, term_eq_one_off, term_eq_rec, EqDecision};
pub use meter::{TraverseError, VisitMeter};
pub use prims::{share_common, with_id_eq, with_id_eq_result, with_id_rel, with_id_token, with_share_common, IdEqResult, PurityMode};
pub use share::ShareState;
pub use term::{distinct_nodes, fast_hash, mk_add, mk_one, mix, random_term, slow_hash, term_eq_pure, tower, tree_nodes, twin_disjoint, twin_shared, HashCode, IdentityToken, TermRef, TermView, DEFAULT_DEPTH_LIMIT};
