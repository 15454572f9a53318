//! Bounded trace semantics of a client composed with an object under SC, TSO
//! or a relaxed, non-multi-copy-atomic storage model.
//!
//! * SC: a write is visible to every core when it is issued.
//! * TSO: per-core FIFO store buffers of bounded capacity; a core reads its
//!   own newest buffered value first; flushes are nondeterministic steps.
//! * RELAXED: a write is first visible to its own core only and then reaches
//!   the other cores one propagation step at a time, in any order; each core
//!   keeps the coherence-newest value it has received. Instructions of one
//!   thread are not reordered.
//!
//! A program write is observed when every core has it. An implementation
//! operation is observed after its response once all its stores are visible
//! everywhere; an operation that stored nothing is observed right after its
//! response. A test-and-set or fence first waits until the core's own
//! earlier stores are visible everywhere, and a successful test-and-set is
//! visible everywhere at once. An atomic specification operation takes effect
//! at its response; if it wrote, its observation passes through the storage
//! model as a marker (immediately under SC, in FIFO order under TSO, once the
//! core's earlier stores are visible everywhere under RELAXED). A new
//! specification invocation waits until every operation invoked on another
//! core has been observed.
//!
//! Loops run at most `unroll` times; a loop test that would start one more
//! run is never taken, which cuts the run to its prefixes.

mod explore;
mod oracle;
mod storage;
mod trie;

pub use oracle::{oracle_sc, skeleton_len, OracleError, ORACLE_CAP};
pub use storage::{Origin, Store};
pub use trie::{NodeId, TraceSet, Trie, ROOT};

use crate::events::{Name, ThreadId};
use crate::porder::EnforcedOrder;
use crate::program::{validate, ClientProgram, ObjectDef, SemanticError, ValueDomain};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    Sc,
    Tso,
    Relaxed,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Sc, ModelId::Tso, ModelId::Relaxed];
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::Sc => "sc",
            ModelId::Tso => "tso",
            ModelId::Relaxed => "relaxed",
        })
    }
}

impl FromStr for ModelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(ModelId::Sc),
            "tso" => Ok(ModelId::Tso),
            "relaxed" => Ok(ModelId::Relaxed),
            other => Err(format!("unknown model `{other}` (expected sc, tso or relaxed)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExploreConfig {
    pub model: ModelId,
    /// Maximum number of runs of each loop.
    pub unroll: u32,
    /// Store buffer capacity under TSO.
    pub buffer: usize,
    pub domain: ValueDomain,
    /// Core of each thread; by default each thread has its own core.
    pub coremap: Option<Vec<(ThreadId, Name)>>,
    pub workers: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            model: ModelId::Sc,
            unroll: 2,
            buffer: 4,
            domain: ValueDomain::default(),
            coremap: None,
            workers: 1,
        }
    }
}

impl ExploreConfig {
    pub fn with_model(model: ModelId) -> Self {
        ExploreConfig { model, ..Default::default() }
    }

    pub fn check(&self) -> Result<(), ExploreError> {
        if self.unroll < 1 {
            return Err(ExploreError::Config("unroll bound must be at least 1".into()));
        }
        if self.buffer < 1 {
            return Err(ExploreError::Config("buffer capacity must be at least 1".into()));
        }
        if self.domain.max < 1 {
            return Err(ExploreError::Config("value domain maximum must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Program(#[from] SemanticError),
    #[error("too many cores ({0}); at most 64 are supported")]
    Cores(usize),
}

/// All traces of `p` running with `obj` under the configured model and bounds.
pub fn explore(p: &ClientProgram, obj: &ObjectDef, cfg: &ExploreConfig) -> Result<TraceSet, ExploreError> {
    cfg.check()?;
    validate(p, obj)?;
    let ctx = explore::Ctx::new(p, obj, cfg);
    if ctx.core_count() > 64 {
        return Err(ExploreError::Cores(ctx.core_count()));
    }
    Ok(explore::run(&ctx))
}

/// Pairs `(a, b)` such that `a` precedes `b` in every explored trace that
/// contains `b`, over the keys that occur in some trace.
pub fn enforced_order_of(set: &TraceSet) -> EnforcedOrder {
    let before = set.always_before();
    let universe = before.keys().cloned().collect();
    let pairs = before.into_iter().flat_map(|(b, preds)| preds.into_iter().map(move |a| (a, b.clone()))).collect();
    EnforcedOrder::new(universe, pairs).expect("always-before is a strict partial order")
}

pub fn enforced_order(p: &ClientProgram, obj: &ObjectDef, cfg: &ExploreConfig) -> Result<EnforcedOrder, ExploreError> {
    Ok(enforced_order_of(&explore(p, obj, cfg)?))
}
