//! Enforced orders over (value-erased) events, the "allows" relation between
//! an order and a trace, and checks of the object-ordering axioms.

use crate::events::{EventKey, OpId, StepId, ThreadId, Trace};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("relation is reflexive at {0}")]
    Reflexive(EventKey),
    #[error("relation is not transitive: missing ({0}, {1})")]
    NotTransitive(EventKey, EventKey),
    #[error("pair mentions {0}, which is outside the universe")]
    OutsideUniverse(EventKey),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

/// An irreflexive, transitively closed relation over a finite universe.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EnforcedOrder {
    universe: BTreeSet<EventKey>,
    pairs: BTreeSet<(EventKey, EventKey)>,
}

impl EnforcedOrder {
    pub fn new(
        universe: BTreeSet<EventKey>,
        pairs: BTreeSet<(EventKey, EventKey)>,
    ) -> Result<Self, OrderError> {
        for (a, b) in &pairs {
            for x in [a, b] {
                if !universe.contains(x) {
                    return Err(OrderError::OutsideUniverse(x.clone()));
                }
            }
            if a == b {
                return Err(OrderError::Reflexive(a.clone()));
            }
        }
        let succ = successors(&pairs);
        for (a, b) in &pairs {
            if let Some(next) = succ.get(b) {
                for c in next {
                    if !pairs.contains(&(a.clone(), (*c).clone())) {
                        return Err(OrderError::NotTransitive(a.clone(), (*c).clone()));
                    }
                }
            }
        }
        Ok(EnforcedOrder { universe, pairs })
    }

    /// Builds the transitive closure of `pairs` first.
    pub fn closure_of(
        universe: BTreeSet<EventKey>,
        pairs: impl IntoIterator<Item = (EventKey, EventKey)>,
    ) -> Result<Self, OrderError> {
        EnforcedOrder::new(universe, transitive_closure(pairs.into_iter().collect()))
    }

    pub fn universe(&self) -> &BTreeSet<EventKey> {
        &self.universe
    }

    pub fn pairs(&self) -> &BTreeSet<(EventKey, EventKey)> {
        &self.pairs
    }

    pub fn contains(&self, a: &EventKey, b: &EventKey) -> bool {
        self.pairs.contains(&(a.clone(), b.clone()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs with no intermediate element.
    pub fn transitive_reduction(&self) -> BTreeSet<(EventKey, EventKey)> {
        let succ = successors(&self.pairs);
        self.pairs
            .iter()
            .filter(|(a, b)| {
                !succ
                    .get(a)
                    .is_some_and(|mids| mids.iter().any(|c| self.pairs.contains(&((*c).clone(), b.clone()))))
            })
            .cloned()
            .collect()
    }

    /// `self ⋐ order(t)`: every pair whose later element occurs in `t` has its
    /// earlier element occur before it.
    pub fn allows(&self, t: &Trace) -> bool {
        let pos: HashMap<EventKey, usize> =
            t.events.iter().enumerate().map(|(i, e)| (e.key(), i)).collect();
        self.pairs.iter().all(|(a, b)| match pos.get(b) {
            None => true,
            Some(j) => pos.get(a).is_some_and(|i| i < j),
        })
    }

    fn operations(&self) -> BTreeSet<OpId> {
        self.universe.iter().filter_map(|k| k.op().cloned()).collect()
    }

    pub fn check_axioms(&self) -> AxiomReport {
        AxiomReport {
            inv_before: self.axiom_inv_before(),
            res_after: self.axiom_res_after(),
            obs_after_program: self.axiom_obs_after_program(),
            obs_order: self.axiom_obs_order(),
            lemma: self.lemma_status(),
        }
    }

    pub fn check_lemma1(&self) -> bool {
        self.lemma_status().holds()
    }

    // (inv(c), e) ∈ po ⇔ (res(c), e) ∈ po, for e other than c's own inv/res.
    fn axiom_inv_before(&self) -> AxiomStatus {
        for c in self.operations() {
            let (inv, res) = (EventKey::Inv(c.clone()), EventKey::Res(c.clone()));
            for e in &self.universe {
                if *e == inv || *e == res {
                    continue;
                }
                let (l, r) = (self.contains(&inv, e), self.contains(&res, e));
                if l != r {
                    let first = if l { &inv } else { &res };
                    return AxiomStatus::violated(first, e, "inv and res of the operation disagree on an enforced successor");
                }
            }
        }
        AxiomStatus::Holds
    }

    // (e, res(c)) ∈ po ⇔ (e, inv(c)) ∈ po, for e other than c's own inv/res.
    fn axiom_res_after(&self) -> AxiomStatus {
        for c in self.operations() {
            let (inv, res) = (EventKey::Inv(c.clone()), EventKey::Res(c.clone()));
            for e in &self.universe {
                if *e == inv || *e == res {
                    continue;
                }
                let (l, r) = (self.contains(e, &res), self.contains(e, &inv));
                if l != r {
                    let second = if l { &res } else { &inv };
                    return AxiomStatus::violated(e, second, "inv and res of the operation disagree on an enforced predecessor");
                }
            }
        }
        AxiomStatus::Holds
    }

    // For program events e: (e, obs(c)) ∈ po ⇔ (e, inv(c)) ∈ po.
    fn axiom_obs_after_program(&self) -> AxiomStatus {
        for c in self.operations() {
            let (inv, obs) = (EventKey::Inv(c.clone()), EventKey::OpObs(c.clone()));
            for e in self.universe.iter().filter(|e| e.is_program()) {
                let (l, r) = (self.contains(e, &obs), self.contains(e, &inv));
                if l != r {
                    let second = if l { &obs } else { &inv };
                    return AxiomStatus::violated(e, second, "program event enforced before the observation but not the invocation");
                }
            }
        }
        AxiomStatus::Holds
    }

    // For c ≠ d and e ∈ {inv(c), res(c), obs(c)}: (e, obs(d)) ⇒ (res(c), inv(d)).
    fn axiom_obs_order(&self) -> AxiomStatus {
        let ops = self.operations();
        for c in &ops {
            for d in ops.iter().filter(|d| *d != c) {
                let target = EventKey::OpObs(d.clone());
                for e in op_events(c) {
                    if self.contains(&e, &target)
                        && !self.contains(&EventKey::Res(c.clone()), &EventKey::Inv(d.clone()))
                    {
                        return AxiomStatus::violated(&e, &target, "observation ordered without ordering the operations");
                    }
                }
            }
        }
        AxiomStatus::Holds
    }

    fn lemma_status(&self) -> AxiomStatus {
        let ops = self.operations();
        for c in &ops {
            for d in ops.iter().filter(|d| *d != c) {
                let ordered = self.contains(&EventKey::Res(c.clone()), &EventKey::Inv(d.clone()));
                if ordered {
                    continue;
                }
                for e1 in op_events(c) {
                    for e2 in op_events(d) {
                        if self.contains(&e1, &e2) {
                            return AxiomStatus::violated(&e1, &e2, "object events ordered without ordering the operations");
                        }
                    }
                }
            }
        }
        AxiomStatus::Holds
    }
}

/// Invocation, response and observation keys of `c`.
pub fn op_events(c: &OpId) -> [EventKey; 3] {
    [EventKey::Inv(c.clone()), EventKey::Res(c.clone()), EventKey::OpObs(c.clone())]
}

fn successors(pairs: &BTreeSet<(EventKey, EventKey)>) -> BTreeMap<&EventKey, Vec<&EventKey>> {
    let mut succ: BTreeMap<&EventKey, Vec<&EventKey>> = BTreeMap::new();
    for (a, b) in pairs {
        succ.entry(a).or_default().push(b);
    }
    succ
}

pub fn transitive_closure(pairs: BTreeSet<(EventKey, EventKey)>) -> BTreeSet<(EventKey, EventKey)> {
    let nodes: BTreeSet<&EventKey> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    let index: HashMap<&EventKey, usize> = nodes.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let keys: Vec<&EventKey> = nodes.into_iter().collect();
    let n = keys.len();
    let mut reach = vec![vec![false; n]; n];
    for (a, b) in &pairs {
        reach[index[a]][index[b]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if i != k && reach[i][k] {
                let row = reach[k].clone();
                for (r, via) in reach[i].iter_mut().zip(row) {
                    *r |= via;
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] {
                out.insert((keys[i].clone(), keys[j].clone()));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxiomStatus {
    Holds,
    Violated { witness: (EventKey, EventKey), reason: &'static str },
}

impl AxiomStatus {
    fn violated(a: &EventKey, b: &EventKey, reason: &'static str) -> Self {
        AxiomStatus::Violated { witness: (a.clone(), b.clone()), reason }
    }

    pub fn holds(&self) -> bool {
        matches!(self, AxiomStatus::Holds)
    }
}

impl fmt::Display for AxiomStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomStatus::Holds => f.write_str("holds"),
            AxiomStatus::Violated { witness: (a, b), reason } => {
                write!(f, "violated: {reason}; witness ({a}, {b})")
            }
        }
    }
}

/// Per-axiom outcome. The pairwise observation axiom is an instance of
/// `obs_order` and is not reported separately.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub inv_before: AxiomStatus,
    pub res_after: AxiomStatus,
    pub obs_after_program: AxiomStatus,
    pub obs_order: AxiomStatus,
    pub lemma: AxiomStatus,
}

impl AxiomReport {
    pub fn entries(&self) -> [(&'static str, &AxiomStatus); 5] {
        [
            ("inv/res before", &self.inv_before),
            ("inv/res after", &self.res_after),
            ("obs after program event", &self.obs_after_program),
            ("observation order", &self.obs_order),
            ("object event order lemma", &self.lemma),
        ]
    }

    pub fn axioms_hold(&self) -> bool {
        self.entries()[..4].iter().all(|(_, s)| s.holds())
    }

    pub fn all_hold(&self) -> bool {
        self.entries().iter().all(|(_, s)| s.holds())
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, status) in self.entries() {
            writeln!(f, "{name}: {status}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Edge-list records

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRecord {
    pub kind: String,
    pub thread: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    pub instance: u32,
}

impl From<&EventKey> for KeyRecord {
    fn from(k: &EventKey) -> Self {
        let step = |kind: &str, s: &StepId| KeyRecord {
            kind: kind.into(),
            thread: s.thread.to_string(),
            label: Some(s.label.to_string()),
            op: None,
            instance: s.instance,
        };
        let op = |kind: &str, o: &OpId| KeyRecord {
            kind: kind.into(),
            thread: o.thread.to_string(),
            label: None,
            op: Some(o.call.to_string()),
            instance: o.instance,
        };
        match k {
            EventKey::Step(s) => step("step", s),
            EventKey::StepObs(s) => step("obs-step", s),
            EventKey::Inv(o) => op("inv", o),
            EventKey::Res(o) => op("res", o),
            EventKey::OpObs(o) => op("obs-op", o),
        }
    }
}

impl KeyRecord {
    pub fn to_key(&self) -> Result<EventKey, String> {
        let thread = ThreadId::new(&self.thread);
        let step = || {
            self.label
                .as_deref()
                .map(|l| StepId { thread: thread.clone(), label: l.into(), instance: self.instance })
                .ok_or_else(|| "missing field `label`".to_string())
        };
        let op = || {
            self.op
                .as_deref()
                .map(|c| OpId { thread: thread.clone(), call: c.into(), instance: self.instance })
                .ok_or_else(|| "missing field `op`".to_string())
        };
        Ok(match self.kind.as_str() {
            "step" => EventKey::Step(step()?),
            "obs-step" => EventKey::StepObs(step()?),
            "inv" => EventKey::Inv(op()?),
            "res" => EventKey::Res(op()?),
            "obs-op" => EventKey::OpObs(op()?),
            other => return Err(format!("unknown event kind `{other}`")),
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OrderLine {
    Edge { from: KeyRecord, to: KeyRecord },
    Node { node: KeyRecord },
}

impl EnforcedOrder {
    /// Universe nodes first, then edges; all sorted.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for k in &self.universe {
            out.push_str(&serde_json::to_string(&OrderLine::Node { node: k.into() }).unwrap());
            out.push('\n');
        }
        for (a, b) in &self.pairs {
            let line = OrderLine::Edge { from: a.into(), to: b.into() };
            out.push_str(&serde_json::to_string(&line).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn from_records(text: &str) -> Result<Self, OrderError> {
        let mut universe = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| OrderError::Record { line: i + 1, message };
            let parsed: OrderLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            match parsed {
                OrderLine::Node { node } => {
                    universe.insert(node.to_key().map_err(err)?);
                }
                OrderLine::Edge { from, to } => {
                    pairs.insert((from.to_key().map_err(err)?, to.to_key().map_err(err)?));
                }
            }
        }
        EnforcedOrder::new(universe, pairs)
    }
}

#[cfg(test)]
#[path = "../tests/support/relgen.rs"]
pub(crate) mod testgen;
