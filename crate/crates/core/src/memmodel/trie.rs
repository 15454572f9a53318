//! Prefix trees of traces. Every node is a trace, so a trie is a
//! prefix-closed, duplicate-free trace set by construction.

use crate::events::{Event, EventKey, Observation, ObservableBehaviour, Trace};
use std::collections::{BTreeMap, BTreeSet, HashMap};

pub type NodeId = u32;
pub const ROOT: NodeId = 0;
const NO_EVENT: u32 = u32::MAX;

#[derive(Clone, Debug, Default)]
pub struct Trie {
    /// (parent, event id) per node; the root has no event.
    nodes: Vec<(NodeId, u32)>,
    children: HashMap<(NodeId, u32), NodeId>,
    events: Vec<Event>,
    ids: HashMap<Event, u32>,
}

impl Trie {
    pub fn new() -> Self {
        Trie { nodes: vec![(ROOT, NO_EVENT)], ..Default::default() }
    }

    fn intern(&mut self, e: &Event) -> u32 {
        if let Some(&id) = self.ids.get(e) {
            return id;
        }
        let id = self.events.len() as u32;
        self.events.push(e.clone());
        self.ids.insert(e.clone(), id);
        id
    }

    pub fn child(&mut self, parent: NodeId, e: &Event) -> NodeId {
        let id = self.intern(e);
        if let Some(&n) = self.children.get(&(parent, id)) {
            return n;
        }
        let n = self.nodes.len() as NodeId;
        self.nodes.push((parent, id));
        self.children.insert((parent, id), n);
        n
    }

    pub fn extend(&mut self, mut node: NodeId, events: &[Event]) -> NodeId {
        for e in events {
            node = self.child(node, e);
        }
        node
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn event(&self, n: NodeId) -> Option<&Event> {
        let (_, e) = self.nodes[n as usize];
        (e != NO_EVENT).then(|| &self.events[e as usize])
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        (n != ROOT).then(|| self.nodes[n as usize].0)
    }

    pub fn trace(&self, mut n: NodeId) -> Trace {
        let mut out = Vec::new();
        while n != ROOT {
            let (p, e) = self.nodes[n as usize];
            out.push(self.events[e as usize].clone());
            n = p;
        }
        out.reverse();
        Trace::new(out)
    }

    /// Copies every trace of `other` into `self`.
    pub fn merge(&mut self, other: &Trie) {
        let mut map = vec![ROOT; other.nodes.len()];
        for (i, &(p, e)) in other.nodes.iter().enumerate().skip(1) {
            map[i] = self.child(map[p as usize], &other.events[e as usize]);
        }
    }
}

/// A finished, queryable trace set.
#[derive(Clone, Debug)]
pub struct TraceSet {
    trie: Trie,
    depth: Vec<u32>,
    /// Children of each node sorted by event.
    kids: Vec<Vec<NodeId>>,
}

impl TraceSet {
    pub fn from_trie(trie: Trie) -> Self {
        let n = trie.nodes.len();
        let mut depth = vec![0u32; n];
        let mut kids: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for i in 1..n {
            let (p, _) = trie.nodes[i];
            depth[i] = depth[p as usize] + 1;
            kids[p as usize].push(i as NodeId);
        }
        for k in &mut kids {
            k.sort_by(|a, b| trie.events[trie.nodes[*a as usize].1 as usize].cmp(&trie.events[trie.nodes[*b as usize].1 as usize]));
        }
        TraceSet { trie, depth, kids }
    }

    pub fn trie(&self) -> &Trie {
        &self.trie
    }

    /// Number of traces, the empty trace included.
    pub fn len(&self) -> usize {
        self.trie.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn depth(&self, n: NodeId) -> usize {
        self.depth[n as usize] as usize
    }

    pub fn trace(&self, n: NodeId) -> Trace {
        self.trie.trace(n)
    }

    /// Nodes in canonical order: lexicographic by event sequence.
    pub fn canonical_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![ROOT];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.kids[n as usize].iter().rev());
        }
        out
    }

    pub fn traces(&self) -> impl Iterator<Item = Trace> + '_ {
        self.canonical_nodes().into_iter().map(|n| self.trace(n))
    }

    /// Traces with no extension in the set.
    pub fn maximal(&self) -> impl Iterator<Item = Trace> + '_ {
        self.canonical_nodes().into_iter().filter(|n| self.kids[*n as usize].is_empty()).map(|n| self.trace(n))
    }

    pub fn leaf_count(&self) -> usize {
        self.kids.iter().filter(|k| k.is_empty()).count()
    }

    pub fn contains(&self, t: &Trace) -> bool {
        let mut n = ROOT;
        for e in t.iter() {
            let Some(&id) = self.trie.ids.get(e) else { return false };
            match self.trie.children.get(&(n, id)) {
                Some(&c) => n = c,
                None => return false,
            }
        }
        true
    }

    pub fn to_set(&self) -> BTreeSet<Trace> {
        self.traces().collect()
    }

    /// Observable behaviour of every node, interned: returns the per-node
    /// behaviour index and the behaviours.
    pub fn observable_index(&self) -> (Vec<u32>, Vec<ObservableBehaviour>) {
        let mut behaviours: Vec<Vec<Observation>> = vec![Vec::new()];
        let mut succ: HashMap<(u32, Observation), u32> = HashMap::new();
        let mut idx = vec![0u32; self.len()];
        for i in 1..self.len() {
            let (p, e) = self.trie.nodes[i];
            let parent = idx[p as usize];
            idx[i] = match &self.trie.events[e as usize] {
                Event::ProgObs { step, var, value } => {
                    let o = Observation { thread: step.thread.clone(), var: var.clone(), value: *value };
                    *succ.entry((parent, o.clone())).or_insert_with(|| {
                        let mut b = behaviours[parent as usize].clone();
                        b.push(o);
                        behaviours.push(b);
                        (behaviours.len() - 1) as u32
                    })
                }
                _ => parent,
            };
        }
        (idx, behaviours.into_iter().map(ObservableBehaviour).collect())
    }

    pub fn observables(&self) -> BTreeSet<ObservableBehaviour> {
        self.observable_index().1.into_iter().collect()
    }

    /// All event keys that occur in some trace.
    pub fn keys(&self) -> BTreeSet<EventKey> {
        self.trie.events.iter().map(Event::key).collect()
    }

    /// For every key `b`, the keys occurring before `b` in every trace that contains `b`.
    pub fn always_before(&self) -> BTreeMap<EventKey, BTreeSet<EventKey>> {
        let keys: Vec<EventKey> = self.keys().into_iter().collect();
        let index: HashMap<&EventKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let ev_key: Vec<usize> = self.trie.events.iter().map(|e| index[&e.key()]).collect();
        let words = keys.len().div_ceil(64).max(1);
        // ancestors[n]: keys on the path to n, n's own event excluded
        let mut ancestors = vec![0u64; self.len() * words];
        let mut before: Vec<Option<Vec<u64>>> = vec![None; keys.len()];
        for i in 1..self.len() {
            let (p, e) = self.trie.nodes[i];
            let (pw, iw) = (p as usize * words, i * words);
            for w in 0..words {
                ancestors[iw + w] = ancestors[pw + w];
            }
            if p != ROOT {
                let k = ev_key[self.trie.nodes[p as usize].1 as usize];
                ancestors[iw + k / 64] |= 1 << (k % 64);
            }
            let k = ev_key[e as usize];
            let anc = &ancestors[iw..iw + words];
            match &mut before[k] {
                slot @ None => *slot = Some(anc.to_vec()),
                Some(b) => b.iter_mut().zip(anc).for_each(|(x, y)| *x &= y),
            }
        }
        let mut out = BTreeMap::new();
        for (k, b) in before.into_iter().enumerate() {
            let b = b.unwrap_or_default();
            let set = (0..keys.len()).filter(|j| b[j / 64] & (1 << (j % 64)) != 0).map(|j| keys[j].clone()).collect();
            out.insert(keys[k].clone(), set);
        }
        out
    }
}

impl PartialEq for TraceSet {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.traces().all(|t| other.contains(&t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Value;

    fn e(l: &str) -> Event {
        Event::step("T1", l, 0, None)
    }

    #[test]
    fn prefixes_are_shared() {
        let mut t = Trie::new();
        let a = t.extend(ROOT, &[e("a"), e("b")]);
        let b = t.extend(ROOT, &[e("a"), e("c")]);
        assert_ne!(a, b);
        assert_eq!(t.len(), 4);
        let s = TraceSet::from_trie(t);
        assert_eq!(s.leaf_count(), 2);
        assert!(s.contains(&Trace::new(vec![e("a")])));
        assert!(!s.contains(&Trace::new(vec![e("b")])));
        let order: Vec<usize> = s.traces().map(|t| t.len()).collect();
        assert_eq!(order, vec![0, 1, 2, 2]);
    }

    #[test]
    fn merge_is_union() {
        let mut x = Trie::new();
        x.extend(ROOT, &[e("a"), e("b")]);
        let mut y = Trie::new();
        y.extend(ROOT, &[e("a"), e("c")]);
        y.extend(ROOT, &[e("d")]);
        x.merge(&y);
        assert_eq!(x.len(), 5);
    }

    #[test]
    fn observables_follow_program_observations() {
        let mut t = Trie::new();
        let s = Event::step("T1", "x:=1", 0, Some(("x", Value::Int(1))));
        let o = Event::step_obs("T1", "x:=1", 0, "x", Value::Int(1));
        t.extend(ROOT, &[s, o]);
        let set = TraceSet::from_trie(t);
        let obs = set.observables();
        assert_eq!(obs.len(), 2);
        assert!(obs.iter().any(|b| b.contains("T1", "x", 1)));
    }

    #[test]
    fn always_before_intersects_paths() {
        let mut t = Trie::new();
        t.extend(ROOT, &[e("a"), e("b"), e("c")]);
        t.extend(ROOT, &[e("b"), e("a"), e("c")]);
        let s = TraceSet::from_trie(t);
        let before = s.always_before();
        let k = |l: &str| e(l).key();
        assert_eq!(before[&k("c")], BTreeSet::from([k("a"), k("b")]));
        assert!(before[&k("a")].is_empty());
    }
}
