//! Storage subsystems. Variables are dense indices; cores are dense indices.

use crate::events::{Name, OpId, StepId, Value};
use std::collections::VecDeque;

/// What a buffered entry makes visible once every core has it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    /// A program write.
    Step(StepId, Name, Value),
    /// A store performed inside an implementation operation.
    Op(OpId),
    /// The effect of an atomic specification operation.
    Marker(OpId, Value),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Entry {
    var: Option<u16>,
    value: Value,
    origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tso {
    mem: Vec<Value>,
    buf: Vec<VecDeque<Entry>>,
    cap: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Pending {
    core: u16,
    entry: Entry,
    co: u32,
    /// Bit per core that has received the write.
    seen: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relaxed {
    /// Per core, per variable: coherence index and value of the newest write received.
    view: Vec<Vec<(u32, Value)>>,
    /// Per variable: the coherence-latest write.
    latest: Vec<(u32, Value)>,
    /// Writes and markers not yet received by every core, in issue order.
    pending: Vec<Pending>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Store {
    Sc(Vec<Value>),
    Tso(Tso),
    Relaxed(Relaxed),
}

impl Store {
    pub fn sc(init: Vec<Value>) -> Self {
        Store::Sc(init)
    }

    pub fn tso(init: Vec<Value>, cores: usize, cap: usize) -> Self {
        Store::Tso(Tso { mem: init, buf: vec![VecDeque::new(); cores], cap })
    }

    pub fn relaxed(init: Vec<Value>, cores: usize) -> Self {
        assert!(cores <= 64, "at most 64 cores");
        let base: Vec<(u32, Value)> = init.iter().map(|v| (0, *v)).collect();
        Store::Relaxed(Relaxed { view: vec![base.clone(); cores], latest: base, pending: Vec::new() })
    }

    fn cores(&self) -> usize {
        match self {
            Store::Sc(_) => 1,
            Store::Tso(t) => t.buf.len(),
            Store::Relaxed(r) => r.view.len(),
        }
    }

    /// The value core `core` reads for `var`.
    pub fn load(&self, core: usize, var: u16) -> Value {
        match self {
            Store::Sc(m) => m[var as usize],
            Store::Tso(t) => t.buf[core]
                .iter()
                .rev()
                .find(|e| e.var == Some(var))
                .map(|e| e.value)
                .unwrap_or(t.mem[var as usize]),
            Store::Relaxed(r) => r.view[core][var as usize].1,
        }
    }

    /// The value an atomic read-modify-write reads.
    pub fn load_atomic(&self, var: u16) -> Value {
        match self {
            Store::Sc(m) => m[var as usize],
            Store::Tso(t) => t.mem[var as usize],
            Store::Relaxed(r) => r.latest[var as usize].1,
        }
    }

    /// Whether `core` may issue another buffered entry.
    pub fn can_issue(&self, core: usize) -> bool {
        match self {
            Store::Tso(t) => t.buf[core].len() < t.cap,
            _ => true,
        }
    }

    /// Whether every entry `core` issued is visible to all cores.
    pub fn quiescent(&self, core: usize) -> bool {
        match self {
            Store::Sc(_) => true,
            Store::Tso(t) => t.buf[core].is_empty(),
            Store::Relaxed(r) => r.pending.iter().all(|p| p.core as usize != core),
        }
    }

    /// Issues a write; returns the origins that became visible to all cores.
    pub fn write(&mut self, core: usize, var: u16, value: Value, origin: Origin) -> Vec<Origin> {
        self.issue(core, Entry { var: Some(var), value, origin })
    }

    /// Issues a visibility marker for an atomic operation.
    pub fn marker(&mut self, core: usize, origin: Origin) -> Vec<Origin> {
        self.issue(core, Entry { var: None, value: Value::Bot, origin })
    }

    fn issue(&mut self, core: usize, entry: Entry) -> Vec<Origin> {
        let all = all_cores(self.cores());
        match self {
            Store::Sc(m) => {
                if let Some(v) = entry.var {
                    m[v as usize] = entry.value;
                }
                vec![entry.origin]
            }
            Store::Tso(t) => {
                t.buf[core].push_back(entry);
                Vec::new()
            }
            Store::Relaxed(r) => {
                let co = match entry.var {
                    Some(v) => {
                        let co = r.latest[v as usize].0 + 1;
                        r.latest[v as usize] = (co, entry.value);
                        r.view[core][v as usize] = (co, entry.value);
                        co
                    }
                    None => 0,
                };
                let seen = 1u64 << core;
                let blocked = r.pending.iter().any(|p| p.core as usize == core);
                if entry.var.is_some() && seen == all || entry.var.is_none() && !blocked {
                    return vec![entry.origin];
                }
                r.pending.push(Pending { core: core as u16, entry, co, seen });
                Vec::new()
            }
        }
    }

    /// Atomic store that is at once visible to every core. The caller
    /// ensures the issuing core is quiescent.
    pub fn atomic_write(&mut self, var: u16, value: Value) {
        match self {
            Store::Sc(m) => m[var as usize] = value,
            Store::Tso(t) => t.mem[var as usize] = value,
            Store::Relaxed(r) => {
                let co = r.latest[var as usize].0 + 1;
                r.latest[var as usize] = (co, value);
                for view in &mut r.view {
                    view[var as usize] = (co, value);
                }
            }
        }
    }

    /// Every enabled storage action with the origins it makes visible.
    pub fn steps(&self) -> Vec<(Store, Vec<Origin>)> {
        let mut out = Vec::new();
        match self {
            Store::Sc(_) => {}
            Store::Tso(t) => {
                for (c, q) in t.buf.iter().enumerate() {
                    let Some(head) = q.front() else { continue };
                    let mut t2 = t.clone();
                    t2.buf[c].pop_front();
                    if let Some(v) = head.var {
                        t2.mem[v as usize] = head.value;
                    }
                    out.push((Store::Tso(t2), vec![head.origin.clone()]));
                }
            }
            Store::Relaxed(r) => {
                let all = all_cores(r.view.len());
                for (k, p) in r.pending.iter().enumerate() {
                    match p.entry.var {
                        None => {
                            if r.pending[..k].iter().any(|q| q.core == p.core) {
                                continue;
                            }
                            let mut r2 = r.clone();
                            r2.pending.remove(k);
                            out.push((Store::Relaxed(r2), vec![p.entry.origin.clone()]));
                        }
                        Some(v) => {
                            for c in 0..r.view.len() {
                                if p.seen & (1 << c) != 0 {
                                    continue;
                                }
                                let mut r2 = r.clone();
                                let slot = &mut r2.view[c][v as usize];
                                if slot.0 < p.co {
                                    *slot = (p.co, p.entry.value);
                                }
                                let seen = p.seen | (1 << c);
                                if seen == all {
                                    r2.pending.remove(k);
                                    out.push((Store::Relaxed(r2), vec![p.entry.origin.clone()]));
                                } else {
                                    r2.pending[k].seen = seen;
                                    out.push((Store::Relaxed(r2), Vec::new()));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn all_cores(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(l: &str) -> Origin {
        Origin::Step(StepId::new("T1", l, 0), "x".into(), Value::Bot)
    }

    fn ints(v: &[i64]) -> Vec<Value> {
        v.iter().map(|&i| Value::Int(i)).collect()
    }

    #[test]
    fn sc_writes_are_visible_at_once() {
        let mut s = Store::sc(ints(&[0]));
        assert_eq!(s.write(0, 0, 1.into(), o("a")), vec![o("a")]);
        assert_eq!(s.load(0, 0), Value::Int(1));
        assert!(s.steps().is_empty());
    }

    #[test]
    fn tso_reads_own_buffer_and_flushes_in_order() {
        let mut s = Store::tso(ints(&[0, 0]), 2, 2);
        assert!(s.write(0, 0, 1.into(), o("a")).is_empty());
        s.write(0, 1, 2.into(), o("b"));
        assert_eq!((s.load(0, 0), s.load(1, 0)), (Value::Int(1), Value::Int(0)));
        assert!(!s.can_issue(0) && s.can_issue(1));
        assert!(!s.quiescent(0));
        let steps = s.steps();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].1, vec![o("a")]);
        let s1 = &steps[0].0;
        assert_eq!(s1.load(1, 0), Value::Int(1));
        assert_eq!(s1.load(1, 1), Value::Int(0));
        assert_eq!(s1.steps()[0].1, vec![o("b")]);
    }

    #[test]
    fn relaxed_write_reaches_cores_one_by_one() {
        let mut s = Store::relaxed(ints(&[0]), 3);
        assert!(s.write(0, 0, 1.into(), o("a")).is_empty());
        assert_eq!(s.load(0, 0), Value::Int(1));
        assert_eq!(s.load(1, 0), Value::Int(0));
        assert_eq!(s.load_atomic(0), Value::Int(1));
        let steps = s.steps();
        assert_eq!(steps.len(), 2);
        assert!(steps.iter().all(|(_, v)| v.is_empty()));
        let (s1, _) = &steps[0];
        assert_eq!(s1.load(1, 0), Value::Int(1));
        let last = s1.steps();
        assert_eq!(last.len(), 1);
        assert_eq!(last[0].1, vec![o("a")]);
        assert!(last[0].0.quiescent(0));
    }

    #[test]
    fn relaxed_views_never_go_back_in_coherence_order() {
        let mut s = Store::relaxed(ints(&[0]), 2);
        s.write(0, 0, 1.into(), o("a"));
        s.write(1, 0, 2.into(), o("b"));
        // core 0 receives the newer write of core 1, then the older one arrives late
        let s = s.steps().into_iter().find(|(st, _)| st.load(0, 0) == Value::Int(2)).unwrap().0;
        let s = s.steps().into_iter().find(|(_, v)| v == &vec![o("a")]).unwrap().0;
        assert_eq!(s.load(1, 0), Value::Int(2));
        assert_eq!(s.load(0, 0), Value::Int(2));
    }

    #[test]
    fn relaxed_marker_waits_for_older_writes() {
        let mut s = Store::relaxed(ints(&[0]), 2);
        let m = Origin::Marker(OpId::new("T1", "r", 0), Value::Bot);
        assert_eq!(s.marker(0, m.clone()), vec![m.clone()]);
        s.write(0, 0, 1.into(), o("a"));
        assert!(s.marker(0, m.clone()).is_empty());
        let steps = s.steps();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].1, vec![o("a")]);
        assert_eq!(steps[0].0.steps()[0].1, vec![m]);
    }

    #[test]
    fn relaxed_single_core_is_immediate() {
        let mut s = Store::relaxed(ints(&[0]), 1);
        assert_eq!(s.write(0, 0, 3.into(), o("a")), vec![o("a")]);
    }

    #[test]
    fn atomic_write_reaches_everyone() {
        let mut s = Store::relaxed(ints(&[1]), 2);
        s.atomic_write(0, 0.into());
        assert_eq!((s.load(0, 0), s.load(1, 0)), (Value::Int(0), Value::Int(0)));
        let mut t = Store::tso(ints(&[1]), 2, 4);
        t.atomic_write(0, 0.into());
        assert_eq!(t.load(1, 0), Value::Int(0));
    }
}
