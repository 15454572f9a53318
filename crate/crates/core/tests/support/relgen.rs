//! Random enforced-order relations closed under the axioms' required pairs.
#![allow(dead_code)]

use rand::Rng;
use std::collections::BTreeSet;
use wmtr_core::events::{EventKey, OpId, StepId};
use wmtr_core::porder::{op_events, transitive_closure, EnforcedOrder};

pub fn op(t: &str, c: &str) -> OpId {
    OpId::new(t, c, 0)
}

/// Universe with two or three operations on two threads plus program steps.
pub fn random_universe(rng: &mut impl Rng) -> (BTreeSet<EventKey>, Vec<OpId>) {
    let mut ops = vec![op("T1", "a"), op("T2", "b")];
    if rng.gen_bool(0.5) {
        ops.push(op("T1", "c"));
    }
    let mut u = BTreeSet::new();
    for o in &ops {
        u.extend(op_events(o));
    }
    for i in 0..rng.gen_range(1..4u32) {
        let s = StepId::new(if i % 2 == 0 { "T1" } else { "T2" }, "s", i);
        u.insert(EventKey::Step(s.clone()));
        if rng.gen_bool(0.5) {
            u.insert(EventKey::StepObs(s));
        }
    }
    (u, ops)
}

fn saturate(ops: &[OpId], u: &BTreeSet<EventKey>, mut pairs: BTreeSet<(EventKey, EventKey)>) -> BTreeSet<(EventKey, EventKey)> {
    loop {
        pairs = transitive_closure(pairs);
        let mut add = Vec::new();
        for c in ops {
            let [inv, res, obs] = op_events(c);
            for e in u {
                if *e != inv && *e != res {
                    if pairs.contains(&(inv.clone(), e.clone())) {
                        add.push((res.clone(), e.clone()));
                    }
                    if pairs.contains(&(e.clone(), res.clone())) {
                        add.push((e.clone(), inv.clone()));
                    }
                }
                if e.is_program() && pairs.contains(&(e.clone(), obs.clone())) {
                    add.push((e.clone(), inv.clone()));
                }
            }
            for d in ops.iter().filter(|d| *d != c) {
                for e in op_events(c) {
                    if pairs.contains(&(e, EventKey::OpObs(d.clone()))) {
                        add.push((res.clone(), EventKey::Inv(d.clone())));
                    }
                }
            }
        }
        let before = pairs.len();
        pairs.extend(add);
        if pairs.len() == before {
            return pairs;
        }
    }
}

/// A random relation closed under the axioms' required pairs, containing
/// the per-operation inv < res < obs pairs. `None` if saturation created a
/// cycle.
pub fn random_axiom_relation(rng: &mut impl Rng) -> Option<EnforcedOrder> {
    let (u, ops) = random_universe(rng);
    let keys: Vec<EventKey> = u.iter().cloned().collect();
    let mut pairs = BTreeSet::new();
    for o in &ops {
        let [i, r, b] = op_events(o);
        pairs.insert((i.clone(), r.clone()));
        pairs.insert((r, b));
    }
    for k in u.iter().filter_map(|k| match k {
        EventKey::StepObs(s) => Some(s.clone()),
        _ => None,
    }) {
        pairs.insert((EventKey::Step(k.clone()), EventKey::StepObs(k)));
    }
    for _ in 0..rng.gen_range(0..5) {
        let a = &keys[rng.gen_range(0..keys.len())];
        let b = &keys[rng.gen_range(0..keys.len())];
        if a != b {
            pairs.insert((a.clone(), b.clone()));
        }
    }
    let pairs = saturate(&ops, &u, pairs);
    if pairs.iter().any(|(a, b)| a == b) {
        return None;
    }
    EnforcedOrder::new(u, pairs).ok()
}
