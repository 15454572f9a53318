//! Graphviz rendering of enforced orders and traces.

use crate::events::{EventKey, Trace};
use crate::porder::EnforcedOrder;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

fn base_label(k: &EventKey) -> String {
    match k {
        EventKey::Step(s) => s.label.to_string(),
        EventKey::StepObs(s) => format!("obs_{{{}}}", s.label),
        EventKey::Inv(o) => format!("inv_{}", o.call),
        EventKey::Res(o) => format!("res_{}", o.call),
        EventKey::OpObs(o) => format!("obs_{}", o.call),
    }
}

fn instance(k: &EventKey) -> u32 {
    match k {
        EventKey::Step(s) | EventKey::StepObs(s) => s.instance,
        EventKey::Inv(o) | EventKey::Res(o) | EventKey::OpObs(o) => o.instance,
    }
}

/// Node labels for `keys`, qualified by thread and instance where the short
/// label is ambiguous.
pub fn labels<'a>(keys: impl IntoIterator<Item = &'a EventKey>) -> BTreeMap<EventKey, String> {
    let keys: Vec<&EventKey> = keys.into_iter().collect();
    let mut count: BTreeMap<String, usize> = BTreeMap::new();
    for k in &keys {
        *count.entry(base_label(k)).or_default() += 1;
    }
    keys.into_iter()
        .map(|k| {
            let b = base_label(k);
            let l = if count[&b] > 1 { format!("{b}@{}#{}", k.thread(), instance(k)) } else { b };
            (k.clone(), l)
        })
        .collect()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn render(nodes: &[String], edges: &BTreeSet<(usize, usize)>) -> String {
    let mut out = String::from("digraph order {\n  rankdir=TB;\n  node [shape=plaintext];\n");
    for (i, l) in nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label={}];", quote(l));
    }
    for (a, b) in edges {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\n");
    out
}

/// The transitive reduction of `po` as a DOT digraph.
pub fn render_order(po: &EnforcedOrder) -> String {
    let names = labels(po.universe());
    let index: BTreeMap<&EventKey, usize> = po.universe().iter().enumerate().map(|(i, k)| (k, i)).collect();
    let nodes: Vec<String> = po.universe().iter().map(|k| names[k].clone()).collect();
    let edges = po.transitive_reduction().iter().map(|(a, b)| (index[a], index[b])).collect();
    render(&nodes, &edges)
}

/// The total order of `t` as a DOT chain.
pub fn render_trace(t: &Trace) -> String {
    let keys: Vec<EventKey> = t.iter().map(|e| e.key()).collect();
    let names = labels(&keys);
    let nodes: Vec<String> = keys.iter().map(|k| names[k].clone()).collect();
    let edges = (1..nodes.len()).map(|i| (i - 1, i)).collect();
    render(&nodes, &edges)
}
