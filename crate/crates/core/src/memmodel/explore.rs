//! The transition system of a client composed with an object under a
//! storage model, and its exhaustive bounded exploration.

use super::storage::{Origin, Store};
use super::trie::{NodeId, Trie, TraceSet, ROOT};
use super::{ExploreConfig, ModelId};
use crate::events::{Event, Name, OpId, StepId, ThreadId, Value};
use crate::object::{run_spec_op, Effect, Invocation, SpecState, StorageView};
use crate::program::exec::{eval, eval_cond, loop_choice, At, Counters, Cursor, LoopChoice, Regs};
use crate::program::{ClientProgram, ObjectDef, ObjectKind, StmtKind};
use rayon::prelude::*;
use std::collections::HashSet;

pub(crate) struct Ctx<'a> {
    prog: &'a ClientProgram,
    obj: &'a ObjectDef,
    cfg: &'a ExploreConfig,
    globals: Vec<Name>,
    objvars: Vec<Name>,
    /// Core index of each thread.
    core: Vec<usize>,
    cores: usize,
}

impl<'a> Ctx<'a> {
    pub(crate) fn new(prog: &'a ClientProgram, obj: &'a ObjectDef, cfg: &'a ExploreConfig) -> Self {
        let map = cfg.coremap.clone().unwrap_or_else(|| prog.coremap());
        let mut names: Vec<Name> = Vec::new();
        let core = prog
            .threads
            .iter()
            .map(|t| {
                let c = map.iter().find(|(u, _)| *u == t.id).map(|(_, c)| c.clone()).unwrap_or_else(|| t.id.0.clone());
                match names.iter().position(|n| *n == c) {
                    Some(i) => i,
                    None => {
                        names.push(c);
                        names.len() - 1
                    }
                }
            })
            .collect();
        let objvars = match obj.kind {
            ObjectKind::Impl => obj.shared.iter().map(|(n, _)| n.clone()).collect(),
            ObjectKind::Spec => Vec::new(),
        };
        Ctx {
            prog,
            obj,
            cfg,
            globals: prog.globals.iter().map(|(n, _)| n.clone()).collect(),
            objvars,
            core,
            cores: names.len().max(1),
        }
    }

    pub(crate) fn core_count(&self) -> usize {
        self.cores
    }

    fn gvar(&self, n: &str) -> u16 {
        self.globals.iter().position(|g| &**g == n).expect("validated global") as u16
    }

    fn ovar(&self, n: &str) -> u16 {
        (self.globals.len() + self.objvars.iter().position(|g| &**g == n).expect("validated object variable")) as u16
    }

    fn thread_index(&self, t: &ThreadId) -> usize {
        self.prog.threads.iter().position(|d| d.id == *t).expect("known thread")
    }

    fn initial(&self) -> Sys {
        let dom = &self.cfg.domain;
        let mut init: Vec<Value> = self.prog.globals.iter().map(|(_, v)| Value::Int(dom.wrap(*v))).collect();
        if self.obj.kind == ObjectKind::Impl {
            init.extend(self.obj.shared.iter().map(|(_, v)| Value::Int(dom.wrap(*v))));
        }
        let store = match self.cfg.model {
            ModelId::Sc => Store::sc(init),
            ModelId::Tso => Store::tso(init, self.cores, self.cfg.buffer),
            ModelId::Relaxed => Store::relaxed(init, self.cores),
        };
        Sys {
            threads: self
                .prog
                .threads
                .iter()
                .map(|t| Th {
                    cursor: Cursor::new(&t.body),
                    regs: Regs::default(),
                    steps: Counters::default(),
                    ops: Counters::default(),
                    call: None,
                })
                .collect(),
            store,
            spec: (self.obj.kind == ObjectKind::Spec).then(|| SpecState::initial(self.obj, dom)),
            open: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Call {
    op: OpId,
    input: Value,
    result: Option<Name>,
    /// Running implementation code; `None` for an atomic operation awaiting its response.
    imp: Option<Invocation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Th {
    cursor: Cursor,
    regs: Regs,
    steps: Counters,
    ops: Counters,
    call: Option<Call>,
}

/// An invoked operation whose observation has not happened yet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Open {
    op: OpId,
    core: usize,
    /// Set once the operation has responded.
    output: Option<Value>,
    /// Implementation stores not yet visible to every core.
    writes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Sys {
    threads: Vec<Th>,
    store: Store,
    spec: Option<SpecState>,
    open: Vec<Open>,
}

struct View<'a, 'b> {
    ctx: &'a Ctx<'b>,
    store: &'a Store,
}

impl StorageView for View<'_, '_> {
    fn load(&self, thread: &ThreadId, var: &Name) -> Value {
        self.store.load(self.ctx.core[self.ctx.thread_index(thread)], self.ctx.ovar(var))
    }

    fn load_atomic(&self, var: &Name) -> Value {
        self.store.load_atomic(self.ctx.ovar(var))
    }
}

impl Sys {
    fn reveal(&mut self, origins: Vec<Origin>, out: &mut Vec<Event>) {
        for o in origins {
            match o {
                Origin::Step(step, var, value) => out.push(Event::ProgObs { step, var, value }),
                Origin::Marker(op, output) => {
                    self.open.retain(|x| x.op != op);
                    out.push(Event::OpObs { op, output });
                }
                Origin::Op(op) => {
                    let Some(k) = self.open.iter().position(|x| x.op == op) else { continue };
                    self.open[k].writes -= 1;
                    if let (0, Some(output)) = (self.open[k].writes, self.open[k].output) {
                        self.open.remove(k);
                        out.push(Event::OpObs { op, output });
                    }
                }
            }
        }
    }

    fn step_id(&mut self, i: usize, label: String, ctx: &Ctx) -> StepId {
        let label: Name = label.into();
        let instance = self.threads[i].steps.next(&label);
        StepId { thread: ctx.prog.threads[i].id.clone(), label, instance }
    }

    pub(crate) fn successors(&self, ctx: &Ctx) -> Vec<(Sys, Vec<Event>)> {
        let mut out = Vec::new();
        for i in 0..self.threads.len() {
            match &self.threads[i].call {
                None => self.client_step(i, ctx, &mut out),
                Some(c) if c.imp.is_none() => self.spec_response(i, ctx, &mut out),
                Some(_) => self.impl_step(i, ctx, &mut out),
            }
        }
        for (store, origins) in self.store.steps() {
            let mut next = Sys { store, ..self.clone() };
            let mut ev = Vec::new();
            next.reveal(origins, &mut ev);
            out.push((next, ev));
        }
        out
    }

    fn client_step(&self, i: usize, ctx: &Ctx, out: &mut Vec<(Sys, Vec<Event>)>) {
        let core = ctx.core[i];
        let dom = &ctx.cfg.domain;
        let th = &self.threads[i];
        let mut read = |n: &Name| self.store.load(core, ctx.gvar(n));
        match th.cursor.at() {
            At::Done => {}
            At::LoopTest(b, idx, iter) => {
                let StmtKind::While { cond, .. } = &b[idx].kind else { unreachable!() };
                let choice = loop_choice(eval_cond(cond, &th.regs, &mut read, dom), iter, ctx.cfg.unroll);
                if matches!(choice, LoopChoice::Truncate) {
                    return;
                }
                let mut next = self.clone();
                let step = next.step_id(i, b[idx].kind.step_label().unwrap(), ctx);
                match choice {
                    LoopChoice::Enter => next.threads[i].cursor.loop_again(),
                    _ => next.threads[i].cursor.loop_exit(),
                }
                out.push((next, vec![Event::ProgStep { step, write: None }]));
            }
            At::Stmt(b, idx) => {
                let s = &b[idx];
                let label = || s.kind.step_label().unwrap();
                match &s.kind {
                    StmtKind::Assign { target, is_reg, expr } => {
                        let v = eval(expr, &th.regs, &mut read, dom);
                        if !*is_reg && !self.store.can_issue(core) {
                            return;
                        }
                        let mut next = self.clone();
                        let step = next.step_id(i, label(), ctx);
                        next.threads[i].cursor.advance();
                        if *is_reg {
                            next.threads[i].regs.set(target, v);
                            out.push((next, vec![Event::ProgStep { step, write: None }]));
                        } else {
                            let mut ev = vec![Event::ProgStep { step: step.clone(), write: Some((target.clone(), v)) }];
                            let vis = next.store.write(core, ctx.gvar(target), v, Origin::Step(step, target.clone(), v));
                            next.reveal(vis, &mut ev);
                            out.push((next, ev));
                        }
                    }
                    StmtKind::Await(c) => {
                        if eval_cond(c, &th.regs, &mut read, dom) {
                            let mut next = self.clone();
                            let step = next.step_id(i, label(), ctx);
                            next.threads[i].cursor.advance();
                            out.push((next, vec![Event::ProgStep { step, write: None }]));
                        }
                    }
                    StmtKind::If { cond, then, els } => {
                        let taken = if eval_cond(cond, &th.regs, &mut read, dom) { then } else { els };
                        let mut next = self.clone();
                        let step = next.step_id(i, label(), ctx);
                        next.threads[i].cursor.enter(taken);
                        out.push((next, vec![Event::ProgStep { step, write: None }]));
                    }
                    StmtKind::While { cond, .. } => {
                        let choice = loop_choice(eval_cond(cond, &th.regs, &mut read, dom), 0, ctx.cfg.unroll);
                        if matches!(choice, LoopChoice::Truncate) {
                            return;
                        }
                        let mut next = self.clone();
                        let step = next.step_id(i, label(), ctx);
                        match choice {
                            LoopChoice::Enter => next.threads[i].cursor.loop_start(),
                            _ => next.threads[i].cursor.advance(),
                        }
                        out.push((next, vec![Event::ProgStep { step, write: None }]));
                    }
                    StmtKind::Fence => {
                        if self.store.quiescent(core) {
                            let mut next = self.clone();
                            let step = next.step_id(i, label(), ctx);
                            next.threads[i].cursor.advance();
                            out.push((next, vec![Event::ProgStep { step, write: None }]));
                        }
                    }
                    StmtKind::Call { op, arg, result } => {
                        let spec = ctx.obj.kind == ObjectKind::Spec;
                        if spec && self.open.iter().any(|o| o.core != core) {
                            return;
                        }
                        let input = arg.as_ref().map(|a| eval(a, &th.regs, &mut read, dom)).unwrap_or(Value::Bot);
                        let mut next = self.clone();
                        let instance = next.threads[i].ops.next(op);
                        let id = OpId { thread: ctx.prog.threads[i].id.clone(), call: op.clone(), instance };
                        let def = ctx.obj.op(op).expect("validated operation");
                        next.threads[i].cursor.advance();
                        next.threads[i].call = Some(Call {
                            op: id.clone(),
                            input,
                            result: result.clone(),
                            imp: (!spec).then(|| Invocation::start(def, id.clone(), input)),
                        });
                        next.open.push(Open { op: id.clone(), core, output: None, writes: 0 });
                        out.push((next, vec![Event::Inv { op: id, input }]));
                    }
                    StmtKind::Return(_) | StmtKind::Tas { .. } => unreachable!("rejected by validation"),
                }
            }
        }
    }

    fn finish_call(&mut self, i: usize, output: Value, ev: &mut Vec<Event>) -> OpId {
        let call = self.threads[i].call.take().expect("active call");
        if let Some(r) = &call.result {
            self.threads[i].regs.set(r, output);
        }
        ev.push(Event::Res { op: call.op.clone(), output });
        if let Some(o) = self.open.iter_mut().find(|o| o.op == call.op) {
            o.output = Some(output);
        }
        call.op
    }

    fn observe_if_done(&mut self, op: &OpId, ev: &mut Vec<Event>) {
        if let Some(k) = self.open.iter().position(|o| o.op == *op && o.writes == 0) {
            let output = self.open[k].output.expect("responded");
            self.open.remove(k);
            ev.push(Event::OpObs { op: op.clone(), output });
        }
    }

    fn spec_response(&self, i: usize, ctx: &Ctx, out: &mut Vec<(Sys, Vec<Event>)>) {
        let core = ctx.core[i];
        let call = self.threads[i].call.as_ref().unwrap();
        let def = ctx.obj.op(&call.op.call).expect("validated operation");
        let Some(r) = run_spec_op(def, call.input, self.spec.as_ref().unwrap(), &ctx.cfg.domain) else { return };
        if r.wrote && !self.store.can_issue(core) {
            return;
        }
        let mut next = self.clone();
        next.spec = Some(r.state);
        let mut ev = Vec::new();
        let op = next.finish_call(i, r.output, &mut ev);
        if r.wrote {
            let vis = next.store.marker(core, Origin::Marker(op, r.output));
            next.reveal(vis, &mut ev);
        } else {
            next.observe_if_done(&op, &mut ev);
        }
        out.push((next, ev));
    }

    fn impl_step(&self, i: usize, ctx: &Ctx, out: &mut Vec<(Sys, Vec<Event>)>) {
        let core = ctx.core[i];
        let call = self.threads[i].call.as_ref().unwrap();
        let inv = call.imp.as_ref().unwrap();
        let view = View { ctx, store: &self.store };
        let Some((inv2, effect)) = inv.step(&view, ctx.cfg.unroll, &ctx.cfg.domain) else { return };
        let enabled = match &effect {
            Effect::Store { .. } => self.store.can_issue(core),
            Effect::Tas { .. } | Effect::Fence => self.store.quiescent(core),
            Effect::Local | Effect::Return(_) => true,
        };
        if !enabled {
            return;
        }
        let mut next = self.clone();
        let mut ev = Vec::new();
        match effect {
            Effect::Return(v) => {
                let op = next.finish_call(i, v, &mut ev);
                next.observe_if_done(&op, &mut ev);
            }
            other => {
                let op = inv2.op.clone();
                next.threads[i].call.as_mut().unwrap().imp = Some(inv2);
                match other {
                    Effect::Store { var, value } => {
                        if let Some(o) = next.open.iter_mut().find(|o| o.op == op) {
                            o.writes += 1;
                        }
                        let vis = next.store.write(core, ctx.ovar(&var), value, Origin::Op(op));
                        next.reveal(vis, &mut ev);
                    }
                    Effect::Tas { var, stored: Some(v), .. } => next.store.atomic_write(ctx.ovar(&var), v),
                    _ => {}
                }
            }
        }
        out.push((next, ev));
    }
}

fn dfs(ctx: &Ctx, roots: Vec<(Sys, Vec<Event>)>) -> Trie {
    let mut trie = Trie::new();
    let mut seen: HashSet<(Sys, NodeId)> = HashSet::new();
    let mut stack: Vec<(Sys, NodeId)> = Vec::new();
    for (s, prefix) in roots {
        let n = trie.extend(ROOT, &prefix);
        if seen.insert((s.clone(), n)) {
            stack.push((s, n));
        }
    }
    while let Some((s, n)) = stack.pop() {
        for (next, ev) in s.successors(ctx) {
            let m = trie.extend(n, &ev);
            if !seen.contains(&(next.clone(), m)) {
                seen.insert((next.clone(), m));
                stack.push((next, m));
            }
        }
    }
    trie
}

/// Explores from the initial state; with several workers the first levels
/// are expanded breadth-first and the frontier is split between them.
pub(crate) fn run(ctx: &Ctx) -> TraceSet {
    let init = (ctx.initial(), Vec::new());
    let workers = ctx.cfg.workers.max(1);
    if workers == 1 {
        return TraceSet::from_trie(dfs(ctx, vec![init]));
    }
    let mut top = Trie::new();
    let mut frontier = vec![init];
    for _ in 0..8 {
        if frontier.is_empty() || frontier.len() >= workers * 4 {
            break;
        }
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for (s, prefix) in frontier {
            top.extend(ROOT, &prefix);
            for (t, ev) in s.successors(ctx) {
                let mut p = prefix.clone();
                p.extend(ev);
                if seen.insert((t.clone(), p.clone())) {
                    next.push((t, p));
                }
            }
        }
        frontier = next;
    }
    let chunk = frontier.len().div_ceil(workers).max(1);
    let mut parts: Vec<Vec<(Sys, Vec<Event>)>> = Vec::new();
    let mut it = frontier.into_iter().peekable();
    while it.peek().is_some() {
        parts.push(it.by_ref().take(chunk).collect());
    }
    let tries: Vec<Trie> = parts.into_par_iter().map(|p| dfs(ctx, p)).collect();
    for t in &tries {
        top.merge(t);
    }
    TraceSet::from_trie(top)
}
