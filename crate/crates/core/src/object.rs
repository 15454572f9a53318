//! Object semantics: atomic specification runs, their histories, and the
//! fine-grained machines that run implementation operations.

use crate::events::{Event, History, Name, OpId, ThreadId, Value};
use crate::program::exec::{eval, eval_cond, loop_choice, At, Cursor, LoopChoice, Regs};
use crate::program::{ObjectDef, OpDef, Stmt, StmtKind, ValueDomain};
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------------------
// Specifications

/// Valuation of a specification's shared variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpecState {
    vals: Vec<(Name, Value)>,
}

impl SpecState {
    pub fn initial(spec: &ObjectDef, dom: &ValueDomain) -> Self {
        SpecState { vals: spec.shared.iter().map(|(n, v)| (n.clone(), Value::Int(dom.wrap(*v)))).collect() }
    }

    pub fn get(&self, var: &str) -> Option<Value> {
        self.vals.iter().find(|(n, _)| &**n == var).map(|(_, v)| *v)
    }

    fn set(&mut self, var: &str, v: Value) {
        if let Some(slot) = self.vals.iter_mut().find(|(n, _)| &**n == var) {
            slot.1 = v;
        }
    }
}

/// Result of applying a specification operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecOutcome {
    pub state: SpecState,
    pub output: Value,
    /// Whether the body stored to a shared variable.
    pub wrote: bool,
}

enum Flow {
    Next,
    Return(Value),
    Blocked,
}

struct SpecRun<'a> {
    state: SpecState,
    regs: Regs,
    param: Option<(&'a Name, Value)>,
    wrote: bool,
    dom: &'a ValueDomain,
}

impl SpecRun<'_> {
    fn block(&mut self, body: &[Stmt]) -> Flow {
        for s in body {
            let snapshot = self.state.clone();
            let mut read = |n: &Name| match self.param {
                Some((p, v)) if p == n => v,
                _ => snapshot.get(n).unwrap_or(Value::Bot),
            };
            match &s.kind {
                StmtKind::Assign { target, is_reg, expr } => {
                    let v = eval(expr, &self.regs, &mut read, self.dom);
                    if *is_reg {
                        self.regs.set(target, v);
                    } else {
                        self.state.set(target, v);
                        self.wrote = true;
                    }
                }
                StmtKind::Await(c) => {
                    if !eval_cond(c, &self.regs, &mut read, self.dom) {
                        return Flow::Blocked;
                    }
                }
                StmtKind::If { cond, then, els } => {
                    let taken = if eval_cond(cond, &self.regs, &mut read, self.dom) { then } else { els };
                    match self.block(taken) {
                        Flow::Next => {}
                        f => return f,
                    }
                }
                StmtKind::Return(e) => {
                    let v = e.as_ref().map(|e| eval(e, &self.regs, &mut read, self.dom)).unwrap_or(Value::Bot);
                    return Flow::Return(v);
                }
                StmtKind::Fence => {}
                StmtKind::While { .. } | StmtKind::Tas { .. } | StmtKind::Call { .. } => {
                    unreachable!("rejected by validation")
                }
            }
        }
        Flow::Next
    }
}

/// Applies `op` atomically. `None` when an `await` guard fails.
pub fn run_spec_op(op: &OpDef, input: Value, state: &SpecState, dom: &ValueDomain) -> Option<SpecOutcome> {
    let mut run = SpecRun {
        state: state.clone(),
        regs: Regs::default(),
        param: None,
        wrote: false,
        dom,
    };
    if let Some(p) = &op.param {
        if crate::program::is_register(p) {
            run.regs.set(p, input);
        } else {
            run.param = Some((p, input));
        }
    }
    let output = match run.block(&op.body) {
        Flow::Blocked => return None,
        Flow::Next => Value::Bot,
        Flow::Return(v) => v,
    };
    Some(SpecOutcome { state: run.state, output, wrote: run.wrote })
}

fn core_lookup(coremap: &[(ThreadId, Name)], t: &ThreadId) -> Name {
    coremap.iter().find(|(u, _)| u == t).map(|(_, c)| c.clone()).unwrap_or_else(|| t.0.clone())
}

/// Every invocation is preceded by the observation of each earlier
/// invocation made on a different core.
pub fn check_atomic(h: &History, coremap: &[(ThreadId, Name)]) -> bool {
    let mut open: Vec<(&OpId, Name)> = Vec::new();
    for e in h.events() {
        match e {
            Event::Inv { op, .. } => {
                let core = core_lookup(coremap, &op.thread);
                if open.iter().any(|(_, c)| *c != core) {
                    return false;
                }
                open.push((op, core));
            }
            Event::OpObs { op, .. } => open.retain(|(o, _)| *o != op),
            _ => {}
        }
    }
    true
}

/// Per-thread sequence of calls (operation name and input).
pub type CallPlan = Vec<(ThreadId, Vec<(Name, Value)>)>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    Idle,
    Invoked(OpId, Value),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct HistState {
    next: Vec<usize>,
    phase: Vec<Phase>,
    spec: SpecState,
    /// Invoked and not yet observed: operation, core, output once responded.
    open: Vec<(OpId, Name, Option<Value>)>,
}

/// The prefix-closed set of histories of `plan` running against the atomic
/// specification, with observations placed anywhere after their responses
/// as far as the atomicity axiom allows.
pub fn spec_histories(
    spec: &ObjectDef,
    plan: &CallPlan,
    coremap: &[(ThreadId, Name)],
    dom: &ValueDomain,
) -> BTreeSet<History> {
    let cores: Vec<Name> = plan.iter().map(|(t, _)| core_lookup(coremap, t)).collect();
    let init = HistState {
        next: vec![0; plan.len()],
        phase: vec![Phase::Idle; plan.len()],
        spec: SpecState::initial(spec, dom),
        open: Vec::new(),
    };
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![(init, Vec::<Event>::new())];
    while let Some((s, h)) = stack.pop() {
        if !seen.insert((s.clone(), h.clone())) {
            continue;
        }
        out.insert(History(crate::events::Trace::new(h.clone())));
        for (i, (thread, calls)) in plan.iter().enumerate() {
            match &s.phase[i] {
                Phase::Idle => {
                    let Some((name, input)) = calls.get(s.next[i]) else { continue };
                    if s.open.iter().any(|(_, c, _)| *c != cores[i]) {
                        continue;
                    }
                    let instance = calls[..s.next[i]].iter().filter(|(n, _)| n == name).count() as u32;
                    let id = OpId { thread: thread.clone(), call: name.clone(), instance };
                    let mut t = s.clone();
                    t.next[i] += 1;
                    t.phase[i] = Phase::Invoked(id.clone(), *input);
                    t.open.push((id.clone(), cores[i].clone(), None));
                    let mut h2 = h.clone();
                    h2.push(Event::Inv { op: id, input: *input });
                    stack.push((t, h2));
                }
                Phase::Invoked(id, input) => {
                    let Some(def) = spec.op(&id.call) else { continue };
                    let Some(r) = run_spec_op(def, *input, &s.spec, dom) else { continue };
                    let mut t = s.clone();
                    t.phase[i] = Phase::Idle;
                    t.spec = r.state;
                    let mut h2 = h.clone();
                    h2.push(Event::Res { op: id.clone(), output: r.output });
                    if r.wrote {
                        for o in t.open.iter_mut().filter(|(o, _, _)| o == id) {
                            o.2 = Some(r.output);
                        }
                    } else {
                        t.open.retain(|(o, _, _)| o != id);
                        out.insert(History(crate::events::Trace::new(h2.clone())));
                        h2.push(Event::OpObs { op: id.clone(), output: r.output });
                    }
                    stack.push((t, h2));
                }
            }
        }
        for (k, (id, _, out_v)) in s.open.iter().enumerate() {
            if let Some(v) = out_v {
                let mut t = s.clone();
                t.open.remove(k);
                let mut h2 = h.clone();
                h2.push(Event::OpObs { op: id.clone(), output: *v });
                stack.push((t, h2));
            }
        }
    }
    out
}

/// Extensions of `h` inside the specification's history set that only add
/// responses and observations of operations already invoked in `h`, and in
/// which every pending invocation of `h` has responded.
pub fn complete_history(
    spec: &ObjectDef,
    plan: &CallPlan,
    coremap: &[(ThreadId, Name)],
    dom: &ValueDomain,
    h: &History,
) -> BTreeSet<History> {
    let pending = h.pending();
    if pending.is_empty() {
        return BTreeSet::from([h.clone()]);
    }
    let invoked: BTreeSet<&OpId> = h.events().iter().filter_map(Event::op).collect();
    spec_histories(spec, plan, coremap, dom)
        .into_iter()
        .filter(|g| {
            let (ge, he) = (g.events(), h.events());
            ge.len() > he.len()
                && ge[..he.len()] == *he
                && ge[he.len()..]
                    .iter()
                    .all(|e| !matches!(e, Event::Inv { .. }) && e.op().is_some_and(|o| invoked.contains(o)))
                && pending.iter().all(|p| ge.iter().any(|e| matches!(e, Event::Res { op, .. } if op == p)))
        })
        .collect()
}

/// Histories whose pending invocations cannot all be completed.
pub fn blocked_completions(
    spec: &ObjectDef,
    plan: &CallPlan,
    coremap: &[(ThreadId, Name)],
    dom: &ValueDomain,
) -> Vec<History> {
    let all = spec_histories(spec, plan, coremap, dom);
    all.iter()
        .filter(|h| !h.pending().is_empty())
        .filter(|h| complete_history(spec, plan, coremap, dom, h).is_empty())
        .cloned()
        .collect()
}

// ---------------------------------------------------------------------------
// Implementations

/// What the memory model sees of its shared variables.
pub trait StorageView {
    /// The value `thread` reads for `var`.
    fn load(&self, thread: &ThreadId, var: &Name) -> Value;
    /// The value an atomic read-modify-write of `var` reads.
    fn load_atomic(&self, var: &Name) -> Value;
}

/// Memory effect of one implementation instruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Effect {
    /// Register or control-flow update only.
    Local,
    Store { var: Name, value: Value },
    /// Test-and-set; `stored` is set when the test succeeded. Carries a full fence.
    Tas { var: Name, read: Value, stored: Option<Value> },
    Fence,
    /// The operation responds with this value.
    Return(Value),
}

/// One active invocation of an implementation operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Invocation {
    pub op: OpId,
    cursor: Cursor,
    regs: Regs,
    param: Option<(Name, Value)>,
}

impl Invocation {
    pub fn start(def: &OpDef, op: OpId, input: Value) -> Self {
        let mut inv = Invocation { op, cursor: Cursor::new(&def.body), regs: Regs::default(), param: None };
        if let Some(p) = &def.param {
            if crate::program::is_register(p) {
                inv.regs.set(p, input);
            } else {
                inv.param = Some((p.clone(), input));
            }
        }
        inv
    }

    /// The next instruction, if enabled. `None` when blocked on an `await`
    /// or when a loop has used up its unrolling bound.
    pub fn step(&self, view: &dyn StorageView, bound: u32, dom: &ValueDomain) -> Option<(Invocation, Effect)> {
        let thread = &self.op.thread;
        let param = self.param.clone();
        let mut read = |n: &Name| match &param {
            Some((p, v)) if p == n => *v,
            _ => view.load(thread, n),
        };
        let mut next = self.clone();
        match self.cursor.at() {
            At::Done => Some((next, Effect::Return(Value::Bot))),
            At::LoopTest(b, i, iter) => {
                let StmtKind::While { cond, .. } = &b[i].kind else { unreachable!() };
                match loop_choice(eval_cond(cond, &self.regs, &mut read, dom), iter, bound) {
                    LoopChoice::Enter => next.cursor.loop_again(),
                    LoopChoice::Exit => next.cursor.loop_exit(),
                    LoopChoice::Truncate => return None,
                }
                Some((next, Effect::Local))
            }
            At::Stmt(b, i) => {
                let effect = match &b[i].kind {
                    StmtKind::Assign { target, is_reg, expr } => {
                        let v = eval(expr, &self.regs, &mut read, dom);
                        next.cursor.advance();
                        if *is_reg {
                            next.regs.set(target, v);
                            Effect::Local
                        } else {
                            Effect::Store { var: target.clone(), value: v }
                        }
                    }
                    StmtKind::Await(c) => {
                        if !eval_cond(c, &self.regs, &mut read, dom) {
                            return None;
                        }
                        next.cursor.advance();
                        Effect::Local
                    }
                    StmtKind::If { cond, then, els } => {
                        let taken = if eval_cond(cond, &self.regs, &mut read, dom) { then } else { els };
                        next.cursor.enter(taken);
                        Effect::Local
                    }
                    StmtKind::While { cond, .. } => {
                        match loop_choice(eval_cond(cond, &self.regs, &mut read, dom), 0, bound) {
                            LoopChoice::Enter => next.cursor.loop_start(),
                            LoopChoice::Exit => next.cursor.advance(),
                            LoopChoice::Truncate => return None,
                        }
                        Effect::Local
                    }
                    StmtKind::Fence => {
                        next.cursor.advance();
                        Effect::Fence
                    }
                    StmtKind::Return(e) => {
                        let v = e.as_ref().map(|e| eval(e, &self.regs, &mut read, dom)).unwrap_or(Value::Bot);
                        Effect::Return(v)
                    }
                    StmtKind::Tas { reg, var, expected, new } => {
                        let cur = view.load_atomic(var);
                        let hit = cur == Value::Int(dom.wrap(*expected));
                        next.regs.set(reg, Value::Int(hit as i64));
                        next.cursor.advance();
                        Effect::Tas { var: var.clone(), read: cur, stored: hit.then_some(Value::Int(dom.wrap(*new))) }
                    }
                    StmtKind::Call { .. } => unreachable!("rejected by validation"),
                };
                Some((next, effect))
            }
        }
    }
}

/// The active invocations of an implementation object, at most one per thread.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ImplMachine {
    pub active: BTreeMap<ThreadId, Invocation>,
    pub bound: u32,
    pub domain: ValueDomain,
}

impl ImplMachine {
    pub fn new(bound: u32, domain: ValueDomain) -> Self {
        ImplMachine { active: BTreeMap::new(), bound, domain }
    }

    pub fn invoke(&mut self, def: &OpDef, op: OpId, input: Value) {
        self.active.insert(op.thread.clone(), Invocation::start(def, op, input));
    }
}

/// Every enabled instruction of every active invocation. A returning
/// invocation leaves the machine.
pub fn impl_step(m: &ImplMachine, view: &dyn StorageView) -> Vec<(ImplMachine, OpId, Effect)> {
    let mut out = Vec::new();
    for (t, inv) in &m.active {
        if let Some((next, effect)) = inv.step(view, m.bound, &m.domain) {
            let mut m2 = m.clone();
            if matches!(effect, Effect::Return(_)) {
                m2.active.remove(t);
            } else {
                m2.active.insert(t.clone(), next);
            }
            out.push((m2, inv.op.clone(), effect));
        }
    }
    out
}
