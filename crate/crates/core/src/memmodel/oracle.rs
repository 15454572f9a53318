//! Reference semantics for small straight-line programs under SC, written
//! independently of the explorer: interleavings of each thread's fixed
//! event skeleton, filtered by sequential data validity.

use super::{ExploreConfig, ModelId};
use crate::events::{Event, Name, OpId, StepId, Trace, Value};
use crate::object::{run_spec_op, SpecState};
use crate::program::exec::{eval, eval_cond, Regs};
use crate::program::{validate, ClientProgram, Cond, Expr, ObjectDef, ObjectKind, StmtKind};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Largest number of events in a complete run the oracle accepts.
pub const ORACLE_CAP: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("the oracle only handles SC")]
    Model,
    #[error("the oracle only handles straight-line code: {0}")]
    Unsupported(String),
    #[error("{0} events exceed the oracle cap of {ORACLE_CAP}")]
    TooLarge(usize),
    #[error(transparent)]
    Program(#[from] crate::program::SemanticError),
}

#[derive(Clone)]
enum Item {
    Write { step: StepId, var: Name, expr: Expr },
    SetReg { step: StepId, reg: Name, expr: Expr },
    Await { step: StepId, cond: Cond },
    Fence { step: StepId },
    Call { op: OpId, arg: Option<Expr>, result: Option<Name> },
}

fn skeleton(p: &ClientProgram) -> Result<Vec<Vec<Item>>, OracleError> {
    let mut out = Vec::new();
    for t in &p.threads {
        let mut steps: BTreeMap<String, u32> = BTreeMap::new();
        let mut ops: BTreeMap<Name, u32> = BTreeMap::new();
        let mut items = Vec::new();
        for s in t.body.iter() {
            let mut step = |kind: &StmtKind| {
                let label = kind.step_label().unwrap();
                let n = steps.entry(label.clone()).or_insert(0);
                *n += 1;
                StepId { thread: t.id.clone(), label: label.into(), instance: *n - 1 }
            };
            items.push(match &s.kind {
                StmtKind::Assign { target, is_reg: false, expr } => {
                    Item::Write { step: step(&s.kind), var: target.clone(), expr: expr.clone() }
                }
                StmtKind::Assign { target, is_reg: true, expr } => {
                    Item::SetReg { step: step(&s.kind), reg: target.clone(), expr: expr.clone() }
                }
                StmtKind::Await(c) => Item::Await { step: step(&s.kind), cond: c.clone() },
                StmtKind::Fence => Item::Fence { step: step(&s.kind) },
                StmtKind::Call { op, arg, result } => {
                    let n = ops.entry(op.clone()).or_insert(0);
                    *n += 1;
                    Item::Call {
                        op: OpId { thread: t.id.clone(), call: op.clone(), instance: *n - 1 },
                        arg: arg.clone(),
                        result: result.clone(),
                    }
                }
                other => return Err(OracleError::Unsupported(format!("{other:?}"))),
            });
        }
        out.push(items);
    }
    Ok(out)
}

/// Number of events in a complete run of a straight-line program.
pub fn skeleton_len(p: &ClientProgram) -> Result<usize, OracleError> {
    Ok(skeleton(p)?
        .iter()
        .flatten()
        .map(|i| match i {
            Item::Write { .. } => 2,
            Item::Call { .. } => 3,
            _ => 1,
        })
        .sum())
}

#[derive(Clone)]
struct St {
    /// Per thread: next item, and whether its call has been invoked.
    pc: Vec<(usize, Option<Value>)>,
    mem: BTreeMap<Name, Value>,
    regs: Vec<Regs>,
    obj: SpecState,
    /// An event that must come next.
    forced: Option<Event>,
}

/// Every SC trace of `p` with `obj`, by direct enumeration. Operations are
/// applied atomically at their response, which is exact for objects whose
/// operations do not read each other's variables.
pub fn oracle_sc(p: &ClientProgram, obj: &ObjectDef, cfg: &ExploreConfig) -> Result<BTreeSet<Trace>, OracleError> {
    if cfg.model != ModelId::Sc {
        return Err(OracleError::Model);
    }
    validate(p, obj)?;
    let sk = skeleton(p)?;
    let total = skeleton_len(p)?;
    if total > ORACLE_CAP {
        return Err(OracleError::TooLarge(total));
    }
    for op in &obj.ops {
        let bad = op.body.iter().any(|s| !matches!(s.kind, StmtKind::Assign { .. } | StmtKind::Return(_)));
        if bad {
            return Err(OracleError::Unsupported(format!("operation `{}`", op.name)));
        }
    }
    let dom = cfg.domain;
    let cores: Vec<Name> = {
        let map = cfg.coremap.clone().unwrap_or_else(|| p.coremap());
        p.threads
            .iter()
            .map(|t| map.iter().find(|(u, _)| *u == t.id).map(|(_, c)| c.clone()).unwrap_or_else(|| t.id.0.clone()))
            .collect()
    };
    let init = St {
        pc: vec![(0, None); sk.len()],
        mem: p.globals.iter().map(|(n, v)| (n.clone(), Value::Int(dom.wrap(*v)))).collect(),
        regs: vec![Regs::default(); sk.len()],
        obj: SpecState::initial(obj, &dom),
        forced: None,
    };
    let mut out = BTreeSet::new();
    let mut stack = vec![(init, Vec::<Event>::new())];
    while let Some((st, seq)) = stack.pop() {
        out.insert(Trace::new(seq.clone()));
        if let Some(e) = &st.forced {
            let mut s2 = st.clone();
            s2.forced = None;
            let mut q = seq.clone();
            q.push(e.clone());
            stack.push((s2, q));
            continue;
        }
        for (i, items) in sk.iter().enumerate() {
            let (k, invoked) = st.pc[i];
            let Some(item) = items.get(k) else { continue };
            let mut read = |n: &Name| st.mem[n];
            let mut s2 = st.clone();
            let event = match item {
                Item::Write { step, var, expr } => {
                    let v = eval(expr, &st.regs[i], &mut read, &dom);
                    s2.mem.insert(var.clone(), v);
                    s2.forced = Some(Event::ProgObs { step: step.clone(), var: var.clone(), value: v });
                    s2.pc[i].0 += 1;
                    Event::ProgStep { step: step.clone(), write: Some((var.clone(), v)) }
                }
                Item::SetReg { step, reg, expr } => {
                    let v = eval(expr, &st.regs[i], &mut read, &dom);
                    s2.regs[i].set(reg, v);
                    s2.pc[i].0 += 1;
                    Event::ProgStep { step: step.clone(), write: None }
                }
                Item::Await { step, cond } => {
                    if !eval_cond(cond, &st.regs[i], &mut read, &dom) {
                        continue;
                    }
                    s2.pc[i].0 += 1;
                    Event::ProgStep { step: step.clone(), write: None }
                }
                Item::Fence { step } => {
                    s2.pc[i].0 += 1;
                    Event::ProgStep { step: step.clone(), write: None }
                }
                Item::Call { op, arg, result } => match invoked {
                    None => {
                        let busy_elsewhere = st.pc.iter().enumerate().any(|(j, (_, inv))| inv.is_some() && cores[j] != cores[i]);
                        if obj.kind == ObjectKind::Spec && busy_elsewhere {
                            continue;
                        }
                        let input = arg.as_ref().map(|a| eval(a, &st.regs[i], &mut read, &dom)).unwrap_or(Value::Bot);
                        s2.pc[i].1 = Some(input);
                        Event::Inv { op: op.clone(), input }
                    }
                    Some(input) => {
                        let def = obj.op(&op.call).unwrap();
                        let Some(r) = run_spec_op(def, input, &st.obj, &dom) else { continue };
                        s2.obj = r.state;
                        if let Some(reg) = result {
                            s2.regs[i].set(reg, r.output);
                        }
                        s2.pc[i] = (k + 1, None);
                        s2.forced = Some(Event::OpObs { op: op.clone(), output: r.output });
                        Event::Res { op: op.clone(), output: r.output }
                    }
                },
            };
            let mut q = seq.clone();
            q.push(event);
            stack.push((s2, q));
        }
    }
    Ok(out)
}
