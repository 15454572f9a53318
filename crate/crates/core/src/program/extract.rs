//! Static extraction of the bounded event set of a client program, closed
//! under "every invocation can respond and be observed".

use super::ast::*;
use super::validate::{validate, SemanticError};
use super::ValueDomain;
use crate::events::{Event, Name, OpId, StepId, ThreadId, Value};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Counters {
    steps: BTreeMap<Name, u32>,
    ops: BTreeMap<Name, u32>,
}

struct Walker<'a> {
    thread: &'a ThreadId,
    bound: u32,
    domain: &'a ValueDomain,
    out: &'a mut BTreeSet<Event>,
}

impl Walker<'_> {
    fn outputs(&self) -> Vec<Value> {
        std::iter::once(Value::Bot).chain(self.domain.values().map(Value::Int)).collect()
    }

    fn step(&mut self, states: BTreeSet<Counters>, kind: &StmtKind) -> BTreeSet<Counters> {
        let label: Name = kind.step_label().expect("statement produces a step").into();
        let global_write = match kind {
            StmtKind::Assign { target, is_reg: false, .. } => Some(target.clone()),
            _ => None,
        };
        let values = self.outputs();
        states
            .into_iter()
            .map(|mut c| {
                let n = c.steps.entry(label.clone()).or_insert(0);
                let step = StepId { thread: self.thread.clone(), label: label.clone(), instance: *n };
                *n += 1;
                match &global_write {
                    Some(var) => {
                        for v in &values {
                            self.out.insert(Event::ProgStep { step: step.clone(), write: Some((var.clone(), *v)) });
                            self.out.insert(Event::ProgObs { step: step.clone(), var: var.clone(), value: *v });
                        }
                    }
                    None => {
                        self.out.insert(Event::ProgStep { step, write: None });
                    }
                }
                c
            })
            .collect()
    }

    fn block(&mut self, body: &[Stmt], mut states: BTreeSet<Counters>) -> BTreeSet<Counters> {
        for s in body {
            states = match &s.kind {
                StmtKind::Assign { .. } | StmtKind::Await(_) | StmtKind::Fence => self.step(states, &s.kind),
                StmtKind::Call { op, arg, .. } => {
                    let inputs: Vec<Value> = match arg {
                        None => vec![Value::Bot],
                        Some(e) => match e.literal() {
                            Some(v) => vec![Value::Int(self.domain.wrap(v))],
                            None => self.outputs(),
                        },
                    };
                    let outs = self.outputs();
                    states
                        .into_iter()
                        .map(|mut c| {
                            let n = c.ops.entry(op.clone()).or_insert(0);
                            let id = OpId { thread: self.thread.clone(), call: op.clone(), instance: *n };
                            *n += 1;
                            for i in &inputs {
                                self.out.insert(Event::Inv { op: id.clone(), input: *i });
                            }
                            for o in &outs {
                                self.out.insert(Event::Res { op: id.clone(), output: *o });
                                self.out.insert(Event::OpObs { op: id.clone(), output: *o });
                            }
                            c
                        })
                        .collect()
                }
                StmtKind::If { then, els, .. } => {
                    let after = self.step(states, &s.kind);
                    let mut a = self.block(then, after.clone());
                    a.extend(self.block(els, after));
                    a
                }
                StmtKind::While { body, .. } => {
                    let mut exits = BTreeSet::new();
                    let mut cur = states;
                    for k in 0..=self.bound {
                        let evaluated = self.step(cur, &s.kind);
                        exits.extend(evaluated.iter().cloned());
                        if k == self.bound {
                            break;
                        }
                        cur = self.block(body, evaluated);
                    }
                    exits
                }
                StmtKind::Return(_) | StmtKind::Tas { .. } => states,
            };
        }
        states
    }
}

/// Every event the program can produce with loops unrolled to `bound`, plus
/// responses and observations for every possible output of each invocation.
pub fn events_of_program(
    p: &ClientProgram,
    obj: &ObjectDef,
    bound: u32,
    domain: &ValueDomain,
) -> Result<BTreeSet<Event>, SemanticError> {
    validate(p, obj)?;
    let mut out = BTreeSet::new();
    for t in &p.threads {
        let mut w = Walker { thread: &t.id, bound, domain, out: &mut out };
        w.block(&t.body, BTreeSet::from([Counters::default()]));
    }
    Ok(out)
}
