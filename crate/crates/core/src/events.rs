//! Event algebra: program steps, operation invocations/responses and the
//! observation events that mark when an effect is visible to every thread.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Interned identifier text shared across states and events.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreadId(pub Name);

impl ThreadId {
    pub fn new(s: &str) -> Self {
        ThreadId(name(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ThreadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An operation call made by a thread. `instance` counts earlier calls of the
/// same operation by the same thread.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpId {
    pub thread: ThreadId,
    pub call: Name,
    pub instance: u32,
}

impl OpId {
    pub fn new(thread: &str, call: &str, instance: u32) -> Self {
        OpId { thread: ThreadId::new(thread), call: name(call), instance }
    }
}

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}#{}", self.thread, self.call, self.instance)
    }
}

/// A program step, identified by its source statement label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepId {
    pub thread: ThreadId,
    pub label: Name,
    pub instance: u32,
}

impl StepId {
    pub fn new(thread: &str, label: &str, instance: u32) -> Self {
        StepId { thread: ThreadId::new(thread), label: name(label), instance }
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}#{}", self.thread, self.label, self.instance)
    }
}

/// Scalar value. `Bot` is the distinguished "no value".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bot,
    Int(i64),
}

impl Value {
    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(v),
            Value::Bot => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bot => f.write_str("⊥"),
            Value::Int(v) => write!(f, "{v}"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

/// The variant order doubles as the canonical order used to pick
/// counterexamples: program steps, their observations, then object events.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    ProgStep { step: StepId, write: Option<(Name, Value)> },
    ProgObs { step: StepId, var: Name, value: Value },
    Inv { op: OpId, input: Value },
    Res { op: OpId, output: Value },
    OpObs { op: OpId, output: Value },
}

impl Event {
    pub fn step(thread: &str, label: &str, instance: u32, write: Option<(&str, Value)>) -> Self {
        Event::ProgStep {
            step: StepId::new(thread, label, instance),
            write: write.map(|(v, x)| (name(v), x)),
        }
    }

    pub fn step_obs(thread: &str, label: &str, instance: u32, var: &str, value: Value) -> Self {
        Event::ProgObs { step: StepId::new(thread, label, instance), var: name(var), value }
    }

    pub fn inv(thread: &str, call: &str, instance: u32, input: Value) -> Self {
        Event::Inv { op: OpId::new(thread, call, instance), input }
    }

    pub fn res(thread: &str, call: &str, instance: u32, output: Value) -> Self {
        Event::Res { op: OpId::new(thread, call, instance), output }
    }

    pub fn op_obs(thread: &str, call: &str, instance: u32, output: Value) -> Self {
        Event::OpObs { op: OpId::new(thread, call, instance), output }
    }

    pub fn is_object(&self) -> bool {
        matches!(self, Event::Inv { .. } | Event::Res { .. } | Event::OpObs { .. })
    }

    pub fn is_program(&self) -> bool {
        !self.is_object()
    }

    pub fn thread(&self) -> &ThreadId {
        match self {
            Event::ProgStep { step, .. } | Event::ProgObs { step, .. } => &step.thread,
            Event::Inv { op, .. } | Event::Res { op, .. } | Event::OpObs { op, .. } => &op.thread,
        }
    }

    pub fn op(&self) -> Option<&OpId> {
        match self {
            Event::Inv { op, .. } | Event::Res { op, .. } | Event::OpObs { op, .. } => Some(op),
            _ => None,
        }
    }

    /// Identity of the event with its value erased. Within a wellformed trace
    /// the key is unique.
    pub fn key(&self) -> EventKey {
        match self {
            Event::ProgStep { step, .. } => EventKey::Step(step.clone()),
            Event::ProgObs { step, .. } => EventKey::StepObs(step.clone()),
            Event::Inv { op, .. } => EventKey::Inv(op.clone()),
            Event::Res { op, .. } => EventKey::Res(op.clone()),
            Event::OpObs { op, .. } => EventKey::OpObs(op.clone()),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::ProgStep { step, .. } => write!(f, "step({}, {})", step.thread, step.label),
            Event::ProgObs { step, var, value } => write!(f, "obs({}, {var}={value})", step.thread),
            Event::Inv { op, input } => write!(f, "inv(({}, {}), {input})", op.thread, op.call),
            Event::Res { op, output } => write!(f, "res(({}, {}), {output})", op.thread, op.call),
            Event::OpObs { op, output } => write!(f, "obs(({}, {}), {output})", op.thread, op.call),
        }
    }
}

/// Value-erased event identity, the node type of enforced orders.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKey {
    Step(StepId),
    StepObs(StepId),
    Inv(OpId),
    Res(OpId),
    OpObs(OpId),
}

impl EventKey {
    pub fn op(&self) -> Option<&OpId> {
        match self {
            EventKey::Inv(op) | EventKey::Res(op) | EventKey::OpObs(op) => Some(op),
            _ => None,
        }
    }

    pub fn is_program(&self) -> bool {
        matches!(self, EventKey::Step(_) | EventKey::StepObs(_))
    }

    pub fn thread(&self) -> &ThreadId {
        match self {
            EventKey::Step(s) | EventKey::StepObs(s) => &s.thread,
            EventKey::Inv(o) | EventKey::Res(o) | EventKey::OpObs(o) => &o.thread,
        }
    }
}

impl fmt::Display for EventKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKey::Step(s) => write!(f, "step({s})"),
            EventKey::StepObs(s) => write!(f, "obs({s})"),
            EventKey::Inv(o) => write!(f, "inv({o})"),
            EventKey::Res(o) => write!(f, "res({o})"),
            EventKey::OpObs(o) => write!(f, "obs({o})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("event {index}: {reason}")]
pub struct Violation {
    pub index: usize,
    pub reason: String,
}

/// Ordered pairs of events.
pub type TotalOrder = BTreeSet<(Event, Event)>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(events: Vec<Event>) -> Self {
        Trace { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    /// Checks uniqueness of events and the invocation < response < observation
    /// and step < observation conditions. Also rejects two events sharing a key
    /// (e.g. two responses of one call with different values).
    pub fn check_wellformed(&self) -> Result<(), Violation> {
        let mut keys: HashSet<EventKey> = HashSet::new();
        let mut responses: HashMap<&OpId, Value> = HashMap::new();
        let mut writes: HashMap<&StepId, Option<(&Name, Value)>> = HashMap::new();
        for (index, ev) in self.events.iter().enumerate() {
            let fail = |reason: &str| Err(Violation { index, reason: reason.to_string() });
            if !keys.insert(ev.key()) {
                return fail("duplicate event");
            }
            match ev {
                Event::ProgStep { step, write } => {
                    writes.insert(step, write.as_ref().map(|(v, x)| (v, *x)));
                }
                Event::ProgObs { step, var, value } => match writes.get(step) {
                    None => return fail("observation without program step"),
                    Some(None) => return fail("observation of a step without a global write"),
                    Some(Some((v, x))) if *v != var || *x != *value => {
                        return fail("observation does not match the written value")
                    }
                    Some(Some(_)) => {}
                },
                Event::Inv { .. } => {}
                Event::Res { op, output } => {
                    if !keys.contains(&EventKey::Inv(op.clone())) {
                        return fail("response without invocation");
                    }
                    responses.insert(op, *output);
                }
                Event::OpObs { op, output } => match responses.get(op) {
                    None => return fail("observation without response"),
                    Some(out) if out != output => {
                        return fail("observation value differs from response value")
                    }
                    Some(_) => {}
                },
            }
        }
        Ok(())
    }

    /// The event set and the strict total order induced by positions.
    pub fn order_of(&self) -> Result<(BTreeSet<Event>, TotalOrder), Violation> {
        self.check_wellformed()?;
        let events: BTreeSet<Event> = self.events.iter().cloned().collect();
        let mut order = BTreeSet::new();
        for (i, a) in self.events.iter().enumerate() {
            for b in &self.events[i + 1..] {
                order.insert((a.clone(), b.clone()));
            }
        }
        Ok((events, order))
    }

    pub fn project_object(&self) -> History {
        History(Trace::new(self.events.iter().filter(|e| e.is_object()).cloned().collect()))
    }

    pub fn observable_of(&self) -> ObservableBehaviour {
        ObservableBehaviour(
            self.events
                .iter()
                .filter_map(|e| match e {
                    Event::ProgObs { step, var, value } => Some(Observation {
                        thread: step.thread.clone(),
                        var: var.clone(),
                        value: *value,
                    }),
                    _ => None,
                })
                .collect(),
        )
    }

    pub fn position(&self, key: &EventKey) -> Option<usize> {
        self.events.iter().position(|e| &e.key() == key)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("⟩")
    }
}

/// A trace made of object events only.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct History(pub Trace);

impl History {
    pub fn new(events: Vec<Event>) -> Option<Self> {
        events.iter().all(Event::is_object).then(|| History(Trace::new(events)))
    }

    pub fn events(&self) -> &[Event] {
        &self.0.events
    }

    /// Invocations without a response, in invocation order.
    pub fn pending(&self) -> Vec<OpId> {
        let responded: HashSet<&OpId> = self
            .events()
            .iter()
            .filter_map(|e| match e {
                Event::Res { op, .. } => Some(op),
                _ => None,
            })
            .collect();
        self.events()
            .iter()
            .filter_map(|e| match e {
                Event::Inv { op, .. } if !responded.contains(op) => Some(op.clone()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation {
    pub thread: ThreadId,
    pub var: Name,
    pub value: Value,
}

impl Observation {
    pub fn new(thread: &str, var: &str, value: i64) -> Self {
        Observation { thread: ThreadId::new(thread), var: name(var), value: Value::Int(value) }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.thread, self.var, self.value)
    }
}

/// The observation events of program writes, in trace order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ObservableBehaviour(pub Vec<Observation>);

impl ObservableBehaviour {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, thread: &str, var: &str, value: i64) -> bool {
        self.0.contains(&Observation::new(thread, var, value))
    }
}

impl fmt::Display for ObservableBehaviour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{o}")?;
        }
        f.write_str("⟩")
    }
}

// ---------------------------------------------------------------------------
// Line-delimited record format

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {message}")]
    Shape { line: usize, message: String },
}

/// One JSON object per event. Field order is fixed so that serialisation is
/// byte-stable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kind: String,
    pub thread: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    pub instance: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
    pub value: Option<i64>,
}

fn value_to_record(v: Value) -> Option<i64> {
    v.as_int()
}

fn value_from_record(v: Option<i64>) -> Value {
    v.map_or(Value::Bot, Value::Int)
}

impl From<&Event> for EventRecord {
    fn from(e: &Event) -> Self {
        let step_rec = |kind: &str, s: &StepId, var: Option<&Name>, value: Value| EventRecord {
            kind: kind.to_string(),
            thread: s.thread.to_string(),
            label: Some(s.label.to_string()),
            op: None,
            instance: s.instance,
            var: var.map(|v| v.to_string()),
            value: value_to_record(value),
        };
        let op_rec = |kind: &str, o: &OpId, value: Value| EventRecord {
            kind: kind.to_string(),
            thread: o.thread.to_string(),
            label: None,
            op: Some(o.call.to_string()),
            instance: o.instance,
            var: None,
            value: value_to_record(value),
        };
        match e {
            Event::ProgStep { step, write } => match write {
                Some((v, x)) => step_rec("step", step, Some(v), *x),
                None => step_rec("step", step, None, Value::Bot),
            },
            Event::ProgObs { step, var, value } => step_rec("obs-step", step, Some(var), *value),
            Event::Inv { op, input } => op_rec("inv", op, *input),
            Event::Res { op, output } => op_rec("res", op, *output),
            Event::OpObs { op, output } => op_rec("obs-op", op, *output),
        }
    }
}

impl EventRecord {
    pub fn to_event(&self) -> Result<Event, String> {
        let thread = ThreadId::new(&self.thread);
        let value = value_from_record(self.value);
        let step = || -> Result<StepId, String> {
            let label = self.label.as_deref().ok_or("missing field `label`")?;
            if self.op.is_some() {
                return Err("unexpected field `op` on a program event".into());
            }
            Ok(StepId { thread: thread.clone(), label: name(label), instance: self.instance })
        };
        let op = || -> Result<OpId, String> {
            let call = self.op.as_deref().ok_or("missing field `op`")?;
            if self.label.is_some() || self.var.is_some() {
                return Err("unexpected program fields on an object event".into());
            }
            Ok(OpId { thread: thread.clone(), call: name(call), instance: self.instance })
        };
        Ok(match self.kind.as_str() {
            "step" => {
                let step = step()?;
                let write = match &self.var {
                    Some(v) => Some((name(v), value)),
                    None if self.value.is_some() => {
                        return Err("value on a step without a written variable".into())
                    }
                    None => None,
                };
                Event::ProgStep { step, write }
            }
            "obs-step" => {
                let var = self.var.as_deref().ok_or("missing field `var`")?;
                Event::ProgObs { step: step()?, var: name(var), value }
            }
            "inv" => Event::Inv { op: op()?, input: value },
            "res" => Event::Res { op: op()?, output: value },
            "obs-op" => Event::OpObs { op: op()?, output: value },
            other => return Err(format!("unknown event kind `{other}`")),
        })
    }
}

pub fn event_to_record_line(e: &Event) -> String {
    serde_json::to_string(&EventRecord::from(e)).expect("event records always serialise")
}

pub fn event_from_record_line(line: &str, lineno: usize) -> Result<Event, RecordError> {
    let rec: EventRecord =
        serde_json::from_str(line).map_err(|source| RecordError::Json { line: lineno, source })?;
    rec.to_event().map_err(|message| RecordError::Shape { line: lineno, message })
}

impl Trace {
    /// One record per line, each line newline-terminated.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&event_to_record_line(e));
            out.push('\n');
        }
        out
    }

    pub fn from_records(text: &str) -> Result<Trace, RecordError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            events.push(event_from_record_line(line, i + 1)?);
        }
        Ok(Trace::new(events))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The sixteen-event TSO run of the spinlock client in which T2's release
    /// stays buffered until the other threads have finished.
    pub fn spinlock_tso_trace() -> Trace {
        let b = Value::Bot;
        Trace::new(vec![
            Event::inv("T2", "acquire", 0, b),
            Event::res("T2", "acquire", 0, b),
            Event::op_obs("T2", "acquire", 0, b),
            Event::inv("T2", "release", 0, b),
            Event::res("T2", "release", 0, b),
            Event::step("T2", "y:=z", 0, Some(("y", 0.into()))),
            Event::step("T1", "z:=1", 0, Some(("z", 1.into()))),
            Event::step_obs("T1", "z:=1", 0, "z", 1.into()),
            Event::step("T3", "await(z=1)", 0, None),
            Event::inv("T3", "tryAcquire", 0, b),
            Event::res("T3", "tryAcquire", 0, 0.into()),
            Event::op_obs("T3", "tryAcquire", 0, 0.into()),
            Event::step("T3", "w:=rw", 0, Some(("w", 0.into()))),
            Event::step_obs("T3", "w:=rw", 0, "w", 0.into()),
            Event::op_obs("T2", "release", 0, b),
            Event::step_obs("T2", "y:=z", 0, "y", 0.into()),
        ])
    }

    /// The relaxed-model run in which T1's release is observed before its
    /// update of y.
    pub fn spinlock_relaxed_trace() -> Trace {
        let b = Value::Bot;
        Trace::new(vec![
            Event::inv("T1", "acquire", 0, b),
            Event::res("T1", "acquire", 0, b),
            Event::op_obs("T1", "acquire", 0, b),
            Event::step("T1", "y:=y+1", 0, Some(("y", 1.into()))),
            Event::inv("T1", "release", 0, b),
            Event::res("T1", "release", 0, b),
            Event::op_obs("T1", "release", 0, b),
            Event::inv("T2", "acquire", 0, b),
            Event::res("T2", "acquire", 0, b),
            Event::op_obs("T2", "acquire", 0, b),
            Event::step("T2", "y:=y+1", 0, Some(("y", 1.into()))),
            Event::inv("T2", "release", 0, b),
            Event::res("T2", "release", 0, b),
            Event::op_obs("T2", "release", 0, b),
            Event::step_obs("T1", "y:=y+1", 0, "y", 1.into()),
            Event::step_obs("T2", "y:=y+1", 0, "y", 1.into()),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_trace_is_wellformed() {
        assert_eq!(Trace::default().check_wellformed(), Ok(()));
    }

    #[test]
    fn response_without_invocation() {
        let t = Trace::new(vec![Event::res("T2", "acquire", 0, Value::Bot)]);
        let v = t.check_wellformed().unwrap_err();
        assert_eq!(v.index, 0);
        assert_eq!(v.reason, "response without invocation");
    }

    #[test]
    fn observation_must_match_response() {
        let t = Trace::new(vec![
            Event::inv("T1", "a", 0, Value::Bot),
            Event::res("T1", "a", 0, 1.into()),
            Event::op_obs("T1", "a", 0, 0.into()),
        ]);
        assert_eq!(t.check_wellformed().unwrap_err().index, 2);
    }

    #[test]
    fn duplicate_and_step_obs_violations() {
        let s = Event::step("T1", "z:=1", 0, Some(("z", 1.into())));
        let t = Trace::new(vec![s.clone(), s]);
        assert_eq!(t.check_wellformed().unwrap_err().reason, "duplicate event");
        let t = Trace::new(vec![Event::step_obs("T1", "z:=1", 0, "z", 1.into())]);
        assert_eq!(t.check_wellformed().unwrap_err().reason, "observation without program step");
        let t = Trace::new(vec![
            Event::step("T1", "r:=1", 0, None),
            Event::step_obs("T1", "r:=1", 0, "r", 1.into()),
        ]);
        assert_eq!(t.check_wellformed().unwrap_err().index, 1);
    }

    #[test]
    fn listed_spinlock_traces_are_wellformed() {
        assert_eq!(spinlock_tso_trace().len(), 16);
        assert_eq!(spinlock_tso_trace().check_wellformed(), Ok(()));
        assert_eq!(spinlock_relaxed_trace().check_wellformed(), Ok(()));
    }

    #[test]
    fn order_of_small_traces() {
        let (ev, ord) = Trace::default().order_of().unwrap();
        assert!(ev.is_empty() && ord.is_empty());
        let a = Event::inv("T1", "a", 0, Value::Bot);
        let b = Event::step("T2", "x:=1", 0, Some(("x", 1.into())));
        let (ev, ord) = Trace::new(vec![a.clone(), b.clone()]).order_of().unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ord.into_iter().collect::<Vec<_>>(), vec![(a, b)]);
    }

    #[test]
    fn order_of_rejects_ill_formed() {
        let t = Trace::new(vec![Event::res("T2", "acquire", 0, Value::Bot)]);
        assert!(t.order_of().is_err());
    }

    #[test]
    fn order_pair_count_matches_double_loop() {
        let t = spinlock_tso_trace();
        let (_, ord) = t.order_of().unwrap();
        let mut count = 0;
        for i in 0..t.len() {
            for j in 0..t.len() {
                if i < j {
                    count += 1;
                }
            }
        }
        assert_eq!(ord.len(), count);
        assert_eq!(count, 16 * 15 / 2);
    }

    #[test]
    fn projections_of_listed_trace() {
        let t = spinlock_tso_trace();
        let h = t.project_object();
        assert_eq!(h.events().len(), 9);
        assert!(h.events().iter().all(Event::is_object));
        let expected: Vec<Event> = t.events.iter().filter(|e| e.is_object()).cloned().collect();
        assert_eq!(h.events(), &expected[..]);
        assert_eq!(
            t.observable_of(),
            ObservableBehaviour(vec![
                Observation::new("T1", "z", 1),
                Observation::new("T3", "w", 0),
                Observation::new("T2", "y", 0),
            ])
        );
        assert_eq!(
            spinlock_relaxed_trace().observable_of(),
            ObservableBehaviour(vec![Observation::new("T1", "y", 1), Observation::new("T2", "y", 1)])
        );
        assert!(h.0.observable_of().is_empty());
    }

    #[test]
    fn project_object_filters_program_events() {
        let c = Event::inv("T1", "c", 0, Value::Bot);
        let r = Event::res("T1", "c", 0, 1.into());
        let t = Trace::new(vec![c.clone(), Event::step("T1", "s", 0, None), r.clone()]);
        assert_eq!(t.project_object().events(), &[c, r][..]);
        let prog = Trace::new(vec![
            Event::step("T1", "z:=1", 0, Some(("z", 1.into()))),
            Event::step_obs("T1", "z:=1", 0, "z", 1.into()),
        ]);
        assert!(prog.project_object().events().is_empty());
    }

    #[test]
    fn pending_invocations() {
        let h = History::new(vec![
            Event::inv("T1", "a", 0, Value::Bot),
            Event::inv("T2", "b", 0, Value::Bot),
            Event::res("T1", "a", 0, Value::Bot),
        ])
        .unwrap();
        assert_eq!(h.pending(), vec![OpId::new("T2", "b", 0)]);
        assert!(History::new(vec![Event::step("T1", "s", 0, None)]).is_none());
    }

    #[test]
    fn record_round_trip_is_byte_exact() {
        let t = spinlock_tso_trace();
        let text = t.to_records();
        let back = Trace::from_records(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_records(), text);
        let first = text.lines().next().unwrap();
        assert_eq!(first, r#"{"kind":"inv","thread":"T2","op":"acquire","instance":0,"value":null}"#);
    }

    #[test]
    fn record_errors() {
        assert!(Trace::from_records("{not json").is_err());
        let bad = r#"{"kind":"jump","thread":"T1","instance":0,"value":null}"#;
        assert!(matches!(Trace::from_records(bad), Err(RecordError::Shape { line: 1, .. })));
    }

    /// Random wellformed traces over two threads.
    pub(crate) fn arb_trace() -> impl Strategy<Value = Trace> {
        proptest::collection::vec((0u8..2, 0u8..3, 0i64..3), 0..12).prop_map(|choices| {
            // replay choices: each thread either advances its op (inv/res/obs)
            // or performs a global write step followed later by its observation
            let mut events = Vec::new();
            let mut op_stage = [0u32; 2];
            let mut op_inst = [0u32; 2];
            let mut pending_obs: Vec<Event> = Vec::new();
            let mut step_inst = [0u32; 2];
            for (t, what, v) in choices {
                let th = if t == 0 { "T1" } else { "T2" };
                let ti = t as usize;
                match what {
                    0 => {
                        let i = op_inst[ti];
                        let e = match op_stage[ti] {
                            0 => Event::inv(th, "a", i, Value::Bot),
                            1 => Event::res(th, "a", i, Value::Int(v)),
                            _ => {
                                let out = events
                                    .iter()
                                    .find_map(|e: &Event| match e {
                                        Event::Res { op, output } if op.thread.as_str() == th && op.instance == i => Some(*output),
                                        _ => None,
                                    })
                                    .unwrap();
                                op_inst[ti] += 1;
                                Event::op_obs(th, "a", i, out)
                            }
                        };
                        op_stage[ti] = (op_stage[ti] + 1) % 3;
                        events.push(e);
                    }
                    1 => {
                        let i = step_inst[ti];
                        step_inst[ti] += 1;
                        events.push(Event::step(th, "x:=v", i, Some(("x", Value::Int(v)))));
                        pending_obs.push(Event::step_obs(th, "x:=v", i, "x", Value::Int(v)));
                    }
                    _ => {
                        if !pending_obs.is_empty() {
                            events.push(pending_obs.remove(0));
                        }
                    }
                }
            }
            Trace::new(events)
        })
    }

    proptest! {
        #[test]
        fn generated_traces_wellformed_and_prefix_closed(t in arb_trace()) {
            prop_assert!(t.check_wellformed().is_ok());
            for n in 0..=t.len() {
                prop_assert!(Trace::new(t.events[..n].to_vec()).check_wellformed().is_ok());
            }
        }

        #[test]
        fn object_projection_properties(t in arb_trace()) {
            let h = t.project_object();
            prop_assert!(h.0.observable_of().is_empty());
            let (_, full) = t.order_of().unwrap();
            let (_, obj) = h.0.order_of().unwrap();
            let restricted: BTreeSet<_> = full.into_iter().filter(|(a, b)| a.is_object() && b.is_object()).collect();
            prop_assert_eq!(restricted, obj);
        }

        #[test]
        fn index_ordering_of_op_events(t in arb_trace()) {
            for e in &t.events {
                if let Event::OpObs { op, .. } = e {
                    let i = t.position(&EventKey::Inv(op.clone())).unwrap();
                    let r = t.position(&EventKey::Res(op.clone())).unwrap();
                    let o = t.position(&EventKey::OpObs(op.clone())).unwrap();
                    prop_assert!(i < r && r < o);
                }
            }
        }

        #[test]
        fn records_round_trip(t in arb_trace()) {
            let text = t.to_records();
            let back = Trace::from_records(&text).unwrap();
            prop_assert_eq!(back.to_records(), text);
            prop_assert_eq!(back, t);
        }
    }
}
