//! Weak-memory trace refinement: every observable behaviour of the client
//! with the implementation must be one of the client with the specification,
//! under the same model and bounds. The check is bounded, so a positive
//! answer only ever means "holds within the bound".

use crate::events::{EventRecord, ObservableBehaviour, Trace};
use crate::memmodel::{explore, ExploreConfig, ExploreError, TraceSet};
use crate::program::{ClientProgram, ObjectDef, ObjectKind};
use serde_json::json;
use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    HoldsWithinBound,
    Refuted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::HoldsWithinBound => "holds-within-bound",
            Status::Refuted => "refuted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub trace: Trace,
    pub observable: ObservableBehaviour,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub impl_traces: usize,
    pub spec_traces: usize,
    pub impl_behaviours: usize,
    pub spec_behaviours: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub counterexample: Option<Counterexample>,
    pub stats: Stats,
    pub config: ExploreConfig,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("interface mismatch: {0}")]
    Interface(String),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

/// Both objects must offer the same operations with the same parameter shape.
pub fn check_interfaces(spec: &ObjectDef, imp: &ObjectDef) -> Result<(), RefineError> {
    if spec.kind != ObjectKind::Spec {
        return Err(RefineError::Interface("the specification must be an `object spec`".into()));
    }
    if imp.kind != ObjectKind::Impl {
        return Err(RefineError::Interface("the implementation must be an `object impl`".into()));
    }
    for op in &spec.ops {
        match imp.op(&op.name) {
            None => return Err(RefineError::Interface(format!("operation `{}` missing from the implementation", op.name))),
            Some(i) if i.param.is_some() != op.param.is_some() => {
                return Err(RefineError::Interface(format!("operation `{}` differs in its parameter", op.name)))
            }
            Some(_) => {}
        }
    }
    if let Some(extra) = imp.ops.iter().find(|o| spec.op(&o.name).is_none()) {
        return Err(RefineError::Interface(format!("operation `{}` missing from the specification", extra.name)));
    }
    Ok(())
}

fn explore_both(
    p: &ClientProgram,
    spec: &ObjectDef,
    imp: &ObjectDef,
    cfg: &ExploreConfig,
) -> Result<(TraceSet, TraceSet), RefineError> {
    let (a, c) = rayon::join(|| explore(p, spec, cfg), || explore(p, imp, cfg));
    Ok((a?, c?))
}

/// The shortest trace of `set` whose behaviour is outside `allowed`, least
/// in event order among those of that length.
fn shortest_outside(set: &TraceSet, allowed: &BTreeSet<ObservableBehaviour>) -> Option<Counterexample> {
    let (idx, behaviours) = set.observable_index();
    let bad: Vec<bool> = behaviours.iter().map(|b| !allowed.contains(b)).collect();
    let min = (0..set.len()).filter(|&n| bad[idx[n] as usize]).map(|n| set.depth(n as u32)).min()?;
    let trace = (0..set.len())
        .filter(|&n| bad[idx[n] as usize] && set.depth(n as u32) == min)
        .map(|n| set.trace(n as u32))
        .min()?;
    let observable = trace.observable_of();
    Some(Counterexample { trace, observable })
}

/// Decides `P[A] ⊑ P[C]` within the configured bounds.
pub fn check_wmtr(p: &ClientProgram, spec: &ObjectDef, imp: &ObjectDef, cfg: &ExploreConfig) -> Result<Verdict, RefineError> {
    check_interfaces(spec, imp)?;
    let start = Instant::now();
    let (a, c) = explore_both(p, spec, imp, cfg)?;
    let allowed = a.observables();
    let impl_behaviours = c.observable_index().1.len();
    let counterexample = shortest_outside(&c, &allowed);
    Ok(Verdict {
        status: if counterexample.is_some() { Status::Refuted } else { Status::HoldsWithinBound },
        counterexample,
        stats: Stats {
            impl_traces: c.len(),
            spec_traces: a.len(),
            impl_behaviours,
            spec_behaviours: allowed.len(),
            elapsed: start.elapsed(),
        },
        config: cfg.clone(),
    })
}

/// A refuting trace no longer than `t`: the shortest refuting trace if it
/// is strictly shorter, `t` itself otherwise.
pub fn minimize(
    t: &Trace,
    p: &ClientProgram,
    spec: &ObjectDef,
    imp: &ObjectDef,
    cfg: &ExploreConfig,
) -> Result<Trace, RefineError> {
    let (a, c) = explore_both(p, spec, imp, cfg)?;
    Ok(match shortest_outside(&c, &a.observables()) {
        Some(cx) if cx.trace.len() < t.len() => cx.trace,
        _ => t.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefutationReport {
    /// Verdict per client, in corpus order, up to the first refutation.
    pub results: Vec<(String, Verdict)>,
    /// The first client whose verdict is a refutation.
    pub refuting: Option<String>,
}

impl RefutationReport {
    pub fn status(&self) -> Status {
        if self.refuting.is_some() {
            Status::Refuted
        } else {
            Status::HoldsWithinBound
        }
    }
}

/// Searches a corpus of clients for one that refutes object refinement.
pub fn refute_object_refinement(
    spec: &ObjectDef,
    imp: &ObjectDef,
    clients: &[(String, ClientProgram)],
    cfg: &ExploreConfig,
) -> Result<RefutationReport, RefineError> {
    let mut results = Vec::new();
    for (name, p) in clients {
        let v = check_wmtr(p, spec, imp, cfg)?;
        let refuted = v.status == Status::Refuted;
        results.push((name.clone(), v));
        if refuted {
            return Ok(RefutationReport { results, refuting: Some(name.clone()) });
        }
    }
    Ok(RefutationReport { results, refuting: None })
}

// ---------------------------------------------------------------------------
// Reports

fn observable_json(o: &ObservableBehaviour) -> serde_json::Value {
    o.0.iter().map(|x| json!({"thread": x.thread.as_str(), "var": &*x.var, "value": x.value.as_int()})).collect()
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        let c = &self.config;
        let mut v = json!({
            "status": self.status.to_string(),
            "model": c.model.to_string(),
            "bounds": {"unroll": c.unroll, "buffer": c.buffer, "values": c.domain.max},
            "stats": {
                "impl_traces": self.stats.impl_traces,
                "spec_traces": self.stats.spec_traces,
                "impl_behaviours": self.stats.impl_behaviours,
                "spec_behaviours": self.stats.spec_behaviours,
                "elapsed_ms": self.stats.elapsed.as_millis() as u64,
            },
        });
        if let Some(cx) = &self.counterexample {
            v["observable"] = observable_json(&cx.observable);
            v["trace"] = cx.trace.iter().map(|e| serde_json::to_value(EventRecord::from(e)).unwrap()).collect();
        }
        v
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "status: {}", self.status)?;
        writeln!(f, "model: {}  unroll: {}  buffer: {}  values: 0..{}", c.model, c.unroll, c.buffer, c.domain.max)?;
        if let Some(cx) = &self.counterexample {
            writeln!(f, "observable behaviour not allowed by the specification: {}", cx.observable)?;
            writeln!(f, "counterexample trace ({} events):", cx.trace.len())?;
            for e in cx.trace.iter() {
                writeln!(f, "  {e}")?;
            }
        } else {
            writeln!(f, "every implementation behaviour is a specification behaviour within the bounds")?;
        }
        let s = &self.stats;
        write!(
            f,
            "traces: impl {} spec {}  behaviours: impl {} spec {}  time: {} ms",
            s.impl_traces,
            s.spec_traces,
            s.impl_behaviours,
            s.spec_behaviours,
            s.elapsed.as_millis()
        )
    }
}

impl fmt::Display for RefutationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in &self.results {
            writeln!(f, "{name}: {}", v.status)?;
        }
        match &self.refuting {
            Some(name) => {
                writeln!(f, "refuted by client {name}")?;
                let v = &self.results.last().unwrap().1;
                write!(f, "{v}")
            }
            None => write!(f, "no refutation found within bounds"),
        }
    }
}

impl RefutationReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "status": self.status().to_string(),
            "refuting_client": self.refuting,
            "clients": self.results.iter().map(|(n, v)| json!({"client": n, "verdict": v.to_json()})).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Observation;
    use crate::memmodel::ModelId;
    use crate::program::corpus::*;
    use crate::program::{parse_client, parse_object};

    fn objs(spec: &str, imp: &str) -> (ObjectDef, ObjectDef) {
        (parse_object(spec).unwrap(), parse_object(imp).unwrap())
    }

    #[test]
    fn interfaces_must_match() {
        let (s, i) = objs(SPIN_SPEC, SPIN_IMPL_NOTRY);
        assert!(matches!(check_interfaces(&s, &i), Err(RefineError::Interface(_))));
        assert!(check_interfaces(&i, &s).is_err());
        let (s, i) = objs(SPIN_SPEC, SPIN_IMPL);
        assert_eq!(check_interfaces(&s, &i), Ok(()));
    }

    #[test]
    fn specification_refines_itself() {
        let spec = parse_object(ABC_SPEC).unwrap();
        let mut same = spec.clone();
        same.kind = ObjectKind::Impl;
        let p = parse_client(FIG2).unwrap();
        for model in ModelId::ALL {
            let v = check_wmtr(&p, &spec, &same, &ExploreConfig::with_model(model)).unwrap();
            assert_eq!(v.status, Status::HoldsWithinBound, "{model}");
            assert!(v.counterexample.is_none());
        }
    }

    #[test]
    fn relaxed_increment_is_refuted_and_sound() {
        let (s, i) = objs(SPIN_SPEC_NOTRY, SPIN_IMPL_NOTRY);
        let p = parse_client(FIG6).unwrap();
        let cfg = ExploreConfig::with_model(ModelId::Relaxed);
        let v = check_wmtr(&p, &s, &i, &cfg).unwrap();
        assert_eq!(v.status, Status::Refuted);
        let cx = v.counterexample.clone().unwrap();
        assert_eq!(cx.observable, ObservableBehaviour(vec![Observation::new("T1", "y", 1), Observation::new("T2", "y", 1)]));
        assert_eq!(cx.trace.observable_of(), cx.observable);
        // independent enumeration of the specification side
        let spec_side: BTreeSet<ObservableBehaviour> =
            explore(&p, &s, &cfg).unwrap().traces().map(|t| t.observable_of()).collect();
        assert!(!spec_side.contains(&cx.observable));
        assert_eq!(minimize(&cx.trace, &p, &s, &i, &cfg).unwrap(), cx.trace);
        // the witness persists at a larger bound
        let wider = ExploreConfig { unroll: 3, ..cfg };
        assert_eq!(check_wmtr(&p, &s, &i, &wider).unwrap().status, Status::Refuted);
    }

    #[test]
    fn minimize_shortens_longer_witnesses() {
        let (s, i) = objs(SPIN_SPEC_NOTRY, SPIN_IMPL_NOTRY);
        let p = parse_client(FIG6).unwrap();
        let cfg = ExploreConfig::with_model(ModelId::Relaxed);
        let set = explore(&p, &i, &cfg).unwrap();
        let allowed = explore(&p, &s, &cfg).unwrap().observables();
        let longest = set.traces().filter(|t| !allowed.contains(&t.observable_of())).max_by_key(Trace::len).unwrap();
        let m = minimize(&longest, &p, &s, &i, &cfg).unwrap();
        assert!(m.len() <= longest.len());
        assert!(!allowed.contains(&m.observable_of()));
    }

    #[test]
    fn tso_witness_keeps_three_observations() {
        let (s, i) = objs(SPIN_SPEC, SPIN_IMPL);
        let p = parse_client(FIG5).unwrap();
        let cfg = ExploreConfig::with_model(ModelId::Tso);
        let v = check_wmtr(&p, &s, &i, &cfg).unwrap();
        let cx = v.counterexample.unwrap();
        let m = minimize(&cx.trace, &p, &s, &i, &cfg).unwrap();
        assert_eq!(m, cx.trace);
        assert_eq!(m.observable_of().len(), 3);
    }

    #[test]
    fn corpus_refutation_reports_first_refuting_client() {
        let (s, i) = objs(SPIN_SPEC_NOTRY, SPIN_IMPL_NOTRY);
        let clients: Vec<(String, ClientProgram)> =
            [("fig4", FIG4), ("fig6", FIG6)].iter().map(|(n, c)| (n.to_string(), parse_client(c).unwrap())).collect();
        let r = refute_object_refinement(&s, &i, &clients, &ExploreConfig::with_model(ModelId::Relaxed)).unwrap();
        assert_eq!(r.refuting.as_deref(), Some("fig6"));
        assert_eq!(r.results.len(), 2);
        let text = r.to_string();
        assert!(text.contains("refuted by client fig6"));
        let r = refute_object_refinement(&s, &i, &clients, &ExploreConfig::with_model(ModelId::Sc)).unwrap();
        assert_eq!(r.status(), Status::HoldsWithinBound);
        assert!(r.to_string().contains("no refutation found within bounds"));
    }

    #[test]
    fn report_serialization() {
        let (s, i) = objs(SPIN_SPEC_NOTRY, SPIN_IMPL_NOTRY);
        let p = parse_client(FIG6).unwrap();
        let v = check_wmtr(&p, &s, &i, &ExploreConfig::with_model(ModelId::Relaxed)).unwrap();
        let j = v.to_json();
        assert_eq!(j["status"], "refuted");
        assert_eq!(j["observable"][0], json!({"thread": "T1", "var": "y", "value": 1}));
        let records: Vec<EventRecord> = serde_json::from_value(j["trace"].clone()).unwrap();
        let back: Vec<_> = records.iter().map(|r| r.to_event().unwrap()).collect();
        assert_eq!(Trace::new(back), v.counterexample.as_ref().unwrap().trace);
        let text = v.to_string();
        assert!(text.starts_with("status: refuted\n"));
        assert!(text.contains("⟨(T1, y, 1), (T2, y, 1)⟩"));
    }
}
