//! Command-line front end. Exit codes: 0 success or holds within bounds,
//! 1 refuted, 2 usage, parse or validation error.

mod dot;

pub use dot::{labels, render_order, render_trace};

use crate::events::Trace;
use crate::memmodel::{enforced_order_of, explore, ExploreConfig, ModelId};
use crate::program::{parse_client, parse_object, ClientProgram, ObjectDef, ValueDomain};
use crate::refine::{check_wmtr, refute_object_refinement, Status};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "wmtr", version, about = "Weak-memory trace semantics and refinement checking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump every trace of a client with one object.
    Explore(Run),
    /// Compute the empirical enforced order and check the axioms.
    Axioms(Run),
    /// Check trace refinement of a specification by an implementation.
    Check(Run),
    /// Search a client corpus for a refutation of object refinement.
    Refute(Run),
    /// Render the enforced order, or a recorded trace, as a DOT graph.
    Dot(Run),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
    Dot,
}

#[derive(Args, Debug)]
struct Run {
    #[arg(long, default_value = "sc")]
    model: ModelId,
    /// Client program; repeatable for `refute`.
    #[arg(long)]
    client: Vec<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "impl")]
    imp: Option<PathBuf>,
    /// Trace records to render (`dot` only).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    unroll: u32,
    #[arg(long, default_value_t = 4)]
    buffer: usize,
    /// Largest value of the domain 0..N.
    #[arg(long, default_value_t = 3)]
    values: i64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "WMTR_WORKERS")]
    workers: Option<usize>,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Failure(format!("file not found: {}", path.display())),
        _ => Failure(format!("{}: {e}", path.display())),
    })
}

fn load_client(path: &Path) -> Result<ClientProgram, Failure> {
    parse_client(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_object(path: &Path) -> Result<ObjectDef, Failure> {
    parse_object(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    p.as_deref().ok_or_else(|| Failure(format!("missing required flag --{flag}")))
}

impl Run {
    fn config(&self) -> ExploreConfig {
        let workers = self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        ExploreConfig {
            model: self.model,
            unroll: self.unroll,
            buffer: self.buffer,
            domain: ValueDomain::new(self.values),
            coremap: None,
            workers: workers.max(1),
        }
    }

    fn one_client(&self) -> Result<ClientProgram, Failure> {
        match self.client.as_slice() {
            [c] => load_client(c),
            [] => Err(Failure("missing required flag --client".into())),
            _ => Err(Failure("exactly one --client is expected".into())),
        }
    }

    /// The object of single-object commands: `--impl` if given, else `--spec`.
    fn one_object(&self) -> Result<ObjectDef, Failure> {
        match (&self.imp, &self.spec) {
            (Some(p), _) | (None, Some(p)) => load_object(p),
            (None, None) => Err(Failure("one of --impl or --spec is required".into())),
        }
    }

    fn format(&self, allowed: &[Format]) -> Result<Format, Failure> {
        if allowed.contains(&self.format) {
            Ok(self.format)
        } else {
            Err(Failure(format!("format {:?} is not supported by this command", self.format).to_lowercase()))
        }
    }
}

/// Runs the tool on `argv` (including the program name), writing the
/// report to `out` (or `--out`) and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok((code, text, dest)) => {
            let written = match dest {
                Some(path) => std::fs::write(path, &text),
                None => out.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write output: {e}");
                    2
                }
            }
        }
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn dispatch(cmd: &Command) -> Result<(i32, String, Option<&Path>), Failure> {
    let (code, text, r) = match cmd {
        Command::Explore(r) => {
            let fmt = r.format(&[Format::Text, Format::Records, Format::Dot])?;
            let set = explore(&r.one_client()?, &r.one_object()?, &r.config())?;
            let text = match fmt {
                Format::Dot => render_order(&enforced_order_of(&set)),
                _ => {
                    let mut s = String::new();
                    for (i, t) in set.traces().enumerate() {
                        if fmt == Format::Text {
                            s.push_str(&format!("#{i}: {t}\n"));
                        } else {
                            s.push_str(&json!({"trace": i, "len": t.len()}).to_string());
                            s.push('\n');
                            s.push_str(&t.to_records());
                        }
                    }
                    s
                }
            };
            (0, text, r)
        }
        Command::Axioms(r) => {
            let fmt = r.format(&[Format::Text, Format::Records, Format::Dot])?;
            let set = explore(&r.one_client()?, &r.one_object()?, &r.config())?;
            let po = enforced_order_of(&set);
            let report = po.check_axioms();
            let text = match fmt {
                Format::Text => {
                    let mut s = format!("traces: {}  events: {}  pairs: {}\n", set.len(), po.universe().len(), po.len());
                    s.push_str(&report.to_string());
                    for (a, b) in po.transitive_reduction() {
                        s.push_str(&format!("{a} < {b}\n"));
                    }
                    s
                }
                Format::Records => po.to_records(),
                Format::Dot => render_order(&po),
            };
            (0, text, r)
        }
        Command::Check(r) => {
            let fmt = r.format(&[Format::Text, Format::Records, Format::Dot])?;
            let p = r.one_client()?;
            let spec = load_object(required(&r.spec, "spec")?)?;
            let imp = load_object(required(&r.imp, "impl")?)?;
            let v = check_wmtr(&p, &spec, &imp, &r.config())?;
            let code = if v.status == Status::Refuted { 1 } else { 0 };
            let text = match fmt {
                Format::Text => format!("{v}\n"),
                Format::Records => format!("{}\n", v.to_json()),
                Format::Dot => match &v.counterexample {
                    Some(cx) => render_trace(&cx.trace),
                    None => render_trace(&Trace::default()),
                },
            };
            (code, text, r)
        }
        Command::Refute(r) => {
            let fmt = r.format(&[Format::Text, Format::Records])?;
            if r.client.is_empty() {
                return Err(Failure("missing required flag --client".into()));
            }
            let clients = r
                .client
                .iter()
                .map(|c| Ok((c.display().to_string(), load_client(c)?)))
                .collect::<Result<Vec<_>, Failure>>()?;
            let spec = load_object(required(&r.spec, "spec")?)?;
            let imp = load_object(required(&r.imp, "impl")?)?;
            let rep = refute_object_refinement(&spec, &imp, &clients, &r.config())?;
            let code = if rep.status() == Status::Refuted { 1 } else { 0 };
            let text = match fmt {
                Format::Records => format!("{}\n", rep.to_json()),
                _ => format!("{rep}\n"),
            };
            (code, text, r)
        }
        Command::Dot(r) => {
            r.format(&[Format::Text, Format::Dot])?;
            let text = match &r.trace {
                Some(path) => {
                    let t = Trace::from_records(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
                    render_trace(&t)
                }
                None => render_order(&enforced_order_of(&explore(&r.one_client()?, &r.one_object()?, &r.config())?)),
            };
            (0, text, r)
        }
    };
    Ok((code, text, r.out.as_deref()))
}
