use crate::events::{Name, ThreadId};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    /// A global variable, object variable or operation parameter.
    Var(Name),
    Reg(Name),
    Bin(Box<Expr>, BinOp, Box<Expr>),
}

impl Expr {
    pub fn visit_names<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Expr::Bin(l, _, r) => {
                l.visit_names(f);
                r.visit_names(f);
            }
            Expr::Int(_) => {}
            e => f(e),
        }
    }

    pub fn literal(&self) -> Option<i64> {
        match self {
            Expr::Int(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cond {
    pub lhs: Expr,
    pub negated: bool,
    pub rhs: Expr,
}

pub type Block = Arc<[Stmt]>;

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

/// Positions are diagnostics only and do not take part in equality.
impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Stmt {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Assign { target: Name, is_reg: bool, expr: Expr },
    Await(Cond),
    Call { op: Name, arg: Option<Expr>, result: Option<Name> },
    If { cond: Cond, then: Block, els: Block },
    While { cond: Cond, body: Block },
    Fence,
    Return(Option<Expr>),
    Tas { reg: Name, var: Name, expected: i64, new: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadDef {
    pub id: ThreadId,
    pub core: Option<Name>,
    pub body: Block,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientProgram {
    pub globals: Vec<(Name, i64)>,
    pub threads: Vec<ThreadDef>,
}

impl ClientProgram {
    /// Core of each thread; threads without an annotation get a core of their own.
    pub fn core_of(&self, thread: &ThreadId) -> Option<Name> {
        self.threads
            .iter()
            .find(|t| &t.id == thread)
            .map(|t| t.core.clone().unwrap_or_else(|| t.id.0.clone()))
    }

    pub fn coremap(&self) -> Vec<(ThreadId, Name)> {
        self.threads
            .iter()
            .map(|t| (t.id.clone(), t.core.clone().unwrap_or_else(|| t.id.0.clone())))
            .collect()
    }

    pub fn global_init(&self, var: &str) -> Option<i64> {
        self.globals.iter().find(|(n, _)| &**n == var).map(|(_, v)| *v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Spec,
    Impl,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectKind::Spec => "spec",
            ObjectKind::Impl => "impl",
        })
    }
}

#[derive(Clone, Debug)]
pub struct OpDef {
    pub name: Name,
    pub param: Option<Name>,
    pub body: Block,
    pub pos: Pos,
}

impl PartialEq for OpDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.param == other.param && self.body == other.body
    }
}

impl Eq for OpDef {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectDef {
    pub kind: ObjectKind,
    pub shared: Vec<(Name, i64)>,
    pub ops: Vec<OpDef>,
}

impl ObjectDef {
    pub fn op(&self, name: &str) -> Option<&OpDef> {
        self.ops.iter().find(|o| &*o.name == name)
    }

    /// Object with no operations and no state.
    pub fn empty(kind: ObjectKind) -> Self {
        ObjectDef { kind, shared: Vec::new(), ops: Vec::new() }
    }

    pub fn is_shared(&self, var: &str) -> bool {
        self.shared.iter().any(|(n, _)| &**n == var)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceFile {
    Client(ClientProgram),
    Object(ObjectDef),
}

// ---------------------------------------------------------------------------
// Compact rendering used for step labels

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Var(n) | Expr::Reg(n) => f.write_str(n),
            Expr::Bin(l, op, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                };
                // the parser only builds left-nested chains
                write!(f, "{l}{sym}{r}")
            }
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.lhs, if self.negated { "!=" } else { "=" }, self.rhs)
    }
}

impl StmtKind {
    /// Label of the program step this statement produces, if any.
    pub fn step_label(&self) -> Option<String> {
        match self {
            StmtKind::Assign { target, expr, .. } => Some(format!("{target}:={expr}")),
            StmtKind::Await(c) => Some(format!("await({c})")),
            StmtKind::If { cond, .. } => Some(format!("if({cond})")),
            StmtKind::While { cond, .. } => Some(format!("while({cond})")),
            StmtKind::Fence => Some("fence".into()),
            StmtKind::Call { .. } | StmtKind::Return(_) | StmtKind::Tas { .. } => None,
        }
    }
}
