//! Small-step execution of statement lists, shared by client threads and
//! implementation operations.

use super::ast::*;
use super::ValueDomain;
use crate::events::{Name, Value};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

#[derive(Clone, Debug)]
enum Frame {
    Block { body: Block, pc: u32 },
    /// `owner[idx]` is the loop statement; `iter` body runs have started.
    Loop { owner: Block, idx: u32, iter: u32 },
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Frame::Block { body: a, pc: p }, Frame::Block { body: b, pc: q }) => Arc::ptr_eq(a, b) && p == q,
            (Frame::Loop { owner: a, idx: i, iter: k }, Frame::Loop { owner: b, idx: j, iter: l }) => {
                Arc::ptr_eq(a, b) && i == j && k == l
            }
            _ => false,
        }
    }
}

impl Eq for Frame {}

impl Hash for Frame {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Frame::Block { body, pc } => {
                0u8.hash(state);
                (Arc::as_ptr(body) as *const Stmt as usize).hash(state);
                pc.hash(state);
            }
            Frame::Loop { owner, idx, iter } => {
                1u8.hash(state);
                (Arc::as_ptr(owner) as *const Stmt as usize).hash(state);
                idx.hash(state);
                iter.hash(state);
            }
        }
    }
}

/// Where a cursor stands.
pub enum At {
    Stmt(Block, usize),
    /// Re-test of the loop at `block[idx]` after `iter` body runs.
    LoopTest(Block, usize, u32),
    Done,
}

/// A continuation: the stack of partially executed blocks and loops.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Cursor {
    frames: Vec<Frame>,
}

impl Cursor {
    pub fn new(body: &Block) -> Self {
        let mut c = Cursor { frames: vec![Frame::Block { body: body.clone(), pc: 0 }] };
        c.normalize();
        c
    }

    fn normalize(&mut self) {
        loop {
            match self.frames.last() {
                Some(Frame::Block { body, pc }) if *pc as usize >= body.len() => {
                    self.frames.pop();
                    if let Some(Frame::Block { pc, .. }) = self.frames.last_mut() {
                        *pc += 1;
                    }
                }
                _ => return,
            }
        }
    }

    pub fn at(&self) -> At {
        match self.frames.last() {
            None => At::Done,
            Some(Frame::Block { body, pc }) => At::Stmt(body.clone(), *pc as usize),
            Some(Frame::Loop { owner, idx, iter }) => At::LoopTest(owner.clone(), *idx as usize, *iter),
        }
    }

    pub fn is_done(&self) -> bool {
        self.frames.is_empty()
    }

    /// Moves past the current statement.
    pub fn advance(&mut self) {
        if let Some(Frame::Block { pc, .. }) = self.frames.last_mut() {
            *pc += 1;
        }
        self.normalize();
    }

    /// Runs `body` in place of the current statement (a taken branch).
    pub fn enter(&mut self, body: &Block) {
        self.frames.push(Frame::Block { body: body.clone(), pc: 0 });
        self.normalize();
    }

    /// Starts the first run of the loop at the current statement.
    pub fn loop_start(&mut self) {
        let Some(Frame::Block { body: owner, pc }) = self.frames.last() else { return };
        let (owner, idx) = (owner.clone(), *pc);
        let StmtKind::While { body, .. } = &owner[idx as usize].kind else { return };
        let body = body.clone();
        self.frames.push(Frame::Loop { owner, idx, iter: 1 });
        self.frames.push(Frame::Block { body, pc: 0 });
        self.normalize();
    }

    /// Starts another run of the loop being re-tested.
    pub fn loop_again(&mut self) {
        let Some(Frame::Loop { owner, idx, iter }) = self.frames.last_mut() else { return };
        *iter += 1;
        let StmtKind::While { body, .. } = &owner[*idx as usize].kind else { return };
        let body = body.clone();
        self.frames.push(Frame::Block { body, pc: 0 });
        self.normalize();
    }

    /// Leaves the loop being re-tested.
    pub fn loop_exit(&mut self) {
        if let Some(Frame::Loop { .. }) = self.frames.last() {
            self.frames.pop();
        }
        self.advance();
    }
}

/// Outcome of testing a loop condition under an unrolling bound.
pub enum LoopChoice {
    Enter,
    Exit,
    /// The condition holds but the bound is used up.
    Truncate,
}

pub fn loop_choice(holds: bool, runs_so_far: u32, bound: u32) -> LoopChoice {
    match (holds, runs_so_far < bound) {
        (false, _) => LoopChoice::Exit,
        (true, true) => LoopChoice::Enter,
        (true, false) => LoopChoice::Truncate,
    }
}

/// Register file, kept sorted by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Regs(Vec<(Name, Value)>);

impl Regs {
    pub fn get(&self, r: &str) -> Value {
        match self.0.binary_search_by(|(n, _)| (**n).cmp(r)) {
            Ok(i) => self.0[i].1,
            Err(_) => Value::Bot,
        }
    }

    pub fn set(&mut self, r: &Name, v: Value) {
        match self.0.binary_search_by(|(n, _)| (**n).cmp(r)) {
            Ok(i) => self.0[i].1 = v,
            Err(i) => self.0.insert(i, (r.clone(), v)),
        }
    }
}

/// Per-name instance counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Counters(Vec<(Name, u32)>);

impl Counters {
    /// Returns the next instance number for `name` and bumps it.
    pub fn next(&mut self, name: &Name) -> u32 {
        match self.0.binary_search_by(|(n, _)| n.cmp(name)) {
            Ok(i) => {
                let n = self.0[i].1;
                self.0[i].1 += 1;
                n
            }
            Err(i) => {
                self.0.insert(i, (name.clone(), 1));
                0
            }
        }
    }
}

pub fn eval(e: &Expr, regs: &Regs, var: &mut dyn FnMut(&Name) -> Value, dom: &ValueDomain) -> Value {
    match e {
        Expr::Int(v) => Value::Int(dom.wrap(*v)),
        Expr::Var(n) => var(n),
        Expr::Reg(r) => regs.get(r),
        Expr::Bin(l, op, r) => {
            let (a, b) = (eval(l, regs, var, dom), eval(r, regs, var, dom));
            match (a, b) {
                (Value::Int(a), Value::Int(b)) => Value::Int(dom.wrap(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                })),
                _ => Value::Bot,
            }
        }
    }
}

pub fn eval_cond(c: &Cond, regs: &Regs, var: &mut dyn FnMut(&Name) -> Value, dom: &ValueDomain) -> bool {
    let l = eval(&c.lhs, regs, var, dom);
    let r = eval(&c.rhs, regs, var, dom);
    (l == r) != c.negated
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_client;

    fn kinds(p: &str, choose: impl Fn(&StmtKind) -> bool) -> Vec<String> {
        let p = parse_client(p).unwrap();
        let mut c = Cursor::new(&p.threads[0].body);
        let mut out = vec![];
        for _ in 0..100 {
            match c.at() {
                At::Done => break,
                At::Stmt(b, i) => {
                    let s = &b[i];
                    out.push(s.kind.step_label().unwrap_or_default());
                    match &s.kind {
                        StmtKind::If { then, els, .. } => c.enter(if choose(&s.kind) { then } else { els }),
                        StmtKind::While { .. } => {
                            if choose(&s.kind) {
                                c.loop_start()
                            } else {
                                c.advance()
                            }
                        }
                        _ => c.advance(),
                    }
                }
                At::LoopTest(b, i, iter) => {
                    out.push(format!("{}#{iter}", b[i].kind.step_label().unwrap()));
                    if iter < 2 {
                        c.loop_again()
                    } else {
                        c.loop_exit()
                    }
                }
            }
        }
        out
    }

    #[test]
    fn walks_branches_and_loops() {
        let src = "global x = 0; thread T { if (x = 0) { x := 1; } x := 2; while (x = 1) { x := 3; } fence; }";
        assert_eq!(
            kinds(src, |_| true),
            ["if(x=0)", "x:=1", "x:=2", "while(x=1)", "x:=3", "while(x=1)#1", "x:=3", "while(x=1)#2", "fence"]
        );
        assert_eq!(kinds(src, |_| false), ["if(x=0)", "x:=2", "while(x=1)", "fence"]);
    }

    #[test]
    fn empty_bodies() {
        let src = "global x = 0; thread T { while (x = 0) { } if (x = 0) { } }";
        assert_eq!(kinds(src, |_| true), ["while(x=0)", "while(x=0)#1", "while(x=0)#2", "if(x=0)"]);
    }

    #[test]
    fn cursors_compare_by_position() {
        let p = parse_client("global x = 0; thread T { x := 1; x := 1; }").unwrap();
        let a = Cursor::new(&p.threads[0].body);
        let mut b = a.clone();
        assert_eq!(a, b);
        b.advance();
        assert_ne!(a, b);
    }

    #[test]
    fn arithmetic_wraps_and_bottom_absorbs() {
        let d = ValueDomain::default();
        let e = Expr::Bin(Box::new(Expr::Reg("ra".into())), BinOp::Add, Box::new(Expr::Int(1)));
        let mut regs = Regs::default();
        let mut none = |_: &Name| Value::Bot;
        assert_eq!(eval(&e, &regs, &mut none, &d), Value::Bot);
        regs.set(&"ra".into(), Value::Int(3));
        assert_eq!(eval(&e, &regs, &mut none, &d), Value::Int(0));
    }

    #[test]
    fn counters_count_per_name() {
        let mut c = Counters::default();
        let (a, b): (Name, Name) = ("a".into(), "b".into());
        assert_eq!((c.next(&a), c.next(&b), c.next(&a)), (0, 0, 1));
    }
}
