//! Hand-written lexer and recursive-descent parser for `.wm` sources.

use super::ast::*;
use crate::events::{name, Name, ThreadId};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub pos: Pos,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: found {}", self.pos, self.found)?;
        if !self.expected.is_empty() {
            write!(f, ", expected {}", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: [&str; 11] = [":=", "!=", "=", "+", "-", "(", ")", "{", "}", ";", ","];

const KEYWORDS: [&str; 16] = [
    "global", "thread", "core", "object", "spec", "impl", "shared", "op", "await", "call", "if",
    "else", "while", "fence", "return", "TAS",
];

/// Registers are identifiers of the form `r<ident>`.
pub fn is_register(ident: &str) -> bool {
    ident.len() > 1 && ident.starts_with('r') && !KEYWORDS.contains(&ident)
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            out.push((Tok::Ident(s), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let v = s.parse::<i64>().map_err(|_| SyntaxError {
                pos,
                found: format!("integer literal `{s}` out of range"),
                expected: vec![],
            })?;
            out.push((Tok::Int(v), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len() as u32;
                out.push((Tok::Sym(s), pos));
            }
            None => {
                return Err(SyntaxError { pos, found: format!("character `{c}`"), expected: vec![] })
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

type PResult<T> = Result<T, SyntaxError>;

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Thread,
    Op,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(SyntaxError {
            pos: self.pos(),
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn sym(&mut self, sym: &str) -> PResult<()> {
        if self.is_sym(sym) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{sym}`")])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        match self.peek() {
            Tok::Int(v) => {
                let v = *v;
                self.bump();
                Ok(v)
            }
            _ => self.error(&["integer"]),
        }
    }

    fn file(&mut self) -> PResult<SourceFile> {
        if self.is_kw("object") {
            let obj = self.object()?;
            if *self.peek() != Tok::Eof {
                return self.error(&["end of input"]);
            }
            return Ok(SourceFile::Object(obj));
        }
        let mut globals = Vec::new();
        while self.is_kw("global") {
            self.bump();
            let n = self.ident()?;
            self.sym("=")?;
            let v = self.int()?;
            self.sym(";")?;
            globals.push((name(&n), v));
        }
        let mut threads = Vec::new();
        while self.is_kw("thread") {
            threads.push(self.thread()?);
        }
        if threads.is_empty() {
            return self.error(if globals.is_empty() { &["`global`", "`thread`", "`object`"] } else { &["`global`", "`thread`"] });
        }
        if *self.peek() != Tok::Eof {
            return self.error(&["`thread`", "end of input"]);
        }
        Ok(SourceFile::Client(ClientProgram { globals, threads }))
    }

    fn thread(&mut self) -> PResult<ThreadDef> {
        self.keyword("thread")?;
        let id = ThreadId::new(&self.ident()?);
        let core = if self.is_kw("core") {
            self.bump();
            Some(name(&self.ident()?))
        } else {
            None
        };
        let body = self.block(Ctx::Thread)?;
        Ok(ThreadDef { id, core, body })
    }

    fn object(&mut self) -> PResult<ObjectDef> {
        self.keyword("object")?;
        let kind = if self.is_kw("spec") {
            ObjectKind::Spec
        } else if self.is_kw("impl") {
            ObjectKind::Impl
        } else {
            return self.error(&["`spec`", "`impl`"]);
        };
        self.bump();
        self.sym("{")?;
        let mut shared = Vec::new();
        while self.is_kw("shared") {
            self.bump();
            let n = self.ident()?;
            self.sym("=")?;
            let v = self.int()?;
            self.sym(";")?;
            shared.push((name(&n), v));
        }
        let mut ops = Vec::new();
        while self.is_kw("op") {
            let pos = self.pos();
            self.bump();
            let n = self.ident()?;
            self.sym("(")?;
            let param = if self.is_sym(")") { None } else { Some(name(&self.ident()?)) };
            self.sym(")")?;
            let body = self.block(Ctx::Op)?;
            ops.push(OpDef { name: name(&n), param, body, pos });
        }
        if !self.is_sym("}") {
            return self.error(&["`op`", "`}`"]);
        }
        self.bump();
        Ok(ObjectDef { kind, shared, ops })
    }

    fn block(&mut self, ctx: Ctx) -> PResult<Block> {
        self.sym("{")?;
        let mut stmts = Vec::new();
        while !self.is_sym("}") {
            if *self.peek() == Tok::Eof {
                return self.error(&["statement", "`}`"]);
            }
            stmts.push(self.stmt(ctx)?);
        }
        self.bump();
        Ok(Arc::from(stmts))
    }

    fn stmt(&mut self, ctx: Ctx) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Ident(kw) if kw == "await" => {
                self.bump();
                self.sym("(")?;
                let c = self.cond()?;
                self.sym(")")?;
                self.sym(";")?;
                StmtKind::Await(c)
            }
            Tok::Ident(kw) if kw == "call" && ctx == Ctx::Thread => self.call(None)?,
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                self.sym("(")?;
                let cond = self.cond()?;
                self.sym(")")?;
                let then = self.block(ctx)?;
                let els = if self.is_kw("else") {
                    self.bump();
                    self.block(ctx)?
                } else {
                    Arc::from(Vec::new())
                };
                StmtKind::If { cond, then, els }
            }
            Tok::Ident(kw) if kw == "while" => {
                self.bump();
                self.sym("(")?;
                let cond = self.cond()?;
                self.sym(")")?;
                let body = self.block(ctx)?;
                StmtKind::While { cond, body }
            }
            Tok::Ident(kw) if kw == "fence" => {
                self.bump();
                self.sym(";")?;
                StmtKind::Fence
            }
            Tok::Ident(kw) if kw == "return" && ctx == Ctx::Op => {
                self.bump();
                let e = if self.is_sym(";") { None } else { Some(self.expr()?) };
                self.sym(";")?;
                StmtKind::Return(e)
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Sym(":=")) => {
                let target = self.ident()?;
                self.bump();
                let reg = is_register(&target);
                if reg && ctx == Ctx::Thread && self.is_kw("call") {
                    self.call(Some(name(&target)))?
                } else if reg && ctx == Ctx::Op && self.is_kw("TAS") {
                    self.bump();
                    self.sym("(")?;
                    let var = self.ident()?;
                    self.sym(",")?;
                    let expected = self.int()?;
                    self.sym(",")?;
                    let new = self.int()?;
                    self.sym(")")?;
                    self.sym(";")?;
                    StmtKind::Tas { reg: name(&target), var: name(&var), expected, new }
                } else {
                    let expr = self.expr()?;
                    self.sym(";")?;
                    StmtKind::Assign { target: name(&target), is_reg: reg, expr }
                }
            }
            _ => {
                let mut expected = vec!["assignment", "`await`", "`if`", "`while`", "`fence`"];
                match ctx {
                    Ctx::Thread => expected.push("`call`"),
                    Ctx::Op => expected.push("`return`"),
                }
                return self.error(&expected);
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn call(&mut self, result: Option<Name>) -> PResult<StmtKind> {
        self.keyword("call")?;
        let op = self.ident()?;
        self.sym("(")?;
        let arg = if self.is_sym(")") { None } else { Some(self.expr()?) };
        self.sym(")")?;
        self.sym(";")?;
        Ok(StmtKind::Call { op: name(&op), arg, result })
    }

    fn cond(&mut self) -> PResult<Cond> {
        let lhs = self.expr()?;
        let negated = if self.is_sym("=") {
            false
        } else if self.is_sym("!=") {
            true
        } else {
            return self.error(&["`=`", "`!=`", "`+`", "`-`"]);
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cond { lhs, negated, rhs })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.atom()?;
        loop {
            let op = if self.is_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.atom()?;
            lhs = Expr::Bin(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(if is_register(&s) { Expr::Reg(name(&s)) } else { Expr::Var(name(&s)) })
            }
            _ => self.error(&["integer", "identifier"]),
        }
    }
}

/// Parses either a client program or an object definition (syntax only).
pub fn parse_source(text: &str) -> Result<SourceFile, SyntaxError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0 };
    p.file()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_client() {
        let f = parse_source("global z = 0;\nthread T1 { z := 1; }").unwrap();
        let SourceFile::Client(p) = f else { panic!() };
        assert_eq!(p.threads.len(), 1);
        assert_eq!(p.threads[0].body.len(), 1);
        assert!(matches!(p.threads[0].body[0].kind, StmtKind::Assign { is_reg: false, .. }));
    }

    #[test]
    fn unbalanced_call_reports_semicolon() {
        let e = parse_source("thread T1 { r1 := call acquire(; }").unwrap_err();
        assert_eq!(e.found, "`;`");
        assert_eq!(e.pos, Pos { line: 1, col: 32 });
        assert!(e.expected.contains(&"`)`".to_string()) || e.expected.contains(&"integer".to_string()));
    }

    #[test]
    fn comments_and_registers() {
        let f = parse_source("// header\nglobal x = 0; // trailing\nthread T1 { rA := call A(); x := rA + 1 - 2; }").unwrap();
        let SourceFile::Client(p) = f else { panic!() };
        assert!(matches!(&p.threads[0].body[0].kind, StmtKind::Call { result: Some(r), .. } if &**r == "rA"));
        assert_eq!(p.threads[0].body[1].kind.step_label().unwrap(), "x:=rA+1-2");
    }

    #[test]
    fn object_with_tas() {
        let src = "object impl { shared x = 1; op tryAcquire() { rt := TAS(x, 1, 0); return rt; } }";
        let SourceFile::Object(o) = parse_source(src).unwrap() else { panic!() };
        assert_eq!(o.kind, ObjectKind::Impl);
        assert!(matches!(o.ops[0].body[0].kind, StmtKind::Tas { expected: 1, new: 0, .. }));
    }

    #[test]
    fn rejections() {
        assert!(parse_source("").is_err());
        assert!(parse_source("global x = 0;").is_err());
        assert!(parse_source("thread T1 { return 1; }").is_err());
        assert!(parse_source("thread T1 { x := 1 }").is_err());
        assert!(parse_source("thread T1 { x := 1; } extra").is_err());
        assert!(parse_source("object spec { op a() { call b(); } }").is_err());
        assert!(parse_source("thread T1 { x := 1 * 2; }").is_err());
        let e = parse_source("thread T1 { await(x < 1); }").unwrap_err();
        assert_eq!(e.pos.col, 21);
    }
}
