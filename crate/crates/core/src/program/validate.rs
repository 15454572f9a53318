use super::ast::*;
use crate::events::Name;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct SemanticError {
    pub pos: Pos,
    pub message: String,
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, SemanticError> {
    Err(SemanticError { pos, message: message.into() })
}

type Regs = BTreeSet<Name>;

struct Scope<'a> {
    /// Names readable as plain variables (globals, or shared variables and the parameter).
    vars: &'a BTreeSet<Name>,
    /// Names assignable as plain variables.
    writable: &'a BTreeSet<Name>,
    what: &'static str,
    spec: bool,
}

fn check_expr(e: &Expr, scope: &Scope, regs: &Regs, pos: Pos) -> Result<(), SemanticError> {
    let mut result = Ok(());
    e.visit_names(&mut |n| {
        if result.is_err() {
            return;
        }
        match n {
            Expr::Var(v) if !scope.vars.contains(v) => {
                result = err(pos, format!("undeclared {} `{v}`", scope.what));
            }
            Expr::Reg(r) if !regs.contains(r) => {
                result = err(pos, format!("register `{r}` read before write"));
            }
            _ => {}
        }
    });
    result
}

fn check_cond(c: &Cond, scope: &Scope, regs: &Regs, pos: Pos) -> Result<(), SemanticError> {
    check_expr(&c.lhs, scope, regs, pos)?;
    check_expr(&c.rhs, scope, regs, pos)
}

/// Checks a block and returns the registers definitely assigned after it.
fn check_block(body: &[Stmt], scope: &Scope, mut regs: Regs) -> Result<Regs, SemanticError> {
    for s in body {
        let pos = s.pos;
        match &s.kind {
            StmtKind::Assign { target, is_reg, expr } => {
                check_expr(expr, scope, &regs, pos)?;
                if *is_reg {
                    regs.insert(target.clone());
                } else if !scope.writable.contains(target) {
                    if scope.vars.contains(target) {
                        return err(pos, format!("cannot assign to parameter `{target}`"));
                    }
                    return err(pos, format!("undeclared {} `{target}`", scope.what));
                }
            }
            StmtKind::Await(c) => check_cond(c, scope, &regs, pos)?,
            StmtKind::Call { arg, result, .. } => {
                if let Some(a) = arg {
                    check_expr(a, scope, &regs, pos)?;
                }
                if let Some(r) = result {
                    regs.insert(r.clone());
                }
            }
            StmtKind::If { cond, then, els } => {
                check_cond(cond, scope, &regs, pos)?;
                let a = check_block(then, scope, regs.clone())?;
                let b = check_block(els, scope, regs.clone())?;
                regs = a.intersection(&b).cloned().collect();
            }
            StmtKind::While { cond, body } => {
                if scope.spec {
                    return err(pos, "loop not allowed in specification");
                }
                check_cond(cond, scope, &regs, pos)?;
                check_block(body, scope, regs.clone())?;
            }
            StmtKind::Fence => {}
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    check_expr(e, scope, &regs, pos)?;
                }
            }
            StmtKind::Tas { reg, var, .. } => {
                if scope.spec {
                    return err(pos, "primitive not allowed in specification");
                }
                if !scope.writable.contains(var) {
                    return err(pos, format!("undeclared {} `{var}`", scope.what));
                }
                regs.insert(reg.clone());
            }
        }
    }
    Ok(regs)
}

pub fn validate_client(p: &ClientProgram) -> Result<(), SemanticError> {
    let mut globals = BTreeSet::new();
    for (n, _) in &p.globals {
        if super::parser::is_register(n) {
            return err(Pos::default(), format!("global `{n}` uses the register naming form"));
        }
        if !globals.insert(n.clone()) {
            return err(Pos::default(), format!("duplicate global `{n}`"));
        }
    }
    let mut seen = BTreeSet::new();
    for t in &p.threads {
        if !seen.insert(t.id.clone()) {
            let pos = t.body.first().map(|s| s.pos).unwrap_or_default();
            return err(pos, format!("duplicate thread `{}`", t.id));
        }
        let scope = Scope { vars: &globals, writable: &globals, what: "variable", spec: false };
        check_block(&t.body, &scope, Regs::new())?;
    }
    Ok(())
}

pub fn validate_object(o: &ObjectDef) -> Result<(), SemanticError> {
    let mut shared = BTreeSet::new();
    for (n, _) in &o.shared {
        if !shared.insert(n.clone()) {
            return err(Pos::default(), format!("duplicate shared variable `{n}`"));
        }
    }
    let mut names = BTreeSet::new();
    for op in &o.ops {
        if !names.insert(op.name.clone()) {
            return err(op.pos, format!("duplicate operation `{}`", op.name));
        }
        let mut vars = shared.clone();
        let mut regs = Regs::new();
        if let Some(p) = &op.param {
            if super::parser::is_register(p) {
                regs.insert(p.clone());
            } else {
                vars.insert(p.clone());
            }
        }
        let scope = Scope {
            vars: &vars,
            writable: &shared,
            what: "object variable",
            spec: o.kind == ObjectKind::Spec,
        };
        check_block(&op.body, &scope, regs)?;
    }
    Ok(())
}

fn for_each_call<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt, &'a Name, &'a Option<Expr>)) {
    for s in body {
        match &s.kind {
            StmtKind::Call { op, arg, .. } => f(s, op, arg),
            StmtKind::If { then, els, .. } => {
                for_each_call(then, f);
                for_each_call(els, f);
            }
            StmtKind::While { body, .. } => for_each_call(body, f),
            _ => {}
        }
    }
}

/// Client and object individually valid, and every call resolves to an
/// operation with a matching parameter shape.
pub fn validate(p: &ClientProgram, obj: &ObjectDef) -> Result<(), SemanticError> {
    validate_client(p)?;
    validate_object(obj)?;
    let mut result = Ok(());
    for t in &p.threads {
        for_each_call(&t.body, &mut |s, op, arg| {
            if result.is_err() {
                return;
            }
            match obj.op(op) {
                None => result = err(s.pos, format!("unknown operation `{op}`")),
                Some(def) if def.param.is_none() && arg.is_some() => {
                    result = err(s.pos, format!("operation `{op}` takes no argument"))
                }
                Some(def) if def.param.is_some() && arg.is_none() => {
                    result = err(s.pos, format!("operation `{op}` expects an argument"))
                }
                Some(_) => {}
            }
        });
    }
    result
}

fn writes_shared(body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::Assign { is_reg, .. } => !is_reg,
        StmtKind::Tas { .. } => true,
        StmtKind::If { then, els, .. } => writes_shared(then) || writes_shared(els),
        StmtKind::While { body, .. } => writes_shared(body),
        _ => false,
    })
}

fn reg_reaches_global(body: &[Stmt], reg: &Name) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::Assign { is_reg: false, expr, .. } => {
            let mut hit = false;
            expr.visit_names(&mut |e| hit |= matches!(e, Expr::Reg(r) if r == reg));
            hit
        }
        StmtKind::If { then, els, .. } => reg_reaches_global(then, reg) || reg_reaches_global(els, reg),
        StmtKind::While { body, .. } => reg_reaches_global(body, reg),
        _ => false,
    })
}

/// An operation that stores to no object variable and whose result the client
/// never copies into a global variable.
pub fn is_covert(op: &OpDef, client: &ClientProgram) -> bool {
    if writes_shared(&op.body) {
        return false;
    }
    client.threads.iter().all(|t| {
        let mut leaks = false;
        for_each_call(&t.body, &mut |s, name, _| {
            if let StmtKind::Call { result: Some(r), .. } = &s.kind {
                if *name == op.name && reg_reaches_global(&t.body, r) {
                    leaks = true;
                }
            }
        });
        !leaks
    })
}
