use super::ast::*;
use std::fmt::Write;

pub fn print_source(file: &SourceFile) -> String {
    match file {
        SourceFile::Client(p) => print_client(p),
        SourceFile::Object(o) => print_object(o),
    }
}

pub fn print_client(p: &ClientProgram) -> String {
    let mut out = String::new();
    for (n, v) in &p.globals {
        let _ = writeln!(out, "global {n} = {v};");
    }
    for t in &p.threads {
        let _ = write!(out, "thread {}", t.id);
        if let Some(c) = &t.core {
            let _ = write!(out, " core {c}");
        }
        out.push_str(" {\n");
        print_block(&mut out, &t.body, 1);
        out.push_str("}\n");
    }
    out
}

pub fn print_object(o: &ObjectDef) -> String {
    let mut out = format!("object {} {{\n", o.kind);
    for (n, v) in &o.shared {
        let _ = writeln!(out, "  shared {n} = {v};");
    }
    for op in &o.ops {
        let _ = writeln!(out, "  op {}({}) {{", op.name, op.param.as_deref().unwrap_or(""));
        print_block(&mut out, &op.body, 2);
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn cond(c: &Cond) -> String {
    format!("{} {} {}", expr(&c.lhs), if c.negated { "!=" } else { "=" }, expr(&c.rhs))
}

fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Var(n) | Expr::Reg(n) => n.to_string(),
        Expr::Bin(l, op, r) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
            };
            format!("{} {sym} {}", expr(l), expr(r))
        }
    }
}

fn print_block(out: &mut String, body: &[Stmt], depth: usize) {
    let pad = "  ".repeat(depth);
    for s in body {
        match &s.kind {
            StmtKind::Assign { target, expr: e, .. } => {
                let _ = writeln!(out, "{pad}{target} := {};", expr(e));
            }
            StmtKind::Await(c) => {
                let _ = writeln!(out, "{pad}await({});", cond(c));
            }
            StmtKind::Call { op, arg, result } => {
                let _ = write!(out, "{pad}");
                if let Some(r) = result {
                    let _ = write!(out, "{r} := ");
                }
                let arg = arg.as_ref().map(expr).unwrap_or_default();
                let _ = writeln!(out, "call {op}({arg});");
            }
            StmtKind::If { cond: c, then, els } => {
                let _ = writeln!(out, "{pad}if ({}) {{", cond(c));
                print_block(out, then, depth + 1);
                if els.is_empty() {
                    let _ = writeln!(out, "{pad}}}");
                } else {
                    let _ = writeln!(out, "{pad}}} else {{");
                    print_block(out, els, depth + 1);
                    let _ = writeln!(out, "{pad}}}");
                }
            }
            StmtKind::While { cond: c, body } => {
                let _ = writeln!(out, "{pad}while ({}) {{", cond(c));
                print_block(out, body, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            StmtKind::Fence => {
                let _ = writeln!(out, "{pad}fence;");
            }
            StmtKind::Return(e) => match e {
                Some(e) => {
                    let _ = writeln!(out, "{pad}return {};", expr(e));
                }
                None => {
                    let _ = writeln!(out, "{pad}return;");
                }
            },
            StmtKind::Tas { reg, var, expected, new } => {
                let _ = writeln!(out, "{pad}{reg} := TAS({var}, {expected}, {new});");
            }
        }
    }
}
