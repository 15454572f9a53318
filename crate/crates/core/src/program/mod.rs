//! The client/object mini-language.
//!
//! ```text
//! file   := decl* thread+ | "object" ("spec"|"impl") "{" shared* opdef* "}"
//! decl   := "global" IDENT "=" INT ";"
//! shared := "shared" IDENT "=" INT ";"
//! thread := "thread" IDENT ("core" IDENT)? "{" stmt* "}"
//! stmt   := IDENT ":=" expr ";" | "await" "(" cond ")" ";"
//!         | (REG ":=")? "call" IDENT "(" expr? ")" ";"
//!         | "if" "(" cond ")" block ("else" block)? | "while" "(" cond ")" block
//!         | "fence" ";"
//! opdef  := "op" IDENT "(" IDENT? ")" "{" opstmt* "}"
//! opstmt := stmt without call | "return" expr? ";" | REG ":=" "TAS" "(" IDENT "," INT "," INT ")" ";"
//! cond   := expr ("=" | "!=") expr
//! expr   := INT | IDENT | REG | expr ("+" | "-") expr        REG := "r" IDENT
//! ```

mod ast;
pub mod exec;
mod extract;
mod parser;
mod print;
mod validate;

pub use ast::*;
pub use extract::events_of_program;
pub use parser::{is_register, parse_source, SyntaxError};
pub use print::{print_client, print_object, print_source};
pub use validate::{is_covert, validate, validate_client, validate_object, SemanticError};

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error("expected {expected}, found {found}")]
    WrongKind { expected: &'static str, found: &'static str },
}

/// Parses and validates a source file on its own (calls are resolved later,
/// against an object, by [`validate`]).
pub fn parse(text: &str) -> Result<SourceFile, ProgramError> {
    let file = parse_source(text)?;
    match &file {
        SourceFile::Client(p) => validate_client(p)?,
        SourceFile::Object(o) => validate_object(o)?,
    }
    Ok(file)
}

pub fn parse_client(text: &str) -> Result<ClientProgram, ProgramError> {
    match parse(text)? {
        SourceFile::Client(p) => Ok(p),
        SourceFile::Object(_) => Err(ProgramError::WrongKind { expected: "a client program", found: "an object" }),
    }
}

pub fn parse_object(text: &str) -> Result<ObjectDef, ProgramError> {
    match parse(text)? {
        SourceFile::Object(o) => Ok(o),
        SourceFile::Client(_) => Err(ProgramError::WrongKind { expected: "an object", found: "a client program" }),
    }
}

/// The finite integer domain `0..=max`. Arithmetic wraps around it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ValueDomain {
    pub max: i64,
}

impl Default for ValueDomain {
    fn default() -> Self {
        ValueDomain { max: 3 }
    }
}

impl ValueDomain {
    pub fn new(max: i64) -> Self {
        ValueDomain { max }
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        0..=self.max
    }

    pub fn contains(&self, v: i64) -> bool {
        (0..=self.max).contains(&v)
    }

    pub fn wrap(&self, v: i64) -> i64 {
        v.rem_euclid(self.max + 1)
    }
}

#[cfg(test)]
pub(crate) mod corpus {
    pub const FIG2: &str = include_str!("../../examples/fig2_client.wm");
    pub const ABC_IMPL: &str = include_str!("../../examples/abc_impl.wm");
    pub const ABC_SPEC: &str = include_str!("../../examples/abc_spec.wm");
    pub const FIG4: &str = include_str!("../../examples/fig4_lock.wm");
    pub const FIG5: &str = include_str!("../../examples/fig5_spinlock.wm");
    pub const FIG5_NOTRY: &str = include_str!("../../examples/fig5_notry.wm");
    pub const FIG6: &str = include_str!("../../examples/fig6_increment.wm");
    pub const SPIN_SPEC: &str = include_str!("../../examples/spinlock_spec.wm");
    pub const SPIN_IMPL: &str = include_str!("../../examples/spinlock_impl.wm");
    pub const SPIN_SPEC_NOTRY: &str = include_str!("../../examples/spinlock_spec_notry.wm");
    pub const SPIN_IMPL_NOTRY: &str = include_str!("../../examples/spinlock_impl_notry.wm");
}
