//! Surface language: lexing, parsing, desugaring, renaming and A-normalization.

pub mod lexer;
pub mod lower;
pub mod parser;
pub mod print;

use std::collections::BTreeMap;
use std::fmt;

use crate::syntax::{default_defs, DefEnv, Expr, Name};
use crate::wf::{check_typedef, WfError};

pub use lower::anf_normalize;
pub use parser::{
    desugar_mono, desugar_type, parse, parse_formula, parse_type, SExpr, SKind, SParam, STy,
    SourceProgram,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FrontendError {
    #[error("{pos}: parse error: {msg}{}", expected_suffix(.expected))]
    Parse {
        pos: Pos,
        msg: String,
        expected: Vec<String>,
    },
    #[error("{pos}: unknown type abbreviation `{name}`")]
    UnknownAbbreviation { pos: Pos, name: String },
    #[error("{pos}: unbound variable `{name}`")]
    Unbound { pos: Pos, name: String },
    #[error("{pos}: {msg}")]
    Malformed { pos: Pos, msg: String },
    #[error("{pos}: constructor `{name}` is already defined")]
    DuplicateCtor { pos: Pos, name: String },
    #[error("{pos}: {err}")]
    Wf { pos: Pos, err: WfError },
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

impl FrontendError {
    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Parse { pos, .. }
            | FrontendError::UnknownAbbreviation { pos, .. }
            | FrontendError::Unbound { pos, .. }
            | FrontendError::Malformed { pos, .. }
            | FrontendError::DuplicateCtor { pos, .. }
            | FrontendError::Wf { pos, .. } => *pos,
        }
    }
}

/// A loaded program: datatype definitions plus an A-normal body.
#[derive(Clone, Debug)]
pub struct Program {
    pub defs: DefEnv,
    pub body: Expr,
    /// Source position of every binder introduced by the program.
    pub positions: BTreeMap<Name, Pos>,
}

pub fn load_program(text: &str) -> Result<Program, FrontendError> {
    let src = parse(text)?;
    let mut defs = default_defs();
    for (d, pos) in &src.typedefs {
        if defs.contains_key(&d.name) {
            return Err(FrontendError::DuplicateCtor {
                pos: *pos,
                name: d.name.clone(),
            });
        }
        // The definition may refer to itself.
        let mut with_self = defs.clone();
        with_self.insert(d.name.clone(), d.clone());
        check_typedef(&with_self, d).map_err(|err| FrontendError::Wf { pos: *pos, err })?;
        defs.insert(d.name.clone(), d.clone());
    }
    let (body, positions) = lower::lower_program(&src.body)?;
    Ok(Program {
        defs,
        body,
        positions,
    })
}
