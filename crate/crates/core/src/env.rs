//! Typing environments.

use std::fmt;

use crate::syntax::{Formula, Name, Scheme};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnvEntry {
    Bind(Name, Scheme),
    TyVar(Name),
    Guard(Formula),
}

/// An ordered typing environment of bindings, type variables and guard formulas.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    entries: Vec<EnvEntry>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn entries(&self) -> &[EnvEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, e: EnvEntry) {
        self.entries.push(e);
    }

    pub fn bind(&self, x: &str, s: Scheme) -> TypeEnv {
        let mut g = self.clone();
        g.entries.push(EnvEntry::Bind(x.to_string(), s));
        g
    }

    pub fn tyvar(&self, a: &str) -> TypeEnv {
        let mut g = self.clone();
        g.entries.push(EnvEntry::TyVar(a.to_string()));
        g
    }

    pub fn guard(&self, p: Formula) -> TypeEnv {
        let mut g = self.clone();
        if p != Formula::True {
            g.entries.push(EnvEntry::Guard(p));
        }
        g
    }

    pub fn lookup(&self, x: &str) -> Option<&Scheme> {
        self.entries.iter().rev().find_map(|e| match e {
            EnvEntry::Bind(y, s) if y == x => Some(s),
            _ => None,
        })
    }

    pub fn binds(&self, x: &str) -> bool {
        self.lookup(x).is_some()
    }

    pub fn has_tyvar(&self, a: &str) -> bool {
        self.entries
            .iter()
            .any(|e| matches!(e, EnvEntry::TyVar(b) if b == a))
    }

    pub fn var_names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().filter_map(|e| match e {
            EnvEntry::Bind(x, _) => Some(x),
            _ => None,
        })
    }

    pub fn tyvar_names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().filter_map(|e| match e {
            EnvEntry::TyVar(a) => Some(a),
            _ => None,
        })
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match e {
                EnvEntry::Bind(x, s) => write!(f, "{x}: {s}")?,
                EnvEntry::TyVar(a) => write!(f, "{a}")?,
                EnvEntry::Guard(p) => write!(f, "{p}")?,
            }
        }
        Ok(())
    }
}
