//! Nested refinement type checking for a dynamic-language core calculus.

pub mod constants;
pub mod datatype;
pub mod eval;
pub mod env;
pub mod frontend;
pub mod logic;
pub mod smt;
pub mod subtype;
pub mod syntax;
pub mod typing;
pub mod wf;

pub use env::{EnvEntry, TypeEnv};
pub use syntax::*;
pub use eval::{eval, step, Outcome, Run, StepResult, Stuck};
pub use frontend::{load_program, FrontendError, Program};
pub use logic::{eval_ground, normalize, Clause, GroundModel, Truth};
pub use smt::{Session, SmtError, SolverConfig, Verdict};
pub use subtype::{Engine, SubError};
pub use typing::{check_program, CheckError, CheckOptions, Checker, TypeError};
