//! SMT-LIB2 session over a solver subprocess.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::{Duration, Instant};

use crate::constants::TAGS;
use crate::logic::{instantiate_axioms, BoxTable, LogicError, Terms, DEFAULT_INSTANCE_CAP};
use crate::syntax::*;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Program and arguments; the solver must read SMT-LIB2 from standard input.
    pub cmd: Vec<String>,
    pub timeout_ms: u64,
    /// Transcript file mirroring every line sent to the solver.
    pub log: Option<PathBuf>,
    pub instance_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            cmd: vec!["z3".into(), "-in".into(), "-smt2".into()],
            timeout_ms: 10_000,
            log: None,
            instance_cap: DEFAULT_INSTANCE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn with_command_line(mut self, line: &str) -> SolverConfig {
        self.cmd = line.split_whitespace().map(String::from).collect();
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Valid,
    Invalid,
    Unknown,
}

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("could not start solver `{cmd}`: {msg}")]
    Start { cmd: String, msg: String },
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot encode formula: {0}")]
    Encoding(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub queries: usize,
    pub cache_hits: usize,
    pub wall: Duration,
}

struct Proc {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for Proc {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

const PRELUDE: &str = "\
(set-option :global-declarations true)
(set-option :print-success false)
(set-option :smt.random_seed 0)
(set-logic ALL)
(declare-sort Val 0)
(declare-fun ofInt (Int) Val)
(declare-fun toInt (Val) Int)
(declare-fun strIdx (Val) Int)
(declare-fun tag (Val) Val)
(declare-fun sel (Val Val) Val)
(declare-fun ext (Val Val Val) Val)
(declare-fun has (Val Val) Bool)
(declare-fun eqmod (Val Val Val) Bool)
(declare-fun plus (Val Val) Val)
(declare-fun minus (Val Val) Val)
(declare-fun hasTyp (Val Int) Bool)
(declare-const vtrue Val)
(declare-const vfalse Val)
(declare-const vnull Val)
(declare-const vempty Val)
(assert (distinct vtrue vfalse))
";

/// One solver process with an incremental assertion stack.
pub struct Session {
    cfg: SolverConfig,
    proc: Option<Proc>,
    log: Option<File>,
    declared: BTreeSet<String>,
    pending: BTreeSet<String>,
    strings: BTreeMap<String, usize>,
    opaque: HashMap<Value, usize>,
    frames: Vec<Vec<Formula>>,
    cache: HashMap<(Vec<Formula>, Formula), Verdict>,
    pub boxes: BoxTable,
    stats: Stats,
}

fn quote(s: &str) -> String {
    format!("|{}|", s.replace(['|', '\\'], "_"))
}

impl Session {
    pub fn open(cfg: SolverConfig) -> Result<Session, SmtError> {
        let log = match &cfg.log {
            Some(p) => Some(File::create(p)?),
            None => None,
        };
        let mut s = Session {
            cfg,
            proc: None,
            log,
            declared: BTreeSet::new(),
            pending: BTreeSet::new(),
            strings: BTreeMap::new(),
            opaque: HashMap::new(),
            frames: Vec::new(),
            cache: HashMap::new(),
            boxes: BoxTable::new(),
            stats: Stats::default(),
        };
        s.start()?;
        Ok(s)
    }

    fn start(&mut self) -> Result<(), SmtError> {
        let Some((prog, args)) = self.cfg.cmd.split_first() else {
            return Err(SmtError::Start { cmd: String::new(), msg: "empty command".into() });
        };
        let start_err = |e: std::io::Error| SmtError::Start { cmd: self.cfg.cmd.join(" "), msg: e.to_string() };
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(start_err)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        self.proc = Some(Proc { child, stdin, stdout });
        self.declared.clear();
        self.pending.clear();
        let mut prelude = PRELUDE.to_string();
        let _ = writeln!(prelude, "(set-option :timeout {})", self.cfg.timeout_ms);
        self.send(&prelude)?;
        self.sync().map_err(|e| SmtError::Start { cmd: self.cfg.cmd.join(" "), msg: e.to_string() })?;
        for t in TAGS {
            self.string_const(t);
        }
        let decls = self.pending_decls();
        self.send(&decls)?;
        for frame in self.frames.clone() {
            let text = self.frame_text(&frame)?;
            self.send(&text)?;
        }
        Ok(())
    }

    /// Kills the solver and starts a fresh one with the current frames replayed.
    pub fn restart(&mut self) -> Result<(), SmtError> {
        self.proc = None;
        self.start()
    }

    fn send(&mut self, text: &str) -> Result<(), SmtError> {
        if let Some(log) = &mut self.log {
            log.write_all(text.as_bytes())?;
        }
        let p = self.proc.as_mut().ok_or_else(|| SmtError::Protocol("solver not running".into()))?;
        p.stdin.write_all(text.as_bytes())?;
        p.stdin.flush()?;
        Ok(())
    }

    fn read_line(&mut self) -> Result<String, SmtError> {
        let p = self.proc.as_mut().ok_or_else(|| SmtError::Protocol("solver not running".into()))?;
        let mut line = String::new();
        if p.stdout.read_line(&mut line)? == 0 {
            return Err(SmtError::Protocol("solver closed its output".into()));
        }
        Ok(line.trim().to_string())
    }

    /// Waits until the solver has consumed everything sent so far, ignoring unsupported options.
    fn sync(&mut self) -> Result<(), SmtError> {
        self.send("(echo \"sync\")\n")?;
        loop {
            let line = self.read_line()?;
            if line == "sync" {
                return Ok(());
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    // -- encoding ----------------------------------------------------------

    fn declare(&mut self, name: String) -> String {
        if !self.declared.contains(&name) {
            self.pending.insert(name.clone());
        }
        name
    }

    fn string_const(&mut self, s: &str) -> String {
        let n = self.strings.len();
        let idx = *self.strings.entry(s.to_string()).or_insert(n);
        self.declare(format!("|s:{idx}|"))
    }

    /// Declarations for symbols not yet sent to the solver.
    fn pending_decls(&mut self) -> String {
        let mut out = String::new();
        let sent: BTreeSet<String> = std::mem::take(&mut self.pending);
        self.declared.extend(sent.iter().cloned());
        for d in &sent {
            let _ = writeln!(out, "(declare-const {d} Val)");
        }
        for (s, idx) in &self.strings {
            let name = format!("|s:{idx}|");
            if sent.contains(&name) {
                let _ = writeln!(out, "(assert (= (strIdx {name}) {idx})) ; {s:?}");
            }
        }
        out
    }

    fn value(&mut self, w: &Value) -> Result<String, SmtError> {
        Ok(match w {
            Value::Var(x) => self.declare(quote(&format!("v:{x}"))),
            Value::Const(c) => match c {
                Const::Int(n) if *n < 0 => format!("(ofInt (- {}))", n.unsigned_abs()),
                Const::Int(n) => format!("(ofInt {n})"),
                Const::Bool(true) => "vtrue".into(),
                Const::Bool(false) => "vfalse".into(),
                Const::Null => "vnull".into(),
                Const::EmptyDict => "vempty".into(),
                Const::Str(s) => self.string_const(s),
                Const::Prim(p) => self.declare(quote(&format!("p:{}", p.ident()))),
                Const::Partial(..) => self.opaque(w),
            },
            Value::Extend(d, k, v) => format!("(ext {} {} {})", self.value(d)?, self.value(k)?, self.value(v)?),
            Value::Fun(..) | Value::TFun(..) | Value::New(..) => self.opaque(w),
        })
    }

    fn opaque(&mut self, w: &Value) -> String {
        let key = alpha_canonical_value(&erase_value(w));
        let n = self.opaque.len();
        let idx = *self.opaque.entry(key).or_insert(n);
        self.declare(format!("|o:{idx}|"))
    }

    fn lval(&mut self, lw: &LVal) -> Result<String, SmtError> {
        Ok(match lw {
            LVal::Nu => return Err(SmtError::Encoding("value variable in a query".into())),
            LVal::Val(w) => self.value(w)?,
            LVal::App(f, args) => {
                let name = match f {
                    Func::Sel => "sel",
                    Func::Tag => "tag",
                    Func::Plus => "plus",
                    Func::Minus => "minus",
                };
                let mut s = format!("({name}");
                for a in args {
                    s.push(' ');
                    s.push_str(&self.lval(a)?);
                }
                s.push(')');
                s
            }
        })
    }

    fn formula(&mut self, p: &Formula) -> Result<String, SmtError> {
        Ok(match p {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Pred(pr, args) => {
                let a: Vec<String> = args.iter().map(|a| self.lval(a)).collect::<Result<_, _>>()?;
                match pr {
                    Pred::Eq => format!("(= {} {})", a[0], a[1]),
                    Pred::Has => format!("(has {} {})", a[0], a[1]),
                    Pred::EqMod => format!("(eqmod {} {} {})", a[0], a[1], a[2]),
                    Pred::Lt => format!("(< (toInt {}) (toInt {}))", a[0], a[1]),
                    Pred::Le => format!("(<= (toInt {}) (toInt {}))", a[0], a[1]),
                }
            }
            Formula::HasType(lw, u) => {
                let id = self.boxes.box_id(u);
                format!("(hasTyp {} {id})", self.lval(lw)?)
            }
            Formula::And(ps) if ps.is_empty() => "true".into(),
            Formula::Or(ps) if ps.is_empty() => "false".into(),
            Formula::And(ps) | Formula::Or(ps) => {
                let op = if matches!(p, Formula::And(_)) { "and" } else { "or" };
                let mut s = format!("({op}");
                for q in ps {
                    s.push(' ');
                    s.push_str(&self.formula(q)?);
                }
                s.push(')');
                s
            }
            Formula::Not(q) => format!("(not {})", self.formula(q)?),
            Formula::Implies(a, b) => format!("(=> {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Iff(a, b) => format!("(= {} {})", self.formula(a)?, self.formula(b)?),
        })
    }

    /// Arithmetic facts about the integer-valued terms of a query.
    fn arith_facts(&mut self, terms: &Terms) -> Result<String, SmtError> {
        let mut out = String::new();
        for t in &terms.terms {
            match t {
                LVal::Val(Value::Const(Const::Int(n))) => {
                    let e = self.lval(t)?;
                    let n = if *n < 0 { format!("(- {})", n.unsigned_abs()) } else { n.to_string() };
                    let _ = writeln!(out, "(assert (= (toInt {e}) {n}))");
                }
                LVal::App(f @ (Func::Plus | Func::Minus), args) => {
                    let e = self.lval(t)?;
                    let (a, b) = (self.lval(&args[0])?, self.lval(&args[1])?);
                    let op = if *f == Func::Plus { "+" } else { "-" };
                    let int_tag = self.string_const("Int");
                    let _ = writeln!(out, "(assert (= (toInt {e}) ({op} (toInt {a}) (toInt {b}))))");
                    let _ = writeln!(out, "(assert (= (tag {e}) {int_tag}))");
                }
                _ => {}
            }
            if !t.mentions_nu() {
                let e = self.lval(t)?;
                let int_tag = self.string_const("Int");
                let _ = writeln!(out, "(assert (=> (= (tag {e}) {int_tag}) (= (ofInt (toInt {e})) {e})))");
            }
        }
        Ok(out)
    }

    /// Assertions for `fs`, preceded by a push and by any new declarations.
    fn frame_text(&mut self, fs: &[Formula]) -> Result<String, SmtError> {
        let mut body = String::new();
        for f in fs {
            let _ = writeln!(body, "(assert {})", self.formula(f)?);
        }
        Ok(self.pending_decls() + "(push 1)\n" + &body)
    }

    // -- queries -----------------------------------------------------------

    /// Asserts `fs` in a new frame for the duration of `body`.
    pub fn with_assumptions<T>(
        &mut self,
        fs: &[Formula],
        body: impl FnOnce(&mut Session) -> T,
    ) -> Result<T, SmtError> {
        let text = self.frame_text(fs)?;
        self.send(&text)?;
        self.frames.push(fs.to_vec());
        let r = body(self);
        self.frames.pop();
        self.send("(pop 1)\n")?;
        Ok(r)
    }

    /// Decides whether the active frames and `hyps` entail `goal`.
    pub fn check_valid(&mut self, hyps: &[Formula], goal: &Formula) -> Result<Verdict, SmtError> {
        let mut context: Vec<Formula> = self.frames.iter().flatten().cloned().collect();
        context.extend(hyps.iter().cloned());
        let key = (context, goal.clone());
        if let Some(v) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(*v);
        }
        let started = Instant::now();
        let mut all: Vec<&Formula> = key.0.iter().collect();
        all.push(goal);
        let terms = Terms::collect(&all);
        let axioms = instantiate_axioms(&terms, self.cfg.instance_cap)?;
        let mut body = String::new();
        for f in hyps.iter().chain(axioms.iter()) {
            let _ = writeln!(body, "(assert {})", self.formula(f)?);
        }
        body.push_str(&self.arith_facts(&terms)?);
        let _ = writeln!(body, "(assert (not {}))", self.formula(goal)?);
        let mut text = self.pending_decls();
        text.push_str("(push 1)\n");
        text.push_str(&body);
        text.push_str("(check-sat)\n(pop 1)\n");
        self.send(&text)?;
        let verdict = loop {
            let line = match self.read_line() {
                Ok(l) => l,
                Err(e) => {
                    self.restart()?;
                    return Err(e);
                }
            };
            match line.as_str() {
                "unsat" => break Verdict::Valid,
                "sat" => break Verdict::Invalid,
                "unknown" | "timeout" => break Verdict::Unknown,
                l if l.starts_with("(error") => {
                    self.restart()?;
                    return Err(SmtError::Protocol(l.to_string()));
                }
                _ => continue,
            }
        };
        self.stats.queries += 1;
        self.stats.wall += started.elapsed();
        if verdict != Verdict::Unknown {
            self.cache.insert(key, verdict);
        }
        Ok(verdict)
    }

    pub fn is_valid(&mut self, hyps: &[Formula], goal: &Formula) -> Result<bool, SmtError> {
        Ok(self.check_valid(hyps, goal)? == Verdict::Valid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn session() -> Session {
        Session::open(SolverConfig::default()).unwrap()
    }

    #[test]
    fn tautology_is_valid() {
        let mut s = session();
        let p = f("has(d, k)");
        assert_eq!(s.check_valid(&[], &Formula::implies(p.clone(), p)).unwrap(), Verdict::Valid);
    }

    #[test]
    fn tag_disjunction() {
        let mut s = session();
        let hyps = [f("tag(x) = \"Int\" \\/ tag(x) = \"Bool\""), f("not (tag(x) = \"Int\")")];
        assert_eq!(s.check_valid(&hyps, &f("tag(x) = \"Bool\"")).unwrap(), Verdict::Valid);
    }

    #[test]
    fn type_predicates_are_uninterpreted() {
        let mut s = session();
        assert_eq!(s.check_valid(&[], &f("f :: Int -> Int")).unwrap(), Verdict::Invalid);
    }

    #[test]
    fn distinct_strings_and_ints() {
        let mut s = session();
        assert!(s.is_valid(&[], &f("not (\"a\" = \"b\")")).unwrap());
        assert!(s.is_valid(&[], &f("not (\"a\" = 1)")).unwrap());
        assert!(s.is_valid(&[], &f("1 + 2 = 3")).unwrap());
        assert!(s.is_valid(&[f("x = 2")], &f("x + 1 = 3")).unwrap());
        assert!(!s.is_valid(&[], &f("1 + 2 = 4")).unwrap());
    }

    #[test]
    fn dictionary_reasoning() {
        let mut s = session();
        let d = LVal::Val(Value::extend(Value::empty(), Value::str("a"), Value::int(1)));
        let hyp = Formula::eq(LVal::var("d"), d);
        assert!(s.is_valid(&[hyp], &f("sel(d, \"a\") = 1 /\\ has(d, \"a\") /\\ not has(d, \"b\")")).unwrap());
        let hyps = [f("eqmod(e, d, \"b\")"), f("has(d, \"a\")")];
        assert!(s.is_valid(&hyps, &f("has(e, \"a\")")).unwrap());
    }

    #[test]
    fn negative_literals() {
        let mut s = session();
        assert!(s.is_valid(&[], &parse_formula("-3 + 1 = -2").unwrap()).unwrap());
        assert!(!s.is_valid(&[], &parse_formula("-3 = 3").unwrap()).unwrap());
    }

    #[test]
    fn frames_nest_and_pop() {
        let mut s = session();
        let goal = f("x = 1");
        let inner = s
            .with_assumptions(&[Formula::False], |s| s.check_valid(&[], &goal).unwrap())
            .unwrap();
        assert_eq!(inner, Verdict::Valid);
        assert_eq!(s.check_valid(&[], &goal).unwrap(), Verdict::Invalid);
        assert_eq!(s.depth(), 0);
    }

    #[test]
    fn bogus_command_fails_to_start() {
        let cfg = SolverConfig::default().with_command_line("definitely-not-a-solver-binary");
        assert!(matches!(Session::open(cfg), Err(SmtError::Start { .. })));
    }
}
