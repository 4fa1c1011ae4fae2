//! Driver behind the `duckcheck` binary: checking files, running them, and corpus runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use duckcheck_core::eval::{soundness_probe, ProbeReport};
use duckcheck_core::frontend::{load_program, parse_type, FrontendError, Pos, Program};
use duckcheck_core::smt::{Session, SolverConfig};
use duckcheck_core::typing::{check_program, CheckError, CheckOptions, Checker};
use duckcheck_core::{Scheme, TypeEnv};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Default)]
pub struct CheckConfig {
    pub solver: SolverConfig,
    pub strict_elim: bool,
    /// Directory receiving one solver transcript per checked file.
    pub smt_log: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    TypeError,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::TypeError => 1,
            Status::Error => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: &'static str,
    pub rule: String,
    pub message: String,
    pub line: usize,
    pub col: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub smt_queries: u64,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub file: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub stats: Stats,
}

/// A successfully checked program, kept for evaluation.
pub struct Checked {
    pub program: Program,
    pub scheme: Scheme,
}

fn diag(rule: &str, message: String, pos: Pos) -> Diagnostic {
    Diagnostic {
        severity: "error",
        rule: rule.to_string(),
        message,
        line: pos.line,
        col: pos.col,
        clause: None,
        candidates: None,
    }
}

fn open_session(cfg: &CheckConfig, file: &str) -> Result<Session, String> {
    let mut solver = cfg.solver.clone();
    if let Some(dir) = &cfg.smt_log {
        let stem = Path::new(file).file_stem().and_then(|s| s.to_str()).unwrap_or("input");
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        solver.log = Some(dir.join(format!("{stem}.smt2")));
    }
    Session::open(solver).map_err(|e| e.to_string())
}

/// Parses and checks `text`, reporting everything as a [`Report`].
pub fn check_source(file: &str, text: &str, cfg: &CheckConfig) -> (Report, Option<Checked>) {
    let start = Instant::now();
    let mut report = Report {
        file: file.to_string(),
        status: Status::Ok,
        scheme: None,
        diagnostics: Vec::new(),
        stats: Stats::default(),
    };
    let finish = |mut r: Report, queries: u64| {
        r.stats = Stats { smt_queries: queries, wall_ms: start.elapsed().as_millis() as u64 };
        r
    };
    let program = match load_program(text) {
        Ok(p) => p,
        Err(e) => {
            report.status = match e {
                FrontendError::Wf { .. } => Status::TypeError,
                _ => Status::Error,
            };
            let rule = match e {
                FrontendError::Wf { .. } => "WF-TypeDef",
                _ => "plumbing",
            };
            report.diagnostics.push(diag(rule, e.to_string(), e.pos()));
            return (finish(report, 0), None);
        }
    };
    let session = match open_session(cfg, file) {
        Ok(s) => s,
        Err(msg) => {
            report.status = Status::Error;
            report.diagnostics.push(diag("plumbing", msg, Pos::default()));
            return (finish(report, 0), None);
        }
    };
    let mut checker = Checker::new(session, program.defs.clone(), CheckOptions { strict_elim: cfg.strict_elim });
    let result = check_program(&mut checker, &program.body);
    let queries = checker.eng.session.stats().queries as u64;
    match result {
        Ok(s) => {
            report.scheme = Some(s.to_string());
            (finish(report, queries), Some(Checked { program, scheme: s }))
        }
        Err(CheckError::Type(t)) => {
            report.status = Status::TypeError;
            let pos = t
                .binder
                .as_ref()
                .and_then(|b| program.positions.get(b))
                .copied()
                .unwrap_or(Pos { line: 1, col: 1 });
            let mut d = diag(t.rule, t.message.clone(), pos);
            d.clause = t.clause.clone();
            if t.clause.is_some() {
                d.candidates = Some(t.candidates.clone());
            }
            report.diagnostics.push(d);
            (finish(report, queries), None)
        }
        Err(e) => {
            report.status = Status::Error;
            report.diagnostics.push(diag("plumbing", e.to_string(), Pos::default()));
            (finish(report, queries), None)
        }
    }
}

pub fn check_file(path: &Path, cfg: &CheckConfig) -> (Report, Option<Checked>) {
    let file = path.display().to_string();
    match fs::read_to_string(path) {
        Ok(text) => check_source(&file, &text, cfg),
        Err(e) => {
            let r = Report {
                file,
                status: Status::Error,
                scheme: None,
                diagnostics: vec![diag("plumbing", format!("cannot read file: {e}"), Pos::default())],
                stats: Stats::default(),
            };
            (r, None)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Ok,
    TypeError,
}

/// Expectations written as `-- expect:` and `-- scheme:` comment lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Header {
    pub expect: Option<Expect>,
    pub scheme: Option<String>,
}

pub fn parse_header(text: &str) -> Header {
    let mut h = Header::default();
    for line in text.lines() {
        let Some(rest) = line.trim().strip_prefix("--") else { continue };
        let rest = rest.trim();
        if let Some(e) = rest.strip_prefix("expect:") {
            h.expect = match e.trim() {
                "ok" => Some(Expect::Ok),
                "typeerror" => Some(Expect::TypeError),
                _ => None,
            };
        } else if let Some(s) = rest.strip_prefix("scheme:") {
            h.scheme = Some(s.trim().to_string());
        }
    }
    h
}

/// Whether the synthesized scheme is a subtype of the expected one.
pub fn scheme_matches(checked: &Checked, expected: &str, cfg: &CheckConfig) -> Result<bool, String> {
    let want = parse_type(expected).map_err(|e| e.to_string())?;
    let session = Session::open(cfg.solver.clone()).map_err(|e| e.to_string())?;
    let mut c = Checker::new(session, checked.program.defs.clone(), CheckOptions::default());
    match c.eng.subtype(&TypeEnv::new(), &checked.scheme, &want) {
        Ok(()) => Ok(true),
        Err(e) if e.is_fatal() => Err(e.to_string()),
        Err(_) => Ok(false),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    #[serde(flatten)]
    pub report: Report,
    pub expected: Option<Expect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme_ok: Option<bool>,
    pub matched: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub files: Vec<CorpusEntry>,
    pub mismatches: usize,
}

pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dref"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn check_corpus_entry(path: &Path, cfg: &CheckConfig) -> CorpusEntry {
    let text = fs::read_to_string(path).unwrap_or_default();
    let header = parse_header(&text);
    let (report, checked) = check_file(path, cfg);
    let scheme_ok = match (&checked, &header.scheme) {
        (Some(c), Some(s)) => Some(scheme_matches(c, s, cfg).unwrap_or(false)),
        _ => None,
    };
    let matched = match header.expect {
        Some(Expect::Ok) => report.status == Status::Ok && scheme_ok != Some(false),
        Some(Expect::TypeError) => report.status == Status::TypeError,
        None => report.status != Status::Error,
    };
    CorpusEntry { report, expected: header.expect, scheme_ok, matched }
}

/// Checks every `.dref` file in `dir` in parallel, one solver per file.
pub fn run_corpus(dir: &Path, cfg: &CheckConfig) -> std::io::Result<CorpusReport> {
    let files = corpus_files(dir)?;
    let entries: Vec<CorpusEntry> = files.par_iter().map(|p| check_corpus_entry(p, cfg)).collect();
    let mismatches = entries.iter().filter(|e| !e.matched).count();
    Ok(CorpusReport { files: entries, mismatches })
}

pub fn probe(checked: &Checked, fuel: u64) -> ProbeReport {
    soundness_probe(&checked.program.defs, &checked.program.body, &checked.scheme, fuel)
}
