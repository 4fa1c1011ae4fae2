use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use duckcheck::{check_file, run_corpus, CheckConfig, Report, Status};
use duckcheck_core::eval::{eval, eval_traced, Outcome};
use duckcheck_core::frontend::load_program;
use duckcheck_core::smt::SolverConfig;

#[derive(Parser)]
#[command(name = "duckcheck", version, about = "Nested refinement type checker and interpreter")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check a program and print its scheme.
    Check {
        file: PathBuf,
        /// Solver command line; it must read SMT-LIB2 on standard input.
        #[arg(long, default_value = "z3 -in -smt2")]
        solver_cmd: String,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
        /// Write solver transcripts into this directory.
        #[arg(long)]
        smt_log: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Restrict variable elimination to conjunctions and implications.
        #[arg(long)]
        strict_elim: bool,
    },
    /// Check, then evaluate a program.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
        /// Print every intermediate expression to stderr.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        no_check: bool,
    },
    /// Check every `.dref` file in a directory against its `-- expect:` header.
    Corpus {
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn print_report(r: &Report) {
    match (&r.status, &r.scheme) {
        (Status::Ok, Some(s)) => println!("{s}"),
        _ => {
            for d in &r.diagnostics {
                eprintln!("{}:{}:{}: {} [{}]: {}", r.file, d.line, d.col, d.severity, d.rule, d.message);
                if let Some(c) = &d.clause {
                    eprintln!("  unproved clause: {c}");
                }
                if let Some(cs) = &d.candidates {
                    eprintln!("  candidates: {{{}}}", cs.join(", "));
                }
            }
        }
    }
}

fn code(n: i32) -> ExitCode {
    ExitCode::from(n as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Check { file, solver_cmd, timeout_ms, smt_log, json, strict_elim } => {
            let cfg = CheckConfig {
                solver: SolverConfig { timeout_ms, ..SolverConfig::default() }.with_command_line(&solver_cmd),
                strict_elim,
                smt_log,
            };
            let (report, _) = check_file(&file, &cfg);
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print_report(&report);
            }
            code(report.status.exit_code())
        }
        Cmd::Run { file, fuel, trace, no_check } => {
            let (program, status) = if no_check {
                let text = match std::fs::read_to_string(&file) {
                    Ok(t) => t,
                    Err(e) => {
                        eprintln!("{}: cannot read file: {e}", file.display());
                        return code(2);
                    }
                };
                match load_program(&text) {
                    Ok(p) => (p, Status::Ok),
                    Err(e) => {
                        eprintln!("{}:{e}", file.display());
                        return code(2);
                    }
                }
            } else {
                let (report, checked) = check_file(&file, &CheckConfig::default());
                match checked {
                    Some(c) => (c.program, report.status),
                    None => {
                        print_report(&report);
                        return code(report.status.exit_code());
                    }
                }
            };
            debug_assert_eq!(status, Status::Ok);
            let run = if trace {
                let mut n = 0u64;
                eval_traced(&program.body, &program.defs, fuel, |e| {
                    eprintln!("{n}: {e}");
                    n += 1;
                })
            } else {
                eval(&program.body, &program.defs, fuel)
            };
            match run.outcome {
                Outcome::Value(w) => {
                    println!("{w}");
                    code(0)
                }
                Outcome::Stuck { reason, state } => {
                    eprintln!("stuck after {} steps: {reason}\n  at: {state}", run.steps);
                    code(3)
                }
                Outcome::OutOfFuel => {
                    eprintln!("out of fuel after {} steps", run.steps);
                    code(4)
                }
            }
        }
        Cmd::Corpus { dir, json } => {
            let report = match run_corpus(&dir, &CheckConfig::default()) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}: {e}", dir.display());
                    return code(2);
                }
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                for e in &report.files {
                    let mark = if e.matched { "ok  " } else { "FAIL" };
                    let got = match e.report.status {
                        Status::Ok => "ok",
                        Status::TypeError => "typeerror",
                        Status::Error => "error",
                    };
                    let rule = e.report.diagnostics.first().map(|d| d.rule.as_str()).unwrap_or("-");
                    println!(
                        "{mark} {:<40} {:<9} {:<12} {:>6} ms {:>5} queries",
                        e.report.file, got, rule, e.report.stats.wall_ms, e.report.stats.smt_queries
                    );
                }
                println!("{} files, {} mismatches", report.files.len(), report.mismatches);
            }
            code(if report.mismatches == 0 { 0 } else { 1 })
        }
    }
}
