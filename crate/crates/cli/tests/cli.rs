use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn duckcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duckcheck")).args(args).output().expect("binary runs")
}

fn corpus(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(rel).display().to_string()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_prints_the_scheme() {
    let o = duckcheck(&["check", &corpus("pos/negate_dependent.dref")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("IorB"), "{}", stdout(&o));
}

#[test]
fn type_errors_exit_with_one() {
    let o = duckcheck(&["check", &corpus("neg/negate_no_test.dref")]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("error ["), "{err}");
}

#[test]
fn missing_files_exit_with_two() {
    assert_eq!(duckcheck(&["check", "/nonexistent/x.dref"]).status.code(), Some(2));
    assert_eq!(duckcheck(&["run", "/nonexistent/x.dref"]).status.code(), Some(2));
}

#[test]
fn run_prints_the_value() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "a.dref", "let f (x :: Int) :: Int = x + 1 in f 41");
    let o = duckcheck(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "42");
}

#[test]
fn stuck_programs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "a.dref", "1 + true");
    assert_eq!(duckcheck(&["run", f.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(duckcheck(&["run", "--no-check", f.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn divergence_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "a.dref", "let rec loop :: Int -> Int = fun x -> loop x in loop 0");
    let o = duckcheck(&["run", "--fuel", "1000", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_reports_have_the_documented_fields() {
    for file in ["pos/get_count.dref", "neg/get_count_unguarded.dref"] {
        let o = duckcheck(&["check", "--json", &corpus(file)]);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("valid json");
        for k in ["file", "status", "diagnostics", "stats"] {
            assert!(v.get(k).is_some(), "{file} lacks {k}");
        }
        assert!(v["stats"]["smt_queries"].as_u64().unwrap() > 0);
        if file.starts_with("pos") {
            assert_eq!(v["status"], "ok");
            assert!(v["scheme"].is_string());
        } else {
            assert_eq!(v["status"], "typeerror");
            let d = &v["diagnostics"][0];
            assert!(d["rule"].as_str().is_some_and(|r| !r.is_empty()));
            assert!(d["line"].as_u64().unwrap() >= 1);
        }
    }
}

#[test]
fn smt_logs_are_written_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = duckcheck(&["check", "--smt-log", dir.path().to_str().unwrap(), &corpus("pos/negate_simple.dref")]);
    assert_eq!(o.status.code(), Some(0));
    let log = std::fs::read_to_string(dir.path().join("negate_simple.smt2")).unwrap();
    assert!(log.contains("check-sat"));
}

#[test]
fn corpus_runs_match_their_headers() {
    for kind in ["pos", "neg"] {
        let o = duckcheck(&["corpus", "--json", &corpus(kind)]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["mismatches"], 0);
        let files = v["files"].as_array().unwrap();
        assert!(files.len() >= 10);
        assert!(files.iter().all(|f| f["matched"] == true));
    }
}
