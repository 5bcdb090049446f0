use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sentinel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentinel"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/delorean.toml")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_safety_exit_codes() {
    let o = sentinel(&["check-safety", "--formula", "(!t) W (t & f)", "--ap", "t,f"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "Safety");
    let o = sentinel(&["check-safety", "--formula", "F a", "--ap", "a"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "NotSafety");
}

#[test]
fn compile_writes_monitor_documents() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let dot = dir.path().join("m.dot");
    let o = sentinel(&[
        "compile",
        "--formula",
        "G !a | X a",
        "--ap",
        "a",
        "--out",
        path_arg(&out),
        "--dot",
        path_arg(&dot),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["states"].as_array().unwrap().len(), 6);
    assert!(std::fs::read_to_string(&dot)
        .unwrap()
        .starts_with("digraph"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        sentinel(&[
            "compile",
            "--formula",
            "G (a",
            "--ap",
            "a",
            "--out",
            "/dev/null"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        sentinel(&["check-safety", "--formula", "G b", "--ap", "a"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        sentinel(&["casestudy", "--driver", "reckless", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(sentinel(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        sentinel(&[
            "run",
            "--scenario",
            "/nonexistent.toml",
            "--seed",
            "1",
            "--ticks",
            "1",
            "--out",
            "/dev/null"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn malformed_scenario_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario_file())
        .unwrap()
        .replace("nmax = 8", "nmax = \"eight\"");
    assert!(text.contains("\"eight\""));
    std::fs::write(&bad, text).unwrap();
    let o = sentinel(&["validate-sb", "--scenario", path_arg(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("line"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn internal_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing-dir").join("m.json");
    let o = sentinel(&[
        "compile",
        "--formula",
        "G a",
        "--ap",
        "a",
        "--out",
        path_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_sb_passes_shipped_scenario() {
    let o = sentinel(&["validate-sb", "--scenario", path_arg(&scenario_file())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("witnesses: 0"));
}

#[test]
fn validate_sb_flags_inflated_region() {
    let dir = tempfile::tempdir().unwrap();
    let inflated = dir.path().join("inflated.toml");
    let text = std::fs::read_to_string(scenario_file())
        .unwrap()
        .replace("b = 1.66", "b = 3.0");
    std::fs::write(&inflated, text).unwrap();
    let o = sentinel(&["validate-sb", "--scenario", path_arg(&inflated)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("escapes to bot"));
}

#[test]
fn casestudy_summary() {
    let o = sentinel(&["casestudy", "--driver", "faulty-late", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("first intervention: tick 3"), "{text}");
    let line = text
        .lines()
        .find(|l| l.starts_with("tower crossing"))
        .unwrap();
    let v: f64 = line.rsplit("v = ").next().unwrap().parse().unwrap();
    assert!(v >= 2.0, "{line}");
}

#[test]
fn run_artifacts_are_byte_stable_and_no_shield_violates() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_file();
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json", "c.csv", "d.csv"] {
        let out = dir.path().join(name);
        let o = sentinel(&[
            "run",
            "--scenario",
            path_arg(&scenario),
            "--seed",
            "5",
            "--ticks",
            "50",
            "--out",
            path_arg(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
    assert!(String::from_utf8_lossy(&outputs[2]).starts_with("tick,x0,x1"));

    let out = dir.path().join("raw.json");
    let o = sentinel(&[
        "run",
        "--scenario",
        path_arg(&scenario),
        "--seed",
        "7",
        "--ticks",
        "40",
        "--out",
        path_arg(&out),
        "--no-shield",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(trace["shielded"], false);
    assert_eq!(trace["summary"]["bot_reached"], true);
}

#[test]
fn serve_starts_gateway() {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::process::Stdio;

    let mut child = Command::new(env!("CARGO_BIN_EXE_sentinel"))
        .args([
            "serve",
            "--port",
            "0",
            "--tick-ms",
            "50",
            "--scenario",
            path_arg(&scenario_file()),
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("gateway listening on ws://")
        .unwrap()
        .strip_suffix("/ws")
        .unwrap();
    let port = addr.rsplit(':').next().unwrap();
    let mut conn =
        std::net::TcpStream::connect(("127.0.0.1", port.parse::<u16>().unwrap())).unwrap();
    conn.write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .unwrap();
    let mut response = String::new();
    conn.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with("ok"));
}
