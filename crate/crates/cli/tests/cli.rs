use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const GENESIS: &str = r#"{"t":0,"op":"genesis","tokens":["A","B"],"prices":{"A":"0.5","B":"0.5"},"deposit":{"A":"100","B":"100"}}"#;
const FEED: &str = "tick,token,price_decimal\n0,A,0.5\n0,B,0.5\n";

fn uamm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uamm"))
        .args(args)
        .env("UAMM_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_inputs(dir: &Path, scenario: &str, feed: &str) -> (String, String) {
    let s = dir.join("scenario.jsonl");
    let f = dir.join("feed.csv");
    fs::write(&s, scenario).unwrap();
    fs::write(&f, feed).unwrap();
    (s.display().to_string(), f.display().to_string())
}

fn run_in(dir: &Path, scenario: &str, feed: &str, out: &str, extra: &[&str]) -> Output {
    let (s, f) = write_inputs(dir, scenario, feed);
    let out = dir.join(out).display().to_string();
    let mut args = vec!["run", "--scenario", &s, "--feed", &f, "--out", &out];
    args.extend_from_slice(extra);
    uamm(&args)
}

#[test]
fn help_documents_decimal_format() {
    for args in [&["--help"][..], &["run", "--help"], &["quote", "--help"], &["verify", "--help"]] {
        let o = uamm(args);
        assert!(o.status.success());
        assert!(stdout(&o).contains("18 fractional digits, rounded half-to-even"), "{args:?}");
    }
}

#[test]
fn genesis_only_run_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), GENESIS, FEED, "out", &["--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains(",0.000000000000000000,"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["final"]["ignl"], "0.000000000000000000");
    assert_eq!(report["final"]["label"], "flat");
    let state = fs::read_to_string(dir.path().join("out/final_state.json")).unwrap();
    assert!(state.contains("\"100.000000000000000000\""));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = format!(
        "{GENESIS}\n{}\n{}\n{}\n",
        r#"{"t":0,"op":"agent","kind":"noise_trader","until":200,"min":"0.5","max":"5","rate":"1/4"}"#,
        r#"{"t":0,"op":"agent","kind":"arbitrageur","until":200}"#,
        r#"{"t":50,"op":"add","account":"lp1","basket":{"A":"10","B":"3"}}"#,
    );
    let feed = "tick,token,price_decimal\n0,A,0.5\n0,B,0.5\n60,A,0.52\n60,B,0.48\n";
    for out in ["a", "b"] {
        let o = run_in(dir.path(), &scenario, feed, out, &["--seed", "7", "--oracle-lag", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["metrics.csv", "final_state.json", "report.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let report = fs::read_to_string(dir.path().join("a/report.json")).unwrap();
    assert!(report.contains("\"oracle_lag\": 3"));
}

#[test]
fn parse_errors_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = format!("{GENESIS}\n{{\"t\":1,\"op\":\"swap\",\"in\":\"A\"\n");
    let o = run_in(dir.path(), &bad, FEED, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column"), "{}", stderr(&o));

    let o = run_in(dir.path(), GENESIS, "tick,token,price_decimal\n0,A,zero\n", "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 3"), "{}", stderr(&o));

    let unknown = format!("{GENESIS}\n{}\n", r#"{"t":1,"op":"swap","in":"A","out":"Q","amount":"1"}"#);
    let o = run_in(dir.path(), &unknown, FEED, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid event #1"));
}

#[test]
fn quote_reads_run_output() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = format!("{GENESIS}\n{}\n", r#"{"t":1,"op":"swap","in":"B","out":"A","amount":"40"}"#);
    let o = run_in(dir.path(), &scenario, FEED, "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let state = dir.path().join("out/final_state.json").display().to_string();

    // A sits below target, B above
    let q = |a: &str, b: &str, amt: &str| uamm(&["quote", "--state", &state, "--in", a, "--out", b, "--amount", amt]);
    let above = q("A", "B", "10");
    assert!(above.status.success(), "{}", stderr(&above));
    let json: serde_json::Value = serde_json::from_str(&stdout(&above)).unwrap();
    assert_eq!(json["usx"], "1.000000000000000000");
    assert_eq!(json["branch"], "above_target");
    assert_eq!(json["amount_out"], "10.000000000000000000");
    assert_eq!(stdout(&above), stdout(&q("A", "B", "10")));

    let below: serde_json::Value = serde_json::from_str(&stdout(&q("B", "A", "10"))).unwrap();
    assert_ne!(below["usx"], "1.000000000000000000");

    let zero = q("A", "B", "0");
    assert_eq!(zero.status.code(), Some(1));
    assert!(stderr(&zero).contains("amount must be positive"));
    assert_eq!(q("A", "B", "ten").status.code(), Some(2));
}

#[test]
fn verify_modes_and_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json").display().to_string();
    let ok = uamm(&["verify", "--cases", "40", "--seed", "3", "--report", &report]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["seed"], 3);

    let input = ["verify", "--cases", "40", "--mode", "input-and-output"];
    let fails = uamm(&input);
    assert_eq!(fails.status.code(), Some(1));
    assert!(stdout(&fails).contains("FAIL swap_additivity"));
    assert!(stdout(&fails).contains("counterexample"));

    let expected = uamm(&[&input[..], &["--expect-additivity-failure"]].concat());
    assert_eq!(expected.status.code(), Some(0), "{}", stdout(&expected));
    assert!(stdout(&expected).contains("pass additivity_divergence"));
}
