use uamm_core::sim::{feed::Feed, run, scenario::Scenario, RunOptions};
use uamm_core::snapshot;
use uamm_core::state::SlippageMode;

const SCENARIO: &str = r#"{"t":0,"op":"genesis","tokens":["A","B","C"],"prices":{"A":"0.2","B":"0.3","C":"0.5"},"deposit":{"A":"500","B":"300","C":"200"}}
{"t":0,"op":"agent","kind":"noise_trader","until":300,"min":"1","max":"20","rate":"1/10"}
{"t":0,"op":"agent","kind":"arbitrageur","until":300,"fee":"0.001"}
{"t":40,"op":"add","account":"lp1","basket":{"A":"50","C":"10"}}
{"t":120,"op":"remove","account":"lp1","shares":"5"}
{"t":200,"op":"swap","in":"C","out":"A","amount":"25"}
"#;

const FEED: &str = "tick,token,price_decimal
0,A,0.2
0,B,0.3
0,C,0.5
100,A,0.25
100,C,0.45
250,B,0.28
";

#[test]
fn runs_are_reproducible() {
    let scenario = Scenario::parse(SCENARIO).unwrap();
    let feed = Feed::parse(FEED).unwrap();
    let options = RunOptions { seed: 42, mode: SlippageMode::OutputOnly, oracle_lag: 10 };
    let a = run(&scenario, &feed, &options).unwrap();
    let b = run(&scenario, &feed, &options).unwrap();
    assert_eq!(a.metrics_csv, b.metrics_csv);
    assert_eq!(a.report_json(), b.report_json());
    assert_eq!(a.final_state_json, b.final_state_json);

    let rows = a.metrics_csv.lines().count() - 1;
    let total = a.report["transactions"]["total"].as_u64().unwrap() as usize;
    assert_eq!(rows, total + 1);
    assert!(a.arbitrage_executed() > 0);
    assert_eq!(snapshot::from_json(&a.final_state_json).unwrap().mode(), SlippageMode::OutputOnly);
    let other = run(&scenario, &feed, &RunOptions { seed: 43, ..options }).unwrap();
    assert_ne!(other.metrics_csv, a.metrics_csv);
}

#[test]
fn input_slippage_pays_arbitrage_at_fair_prices() {
    let text = r#"{"t":0,"op":"genesis","tokens":["A","B","C"],"prices":{"A":"0.2","B":"0.3","C":"0.5"},"deposit":{"A":"500","B":"300","C":"200"}}
{"t":0,"op":"agent","kind":"noise_trader","until":10,"min":"1","max":"20","rate":"1/10"}
{"t":0,"op":"agent","kind":"arbitrageur","until":10,"fee":"0.001"}"#;
    let scenario = Scenario::parse(text).unwrap();
    let feed = Feed::parse("tick,token,price_decimal\n0,A,0.2\n0,B,0.3\n0,C,0.5\n").unwrap();
    let at = |mode| run(&scenario, &feed, &RunOptions { seed: 42, mode, oracle_lag: 0 }).unwrap();
    let output_only = at(SlippageMode::OutputOnly);
    assert_eq!(output_only.arbitrage_opportunities(), 0);
    let input = at(SlippageMode::InputAndOutput);
    assert!(input.arbitrage_executed() > 0);
    assert_eq!(input.report["mode"], "input-and-output");
    assert_eq!(input.report_json(), at(SlippageMode::InputAndOutput).report_json());
}

#[test]
fn every_decimal_has_eighteen_places() {
    let out = run(
        &Scenario::parse(SCENARIO).unwrap(),
        &Feed::parse(FEED).unwrap(),
        &RunOptions::default(),
    )
    .unwrap();
    let decimal = |s: &str| s.split_once('.').is_some_and(|(_, f)| f.len() == 18);
    for line in out.metrics_csv.lines().skip(1) {
        for field in line.split(',').filter(|f| f.contains('.')) {
            assert!(decimal(field), "{field}");
        }
    }
    let report = out.report_json();
    for s in report.split('"').filter(|s| s.contains('.') && s.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-')) {
        assert!(decimal(s), "{s}");
    }
}
