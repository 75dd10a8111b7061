//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test -p uamm-core --test acceptance`

use std::process::ExitCode;
use std::time::{Duration, Instant};

use uamm_core::num::Price;
use uamm_core::oracle::ledger;
use uamm_core::oracle::{property, OracleConfig, Uamm};
use uamm_core::sim::{feed::Feed, run, scenario::Scenario, RunOptions, RunOutput};
use uamm_core::state::{SlippageMode, TokenId};

const TICKS: u64 = 10_000;

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn properties(config: &OracleConfig, names: &[&str]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for name in names {
        let r = property(name, config, &Uamm).unwrap_or_else(|| panic!("{name} not run"));
        passed &= r.applicable && r.passed();
        parts.push(format!(
            "{name}[{} mode] {} cases, {} failures, {} skipped",
            config.mode.as_str(),
            r.cases,
            r.failures,
            r.skipped
        ));
        if let Some(c) = r.first_counterexample.as_ref().filter(|_| !r.passed()) {
            parts.push(format!("counterexample: {c}"));
        }
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn both(a: Outcome, b: Outcome) -> Outcome {
    Outcome {
        passed: a.passed && b.passed,
        detail: format!("{}; {}", a.detail, b.detail),
    }
}

fn output_only() -> OracleConfig {
    OracleConfig::default()
}

fn input_mode() -> OracleConfig {
    OracleConfig::default().with_mode(SlippageMode::InputAndOutput)
}

fn market_run(every: u64, step: u32, lag: u64) -> RunOutput {
    let until = TICKS - 1;
    let text = [
        r#"{"t":0,"op":"genesis","tokens":["A","B"],"prices":{"A":"0.5","B":"0.5"},"deposit":{"A":"1000","B":"1000"}}"#.to_string(),
        r#"{"t":0,"op":"swap","in":"A","out":"B","amount":"600"}"#.to_string(),
        format!(r#"{{"t":0,"op":"agent","kind":"noise_trader","until":{until},"min":"1","max":"50","rate":"1/500"}}"#),
        format!(r#"{{"t":0,"op":"agent","kind":"arbitrageur","until":{until}}}"#),
    ]
    .join("\n");
    let scenario = Scenario::parse(&text).expect("scenario parses");
    let start: Vec<(TokenId, Price)> = ["A", "B"]
        .iter()
        .map(|t| (TokenId::new(*t), Price::from_ratio(1, 2)))
        .collect();
    let feed = Feed::random_walk(&start, TICKS, every, step, 1);
    let options = RunOptions {
        oracle_lag: lag,
        ..Default::default()
    };
    run(&scenario, &feed, &options).expect("simulation runs")
}

fn no_arbitrage() -> Outcome {
    let t = Instant::now();
    let efficient = market_run(1, 5, 0);
    let lagged = market_run(250, 20, 5);
    let elapsed = t.elapsed();
    let quiet = efficient.arbitrage_executed() == 0 && efficient.arbitrage_opportunities() == 0;
    let found = lagged.arbitrage_executed() > 0;
    Outcome {
        passed: quiet && found && elapsed < Duration::from_secs(60),
        detail: format!(
            "efficient feed over {TICKS} ticks: {} opportunities, {} executed; lagged feed: {} executed; {:.1?} (< 60 s)",
            efficient.arbitrage_opportunities(),
            efficient.arbitrage_executed(),
            lagged.arbitrage_executed(),
            elapsed
        ),
    }
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "add/remove additivity and reversibility",
            Box::new(|| {
                let t = Instant::now();
                let mut o = properties(
                    &output_only(),
                    &["liquidity_additivity", "liquidity_reversibility", "basket_conversion"],
                );
                let elapsed = t.elapsed();
                o.passed &= elapsed < Duration::from_secs(30);
                o.detail = format!("{}; {elapsed:.1?} (< 30 s)", o.detail);
                o
            }),
        ),
        (
            "swap additivity and USX mixing, output-only",
            Box::new(|| properties(&output_only(), &["swap_additivity", "usx_mixing"])),
        ),
        (
            "output boundedness",
            Box::new(|| {
                both(
                    properties(&output_only(), &["output_boundedness"]),
                    properties(&input_mode(), &["output_boundedness"]),
                )
            }),
        ),
        (
            "weak reversibility",
            Box::new(|| properties(&output_only(), &["weak_reversibility"])),
        ),
        (
            "homogeneity, both modes",
            Box::new(|| {
                both(
                    properties(&output_only(), &["homogeneity"]),
                    properties(&input_mode(), &["homogeneity"]),
                )
            }),
        ),
        (
            "convergence and price ordering",
            Box::new(|| properties(&output_only(), &["convergence", "price_ordering", "fd_spontaneous"])),
        ),
        (
            "branch continuity",
            Box::new(|| properties(&output_only(), &["branch_continuity"])),
        ),
        (
            "input-and-output additivity divergence",
            Box::new(|| {
                let mut config = input_mode();
                config.expect_additivity_failure = true;
                properties(&config, &["additivity_divergence"])
            }),
        ),
        (
            "TB swap-invariance and IGnL accounting",
            Box::new(|| {
                let mut o = properties(&output_only(), &["ledger_consistency"]);
                o.detail = format!("{} ({} events per log)", o.detail, ledger::DENSE_LOG_LEN);
                o
            }),
        ),
        ("no-arbitrage simulation", Box::new(no_arbitrage)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.passed);
        println!(
            "{} {:>2} {name} [{:.1?}]: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed(),
            o.detail
        );
        if i == 8 {
            let budget = Duration::from_secs(20);
            let single = ledger::single_log(10_000, output_only().fuzz_seed, budget);
            let whole = single.completed && single.result.passed();
            println!(
                "{}  9 single 10000-event log (not asserted): {} events in {:.1?}, {} failures{}",
                if whole { "PASS" } else { "FAIL" },
                single.events,
                single.elapsed,
                single.result.failures,
                if single.completed { "" } else { ", budget exhausted" }
            );
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
