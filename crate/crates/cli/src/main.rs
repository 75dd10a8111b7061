use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use uamm_core::num::Quantity;
use uamm_core::oracle::{property_suite, OracleConfig, Uamm};
use uamm_core::sim::{run_files, RunOptions};
use uamm_core::snapshot;
use uamm_core::state::SlippageMode;
use uamm_core::swap::{self, SwapRequest};
use uamm_core::Error;

const DECIMALS: &str = "Every decimal written to stdout, CSV or JSON has exactly 18 fractional \
digits, rounded half-to-even. Inputs accept decimals (0.25, 1e-9) and fractions (3/7).";

const EXIT_CODES: &str = "Exit codes: 0 ok, 1 other error or failed verification, 2 parse error, \
3 invariant violation. Set UAMM_LOG (error, warn, info, debug, trace) for log output on stderr.";

#[derive(Parser)]
#[command(name = "uamm", version, about = "Oracle-anchored market maker: simulate, quote and verify")]
#[command(after_help = format!("{DECIMALS}\n\n{EXIT_CODES}"))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    OutputOnly,
    InputAndOutput,
}

impl From<Mode> for SlippageMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::OutputOnly => SlippageMode::OutputOnly,
            Mode::InputAndOutput => SlippageMode::InputAndOutput,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSONL scenario against a CSV price feed; writes metrics.csv,
    /// final_state.json and report.json into the output directory.
    #[command(after_help = DECIMALS)]
    Run {
        #[arg(long, value_name = "FILE")]
        scenario: PathBuf,
        /// CSV with header `tick,token,price_decimal`.
        #[arg(long, value_name = "FILE")]
        feed: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "output-only")]
        mode: Mode,
        /// Ticks by which the pool oracle trails the feed.
        #[arg(long, default_value_t = 0, value_name = "TICKS")]
        oracle_lag: u64,
    },
    /// Print the quote for a swap against a state snapshot, as JSON.
    #[command(after_help = DECIMALS)]
    Quote {
        #[arg(long, value_name = "FILE")]
        state: PathBuf,
        #[arg(long = "in", value_name = "TOKEN")]
        token_in: String,
        #[arg(long = "out", value_name = "TOKEN")]
        token_out: String,
        #[arg(long, value_name = "DECIMAL")]
        amount: String,
    },
    /// Run the property suite against the engine.
    #[command(after_help = DECIMALS)]
    Verify {
        /// Cases for every fuzzed property (default: per-property counts).
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "output-only")]
        mode: Mode,
        /// Require swap additivity to fail wherever input slippage is active.
        #[arg(long)]
        expect_additivity_failure: bool,
        /// Also write the JSON report here.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::ParseAt { .. } | Error::InvalidEvent { .. } => 2,
        Error::InvariantViolation(_) => 3,
        _ => 1,
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run {
            scenario,
            feed,
            out,
            seed,
            mode,
            oracle_lag,
        } => {
            let options = RunOptions {
                seed,
                mode: mode.into(),
                oracle_lag,
            };
            let output = run_files(&scenario, Some(&feed), &options)?;
            output.write(&out)?;
            info!("wrote {}", out.display());
            println!(
                "{} transactions, {} arbitrage trades executed; outputs in {}",
                output.report["transactions"]["total"],
                output.arbitrage_executed(),
                out.display()
            );
            Ok(0)
        }
        Command::Quote {
            state,
            token_in,
            token_out,
            amount,
        } => {
            let pool = snapshot::from_json(&std::fs::read_to_string(&state)?)?;
            let amount = Quantity::parse(&amount)?;
            let q = swap::quote(&pool, &SwapRequest::new(token_in, token_out, amount))?;
            println!("{}", serde_json::to_string_pretty(&q.to_json()).expect("quote serializes"));
            Ok(0)
        }
        Command::Verify {
            cases,
            seed,
            mode,
            expect_additivity_failure,
            report,
        } => {
            let mut config = OracleConfig::default().with_mode(mode.into());
            if let Some(n) = cases {
                config = config.with_cases(n);
            }
            if let Some(s) = seed {
                config = config.with_seed(s);
            }
            config.expect_additivity_failure = expect_additivity_failure;
            let result = property_suite(&config, &Uamm);
            for p in &result.properties {
                let status = match (p.applicable, p.passed()) {
                    (false, _) => "n/a ",
                    (true, true) => "pass",
                    (true, false) => "FAIL",
                };
                println!(
                    "{status} {:<24} cases={} failures={} skipped={}",
                    p.name, p.cases, p.failures, p.skipped
                );
                if let Some(c) = p.first_counterexample.as_ref().filter(|_| !p.passed()) {
                    println!("     counterexample: {c}");
                }
            }
            let json = serde_json::to_string_pretty(&result.to_json()).expect("report serializes");
            if let Some(path) = report {
                std::fs::write(&path, format!("{json}\n"))?;
            }
            println!("{}", if result.passed { "all properties hold" } else { "verification failed" });
            Ok(if result.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UAMM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidEvent { seq: 1, message: "x".into() }), 2);
        assert_eq!(exit_code(&Error::InvariantViolation("x".into())), 3);
        assert_eq!(exit_code(&Error::ZeroAmount), 1);
    }
}
