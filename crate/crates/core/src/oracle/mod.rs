//! Independent checks of the engine: reference routes, micro-trade
//! composition, finite-difference prices and a seeded property suite.

pub mod engine;
pub mod gen;
pub mod ledger;
mod properties;
pub mod reference;

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::num::{pow10_neg, Rational};
use crate::state::SlippageMode;

pub use engine::{CrossingMutant, Engine, RemoveMutant, Uamm};
pub use properties::{property, PROPERTIES};
pub use reference::{fd_marginal_price, micro_swap_compose};

/// Default case count per property.
pub const DEFAULT_CASES: &[(&str, usize)] = &[
    ("liquidity_additivity", 10_000),
    ("liquidity_reversibility", 10_000),
    ("basket_conversion", 10_000),
    ("swap_additivity", 10_000),
    ("usx_mixing", 10_000),
    ("additivity_divergence", 10_000),
    ("output_boundedness", 100_000),
    ("weak_reversibility", 100_000),
    ("homogeneity", 10_000),
    ("convergence", 100_000),
    ("price_ordering", 100_000),
    ("fd_spontaneous", 10_000),
    ("branch_continuity", 1_000),
    ("monotonicity", 10_000),
    ("ledger_consistency", 10_000),
];

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Largest split used by the micro-swap composition check.
    pub micro_steps: usize,
    pub fd_epsilon: Rational,
    pub fuzz_seed: u64,
    pub case_counts: BTreeMap<String, usize>,
    pub mode: SlippageMode,
    /// Replaces `swap_additivity` by `additivity_divergence`, which passes
    /// only when every case with active input slippage breaks additivity.
    pub expect_additivity_failure: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            micro_steps: 100,
            fd_epsilon: pow10_neg(9),
            fuzz_seed: 0x5eed,
            case_counts: DEFAULT_CASES
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            mode: SlippageMode::OutputOnly,
            expect_additivity_failure: false,
        }
    }
}

impl OracleConfig {
    pub fn with_mode(mut self, mode: SlippageMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fuzz_seed = seed;
        self
    }

    /// Sets every fuzz count to `n`.
    pub fn with_cases(mut self, n: usize) -> Self {
        for v in self.case_counts.values_mut() {
            *v = n;
        }
        self
    }

    pub fn cases(&self, property: &str) -> usize {
        self.case_counts.get(property).copied().unwrap_or(1_000)
    }

    /// Micro-swap splits: `{1, 2, 3, 10, 100}` capped at `micro_steps`,
    /// plus `micro_steps` itself.
    pub fn splits(&self) -> Vec<usize> {
        let mut s: Vec<usize> = [1, 2, 3, 10, 100]
            .into_iter()
            .filter(|&n| n <= self.micro_steps)
            .collect();
        if !s.contains(&self.micro_steps) {
            s.push(self.micro_steps);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub applicable: bool,
    pub cases: u64,
    pub failures: u64,
    pub skipped: u64,
    pub first_counterexample: Option<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        !self.applicable || (self.failures == 0 && self.cases > self.skipped)
    }

    pub fn not_applicable(name: &str) -> Self {
        Self {
            name: name.into(),
            applicable: false,
            cases: 0,
            failures: 0,
            skipped: 0,
            first_counterexample: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub engine: String,
    pub seed: u64,
    pub mode: SlippageMode,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

impl Report {
    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &PropertyResult> {
        self.properties.iter().filter(|p| !p.passed())
    }

    /// `{engine, seed, mode, passed, properties: {name: {...}}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let props: serde_json::Map<String, serde_json::Value> = self
            .properties
            .iter()
            .map(|p| {
                (
                    p.name.clone(),
                    serde_json::json!({
                        "applicable": p.applicable,
                        "cases": p.cases,
                        "failures": p.failures,
                        "skipped": p.skipped,
                        "first_counterexample": p.first_counterexample,
                    }),
                )
            })
            .collect();
        serde_json::json!({
            "engine": self.engine,
            "seed": self.seed,
            "mode": self.mode,
            "passed": self.passed,
            "properties": props,
        })
    }
}

/// Runs every property against `engine`.
pub fn property_suite(config: &OracleConfig, engine: &dyn Engine) -> Report {
    let properties: Vec<PropertyResult> = PROPERTIES
        .iter()
        .filter_map(|name| property(name, config, engine))
        .collect();
    Report {
        engine: engine.name().to_string(),
        seed: config.fuzz_seed,
        mode: config.mode,
        passed: properties.iter().all(PropertyResult::passed),
        properties,
    }
}

pub(crate) enum Verdict {
    Pass,
    Skip,
    Fail(String),
}

#[derive(Default)]
struct Tally {
    cases: u64,
    failures: u64,
    skipped: u64,
    first: Option<(usize, String)>,
}

impl Tally {
    fn record(mut self, index: usize, v: Verdict) -> Self {
        self.cases += 1;
        match v {
            Verdict::Pass => {}
            Verdict::Skip => self.skipped += 1,
            Verdict::Fail(msg) => {
                self.failures += 1;
                if self.first.as_ref().is_none_or(|(i, _)| index < *i) {
                    self.first = Some((index, msg));
                }
            }
        }
        self
    }

    fn merge(self, other: Tally) -> Tally {
        let first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        Tally {
            cases: self.cases + other.cases,
            failures: self.failures + other.failures,
            skipped: self.skipped + other.skipped,
            first,
        }
    }

    fn finish(self, name: &str) -> PropertyResult {
        PropertyResult {
            name: name.into(),
            applicable: true,
            cases: self.cases,
            failures: self.failures,
            skipped: self.skipped,
            first_counterexample: self.first.map(|(i, m)| format!("case {i}: {m}")),
        }
    }
}

/// Runs `count` seeded cases in parallel. Case `i` always sees the same
/// generator, whatever the scheduling.
pub(crate) fn run_seeded<F>(name: &str, count: usize, seed: u64, check: F) -> PropertyResult
where
    F: Fn(&mut ChaCha8Rng) -> Verdict + Sync,
{
    let salt = gen::salt(name);
    (0..count)
        .into_par_iter()
        .fold(Tally::default, |t, i| {
            let mut rng = gen::case_rng(seed, salt, i);
            t.record(i, check(&mut rng))
        })
        .reduce(Tally::default, Tally::merge)
        .finish(name)
}

/// Runs one check per item of an exhaustive grid.
pub(crate) fn run_grid<T, F>(name: &str, items: &[T], check: F) -> PropertyResult
where
    T: Sync,
    F: Fn(&T) -> Verdict + Sync,
{
    items
        .par_iter()
        .enumerate()
        .fold(Tally::default, |t, (i, item)| t.record(i, check(item)))
        .reduce(Tally::default, Tally::merge)
        .finish(name)
}

/// Combines the tallies of a grid run and a fuzz run of one property.
pub(crate) fn combine(name: &str, parts: &[PropertyResult]) -> PropertyResult {
    let first = parts.iter().find_map(|p| p.first_counterexample.clone());
    PropertyResult {
        name: name.into(),
        applicable: true,
        cases: parts.iter().map(|p| p.cases).sum(),
        failures: parts.iter().map(|p| p.failures).sum(),
        skipped: parts.iter().map(|p| p.skipped).sum(),
        first_counterexample: first,
    }
}
