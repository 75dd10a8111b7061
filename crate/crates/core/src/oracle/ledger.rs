//! Fuzzed transaction logs checked for target-balance and share accounting.
//!
//! After every event: swaps leave TB alone, an incrementally tracked TV
//! matches the recomputed one, provider shares sum to the supply, pro-rata
//! values sum to TV and net investments sum to TB. At the end of a log the
//! journal replay reproduces TB and the head state.
//!
//! Exact arithmetic makes long logs expensive: every removal folds the
//! current pool value into TB, and TB² enters every later slippage swap, so
//! operand sizes compound with each removal. Dense mixes are therefore run
//! as many short logs.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::market::Market;
use crate::metrics::{self, AccountId};
use crate::num::{int, Quantity};
use crate::state::{Genesis, Outcome, PriceMap, SlippageMode, TokenId, TxKind};
use crate::swap::SwapRequest;

use super::gen::{self, positive, ratio_of, token};
use super::PropertyResult;

/// Events per log in the dense mix.
pub const DENSE_LOG_LEN: usize = 16;

/// Relative weights of the event kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogMix {
    pub set_prices: u32,
    pub add: u32,
    pub remove: u32,
    pub swap: u32,
}

impl LogMix {
    pub const DENSE: LogMix = LogMix {
        set_prices: 10,
        add: 20,
        remove: 15,
        swap: 55,
    };

    fn total(&self) -> u32 {
        self.set_prices + self.add + self.remove + self.swap
    }

    fn pick(&self, roll: u32) -> Event {
        let cuts = [
            (self.set_prices, Event::SetPrices),
            (self.add, Event::Add),
            (self.remove, Event::Remove),
        ];
        let mut edge = 0;
        for (w, e) in cuts {
            edge += w;
            if roll < edge {
                return e;
            }
        }
        Event::Swap
    }
}

#[derive(Clone, Copy)]
enum Event {
    SetPrices,
    Add,
    Remove,
    Swap,
}

#[derive(Debug, Clone)]
pub struct LogRun {
    pub result: PropertyResult,
    /// Events actually processed; less than requested when the deadline hit.
    pub events: usize,
    pub completed: bool,
    pub elapsed: Duration,
}

fn random_prices(rng: &mut impl Rng, tokens: &[TokenId]) -> PriceMap {
    tokens
        .iter()
        .map(|t| (t.clone(), gen::grid_price(rng)))
        .collect()
}

/// Runs one log of up to `events` events, stopping early at `deadline`.
pub fn run_log(
    rng: &mut impl Rng,
    events: usize,
    mix: LogMix,
    deadline: Option<Instant>,
) -> LogRun {
    let start = Instant::now();
    let tokens: Vec<TokenId> = (0..3).map(token).collect();
    let accounts: Vec<AccountId> = (0..4).map(|i| AccountId::new(format!("lp{i}"))).collect();
    let deposit = tokens
        .iter()
        .map(|t| {
            (
                t.clone(),
                Quantity::new(positive(rng, 1000) + int(100)).unwrap(),
            )
        })
        .collect();
    let genesis = Genesis::new(
        tokens.clone(),
        random_prices(rng, &tokens),
        deposit,
        SlippageMode::OutputOnly,
    );
    let mut market = Market::open(genesis, &accounts[0]).expect("valid genesis");
    let mut result = PropertyResult {
        name: "ledger_consistency".into(),
        applicable: true,
        cases: 0,
        failures: 0,
        skipped: 0,
        first_counterexample: None,
    };
    let note = |result: &mut PropertyResult, i: usize, msg: String| {
        result.failures += 1;
        result
            .first_counterexample
            .get_or_insert_with(|| format!("event {i}: {msg}"));
    };
    let mut tv = market.state().pool_value().into_inner();
    let mut processed = 0;

    for i in 0..events {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        processed += 1;
        result.cases += 1;
        let before = market.state().clone();
        let ts = i as u64 + 1;
        let applied = match mix.pick(rng.random_range(0..mix.total())) {
            Event::SetPrices => market.set_prices(random_prices(rng, &tokens), ts),
            Event::Add => {
                let acct = &accounts[rng.random_range(0..accounts.len())];
                let b = gen::basket(rng, &before);
                market.add(acct, b, ts).map(|_| ())
            }
            Event::Remove => {
                let acct = &accounts[rng.random_range(0..accounts.len())];
                let held = market
                    .book()
                    .get(acct)
                    .map(|a| a.shares.clone())
                    .unwrap_or_default();
                // a round fraction of the supply, as much of it as the account holds
                let wanted = before.total_supply().value() * ratio_of(rng, 1, 20, 100);
                let shares = Quantity::new(wanted.min(held.into_inner())).unwrap();
                market.remove(acct, shares, false, ts).map(|_| ())
            }
            Event::Swap => {
                let a = rng.random_range(0..tokens.len());
                let b = (a + rng.random_range(1..tokens.len())) % tokens.len();
                let d = Quantity::new(positive(rng, 200)).unwrap();
                market
                    .swap(
                        SwapRequest::new(tokens[a].clone(), tokens[b].clone(), d),
                        ts,
                    )
                    .map(|_| ())
            }
        };
        if applied.is_err() {
            result.skipped += 1;
            if market.state() != &before {
                note(
                    &mut result,
                    i,
                    "rejected transaction changed the state".into(),
                );
            }
            continue;
        }
        let after = market.state();
        let entry = market.last_entry().expect("applied");
        match (&entry.tx.kind, &entry.outcome) {
            (TxKind::SetFairPrices { prices }, _) => {
                for t in &tokens {
                    tv += before.reserves()[t].value()
                        * (prices[t].value() - before.price(t).unwrap().value());
                }
            }
            (TxKind::Add { .. }, Outcome::Added { value, .. }) => tv += value.value(),
            (TxKind::Remove { .. }, Outcome::Removed { value, .. }) => tv -= value.value(),
            (TxKind::Swap(req), Outcome::Swapped(q)) => {
                tv += req.amount_in.value() * after.price(&req.token_in).unwrap().value();
                tv -= q.amount_out.value() * after.price(&req.token_out).unwrap().value();
                if after.target_balance() != before.target_balance() {
                    note(&mut result, i, "swap moved the target balance".into());
                }
            }
            _ => note(&mut result, i, "outcome does not match transaction".into()),
        }
        let pool_value = after.pool_value();
        if &tv != pool_value.value() {
            note(
                &mut result,
                i,
                format!("incremental TV {tv} ≠ {pool_value}"),
            );
        }
        let book = market.book();
        if &book.total_shares() != after.total_supply() {
            note(
                &mut result,
                i,
                "provider shares do not sum to the supply".into(),
            );
        }
        if &book.total_value(after) != pool_value.value() {
            note(&mut result, i, "provider values do not sum to TV".into());
        }
        if &book.total_invested() != after.target_balance().value() {
            note(
                &mut result,
                i,
                "provider investments do not sum to TB".into(),
            );
        }
    }
    let completed = processed == events;
    if completed {
        match metrics::target_balance(market.journal()) {
            Ok(tb) if &tb == market.state().target_balance().value() => {}
            Ok(tb) => note(
                &mut result,
                events,
                format!("replayed TB {tb} ≠ {}", market.state().target_balance()),
            ),
            Err(e) => note(&mut result, events, e.to_string()),
        }
        match market.journal().replay() {
            Ok(s) if &s == market.state() => {}
            _ => note(&mut result, events, "journal replay diverged".into()),
        }
    }
    LogRun {
        result,
        events: processed,
        completed,
        elapsed: start.elapsed(),
    }
}

/// `events` events of the dense mix, split into logs of [`DENSE_LOG_LEN`].
pub fn dense_logs(events: usize, seed: u64) -> PropertyResult {
    let name = "ledger_consistency";
    let logs = events.div_ceil(DENSE_LOG_LEN);
    let parts: Vec<PropertyResult> = (0..logs)
        .into_par_iter()
        .map(|log| {
            let len = DENSE_LOG_LEN.min(events - log * DENSE_LOG_LEN);
            let mut rng = gen::case_rng(seed, gen::salt(name), log);
            run_log(&mut rng, len, LogMix::DENSE, None).result
        })
        .collect();
    super::combine(name, &parts)
}

/// One dense-mix log of `events` events, abandoned at `budget`.
pub fn single_log(events: usize, seed: u64, budget: Duration) -> LogRun {
    let mut rng = gen::case_rng(seed, gen::salt("ledger_single_log"), 0);
    run_log(&mut rng, events, LogMix::DENSE, Some(Instant::now() + budget))
}
