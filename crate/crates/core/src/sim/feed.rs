//! External price feed: CSV rows `tick,token,price_decimal`.

use std::collections::BTreeMap;

use serde::Deserialize;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::{format_decimal, parse_rational, ratio, Price};
use crate::state::TokenId;

/// Fractional digits kept by [`Feed::random_walk`].
const WALK_PLACES: u32 = 6;

#[derive(Deserialize)]
struct Row {
    tick: u64,
    token: String,
    price_decimal: String,
}

/// Price quotes grouped by tick, in file order within a tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Feed {
    quotes: BTreeMap<u64, Vec<(TokenId, Price)>>,
}

impl Feed {
    /// Parses the feed; the header row is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let at = |pos: Option<&csv::Position>, column: usize, message: String| Error::ParseAt {
            line: pos.map_or(0, |p| p.line() as usize),
            column,
            message,
        };
        let headers = reader
            .headers()
            .map_err(|e| at(e.position(), 1, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["tick", "token", "price_decimal"] {
            return Err(Error::ParseAt {
                line: 1,
                column: 1,
                message: "header must be `tick,token,price_decimal`".into(),
            });
        }
        let mut feed = Feed::default();
        let mut last = 0;
        for record in reader.records() {
            let record = record.map_err(|e| at(e.position(), 1, e.to_string()))?;
            let pos = record.position().cloned();
            let row: Row = record
                .deserialize(Some(&headers))
                .map_err(|e| {
                    let column = match e.kind() {
                        csv::ErrorKind::Deserialize { err, .. } => err.field().map_or(1, |f| f as usize + 1),
                        _ => 1,
                    };
                    at(pos.as_ref(), column, e.to_string())
                })?;
            let price = Price::parse(&row.price_decimal)
                .map_err(|e| at(pos.as_ref(), 3, e.to_string()))?;
            if row.tick < last {
                return Err(at(pos.as_ref(), 1, format!("tick {} is before {last}", row.tick)));
            }
            last = row.tick;
            feed.quotes
                .entry(row.tick)
                .or_default()
                .push((TokenId::new(row.token), price));
        }
        Ok(feed)
    }

    /// Feed equal to a fixed price map at a single tick.
    pub fn constant(tick: u64, prices: impl IntoIterator<Item = (TokenId, Price)>) -> Self {
        Feed {
            quotes: BTreeMap::from([(tick, prices.into_iter().collect())]),
        }
    }

    /// Seeded multiplicative walk from `start`: every `every` ticks each
    /// price moves by a factor in `[1 − step/1000, 1 + step/1000]`, kept at
    /// six decimals.
    pub fn random_walk(start: &[(TokenId, Price)], ticks: u64, every: u64, step: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let floor = ratio(1, 1_000_000);
        let mut current: Vec<(TokenId, Price)> = start.to_vec();
        let mut quotes = BTreeMap::from([(0, current.clone())]);
        let step = i64::from(step);
        let every = every.max(1);
        for tick in (every..ticks).step_by(every as usize) {
            for (_, p) in current.iter_mut() {
                let k = rng.random_range(-step..=step);
                let moved = p.value() * ratio(1000 + k, 1000);
                let rounded = parse_rational(&format_decimal(&moved, WALK_PLACES)).expect("own output");
                *p = Price::new(rounded.max(floor.clone())).expect("positive");
            }
            quotes.insert(tick, current.clone());
        }
        Feed { quotes }
    }

    /// The feed as CSV with its header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tick,token,price_decimal\n");
        for (tick, row) in &self.quotes {
            for (token, price) in row {
                out.push_str(&format!("{tick},{token},{}\n", price.to_decimal()));
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn last_tick(&self) -> Option<u64> {
        self.quotes.keys().next_back().copied()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &TokenId> {
        self.quotes.values().flatten().map(|(t, _)| t)
    }

    pub fn at(&self, tick: u64) -> &[(TokenId, Price)] {
        self.quotes.get(&tick).map_or(&[], Vec::as_slice)
    }
}

/// Latest quoted price per token, advanced tick by tick.
#[derive(Debug, Clone, Default)]
pub struct PriceView {
    prices: BTreeMap<TokenId, Price>,
    version: u64,
}

impl PriceView {
    /// Folds in the quotes of `tick`; true when any price changed.
    pub fn advance(&mut self, feed: &Feed, tick: u64) -> bool {
        let mut changed = false;
        for (token, price) in feed.at(tick) {
            if self.prices.get(token) != Some(price) {
                self.prices.insert(token.clone(), price.clone());
                changed = true;
            }
        }
        self.version += u64::from(changed);
        changed
    }

    /// Number of ticks on which the view changed.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn get(&self, token: &TokenId) -> Option<&Price> {
        self.prices.get(token)
    }

    /// The view's prices over `tokens`, if every one has been quoted.
    pub fn complete(&self, tokens: &[TokenId]) -> Option<BTreeMap<TokenId, Price>> {
        tokens
            .iter()
            .map(|t| self.prices.get(t).map(|p| (t.clone(), p.clone())))
            .collect()
    }
}
