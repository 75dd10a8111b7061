//! Trading agents driven by the simulator.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{ratio, to_decimal, Price, Quantity, Rational};
use crate::state::{PoolState, TokenId};
use crate::swap::{self, SwapRequest};

use super::scenario::{AgentKind, AgentSpec};

/// Fractions of the output reserve scanned by default; each size is rounded
/// down to the [`SIZE_PLACES`] grid.
pub const DEFAULT_SIZES: [(i64, i64); 7] =
    [(1, 10_000), (1, 1000), (1, 100), (1, 20), (1, 10), (1, 4), (1, 2)];

const RATE_STEPS: i64 = 1_000_000;

/// Agents submit amounts on a grid of `10^-6` token units.
pub const SIZE_PLACES: u32 = 6;

fn on_grid(x: &Rational) -> Rational {
    let scale = Rational::from_integer(BigInt::from(10u32).pow(SIZE_PLACES));
    (x * &scale).floor() / scale
}

/// Random trades of uniformly drawn size between random token pairs.
#[derive(Debug, Clone)]
pub struct NoiseTrader {
    pub min: Rational,
    pub max: Rational,
    pub rate: Rational,
}

impl NoiseTrader {
    pub fn next(&self, rng: &mut ChaCha8Rng, tokens: &[TokenId]) -> Option<SwapRequest> {
        if ratio(rng.random_range(0..RATE_STEPS), RATE_STEPS) >= self.rate {
            return None;
        }
        let a = rng.random_range(0..tokens.len());
        let b = (a + rng.random_range(1..tokens.len())) % tokens.len();
        let u = ratio(rng.random_range(0..=RATE_STEPS), RATE_STEPS);
        let d = &self.min + (&self.max - &self.min) * u;
        Some(SwapRequest::new(tokens[a].clone(), tokens[b].clone(), Quantity::new(d).ok()?))
    }
}

/// Buys from the pool and sells at the external price when the round trip
/// pays: `(out / d) · (p_out / p_in) > 1 + fee`.
#[derive(Debug, Clone)]
pub struct Arbitrageur {
    pub sizes: Vec<Rational>,
    pub fee: Rational,
}

/// A profitable round trip found by a scan.
#[derive(Debug, Clone)]
pub struct Opportunity {
    pub request: SwapRequest,
    pub amount_out: Quantity,
    /// External value received minus external value paid, fee included.
    pub profit: Rational,
}

#[derive(Debug, Clone, Default)]
pub struct ScanResult {
    pub quotes: u64,
    pub best: Option<Opportunity>,
    /// Largest `(out · p_out) / (d · p_in)` seen.
    pub best_ratio: Option<Rational>,
}

impl Arbitrageur {
    pub fn scan(
        &self,
        state: &PoolState,
        external: &dyn Fn(&TokenId) -> Price,
    ) -> Result<ScanResult> {
        let mut result = ScanResult::default();
        let tokens = state.tokens();
        let cost = Rational::one() + &self.fee;
        for token_in in tokens {
            for token_out in tokens.iter().filter(|t| *t != token_in) {
                let rho = swap::fair_rate(state, token_in, token_out)?;
                let reserve = state.reserve(token_out)?.value();
                let (p_in, p_out) = (external(token_in), external(token_out));
                for g in &self.sizes {
                    let d = on_grid(&(g * reserve / &rho));
                    if !d.is_positive() {
                        continue;
                    }
                    let req = SwapRequest::new(token_in.clone(), token_out.clone(), Quantity::new(d.clone())?);
                    let q = swap::quote(state, &req)?;
                    result.quotes += 1;
                    let received = q.amount_out.value() * p_out.value();
                    let paid = &d * p_in.value();
                    let r = &received / &paid;
                    if result.best_ratio.as_ref().is_none_or(|b| &r > b) {
                        result.best_ratio = Some(r);
                    }
                    let profit = received - paid * &cost;
                    if profit.is_positive()
                        && result.best.as_ref().is_none_or(|b| profit > b.profit)
                    {
                        result.best = Some(Opportunity {
                            request: req,
                            amount_out: q.amount_out,
                            profit,
                        });
                    }
                }
            }
        }
        Ok(result)
    }
}

#[derive(Debug, Clone)]
pub enum Agent {
    Noise(NoiseTrader),
    Arb(Arbitrageur),
}

impl Agent {
    /// Builds an agent from its scenario entry; `seq` locates errors.
    pub fn from_spec(spec: &AgentSpec, seq: usize) -> Result<Self> {
        let invalid = |message: &str| Error::InvalidEvent {
            seq,
            message: message.into(),
        };
        match spec.kind {
            AgentKind::NoiseTrader => {
                let (Some(min), Some(max)) = (&spec.min, &spec.max) else {
                    return Err(invalid("noise_trader needs `min` and `max`"));
                };
                if !min.0.is_positive() || max.0 < min.0 {
                    return Err(invalid("noise_trader needs 0 < min ≤ max"));
                }
                let rate = spec.rate.as_ref().map_or_else(Rational::one, |r| r.0.clone());
                if rate.is_negative() || rate > Rational::one() {
                    return Err(invalid("rate must lie in [0, 1]"));
                }
                if spec.sizes.is_some() || spec.fee.is_some() {
                    return Err(invalid("`sizes` and `fee` belong to arbitrageur"));
                }
                Ok(Agent::Noise(NoiseTrader {
                    min: min.0.clone(),
                    max: max.0.clone(),
                    rate,
                }))
            }
            AgentKind::Arbitrageur => {
                let sizes: Vec<Rational> = match &spec.sizes {
                    Some(s) => s.iter().map(|d| d.0.clone()).collect(),
                    None => DEFAULT_SIZES.iter().map(|&(n, d)| ratio(n, d)).collect(),
                };
                if sizes.is_empty() || sizes.iter().any(|g| !g.is_positive()) {
                    return Err(invalid("sizes must be positive"));
                }
                let fee = spec.fee.as_ref().map_or_else(Rational::zero, |f| f.0.clone());
                if fee.is_negative() {
                    return Err(invalid("fee must be nonnegative"));
                }
                if spec.min.is_some() || spec.max.is_some() || spec.rate.is_some() {
                    return Err(invalid("`min`, `max` and `rate` belong to noise_trader"));
                }
                Ok(Agent::Arb(Arbitrageur { sizes, fee }))
            }
        }
    }
}

/// Per-agent counters written to the run report.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentStats {
    pub ticks: u64,
    /// Arbitrageur scans; a tick with the pool and the feed unchanged since
    /// an empty scan is not rescanned.
    pub scans: u64,
    pub quotes: u64,
    pub opportunities: u64,
    pub executed: u64,
    pub rejected: u64,
    pub volume_in: Rational,
    pub profit: Rational,
    pub best_ratio: Option<Rational>,
}

#[derive(Serialize)]
struct StatsJson {
    ticks: u64,
    scans: u64,
    quotes: u64,
    opportunities: u64,
    executed: u64,
    rejected: u64,
    volume_in: String,
    profit: String,
    best_ratio: Option<String>,
}

impl AgentStats {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StatsJson {
            ticks: self.ticks,
            scans: self.scans,
            quotes: self.quotes,
            opportunities: self.opportunities,
            executed: self.executed,
            rejected: self.rejected,
            volume_in: to_decimal(&self.volume_in),
            profit: to_decimal(&self.profit),
            best_ratio: self.best_ratio.as_ref().map(to_decimal),
        })
        .expect("stats serialize")
    }
}
