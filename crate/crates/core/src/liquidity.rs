//! Basket valuation and the add/remove liquidity transitions.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::num::{Quantity, Rational};
use crate::state::{PoolState, PriceMap, TokenId};

/// Token amounts deposited or withdrawn together. Missing tokens count as zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Basket {
    amounts: BTreeMap<TokenId, Quantity>,
}

impl Basket {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_map(amounts: BTreeMap<TokenId, Quantity>) -> Self {
        Self { amounts }
    }

    pub fn with(mut self, token: impl Into<TokenId>, amount: Quantity) -> Self {
        self.amounts.insert(token.into(), amount);
        self
    }

    pub fn amounts(&self) -> &BTreeMap<TokenId, Quantity> {
        &self.amounts
    }

    pub fn get(&self, token: &TokenId) -> Quantity {
        self.amounts.get(token).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.values().all(Quantity::is_zero)
    }

    /// Token-wise sum.
    pub fn merged(&self, other: &Basket) -> Basket {
        let mut amounts = self.amounts.clone();
        for (t, q) in &other.amounts {
            let slot = amounts.entry(t.clone()).or_default();
            *slot = &*slot + q;
        }
        Basket { amounts }
    }

    /// Drops zero entries so baskets compare by content.
    pub fn normalized(&self) -> Basket {
        Basket {
            amounts: self
                .amounts
                .iter()
                .filter(|(_, q)| !q.is_zero())
                .map(|(t, q)| (t.clone(), q.clone()))
                .collect(),
        }
    }
}

/// How a base-currency amount is turned into a basket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRule {
    /// The same token amount for every token: `a / Σ f_k`.
    EqualByPrice,
    /// Token amounts proportional to the reserves: `a · R_i / TV`.
    ProportionalToReserves,
}

/// Σ dτ_i · fτ_i over the basket.
pub fn basket_value(basket: &Basket, prices: &PriceMap) -> Result<Quantity> {
    let mut total = Rational::zero();
    for (token, amount) in &basket.amounts {
        let price = prices
            .get(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        total += amount.value() * price.value();
    }
    Quantity::new(total)
}

pub fn split_base(amount: &Quantity, state: &PoolState, rule: SplitRule) -> Result<Basket> {
    if amount.is_zero() {
        return Ok(Basket::new());
    }
    let prices = state.fair_prices();
    let amounts = match rule {
        SplitRule::EqualByPrice => {
            let price_sum: Rational = prices.values().map(|p| p.value().clone()).sum();
            let each = Quantity::new(amount.value() / price_sum)?;
            state
                .tokens()
                .iter()
                .map(|t| (t.clone(), each.clone()))
                .collect()
        }
        SplitRule::ProportionalToReserves => {
            let tv = state.pool_value();
            if tv.is_zero() {
                return Err(Error::EmptyPool);
            }
            let per_value = amount.value() / tv.value();
            state
                .reserves()
                .iter()
                .map(|(t, r)| Ok((t.clone(), r.scale(&per_value)?)))
                .collect::<Result<_>>()?
        }
    };
    Ok(Basket { amounts })
}

/// Deposits `basket`, minting `value · TS / TV` shares priced on the pre-state.
pub fn add(state: &PoolState, basket: &Basket) -> Result<(PoolState, Quantity)> {
    for token in basket.amounts.keys() {
        state.reserve(token)?;
    }
    let value = basket_value(basket, state.fair_prices())?;
    if value.is_zero() {
        return Err(Error::ZeroValueDeposit);
    }
    let tv = state.pool_value();
    if tv.is_zero() || state.total_supply().is_zero() {
        return Err(Error::EmptyPool);
    }
    let shares = value.scale(&(state.total_supply() / &tv))?;

    let mut reserves = state.reserves().clone();
    for (token, amount) in &basket.amounts {
        let r = reserves.get_mut(token).expect("checked above");
        *r = &*r + amount;
    }
    let mut next = state.with_reserves(reserves);
    next.total_supply = &next.total_supply + &shares;
    next.target_balance = &next.target_balance + &value;
    Ok((next, shares))
}

/// Burns `shares` for the pro-rata basket. Draining the pool is refused.
pub fn remove(state: &PoolState, shares: &Quantity) -> Result<(PoolState, Basket)> {
    remove_with(state, shares, false)
}

/// As [`remove`]; `wind_down` additionally permits burning the whole supply.
pub fn remove_with(
    state: &PoolState,
    shares: &Quantity,
    wind_down: bool,
) -> Result<(PoolState, Basket)> {
    let ts = state.total_supply();
    if shares.is_zero() || shares > ts {
        return Err(Error::InsufficientShares {
            requested: shares.to_decimal(),
            available: ts.to_decimal(),
        });
    }
    let full = shares == ts;
    if full && !wind_down {
        return Err(Error::FullDrain);
    }
    let fraction = shares / ts;
    let mut reserves = state.reserves().clone();
    let mut amounts = BTreeMap::new();
    for (token, r) in reserves.iter_mut() {
        let out = r.scale(&fraction)?;
        *r = r.checked_sub(&out).expect("fraction ≤ 1");
        amounts.insert(token.clone(), out);
    }
    let basket = Basket { amounts };
    let value = basket_value(&basket, state.fair_prices())?;

    let tb_after = state.target_balance().value() - value.value();
    if tb_after.is_negative() || (tb_after.is_zero() && !full) {
        return Err(Error::TargetBalanceExhausted {
            removed: value.to_decimal(),
            target: state.target_balance().to_decimal(),
        });
    }
    let mut next = state.with_reserves(reserves);
    next.total_supply = ts.checked_sub(shares).expect("shares ≤ TS");
    next.target_balance = Quantity::new(tb_after)?;
    Ok((next, basket))
}
