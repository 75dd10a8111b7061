//! The operations the property suite exercises, behind a trait so that
//! deliberately broken engines can be checked against the same suite.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::liquidity::{self, Basket};
use crate::num::{Quantity, Rational};
use crate::state::PoolState;
use crate::swap::{self, OutputBranch, SwapQuote, SwapRequest};

pub trait Engine: Sync {
    fn name(&self) -> &str;

    fn swap(&self, state: &PoolState, req: &SwapRequest) -> Result<(PoolState, SwapQuote)>;

    fn add(&self, state: &PoolState, basket: &Basket) -> Result<(PoolState, Quantity)> {
        liquidity::add(state, basket)
    }

    fn remove(&self, state: &PoolState, shares: &Quantity) -> Result<(PoolState, Basket)> {
        liquidity::remove(state, shares)
    }

    fn spontaneous_price(&self, state: &PoolState, req: &SwapRequest) -> Result<Rational> {
        swap::spontaneous_price(state, &req.token_in, &req.token_out)
    }
}

/// The production engine.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uamm;

impl Engine for Uamm {
    fn name(&self) -> &str {
        "uamm"
    }

    fn swap(&self, state: &PoolState, req: &SwapRequest) -> Result<(PoolState, SwapQuote)> {
        swap::swap(state, req)
    }
}

/// Prices the crossing branch as `(R − T)·ρ + (d − (R − T))·R / (X + ρd)`,
/// mixing token and fair-rate units.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrossingMutant;

impl Engine for CrossingMutant {
    fn name(&self) -> &str {
        "crossing-mutant"
    }

    fn swap(&self, state: &PoolState, req: &SwapRequest) -> Result<(PoolState, SwapQuote)> {
        let mut q = swap::quote(state, req)?;
        if q.branch == OutputBranch::Crossing {
            let r = state.reserve(&req.token_out)?.value();
            let t = state.pool_target(&req.token_out)?.value();
            let rho = &q.fair_rate;
            let d = req.amount_in.value();
            let x = t * t / r;
            let gap = r - t;
            let out = &gap * rho + (d - &gap) * r / (x + rho * d);
            q.amount_out = Quantity::new(out.max(Rational::zero()))?;
            q.usx = q.amount_out.value() / (rho * d);
        }
        settle(state, req, q)
    }
}

/// Pays out `R_i · s / (TS + s)` on removal.
#[derive(Debug, Clone, Copy, Default)]
pub struct RemoveMutant;

impl Engine for RemoveMutant {
    fn name(&self) -> &str {
        "remove-mutant"
    }

    fn swap(&self, state: &PoolState, req: &SwapRequest) -> Result<(PoolState, SwapQuote)> {
        swap::swap(state, req)
    }

    fn remove(&self, state: &PoolState, shares: &Quantity) -> Result<(PoolState, Basket)> {
        let ts = state.total_supply();
        if shares.is_zero() || shares >= ts {
            return Err(Error::InsufficientShares {
                requested: shares.to_decimal(),
                available: ts.to_decimal(),
            });
        }
        let fraction = shares.value() / (ts.value() + shares.value());
        let mut reserves = state.reserves().clone();
        let mut amounts = BTreeMap::new();
        for (token, r) in reserves.iter_mut() {
            let out = r.scale(&fraction)?;
            *r = r.checked_sub(&out).expect("fraction < 1");
            amounts.insert(token.clone(), out);
        }
        let basket = Basket::from_map(amounts);
        let value = liquidity::basket_value(&basket, state.fair_prices())?;
        let mut next = state.with_reserves(reserves);
        next.total_supply = ts.checked_sub(shares).expect("shares < TS");
        next.target_balance = state
            .target_balance()
            .checked_sub(&value)
            .ok_or_else(|| Error::TargetBalanceExhausted {
                removed: value.to_decimal(),
                target: state.target_balance().to_decimal(),
            })?;
        Ok((next, basket))
    }
}

fn settle(state: &PoolState, req: &SwapRequest, q: SwapQuote) -> Result<(PoolState, SwapQuote)> {
    let mut reserves = state.reserves().clone();
    let r_in = reserves.get_mut(&req.token_in).expect("quoted");
    *r_in = &*r_in + &req.amount_in;
    let r_out = reserves.get_mut(&req.token_out).expect("quoted");
    *r_out = r_out
        .checked_sub(&q.amount_out)
        .filter(Quantity::is_positive)
        .ok_or_else(|| Error::InvariantViolation(format!("swap would deplete `{}`", req.token_out)))?;
    Ok((state.with_reserves(reserves), q))
}

/// Looks an engine up by name.
pub fn by_name(name: &str) -> Option<&'static dyn Engine> {
    match name {
        "uamm" => Some(&Uamm),
        "crossing-mutant" => Some(&CrossingMutant),
        "remove-mutant" => Some(&RemoveMutant),
        _ => None,
    }
}
