//! Pool value, target-balance replay and per-provider gain/loss accounting.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liquidity::basket_value;
use crate::num::{to_decimal, Quantity, Rational};
use crate::state::{Journal, Outcome, PoolState, TxKind};
use crate::swap::OutputBranch;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(String);

impl AccountId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AccountId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// `TV = Σ f_i · R_i`, recomputed from scratch.
pub fn pool_value(state: &PoolState) -> Quantity {
    state.pool_value()
}

/// Signed sum of deposit and withdrawal values at the prices prevailing at
/// each transaction, replayed from the journal. Swaps contribute nothing.
pub fn target_balance(journal: &Journal) -> Result<Rational> {
    let genesis = journal.genesis();
    let mut prices = journal.base().fair_prices().clone();
    let mut total = Rational::zero();
    for (token, amount) in &genesis.deposit {
        total += amount.value() * genesis.fair_prices[token].value();
    }
    for entry in journal.entries() {
        match (&entry.tx.kind, &entry.outcome) {
            (TxKind::SetFairPrices { prices: p }, _) => prices = p.clone(),
            (TxKind::Add { basket }, _) => total += basket_value(basket, &prices)?.into_inner(),
            (TxKind::Remove { .. }, Outcome::Removed { basket, .. }) => {
                total -= basket_value(basket, &prices)?.into_inner()
            }
            _ => {}
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryItem {
    pub seq: u64,
    pub kind: &'static str,
    pub value: Rational,
}

/// Ledger of one liquidity provider.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LpAccount {
    pub shares: Quantity,
    /// Net base-currency value deposited; can go negative after withdrawals
    /// at risen prices.
    pub invested: Rational,
    pub history: Vec<HistoryItem>,
}

impl LpAccount {
    /// Pro-rata share of the pool value.
    pub fn value(&self, state: &PoolState) -> Rational {
        let ts = state.total_supply();
        if ts.is_zero() {
            return Rational::zero();
        }
        (&self.shares / ts) * state.pool_value().value()
    }

    /// Impermanent gain (positive) or loss (negative).
    pub fn ignl(&self, state: &PoolState) -> Rational {
        self.value(state) - &self.invested
    }
}

/// Per-account share and investment ledger.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LpBook {
    accounts: BTreeMap<AccountId, LpAccount>,
}

impl LpBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accounts(&self) -> &BTreeMap<AccountId, LpAccount> {
        &self.accounts
    }

    pub fn get(&self, account: &AccountId) -> Result<&LpAccount> {
        self.accounts
            .get(account)
            .ok_or_else(|| Error::UnknownAccount(account.to_string()))
    }

    pub fn record_add(&mut self, account: &AccountId, seq: u64, shares: &Quantity, value: &Quantity) {
        let acct = self.accounts.entry(account.clone()).or_default();
        acct.shares = &acct.shares + shares;
        acct.invested += value.value();
        acct.history.push(HistoryItem {
            seq,
            kind: "add",
            value: value.value().clone(),
        });
    }

    /// Fails with `InsufficientShares` when the account holds fewer than `shares`.
    pub fn check_remove(&self, account: &AccountId, shares: &Quantity) -> Result<()> {
        let acct = self.get(account)?;
        if shares.is_zero() || shares > &acct.shares {
            return Err(Error::InsufficientShares {
                requested: shares.to_decimal(),
                available: acct.shares.to_decimal(),
            });
        }
        Ok(())
    }

    pub fn record_remove(
        &mut self,
        account: &AccountId,
        seq: u64,
        shares: &Quantity,
        value: &Quantity,
    ) -> Result<()> {
        self.check_remove(account, shares)?;
        let acct = self.accounts.get_mut(account).expect("checked");
        acct.shares = acct.shares.checked_sub(shares).expect("checked");
        acct.invested -= value.value();
        acct.history.push(HistoryItem {
            seq,
            kind: "remove",
            value: -value.value().clone(),
        });
        Ok(())
    }

    pub fn ignl(&self, state: &PoolState, account: &AccountId) -> Result<Rational> {
        Ok(self.get(account)?.ignl(state))
    }

    pub fn total_shares(&self) -> Quantity {
        self.accounts.values().map(|a| a.shares.clone()).sum()
    }

    pub fn total_invested(&self) -> Rational {
        self.accounts.values().map(|a| a.invested.clone()).sum()
    }

    pub fn total_value(&self, state: &PoolState) -> Rational {
        self.accounts.values().map(|a| a.value(state)).sum()
    }
}

/// Pool-level metrics at one point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolMetrics {
    pub tv: Quantity,
    pub tb: Quantity,
    /// `TV − TB`, the pool-wide gain or loss.
    pub ignl: Rational,
    pub per_lp: BTreeMap<AccountId, LpAccount>,
}

impl PoolMetrics {
    pub fn capture(state: &PoolState, book: &LpBook) -> Self {
        let tv = state.pool_value();
        let tb = state.target_balance().clone();
        let ignl = tv.value() - tb.value();
        Self {
            tv,
            tb,
            ignl,
            per_lp: book.accounts().clone(),
        }
    }

    pub fn label(&self) -> &'static str {
        if self.ignl.is_positive() {
            "gain"
        } else if self.ignl.is_negative() {
            "loss"
        } else {
            "flat"
        }
    }
}

/// Cumulative swap counts per output branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BranchCounters {
    pub above_target: u64,
    pub crossing: u64,
    pub below_target: u64,
}

impl BranchCounters {
    pub fn record(&mut self, branch: OutputBranch) {
        match branch {
            OutputBranch::AboveTarget => self.above_target += 1,
            OutputBranch::Crossing => self.crossing += 1,
            OutputBranch::BelowTarget => self.below_target += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.above_target + self.crossing + self.below_target
    }
}

pub const CSV_HEADER: &str =
    "seq,kind,tv,tb,ignl_total,swaps_above_target,swaps_crossing,swaps_below_target";

/// One metrics CSV row.
pub fn csv_row(seq: u64, kind: &str, state: &PoolState, counters: &BranchCounters) -> String {
    let tv = state.pool_value();
    let tb = state.target_balance();
    let ignl = tv.value() - tb.value();
    format!(
        "{seq},{kind},{},{},{},{},{},{}",
        tv.to_decimal(),
        tb.to_decimal(),
        to_decimal(&ignl),
        counters.above_target,
        counters.crossing,
        counters.below_target
    )
}
