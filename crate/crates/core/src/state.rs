//! Canonical pool state, transactions and the append-only journal.
//!
//! [`PoolState`] is an immutable value. [`PoolState::apply`] is a pure
//! transition returning the successor state together with the
//! [`Outcome`] of the transaction; a [`Journal`] is the single writer that
//! sequences transactions and can replay itself from genesis.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liquidity::{self, Basket};
use crate::num::{Price, Quantity, Rational};
use crate::swap::{self, SwapQuote, SwapRequest};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(String);

impl TokenId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TokenId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl From<String> for TokenId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlippageMode {
    /// Slippage only on the output pool.
    #[default]
    OutputOnly,
    /// Input-pool slippage followed by output-pool slippage.
    InputAndOutput,
}

impl SlippageMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SlippageMode::OutputOnly => "output-only",
            SlippageMode::InputAndOutput => "input-and-output",
        }
    }
}

impl std::str::FromStr for SlippageMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "output-only" | "OutputOnly" => Ok(SlippageMode::OutputOnly),
            "input-and-output" | "InputAndOutput" => Ok(SlippageMode::InputAndOutput),
            other => Err(Error::Parse(format!("unknown slippage mode `{other}`"))),
        }
    }
}

pub type PriceMap = BTreeMap<TokenId, Price>;

/// The full pool state: reserves, fair prices, share supply and target balance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    pub(crate) tokens: Vec<TokenId>,
    pub(crate) reserves: BTreeMap<TokenId, Quantity>,
    pub(crate) fair_prices: PriceMap,
    pub(crate) total_supply: Quantity,
    pub(crate) target_balance: Quantity,
    pub(crate) mode: SlippageMode,
    pub(crate) target_overrides: BTreeMap<TokenId, Quantity>,
    pub(crate) fee: Rational,
    pub(crate) simplex_prices: bool,
    pub(crate) seq: u64,
}

/// Arguments of the opening deposit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genesis {
    pub tokens: Vec<TokenId>,
    pub fair_prices: PriceMap,
    pub deposit: BTreeMap<TokenId, Quantity>,
    pub mode: SlippageMode,
}

impl Genesis {
    pub fn new(
        tokens: Vec<TokenId>,
        fair_prices: PriceMap,
        deposit: BTreeMap<TokenId, Quantity>,
        mode: SlippageMode,
    ) -> Self {
        Self {
            tokens,
            fair_prices,
            deposit,
            mode,
        }
    }

    pub fn build(&self) -> Result<PoolState> {
        PoolState::genesis(&self.tokens, &self.fair_prices, &self.deposit, self.mode)
    }
}

impl PoolState {
    /// Opens a pool. Shares are minted 1:1 with the base-currency value of the
    /// deposit, and the target balance starts at that same value.
    pub fn genesis(
        tokens: &[TokenId],
        fair_prices: &PriceMap,
        deposit: &BTreeMap<TokenId, Quantity>,
        mode: SlippageMode,
    ) -> Result<PoolState> {
        if tokens.is_empty() {
            return Err(Error::EmptyTokenSet);
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in tokens {
            if !seen.insert(t) {
                return Err(Error::DuplicateToken(t.to_string()));
            }
        }
        check_price_keys(tokens, fair_prices)?;
        for t in deposit.keys() {
            if !seen.contains(t) {
                return Err(Error::UnknownToken(t.to_string()));
            }
        }
        let mut reserves = BTreeMap::new();
        for t in tokens {
            match deposit.get(t) {
                Some(q) if q.is_positive() => {
                    reserves.insert(t.clone(), q.clone());
                }
                _ => return Err(Error::NonPositiveDeposit(t.to_string())),
            }
        }
        let value = liquidity::basket_value(&Basket::from_map(deposit.clone()), fair_prices)?;
        Ok(PoolState {
            tokens: tokens.to_vec(),
            reserves,
            fair_prices: fair_prices.clone(),
            total_supply: value.clone(),
            target_balance: value,
            mode,
            target_overrides: BTreeMap::new(),
            fee: Rational::zero(),
            simplex_prices: false,
            seq: 0,
        })
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn reserves(&self) -> &BTreeMap<TokenId, Quantity> {
        &self.reserves
    }

    pub fn fair_prices(&self) -> &PriceMap {
        &self.fair_prices
    }

    pub fn total_supply(&self) -> &Quantity {
        &self.total_supply
    }

    pub fn target_balance(&self) -> &Quantity {
        &self.target_balance
    }

    pub fn mode(&self) -> SlippageMode {
        self.mode
    }

    pub fn fee(&self) -> &Rational {
        &self.fee
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn target_overrides(&self) -> &BTreeMap<TokenId, Quantity> {
        &self.target_overrides
    }

    pub fn simplex_prices(&self) -> bool {
        self.simplex_prices
    }

    pub fn reserve(&self, token: &TokenId) -> Result<&Quantity> {
        self.reserves
            .get(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }

    pub fn price(&self, token: &TokenId) -> Result<&Price> {
        self.fair_prices
            .get(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }

    /// Reserve level below which slippage applies for `token`.
    /// Falls back to the pool-wide target balance.
    pub fn pool_target(&self, token: &TokenId) -> Result<&Quantity> {
        if !self.reserves.contains_key(token) {
            return Err(Error::UnknownToken(token.to_string()));
        }
        Ok(self
            .target_overrides
            .get(token)
            .unwrap_or(&self.target_balance))
    }

    /// Pool value at the current fair prices.
    pub fn pool_value(&self) -> Quantity {
        let total: Rational = self
            .tokens
            .iter()
            .map(|t| self.reserves[t].value() * self.fair_prices[t].value())
            .sum();
        Quantity::new(total).expect("reserves and prices are nonnegative")
    }

    pub fn with_mode(mut self, mode: SlippageMode) -> Self {
        self.mode = mode;
        self
    }

    /// Proportional fee withheld from the swap input before pricing.
    pub fn with_fee(mut self, fee: Rational) -> Result<Self> {
        if fee.is_negative() || fee >= Rational::one() {
            return Err(Error::InvalidFee);
        }
        self.fee = fee;
        Ok(self)
    }

    pub fn with_pool_target(mut self, token: &TokenId, target: Quantity) -> Result<Self> {
        self.reserve(token)?;
        if !target.is_positive() {
            return Err(Error::NonPositiveTarget(token.to_string()));
        }
        self.target_overrides.insert(token.clone(), target);
        Ok(self)
    }

    /// Turns on the probability-simplex check for every later price update.
    pub fn with_simplex_prices(mut self, on: bool) -> Result<Self> {
        if on {
            check_simplex(&self.fair_prices)?;
        }
        self.simplex_prices = on;
        Ok(self)
    }

    /// Multiplies reserves, share supply and every target by `factor`.
    pub fn scaled(&self, factor: &Rational) -> Result<PoolState> {
        if !factor.is_positive() {
            return Err(Error::NegativeQuantity(crate::num::to_decimal(factor)));
        }
        let scale_map = |m: &BTreeMap<TokenId, Quantity>| -> Result<BTreeMap<TokenId, Quantity>> {
            m.iter()
                .map(|(k, v)| Ok((k.clone(), v.scale(factor)?)))
                .collect()
        };
        Ok(PoolState {
            reserves: scale_map(&self.reserves)?,
            target_overrides: scale_map(&self.target_overrides)?,
            total_supply: self.total_supply.scale(factor)?,
            target_balance: self.target_balance.scale(factor)?,
            ..self.clone()
        })
    }

    pub(crate) fn with_reserves(&self, reserves: BTreeMap<TokenId, Quantity>) -> PoolState {
        PoolState {
            reserves,
            ..self.clone()
        }
    }

    /// Replaces the fair prices; the only way prices ever change.
    pub fn set_fair_prices(&self, prices: &PriceMap) -> Result<PoolState> {
        check_price_keys(&self.tokens, prices)?;
        if self.simplex_prices {
            check_simplex(prices)?;
        }
        Ok(PoolState {
            fair_prices: prices.clone(),
            ..self.clone()
        })
    }

    /// Pure state transition. `tx.seq` must be strictly greater than the
    /// sequence of the last applied transaction.
    pub fn apply(&self, tx: &Transaction) -> Result<(PoolState, Outcome)> {
        if tx.seq <= self.seq {
            return Err(Error::StaleSequence {
                last: self.seq,
                got: tx.seq,
            });
        }
        let (mut next, outcome) = match &tx.kind {
            TxKind::Add { basket } => {
                let (s, shares) = liquidity::add(self, basket)?;
                let value = liquidity::basket_value(basket, &self.fair_prices)?;
                (s, Outcome::Added { shares, value })
            }
            TxKind::Remove { shares, wind_down } => {
                let (s, basket) = liquidity::remove_with(self, shares, *wind_down)?;
                let value = liquidity::basket_value(&basket, &self.fair_prices)?;
                (s, Outcome::Removed { basket, value })
            }
            TxKind::Swap(req) => {
                let (s, quote) = swap::swap(self, req)?;
                (s, Outcome::Swapped(quote))
            }
            TxKind::SetFairPrices { prices } => (self.set_fair_prices(prices)?, Outcome::PricesSet),
        };
        next.seq = tx.seq;
        Ok((next, outcome))
    }
}

fn check_price_keys(tokens: &[TokenId], prices: &PriceMap) -> Result<()> {
    if prices.len() != tokens.len() {
        for t in prices.keys() {
            if !tokens.contains(t) {
                return Err(Error::UnknownToken(t.to_string()));
            }
        }
        return Err(Error::PriceSetMismatch);
    }
    for t in tokens {
        if !prices.contains_key(t) {
            return Err(Error::PriceSetMismatch);
        }
    }
    Ok(())
}

/// Every price in (0, 1] and the prices summing to exactly 1.
pub fn check_simplex(prices: &PriceMap) -> Result<()> {
    let one = Rational::one();
    let sum: Rational = prices.values().map(|p| p.value().clone()).sum();
    if sum != one || prices.values().any(|p| p.value() > &one) {
        return Err(Error::NotProbabilitySimplex);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxKind {
    Add { basket: Basket },
    /// `wind_down` permits burning the entire share supply.
    Remove { shares: Quantity, wind_down: bool },
    Swap(SwapRequest),
    SetFairPrices { prices: PriceMap },
}

impl TxKind {
    pub fn name(&self) -> &'static str {
        match self {
            TxKind::Add { .. } => "add",
            TxKind::Remove { .. } => "remove",
            TxKind::Swap(_) => "swap",
            TxKind::SetFairPrices { .. } => "set_prices",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub seq: u64,
    pub timestamp: u64,
    pub kind: TxKind,
}

/// What a transaction produced, recorded alongside it in the journal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Minted shares and the deposit value at the prevailing fair prices.
    Added { shares: Quantity, value: Quantity },
    /// Returned basket and its value at the prevailing fair prices.
    Removed { basket: Basket, value: Quantity },
    Swapped(SwapQuote),
    PricesSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalEntry {
    pub tx: Transaction,
    pub outcome: Outcome,
}

/// Append-only transaction log with its current head state.
#[derive(Debug, Clone)]
pub struct Journal {
    genesis: Genesis,
    base: PoolState,
    entries: Vec<JournalEntry>,
    head: PoolState,
}

impl Journal {
    pub fn open(genesis: Genesis) -> Result<Self> {
        let base = genesis.build()?;
        Ok(Self::from_base(genesis, base))
    }

    /// Opens a journal whose base carries configuration beyond plain genesis
    /// (fee, per-pool targets, simplex check). The base must be at sequence 0.
    pub fn from_base(genesis: Genesis, base: PoolState) -> Self {
        Self {
            genesis,
            head: base.clone(),
            base,
            entries: Vec::new(),
        }
    }

    pub fn genesis(&self) -> &Genesis {
        &self.genesis
    }

    pub fn base(&self) -> &PoolState {
        &self.base
    }

    pub fn head(&self) -> &PoolState {
        &self.head
    }

    pub fn entries(&self) -> &[JournalEntry] {
        &self.entries
    }

    /// Applies `kind` at the next sequence number.
    pub fn submit(&mut self, kind: TxKind, timestamp: u64) -> Result<&JournalEntry> {
        let tx = Transaction {
            seq: self.head.seq + 1,
            timestamp,
            kind,
        };
        self.apply(tx)
    }

    pub fn apply(&mut self, tx: Transaction) -> Result<&JournalEntry> {
        let (next, outcome) = self.head.apply(&tx)?;
        self.head = next;
        self.entries.push(JournalEntry { tx, outcome });
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Rebuilds the head by re-applying every logged transaction to the base.
    pub fn replay(&self) -> Result<PoolState> {
        self.entries
            .iter()
            .try_fold(self.base.clone(), |s, e| s.apply(&e.tx).map(|(n, _)| n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn t(s: &str) -> TokenId {
        TokenId::new(s)
    }

    fn two_token() -> Genesis {
        let prices = [(t("A"), Price::from_ratio(1, 2)), (t("B"), Price::from_ratio(1, 2))]
            .into_iter()
            .collect();
        let deposit = [(t("A"), Quantity::from_int(100)), (t("B"), Quantity::from_int(100))]
            .into_iter()
            .collect();
        Genesis::new(vec![t("A"), t("B")], prices, deposit, SlippageMode::OutputOnly)
    }

    #[test]
    fn genesis_mints_value() {
        let s = two_token().build().unwrap();
        assert_eq!(s.total_supply(), &Quantity::from_int(100));
        assert_eq!(s.target_balance(), &Quantity::from_int(100));
        assert_eq!(s.reserve(&t("A")).unwrap(), &Quantity::from_int(100));
        assert_eq!(s.reserve(&t("B")).unwrap(), &Quantity::from_int(100));
        assert_eq!(s.pool_value(), Quantity::from_int(100));
        assert_eq!(s.seq(), 0);
    }

    #[test]
    fn genesis_rejects_bad_input() {
        let mut g = two_token();
        g.deposit.insert(t("A"), Quantity::zero());
        assert_eq!(g.build(), Err(Error::NonPositiveDeposit("A".into())));

        let mut g = two_token();
        g.deposit.remove(&t("B"));
        assert_eq!(g.build(), Err(Error::NonPositiveDeposit("B".into())));

        let mut g = two_token();
        g.tokens.clear();
        assert_eq!(g.build(), Err(Error::EmptyTokenSet));

        let mut g = two_token();
        g.tokens.push(t("A"));
        assert!(matches!(g.build(), Err(Error::DuplicateToken(_))));

        let mut g = two_token();
        g.fair_prices.remove(&t("B"));
        assert_eq!(g.build(), Err(Error::PriceSetMismatch));

        assert!(Price::new(ratio(0, 1)).is_err());
    }

    #[test]
    fn genesis_is_deterministic() {
        assert_eq!(two_token().build().unwrap(), two_token().build().unwrap());
    }

    #[test]
    fn identity_price_update_only_moves_sequence() {
        let s = two_token().build().unwrap();
        let tx = Transaction {
            seq: 1,
            timestamp: 0,
            kind: TxKind::SetFairPrices {
                prices: s.fair_prices().clone(),
            },
        };
        let (n, out) = s.apply(&tx).unwrap();
        assert_eq!(out, Outcome::PricesSet);
        assert_eq!(n.seq(), 1);
        let mut n0 = n.clone();
        n0.seq = 0;
        assert_eq!(n0, s);
    }

    #[test]
    fn stale_sequence_is_rejected() {
        let s = two_token().build().unwrap();
        let tx = Transaction {
            seq: 0,
            timestamp: 0,
            kind: TxKind::SetFairPrices {
                prices: s.fair_prices().clone(),
            },
        };
        assert_eq!(s.apply(&tx), Err(Error::StaleSequence { last: 0, got: 0 }));
    }

    #[test]
    fn simplex_toggle_checks_prices() {
        let s = two_token().build().unwrap().with_simplex_prices(true).unwrap();
        let bad: PriceMap = [(t("A"), Price::from_ratio(1, 2)), (t("B"), Price::from_ratio(1, 3))]
            .into_iter()
            .collect();
        assert_eq!(s.set_fair_prices(&bad), Err(Error::NotProbabilitySimplex));
        let ok: PriceMap = [(t("A"), Price::from_ratio(1, 3)), (t("B"), Price::from_ratio(2, 3))]
            .into_iter()
            .collect();
        assert!(s.set_fair_prices(&ok).is_ok());
    }

    #[test]
    fn pool_target_defaults_to_tb() {
        let s = two_token().build().unwrap();
        assert_eq!(s.pool_target(&t("A")).unwrap(), &Quantity::from_int(100));
        let s = s.with_pool_target(&t("A"), Quantity::from_int(40)).unwrap();
        assert_eq!(s.pool_target(&t("A")).unwrap(), &Quantity::from_int(40));
        assert_eq!(s.pool_target(&t("B")).unwrap(), &Quantity::from_int(100));
        assert!(s.pool_target(&t("C")).is_err());
    }
}
