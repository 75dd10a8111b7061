//! A journal paired with the provider ledger: the single writer used by the
//! simulator and the bindings.

use crate::error::Result;
use crate::liquidity::Basket;
use crate::metrics::{AccountId, BranchCounters, LpBook, PoolMetrics};
use crate::num::Quantity;
use crate::state::{Genesis, Journal, JournalEntry, Outcome, PoolState, PriceMap, TxKind};
use crate::swap::{SwapQuote, SwapRequest};

#[derive(Debug, Clone)]
pub struct Market {
    journal: Journal,
    book: LpBook,
    counters: BranchCounters,
}

impl Market {
    /// Opens the pool with `founder` owning the genesis shares.
    pub fn open(genesis: Genesis, founder: &AccountId) -> Result<Self> {
        let base = genesis.build()?;
        Ok(Self::from_base(genesis, base, founder))
    }

    /// As [`Market::open`] with a pre-configured base state (fee, targets).
    pub fn from_base(genesis: Genesis, base: PoolState, founder: &AccountId) -> Self {
        let mut book = LpBook::new();
        book.record_add(founder, 0, base.total_supply(), &base.pool_value());
        Self {
            journal: Journal::from_base(genesis, base),
            book,
            counters: BranchCounters::default(),
        }
    }

    pub fn state(&self) -> &PoolState {
        self.journal.head()
    }

    pub fn journal(&self) -> &Journal {
        &self.journal
    }

    pub fn book(&self) -> &LpBook {
        &self.book
    }

    pub fn counters(&self) -> &BranchCounters {
        &self.counters
    }

    pub fn metrics(&self) -> PoolMetrics {
        PoolMetrics::capture(self.state(), &self.book)
    }

    pub fn add(&mut self, account: &AccountId, basket: Basket, timestamp: u64) -> Result<Quantity> {
        let entry = self.journal.submit(TxKind::Add { basket }, timestamp)?;
        let Outcome::Added { shares, value } = &entry.outcome else {
            unreachable!("add yields Added")
        };
        let (shares, value, seq) = (shares.clone(), value.clone(), entry.tx.seq);
        self.book.record_add(account, seq, &shares, &value);
        Ok(shares)
    }

    pub fn remove(
        &mut self,
        account: &AccountId,
        shares: Quantity,
        wind_down: bool,
        timestamp: u64,
    ) -> Result<Basket> {
        self.book.check_remove(account, &shares)?;
        let entry = self.journal.submit(
            TxKind::Remove {
                shares: shares.clone(),
                wind_down,
            },
            timestamp,
        )?;
        let Outcome::Removed { basket, value } = &entry.outcome else {
            unreachable!("remove yields Removed")
        };
        let (basket, value, seq) = (basket.clone(), value.clone(), entry.tx.seq);
        self.book.record_remove(account, seq, &shares, &value)?;
        Ok(basket)
    }

    pub fn swap(&mut self, request: SwapRequest, timestamp: u64) -> Result<SwapQuote> {
        let entry = self.journal.submit(TxKind::Swap(request), timestamp)?;
        let Outcome::Swapped(quote) = &entry.outcome else {
            unreachable!("swap yields Swapped")
        };
        let quote = quote.clone();
        self.counters.record(quote.branch);
        Ok(quote)
    }

    pub fn set_prices(&mut self, prices: PriceMap, timestamp: u64) -> Result<()> {
        self.journal
            .submit(TxKind::SetFairPrices { prices }, timestamp)?;
        Ok(())
    }

    pub fn last_entry(&self) -> Option<&JournalEntry> {
        self.journal.entries().last()
    }
}
