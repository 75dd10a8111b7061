//! Oracle-anchored automated market maker.
//!
//! Prices come from externally supplied fair prices; slippage is applied
//! only when a pool would fall below its target balance, following a
//! constant-product curve anchored at that target. All arithmetic is exact.
//!
//! ```
//! use uamm_core::prelude::*;
//!
//! let genesis = Genesis::new(
//!     vec!["A".into(), "B".into()],
//!     [("A".into(), Price::from_ratio(1, 2)), ("B".into(), Price::from_ratio(1, 2))].into(),
//!     [("A".into(), Quantity::from_int(100)), ("B".into(), Quantity::from_int(100))].into(),
//!     SlippageMode::OutputOnly,
//! );
//! let pool = genesis.build().unwrap();
//! let (next, quote) = swap(&pool, &SwapRequest::new("A", "B", Quantity::from_int(100))).unwrap();
//! assert_eq!(quote.amount_out, Quantity::from_int(50));
//! assert_eq!(next.reserve(&"B".into()).unwrap(), &Quantity::from_int(50));
//! ```

pub mod error;
pub mod liquidity;
pub mod market;
pub mod metrics;
pub mod num;
pub mod oracle;
pub mod sim;
pub mod snapshot;
pub mod state;
pub mod swap;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::liquidity::{add, basket_value, remove, remove_with, split_base, Basket, SplitRule};
    pub use crate::market::Market;
    pub use crate::metrics::{AccountId, LpBook, PoolMetrics};
    pub use crate::num::{Price, Quantity, Rational};
    pub use crate::state::{
        Genesis, Journal, Outcome, PoolState, PriceMap, SlippageMode, TokenId, Transaction, TxKind,
    };
    pub use crate::swap::{
        fair_rate, quote, spontaneous_price, swap, usx_rate, InputBranch, OutputBranch, SwapQuote,
        SwapRequest,
    };
}
