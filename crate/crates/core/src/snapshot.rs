//! Canonical JSON snapshots of [`PoolState`].
//!
//! Rationals are written as decimal strings with 18 fractional digits
//! (round-half-even), so a snapshot is exact only up to that quantization.
//! `per_pool_target`, `fee` and `simplex_prices` are written only when they
//! differ from their defaults.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{parse_rational, to_decimal, Price, Quantity};
use crate::state::{PoolState, SlippageMode, TokenId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tokens: Vec<String>,
    pub reserves: BTreeMap<String, String>,
    pub fair_prices: BTreeMap<String, String>,
    pub ts: String,
    pub tb: String,
    pub mode: SlippageMode,
    pub seq: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_pool_target: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub simplex_prices: bool,
}

impl Snapshot {
    pub fn capture(state: &PoolState) -> Self {
        let dec_map = |m: &BTreeMap<TokenId, Quantity>| {
            m.iter()
                .map(|(k, v)| (k.to_string(), v.to_decimal()))
                .collect()
        };
        Snapshot {
            tokens: state.tokens().iter().map(|t| t.to_string()).collect(),
            reserves: dec_map(state.reserves()),
            fair_prices: state
                .fair_prices()
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_decimal()))
                .collect(),
            ts: state.total_supply().to_decimal(),
            tb: state.target_balance().to_decimal(),
            mode: state.mode(),
            seq: state.seq(),
            per_pool_target: dec_map(state.target_overrides()),
            fee: (!state.fee().is_zero()).then(|| to_decimal(state.fee())),
            simplex_prices: state.simplex_prices(),
        }
    }

    pub fn restore(&self) -> Result<PoolState> {
        let tokens: Vec<TokenId> = self.tokens.iter().map(TokenId::new).collect();
        let quantities = |m: &BTreeMap<String, String>| -> Result<BTreeMap<TokenId, Quantity>> {
            m.iter()
                .map(|(k, v)| Ok((TokenId::new(k), Quantity::parse(v)?)))
                .collect()
        };
        let reserves = quantities(&self.reserves)?;
        let fair_prices = self
            .fair_prices
            .iter()
            .map(|(k, v)| Ok((TokenId::new(k), Price::parse(v)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        if reserves.len() != tokens.len() || tokens.iter().any(|t| !reserves.contains_key(t)) {
            return Err(Error::Parse("reserves must cover exactly the listed tokens".into()));
        }
        let mut state = PoolState::genesis(&tokens, &fair_prices, &reserves, self.mode)?;
        state.total_supply = Quantity::parse(&self.ts)?;
        state.target_balance = Quantity::parse(&self.tb)?;
        state.seq = self.seq;
        for (token, target) in quantities(&self.per_pool_target)? {
            state = state.with_pool_target(&token, target)?;
        }
        if let Some(fee) = &self.fee {
            state = state.with_fee(parse_rational(fee)?)?;
        }
        state.with_simplex_prices(self.simplex_prices)
    }
}

pub fn to_json(state: &PoolState) -> String {
    serde_json::to_string_pretty(&Snapshot::capture(state)).expect("snapshot serializes")
}

pub fn from_json(text: &str) -> Result<PoolState> {
    let snap: Snapshot = serde_json::from_str(text).map_err(|e| Error::ParseAt {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    snap.restore()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Genesis;

    #[test]
    fn snapshot_layout_and_round_trip() {
        let g = Genesis::new(
            vec!["A".into(), "B".into()],
            [("A".into(), Price::from_ratio(1, 2)), ("B".into(), Price::from_ratio(1, 2))]
                .into_iter()
                .collect(),
            [("A".into(), Quantity::from_int(100)), ("B".into(), Quantity::from_int(100))]
                .into_iter()
                .collect(),
            SlippageMode::OutputOnly,
        );
        let s = g.build().unwrap();
        let text = to_json(&s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let order: Vec<usize> = ["tokens", "reserves", "fair_prices", "ts", "tb", "mode", "seq"]
            .iter()
            .map(|k| text.find(&format!("\"{k}\":")).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(v.as_object().unwrap().len(), 7);
        assert_eq!(v["ts"], "100.000000000000000000");
        assert_eq!(v["mode"], "output-only");
        assert_eq!(from_json(&text).unwrap(), s);

        let s2 = s
            .with_pool_target(&"A".into(), Quantity::from_int(7))
            .unwrap()
            .with_fee(crate::num::ratio(3, 1000))
            .unwrap();
        assert_eq!(from_json(&to_json(&s2)).unwrap(), s2);
    }

    #[test]
    fn malformed_snapshot_reports_position() {
        let err = from_json("{\n  \"tokens\": [,]\n}").unwrap_err();
        assert!(matches!(err, Error::ParseAt { line: 2, .. }), "{err:?}");
    }
}
