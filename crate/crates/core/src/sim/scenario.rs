//! JSON Lines scenario scripts.
//!
//! ```text
//! {"t":0,"op":"genesis","tokens":["A","B"],"prices":{"A":"0.5","B":"0.5"},"deposit":{"A":"100","B":"100"}}
//! {"t":1,"op":"swap","in":"A","out":"B","amount":"10"}
//! {"t":1,"op":"agent","kind":"arbitrageur","until":10000}
//! ```
//!
//! Amounts are decimal strings (`"0.25"`, `"1e-9"`, `"3/7"`) or JSON integers.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::num::{parse_rational, Rational};

/// An exact number read from a decimal string or a JSON integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dec(pub Rational);

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Dec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string or an integer")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Dec, E> {
                parse_rational(s).map(Dec).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, n: u64) -> std::result::Result<Dec, E> {
                Ok(Dec(Rational::from_integer(n.into())))
            }

            fn visit_i64<E: de::Error>(self, n: i64) -> std::result::Result<Dec, E> {
                Ok(Dec(Rational::from_integer(n.into())))
            }

            fn visit_f64<E: de::Error>(self, _: f64) -> std::result::Result<Dec, E> {
                Err(E::custom("write fractional numbers as strings"))
            }
        }
        d.deserialize_any(V)
    }
}

pub type DecMap = BTreeMap<String, Dec>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    NoiseTrader,
    Arbitrageur,
}

/// Parameters of a trading agent, active from its event tick to `until`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: AgentKind,
    pub until: u64,
    /// Noise trader: trade size bounds in input tokens.
    pub min: Option<Dec>,
    pub max: Option<Dec>,
    /// Noise trader: probability of trading on a tick.
    pub rate: Option<Dec>,
    /// Arbitrageur: scanned sizes, as fractions of the output reserve.
    pub sizes: Option<Vec<Dec>>,
    /// Arbitrageur: cost of the external leg, as a fraction of its value.
    pub fee: Option<Dec>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    Genesis {
        tokens: Vec<String>,
        prices: DecMap,
        deposit: DecMap,
        #[serde(default = "founder")]
        account: String,
        fee: Option<Dec>,
    },
    SetPrices {
        prices: DecMap,
    },
    Add {
        account: String,
        basket: DecMap,
    },
    Remove {
        account: String,
        shares: Dec,
        #[serde(default)]
        wind_down: bool,
    },
    Swap {
        #[serde(rename = "in")]
        token_in: String,
        #[serde(rename = "out")]
        token_out: String,
        amount: Dec,
    },
    Agent(AgentSpec),
}

fn founder() -> String {
    "lp0".into()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioEvent {
    pub t: u64,
    pub op: Op,
    /// 1-based line in the source file.
    pub line: usize,
}

#[derive(Deserialize)]
struct Raw {
    t: u64,
    #[serde(flatten)]
    op: Op,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let mut events: Vec<ScenarioEvent> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: Raw = serde_json::from_str(line).map_err(|e| Error::ParseAt {
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })?;
            events.push(ScenarioEvent {
                t: raw.t,
                op: raw.op,
                line: i + 1,
            });
        }
        let invalid = |seq: usize, message: String| Error::InvalidEvent { seq, message };
        match events.first() {
            Some(ScenarioEvent { op: Op::Genesis { .. }, .. }) => {}
            Some(_) => return Err(invalid(0, "the first event must be genesis".into())),
            None => return Err(invalid(0, "scenario is empty".into())),
        }
        for (seq, pair) in events.windows(2).enumerate() {
            if matches!(pair[1].op, Op::Genesis { .. }) {
                return Err(invalid(seq + 1, format!("line {}: second genesis", pair[1].line)));
            }
            if pair[1].t < pair[0].t {
                return Err(invalid(
                    seq + 1,
                    format!("line {}: tick {} is before {}", pair[1].line, pair[1].t, pair[0].t),
                ));
            }
        }
        Ok(Scenario { events })
    }

    pub fn genesis(&self) -> &ScenarioEvent {
        &self.events[0]
    }

    /// Token list declared by the genesis event.
    pub fn tokens(&self) -> &[String] {
        match &self.genesis().op {
            Op::Genesis { tokens, .. } => tokens,
            _ => unreachable!("checked by parse"),
        }
    }

    pub fn last_tick(&self) -> u64 {
        self.events
            .iter()
            .map(|e| match &e.op {
                Op::Agent(a) => a.until.max(e.t),
                _ => e.t,
            })
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GENESIS: &str =
        r#"{"t":0,"op":"genesis","tokens":["A","B"],"prices":{"A":"0.5","B":"0.5"},"deposit":{"A":100,"B":"100"}}"#;

    #[test]
    fn parses_every_op() {
        let text = format!(
            "{GENESIS}\n\n{}\n{}\n{}\n{}\n{}\n",
            r#"{"t":1,"op":"set_prices","prices":{"A":"1/3","B":"2/3"}}"#,
            r#"{"t":2,"op":"add","account":"lp1","basket":{"A":"1.5"}}"#,
            r#"{"t":3,"op":"remove","account":"lp1","shares":"0.5"}"#,
            r#"{"t":3,"op":"swap","in":"A","out":"B","amount":"1e-3"}"#,
            r#"{"t":4,"op":"agent","kind":"noise_trader","until":9,"min":"1","max":"2"}"#,
        );
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(s.events.len(), 6);
        assert_eq!(s.events[2].line, 4);
        assert_eq!(s.last_tick(), 9);
        assert!(matches!(&s.events[4].op, Op::Swap { amount, .. } if amount.0 == Rational::new(1.into(), 1000.into())));
    }

    #[test]
    fn reports_line_and_column() {
        let text = format!("{GENESIS}\n{}\n", r#"{"t":1,"op":"swap","in":"A","out":"B","amount":0.5}"#);
        match Scenario::parse(&text) {
            Err(Error::ParseAt { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Scenario::parse(r#"{"t":0,"op":"teleport"}"#),
            Err(Error::ParseAt { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_structure() {
        let swap = r#"{"t":0,"op":"swap","in":"A","out":"B","amount":"1"}"#;
        assert!(matches!(Scenario::parse(swap), Err(Error::InvalidEvent { seq: 0, .. })));
        let back = format!("{}\n{}", GENESIS.replace("\"t\":0", "\"t\":5"), swap);
        assert!(matches!(Scenario::parse(&back), Err(Error::InvalidEvent { seq: 1, .. })));
        assert!(matches!(Scenario::parse(""), Err(Error::InvalidEvent { .. })));
    }
}
