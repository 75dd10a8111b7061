//! Scenario simulator: scripted events, an external price feed and trading
//! agents driven tick by tick against one pool.
//!
//! Each tick runs, in order: the scripted events of that tick, the oracle
//! update (the feed as of `tick − oracle_lag`), then every active agent in
//! declaration order. Agents compare against the feed as of `tick`.

pub mod agent;
pub mod feed;
pub mod scenario;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::{debug, info, warn};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::liquidity::Basket;
use crate::market::Market;
use crate::metrics::{csv_row, AccountId, CSV_HEADER};
use crate::num::{to_decimal, Price, Quantity, Rational};
use crate::snapshot;
use crate::state::{Genesis, PoolState, PriceMap, SlippageMode, TokenId};
use crate::swap::{self, SwapRequest};

use agent::{Agent, AgentStats};
use feed::{Feed, PriceView};
use scenario::{AgentKind, DecMap, Op, Scenario};

pub use agent::{Arbitrageur, NoiseTrader};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub mode: SlippageMode,
    /// Ticks by which the pool's oracle trails the external feed.
    pub oracle_lag: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: SlippageMode::OutputOnly,
            oracle_lag: 0,
        }
    }
}

/// The three run artifacts, rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics_csv: String,
    pub final_state_json: String,
    pub report: serde_json::Value,
    pub final_state: PoolState,
}

impl RunOutput {
    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `metrics.csv`, `final_state.json` and `report.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.csv"), &self.metrics_csv)?;
        std::fs::write(dir.join("final_state.json"), format!("{}\n", self.final_state_json))?;
        std::fs::write(dir.join("report.json"), self.report_json())?;
        Ok(())
    }

    pub fn arbitrage_executed(&self) -> u64 {
        self.report["arbitrage"]["executed"].as_u64().unwrap_or(0)
    }

    pub fn arbitrage_opportunities(&self) -> u64 {
        self.report["arbitrage"]["opportunities"].as_u64().unwrap_or(0)
    }
}

struct ActiveAgent {
    agent: Agent,
    from: u64,
    until: u64,
    rng: ChaCha8Rng,
    stats: AgentStats,
    /// Pool sequence and external view version of the last empty scan.
    idle_at: Option<(u64, u64)>,
}

struct Sim<'a> {
    market: Market,
    tokens: Vec<TokenId>,
    mode: SlippageMode,
    feed: &'a Feed,
    csv: String,
    checks: u64,
    rejected: Vec<serde_json::Value>,
}

fn token_map(m: &DecMap) -> BTreeMap<TokenId, Rational> {
    m.iter().map(|(k, v)| (TokenId::new(k), v.0.clone())).collect()
}

fn prices(m: &DecMap) -> Result<PriceMap> {
    token_map(m)
        .into_iter()
        .map(|(k, v)| Ok((k, Price::new(v)?)))
        .collect()
}

fn basket(m: &DecMap) -> Result<Basket> {
    token_map(m)
        .into_iter()
        .try_fold(Basket::new(), |b, (k, v)| Ok(b.with(k, Quantity::new(v)?)))
}

fn agent_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Checks references to tokens and accounts before anything runs.
fn validate(scenario: &Scenario, feed: &Feed) -> Result<()> {
    let tokens: BTreeSet<&str> = scenario.tokens().iter().map(String::as_str).collect();
    let mut accounts = BTreeSet::new();
    for (seq, e) in scenario.events.iter().enumerate() {
        let invalid = |message: String| Error::InvalidEvent {
            seq,
            message: format!("line {}: {message}", e.line),
        };
        let known = |m: &DecMap| {
            m.keys()
                .find(|k| !tokens.contains(k.as_str()))
                .map_or(Ok(()), |k| Err(invalid(format!("unknown token `{k}`"))))
        };
        match &e.op {
            Op::Genesis {
                prices, deposit, account, ..
            } => {
                known(prices)?;
                known(deposit)?;
                accounts.insert(account.clone());
            }
            Op::SetPrices { prices } => known(prices)?,
            Op::Add { account, basket } => {
                known(basket)?;
                accounts.insert(account.clone());
            }
            Op::Remove { account, .. } => {
                if !accounts.contains(account) {
                    return Err(invalid(format!("account `{account}` has never deposited")));
                }
            }
            Op::Swap {
                token_in, token_out, ..
            } => {
                for t in [token_in, token_out] {
                    if !tokens.contains(t.as_str()) {
                        return Err(invalid(format!("unknown token `{t}`")));
                    }
                }
            }
            Op::Agent(spec) => {
                Agent::from_spec(spec, seq)?;
                if spec.until < e.t {
                    return Err(invalid("agent `until` precedes its tick".into()));
                }
            }
        }
    }
    if let Some(t) = feed.tokens().find(|t| !tokens.contains(t.as_str())) {
        return Err(Error::InvalidEvent {
            seq: 0,
            message: format!("feed quotes unknown token `{t}`"),
        });
    }
    Ok(())
}

impl Sim<'_> {
    fn state(&self) -> &PoolState {
        self.market.state()
    }

    fn row(&mut self) {
        let entry = self.market.last_entry().expect("a transaction was applied");
        let line = csv_row(entry.tx.seq, entry.tx.kind.name(), self.state(), self.market.counters());
        self.csv.push_str(&line);
        self.csv.push('\n');
    }

    fn violation(&self, tick: u64, msg: String) -> Error {
        Error::InvariantViolation(format!("tick {tick}, seq {}: {msg}", self.state().seq()))
    }

    /// Share and investment totals must match the pool after every transaction.
    fn check_books(&mut self, tick: u64) -> Result<()> {
        self.checks += 1;
        let state = self.state();
        let book = self.market.book();
        if &book.total_shares() != state.total_supply() {
            return Err(self.violation(tick, "provider shares do not sum to TS".into()));
        }
        if &book.total_invested() != state.target_balance().value() {
            return Err(self.violation(tick, "provider investments do not sum to TB".into()));
        }
        Ok(())
    }

    fn applied(&mut self, tick: u64) -> Result<()> {
        self.row();
        self.check_books(tick)
    }

    fn reject(&mut self, tick: u64, source: &str, err: &Error) {
        warn!("tick {tick}: {source} rejected: {err}");
        self.rejected.push(json!({ "tick": tick, "source": source, "error": err.to_string() }));
    }

    /// Swaps with the boundedness and price-ordering checks.
    fn swap(&mut self, tick: u64, req: SwapRequest) -> Result<std::result::Result<Quantity, Error>> {
        let before = self.state().clone();
        let bounds = match self.mode {
            SlippageMode::OutputOnly => Some((
                swap::spontaneous_price(&before, &req.token_in, &req.token_out),
                swap::fair_rate(&before, &req.token_in, &req.token_out),
            )),
            SlippageMode::InputAndOutput => None,
        };
        let q = match self.market.swap(req.clone(), tick) {
            Ok(q) => q,
            Err(e) => return Ok(Err(e)),
        };
        self.checks += 1;
        let r_out = before.reserve(&req.token_out)?;
        if q.amount_out.value() >= r_out.value() {
            return Err(self.violation(tick, format!("output {} ≥ reserve {r_out}", q.amount_out)));
        }
        if self.state().target_balance() != before.target_balance() {
            return Err(self.violation(tick, "swap moved TB".into()));
        }
        if let Some((Ok(spot), Ok(rho))) = bounds {
            let avg = q.amount_out.value() / req.amount_in.value();
            if avg > spot || spot > rho {
                return Err(self.violation(
                    tick,
                    format!("price ordering: out/d {avg} spontaneous {spot} fair {rho}"),
                ));
            }
        }
        self.applied(tick)?;
        Ok(Ok(q.amount_out))
    }

    fn scripted(&mut self, tick: u64, op: &Op, line: usize) -> Result<()> {
        let source = format!("line {line}");
        let outcome = match op {
            Op::Genesis { .. } | Op::Agent(_) => return Ok(()),
            Op::SetPrices { prices: p } => self.market.set_prices(prices(p)?, tick),
            Op::Add { account, basket: b } => self
                .market
                .add(&AccountId::new(account.clone()), basket(b)?, tick)
                .map(|_| ()),
            Op::Remove {
                account,
                shares,
                wind_down,
            } => self
                .market
                .remove(
                    &AccountId::new(account.clone()),
                    Quantity::new(shares.0.clone())?,
                    *wind_down,
                    tick,
                )
                .map(|_| ()),
            Op::Swap {
                token_in,
                token_out,
                amount,
            } => {
                let req = SwapRequest::new(token_in.as_str(), token_out.as_str(), Quantity::new(amount.0.clone())?);
                return match self.swap(tick, req)? {
                    Ok(_) => Ok(()),
                    Err(e) => {
                        self.reject(tick, &source, &e);
                        Ok(())
                    }
                };
            }
        };
        match outcome {
            Ok(()) => self.applied(tick),
            Err(e) => {
                self.reject(tick, &source, &e);
                Ok(())
            }
        }
    }

    fn oracle(&mut self, tick: u64, view: &PriceView) -> Result<()> {
        let Some(p) = view.complete(&self.tokens) else {
            return Ok(());
        };
        if &p == self.state().fair_prices() {
            return Ok(());
        }
        match self.market.set_prices(p, tick) {
            Ok(()) => self.applied(tick),
            Err(e) => {
                self.reject(tick, "feed", &e);
                Ok(())
            }
        }
    }

    fn act(&mut self, tick: u64, index: usize, a: &mut ActiveAgent, external: &PriceView) -> Result<()> {
        a.stats.ticks += 1;
        match &a.agent {
            Agent::Noise(n) => {
                let Some(req) = n.next(&mut a.rng, &self.tokens) else {
                    return Ok(());
                };
                let amount = req.amount_in.value().clone();
                match self.swap(tick, req)? {
                    Ok(_) => {
                        a.stats.executed += 1;
                        a.stats.volume_in += amount;
                    }
                    Err(e) => {
                        a.stats.rejected += 1;
                        self.reject(tick, &format!("agent {index}"), &e);
                    }
                }
            }
            Agent::Arb(arb) => {
                let key = (self.state().seq(), external.version());
                if a.idle_at == Some(key) {
                    return Ok(());
                }
                a.stats.scans += 1;
                let state = self.state();
                let ext = |t: &TokenId| {
                    external
                        .get(t)
                        .cloned()
                        .unwrap_or_else(|| state.price(t).expect("pool token").clone())
                };
                let scan = arb.scan(state, &ext)?;
                a.stats.quotes += scan.quotes;
                if let Some(r) = scan.best_ratio {
                    if a.stats.best_ratio.as_ref().is_none_or(|b| &r > b) {
                        a.stats.best_ratio = Some(r);
                    }
                }
                let Some(best) = scan.best else {
                    a.idle_at = Some(key);
                    return Ok(());
                };
                a.stats.opportunities += 1;
                debug!(
                    "tick {tick}: arbitrage {} -> {} size {} profit {}",
                    best.request.token_in,
                    best.request.token_out,
                    best.request.amount_in,
                    to_decimal(&best.profit)
                );
                let amount = best.request.amount_in.value().clone();
                match self.swap(tick, best.request)? {
                    Ok(out) if out == best.amount_out => {
                        a.stats.executed += 1;
                        a.stats.volume_in += amount;
                        a.stats.profit += best.profit;
                    }
                    Ok(out) => {
                        return Err(self.violation(
                            tick,
                            format!("executed output {out} differs from quote {}", best.amount_out),
                        ))
                    }
                    Err(e) => {
                        a.stats.rejected += 1;
                        self.reject(tick, &format!("agent {index}"), &e);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs `scenario` against `feed`. Parse-level problems surface as
/// `InvalidEvent`, failed runtime checks as `InvariantViolation`; rejected
/// transactions are recorded in the report and the run continues.
pub fn run(scenario: &Scenario, feed: &Feed, options: &RunOptions) -> Result<RunOutput> {
    validate(scenario, feed)?;
    let genesis_event = scenario.genesis();
    let Op::Genesis {
        tokens,
        prices: p,
        deposit,
        account,
        fee,
    } = &genesis_event.op
    else {
        unreachable!("checked by parse")
    };
    let tokens: Vec<TokenId> = tokens.iter().map(TokenId::new).collect();
    let deposit = token_map(deposit)
        .into_iter()
        .map(|(k, v)| Ok((k, Quantity::new(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let genesis = Genesis::new(tokens.clone(), prices(p)?, deposit, options.mode);
    let invalid = |e: Error| Error::InvalidEvent {
        seq: 0,
        message: format!("line {}: {e}", genesis_event.line),
    };
    let mut base = genesis.build().map_err(invalid)?;
    if let Some(f) = fee {
        base = base.with_fee(f.0.clone()).map_err(invalid)?;
    }
    let market = Market::from_base(genesis, base, &AccountId::new(account.clone()));

    let mut agents: Vec<ActiveAgent> = Vec::new();
    for (seq, e) in scenario.events.iter().enumerate() {
        if let Op::Agent(spec) = &e.op {
            agents.push(ActiveAgent {
                agent: Agent::from_spec(spec, seq)?,
                from: e.t,
                until: spec.until,
                rng: ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or_else(|| agent_seed(options.seed, agents.len()))),
                stats: AgentStats::default(),
                idle_at: None,
            });
        }
    }

    let mut sim = Sim {
        market,
        tokens,
        mode: options.mode,
        feed,
        csv: format!("{CSV_HEADER}\n"),
        checks: 0,
        rejected: Vec::new(),
    };
    sim.csv.push_str(&csv_row(0, "genesis", sim.state(), sim.market.counters()));
    sim.csv.push('\n');

    let first = genesis_event.t;
    let last = scenario
        .last_tick()
        .max(feed.last_tick().map_or(0, |t| t + options.oracle_lag));
    let mut external = PriceView::default();
    let mut oracle = PriceView::default();
    // quotes before the pool opens only seed the views
    for t in 0..first {
        external.advance(feed, t);
        if t >= options.oracle_lag {
            oracle.advance(feed, t - options.oracle_lag);
        }
    }
    let mut events = scenario.events.iter().skip(1).peekable();
    info!("running ticks {first}..={last}, {} agents", agents.len());
    for t in first..=last {
        external.advance(sim.feed, t);
        let quoted = t >= options.oracle_lag && oracle.advance(sim.feed, t - options.oracle_lag);
        while let Some(e) = events.next_if(|e| e.t == t) {
            sim.scripted(t, &e.op, e.line)?;
        }
        if quoted || t == first {
            sim.oracle(t, &oracle)?;
        }
        for (i, a) in agents.iter_mut().enumerate() {
            if a.from <= t && t <= a.until {
                sim.act(t, i, a, &external)?;
            }
        }
    }

    let state = sim.state().clone();
    let book = sim.market.book();
    let lps: serde_json::Map<String, serde_json::Value> = book
        .accounts()
        .iter()
        .map(|(id, a)| {
            (
                id.to_string(),
                json!({
                    "shares": a.shares.to_decimal(),
                    "invested": to_decimal(&a.invested),
                    "value": to_decimal(&a.value(&state)),
                    "ignl": to_decimal(&a.ignl(&state)),
                }),
            )
        })
        .collect();
    let metrics = sim.market.metrics();
    let mut arb = (0u64, 0u64, Rational::zero());
    let agent_json: Vec<serde_json::Value> = agents
        .iter()
        .map(|a| {
            let kind = match a.agent {
                Agent::Noise(_) => AgentKind::NoiseTrader,
                Agent::Arb(_) => {
                    arb.0 += a.stats.opportunities;
                    arb.1 += a.stats.executed;
                    arb.2 += &a.stats.profit;
                    AgentKind::Arbitrageur
                }
            };
            let mut j = a.stats.to_json();
            j["kind"] = json!(match kind {
                AgentKind::NoiseTrader => "noise_trader",
                AgentKind::Arbitrageur => "arbitrageur",
            });
            j["from"] = json!(a.from);
            j["until"] = json!(a.until);
            j
        })
        .collect();
    let entries = sim.market.journal().entries();
    let count = |k: &str| entries.iter().filter(|e| e.tx.kind.name() == k).count();
    let counters = sim.market.counters();
    let report = json!({
        "seed": options.seed,
        "mode": options.mode,
        "oracle_lag": options.oracle_lag,
        "ticks": { "first": first, "last": last },
        "transactions": {
            "total": entries.len(),
            "set_prices": count("set_prices"),
            "add": count("add"),
            "remove": count("remove"),
            "swap": count("swap"),
        },
        "swap_branches": {
            "above_target": counters.above_target,
            "crossing": counters.crossing,
            "below_target": counters.below_target,
        },
        "invariant_checks": sim.checks,
        "rejected": sim.rejected,
        "agents": agent_json,
        "arbitrage": {
            "opportunities": arb.0,
            "executed": arb.1,
            "profit": to_decimal(&arb.2),
        },
        "final": {
            "tv": metrics.tv.to_decimal(),
            "tb": metrics.tb.to_decimal(),
            "ignl": to_decimal(&metrics.ignl),
            "label": metrics.label(),
        },
        "lps": lps,
    });
    info!(
        "{} transactions, {} arbitrage trades, IGnL {}",
        entries.len(),
        arb.1,
        to_decimal(&metrics.ignl)
    );
    Ok(RunOutput {
        metrics_csv: sim.csv,
        final_state_json: snapshot::to_json(&state),
        report,
        final_state: state,
    })
}

/// Reads and parses both inputs, then runs.
pub fn run_files(scenario: &Path, feed: Option<&Path>, options: &RunOptions) -> Result<RunOutput> {
    let scenario = Scenario::parse(&std::fs::read_to_string(scenario)?)?;
    let feed = match feed {
        Some(p) => Feed::parse(&std::fs::read_to_string(p)?)?,
        None => Feed::default(),
    };
    run(&scenario, &feed, options)
}
