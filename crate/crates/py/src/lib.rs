//! Python bindings. Amounts go in as strings (`"0.25"`, `"3/7"`), ints or
//! `fractions.Fraction`; exact results come back as `Fraction`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyString};

use uamm_core::liquidity::{self, Basket};
use uamm_core::market::Market as CoreMarket;
use uamm_core::metrics::AccountId;
use uamm_core::num::{parse_rational, to_decimal, Price, Quantity, Rational};
use uamm_core::oracle::{property_suite, OracleConfig, Uamm};
use uamm_core::sim::{self, feed::Feed, scenario::Scenario, RunOptions};
use uamm_core::state::{Genesis, PoolState, PriceMap, SlippageMode, TokenId};
use uamm_core::swap::{self, SwapQuote, SwapRequest};
use uamm_core::{snapshot, Error};

create_exception!(uamm, UammError, PyValueError, "Base class for engine errors.");
create_exception!(uamm, ParseError, UammError, "Malformed input.");
create_exception!(uamm, InvariantViolation, UammError, "An engine invariant failed.");

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Parse(_) | Error::ParseAt { .. } | Error::InvalidEvent { .. } => ParseError::new_err(msg),
        Error::InvariantViolation(_) => InvariantViolation::new_err(msg),
        _ => UammError::new_err(msg),
    }
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    if let Ok(s) = obj.cast::<PyString>() {
        return parse_rational(s.to_str()?).map_err(py_err);
    }
    if obj.is_instance_of::<PyFloat>() || obj.is_instance_of::<PyBool>() {
        return Err(ParseError::new_err("pass decimals as str, int or Fraction"));
    }
    let num: BigInt = obj.getattr("numerator")?.extract()?;
    let den: BigInt = obj.getattr("denominator")?.extract()?;
    Ok(Rational::new(num, den))
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((r.numer().clone(), r.denom().clone()))
}

fn quantity(obj: &Bound<'_, PyAny>) -> PyResult<Quantity> {
    Quantity::new(rational(obj)?).map_err(py_err)
}

fn entries(d: &Bound<'_, PyDict>) -> PyResult<Vec<(TokenId, Rational)>> {
    d.iter()
        .map(|(k, v)| Ok((TokenId::new(k.extract::<String>()?), rational(&v)?)))
        .collect()
}

fn price_map(d: &Bound<'_, PyDict>) -> PyResult<PriceMap> {
    entries(d)?
        .into_iter()
        .map(|(t, r)| Ok((t, Price::new(r).map_err(py_err)?)))
        .collect()
}

fn basket(d: &Bound<'_, PyDict>) -> PyResult<Basket> {
    let amounts = entries(d)?
        .into_iter()
        .map(|(t, r)| Ok((t, Quantity::new(r).map_err(py_err)?)))
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    Ok(Basket::from_map(amounts))
}

fn basket_dict<'py>(py: Python<'py>, b: &Basket) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (t, q) in b.amounts() {
        out.set_item(t.as_str(), fraction(py, q.value())?)?;
    }
    Ok(out)
}

fn mode(s: &str) -> PyResult<SlippageMode> {
    s.parse().map_err(py_err)
}

fn genesis(prices: &Bound<'_, PyDict>, deposit: &Bound<'_, PyDict>, mode_name: &str) -> PyResult<Genesis> {
    let tokens: Vec<TokenId> = prices
        .keys()
        .iter()
        .map(|k| Ok(TokenId::new(k.extract::<String>()?)))
        .collect::<PyResult<_>>()?;
    let amounts = basket(deposit)?.amounts().clone();
    Ok(Genesis::new(tokens, price_map(prices)?, amounts, mode(mode_name)?))
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Result of pricing one swap.
#[pyclass(frozen, module = "uamm")]
struct Quote(SwapQuote);

#[pymethods]
impl Quote {
    #[getter]
    fn amount_out<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.amount_out.value())
    }

    #[getter]
    fn fair_rate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.fair_rate)
    }

    #[getter]
    fn usx<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.usx)
    }

    #[getter]
    fn delta_out<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.delta_out.value())
    }

    #[getter]
    fn branch(&self) -> &'static str {
        self.0.branch.as_str()
    }

    /// Decimal strings with 18 fractional digits.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_loads(py, &self.0.to_json().to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "Quote(amount_out={}, usx={}, branch={})",
            self.0.amount_out.to_decimal(),
            to_decimal(&self.0.usx),
            self.0.branch.as_str()
        )
    }
}

/// An immutable pool state; every operation returns a new pool.
#[pyclass(frozen, from_py_object, module = "uamm")]
#[derive(Clone)]
struct Pool(PoolState);

#[pymethods]
impl Pool {
    /// Opens a pool; token order follows `prices`.
    #[new]
    #[pyo3(signature = (prices, deposit, mode = "output-only"))]
    fn new(prices: &Bound<'_, PyDict>, deposit: &Bound<'_, PyDict>, mode: &str) -> PyResult<Self> {
        Ok(Pool(genesis(prices, deposit, mode)?.build().map_err(py_err)?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Pool(snapshot::from_json(text).map_err(py_err)?))
    }

    fn to_json(&self) -> String {
        snapshot::to_json(&self.0)
    }

    #[getter]
    fn tokens(&self) -> Vec<String> {
        self.0.tokens().iter().map(|t| t.to_string()).collect()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode().as_str()
    }

    #[getter]
    fn seq(&self) -> u64 {
        self.0.seq()
    }

    #[getter]
    fn total_supply<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.total_supply().value())
    }

    #[getter]
    fn target_balance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.target_balance().value())
    }

    #[getter]
    fn pool_value<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.pool_value().value())
    }

    fn reserve<'py>(&self, py: Python<'py>, token: &str) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.reserve(&token.into()).map_err(py_err)?.value())
    }

    fn price<'py>(&self, py: Python<'py>, token: &str) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.price(&token.into()).map_err(py_err)?.value())
    }

    fn reserves<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        basket_dict(py, &Basket::from_map(self.0.reserves().clone()))
    }

    fn quote(&self, token_in: &str, token_out: &str, amount: &Bound<'_, PyAny>) -> PyResult<Quote> {
        let req = SwapRequest::new(token_in, token_out, quantity(amount)?);
        Ok(Quote(swap::quote(&self.0, &req).map_err(py_err)?))
    }

    fn swap(&self, token_in: &str, token_out: &str, amount: &Bound<'_, PyAny>) -> PyResult<(Pool, Quote)> {
        let req = SwapRequest::new(token_in, token_out, quantity(amount)?);
        let (next, q) = swap::swap(&self.0, &req).map_err(py_err)?;
        Ok((Pool(next), Quote(q)))
    }

    fn spontaneous_price<'py>(&self, py: Python<'py>, token_in: &str, token_out: &str) -> PyResult<Bound<'py, PyAny>> {
        let p = swap::spontaneous_price(&self.0, &token_in.into(), &token_out.into()).map_err(py_err)?;
        fraction(py, &p)
    }

    /// Returns the new pool and the minted shares.
    fn add<'py>(&self, py: Python<'py>, basket: &Bound<'_, PyDict>) -> PyResult<(Pool, Bound<'py, PyAny>)> {
        let b = self::basket(basket)?;
        let (next, shares) = liquidity::add(&self.0, &b).map_err(py_err)?;
        Ok((Pool(next), fraction(py, shares.value())?))
    }

    /// Returns the new pool and the withdrawn basket.
    fn remove<'py>(&self, py: Python<'py>, shares: &Bound<'_, PyAny>) -> PyResult<(Pool, Bound<'py, PyDict>)> {
        let (next, b) = liquidity::remove(&self.0, &quantity(shares)?).map_err(py_err)?;
        Ok((Pool(next), basket_dict(py, &b)?))
    }

    fn set_prices(&self, prices: &Bound<'_, PyDict>) -> PyResult<Pool> {
        Ok(Pool(self.0.set_fair_prices(&price_map(prices)?).map_err(py_err)?))
    }

    fn __eq__(&self, other: &Pool) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        let reserves: Vec<String> = self
            .0
            .reserves()
            .iter()
            .map(|(t, q)| format!("{t}={}", q.to_decimal()))
            .collect();
        format!("Pool({}, mode={})", reserves.join(", "), self.0.mode().as_str())
    }
}

/// A journaled pool with a per-account provider ledger.
#[pyclass(module = "uamm")]
struct Market(CoreMarket);

#[pymethods]
impl Market {
    #[new]
    #[pyo3(signature = (prices, deposit, mode = "output-only", founder = "lp0"))]
    fn new(prices: &Bound<'_, PyDict>, deposit: &Bound<'_, PyDict>, mode: &str, founder: &str) -> PyResult<Self> {
        let g = genesis(prices, deposit, mode)?;
        Ok(Market(CoreMarket::open(g, &AccountId::new(founder)).map_err(py_err)?))
    }

    #[getter]
    fn state(&self) -> Pool {
        Pool(self.0.state().clone())
    }

    #[pyo3(signature = (account, basket, t = 0))]
    fn add<'py>(&mut self, py: Python<'py>, account: &str, basket: &Bound<'_, PyDict>, t: u64) -> PyResult<Bound<'py, PyAny>> {
        let shares = self.0.add(&account.into(), self::basket(basket)?, t).map_err(py_err)?;
        fraction(py, shares.value())
    }

    #[pyo3(signature = (account, shares, wind_down = false, t = 0))]
    fn remove<'py>(
        &mut self,
        py: Python<'py>,
        account: &str,
        shares: &Bound<'_, PyAny>,
        wind_down: bool,
        t: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let b = self
            .0
            .remove(&account.into(), quantity(shares)?, wind_down, t)
            .map_err(py_err)?;
        basket_dict(py, &b)
    }

    #[pyo3(signature = (token_in, token_out, amount, t = 0))]
    fn swap(&mut self, token_in: &str, token_out: &str, amount: &Bound<'_, PyAny>, t: u64) -> PyResult<Quote> {
        let req = SwapRequest::new(token_in, token_out, quantity(amount)?);
        Ok(Quote(self.0.swap(req, t).map_err(py_err)?))
    }

    #[pyo3(signature = (prices, t = 0))]
    fn set_prices(&mut self, prices: &Bound<'_, PyDict>, t: u64) -> PyResult<()> {
        self.0.set_prices(price_map(prices)?, t).map_err(py_err)
    }

    fn shares<'py>(&self, py: Python<'py>, account: &str) -> PyResult<Bound<'py, PyAny>> {
        let acct = self.0.book().get(&account.into()).map_err(py_err)?;
        fraction(py, acct.shares.value())
    }

    /// Impermanent gain (positive) or loss of one account.
    fn ignl<'py>(&self, py: Python<'py>, account: &str) -> PyResult<Bound<'py, PyAny>> {
        let v = self.0.book().ignl(self.0.state(), &account.into()).map_err(py_err)?;
        fraction(py, &v)
    }

    /// Pool value, target balance and their difference.
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.0.metrics();
        let out = PyDict::new(py);
        out.set_item("tv", fraction(py, m.tv.value())?)?;
        out.set_item("tb", fraction(py, m.tb.value())?)?;
        out.set_item("ignl", fraction(py, &m.ignl)?)?;
        out.set_item("label", m.label())?;
        Ok(out)
    }

    fn __len__(&self) -> usize {
        self.0.journal().entries().len()
    }
}

/// Runs a JSONL scenario against a CSV feed; returns the three output
/// documents as strings.
#[pyfunction]
#[pyo3(signature = (scenario, feed, seed = 0, mode = "output-only", oracle_lag = 0))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario: &str,
    feed: &str,
    seed: u64,
    mode: &str,
    oracle_lag: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let scenario = Scenario::parse(scenario).map_err(py_err)?;
    let feed = Feed::parse(feed).map_err(py_err)?;
    let options = RunOptions {
        seed,
        mode: self::mode(mode)?,
        oracle_lag,
    };
    let output = py.detach(|| sim::run(&scenario, &feed, &options)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("metrics.csv", &output.metrics_csv)?;
    out.set_item("final_state.json", &output.final_state_json)?;
    out.set_item("report.json", output.report_json())?;
    Ok(out)
}

/// Runs the property suite; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (cases = None, seed = None, mode = "output-only", expect_additivity_failure = false))]
fn verify<'py>(
    py: Python<'py>,
    cases: Option<usize>,
    seed: Option<u64>,
    mode: &str,
    expect_additivity_failure: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = OracleConfig::default().with_mode(self::mode(mode)?);
    if let Some(n) = cases {
        config = config.with_cases(n);
    }
    if let Some(s) = seed {
        config = config.with_seed(s);
    }
    config.expect_additivity_failure = expect_additivity_failure;
    let report = py.detach(|| property_suite(&config, &Uamm));
    json_loads(py, &report.to_json().to_string())
}

#[pymodule]
fn uamm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Pool>()?;
    m.add_class::<Market>()?;
    m.add_class::<Quote>()?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("UammError", m.py().get_type::<UammError>())?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add("InvariantViolation", m.py().get_type::<InvariantViolation>())?;
    Ok(())
}
