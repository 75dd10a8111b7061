//! Swap pricing.
//!
//! A trade is first converted at the fair rate `ρ = f_in / f_out`, then the
//! output amount is passed through the output slippage curve of the output
//! pool. The curve is the identity while the pool stays at or above its
//! target `T`, and the constant-product curve `T² = X · R` once it is below
//! (`X = T² / R` is the virtual balance). A trade that starts above the
//! target and ends below it is paid at the fair rate down to `T` and on the
//! curve anchored at reserve `T` for the rest.
//!
//! In [`SlippageMode::InputAndOutput`] the input amount is first passed
//! through the input slippage curve of the input pool, which is active for
//! the part of the deposit that lands above the input pool's target.
//!
//! Virtual balances are recomputed from the current reserve and target on
//! every quote and never stored.

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::num::{to_decimal, Quantity, Rational};
use crate::state::{PoolState, SlippageMode, TokenId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapRequest {
    pub token_in: TokenId,
    pub token_out: TokenId,
    pub amount_in: Quantity,
}

impl SwapRequest {
    pub fn new(token_in: impl Into<TokenId>, token_out: impl Into<TokenId>, amount_in: Quantity) -> Self {
        Self {
            token_in: token_in.into(),
            token_out: token_out.into(),
            amount_in,
        }
    }

    /// The same pair traded the other way with `amount_in`.
    pub fn reversed(&self, amount_in: Quantity) -> Self {
        Self {
            token_in: self.token_out.clone(),
            token_out: self.token_in.clone(),
            amount_in,
        }
    }
}

/// Region of the output curve a trade was priced in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputBranch {
    /// `T ≤ R − Δ`: paid at the fair rate.
    AboveTarget,
    /// `R − Δ < T < R`: fair down to `T`, curve for the remainder.
    Crossing,
    /// `T ≥ R`: entirely on the curve.
    BelowTarget,
}

impl OutputBranch {
    pub const ALL: [OutputBranch; 3] = [
        OutputBranch::AboveTarget,
        OutputBranch::Crossing,
        OutputBranch::BelowTarget,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutputBranch::AboveTarget => "above_target",
            OutputBranch::Crossing => "crossing",
            OutputBranch::BelowTarget => "below_target",
        }
    }
}

/// Region of the input curve a deposit was priced in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputBranch {
    /// `T ≥ R + d`: the input pool ends at or below target; no input slippage.
    Neutral,
    /// `R ≤ T < R + d`: the deposit lifts the pool through its target.
    Crossing,
    /// `T < R`: the pool is already above target.
    Slipped,
}

impl InputBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            InputBranch::Neutral => "neutral",
            InputBranch::Crossing => "crossing",
            InputBranch::Slipped => "slipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapQuote {
    pub amount_out: Quantity,
    pub fair_rate: Rational,
    /// `amount_out / (ρ · amount_in)`.
    pub usx: Rational,
    pub branch: OutputBranch,
    /// Output amount at the fair rate, before output slippage.
    pub delta_out: Quantity,
    /// Input amount after fee and input slippage.
    pub delta_in: Quantity,
    pub input_branch: Option<InputBranch>,
}

impl SwapQuote {
    /// Fraction of the fair-rate output withheld, `1 − usx`.
    pub fn slippage(&self) -> Rational {
        Rational::one() - &self.usx
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "amount_out": self.amount_out.to_decimal(),
            "fair_rate": to_decimal(&self.fair_rate),
            "usx": to_decimal(&self.usx),
            "branch": self.branch.as_str(),
            "delta_out": self.delta_out.to_decimal(),
        })
    }
}

fn zero_reserve(token: &TokenId) -> Error {
    Error::ZeroReserve(token.to_string())
}

/// `ρ = f_in / f_out`.
pub fn fair_rate(state: &PoolState, token_in: &TokenId, token_out: &TokenId) -> Result<Rational> {
    Ok(state.price(token_in)?.value() / state.price(token_out)?.value())
}

/// `X = target² / reserve`.
pub fn virtual_balance(reserve: &Quantity, target: &Quantity) -> Result<Quantity> {
    if reserve.is_zero() {
        return Err(Error::ZeroReserve("pool".into()));
    }
    Quantity::new(target.value() * target.value() / reserve.value())
}

/// The output-curve region for a fair-rate amount `delta` against `reserve`.
pub fn output_branch(delta: &Rational, reserve: &Rational, target: &Rational) -> OutputBranch {
    if target >= reserve {
        OutputBranch::BelowTarget
    } else if target <= &(reserve - delta) {
        OutputBranch::AboveTarget
    } else {
        OutputBranch::Crossing
    }
}

/// Evaluates the formula of `branch` at `(delta, reserve, target)` without
/// checking that the point lies in that branch's region.
pub fn output_branch_value(
    branch: OutputBranch,
    delta: &Rational,
    reserve: &Rational,
    target: &Rational,
) -> Rational {
    match branch {
        OutputBranch::AboveTarget => delta.clone(),
        OutputBranch::Crossing => {
            let fair = reserve - target;
            let rest = delta - &fair;
            // curve anchored at reserve T, where X = T
            let curved = target * &rest / (target + &rest);
            fair + curved
        }
        OutputBranch::BelowTarget => {
            let x = target * target / reserve;
            reserve - target * target / (x + delta)
        }
    }
}

/// Output slippage on raw rationals. `reserve` must be positive.
pub fn output_curve(delta: &Rational, reserve: &Rational, target: &Rational) -> (Rational, OutputBranch) {
    let branch = output_branch(delta, reserve, target);
    if delta.is_zero() {
        return (Rational::zero(), branch);
    }
    (output_branch_value(branch, delta, reserve, target), branch)
}

/// Output slippage for `delta_out` tokens of `token_out` at fair rate.
pub fn output_slippage(
    delta_out: &Quantity,
    state: &PoolState,
    token_out: &TokenId,
) -> Result<(Quantity, OutputBranch)> {
    let reserve = state.reserve(token_out)?;
    if reserve.is_zero() {
        return Err(zero_reserve(token_out));
    }
    let target = state.pool_target(token_out)?;
    let (out, branch) = output_curve(delta_out.value(), reserve.value(), target.value());
    Ok((Quantity::new(out)?, branch))
}

/// The input-curve region for a deposit `d` into `reserve`.
pub fn input_branch(d: &Rational, reserve: &Rational, target: &Rational) -> InputBranch {
    if target < reserve {
        InputBranch::Slipped
    } else if target >= &(reserve + d) {
        InputBranch::Neutral
    } else {
        InputBranch::Crossing
    }
}

/// Evaluates the input formula of `branch` without checking its region.
pub fn input_branch_value(
    branch: InputBranch,
    d: &Rational,
    reserve: &Rational,
    target: &Rational,
) -> Rational {
    match branch {
        InputBranch::Neutral => d.clone(),
        InputBranch::Crossing => {
            let free = target - reserve;
            let rest = d - &free;
            // slipped part priced from reserve T, where X = T
            let slipped = &rest * (target + &rest) / target;
            free + slipped
        }
        InputBranch::Slipped => {
            let x = target * target / reserve;
            d * (reserve + d) / x
        }
    }
}

/// Input slippage on raw rationals. `reserve` must be positive.
pub fn input_curve(d: &Rational, reserve: &Rational, target: &Rational) -> (Rational, InputBranch) {
    let branch = input_branch(d, reserve, target);
    if d.is_zero() {
        return (Rational::zero(), branch);
    }
    (input_branch_value(branch, d, reserve, target), branch)
}

/// Input slippage `Δ_in` for depositing `d_in` of `token_in`.
pub fn input_slippage(
    d_in: &Quantity,
    state: &PoolState,
    token_in: &TokenId,
) -> Result<(Quantity, InputBranch)> {
    let reserve = state.reserve(token_in)?;
    if reserve.is_zero() {
        return Err(zero_reserve(token_in));
    }
    let target = state.pool_target(token_in)?;
    let (v, branch) = input_curve(d_in.value(), reserve.value(), target.value());
    Ok((Quantity::new(v)?, branch))
}

fn validate(state: &PoolState, req: &SwapRequest) -> Result<()> {
    state.reserve(&req.token_in)?;
    state.reserve(&req.token_out)?;
    if req.token_in == req.token_out {
        return Err(Error::SelfSwap);
    }
    if !req.amount_in.is_positive() {
        return Err(Error::ZeroAmount);
    }
    for t in [&req.token_in, &req.token_out] {
        if state.reserve(t)?.is_zero() {
            return Err(zero_reserve(t));
        }
    }
    Ok(())
}

/// Prices a swap without changing the state.
pub fn quote(state: &PoolState, req: &SwapRequest) -> Result<SwapQuote> {
    validate(state, req)?;
    let rho = fair_rate(state, &req.token_in, &req.token_out)?;
    let after_fee = req.amount_in.scale(&(Rational::one() - state.fee()))?;
    let (delta_in, input_branch) = match state.mode() {
        SlippageMode::OutputOnly => (after_fee, None),
        SlippageMode::InputAndOutput => {
            let (d, b) = input_slippage(&after_fee, state, &req.token_in)?;
            (d, Some(b))
        }
    };
    let delta_out = delta_in.scale(&rho)?;
    let (amount_out, branch) = output_slippage(&delta_out, state, &req.token_out)?;
    let usx = amount_out.value() / (&rho * req.amount_in.value());
    Ok(SwapQuote {
        amount_out,
        fair_rate: rho,
        usx,
        branch,
        delta_out,
        delta_in,
        input_branch,
    })
}

/// `USX = realized output / fair-rate output`.
pub fn usx_rate(state: &PoolState, req: &SwapRequest) -> Result<Rational> {
    Ok(quote(state, req)?.usx)
}

/// Executes a swap: the full `amount_in` is credited to the input pool and
/// the quoted output debited from the output pool. Shares and target
/// balance are untouched.
pub fn swap(state: &PoolState, req: &SwapRequest) -> Result<(PoolState, SwapQuote)> {
    let q = quote(state, req)?;
    let mut reserves = state.reserves().clone();
    let r_in = reserves.get_mut(&req.token_in).expect("validated");
    *r_in = &*r_in + &req.amount_in;
    let r_out = reserves.get_mut(&req.token_out).expect("validated");
    *r_out = r_out
        .checked_sub(&q.amount_out)
        .filter(Quantity::is_positive)
        .ok_or_else(|| {
            Error::InvariantViolation(format!(
                "swap would deplete `{}`: {} of {}",
                req.token_out, q.amount_out, r_out
            ))
        })?;
    Ok((state.with_reserves(reserves), q))
}

/// Marginal rate `p_in / p_out` of an infinitesimal trade.
pub fn spontaneous_price(state: &PoolState, token_in: &TokenId, token_out: &TokenId) -> Result<Rational> {
    let rho = fair_rate(state, token_in, token_out)?;
    let r_out = state.reserve(token_out)?;
    let r_in = state.reserve(token_in)?;
    for (t, r) in [(token_in, r_in), (token_out, r_out)] {
        if r.is_zero() {
            return Err(zero_reserve(t));
        }
    }
    let t_out = state.pool_target(token_out)?.value();
    let mut price = rho * (Rational::one() - state.fee());
    if t_out > r_out.value() {
        // R / X = R² / T²
        price *= r_out.value() * r_out.value() / (t_out * t_out);
    }
    if state.mode() == SlippageMode::InputAndOutput {
        let t_in = state.pool_target(token_in)?.value();
        if t_in < r_in.value() {
            price *= r_in.value() * r_in.value() / (t_in * t_in);
        }
    }
    Ok(price)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};
    use crate::state::{Genesis, PriceMap};
    use std::collections::BTreeMap;

    fn tok(s: &str) -> TokenId {
        TokenId::new(s)
    }

    /// Two-token pool with given reserves/prices; both targets overridden.
    fn pool(r_in: i64, r_out: i64, t_in: i64, t_out: i64, f_in: Rational, f_out: Rational) -> PoolState {
        let prices: PriceMap = [
            (tok("I"), crate::num::Price::new(f_in).unwrap()),
            (tok("O"), crate::num::Price::new(f_out).unwrap()),
        ]
        .into_iter()
        .collect();
        let deposit: BTreeMap<_, _> = [
            (tok("I"), Quantity::new(int(r_in)).unwrap()),
            (tok("O"), Quantity::new(int(r_out)).unwrap()),
        ]
        .into_iter()
        .collect();
        Genesis::new(vec![tok("I"), tok("O")], prices, deposit, SlippageMode::OutputOnly)
            .build()
            .unwrap()
            .with_pool_target(&tok("I"), Quantity::new(int(t_in)).unwrap())
            .unwrap()
            .with_pool_target(&tok("O"), Quantity::new(int(t_out)).unwrap())
            .unwrap()
    }

    fn q(n: i64) -> Quantity {
        Quantity::new(int(n)).unwrap()
    }

    fn req(d: i64) -> SwapRequest {
        SwapRequest::new("I", "O", q(d))
    }

    #[test]
    fn fair_rate_examples() {
        let s = pool(10, 10, 1, 1, ratio(3, 4), ratio(1, 4));
        assert_eq!(fair_rate(&s, &tok("I"), &tok("O")).unwrap(), int(3));
        assert_eq!(fair_rate(&s, &tok("I"), &tok("I")).unwrap(), int(1));
        let s = pool(10, 10, 1, 1, ratio(1, 2), ratio(1, 2));
        assert_eq!(fair_rate(&s, &tok("I"), &tok("O")).unwrap(), int(1));
        assert!(fair_rate(&s, &tok("I"), &tok("Z")).is_err());
    }

    #[test]
    fn virtual_balance_examples() {
        assert_eq!(virtual_balance(&q(100), &q(100)).unwrap(), q(100));
        assert_eq!(virtual_balance(&q(50), &q(100)).unwrap(), q(200));
        assert_eq!(virtual_balance(&q(200), &q(100)).unwrap(), q(50));
        assert!(matches!(virtual_balance(&q(0), &q(100)), Err(Error::ZeroReserve(_))));
    }

    #[test]
    fn output_slippage_examples() {
        let (v, b) = output_curve(&int(30), &int(100), &int(50));
        assert_eq!((v, b), (int(30), OutputBranch::AboveTarget));

        let (v, b) = output_curve(&int(100), &int(100), &int(100));
        assert_eq!((v, b), (int(50), OutputBranch::BelowTarget));

        let (v, b) = output_curve(&int(60), &int(120), &int(100));
        assert_eq!(v, int(20) + ratio(200, 7));
        assert_eq!(b, OutputBranch::Crossing);
    }

    #[test]
    fn output_slippage_on_state() {
        let s = pool(100, 120, 100, 100, int(1), int(1));
        let (v, b) = output_slippage(&q(60), &s, &tok("O")).unwrap();
        assert_eq!(v, Quantity::new(int(20) + ratio(200, 7)).unwrap());
        assert_eq!(b, OutputBranch::Crossing);
    }

    #[test]
    fn usx_examples() {
        // far above target
        let s = pool(100, 1000, 100, 100, int(1), int(1));
        assert_eq!(usx_rate(&s, &req(10)).unwrap(), int(1));
        let s = pool(100, 100, 100, 100, int(1), int(1));
        assert_eq!(usx_rate(&s, &req(100)).unwrap(), ratio(1, 2));
        // below target: usx → R/X = 1/4 as d → 0
        let s = pool(100, 50, 100, 100, int(1), int(1));
        let tiny = SwapRequest::new("I", "O", Quantity::new(crate::num::pow10_neg(12)).unwrap());
        let u = usx_rate(&s, &tiny).unwrap();
        assert!(u < ratio(1, 4));
        assert!(ratio(1, 4) - u < crate::num::pow10_neg(12));
    }

    #[test]
    fn input_slippage_examples() {
        let (v, b) = input_curve(&int(7), &int(50), &int(100));
        assert_eq!((v, b), (int(7), InputBranch::Neutral));
        let (v, b) = input_curve(&int(10), &int(200), &int(100));
        assert_eq!((v, b), (int(42), InputBranch::Slipped));
        // knot T = R + d
        let d = int(30);
        let (r, t) = (int(70), int(100));
        assert_eq!(
            input_branch_value(InputBranch::Neutral, &d, &r, &t),
            input_branch_value(InputBranch::Crossing, &d, &r, &t)
        );
        // knot T = R
        let r = int(100);
        assert_eq!(
            input_branch_value(InputBranch::Crossing, &d, &r, &t),
            input_branch_value(InputBranch::Slipped, &d, &r, &t)
        );
    }

    #[test]
    fn swap_updates_reserves() {
        let s = pool(100, 100, 100, 100, int(1), int(1));
        let (n, quote) = swap(&s, &req(100)).unwrap();
        assert_eq!(quote.amount_out, q(50));
        assert_eq!(quote.delta_out, q(100));
        assert_eq!(n.reserve(&tok("O")).unwrap(), &q(50));
        assert_eq!(n.reserve(&tok("I")).unwrap(), &q(200));
        assert_eq!(n.target_balance(), s.target_balance());
        assert_eq!(n.total_supply(), s.total_supply());
    }

    #[test]
    fn fair_exchange_when_above_target() {
        let s = pool(1000, 1000, 10, 10, ratio(3, 4), ratio(1, 4));
        let qt = quote(&s, &req(5)).unwrap();
        assert_eq!(qt.amount_out, q(15));
        assert_eq!(qt.usx, int(1));
        assert_eq!(qt.branch, OutputBranch::AboveTarget);
    }

    #[test]
    fn swap_errors() {
        let s = pool(100, 100, 100, 100, int(1), int(1));
        assert_eq!(quote(&s, &SwapRequest::new("I", "I", q(1))), Err(Error::SelfSwap));
        assert_eq!(quote(&s, &req(0)), Err(Error::ZeroAmount));
        assert!(matches!(
            quote(&s, &SwapRequest::new("I", "Z", q(1))),
            Err(Error::UnknownToken(_))
        ));
    }

    #[test]
    fn spontaneous_price_examples() {
        let s = pool(100, 200, 100, 100, int(2), int(1));
        assert_eq!(spontaneous_price(&s, &tok("I"), &tok("O")).unwrap(), int(2));
        let s = pool(100, 50, 100, 100, int(1), int(1));
        assert_eq!(spontaneous_price(&s, &tok("I"), &tok("O")).unwrap(), ratio(1, 4));
        let s = s.with_mode(SlippageMode::InputAndOutput);
        assert_eq!(spontaneous_price(&s, &tok("I"), &tok("O")).unwrap(), ratio(1, 4));
        let s = pool(200, 50, 100, 100, int(1), int(1)).with_mode(SlippageMode::InputAndOutput);
        // (R_out/X_out)·(R_in/X_in) = (1/4)·4
        assert_eq!(spontaneous_price(&s, &tok("I"), &tok("O")).unwrap(), int(1));
    }

    #[test]
    fn fee_is_withheld_from_pricing_but_credited() {
        let s = pool(1000, 1000, 10, 10, int(1), int(1))
            .with_fee(ratio(1, 100))
            .unwrap();
        let (n, qt) = swap(&s, &req(100)).unwrap();
        assert_eq!(qt.amount_out, q(99));
        assert_eq!(qt.usx, ratio(99, 100));
        assert_eq!(n.reserve(&tok("I")).unwrap(), &q(1100));
    }
}
