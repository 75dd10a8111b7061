//! Slow, independent routes to the quantities the engine computes.
//!
//! Curves are solved from their invariants rather than from the branch
//! formulas: the part of a trade on the fair side of the target moves at
//! rate one, and the rest moves along `S · X_S = T²` starting from
//! `S = min(R, T)` (output) or `S = max(R, T)` (input).

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::num::{Quantity, Rational};
use crate::state::{PoolState, SlippageMode};
use crate::swap::SwapRequest;

use super::engine::Engine;

fn clamp_nonneg(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

/// Output tokens released for a fair-rate amount `delta`.
pub fn output_tokens(delta: &Rational, reserve: &Rational, target: &Rational) -> Rational {
    let fair = clamp_nonneg(reserve - target).min(delta.clone());
    let rest = delta - &fair;
    if rest.is_zero() {
        return fair;
    }
    let s = reserve.min(target).clone();
    let t2 = target * target;
    let x_s = &t2 / &s;
    let s_after = &t2 / (x_s + &rest);
    fair + s - s_after
}

/// Fair-rate value credited for a deposit of `d` input tokens.
pub fn input_value(d: &Rational, reserve: &Rational, target: &Rational) -> Rational {
    let free = clamp_nonneg(target - reserve).min(d.clone());
    let rest = d - &free;
    if rest.is_zero() {
        return free;
    }
    let s = reserve.max(target).clone();
    let t2 = target * target;
    let x_s = &t2 / &s;
    // virtual balance given up while the reserve grows by `rest`
    let given = x_s - &t2 / (&s + &rest);
    free + &rest * &rest / given
}

struct Sides {
    rho: Rational,
    fee_keep: Rational,
    r_in: Rational,
    t_in: Rational,
    r_out: Rational,
    t_out: Rational,
    input: bool,
}

fn sides(state: &PoolState, req: &SwapRequest) -> Result<Sides> {
    let f_in = state.price(&req.token_in)?.value();
    let f_out = state.price(&req.token_out)?.value();
    let s = Sides {
        rho: f_in / f_out,
        fee_keep: Rational::one() - state.fee(),
        r_in: state.reserve(&req.token_in)?.value().clone(),
        t_in: state.pool_target(&req.token_in)?.value().clone(),
        r_out: state.reserve(&req.token_out)?.value().clone(),
        t_out: state.pool_target(&req.token_out)?.value().clone(),
        input: state.mode() == SlippageMode::InputAndOutput,
    };
    if s.r_in.is_zero() || s.r_out.is_zero() {
        return Err(Error::ZeroReserve("pool".into()));
    }
    Ok(s)
}

impl Sides {
    fn credited(&self, amount: &Rational) -> Rational {
        let d = amount * &self.fee_keep;
        if self.input {
            input_value(&d, &self.r_in, &self.t_in)
        } else {
            d
        }
    }
}

/// Output of a swap computed by the reference route.
pub fn output(state: &PoolState, req: &SwapRequest) -> Result<Rational> {
    let s = sides(state, req)?;
    let delta = &s.rho * s.credited(req.amount_in.value());
    Ok(output_tokens(&delta, &s.r_out, &s.t_out))
}

/// Marginal rate of an infinitesimal trade: the product of the curve
/// slopes at zero.
pub fn marginal_price(state: &PoolState, req: &SwapRequest) -> Result<Rational> {
    let s = sides(state, req)?;
    // slope of S − T²/(X_S + b) at b = 0 is S²/T², and 1 on the fair side
    let out_slope = if s.r_out >= s.t_out {
        Rational::one()
    } else {
        &s.r_out * &s.r_out / (&s.t_out * &s.t_out)
    };
    let in_slope = if s.input && s.r_in > s.t_in {
        &s.r_in * &s.r_in / (&s.t_in * &s.t_in)
    } else {
        Rational::one()
    };
    Ok(s.rho * s.fee_keep * out_slope * in_slope)
}

/// True when a trade of `amount` leaves the branch it starts in on
/// either curve.
pub fn straddles(state: &PoolState, req: &SwapRequest, amount: &Rational) -> Result<bool> {
    let s = sides(state, req)?;
    let d = amount * &s.fee_keep;
    if s.input && s.r_in < s.t_in && s.t_in < &s.r_in + &d {
        return Ok(true);
    }
    let gap = &s.r_out - &s.t_out;
    let delta = &s.rho * s.credited(amount);
    Ok(gap.is_positive() && gap < delta)
}

/// Constant `C` with `|ρ·USX(ε) − p| ≤ C·ε`, where `p` is the marginal price,
/// from the second-order behaviour of the branches the trade starts in.
pub fn convergence_constant(state: &PoolState, req: &SwapRequest, epsilon: &Rational) -> Result<Rational> {
    let s = sides(state, req)?;
    let e = epsilon * &s.fee_keep;
    let slipped = s.input && s.r_in >= s.t_in;
    let x_in = &s.t_in * &s.t_in / &s.r_in;
    let (m0, m_eps) = if slipped {
        (&s.r_in / &x_in, (&s.r_in + &e) / &x_in)
    } else {
        (Rational::one(), Rational::one())
    };
    let x_out = &s.t_out * &s.t_out / &s.r_out;
    let (s0, curvature) = if s.r_out <= s.t_out {
        (&s.r_out / &x_out, &s.r_out / (&x_out * &x_out))
    } else if &s.r_out - &s.t_out >= &s.rho * &m_eps * &e {
        (Rational::one(), Rational::zero())
    } else {
        (Rational::one(), Rational::one() / &s.t_out)
    };
    let mut c = &s.rho * &m0 * curvature * &s.rho * &m_eps;
    if slipped {
        c += &s.rho * &s0 / &x_in;
    }
    Ok(c * &s.fee_keep * &s.fee_keep)
}

/// Splits the input into `n` equal parts and swaps them one after another.
/// Returns the total output and the final state.
pub fn micro_swap_compose(
    engine: &dyn Engine,
    state: &PoolState,
    req: &SwapRequest,
    n: usize,
) -> Result<(Quantity, PoolState)> {
    assert!(n >= 1, "at least one step");
    let part = Quantity::new(req.amount_in.value() / Rational::from_integer(n.into()))?;
    let step = SwapRequest::new(req.token_in.clone(), req.token_out.clone(), part);
    let mut current = state.clone();
    let mut total = Quantity::zero();
    for _ in 0..n {
        let (next, q) = engine.swap(&current, &step)?;
        total = total + q.amount_out;
        current = next;
    }
    Ok((total, current))
}

/// Difference quotient `out(2ε) / 2ε`, the central difference of the
/// cumulative output at `ε`. Refuses when `2ε` leaves the starting branch.
pub fn fd_marginal_price(
    engine: &dyn Engine,
    state: &PoolState,
    req: &SwapRequest,
    epsilon: &Rational,
) -> Result<Rational> {
    let width = epsilon * Rational::from_integer(2.into());
    if straddles(state, req, &width)? {
        return Err(Error::BranchStraddle);
    }
    let probe = SwapRequest::new(req.token_in.clone(), req.token_out.clone(), Quantity::new(width.clone())?);
    let (_, q) = engine.swap(state, &probe)?;
    Ok(q.amount_out.value() / width)
}

/// [`fd_marginal_price`], halving `ε` on straddles up to `retries` times.
pub fn fd_marginal_price_retrying(
    engine: &dyn Engine,
    state: &PoolState,
    req: &SwapRequest,
    epsilon: &Rational,
    retries: usize,
) -> Result<(Rational, Rational)> {
    let mut eps = epsilon.clone();
    for _ in 0..=retries {
        match fd_marginal_price(engine, state, req, &eps) {
            Err(Error::BranchStraddle) => eps /= Rational::from_integer(2.into()),
            other => return other.map(|p| (p, eps)),
        }
    }
    Err(Error::BranchStraddle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, pow10_neg, ratio};
    use crate::oracle::engine::Uamm;
    use crate::oracle::gen::{raw_state, token};
    use crate::num::Price;

    fn pool(r_in: i64, r_out: i64, tb: i64, mode: SlippageMode) -> PoolState {
        let p = Price::from_ratio(1, 1);
        raw_state(
            &[(token(0), int(r_in)), (token(1), int(r_out))],
            &[(token(0), p.clone()), (token(1), p)],
            int(r_in + r_out),
            int(tb),
            mode,
        )
    }

    fn req(d: Rational) -> SwapRequest {
        SwapRequest::new(token(0), token(1), Quantity::new(d).unwrap())
    }

    #[test]
    fn reference_curves_hit_known_points() {
        assert_eq!(output_tokens(&int(100), &int(100), &int(100)), int(50));
        assert_eq!(output_tokens(&int(30), &int(150), &int(100)), int(30));
        assert_eq!(output_tokens(&int(60), &int(120), &int(100)), int(20) + ratio(200, 7));
        assert_eq!(input_value(&int(10), &int(200), &int(100)), int(42));
        assert_eq!(input_value(&int(10), &int(50), &int(100)), int(10));
    }

    #[test]
    fn hundred_micro_swaps_equal_one() {
        let s = pool(100, 100, 100, SlippageMode::OutputOnly);
        let (out, _) = micro_swap_compose(&Uamm, &s, &req(int(100)), 100).unwrap();
        assert_eq!(out.value(), &int(50));
    }

    #[test]
    fn input_mode_micro_swaps_diverge() {
        let s = pool(200, 50, 100, SlippageMode::InputAndOutput);
        let (one, _) = micro_swap_compose(&Uamm, &s, &req(int(10)), 1).unwrap();
        let (two, _) = micro_swap_compose(&Uamm, &s, &req(int(10)), 2).unwrap();
        assert_ne!(one, two);
    }

    #[test]
    fn finite_difference_prices() {
        let eps = pow10_neg(9);
        let above = pool(100, 150, 100, SlippageMode::OutputOnly);
        let fd = fd_marginal_price(&Uamm, &above, &req(int(1)), &eps).unwrap();
        assert_eq!(fd, int(1));

        let below = pool(100, 50, 100, SlippageMode::OutputOnly);
        let fd = fd_marginal_price(&Uamm, &below, &req(int(1)), &eps).unwrap();
        assert!((fd - ratio(1, 4)).abs() < pow10_neg(9));

        let knot = pool(100, 100, 100, SlippageMode::OutputOnly);
        let near = raw_state(
            &[(token(0), int(100)), (token(1), int(100) + pow10_neg(9))],
            &[(token(0), Price::from_ratio(1, 1)), (token(1), Price::from_ratio(1, 1))],
            int(200),
            int(100),
            SlippageMode::OutputOnly,
        );
        assert!(fd_marginal_price(&Uamm, &knot, &req(int(1)), &eps).is_ok());
        assert!(matches!(
            fd_marginal_price(&Uamm, &near, &req(int(1)), &eps),
            Err(Error::BranchStraddle)
        ));
        let (p, used) = fd_marginal_price_retrying(&Uamm, &near, &req(int(1)), &eps, 4).unwrap();
        assert!(used < eps);
        assert_eq!(p, int(1));
    }

    #[test]
    fn marginal_price_matches_engine() {
        for mode in [SlippageMode::OutputOnly, SlippageMode::InputAndOutput] {
            for (r_in, r_out) in [(100, 50), (200, 150), (50, 50), (200, 40)] {
                let s = pool(r_in, r_out, 100, mode);
                assert_eq!(
                    marginal_price(&s, &req(int(1))).unwrap(),
                    Uamm.spontaneous_price(&s, &req(int(1))).unwrap()
                );
            }
        }
    }
}
