use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::Error;
use crate::liquidity::{basket_value, split_base, Basket, SplitRule};
use crate::num::{int, pow10_neg, ratio, Price, Quantity, Rational};
use crate::state::{PoolState, SlippageMode, TokenId};
use crate::swap::{self, InputBranch, OutputBranch, SwapRequest};

use super::engine::Engine;
use super::gen::{self, in_range, positive, raw_state, swap_case, token};
use super::{ledger, reference};
use super::{combine, run_grid, run_seeded, OracleConfig, PropertyResult, Verdict};

/// Every property, in report order.
pub const PROPERTIES: &[&str] = &[
    "liquidity_additivity",
    "liquidity_reversibility",
    "basket_conversion",
    "swap_additivity",
    "additivity_divergence",
    "usx_mixing",
    "output_boundedness",
    "weak_reversibility",
    "homogeneity",
    "convergence",
    "price_ordering",
    "fd_spontaneous",
    "branch_continuity",
    "monotonicity",
    "reference_agreement",
    "ledger_consistency",
];

/// Runs one property. `None` when the configuration leaves it out:
/// `swap_additivity` and `additivity_divergence` are mutually exclusive.
pub fn property(name: &str, config: &OracleConfig, engine: &dyn Engine) -> Option<PropertyResult> {
    let output_only = config.mode == SlippageMode::OutputOnly;
    let n = config.cases(name);
    let seed = config.fuzz_seed;
    let mode = config.mode;
    let r = match name {
        "liquidity_additivity" => liquidity_additivity(engine, n, seed),
        "liquidity_reversibility" => liquidity_reversibility(engine, n, seed),
        "basket_conversion" => basket_conversion(n, seed),
        "swap_additivity" if config.expect_additivity_failure => return None,
        "swap_additivity" => swap_additivity(engine, n, seed, mode, &config.splits()),
        "additivity_divergence" if !config.expect_additivity_failure => return None,
        "additivity_divergence" => additivity_divergence(engine, n, seed, mode),
        "usx_mixing" if output_only => usx_mixing(engine, n, seed),
        "output_boundedness" => output_boundedness(engine, n, seed, mode),
        "weak_reversibility" if output_only => weak_reversibility(engine, n, seed),
        "homogeneity" => homogeneity(engine, n, seed, mode),
        "convergence" => convergence(engine, n, seed, mode),
        "price_ordering" if output_only => price_ordering(engine, n, seed),
        "fd_spontaneous" => fd_spontaneous(engine, n, seed, mode, &config.fd_epsilon),
        "branch_continuity" => branch_continuity(engine, n, seed),
        "monotonicity" => monotonicity(engine, n, seed, mode),
        "reference_agreement" => reference_agreement(engine, mode),
        "ledger_consistency" => ledger_consistency(n, seed),
        "usx_mixing" | "weak_reversibility" | "price_ordering" => {
            PropertyResult::not_applicable(name)
        }
        _ => return None,
    };
    Some(r)
}

fn describe(state: &PoolState, req: &SwapRequest) -> String {
    let field = |t: &TokenId| {
        format!(
            "{t}: R={} T={} f={}",
            state.reserve(t).map(|q| q.to_string()).unwrap_or_default(),
            state.pool_target(t).map(|q| q.to_string()).unwrap_or_default(),
            state.price(t).map(|p| p.value().to_string()).unwrap_or_default(),
        )
    };
    format!(
        "[{}; {}; d={} {}→{}; mode={}]",
        field(&req.token_in),
        field(&req.token_out),
        req.amount_in,
        req.token_in,
        req.token_out,
        state.mode().as_str()
    )
}

fn describe_pool(state: &PoolState) -> String {
    let reserves: Vec<String> = state
        .tokens()
        .iter()
        .map(|t| format!("{t}={}@{}", state.reserves()[t], state.fair_prices()[t].value()))
        .collect();
    format!(
        "[{} TS={} TB={}]",
        reserves.join(" "),
        state.total_supply(),
        state.target_balance()
    )
}

fn describe_basket(b: &Basket) -> String {
    let parts: Vec<String> = b.amounts().iter().map(|(t, q)| format!("{t}={q}")).collect();
    format!("{{{}}}", parts.join(" "))
}

fn with_amount(req: &SwapRequest, amount: Rational) -> SwapRequest {
    SwapRequest::new(
        req.token_in.clone(),
        req.token_out.clone(),
        Quantity::new(amount).expect("nonnegative amount"),
    )
}

fn fail(msg: impl Into<String>) -> Verdict {
    Verdict::Fail(msg.into())
}

macro_rules! attempt {
    ($e:expr, $ctx:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail(format!("{}: {err}", $ctx)),
        }
    };
}

fn product(sets: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    sets.iter().fold(vec![Vec::new()], |acc, set| {
        acc.iter()
            .flat_map(|prefix| {
                set.iter().map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x.clone());
                    v
                })
            })
            .collect()
    })
}

struct LiquidityCase {
    state: PoolState,
    b: Basket,
    b2: Basket,
    u: Rational,
    v: Rational,
}

fn liquidity_lattice() -> Vec<LiquidityCase> {
    let wide = |xs: &[(i64, i64)]| xs.iter().map(|&(n, d)| ratio(n, d)).collect::<Vec<_>>();
    let mut out = Vec::new();
    for k in 1..=3usize {
        let (prices, reserves, entries) = if k < 3 {
            (
                wide(&[(1, 2), (1, 1), (2, 1)]),
                wide(&[(1, 1), (2, 1), (3, 1)]),
                wide(&[(0, 1), (1, 1), (5, 2)]),
            )
        } else {
            (wide(&[(1, 2), (2, 1)]), wide(&[(1, 1), (3, 1)]), wide(&[(0, 1), (1, 1)]))
        };
        let tokens: Vec<TokenId> = (0..k).map(token).collect();
        let price_sets = product(&vec![prices; k]);
        let reserve_sets = product(&vec![reserves; k]);
        let baskets: Vec<Basket> = product(&vec![entries; k])
            .into_iter()
            .filter(|amounts| amounts.iter().any(|a| !a.is_zero()))
            .map(|amounts| {
                tokens
                    .iter()
                    .zip(amounts)
                    .fold(Basket::new(), |b, (t, a)| b.with(t.clone(), Quantity::new(a).unwrap()))
            })
            .collect();
        for p in &price_sets {
            for r in &reserve_sets {
                let total: Rational = r.iter().sum();
                let state = raw_state(
                    &tokens.iter().cloned().zip(r.iter().cloned()).collect::<Vec<_>>(),
                    &tokens
                        .iter()
                        .cloned()
                        .zip(p.iter().map(|x| Price::new(x.clone()).unwrap()))
                        .collect::<Vec<_>>(),
                    total.clone(),
                    total,
                    SlippageMode::OutputOnly,
                );
                for b in &baskets {
                    for b2 in &baskets {
                        out.push(LiquidityCase {
                            state: state.clone(),
                            b: b.clone(),
                            b2: b2.clone(),
                            u: ratio(1, 5),
                            v: ratio(1, 6),
                        });
                    }
                }
            }
        }
    }
    out
}

fn random_liquidity_case(rng: &mut impl Rng) -> LiquidityCase {
    let k = rng.random_range(1..=3);
    let state = gen::liquidity_state(rng, k);
    let b = gen::basket(rng, &state);
    let b2 = gen::basket(rng, &state);
    let u = ratio(rng.random_range(1..=30), 100);
    let v = ratio(rng.random_range(1..=19), 100);
    LiquidityCase { state, b, b2, u, v }
}

fn is_exhausted(e: &Error) -> bool {
    matches!(e, Error::TargetBalanceExhausted { .. })
}

fn check_liquidity_additivity(engine: &dyn Engine, c: &LiquidityCase) -> Verdict {
    let prices = c.state.fair_prices();
    let zero = |b: &Basket| basket_value(b, prices).map(|v| v.is_zero()).unwrap_or(true);
    if zero(&c.b) || zero(&c.b2) {
        return Verdict::Skip;
    }
    let ctx = || {
        format!(
            "{} b={} b'={}",
            describe_pool(&c.state),
            describe_basket(&c.b),
            describe_basket(&c.b2)
        )
    };
    let (s1, x1) = attempt!(engine.add(&c.state, &c.b), ctx());
    let (s2, x2) = attempt!(engine.add(&s1, &c.b2), ctx());
    let (s12, x12) = attempt!(engine.add(&c.state, &c.b.merged(&c.b2)), ctx());
    if &x1 + &x2 != x12 || s2 != s12 {
        return fail(format!("add(b)+add(b') ≠ add(b+b') on {}", ctx()));
    }

    let ts = c.state.total_supply();
    let sh = Quantity::new(ts.value() * &c.u).unwrap();
    let sh2 = Quantity::new(ts.value() * &c.v).unwrap();
    let split = engine
        .remove(&c.state, &sh)
        .and_then(|(a, ba)| engine.remove(&a, &sh2).map(|(b, bb)| (b, ba.merged(&bb))));
    let joint = engine.remove(&c.state, &(&sh + &sh2));
    match (split, joint) {
        (Ok((sa, ba)), Ok((sb, bb))) => {
            if sa != sb || ba.normalized() != bb.normalized() {
                return fail(format!(
                    "remove(s)+remove(s') ≠ remove(s+s') with s={sh} s'={sh2} on {}",
                    describe_pool(&c.state)
                ));
            }
        }
        (Err(e), _) | (_, Err(e)) if is_exhausted(&e) => return Verdict::Skip,
        (Err(e), _) | (_, Err(e)) => return fail(format!("remove failed: {e} on {}", ctx())),
    }
    Verdict::Pass
}

fn liquidity_additivity(engine: &dyn Engine, n: usize, seed: u64) -> PropertyResult {
    let name = "liquidity_additivity";
    let grid = run_grid(name, &liquidity_lattice(), |c| check_liquidity_additivity(engine, c));
    let fuzz = run_seeded(name, n, seed, |rng| {
        check_liquidity_additivity(engine, &random_liquidity_case(rng))
    });
    combine(name, &[grid, fuzz])
}

fn same_basket(a: &Basket, b: &Basket) -> bool {
    a.normalized() == b.normalized()
}

fn check_liquidity_reversibility(engine: &dyn Engine, c: &LiquidityCase) -> Verdict {
    let state = &c.state;
    let prices = state.fair_prices();
    let value = attempt!(basket_value(&c.b, prices), "basket value");
    if value.is_zero() {
        return Verdict::Skip;
    }
    let ctx = || format!("{} b={}", describe_pool(state), describe_basket(&c.b));

    // remove ∘ add on a reserve-proportional basket is the identity
    let pb = attempt!(split_base(&value, state, SplitRule::ProportionalToReserves), ctx());
    let (s1, minted) = attempt!(engine.add(state, &pb), ctx());
    match engine.remove(&s1, &minted) {
        Ok((s2, back)) => {
            if !same_basket(&back, &pb) || &s2 != state {
                return fail(format!(
                    "remove(add(b)) returned {} for proportional b={} on {}",
                    describe_basket(&back),
                    describe_basket(&pb),
                    describe_pool(state)
                ));
            }
        }
        Err(e) if is_exhausted(&e) => return Verdict::Skip,
        Err(e) => return fail(format!("{e} on {}", ctx())),
    }

    // arbitrary basket: equal value, supply and target restored
    let (s1, minted) = attempt!(engine.add(state, &c.b), ctx());
    match engine.remove(&s1, &minted) {
        Ok((s2, back)) => {
            let back_value = attempt!(basket_value(&back, prices), ctx());
            if back_value != value
                || s2.total_supply() != state.total_supply()
                || s2.target_balance() != state.target_balance()
                || s2.pool_value() != state.pool_value()
            {
                return fail(format!(
                    "remove(add(b)) value {back_value} ≠ {value} on {}",
                    ctx()
                ));
            }
        }
        Err(e) if is_exhausted(&e) => return Verdict::Skip,
        Err(e) => return fail(format!("{e} on {}", ctx())),
    }

    // add ∘ remove mints back exactly the burned shares
    let sh = Quantity::new(state.total_supply().value() * &c.u).unwrap();
    match engine.remove(state, &sh) {
        Ok((s1, basket)) => {
            let (s2, again) = attempt!(engine.add(&s1, &basket), ctx());
            if again != sh || &s2 != state {
                return fail(format!(
                    "add(remove(s)) minted {again} for s={sh} on {}",
                    describe_pool(state)
                ));
            }
        }
        Err(e) if is_exhausted(&e) => return Verdict::Skip,
        Err(e) => return fail(format!("{e} on {}", ctx())),
    }
    Verdict::Pass
}

fn liquidity_reversibility(engine: &dyn Engine, n: usize, seed: u64) -> PropertyResult {
    let name = "liquidity_reversibility";
    let grid = run_grid(name, &liquidity_lattice(), |c| check_liquidity_reversibility(engine, c));
    let fuzz = run_seeded(name, n, seed, |rng| {
        check_liquidity_reversibility(engine, &random_liquidity_case(rng))
    });
    combine(name, &[grid, fuzz])
}

fn basket_conversion(n: usize, seed: u64) -> PropertyResult {
    run_seeded("basket_conversion", n, seed, |rng| {
        let k = rng.random_range(1..=3);
        let state = gen::liquidity_state(rng, k);
        let amount = Quantity::new(positive(rng, 1000)).unwrap();
        for rule in [SplitRule::EqualByPrice, SplitRule::ProportionalToReserves] {
            let b = attempt!(split_base(&amount, &state, rule), "split");
            let v = attempt!(basket_value(&b, state.fair_prices()), "value");
            if v != amount {
                return fail(format!(
                    "{rule:?} split of {amount} is worth {v} on {}",
                    describe_pool(&state)
                ));
            }
        }
        Verdict::Pass
    })
}

fn swap_additivity(
    engine: &dyn Engine,
    n: usize,
    seed: u64,
    mode: SlippageMode,
    splits: &[usize],
) -> PropertyResult {
    run_seeded("swap_additivity", n, seed, |rng| {
        let (state, req) = swap_case(rng, mode);
        let (single_state, single) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        for &k in splits {
            let (total, fin) = attempt!(
                reference::micro_swap_compose(engine, &state, &req, k),
                describe(&state, &req)
            );
            if total != single.amount_out || fin != single_state {
                return fail(format!(
                    "{k} micro-swaps give {total}, one swap gives {} on {}",
                    single.amount_out,
                    describe(&state, &req)
                ));
            }
        }
        Verdict::Pass
    })
}

fn additivity_divergence(engine: &dyn Engine, n: usize, seed: u64, mode: SlippageMode) -> PropertyResult {
    let name = "additivity_divergence";
    let active = std::sync::atomic::AtomicU64::new(0);
    let mut r = run_seeded(name, n, seed, |rng| {
        let (state, req) = swap_case(rng, mode);
        let d = req.amount_in.value();
        let d1 = d * ratio(rng.random_range(1..=99), 100);
        let d2 = d - &d1;
        let first = with_amount(&req, d1.clone());
        let (mid, q1) = attempt!(engine.swap(&state, &first), describe(&state, &req));
        let (_, q2) = attempt!(engine.swap(&mid, &with_amount(&req, d2)), describe(&state, &req));
        let (_, q) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        let r_in = state.reserve(&req.token_in).unwrap().value();
        let t_in = state.pool_target(&req.token_in).unwrap().value();
        let d1_eff = &d1 * (Rational::one() - state.fee());
        let is_active = mode == SlippageMode::InputAndOutput && &(r_in + &d1_eff) > t_in;
        let diverged = &q1.amount_out + &q2.amount_out != q.amount_out;
        if is_active {
            active.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        match (is_active, diverged) {
            (true, false) => fail(format!(
                "input slippage active but two legs match one swap on {}",
                describe(&state, &req)
            )),
            (false, true) => fail(format!(
                "input slippage inactive but two legs diverge on {}",
                describe(&state, &req)
            )),
            _ => Verdict::Pass,
        }
    });
    if active.into_inner() == 0 && n > 0 {
        r.failures += 1;
        r.first_counterexample
            .get_or_insert_with(|| "no case exercised input slippage".into());
    }
    r
}

fn usx_mixing(engine: &dyn Engine, n: usize, seed: u64) -> PropertyResult {
    run_seeded("usx_mixing", n, seed, |rng| {
        let (state, req) = swap_case(rng, SlippageMode::OutputOnly);
        let d = req.amount_in.value().clone();
        let d1 = &d * ratio(rng.random_range(1..=99), 100);
        let d2 = &d - &d1;
        let (mid, q1) = attempt!(engine.swap(&state, &with_amount(&req, d1.clone())), describe(&state, &req));
        let (_, q2) = attempt!(engine.swap(&mid, &with_amount(&req, d2.clone())), describe(&state, &req));
        let (_, q) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        let mixed = (&q1.usx * &d1 + &q2.usx * &d2) / &d;
        if mixed != q.usx {
            return fail(format!("USX {} ≠ mixture {mixed} on {}", q.usx, describe(&state, &req)));
        }
        Verdict::Pass
    })
}

fn output_boundedness(engine: &dyn Engine, n: usize, seed: u64, mode: SlippageMode) -> PropertyResult {
    run_seeded("output_boundedness", n, seed, |rng| {
        let (state, req) = swap_case(rng, mode);
        let (_, q) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        let r_out = state.reserve(&req.token_out).unwrap();
        if q.amount_out.value().is_negative() || &q.amount_out >= r_out {
            return fail(format!("output {} outside [0, {r_out}) on {}", q.amount_out, describe(&state, &req)));
        }
        Verdict::Pass
    })
}

fn weak_reversibility(engine: &dyn Engine, n: usize, seed: u64) -> PropertyResult {
    run_seeded("weak_reversibility", n, seed, |rng| {
        let (state, req) = swap_case(rng, SlippageMode::OutputOnly);
        let (mid, q1) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        let back = req.reversed(q1.amount_out.clone());
        let (_, q2) = attempt!(engine.swap(&mid, &back), describe(&state, &req));
        let both_fair = q1.branch == OutputBranch::AboveTarget && q2.branch == OutputBranch::AboveTarget;
        let returned = &q2.amount_out;
        if returned > &req.amount_in {
            return fail(format!("round trip returned {returned} > {} on {}", req.amount_in, describe(&state, &req)));
        }
        if (returned == &req.amount_in) != both_fair {
            return fail(format!(
                "round trip returned {returned} with branches {} / {} on {}",
                q1.branch.as_str(),
                q2.branch.as_str(),
                describe(&state, &req)
            ));
        }
        Verdict::Pass
    })
}

fn homogeneity(engine: &dyn Engine, n: usize, seed: u64, mode: SlippageMode) -> PropertyResult {
    let factors = [ratio(1, 3), ratio(1, 2), int(2), int(7)];
    run_seeded("homogeneity", n, seed, |rng| {
        let (state, req) = swap_case(rng, mode);
        let (_, q) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        for a in &factors {
            let scaled = attempt!(state.scaled(a), "scale");
            let sreq = with_amount(&req, req.amount_in.value() * a);
            let (_, qs) = attempt!(engine.swap(&scaled, &sreq), describe(&scaled, &sreq));
            if qs.usx != q.usx {
                return fail(format!("USX {} at scale {a} vs {} on {}", qs.usx, q.usx, describe(&state, &req)));
            }
        }
        Verdict::Pass
    })
}

fn input_straddle(state: &PoolState, req: &SwapRequest, amount: &Rational) -> bool {
    if state.mode() != SlippageMode::InputAndOutput {
        return false;
    }
    let r = state.reserve(&req.token_in).unwrap().value();
    let t = state.pool_target(&req.token_in).unwrap().value();
    let d = amount * (Rational::one() - state.fee());
    r < t && t < &(r + d)
}

fn convergence(engine: &dyn Engine, n: usize, seed: u64, mode: SlippageMode) -> PropertyResult {
    let epsilons = [pow10_neg(6), pow10_neg(9)];
    run_seeded("convergence", n, seed, |rng| {
        let (state, req) = swap_case(rng, mode);
        let p = attempt!(engine.spontaneous_price(&state, &req), describe(&state, &req));
        let reference_p = attempt!(reference::marginal_price(&state, &req), "reference");
        if p != reference_p {
            return fail(format!("spontaneous price {p} ≠ reference {reference_p} on {}", describe(&state, &req)));
        }
        let rho = attempt!(swap::fair_rate(&state, &req.token_in, &req.token_out), "rate");
        let mut skipped = true;
        for eps in &epsilons {
            if input_straddle(&state, &req, eps) {
                continue;
            }
            skipped = false;
            let probe = with_amount(&req, eps.clone());
            let (_, q) = attempt!(engine.swap(&state, &probe), describe(&state, &probe));
            let c = attempt!(reference::convergence_constant(&state, &probe, eps), "constant");
            let gap = (&rho * &q.usx - &p).abs();
            if gap > &c * eps {
                return fail(format!("|ρ·USX(ε) − p| = {gap} > C·ε with C={c}, ε={eps} on {}", describe(&state, &req)));
            }
        }
        if skipped {
            Verdict::Skip
        } else {
            Verdict::Pass
        }
    })
}

fn price_ordering(engine: &dyn Engine, n: usize, seed: u64) -> PropertyResult {
    run_seeded("price_ordering", n, seed, |rng| {
        let (state, req) = swap_case(rng, SlippageMode::OutputOnly);
        let p = attempt!(engine.spontaneous_price(&state, &req), describe(&state, &req));
        let (_, q) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        let rho = &q.fair_rate;
        let realized = rho * &q.usx;
        if realized > p || &p > rho {
            return fail(format!("ordering ρ·USX={realized} ≤ p={p} ≤ ρ={rho} broken on {}", describe(&state, &req)));
        }
        Verdict::Pass
    })
}

fn fd_spontaneous(
    engine: &dyn Engine,
    n: usize,
    seed: u64,
    mode: SlippageMode,
    epsilon: &Rational,
) -> PropertyResult {
    let tolerance = pow10_neg(6);
    run_seeded("fd_spontaneous", n, seed, |rng| {
        let (state, req) = swap_case(rng, mode);
        let p = attempt!(engine.spontaneous_price(&state, &req), describe(&state, &req));
        let (fd, eps) = match reference::fd_marginal_price_retrying(engine, &state, &req, epsilon, 40) {
            Ok(v) => v,
            Err(Error::BranchStraddle) => return Verdict::Skip,
            Err(e) => return fail(format!("{e} on {}", describe(&state, &req))),
        };
        let width = &eps * int(2);
        let c = attempt!(
            reference::convergence_constant(&state, &with_amount(&req, width.clone()), &width),
            "constant"
        );
        let gap = (&fd - &p).abs();
        if gap > &tolerance * &p || gap > int(10) * &eps * c {
            return fail(format!("finite difference {fd} vs closed form {p} at ε={eps} on {}", describe(&state, &req)));
        }
        Verdict::Pass
    })
}

fn branch_continuity(engine: &dyn Engine, n: usize, seed: u64) -> PropertyResult {
    use swap::{input_branch_value as fin, output_branch_value as fout};
    run_seeded("branch_continuity", n, seed, |rng| {
        let r = positive(rng, 1000);
        let low = &r * in_range(rng, &ratio(1, 100), &ratio(99, 100), 100);
        let high = &r * in_range(rng, &ratio(101, 100), &int(10), 100);
        let amount = positive(rng, 1000);
        let checks = [
            // output: fair side meets crossing at Δ = R − T
            (fout(OutputBranch::AboveTarget, &(&r - &low), &r, &low),
             fout(OutputBranch::Crossing, &(&r - &low), &r, &low), "output above/crossing"),
            // output: crossing meets below at T = R
            (fout(OutputBranch::Crossing, &amount, &r, &r),
             fout(OutputBranch::BelowTarget, &amount, &r, &r), "output crossing/below"),
            // input: neutral meets crossing at d = T − R
            (fin(InputBranch::Neutral, &(&high - &r), &r, &high),
             fin(InputBranch::Crossing, &(&high - &r), &r, &high), "input neutral/crossing"),
            // input: crossing meets slipped at T = R
            (fin(InputBranch::Crossing, &amount, &r, &r),
             fin(InputBranch::Slipped, &amount, &r, &r), "input crossing/slipped"),
        ];
        for (a, b, knot) in checks {
            if a != b {
                return fail(format!("{knot} knot: {a} ≠ {b} (R={r} T_low={low} T_high={high} amount={amount})"));
            }
        }
        // the engine at the knot agrees with the reference route
        let (tin, tout) = (token(0), token(1));
        let one = Price::new(int(1)).unwrap();
        let state = raw_state(
            &[(tin.clone(), r.clone()), (tout.clone(), r.clone())],
            &[(tin.clone(), one.clone()), (tout.clone(), one)],
            &r * int(2),
            low.clone(),
            SlippageMode::OutputOnly,
        );
        let req = SwapRequest::new(tin, tout, Quantity::new(&r - &low).unwrap());
        let (_, q) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        let expect = attempt!(reference::output(&state, &req), "reference");
        if q.amount_out.value() != &expect {
            return fail(format!("engine {} vs reference {expect} at knot on {}", q.amount_out, describe(&state, &req)));
        }
        Verdict::Pass
    })
}

fn monotonicity(engine: &dyn Engine, n: usize, seed: u64, mode: SlippageMode) -> PropertyResult {
    run_seeded("monotonicity", n, seed, |rng| {
        let (state, req) = swap_case(rng, mode);
        let bigger = with_amount(&req, req.amount_in.value() * in_range(rng, &ratio(101, 100), &int(4), 100));
        let (_, a) = attempt!(engine.swap(&state, &req), describe(&state, &req));
        let (_, b) = attempt!(engine.swap(&state, &bigger), describe(&state, &bigger));
        if a.amount_out >= b.amount_out {
            return fail(format!("output {} not below {} for a larger trade on {}", a.amount_out, b.amount_out, describe(&state, &req)));
        }
        if mode == SlippageMode::OutputOnly && a.usx < b.usx {
            return fail(format!("USX rose from {} to {} on {}", a.usx, b.usx, describe(&state, &req)));
        }
        Verdict::Pass
    })
}

struct LatticePoint {
    state: PoolState,
    req: SwapRequest,
}

fn reference_lattice(mode: SlippageMode) -> Vec<LatticePoint> {
    let amounts = [ratio(1, 2), int(1), int(2), int(5), int(10)];
    let rates = [ratio(1, 2), int(1), int(2)];
    let in_reserves: Vec<i64> = match mode {
        SlippageMode::OutputOnly => vec![5],
        SlippageMode::InputAndOutput => (1..=10).collect(),
    };
    let (tin, tout) = (token(0), token(1));
    let mut out = Vec::new();
    for rho in &rates {
        for r_in in &in_reserves {
            for r_out in 1..=10 {
                for tb in 1..=10 {
                    let state = raw_state(
                        &[(tin.clone(), int(*r_in)), (tout.clone(), int(r_out))],
                        &[
                            (tin.clone(), Price::new(rho.clone()).unwrap()),
                            (tout.clone(), Price::new(int(1)).unwrap()),
                        ],
                        rho * int(*r_in) + int(r_out),
                        int(tb),
                        mode,
                    );
                    for d in &amounts {
                        out.push(LatticePoint {
                            state: state.clone(),
                            req: SwapRequest::new(tin.clone(), tout.clone(), Quantity::new(d.clone()).unwrap()),
                        });
                    }
                }
            }
        }
    }
    out
}

fn reference_agreement(engine: &dyn Engine, mode: SlippageMode) -> PropertyResult {
    run_grid("reference_agreement", &reference_lattice(mode), |pt| {
        let (state, req) = (&pt.state, &pt.req);
        let (_, q) = attempt!(engine.swap(state, req), describe(state, req));
        let expect = attempt!(reference::output(state, req), "reference");
        if q.amount_out.value() != &expect {
            return fail(format!("engine {} vs reference {expect} on {}", q.amount_out, describe(state, req)));
        }
        let p = attempt!(engine.spontaneous_price(state, req), describe(state, req));
        let expect_p = attempt!(reference::marginal_price(state, req), "reference");
        if p != expect_p {
            return fail(format!("spontaneous {p} vs reference {expect_p} on {}", describe(state, req)));
        }
        Verdict::Pass
    })
}

fn ledger_consistency(events: usize, seed: u64) -> PropertyResult {
    ledger::dense_logs(events, seed)
}
