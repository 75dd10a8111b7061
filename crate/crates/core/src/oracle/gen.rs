//! Seeded generators of pool states and trades for the property checks.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::liquidity::Basket;
use crate::num::{int, ratio, Price, Quantity, Rational};
use crate::state::{PoolState, PriceMap, SlippageMode, TokenId};
use crate::swap::SwapRequest;

pub const PRICE_GRID: [(i64, i64); 9] = [
    (1, 4),
    (1, 3),
    (1, 2),
    (2, 3),
    (1, 1),
    (3, 2),
    (2, 1),
    (3, 1),
    (5, 1),
];

const DENOMS: [i64; 6] = [1, 2, 3, 4, 5, 8];

/// Deterministic per-case generator, independent of scheduling.
pub fn case_rng(seed: u64, salt: u64, index: usize) -> ChaCha8Rng {
    let mixed = seed
        ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Stable salt from a property name.
pub fn salt(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Positive rational `n / d` with `n ∈ [1, num_max]`.
pub fn positive(rng: &mut impl Rng, num_max: i64) -> Rational {
    let n = rng.random_range(1..=num_max);
    let d = DENOMS[rng.random_range(0..DENOMS.len())];
    ratio(n, d)
}

/// Rational uniformly drawn from `[lo, hi]` on a grid of step `1/den`.
pub fn in_range(rng: &mut impl Rng, lo: &Rational, hi: &Rational, den: i64) -> Rational {
    let lo_n = (lo * int(den)).floor().to_integer();
    let hi_n = (hi * int(den)).floor().to_integer();
    let lo_i: i64 = lo_n.try_into().unwrap_or(1);
    let hi_i: i64 = hi_n.try_into().unwrap_or(lo_i);
    let n = rng.random_range(lo_i.max(1)..=hi_i.max(lo_i.max(1)));
    ratio(n, den)
}

/// `k / den` with `k` uniform in `[lo, hi]`.
pub fn ratio_of(rng: &mut impl Rng, lo: i64, hi: i64, den: i64) -> Rational {
    ratio(rng.random_range(lo..=hi), den)
}

pub fn grid_price(rng: &mut impl Rng) -> Price {
    let (n, d) = PRICE_GRID[rng.random_range(0..PRICE_GRID.len())];
    Price::new(ratio(n, d)).expect("grid prices are positive")
}

pub fn token(i: usize) -> TokenId {
    TokenId::new(format!("T{i}"))
}

/// Builds a state field by field.
pub fn raw_state(
    reserves: &[(TokenId, Rational)],
    prices: &[(TokenId, Price)],
    total_supply: Rational,
    target: Rational,
    mode: SlippageMode,
) -> PoolState {
    let tokens: Vec<TokenId> = reserves.iter().map(|(t, _)| t.clone()).collect();
    let reserves: BTreeMap<TokenId, Quantity> = reserves
        .iter()
        .map(|(t, r)| (t.clone(), Quantity::new(r.clone()).unwrap()))
        .collect();
    let fair_prices: PriceMap = prices.iter().cloned().collect();
    let mut s = PoolState::genesis(&tokens, &fair_prices, &reserves, mode).expect("valid raw state");
    s.total_supply = Quantity::new(total_supply).unwrap();
    s.target_balance = Quantity::new(target).unwrap();
    s
}

/// Reserve-to-target ratio: a fifth of draws sit exactly on the target.
fn reserve_factor(rng: &mut impl Rng) -> Rational {
    if rng.random_bool(0.2) {
        int(1)
    } else {
        in_range(rng, &ratio(1, 10), &int(5), 20)
    }
}

/// A two-token pool `T0 → T1` and a trade. About a tenth of the trades are
/// adversarial, with fair-rate size far beyond the output reserve.
pub fn swap_case(rng: &mut impl Rng, mode: SlippageMode) -> (PoolState, SwapRequest) {
    let (tin, tout) = (token(0), token(1));
    let f_in = grid_price(rng);
    let f_out = grid_price(rng);
    let rho = f_in.value() / f_out.value();
    let tb = positive(rng, 500);
    let r_in = &tb * reserve_factor(rng);
    let r_out = &tb * reserve_factor(rng);
    let w = if rng.random_bool(0.1) {
        in_range(rng, &int(10), &int(10_000), 1)
    } else {
        in_range(rng, &ratio(1, 1000), &int(3), 1000)
    };
    let d = &w * &r_out / &rho;
    let tv = &r_in * f_in.value() + &r_out * f_out.value();
    let state = raw_state(
        &[(tin.clone(), r_in), (tout.clone(), r_out)],
        &[(tin.clone(), f_in), (tout.clone(), f_out)],
        tv,
        tb,
        mode,
    );
    let req = SwapRequest::new(tin, tout, Quantity::new(d).unwrap());
    (state, req)
}

/// A pool of `k` tokens whose prices moved after genesis (so `TS ≠ TV`).
pub fn liquidity_state(rng: &mut impl Rng, k: usize) -> PoolState {
    let reserves: Vec<(TokenId, Rational)> =
        (0..k).map(|i| (token(i), positive(rng, 300))).collect();
    let opening: Vec<(TokenId, Price)> = (0..k).map(|i| (token(i), grid_price(rng))).collect();
    let later: Vec<(TokenId, Price)> = (0..k).map(|i| (token(i), grid_price(rng))).collect();
    let value: Rational = reserves
        .iter()
        .zip(&opening)
        .map(|((_, r), (_, p))| r * p.value())
        .sum();
    raw_state(&reserves, &later, value.clone(), value, SlippageMode::OutputOnly)
}

/// Random basket over the pool tokens; entries are zero with probability 1/4.
pub fn basket(rng: &mut impl Rng, state: &PoolState) -> Basket {
    let mut b = Basket::new();
    for t in state.tokens() {
        let q = if rng.random_bool(0.25) {
            Rational::zero()
        } else {
            positive(rng, 100)
        };
        b = b.with(t.clone(), Quantity::new(q).unwrap());
    }
    if b.amounts().values().all(|q| q.is_zero()) {
        let t = &state.tokens()[rng.random_range(0..state.tokens().len())];
        b = b.with(t.clone(), Quantity::new(positive(rng, 100)).unwrap());
    }
    b
}
