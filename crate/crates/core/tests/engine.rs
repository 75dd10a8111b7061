use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uamm_core::num::{int, ratio};
use uamm_core::oracle::gen::raw_state;
use uamm_core::prelude::*;
use uamm_core::snapshot;

fn pool(prices: &[(u64, u64)], deposits: &[u64], mode: SlippageMode) -> PoolState {
    let tokens: Vec<TokenId> = (0..prices.len()).map(|i| TokenId::new(format!("T{i}"))).collect();
    Genesis::new(
        tokens.clone(),
        tokens
            .iter()
            .zip(prices)
            .map(|(t, &(n, d))| (t.clone(), Price::from_ratio(n, d)))
            .collect(),
        tokens
            .iter()
            .zip(deposits)
            .map(|(t, &q)| (t.clone(), Quantity::from_int(q)))
            .collect(),
        mode,
    )
    .build()
    .unwrap()
}

fn modes() -> impl Strategy<Value = SlippageMode> {
    prop_oneof![Just(SlippageMode::OutputOnly), Just(SlippageMode::InputAndOutput)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn swap_keeps_invariants(
        prices in prop::collection::vec((1u64..20, 1u64..20), 2..=3),
        deposits in prop::collection::vec(1u64..1000, 3),
        pre in 0u64..2000,
        amount in (1i64..5000, 1i64..50),
        mode in modes(),
    ) {
        let s = pool(&prices, &deposits, mode);
        let (t0, t1) = (TokenId::new("T0"), TokenId::new("T1"));
        // skew the pool first so every branch shows up
        let s = if pre > 0 { swap(&s, &SwapRequest::new("T1", "T0", Quantity::from_int(pre))).unwrap().0 } else { s };
        let d = Quantity::new(ratio(amount.0, amount.1)).unwrap();
        let (next, q) = swap(&s, &SwapRequest::new(t0.clone(), t1.clone(), d.clone())).unwrap();
        prop_assert!(q.amount_out.value() < s.reserve(&t1).unwrap().value());
        prop_assert_eq!(next.target_balance(), s.target_balance());
        prop_assert_eq!(next.total_supply(), s.total_supply());
        prop_assert_eq!(next.reserve(&t0).unwrap().value(), &(s.reserve(&t0).unwrap().value() + d.value()));
        if mode == SlippageMode::OutputOnly {
            prop_assert!(q.usx <= int(1));
            let p = spontaneous_price(&s, &t0, &t1).unwrap();
            prop_assert!(&q.fair_rate * &q.usx <= p && p <= q.fair_rate);
        }
        let json = snapshot::to_json(&next);
        prop_assert_eq!(snapshot::to_json(&snapshot::from_json(&json).unwrap()), json);
    }

    #[test]
    fn proportional_add_then_remove_is_identity(
        prices in prop::collection::vec((1u64..20, 1u64..20), 1..=3),
        deposits in prop::collection::vec(1u64..1000, 3),
        scale in (1i64..100, 1i64..100),
    ) {
        let s = pool(&prices, &deposits, SlippageMode::OutputOnly);
        let f = ratio(scale.0, scale.1);
        let b = Basket::from_map(
            s.reserves().iter().map(|(t, q)| (t.clone(), Quantity::new(q.value() * &f).unwrap())).collect(),
        );
        let (grown, shares) = add(&s, &b).unwrap();
        prop_assert_eq!(shares.value(), &(s.total_supply().value() * &f));
        let (back, out) = remove(&grown, &shares).unwrap();
        prop_assert_eq!(back.reserves(), s.reserves());
        prop_assert_eq!(back.target_balance(), s.target_balance());
        prop_assert_eq!(out, b);
    }
}

/// Reserves rounded up to a `10^-6` grid, so a long chain of swaps keeps
/// small operands.
fn on_grid(s: &PoolState) -> PoolState {
    let scale = int(1_000_000);
    let reserves: Vec<_> = s
        .reserves()
        .iter()
        .map(|(t, q)| (t.clone(), (q.value() * &scale).ceil() / &scale))
        .collect();
    let prices: Vec<_> = s.fair_prices().iter().map(|(t, p)| (t.clone(), p.clone())).collect();
    raw_state(
        &reserves,
        &prices,
        s.total_supply().value().clone(),
        s.target_balance().value().clone(),
        s.mode(),
    )
}

#[test]
fn a_thousand_swaps_never_deplete_the_pool() {
    for mode in [SlippageMode::OutputOnly, SlippageMode::InputAndOutput] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = pool(&[(1, 2), (1, 3), (1, 6)], &[100, 300, 600], mode);
        let tokens = s.tokens().to_vec();
        for i in 0..1000 {
            let a = rng.random_range(0..3);
            let b = (a + rng.random_range(1..3)) % 3;
            // up to ten times the whole output reserve at the fair rate
            let d = Quantity::from_int(rng.random_range(1..=10_000));
            let req = SwapRequest::new(tokens[a].clone(), tokens[b].clone(), d);
            let (next, q) = swap(&s, &req).unwrap();
            let before = s.reserve(&tokens[b]).unwrap();
            assert!(q.amount_out.value() < before.value(), "swap {i} drained {}", tokens[b]);
            assert!(next.reserves().values().all(|r| r.is_positive()));
            assert_eq!(next.target_balance(), s.target_balance());
            s = on_grid(&next);
        }
    }
}

#[test]
fn journal_replay_is_deterministic() {
    let g = Genesis::new(
        vec!["A".into(), "B".into()],
        [("A".into(), Price::from_ratio(1, 2)), ("B".into(), Price::from_ratio(1, 2))].into(),
        [("A".into(), Quantity::from_int(100)), ("B".into(), Quantity::from_int(100))].into(),
        SlippageMode::OutputOnly,
    );
    let mut m = Market::open(g, &AccountId::new("lp0")).unwrap();
    m.swap(SwapRequest::new("A", "B", Quantity::from_int(30)), 1).unwrap();
    m.set_prices([("A".into(), Price::from_ratio(3, 5)), ("B".into(), Price::from_ratio(2, 5))].into(), 2)
        .unwrap();
    let shares = m
        .add(&AccountId::new("lp1"), Basket::new().with("B", Quantity::from_int(20)), 3)
        .unwrap();
    m.swap(SwapRequest::new("B", "A", Quantity::from_int(15)), 4).unwrap();
    m.remove(&AccountId::new("lp1"), Quantity::new(shares.value() / int(2)).unwrap(), false, 5)
        .unwrap();

    let head = m.state().clone();
    let replayed = m.journal().replay().unwrap();
    assert_eq!(replayed, head);
    assert_eq!(snapshot::to_json(&m.journal().replay().unwrap()), snapshot::to_json(&head));
    assert_eq!(
        uamm_core::metrics::target_balance(m.journal()).unwrap(),
        head.target_balance().value().clone()
    );
    let book = m.book();
    assert_eq!(book.total_shares(), *head.total_supply());
    assert_eq!(book.total_value(&head), head.pool_value().value().clone());
    assert_eq!(book.total_invested(), head.target_balance().value().clone());
}
