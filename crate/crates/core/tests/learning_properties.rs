use edgecache::env::{sample_slot, two_point_model, CatalogFile};
use edgecache::learning::{q_learning_step, ExplorationSchedule, NextSlot, QEstimate};
use edgecache::pricing::{
    augment_prices, dual_update_capacity, dual_update_stability, net_inflow, project_c4,
    Candidate, DualState,
};
use edgecache::rng::stream;
use edgecache::{feasible_actions, ActionPair, PriceSample, SlotState};
use proptest::prelude::*;

fn state_strategy() -> impl Strategy<Value = SlotState> {
    (0..4usize).prop_map(SlotState::from_index)
}

fn action_strategy() -> impl Strategy<Value = ActionPair> {
    (0..4usize).prop_map(|i| ActionPair::new(i & 2 != 0, i & 1 != 0))
}

/// Snapshot of every feasible factor, in a fixed order.
fn factors(est: &QEstimate) -> Vec<f64> {
    SlotState::ALL
        .iter()
        .flat_map(|&s| feasible_actions(s).iter().map(move |&a| (s, a)))
        .map(|(s, a)| est.factor(s, a))
        .collect()
}

proptest! {
    #[test]
    fn one_factor_per_step(seed in 0u64..1000, steps in 1usize..200, eps in 0.0..1.0f64) {
        let mut rng = stream(seed, &[0]);
        let file = CatalogFile::single(
            0.5,
            two_point_model(3.0, 1.0).unwrap(),
            two_point_model(30.0, 5.0).unwrap(),
        )
        .unwrap();
        let mut est = QEstimate::new(0.3).unwrap();
        let mut cached = false;
        let (mut r, mut p) = sample_slot(&file, &mut rng);
        for _ in 0..steps {
            let (nr, np) = sample_slot(&file, &mut rng);
            let before = factors(&est);
            let s = SlotState::new(r, cached);
            let a = q_learning_step(&mut est, s, p, NextSlot { request: nr, prices: np }, 0.9, eps, &mut rng);
            let changed = before.iter().zip(factors(&est)).filter(|(x, y)| **x != *y).count();
            prop_assert!(changed <= 1);
            cached = a.cache;
            r = nr;
            p = np;
        }
    }

    #[test]
    fn iterates_stay_bounded(
        seed in 0u64..1000,
        pop in 0.0..=1.0f64,
        pmax in 1.0..100.0f64,
        g in 0.1..0.95f64,
        beta in 0.01..0.99f64,
    ) {
        let mut rng = stream(seed, &[1]);
        let file = CatalogFile::single(
            pop,
            two_point_model(pmax / 2.0, pmax / 2.0).unwrap(),
            two_point_model(pmax / 2.0, pmax / 2.0).unwrap(),
        )
        .unwrap();
        let bound = pmax * 2.0 / (1.0 - g);
        let mut est = QEstimate::new(beta).unwrap();
        let mut cached = false;
        let (mut r, mut p) = sample_slot(&file, &mut rng);
        for _ in 0..2000 {
            let (nr, np) = sample_slot(&file, &mut rng);
            let a = q_learning_step(&mut est, SlotState::new(r, cached), p, NextSlot { request: nr, prices: np }, g, 0.2, &mut rng);
            cached = a.cache;
            r = nr;
            p = np;
        }
        for q in factors(&est) {
            prop_assert!((0.0..=bound).contains(&q), "{q} outside [0, {bound}]");
        }
    }

    #[test]
    fn higher_multiplier_never_adds_caching(
        s in state_strategy(),
        entries in proptest::collection::vec(0.0..200.0f64, 13),
        rho in 0.0..20.0f64,
        lam in 0.0..60.0f64,
        size in 0.1..100.0f64,
        mu in 0.0..5.0f64,
        extra in 0.0..5.0f64,
    ) {
        let mut est = QEstimate::new(0.5).unwrap();
        let pairs = SlotState::ALL.iter().flat_map(|&st| feasible_actions(st).iter().map(move |&a| (st, a)));
        for ((st, a), q) in pairs.zip(entries) {
            est.set_factor(st, a, q).unwrap();
        }
        est.observe_prices(PriceSample::new(rho, lam));
        let raw = PriceSample::new(rho, lam);
        let low = est.greedy(s, augment_prices(raw, size, &DualState::with_multipliers(mu, 0.0, 1.0).unwrap()));
        let high = est.greedy(s, augment_prices(raw, size, &DualState::with_multipliers(mu + extra, 0.0, 1.0).unwrap()));
        prop_assert!(!(high.cache && !low.cache));
    }

    #[test]
    fn projection_respects_the_budget(
        files in proptest::collection::vec((state_strategy(), action_strategy(), -50.0..50.0f64, 0.01..100.0f64), 1..40),
        fraction in 0.0..1.0f64,
    ) {
        let candidates: Vec<Candidate> = files
            .iter()
            .filter(|(s, a, _, _)| edgecache::model::is_feasible(*s, *a))
            .map(|&(state, action, key, size)| Candidate { action, key, size, state })
            .collect();
        let total: f64 = candidates.iter().map(|c| c.size).sum();
        let cap = fraction * total;
        let out = project_c4(&candidates, cap);
        let sizes: Vec<f64> = candidates.iter().map(|c| c.size).collect();
        prop_assert!(edgecache::pricing::cached_volume(&out, &sizes) <= cap);
        for (c, a) in candidates.iter().zip(&out) {
            prop_assert!(edgecache::model::is_feasible(c.state, *a));
            prop_assert!(!a.cache || c.action.cache);
        }
    }

    #[test]
    fn multipliers_stay_nonnegative(
        mu in 0.0..10.0f64,
        zeta in 0.0..2.0f64,
        flows in proptest::collection::vec(-100.0..100.0f64, 1..50),
    ) {
        let mut d = DualState::with_multipliers(mu, 0.0, zeta).unwrap();
        for f in flows {
            d = dual_update_capacity(&d, 50.0 + f, 50.0);
            prop_assert!(d.mu_hat >= 0.0);
        }
    }
}

#[test]
fn stability_multiplier_counts_stored_bytes() {
    let mut rng = stream(5, &[0]);
    let sizes = [3.0, 1.5, 7.0, 0.25];
    let mut cached = [false; 4];
    let mut duals = DualState::new(1.0).unwrap();
    let mut stored = 0.0;
    for _ in 0..500 {
        let states: Vec<SlotState> = cached.iter().map(|&c| SlotState::new(false, c)).collect();
        let actions: Vec<ActionPair> = states
            .iter()
            .map(|&s| {
                let options = feasible_actions(s);
                options[rand::Rng::random_range(&mut rng, 0..options.len())]
            })
            .collect();
        assert_eq!(net_inflow(&actions, &states, &sizes), {
            let after: f64 = actions.iter().zip(&sizes).filter(|(a, _)| a.cache).map(|(_, s)| s).sum();
            let before: f64 = cached.iter().zip(&sizes).filter(|(c, _)| **c).map(|(_, s)| s).sum();
            after - before
        });
        duals = dual_update_stability(&duals, &actions, &states, &sizes);
        for (c, a) in cached.iter_mut().zip(&actions) {
            *c = a.cache;
        }
        stored = cached.iter().zip(&sizes).filter(|(c, _)| **c).map(|(_, s)| s).sum();
        assert!((duals.mu_hat - stored).abs() < 1e-9, "{} vs {stored}", duals.mu_hat);
    }
    assert!(stored >= 0.0);
}

#[test]
fn glie_visits_every_pair() {
    let file = CatalogFile::single(
        0.5,
        two_point_model(5.0, 1.0).unwrap(),
        two_point_model(20.0, 4.0).unwrap(),
    )
    .unwrap();
    let schedule = ExplorationSchedule::GlieInverseT { floor: 0.01 };
    let mut env = stream(9, &[1]);
    let mut explore = stream(9, &[2]);
    let mut est = QEstimate::new(0.1).unwrap();
    let mut cached = false;
    let (mut r, mut p) = sample_slot(&file, &mut env);
    for t in 1..=10_000u64 {
        let (nr, np) = sample_slot(&file, &mut env);
        let a = q_learning_step(
            &mut est,
            SlotState::new(r, cached),
            p,
            NextSlot { request: nr, prices: np },
            0.9,
            schedule.epsilon(t),
            &mut explore,
        );
        cached = a.cache;
        r = nr;
        p = np;
    }
    let mut pairs = 0;
    for s in SlotState::ALL {
        for &a in feasible_actions(s) {
            assert!(est.visits(s, a) > 0, "{s} {a} never visited");
            pairs += 1;
        }
    }
    assert_eq!(pairs, 13);
}
