use cachenet::config::{ErrorSchedule, RateMode};
use cachenet::engine::{run_with, Scenario, SlotTrace};
use cachenet::{run, SimConfig};
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = SimConfig> {
    (
        1usize..8,
        prop::sample::select(vec![1usize, 4, 9]),
        2usize..5,
        0usize..6,
        prop::sample::select(vec![1.0, 100.0, 10_000.0]),
        0.0f64..0.6,
        0.0f64..0.6,
        any::<bool>(),
        any::<bool>(),
        0u64..1000,
    )
        .prop_map(
            |(users, aps, ft, d, v, et, es, tv, shared, seed)| SimConfig {
                users,
                aps,
                file_types: ft,
                cache_size: ft - 1,
                max_users_per_ap: users.min(2),
                window: d,
                v,
                e_type: et,
                e_size: es,
                error_schedule: if tv {
                    ErrorSchedule::TimeVarying
                } else {
                    ErrorSchedule::Fixed
                },
                error_c: 4.0,
                rate_mode: if shared {
                    RateMode::Shared
                } else {
                    RateMode::FullRate
                },
                horizon: 150,
                n_fading_samples: 4,
                seed,
                ..SimConfig::default()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn per_slot_invariants(cfg in arb_config()) {
        let scenario = Scenario::new(&cfg).unwrap();
        let mut failures: Vec<String> = Vec::new();
        let mut obs = |s: &SlotTrace<'_>| {
            for (u, (q, o)) in s.after.iter().zip(s.outcomes).enumerate() {
                // Service never exceeds the granted rate.
                if o.consumed() > o.rate * (1.0 + 1e-12) + 1e-12 {
                    failures.push(format!("slot {} user {u}: consumed {} > rate {}", s.slot, o.consumed(), o.rate));
                }
                // Queue contents match the per-type ledger.
                let held: f64 = q.totals().iter().sum();
                let balance: f64 = q.ledger().iter().map(|l| l.balance()).sum();
                if (held - balance).abs() > 1e-7 * held.max(1.0) {
                    failures.push(format!("slot {} user {u}: held {held} vs ledger {balance}", s.slot));
                }
                if q.backlog().iter().chain(q.priority()).any(|&x| x < 0.0) {
                    failures.push(format!("slot {} user {u}: negative queue", s.slot));
                }
                if let Some(h) = s.association.assignment[u] {
                    if o.rate > s.capacities.get(u, h) * (1.0 + 1e-12) {
                        failures.push(format!("slot {} user {u}: rate above capacity", s.slot));
                    }
                }
            }
        };
        let r = run_with(&cfg, &scenario, Some(&mut obs)).unwrap();
        prop_assert!(failures.is_empty(), "{}", failures.join("\n"));
        let accounted = r.useful_total + r.waste_total + r.pending_pre_service;
        prop_assert!((r.consumed_total - accounted).abs() <= 1e-7 * r.consumed_total.max(1.0));
        prop_assert!(r.avg_served_throughput <= r.avg_throughput * (1.0 + 1e-12) + 1e-12);
        if cfg.e_type == 0.0 && cfg.e_size == 0.0 {
            prop_assert_eq!(r.waste_total, 0.0);
        }
    }

    #[test]
    fn runs_are_reproducible(cfg in arb_config()) {
        let a = run(&cfg).unwrap();
        let b = run_with(&cfg, &Scenario::new(&cfg).unwrap(), None).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn perfect_window_never_hurts_a_lone_user() {
    // One user, one AP caching everything the user asks for.
    let base = SimConfig {
        users: 1,
        aps: 1,
        file_types: 2,
        cache_size: 1,
        max_users_per_ap: 1,
        eta_r: 50.0,
        placement_mode: cachenet::config::PlacementMode::TopPopularity,
        horizon: 4000,
        n_fading_samples: 8,
        ..SimConfig::default()
    };
    let d0 = run(&SimConfig {
        window: 0,
        ..base.clone()
    })
    .unwrap();
    let d5 = run(&SimConfig { window: 5, ..base }).unwrap();
    assert!(d5.avg_system_delay <= d0.avg_system_delay + 1e-9);
}
