use proptest::prelude::*;

use storesim::model::{DepartmentConfig, ProactivityParams, Role, Rota, StopStrategy};
use storesim::world::{World, WorldSettings};

fn settings(rota: Rota, p: ProactivityParams, trace: bool) -> WorldSettings {
    WorldSettings {
        rota,
        proactivity: p,
        weeks: 1,
        trace,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_week_invariants(
        seed in any::<u64>(),
        ww in any::<bool>(),
        normal in 2i64..12,
        expert in 0i64..3,
        open in 0.0f64..5.0,
        strategy in 0usize..3,
        enabled in any::<bool>(),
    ) {
        let cfg = if ww { DepartmentConfig::ww() } else { DepartmentConfig::atv() };
        let mut p = cfg.proactivity;
        p.enabled = enabled;
        p.p2_open_threshold = open;
        p.p2_close_threshold = (open - 1.0).max(0.0);
        p.p5_stop_strategy = [StopStrategy::CountOnly, StopStrategy::QueueOnly, StopStrategy::Either][strategy];
        let max_tills = p.p4_max_open_tills as usize;
        let r = World::new(cfg, settings(Rota::new(1, normal, expert), p, false), seed).run().unwrap();

        prop_assert_eq!(r.activations, r.completed_visits + r.in_store + r.dropped_arrivals);
        prop_assert_eq!(r.transactions_without_browse, 0);
        prop_assert!(r.max_open_tills <= max_tills.max(1));
        for s in &r.staff {
            let busy: f64 = s.busy_by_role.iter().sum();
            prop_assert!(busy >= 0.0 && s.idle_minutes >= 0.0);
            if !enabled {
                for role in Role::ALL {
                    if role != s.assigned.role() {
                        prop_assert_eq!(s.busy_by_role[role.index()], 0.0);
                    }
                }
            }
        }
        for m in r.weeks[0].measures().iter().flatten() {
            prop_assert!(m.is_finite());
        }
        if !enabled {
            prop_assert_eq!(r.swap_count(), 0);
        }
    }

    #[test]
    fn traced_and_untraced_runs_agree(seed in any::<u64>()) {
        let cfg = DepartmentConfig::atv();
        let rota = cfg.rota.real;
        let p = cfg.proactivity;
        let a = World::new(cfg.clone(), settings(rota, p, false), seed).run().unwrap();
        let b = World::new(cfg, settings(rota, p, true), seed).run().unwrap();
        prop_assert_eq!(a, b);
    }
}
