use proptest::prelude::*;

use climbgen::atmosphere::{cas_to_tas, crossover_altitude, fl_to_m, isa_state, mach_to_tas, SpeedSchedule};
use climbgen::dynamics::{integrate_climb, ClimbConditions};
use climbgen::learning::invert_thrust;
use climbgen::performance::PerformanceCatalog;
use climbgen::profile::{uniform_grid, ThrustProfile};

const TYPES: [&str; 3] = ["B738", "B772", "C56X"];

/// Smooth thrust profile around the nominal one.
fn profile(type_code: &str, scale: f64, wiggle: f64, phase: f64) -> ThrustProfile {
    let perf = PerformanceCatalog::shipped().get(type_code).unwrap().clone();
    let (lo, hi) = (fl_to_m(150.0), fl_to_m(325.0));
    let grid = uniform_grid(lo, hi, 100);
    let values = grid
        .iter()
        .map(|&h| {
            let x = (h - lo) / (hi - lo);
            perf.nominal_thrust(h).unwrap() * (scale + wiggle * (6.0 * x + phase).sin())
        })
        .collect();
    ThrustProfile::new(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_decreases_with_altitude(a in 0.0f64..20_000.0, b in 0.0f64..20_000.0, dt in -20.0f64..20.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(isa_state(lo, dt).unwrap().rho > isa_state(hi, dt).unwrap().rho);
    }

    #[test]
    fn temperature_offset_leaves_pressure(h in 0.0f64..20_000.0, dt in -30.0f64..30.0) {
        prop_assert_eq!(isa_state(h, dt).unwrap().p, isa_state(h, 0.0).unwrap().p);
    }

    #[test]
    fn speeds_agree_at_crossover(v_cas in 130.0f64..180.0, mach in 0.6f64..0.86) {
        let sched = SpeedSchedule::new(v_cas, mach).unwrap();
        if let Ok(h) = crossover_altitude(&sched) {
            let st = isa_state(h, 0.0).unwrap();
            let (a, b) = (cas_to_tas(v_cas, &st).unwrap(), mach_to_tas(mach, &st).unwrap());
            prop_assert!((a - b).abs() / b < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn integrated_climb_inverts_to_its_profile(
        ty in 0usize..3, scale in 0.95f64..1.2, wiggle in 0.0f64..0.05, phase in 0.0f64..6.0,
    ) {
        let code = TYPES[ty];
        let perf = PerformanceCatalog::shipped().get(code).unwrap().clone();
        let cond = ClimbConditions::nominal(&perf);
        let p = profile(code, scale, wiggle, phase);
        let climb = integrate_climb(&perf, &cond, &p, p.lower(), p.upper()).unwrap();
        for s in climb.states.iter().step_by(37) {
            let t = invert_thrust(&perf, &cond, s.rocd, s.h).unwrap();
            prop_assert!((t / p.value_at(s.h) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn more_thrust_means_less_time(ty in 0usize..3, scale in 0.95f64..1.2, wiggle in 0.0f64..0.05) {
        let code = TYPES[ty];
        let perf = PerformanceCatalog::shipped().get(code).unwrap().clone();
        let cond = ClimbConditions::nominal(&perf);
        let p = profile(code, scale, wiggle, 1.0);
        let up = p.map(|v| v + 1000.0);
        let t0 = integrate_climb(&perf, &cond, &p, p.lower(), p.upper()).unwrap().total_time();
        let t1 = integrate_climb(&perf, &cond, &up, p.lower(), p.upper()).unwrap().total_time();
        prop_assert!(t1 < t0);
    }

    #[test]
    fn catalog_ignores_entry_order(order in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let text = PerformanceCatalog::shipped().to_toml_string();
        let parts: Vec<&str> = text.split("[[aircraft]]").filter(|s| !s.trim().is_empty()).collect();
        prop_assert_eq!(parts.len(), 3);
        let shuffled: String = order.iter().map(|&i| format!("[[aircraft]]{}", parts[i])).collect();
        prop_assert_eq!(PerformanceCatalog::from_toml_str(&shuffled).unwrap(), PerformanceCatalog::shipped());
    }
}
