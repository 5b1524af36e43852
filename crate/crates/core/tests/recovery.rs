//! Thrust recovered from simulated tracks against the profiles that produced them.

use climbgen::atmosphere::{fl_to_m, FT_TO_M};
use climbgen::dynamics::{integrate_climb, ClimbConditions};
use climbgen::eval::report::ReportConfig;
use climbgen::learning::profile_from_flight;
use climbgen::performance::PerformanceCatalog;
use climbgen::pipeline::filter::{filter_climbs, FilterConfig};
use climbgen::pipeline::radar::{Blip, Trajectory};
use climbgen::pipeline::simulate::{simulate_fleet, Scenario, TruthModel};
use climbgen::profile::{interp_clamped, uniform_grid, ThrustProfile};
use climbgen::workflow::end_to_end;

fn rms_relative(got: &ThrustProfile, want: impl Fn(f64) -> f64) -> f64 {
    let n = got.len() as f64;
    (got.grid()
        .iter()
        .zip(got.values())
        .map(|(&h, v)| ((v - want(h)) / want(h)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

fn fit_grid() -> Vec<f64> {
    uniform_grid(fl_to_m(150.0), fl_to_m(325.0), 100)
}

#[test]
fn linear_thrust_profile_is_recovered() {
    let catalog = PerformanceCatalog::shipped();
    for perf in catalog.iter() {
        let cond = ClimbConditions::nominal(perf);
        let (h0, h1) = (fl_to_m(120.0), fl_to_m(340.0));
        let t0 = 0.95 * perf.nominal_thrust(h0).unwrap();
        let t1 = 0.95 * perf.nominal_thrust(h1).unwrap();
        let line = move |h: f64| t0 + (t1 - t0) * (h - h0) / (h1 - h0);
        let grid = uniform_grid(h0, h1, 50);
        let truth = ThrustProfile::new(grid.clone(), grid.iter().map(|&h| line(h)).collect()).unwrap();
        let climb = integrate_climb(perf, &cond, &truth, h0, h1).unwrap();
        let ts: Vec<f64> = climb.states.iter().map(|s| s.t).collect();
        let hs: Vec<f64> = climb.states.iter().map(|s| s.h).collect();
        let blips = (0..)
            .map(|k| k as f64)
            .take_while(|&t| t <= climb.total_time())
            .map(|t| Blip { t, alt_ft: interp_clamped(&ts, &hs, t) / FT_TO_M, lat: None, lon: None, rocd_fpm: 0.0 })
            .collect();
        let traj = Trajectory::from_returns("L".into(), perf.type_code.clone(), blips);
        let kept = filter_climbs(&[traj], &FilterConfig::default());
        let prof = profile_from_flight(perf, &cond, &kept.flights[0].interval, &fit_grid()).unwrap();
        let err = rms_relative(&prof, line);
        assert!(err < 0.005, "{}: {err}", perf.type_code);
    }
}

#[test]
fn noise_free_pipeline_recovers_truth() {
    let catalog = PerformanceCatalog::shipped();
    let mut scenario = Scenario::shipped();
    scenario.blip_interval_s = 1.0;
    scenario.alt_noise_ft = 0.0;
    scenario.quantization_ft = 0.0;
    for t in &mut scenario.types {
        t.flights = 40;
    }
    let fleet = simulate_fleet(&catalog, &scenario, 3).unwrap();
    let kept = filter_climbs(&fleet.trajectories, &FilterConfig::default());
    assert_eq!(kept.flights.len(), 120);
    let mut worst: f64 = 0.0;
    for f in &kept.flights {
        let perf = catalog.get(f.type_code()).unwrap();
        let ty = scenario.types.iter().find(|t| t.type_code == f.type_code()).unwrap();
        let truth = TruthModel::new(perf, &scenario, ty).unwrap().profile(&fleet.truth[f.flight_id()].weights);
        let prof = profile_from_flight(perf, &ClimbConditions::nominal(perf), &f.interval, &fit_grid()).unwrap();
        let err = rms_relative(&prof, |h| truth.value_at(h));
        worst = worst.max(err);
    }
    assert!(worst < 0.005, "worst RMS {worst}");
}

#[test]
fn three_mode_truth_keeps_three_components_within_one() {
    let exp = end_to_end(&PerformanceCatalog::shipped(), &Scenario::shipped(), 1, &ReportConfig::default()).unwrap();
    assert_eq!(exp.models.len(), 3);
    for (ty, m) in &exp.models {
        assert!((2..=4).contains(&m.n_modes()), "{ty}: {} modes", m.n_modes());
    }
}
