use std::sync::OnceLock;

use proptest::prelude::*;

use climbgen::dynamics::ClimbConditions;
use climbgen::eval::metrics::{coverage, observed_arrivals};
use climbgen::eval::report::{report_csv, report_json, run_report, ReportConfig};
use climbgen::performance::PerformanceCatalog;
use climbgen::pipeline::filter::ClimbFlight;
use climbgen::pipeline::radar::Trajectory;
use climbgen::pipeline::simulate::Scenario;
use climbgen::workflow::{end_to_end, Experiment};

fn experiment() -> &'static Experiment {
    static EXP: OnceLock<Experiment> = OnceLock::new();
    EXP.get_or_init(|| {
        let mut sc = Scenario::shipped();
        for t in &mut sc.types {
            t.flights = 150;
        }
        end_to_end(&PerformanceCatalog::shipped(), &sc, 11, &ReportConfig { seed: 11, ..Default::default() }).unwrap()
    })
}

fn coverage_at(type_code: &str, level: f64) -> f64 {
    let exp = experiment();
    let perf = PerformanceCatalog::shipped().get(type_code).unwrap().clone();
    let m = &exp.models[type_code];
    let b = m
        .bound_trajectories(&perf, &ClimbConditions::nominal(&perf), m.h_start(), m.h_end(), level)
        .unwrap();
    let test: Vec<ClimbFlight> = exp.split.test.iter().filter(|f| f.type_code() == type_code).cloned().collect();
    coverage(&test, &b).percent()
}

#[test]
fn wide_bounds_cover_everything() {
    // With radar noise a few returns just above the reference level precede
    // the interpolated crossing and cannot be covered by any band.
    for ty in ["B738", "B772", "C56X"] {
        let c = coverage_at(ty, 1.0 - 1e-12);
        assert!(c > 99.9, "{ty}: {c}");
    }
    let mut sc = Scenario::shipped();
    sc.alt_noise_ft = 0.0;
    sc.quantization_ft = 0.0;
    for t in &mut sc.types {
        t.flights = 40;
    }
    let cfg = ReportConfig { level: 1.0 - 1e-12, n_samples: 50, ..Default::default() };
    let exp = end_to_end(&PerformanceCatalog::shipped(), &sc, 5, &cfg).unwrap();
    for r in &exp.report.rows {
        assert_eq!(r.coverage_pct, 100.0, "{}", r.type_code);
    }
}

#[test]
fn narrow_bounds_cover_little() {
    for ty in ["B738", "B772", "C56X"] {
        let c = coverage_at(ty, 0.05);
        assert!(c < 60.0, "{ty}: {c}");
    }
}

#[test]
fn three_types_model_beats_nominal_at_fl325() {
    let rows = &experiment().report.rows;
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r.mae_fl325_model < r.mae_fl325_nominal, "{r:?}");
        assert!((0.0..=100.0).contains(&r.coverage_pct));
    }
    let n: Vec<usize> = rows.iter().map(|r| r.n_f).collect();
    assert!(n.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn report_bytes_are_reproducible() {
    let exp = experiment();
    let cfg = ReportConfig { seed: 11, ..Default::default() };
    let again = run_report(&exp.models, &exp.split.test, &PerformanceCatalog::shipped(), &cfg).unwrap();
    assert_eq!(report_csv(&again.rows), report_csv(&exp.report.rows));
    assert_eq!(report_json(&again.rows), report_json(&exp.report.rows));
}

#[test]
fn non_spanning_tracks_are_excluded() {
    let exp = experiment();
    let mut test: Vec<ClimbFlight> = exp.split.test.iter().filter(|f| f.type_code() == "C56X").cloned().collect();
    let n = test.len();
    let f = &mut test[0];
    let cut: Vec<_> = f.track.blips.iter().filter(|b| b.alt_ft < 30_000.0).cloned().collect();
    f.track = Trajectory { blips: cut, ..f.track.clone() };
    assert!(observed_arrivals(&f.track, 150.0, &[250.0, 325.0]).is_none());
    let models = exp.models.clone();
    let r = run_report(&models, &test, &PerformanceCatalog::shipped(), &ReportConfig::default()).unwrap();
    let ev = &r.types[0];
    assert_eq!(ev.row.n_f, n);
    assert_eq!(ev.test_arrivals.len(), n - 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn coverage_is_monotone_in_level(a in 0.0f64..0.999, b in 0.0f64..0.999, ty in 0usize..3) {
        let code = ["B738", "B772", "C56X"][ty];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(coverage_at(code, lo) <= coverage_at(code, hi));
    }
}
