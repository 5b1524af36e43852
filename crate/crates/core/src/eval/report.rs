//! Per-type metrics table and plot-ready CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::atmosphere::FT_TO_M;
use crate::dynamics::{integrate_climb_until_stall, ClimbConditions, ClimbTrajectory};
use crate::error::{Error, Result};
use crate::eval::metrics::{
    coverage, kl_divergence, mae, model_arrivals, observed_arrivals, shared_grid, CoverageCount, Kde,
    MIN_KDE_SAMPLE,
};
use crate::generative::{BoundTrajectories, GenerativeClimbModel};
use crate::performance::{AircraftPerformance, PerformanceCatalog};
use crate::pipeline::filter::ClimbFlight;
use crate::profile::{uniform_grid, ThrustProfile};

/// Flight levels at which arrival times are compared.
pub const EVAL_FLS: [f64; 2] = [250.0, 325.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub level: f64,
    pub seed: u64,
    /// Generated climbs per type for the KL comparison.
    pub n_samples: usize,
    /// Reference level for zero time.
    pub ref_fl: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            level: 0.95,
            seed: 0,
            n_samples: 1000,
            ref_fl: 150.0,
        }
    }
}

/// One table row. Times in seconds, KL in nats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub type_code: String,
    /// Test flights evaluated.
    pub n_f: usize,
    pub mae_fl250_model: f64,
    pub mae_fl250_nominal: f64,
    pub mae_fl325_model: f64,
    pub mae_fl325_nominal: f64,
    pub kl_fl250: Option<f64>,
    pub kl_fl325: Option<f64>,
    pub coverage_pct: f64,
}

/// Everything behind one row, kept for plotting.
#[derive(Debug, Clone)]
pub struct TypeEvaluation {
    pub row: MetricsReport,
    pub mean: ThrustProfile,
    pub lower: ThrustProfile,
    pub upper: ThrustProfile,
    pub nominal: ThrustProfile,
    pub samples: Vec<ThrustProfile>,
    pub sampled_climbs: Vec<ClimbTrajectory>,
    pub mean_climb: ClimbTrajectory,
    pub nominal_climb: ClimbTrajectory,
    pub bounds: BoundTrajectories,
    /// Observed arrival times per test flight.
    pub test_arrivals: Vec<(String, Vec<f64>)>,
    /// Arrival times of the generated climbs that reached every level.
    pub sampled_arrivals: Vec<Vec<f64>>,
    pub coverage: CoverageCount,
    pub test_flights: Vec<ClimbFlight>,
    pub ref_fl: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    /// Sorted by `n_f` descending, then type code.
    pub rows: Vec<MetricsReport>,
    pub types: Vec<TypeEvaluation>,
    pub warnings: Vec<String>,
}

/// Per-type sampling seed derived from a run seed.
pub fn type_seed(seed: u64, type_code: &str) -> u64 {
    // FNV-1a, so each type's stream is independent of which others are present.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in type_code.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

/// Nominal thrust sampled on `grid`.
pub fn nominal_profile(perf: &AircraftPerformance, grid: &[f64]) -> Result<ThrustProfile> {
    let values = grid.iter().map(|&h| perf.nominal_thrust(h)).collect::<Result<Vec<_>>>()?;
    ThrustProfile::new(grid.to_vec(), values)
}

fn column(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i]).collect()
}

pub fn evaluate_type(
    model: &GenerativeClimbModel,
    perf: &AircraftPerformance,
    test: &[ClimbFlight],
    cfg: &ReportConfig,
) -> Result<TypeEvaluation> {
    let cond = ClimbConditions::nominal(perf);
    let (h0, h1) = (model.h_start(), model.h_end());
    let mean = model.mean_profile();
    let nominal = nominal_profile(perf, &model.basis.grid)?;
    let mean_climb = integrate_climb_until_stall(perf, &cond, &mean, h0, h1)?;
    let nominal_climb = integrate_climb_until_stall(perf, &cond, &nominal, h0, h1)?;
    let bounds = model.bound_trajectories(perf, &cond, h0, h1, cfg.level)?;
    let (lower, upper) = model.bound_profiles(cfg.level)?;

    let test_arrivals: Vec<(String, Vec<f64>)> = test
        .iter()
        .filter_map(|f| {
            observed_arrivals(&f.track, cfg.ref_fl, &EVAL_FLS).map(|a| (f.flight_id().to_string(), a))
        })
        .collect();
    let excluded = test.len() - test_arrivals.len();
    if excluded > 0 {
        warn!("{}: {excluded} test flights do not span the evaluation levels", model.type_code);
    }
    if test_arrivals.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{}: no test flight spans the evaluation levels",
            model.type_code
        )));
    }
    let observed: Vec<Vec<f64>> = test_arrivals.iter().map(|(_, a)| a.clone()).collect();
    let predict = |climb: &ClimbTrajectory| {
        model_arrivals(climb, cfg.ref_fl, &EVAL_FLS).unwrap_or(vec![f64::INFINITY; EVAL_FLS.len()])
    };
    let (pred_model, pred_nominal) = (predict(&mean_climb), predict(&nominal_climb));
    let mae_at = |pred: &[f64], i: usize| -> Result<f64> {
        let obs = column(&observed, i);
        mae(&vec![pred[i]; obs.len()], &obs)
    };

    let samples = model.sample_thrust(cfg.n_samples, type_seed(cfg.seed, &model.type_code));
    let mut sampled_climbs = Vec::with_capacity(samples.len());
    let mut sampled_arrivals = Vec::new();
    for s in &samples {
        let climb = integrate_climb_until_stall(perf, &cond, s, h0, h1)?;
        if let Some(a) = model_arrivals(&climb, cfg.ref_fl, &EVAL_FLS).filter(|a| a.iter().all(|t| t.is_finite())) {
            sampled_arrivals.push(a);
        }
        sampled_climbs.push(climb);
    }
    let kl_at = |i: usize| -> Option<f64> {
        let p = column(&observed, i);
        let q = column(&sampled_arrivals, i);
        if p.len() < MIN_KDE_SAMPLE || q.len() < MIN_KDE_SAMPLE {
            return None;
        }
        kl_divergence(&p, &q).ok()
    };
    let cov = coverage(test, &bounds);

    let row = MetricsReport {
        type_code: model.type_code.clone(),
        n_f: test.len(),
        mae_fl250_model: mae_at(&pred_model, 0)?,
        mae_fl250_nominal: mae_at(&pred_nominal, 0)?,
        mae_fl325_model: mae_at(&pred_model, 1)?,
        mae_fl325_nominal: mae_at(&pred_nominal, 1)?,
        kl_fl250: kl_at(0),
        kl_fl325: kl_at(1),
        coverage_pct: cov.percent(),
    };
    Ok(TypeEvaluation {
        row,
        mean,
        lower,
        upper,
        nominal,
        samples,
        sampled_climbs,
        mean_climb,
        nominal_climb,
        bounds,
        test_arrivals,
        sampled_arrivals,
        coverage: cov,
        test_flights: test.to_vec(),
        ref_fl: cfg.ref_fl,
    })
}

/// Evaluates every type present in `test`. Types without a model or a
/// performance entry are skipped with a warning.
pub fn run_report(
    models: &BTreeMap<String, GenerativeClimbModel>,
    test: &[ClimbFlight],
    catalog: &PerformanceCatalog,
    cfg: &ReportConfig,
) -> Result<Report> {
    let mut by_type: BTreeMap<&str, Vec<ClimbFlight>> = BTreeMap::new();
    for f in test {
        by_type.entry(f.type_code()).or_default().push(f.clone());
    }
    let mut report = Report::default();
    if by_type.is_empty() {
        let msg = "test set is empty".to_string();
        warn!("{msg}");
        report.warnings.push(msg);
    }
    for (type_code, flights) in by_type {
        let (Some(model), Some(perf)) = (models.get(type_code), catalog.get(type_code)) else {
            let msg = format!("{type_code}: no fitted model or performance entry, row skipped");
            warn!("{msg}");
            report.warnings.push(msg);
            continue;
        };
        match evaluate_type(model, perf, &flights, cfg) {
            Ok(ev) => report.types.push(ev),
            Err(e @ Error::InsufficientData(_)) => {
                warn!("{e}");
                report.warnings.push(e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    report
        .types
        .sort_by(|a, b| b.row.n_f.cmp(&a.row.n_f).then(a.row.type_code.cmp(&b.row.type_code)));
    report.rows = report.types.iter().map(|t| t.row.clone()).collect();
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn report_csv(rows: &[MetricsReport]) -> String {
    let mut s = String::from(
        "type_code,n_f,mae_fl250_model,mae_fl250_nominal,mae_fl325_model,mae_fl325_nominal,kl_fl250,kl_fl325,coverage_pct\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.type_code,
            r.n_f,
            r.mae_fl250_model,
            r.mae_fl250_nominal,
            r.mae_fl325_model,
            r.mae_fl325_nominal,
            opt(r.kl_fl250),
            opt(r.kl_fl325),
            r.coverage_pct
        );
    }
    s
}

pub fn report_json(rows: &[MetricsReport]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialise");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Thrust profile CSV: altitude plus one column per named profile.
pub fn profiles_csv(named: &[(&str, &ThrustProfile)]) -> String {
    let mut s = String::from("h_m");
    for (name, _) in named {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    let grid = named[0].1.grid();
    for (k, h) in grid.iter().enumerate() {
        let _ = write!(s, "{h}");
        for (_, p) in named {
            let _ = write!(s, ",{}", p.values()[k]);
        }
        s.push('\n');
    }
    s
}

const PLOT_SAMPLES: usize = 50;
/// Altitudes at which climb times are tabulated.
pub const PLOT_LEVELS: usize = 36;

fn time_or_blank(c: &ClimbTrajectory, h: f64) -> String {
    match c.time_at(h) {
        Some(t) if t.is_finite() => t.to_string(),
        _ => String::new(),
    }
}

/// Long-format thrust samples: `sample,h_m,thrust_N`.
pub fn samples_csv(samples: &[ThrustProfile]) -> String {
    let mut s = String::from("sample,h_m,thrust_N\n");
    for (i, p) in samples.iter().enumerate() {
        for (h, v) in p.grid().iter().zip(p.values()) {
            let _ = writeln!(s, "{i},{h},{v}");
        }
    }
    s
}

/// Long-format climb times at `levels`: `sample,h_m,t_s`. Levels beyond a
/// stall are left blank.
pub fn sampled_climbs_csv(climbs: &[ClimbTrajectory], levels: &[f64]) -> String {
    let mut s = String::from("sample,h_m,t_s\n");
    for (i, c) in climbs.iter().enumerate() {
        for &h in levels {
            let _ = writeln!(s, "{i},{h},{}", time_or_blank(c, h));
        }
    }
    s
}

/// Wide-format climb times at `levels`, one column per named climb.
pub fn climbs_csv(named: &[(&str, &ClimbTrajectory)], levels: &[f64]) -> String {
    let mut s = String::from("h_m");
    for (name, _) in named {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    for &h in levels {
        let _ = write!(s, "{h}");
        for (_, c) in named {
            let _ = write!(s, ",{}", time_or_blank(c, h));
        }
        s.push('\n');
    }
    s
}

/// Writes `report.csv`, `report.json` and per-type plot files under `plots/`.
pub fn write_report(report: &Report, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join("report.csv"), &report_csv(&report.rows))?;
    write(&out.join("report.json"), &report_json(&report.rows))?;
    let plots = out.join("plots");
    fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    for ev in &report.types {
        let ty = &ev.row.type_code;
        write(
            &plots.join(format!("{ty}_profiles.csv")),
            &profiles_csv(&[
                ("mean_N", &ev.mean),
                ("lower_N", &ev.lower),
                ("upper_N", &ev.upper),
                ("nominal_N", &ev.nominal),
            ]),
        )?;

        let n = ev.samples.len().min(PLOT_SAMPLES);
        write(&plots.join(format!("{ty}_thrust_samples.csv")), &samples_csv(&ev.samples[..n]))?;
        let levels = uniform_grid(ev.mean.lower(), ev.mean.upper(), PLOT_LEVELS);
        write(
            &plots.join(format!("{ty}_sampled_trajectories.csv")),
            &sampled_climbs_csv(&ev.sampled_climbs[..n], &levels),
        )?;
        write(
            &plots.join(format!("{ty}_bound_trajectories.csv")),
            &climbs_csv(
                &[
                    ("t_fast_s", &ev.bounds.fast),
                    ("t_mean_s", &ev.mean_climb),
                    ("t_slow_s", &ev.bounds.slow),
                    ("t_nominal_s", &ev.nominal_climb),
                ],
                &levels,
            ),
        )?;

        let mut s = String::from("flight_id,t_s,h_m\n");
        for f in &ev.test_flights {
            for b in &f.interval.blips {
                let _ = writeln!(s, "{},{},{}", f.flight_id(), b.t - f.t_ref, b.alt_ft * FT_TO_M);
            }
        }
        write(&plots.join(format!("{ty}_test_trajectories.csv")), &s)?;

        let mut s = String::from("source,id,t_fl250_s,t_fl325_s\n");
        for (id, a) in &ev.test_arrivals {
            let _ = writeln!(s, "test,{id},{},{}", a[0], a[1]);
        }
        for (i, a) in ev.sampled_arrivals.iter().enumerate() {
            let _ = writeln!(s, "generated,{i},{},{}", a[0], a[1]);
        }
        write(&plots.join(format!("{ty}_arrivals.csv")), &s)?;

        let mut s = String::from("fl,t_s,density_test,density_generated\n");
        for (i, fl) in EVAL_FLS.iter().enumerate() {
            let p = column(&ev.test_arrivals.iter().map(|(_, a)| a.clone()).collect::<Vec<_>>(), i);
            let q = column(&ev.sampled_arrivals, i);
            let (Ok(kp), Ok(kq)) = (Kde::new(&p), Kde::new(&q)) else {
                continue;
            };
            for x in shared_grid(&kp, &kq).iter().step_by(8) {
                let _ = writeln!(s, "{fl},{x},{},{}", kp.density(*x), kq.density(*x));
            }
        }
        write(&plots.join(format!("{ty}_kde.csv")), &s)?;
    }
    Ok(())
}
