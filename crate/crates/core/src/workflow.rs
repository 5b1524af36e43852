//! Glue between the pipeline stages: per-type training and the complete
//! simulate, split, fit and evaluate run.

use std::collections::BTreeMap;

use log::warn;

use crate::dynamics::ClimbConditions;
use crate::error::{Error, Result};
use crate::eval::report::{run_report, Report, ReportConfig};
use crate::generative::{train, GenerativeClimbModel, TrainingConfig, TrainingReport};
use crate::performance::PerformanceCatalog;
use crate::pipeline::filter::{filter_climbs, ClimbFlight, FilterConfig};
use crate::pipeline::simulate::{simulate_fleet, Scenario};
use crate::pipeline::split::{split, DatasetSplit, DEFAULT_TRAIN_RATIO};

pub type Models = BTreeMap<String, GenerativeClimbModel>;

/// Fits one model per aircraft type found in `flights`. Types without a
/// performance entry are skipped with a warning.
pub fn fit_models(
    flights: &[ClimbFlight],
    catalog: &PerformanceCatalog,
    config: &TrainingConfig,
) -> Result<(Models, BTreeMap<String, TrainingReport>)> {
    let mut by_type: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for f in flights {
        by_type.entry(f.type_code()).or_default().push(f.interval.clone());
    }
    let mut models = Models::new();
    let mut reports = BTreeMap::new();
    for (type_code, trajs) in by_type {
        let Some(perf) = catalog.get(type_code) else {
            warn!("{type_code}: not in the performance file, skipped");
            continue;
        };
        let (model, rep) = train(perf, &ClimbConditions::nominal(perf), &trajs, config)?;
        models.insert(type_code.to_string(), model);
        reports.insert(type_code.to_string(), rep);
    }
    if models.is_empty() {
        return Err(Error::InsufficientData("no aircraft type could be fitted".into()));
    }
    Ok((models, reports))
}

/// Result of [`end_to_end`].
#[derive(Debug)]
pub struct Experiment {
    pub split: DatasetSplit<ClimbFlight>,
    pub models: Models,
    pub training: BTreeMap<String, TrainingReport>,
    pub report: Report,
}

/// Simulates `scenario`, filters, splits 2:1, fits on the training part and
/// evaluates on the test part.
pub fn end_to_end(
    catalog: &PerformanceCatalog,
    scenario: &Scenario,
    seed: u64,
    report_cfg: &ReportConfig,
) -> Result<Experiment> {
    let fleet = simulate_fleet(catalog, scenario, seed)?;
    let filter = FilterConfig {
        fl_low: scenario.interval_fl[0],
        fl_high: scenario.interval_fl[1],
        ..FilterConfig::default()
    };
    let kept = filter_climbs(&fleet.trajectories, &filter);
    let split = split(kept.flights, |f| f.flight_id().to_string(), DEFAULT_TRAIN_RATIO, seed);
    let training = TrainingConfig {
        interval_fl: scenario.interval_fl,
        ..TrainingConfig::default()
    };
    let (models, training) = fit_models(&split.train, catalog, &training)?;
    let report = run_report(&models, &split.test, catalog, report_cfg)?;
    Ok(Experiment {
        split,
        models,
        training,
        report,
    })
}
