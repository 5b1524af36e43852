use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::json;

use climbgen::dynamics::{integrate_climb_until_stall, ClimbConditions, ClimbTrajectory};
use climbgen::eval::metrics::model_arrivals;
use climbgen::eval::report::{
    climbs_csv, nominal_profile, profiles_csv, run_report, sampled_climbs_csv, samples_csv, type_seed,
    write_report, ReportConfig, EVAL_FLS, PLOT_LEVELS,
};
use climbgen::generative::{GenerativeClimbModel, TrainingConfig, DEFAULT_LEVEL};
use climbgen::model_io::{load_models, model_path, save_model};
use climbgen::performance::{AircraftPerformance, PerformanceCatalog};
use climbgen::pipeline::filter::{filter_climbs, ClimbFlight, FilterConfig};
use climbgen::pipeline::radar::{ingest, save_csv, Trajectory};
use climbgen::pipeline::simulate::{simulate_fleet, truth_to_json, Scenario};
use climbgen::pipeline::split::{split, DEFAULT_TRAIN_RATIO};
use climbgen::profile::uniform_grid;
use climbgen::workflow::fit_models;

const EXIT_VALIDATION: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "climbgen", version, about = "Learn, sample and evaluate generative climb models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for simulation, splitting and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Aircraft performance file (TOML). Defaults to the built-in catalog.
    #[arg(long, global = true)]
    perf_file: Option<PathBuf>,
    /// Directory holding one `<TYPE>.model.json` per aircraft type.
    #[arg(long, global = true)]
    model_dir: Option<PathBuf>,
    /// Altitude interval, e.g. FL150:FL325.
    #[arg(long, global = true, default_value = "FL150:FL325", value_parser = parse_interval)]
    interval: [f64; 2],
    /// Confidence level of the bounds.
    #[arg(long, global = true, default_value_t = DEFAULT_LEVEL)]
    level: f64,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate radar tracks from a synthetic fleet.
    Simulate {
        /// Scenario file (TOML). Defaults to the built-in scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Ingest radar returns, keep climbs through the interval and split them 2:1.
    Prepare {
        /// Radar CSV.
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit one model per aircraft type from training tracks.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Draw thrust profiles and climbs from fitted models.
    Sample {
        /// Restrict to one aircraft type.
        #[arg(long = "type")]
        type_code: Option<String>,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Bound thrust profiles and bound trajectories.
    Bounds {
        #[arg(long = "type")]
        type_code: Option<String>,
    },
    /// Mean-model and nominal climb predictions.
    Predict {
        #[arg(long = "type")]
        type_code: Option<String>,
    },
    /// Metrics table and plot files on test tracks.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        /// Generated climbs per type for the distribution comparison.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

fn parse_interval(s: &str) -> Result<[f64; 2], String> {
    let level = |p: &str| {
        let p = p.trim();
        let digits = p.strip_prefix("FL").or_else(|| p.strip_prefix("fl")).unwrap_or(p);
        digits.parse::<f64>().map_err(|_| format!("bad flight level '{p}'"))
    };
    let (a, b) = s.split_once(':').ok_or("expected FLlow:FLhigh")?;
    let (lo, hi) = (level(a)?, level(b)?);
    if !(lo >= 0.0 && lo < hi) {
        return Err(format!("interval {lo}:{hi} is empty"));
    }
    Ok([lo, hi])
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(climbgen::Error),
}

impl From<climbgen::Error> for CliError {
    fn from(e: climbgen::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| climbgen::Error::Io { path: path.to_path_buf(), source: e }.into())
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
    s.push('\n');
    s
}

impl Global {
    fn out(&self) -> CliResult<&Path> {
        let out = self.out.as_deref().ok_or_else(|| CliError::Usage("--out is required".into()))?;
        fs::create_dir_all(out).map_err(|e| climbgen::Error::Io { path: out.to_path_buf(), source: e })?;
        Ok(out)
    }

    fn model_dir(&self) -> CliResult<&Path> {
        self.model_dir.as_deref().ok_or_else(|| CliError::Usage("--model-dir is required".into()))
    }

    fn catalog(&self) -> CliResult<PerformanceCatalog> {
        Ok(match &self.perf_file {
            Some(p) => PerformanceCatalog::load(p)?,
            None => PerformanceCatalog::shipped(),
        })
    }

    fn check_level(&self) -> CliResult<()> {
        if (0.0..1.0).contains(&self.level) {
            Ok(())
        } else {
            Err(CliError::Usage(format!("--level {} not in [0, 1)", self.level)))
        }
    }

    fn filter(&self) -> FilterConfig {
        FilterConfig {
            fl_low: self.interval[0],
            fl_high: self.interval[1],
            ..FilterConfig::default()
        }
    }

    /// Loaded models, optionally restricted to one type, each paired with its
    /// performance entry.
    fn models(&self, only: Option<&str>) -> CliResult<Vec<(GenerativeClimbModel, AircraftPerformance)>> {
        let catalog = self.catalog()?;
        let mut models = load_models(self.model_dir()?)?;
        if let Some(t) = only {
            models.retain(|k, _| k == t);
            if models.is_empty() {
                return Err(CliError::Usage(format!("no model for type {t}")));
            }
        }
        if models.is_empty() {
            return Err(climbgen::Error::InsufficientData("model directory holds no models".into()).into());
        }
        models
            .into_values()
            .map(|m| {
                let perf = catalog.get(&m.type_code).cloned().ok_or_else(|| {
                    CliError::Usage(format!("type {} missing from the performance file", m.type_code))
                })?;
                Ok((m, perf))
            })
            .collect()
    }
}

fn read_climbs(path: &Path, g: &Global) -> CliResult<(Vec<ClimbFlight>, serde_json::Value)> {
    let report = ingest(path)?;
    for (line, reason) in &report.skipped {
        warn!("{}:{line}: skipped: {reason}", path.display());
    }
    let outcome = filter_climbs(&report.trajectories, &g.filter());
    info!(
        "{}: {} tracks, {} climb through FL{}-FL{}",
        path.display(),
        report.trajectories.len(),
        outcome.flights.len(),
        g.interval[0],
        g.interval[1]
    );
    let summary = json!({
        "rows_read": report.rows_read,
        "rows_skipped": report.skipped.len(),
        "tracks": report.trajectories.len(),
        "climbs": outcome.flights.len(),
        "not_climbing": outcome.not_climbing,
        "too_few_blips": outcome.too_few_blips,
    });
    Ok((outcome.flights, summary))
}

fn simulate(g: &Global, scenario: Option<&Path>) -> CliResult<()> {
    let out = g.out()?;
    let scenario = match scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::shipped(),
    };
    let fleet = simulate_fleet(&g.catalog()?, &scenario, g.seed)?;
    save_csv(&out.join("radar.csv"), &fleet.trajectories)?;
    write_file(&out.join("truth.json"), &truth_to_json(&fleet.truth))?;
    info!("simulated {} flights", fleet.trajectories.len());
    Ok(())
}

fn prepare(g: &Global, input: &Path) -> CliResult<()> {
    let out = g.out()?;
    let (flights, mut summary) = read_climbs(input, g)?;
    let parts = split(flights, |f| f.flight_id().to_string(), DEFAULT_TRAIN_RATIO, g.seed);
    let tracks = |fs: &[ClimbFlight]| fs.iter().map(|f| f.track.clone()).collect::<Vec<Trajectory>>();
    save_csv(&out.join("train.csv"), &tracks(&parts.train))?;
    save_csv(&out.join("test.csv"), &tracks(&parts.test))?;
    summary["train"] = json!(parts.train.len());
    summary["test"] = json!(parts.test.len());
    summary["seed"] = json!(g.seed);
    summary["interval_fl"] = json!(g.interval);
    write_file(&out.join("prepare_summary.json"), &json_text(&summary))
}

fn fit(g: &Global, input: &Path) -> CliResult<()> {
    let out = g.out()?;
    let dir = g.model_dir()?;
    fs::create_dir_all(dir).map_err(|e| climbgen::Error::Io { path: dir.to_path_buf(), source: e })?;
    let (flights, input_summary) = read_climbs(input, g)?;
    let config = TrainingConfig {
        interval_fl: g.interval,
        ..TrainingConfig::default()
    };
    let (models, reports) = fit_models(&flights, &g.catalog()?, &config)?;
    let mut types = BTreeMap::new();
    for (ty, model) in &models {
        save_model(model, &model_path(dir, ty))?;
        let r = &reports[ty];
        types.insert(
            ty.clone(),
            json!({
                "flights_used": r.flights_used,
                "flights_rejected": r.flights_rejected,
                "n_modes": model.n_modes(),
                "explained_variance": model.basis.explained_variance,
                "spectrum": r.spectrum,
            }),
        );
    }
    let summary = json!({ "input": input_summary, "types": types });
    write_file(&out.join("fit_summary.json"), &json_text(&summary))
}

fn levels(model: &GenerativeClimbModel) -> Vec<f64> {
    uniform_grid(model.h_start(), model.h_end(), PLOT_LEVELS)
}

fn sample(g: &Global, only: Option<&str>, count: usize) -> CliResult<()> {
    if count == 0 {
        return Err(CliError::Usage("--count must be positive".into()));
    }
    let out = g.out()?;
    for (model, perf) in g.models(only)? {
        let ty = &model.type_code;
        let cond = ClimbConditions::nominal(&perf);
        let seed = type_seed(g.seed, ty);
        let weights = model.sample_weights(count, seed);
        let profiles = model.sample_thrust(count, seed);
        let climbs = profiles
            .iter()
            .map(|p| integrate_climb_until_stall(&perf, &cond, p, model.h_start(), model.h_end()))
            .collect::<climbgen::Result<Vec<_>>>()?;
        let mut w = String::from("sample");
        for i in 0..model.n_modes() {
            w.push_str(&format!(",w{}", i + 1));
        }
        w.push('\n');
        for (i, v) in weights.iter().enumerate() {
            w.push_str(&i.to_string());
            for x in v.as_slice() {
                w.push_str(&format!(",{x}"));
            }
            w.push('\n');
        }
        write_file(&out.join(format!("{ty}_weights.csv")), &w)?;
        write_file(&out.join(format!("{ty}_thrust_samples.csv")), &samples_csv(&profiles))?;
        write_file(
            &out.join(format!("{ty}_sampled_trajectories.csv")),
            &sampled_climbs_csv(&climbs, &levels(&model)),
        )?;
    }
    Ok(())
}

fn bounds(g: &Global, only: Option<&str>) -> CliResult<()> {
    g.check_level()?;
    let out = g.out()?;
    for (model, perf) in g.models(only)? {
        let ty = &model.type_code;
        let cond = ClimbConditions::nominal(&perf);
        let mean = model.mean_profile();
        let (lower, upper) = model.bound_profiles(g.level)?;
        let b = model.bound_trajectories(&perf, &cond, model.h_start(), model.h_end(), g.level)?;
        let mean_climb = integrate_climb_until_stall(&perf, &cond, &mean, model.h_start(), model.h_end())?;
        write_file(
            &out.join(format!("{ty}_bounds.csv")),
            &profiles_csv(&[("lower_N", &lower), ("mean_N", &mean), ("upper_N", &upper)]),
        )?;
        write_file(
            &out.join(format!("{ty}_bound_trajectories.csv")),
            &climbs_csv(
                &[("t_fast_s", &b.fast), ("t_mean_s", &mean_climb), ("t_slow_s", &b.slow)],
                &levels(&model),
            ),
        )?;
    }
    Ok(())
}

fn arrivals_cell(climb: &ClimbTrajectory, ref_fl: f64) -> Vec<String> {
    match model_arrivals(climb, ref_fl, &EVAL_FLS) {
        Some(a) => a.iter().map(|t| if t.is_finite() { t.to_string() } else { String::new() }).collect(),
        None => vec![String::new(); EVAL_FLS.len()],
    }
}

fn predict(g: &Global, only: Option<&str>) -> CliResult<()> {
    let out = g.out()?;
    let mut table = String::from("type_code,prediction,t_fl250_s,t_fl325_s\n");
    for (model, perf) in g.models(only)? {
        let ty = &model.type_code;
        let cond = ClimbConditions::nominal(&perf);
        let (h0, h1) = (model.h_start(), model.h_end());
        let mean_climb = integrate_climb_until_stall(&perf, &cond, &model.mean_profile(), h0, h1)?;
        let nominal = nominal_profile(&perf, &model.basis.grid)?;
        let nominal_climb = integrate_climb_until_stall(&perf, &cond, &nominal, h0, h1)?;
        let ref_fl = model.interval_fl[0];
        for (name, c) in [("model_mean", &mean_climb), ("nominal", &nominal_climb)] {
            table.push_str(&format!("{ty},{name},{}\n", arrivals_cell(c, ref_fl).join(",")));
        }
        write_file(
            &out.join(format!("{ty}_predicted_trajectory.csv")),
            &climbs_csv(&[("t_mean_s", &mean_climb), ("t_nominal_s", &nominal_climb)], &levels(&model)),
        )?;
    }
    write_file(&out.join("predictions.csv"), &table)
}

fn evaluate(g: &Global, input: &Path, samples: usize) -> CliResult<()> {
    g.check_level()?;
    let out = g.out()?;
    let models: BTreeMap<String, GenerativeClimbModel> =
        g.models(None)?.into_iter().map(|(m, _)| (m.type_code.clone(), m)).collect();
    for m in models.values() {
        if m.interval_fl != g.interval {
            warn!("{}: fitted on FL{:?}, evaluated on FL{:?}", m.type_code, m.interval_fl, g.interval);
        }
    }
    let (test, _) = read_climbs(input, g)?;
    let cfg = ReportConfig {
        level: g.level,
        seed: g.seed,
        n_samples: samples,
        ref_fl: g.interval[0],
    };
    let report = run_report(&models, &test, &g.catalog()?, &cfg)?;
    write_report(&report, out)?;
    print!("{}", climbgen::eval::report::report_csv(&report.rows));
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate { scenario } => simulate(g, scenario.as_deref()),
        Command::Prepare { input } => prepare(g, input),
        Command::Fit { input } => fit(g, input),
        Command::Sample { type_code, count } => sample(g, type_code.as_deref(), *count),
        Command::Bounds { type_code } => bounds(g, type_code.as_deref()),
        Command::Predict { type_code } => predict(g, type_code.as_deref()),
        Command::Evaluate { input, samples } => evaluate(g, input, *samples),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CLIMBGEN_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
