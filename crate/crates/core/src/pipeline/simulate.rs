//! Synthetic radar data from a known generative truth.
//!
//! Each flight flies an effective thrust profile `(1 + bias) T_nom(h) +
//! Σ w_i ψ_i(h)`, where `ψ_i` are Legendre polynomials normalised over the
//! simulated altitude span and `w_i` are independent normals. The climb is
//! integrated with the forward model and sampled as radar returns.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::atmosphere::{fl_to_m, FT_TO_M};
use crate::dynamics::{integrate_climb, ClimbConditions, ClimbTrajectory};
use crate::error::{Error, Result};
use crate::performance::{AircraftPerformance, PerformanceCatalog};
use crate::pipeline::radar::{Blip, Trajectory};
use crate::profile::{interp_clamped, trapezoid_weights, uniform_grid, ThrustProfile};

/// Attempts at drawing a feasible profile before giving up on a flight.
pub const MAX_REDRAWS: usize = 100;
const TRUTH_NODES: usize = 221;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOff {
    /// Probability that a flight levels off once inside the band.
    pub probability: f64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    pub min_fl: f64,
    pub max_fl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeScenario {
    pub type_code: String,
    pub flights: usize,
    /// Fractional offset of the mean thrust from nominal.
    pub thrust_bias: f64,
    /// Standard deviation of each Legendre mode's RMS contribution, as a
    /// fraction of the mean nominal thrust over the fit interval.
    pub mode_sd_frac: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub blip_interval_s: f64,
    /// Gaussian altitude noise, ft.
    pub alt_noise_ft: f64,
    /// Reported altitude resolution, ft; 0 disables rounding.
    pub quantization_ft: f64,
    pub start_fl: f64,
    pub end_fl: f64,
    /// Interval whose mean nominal thrust scales `mode_sd_frac`.
    #[serde(default = "default_interval")]
    pub interval_fl: [f64; 2],
    #[serde(default)]
    pub level_off: Option<LevelOff>,
    pub types: Vec<TypeScenario>,
}

fn default_interval() -> [f64; 2] {
    [150.0, 325.0]
}

const SHIPPED_SCENARIO: &str = include_str!("../../data/scenario.toml");

impl Scenario {
    pub fn shipped() -> Self {
        Scenario::from_toml_str(SHIPPED_SCENARIO).expect("shipped scenario is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| Error::Scenario(e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Scenario(what.to_string()));
        if !(self.blip_interval_s > 0.0) {
            return bad("blip_interval_s must be positive");
        }
        if !(self.alt_noise_ft >= 0.0) || !(self.quantization_ft >= 0.0) {
            return bad("noise and quantization must be non-negative");
        }
        if !(self.start_fl < self.interval_fl[0]
            && self.interval_fl[0] < self.interval_fl[1]
            && self.interval_fl[1] < self.end_fl)
        {
            return bad("need start_fl < interval low < interval high < end_fl");
        }
        if let Some(lo) = &self.level_off {
            if !(0.0..=1.0).contains(&lo.probability)
                || !(0.0 <= lo.min_duration_s && lo.min_duration_s <= lo.max_duration_s)
                || !(self.start_fl <= lo.min_fl && lo.min_fl <= lo.max_fl && lo.max_fl <= self.end_fl)
            {
                return bad("invalid level_off settings");
            }
        }
        if self.types.is_empty() {
            return bad("no aircraft types");
        }
        for t in &self.types {
            if t.mode_sd_frac.is_empty() || t.mode_sd_frac.iter().any(|s| !(*s >= 0.0)) {
                return Err(Error::Scenario(format!(
                    "{}: mode_sd_frac must be non-empty and non-negative",
                    t.type_code
                )));
            }
            if !(t.thrust_bias > -1.0) {
                return Err(Error::Scenario(format!("{}: thrust_bias must exceed -1", t.type_code)));
            }
        }
        Ok(())
    }
}

/// Drawn truth for one flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightTruth {
    pub type_code: String,
    pub weights: Vec<f64>,
    pub thrust_bias: f64,
    /// (altitude ft, duration s) of a level segment, if any.
    pub level_off: Option<(f64, f64)>,
    pub redraws: usize,
}

#[derive(Debug, Clone)]
pub struct SimulatedFleet {
    /// Ordered by flight id.
    pub trajectories: Vec<Trajectory>,
    pub truth: BTreeMap<String, FlightTruth>,
}

/// Shifted Legendre polynomials on `[a, b]`, orthonormal in L2.
pub fn legendre_modes(grid: &[f64], a: f64, b: f64, n: usize) -> Vec<Vec<f64>> {
    let len = b - a;
    (0..n)
        .map(|k| {
            let norm = ((2 * k + 1) as f64 / len).sqrt();
            grid.iter()
                .map(|&h| norm * legendre(k, 2.0 * (h - a) / len - 1.0))
                .collect()
        })
        .collect()
}

fn legendre(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return p0;
    }
    for n in 1..k {
        let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Ground-truth thrust model for one type.
#[derive(Debug, Clone)]
pub struct TruthModel {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    /// Standard deviation of each weight, N·m^½.
    pub weight_sd: Vec<f64>,
}

impl TruthModel {
    pub fn new(perf: &AircraftPerformance, scenario: &Scenario, ty: &TypeScenario) -> Result<Self> {
        let (a, b) = (fl_to_m(scenario.start_fl), fl_to_m(scenario.end_fl));
        let grid = uniform_grid(a, b, TRUTH_NODES);
        let mean = grid
            .iter()
            .map(|&h| perf.nominal_thrust(h).map(|t| (1.0 + ty.thrust_bias) * t))
            .collect::<Result<Vec<_>>>()?;
        let (lo, hi) = (fl_to_m(scenario.interval_fl[0]), fl_to_m(scenario.interval_fl[1]));
        let fit_grid = uniform_grid(lo, hi, 100);
        let q = trapezoid_weights(&fit_grid);
        let t_bar = fit_grid
            .iter()
            .zip(&q)
            .map(|(&h, w)| perf.nominal_thrust(h).map(|t| t * w))
            .sum::<Result<f64>>()?
            / (hi - lo);
        let weight_sd = ty.mode_sd_frac.iter().map(|f| f * t_bar * (b - a).sqrt()).collect();
        Ok(TruthModel {
            modes: legendre_modes(&grid, a, b, ty.mode_sd_frac.len()),
            grid,
            mean,
            weight_sd,
        })
    }

    pub fn profile(&self, w: &[f64]) -> ThrustProfile {
        let values = (0..self.grid.len())
            .map(|j| self.mean[j] + self.modes.iter().zip(w).map(|(m, wi)| m[j] * wi).sum::<f64>())
            .collect();
        ThrustProfile::new(self.grid.clone(), values).expect("truth grid is valid")
    }

    pub fn draw(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.weight_sd
            .iter()
            .map(|s| {
                let z: f64 = StandardNormal.sample(rng);
                s * z
            })
            .collect()
    }
}

/// Altitude (m) at elapsed time `t` along an integrated climb.
fn altitude_at(traj: &ClimbTrajectory, t: f64) -> f64 {
    let ts: Vec<f64> = traj.states.iter().map(|s| s.t).collect();
    let hs: Vec<f64> = traj.states.iter().map(|s| s.h).collect();
    interp_clamped(&ts, &hs, t)
}

fn sample_blips(
    climb: &ClimbTrajectory,
    scenario: &Scenario,
    level: Option<(f64, f64)>,
    rng: &mut ChaCha8Rng,
) -> Vec<Blip> {
    let dt = scenario.blip_interval_s;
    let phase = rng.random_range(0.0..dt);
    let t_level = level.and_then(|(alt_ft, _)| climb.time_at(alt_ft * FT_TO_M));
    let pause = level.map_or(0.0, |(_, d)| d);
    let end = climb.total_time() + pause;
    let noise = Normal::new(0.0, scenario.alt_noise_ft).expect("validated noise");
    let mut blips = Vec::new();
    let mut k = 0;
    loop {
        let t = phase + k as f64 * dt;
        if t > end {
            break;
        }
        k += 1;
        let t_climb = match t_level {
            Some(tl) if t > tl + pause => t - pause,
            Some(tl) if t > tl => tl,
            _ => t,
        };
        let mut alt = altitude_at(climb, t_climb) / FT_TO_M;
        if scenario.alt_noise_ft > 0.0 {
            alt += noise.sample(rng);
        }
        if scenario.quantization_ft > 0.0 {
            alt = (alt / scenario.quantization_ft).round() * scenario.quantization_ft;
        }
        blips.push(Blip {
            t: (t * 1000.0).round() / 1000.0,
            alt_ft: alt,
            lat: None,
            lon: None,
            rocd_fpm: 0.0,
        });
    }
    blips
}

/// Simulates every type in `scenario`. Deterministic in `seed`.
pub fn simulate_fleet(
    catalog: &PerformanceCatalog,
    scenario: &Scenario,
    seed: u64,
) -> Result<SimulatedFleet> {
    scenario.validate()?;
    let mut trajectories = Vec::new();
    let mut truth = BTreeMap::new();
    for (ti, ty) in scenario.types.iter().enumerate() {
        let perf = catalog.get(&ty.type_code).ok_or_else(|| {
            Error::Scenario(format!("type {} missing from the performance file", ty.type_code))
        })?;
        let cond = ClimbConditions::nominal(perf);
        let model = TruthModel::new(perf, scenario, ty)?;
        let (h0, h1) = (fl_to_m(scenario.start_fl), fl_to_m(scenario.end_fl));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ti as u64);
        for f in 0..ty.flights {
            let flight_id = format!("{}-{:05}", ty.type_code, f + 1);
            let mut attempt = 0;
            let (weights, climb) = loop {
                let w = model.draw(&mut rng);
                match integrate_climb(perf, &cond, &model.profile(&w), h0, h1) {
                    Ok(c) => break (w, c),
                    Err(Error::InfeasibleClimb { .. }) if attempt + 1 < MAX_REDRAWS => attempt += 1,
                    Err(Error::InfeasibleClimb { altitude_m, .. }) => {
                        return Err(Error::Scenario(format!(
                            "{flight_id}: no feasible profile in {MAX_REDRAWS} draws (last stalled at {altitude_m:.0} m)"
                        )))
                    }
                    Err(e) => return Err(e),
                }
            };
            let level = scenario.level_off.as_ref().and_then(|lo| {
                let u: f64 = rng.random();
                let alt = rng.random_range(lo.min_fl..=lo.max_fl) * 100.0;
                let dur = rng.random_range(lo.min_duration_s..=lo.max_duration_s);
                (u < lo.probability).then_some((alt, dur))
            });
            let blips = sample_blips(&climb, scenario, level, &mut rng);
            trajectories.push(Trajectory::from_returns(flight_id.clone(), ty.type_code.clone(), blips));
            truth.insert(
                flight_id,
                FlightTruth {
                    type_code: ty.type_code.clone(),
                    weights,
                    thrust_bias: ty.thrust_bias,
                    level_off: level,
                    redraws: attempt,
                },
            );
        }
    }
    trajectories.sort_by(|a, b| a.flight_id.cmp(&b.flight_id));
    Ok(SimulatedFleet { trajectories, truth })
}

pub fn truth_to_json(truth: &BTreeMap<String, FlightTruth>) -> String {
    let mut s = serde_json::to_string_pretty(truth).expect("truth serialises");
    s.push('\n');
    s
}
