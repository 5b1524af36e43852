//! Selection of flights that climb through the altitude interval.

use crate::learning::MIN_BLIPS;
use crate::pipeline::radar::{median3, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub fl_low: f64,
    pub fl_high: f64,
    /// ft/min
    pub rocd_min: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            fl_low: 150.0,
            fl_high: 325.0,
            rocd_min: 500.0,
        }
    }
}

/// A flight that climbed through the interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimbFlight {
    /// The complete track.
    pub track: Trajectory,
    /// Returns inside the interval with a climb rate above the threshold.
    pub interval: Trajectory,
    /// Time (s) of the upward crossing of the lower flight level.
    pub t_ref: f64,
}

impl ClimbFlight {
    pub fn flight_id(&self) -> &str {
        &self.track.flight_id
    }

    pub fn type_code(&self) -> &str {
        &self.track.type_code
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub flights: Vec<ClimbFlight>,
    pub not_climbing: usize,
    pub too_few_blips: usize,
}

/// Index range `(i_low, j_high)` of the climb through `[low, high]` ft:
/// `alt[j_high]` is the first value at or above `high`, `alt[i_low]` the last
/// value below `low` before it.
fn climb_through(alt: &[f64], low: f64, high: f64) -> Option<(usize, usize)> {
    let j_high = alt.iter().position(|&a| a >= high)?;
    let i_low = alt[..j_high].iter().rposition(|&a| a < low)?;
    Some((i_low, j_high))
}

fn crossing_time(t: &[f64], alt: &[f64], i: usize, level: f64) -> f64 {
    let frac = (level - alt[i]) / (alt[i + 1] - alt[i]);
    t[i] + frac * (t[i + 1] - t[i])
}

/// Time at which the track first climbs through `level_ft`, found on the
/// median-filtered altitude.
pub fn first_crossing(traj: &Trajectory, level_ft: f64) -> Option<f64> {
    let t: Vec<f64> = traj.blips.iter().map(|b| b.t).collect();
    let alt = median3(&traj.blips.iter().map(|b| b.alt_ft).collect::<Vec<_>>());
    (0..alt.len().saturating_sub(1))
        .find(|&i| alt[i] < level_ft && alt[i + 1] >= level_ft)
        .map(|i| crossing_time(&t, &alt, i, level_ft))
}

pub fn classify(traj: &Trajectory, cfg: &FilterConfig) -> Result<ClimbFlight, FilterReject> {
    let low = cfg.fl_low * 100.0;
    let high = cfg.fl_high * 100.0;
    let t: Vec<f64> = traj.blips.iter().map(|b| b.t).collect();
    let alt = median3(&traj.blips.iter().map(|b| b.alt_ft).collect::<Vec<_>>());
    let (i_low, j_high) = climb_through(&alt, low, high).ok_or(FilterReject::NotClimbing)?;
    let t_ref = crossing_time(&t, &alt, i_low, low);
    let blips: Vec<_> = traj.blips[i_low + 1..j_high]
        .iter()
        .filter(|b| (low..=high).contains(&b.alt_ft) && b.rocd_fpm >= cfg.rocd_min)
        .cloned()
        .collect();
    if blips.len() < MIN_BLIPS {
        return Err(FilterReject::TooFewBlips);
    }
    Ok(ClimbFlight {
        track: traj.clone(),
        interval: Trajectory {
            flight_id: traj.flight_id.clone(),
            type_code: traj.type_code.clone(),
            blips,
        },
        t_ref,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterReject {
    NotClimbing,
    TooFewBlips,
}

/// Keeps flights that climb through the interval, with their in-interval
/// climbing returns.
pub fn filter_climbs(trajectories: &[Trajectory], cfg: &FilterConfig) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for traj in trajectories {
        match classify(traj, cfg) {
            Ok(f) => out.flights.push(f),
            Err(FilterReject::NotClimbing) => out.not_climbing += 1,
            Err(FilterReject::TooFewBlips) => out.too_few_blips += 1,
        }
    }
    out
}
