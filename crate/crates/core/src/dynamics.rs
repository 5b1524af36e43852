//! Forward climb physics: drag, energy share factor, rate of climb and the
//! time-to-altitude integration of a climb through a thrust profile.

use std::cell::Cell;

use crate::atmosphere::{
    cas_to_tas, crossover_altitude, isa_state, mach_to_tas, AtmosphereState, SpeedSchedule,
    G0, KAPPA, LAPSE_RATE, R_AIR, TROPOPAUSE_M,
};
use crate::error::{Error, Result};
use crate::performance::AircraftPerformance;
use crate::profile::ThrustProfile;

/// Climbs slower than this (m/s) are treated as infeasible.
pub const ROCD_FLOOR: f64 = 0.5;
/// Uniform quadrature nodes used by [`integrate_climb`] unless overridden.
pub const DEFAULT_QUADRATURE_NODES: usize = 1000;

thread_local! {
    static INTEGRATOR_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of climb integrations performed on the current thread.
pub fn integrator_calls() -> u64 {
    INTEGRATOR_CALLS.with(Cell::get)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedRegime {
    ConstantCas,
    ConstantMach,
}

/// Which energy share law applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlightCondition {
    pub regime: SpeedRegime,
    pub above_tropopause: bool,
}

impl FlightCondition {
    /// Breakpoints belong to the segment above them.
    pub fn at(h: f64, crossover_h: f64) -> Self {
        FlightCondition {
            regime: if h >= crossover_h {
                SpeedRegime::ConstantMach
            } else {
                SpeedRegime::ConstantCas
            },
            above_tropopause: h >= TROPOPAUSE_M,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledSpeed {
    pub v_tas: f64,
    pub mach: f64,
    pub regime: SpeedRegime,
}

fn speed_in_regime(
    schedule: &SpeedSchedule,
    state: &AtmosphereState,
    regime: SpeedRegime,
) -> Result<ScheduledSpeed> {
    let v_tas = match regime {
        SpeedRegime::ConstantCas => cas_to_tas(schedule.v_cas, state)?,
        SpeedRegime::ConstantMach => mach_to_tas(schedule.mach, state)?,
    };
    Ok(ScheduledSpeed {
        v_tas,
        mach: v_tas / state.speed_of_sound(),
        regime,
    })
}

/// True airspeed and Mach number prescribed by `schedule` at the state's altitude.
pub fn schedule_speed(schedule: &SpeedSchedule, state: &AtmosphereState) -> Result<ScheduledSpeed> {
    let crossover = crossover_altitude(schedule)?;
    speed_in_regime(schedule, state, FlightCondition::at(state.h, crossover).regime)
}

/// Aerodynamic drag (N) with a parabolic drag polar. `phi` is the bank angle in radians.
pub fn drag(perf: &AircraftPerformance, mass: f64, state: &AtmosphereState, v_tas: f64, phi: f64) -> f64 {
    let q_s = 0.5 * state.rho * v_tas * v_tas * perf.wing_area;
    let c_l = mass * G0 / (q_s * phi.cos());
    q_s * (perf.c_d0 + perf.c_d2 * c_l * c_l)
}

fn energy_share_for(mach: f64, condition: FlightCondition) -> f64 {
    let lapse_term = KAPPA * R_AIR * LAPSE_RATE / (2.0 * G0) * mach * mach;
    match (condition.regime, condition.above_tropopause) {
        (SpeedRegime::ConstantMach, true) => 1.0,
        (SpeedRegime::ConstantMach, false) => 1.0 / (1.0 + lapse_term),
        (SpeedRegime::ConstantCas, above) => {
            let base = 1.0 + (KAPPA - 1.0) / 2.0 * mach * mach;
            let compress =
                base.powf(-1.0 / (KAPPA - 1.0)) * (base.powf(KAPPA / (KAPPA - 1.0)) - 1.0);
            let lapse = if above { 0.0 } else { lapse_term };
            1.0 / (1.0 + lapse + compress)
        }
    }
}

/// Energy share factor: the fraction of excess power spent on climbing.
pub fn energy_share(mach: f64, h: f64, schedule: &SpeedSchedule) -> Result<f64> {
    let crossover = crossover_altitude(schedule)?;
    Ok(energy_share_for(mach, FlightCondition::at(h, crossover)))
}

/// Mass and temperature offset a climb is flown at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimbConditions {
    pub mass: f64,
    pub delta_t: f64,
}

impl ClimbConditions {
    pub fn nominal(perf: &AircraftPerformance) -> Self {
        ClimbConditions {
            mass: perf.mass_nominal,
            delta_t: 0.0,
        }
    }
}

/// Everything needed to relate thrust and climb rate at one altitude under a
/// fixed flight condition.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointPerformance {
    pub state: AtmosphereState,
    pub speed: ScheduledSpeed,
    pub drag: f64,
    pub energy_share: f64,
}

impl PointPerformance {
    pub fn new(
        perf: &AircraftPerformance,
        cond: &ClimbConditions,
        h: f64,
        condition: FlightCondition,
    ) -> Result<Self> {
        let state = isa_state(h, cond.delta_t)?;
        let speed = speed_in_regime(&perf.schedule, &state, condition.regime)?;
        let drag = drag(perf, cond.mass, &state, speed.v_tas, 0.0);
        Ok(PointPerformance {
            state,
            speed,
            drag,
            energy_share: energy_share_for(speed.mach, condition),
        })
    }

    /// (T - ΔT) / T with T the ISA temperature.
    pub fn temperature_ratio(&self) -> f64 {
        (self.state.t_isa - self.state.delta_t) / self.state.t_isa
    }

    pub fn rocd(&self, mass: f64, t_hr: f64) -> f64 {
        self.temperature_ratio() * (t_hr - self.drag) * self.speed.v_tas / (mass * G0)
            * self.energy_share
    }
}

/// Rate of climb (m/s) produced by thrust `t_hr` at altitude `h`, flying the
/// nominal speed schedule. Negative values mean the thrust cannot hold level flight.
pub fn rocd(perf: &AircraftPerformance, cond: &ClimbConditions, t_hr: f64, h: f64) -> Result<f64> {
    let crossover = crossover_altitude(&perf.schedule)?;
    let point = PointPerformance::new(perf, cond, h, FlightCondition::at(h, crossover))?;
    Ok(point.rocd(cond.mass, t_hr))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimbState {
    /// m
    pub h: f64,
    /// s since the start of the climb
    pub t: f64,
    /// m/s
    pub v_tas: f64,
    /// m/s
    pub rocd: f64,
}

/// Time-at-altitude history of an integrated climb.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimbTrajectory {
    pub states: Vec<ClimbState>,
    /// Altitude at which the climb rate fell below [`ROCD_FLOOR`], when the
    /// integration was allowed to stop early.
    pub stalled_at: Option<f64>,
}

impl ClimbTrajectory {
    pub fn start_altitude(&self) -> f64 {
        self.states[0].h
    }

    pub fn end_altitude(&self) -> f64 {
        self.states[self.states.len() - 1].h
    }

    pub fn total_time(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    /// Elapsed time when the climb passes `h`. Altitudes above a stall point
    /// are never reached and give `+inf`; altitudes outside the integrated
    /// range otherwise give `None`.
    pub fn time_at(&self, h: f64) -> Option<f64> {
        if !h.is_finite() {
            return None;
        }
        let (Some(first), Some(last)) = (self.states.first(), self.states.last()) else {
            // Stalled at the first node.
            return self.stalled_at.filter(|&s| h >= s).map(|_| f64::INFINITY);
        };
        if h < first.h {
            return None;
        }
        if h > last.h {
            return match self.stalled_at {
                Some(_) => Some(f64::INFINITY),
                None => None,
            };
        }
        let idx = self.states.partition_point(|s| s.h < h);
        if idx == 0 {
            return Some(first.t);
        }
        let (a, b) = (&self.states[idx - 1], &self.states[idx]);
        let frac = (h - a.h) / (b.h - a.h);
        Some(a.t + frac * (b.t - a.t))
    }
}

/// Integration nodes: a uniform refinement of `[h_start, h_end]` merged with
/// the profile grid and the flight-condition breakpoints, split into segments
/// at the breakpoints.
fn quadrature_segments(
    h_start: f64,
    h_end: f64,
    nodes: usize,
    profile_grid: &[f64],
    breakpoints: &[f64],
) -> Vec<Vec<f64>> {
    let span = h_end - h_start;
    let mut all: Vec<f64> = (0..nodes)
        .map(|i| h_start + span * i as f64 / (nodes - 1) as f64)
        .collect();
    all.extend(profile_grid.iter().copied().filter(|&h| h > h_start && h < h_end));
    let cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&h| h > h_start && h < h_end)
        .collect();
    all.extend(cuts.iter().copied());
    all.sort_by(f64::total_cmp);
    let tol = 1e-9 * span.abs().max(1.0);
    all.dedup_by(|a, b| (*a - *b).abs() <= tol);
    // keep the exact end points after dedup
    *all.last_mut().unwrap() = h_end;
    all[0] = h_start;

    let mut segments = Vec::new();
    let mut current = Vec::new();
    for h in all {
        current.push(h);
        if cuts.iter().any(|&c| (c - h).abs() <= tol) {
            segments.push(std::mem::take(&mut current));
            current.push(h);
        }
    }
    segments.push(current);
    segments
}

fn integrate(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    profile: &ThrustProfile,
    h_start: f64,
    h_end: f64,
    nodes: usize,
    allow_stall: bool,
) -> Result<ClimbTrajectory> {
    INTEGRATOR_CALLS.with(|c| c.set(c.get() + 1));
    if !(h_start < h_end) {
        return Err(Error::Domain(format!(
            "climb must go upwards: start {h_start} m, end {h_end} m"
        )));
    }
    if nodes < 2 {
        return Err(Error::Domain("need at least two quadrature nodes".into()));
    }
    let tol = 1e-6 * (h_end - h_start);
    if profile.lower() > h_start + tol || profile.upper() < h_end - tol {
        return Err(Error::Domain(format!(
            "thrust profile [{:.1}, {:.1}] m does not cover [{h_start:.1}, {h_end:.1}] m",
            profile.lower(),
            profile.upper()
        )));
    }
    let crossover = crossover_altitude(&perf.schedule)?;
    let segments = quadrature_segments(
        h_start,
        h_end,
        nodes,
        profile.grid(),
        &[crossover, TROPOPAUSE_M],
    );

    let mut states: Vec<ClimbState> = Vec::with_capacity(nodes + profile.len() + 4);
    let mut t = 0.0;
    let n_segments = segments.len();
    for (si, seg) in segments.iter().enumerate() {
        let mid = 0.5 * (seg[0] + seg[seg.len() - 1]);
        let condition = FlightCondition::at(mid, crossover);
        let mut prev: Option<(f64, f64)> = None;
        for (ni, &h) in seg.iter().enumerate() {
            let point = PointPerformance::new(perf, cond, h, condition)?;
            let r = point.rocd(cond.mass, profile.value_at(h));
            if !(r > ROCD_FLOOR) {
                if allow_stall {
                    return Ok(ClimbTrajectory {
                        states,
                        stalled_at: Some(h),
                    });
                }
                return Err(Error::InfeasibleClimb {
                    altitude_m: h,
                    rocd_ms: r,
                });
            }
            if let Some((h0, r0)) = prev {
                t += 0.5 * (h - h0) * (1.0 / r0 + 1.0 / r);
            }
            prev = Some((h, r));
            let is_last = ni + 1 == seg.len();
            if !is_last || si + 1 == n_segments {
                states.push(ClimbState {
                    h,
                    t,
                    v_tas: point.speed.v_tas,
                    rocd: r,
                });
            }
        }
    }
    Ok(ClimbTrajectory {
        states,
        stalled_at: None,
    })
}

/// Integrates `dt = dh / ROCD(h)` from `h_start` (t = 0) to `h_end`, with
/// thrust interpolated linearly from `profile`, using the default refinement.
pub fn integrate_climb(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    profile: &ThrustProfile,
    h_start: f64,
    h_end: f64,
) -> Result<ClimbTrajectory> {
    integrate(perf, cond, profile, h_start, h_end, DEFAULT_QUADRATURE_NODES, false)
}

/// As [`integrate_climb`] with an explicit number of uniform quadrature nodes.
pub fn integrate_climb_with_nodes(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    profile: &ThrustProfile,
    h_start: f64,
    h_end: f64,
    nodes: usize,
) -> Result<ClimbTrajectory> {
    integrate(perf, cond, profile, h_start, h_end, nodes, false)
}

/// Like [`integrate_climb`], but a climb that becomes infeasible stops at the
/// failing altitude instead of erroring; see [`ClimbTrajectory::stalled_at`].
pub fn integrate_climb_until_stall(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    profile: &ThrustProfile,
    h_start: f64,
    h_end: f64,
) -> Result<ClimbTrajectory> {
    integrate(perf, cond, profile, h_start, h_end, DEFAULT_QUADRATURE_NODES, true)
}
