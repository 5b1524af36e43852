//! International Standard Atmosphere (troposphere + lower stratosphere) with a
//! temperature offset, and the airspeed conversions used by the climb model.
//!
//! Pressure always follows the unmodified ISA profile; the temperature offset
//! only enters the temperature used for density and the speed of sound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravitational acceleration, m/s².
pub const G0: f64 = 9.80665;
/// Specific gas constant of dry air, J/(kg·K).
pub const R_AIR: f64 = 287.05287;
/// Ratio of specific heats for air.
pub const KAPPA: f64 = 1.4;
/// Tropospheric temperature gradient, K/m.
pub const LAPSE_RATE: f64 = -0.0065;
pub const T0: f64 = 288.15;
pub const P0: f64 = 101_325.0;
pub const RHO0: f64 = P0 / (R_AIR * T0);
pub const TROPOPAUSE_M: f64 = 11_000.0;
pub const T_TROPOPAUSE: f64 = T0 + LAPSE_RATE * TROPOPAUSE_M;
/// Upper end of the altitude range the model is defined on.
pub const MAX_ALTITUDE_M: f64 = 20_000.0;

pub const FT_TO_M: f64 = 0.3048;

const MU: f64 = (KAPPA - 1.0) / KAPPA;

/// Flight level (hundreds of feet) to metres.
pub fn fl_to_m(fl: f64) -> f64 {
    fl * 100.0 * FT_TO_M
}

pub fn m_to_fl(h: f64) -> f64 {
    h / FT_TO_M / 100.0
}

fn p_tropopause() -> f64 {
    P0 * (T_TROPOPAUSE / T0).powf(-G0 / (LAPSE_RATE * R_AIR))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereState {
    /// Altitude, m.
    pub h: f64,
    /// ISA temperature (without offset), K.
    pub t_isa: f64,
    /// Temperature offset from ISA, K.
    pub delta_t: f64,
    /// Static pressure, Pa.
    pub p: f64,
    /// Density, kg/m³.
    pub rho: f64,
}

impl AtmosphereState {
    /// Actual air temperature, `t_isa + delta_t`.
    pub fn temperature(&self) -> f64 {
        self.t_isa + self.delta_t
    }

    pub fn speed_of_sound(&self) -> f64 {
        (KAPPA * R_AIR * self.temperature()).sqrt()
    }
}

pub fn isa_state(h: f64, delta_t: f64) -> Result<AtmosphereState> {
    if !h.is_finite() || !(0.0..=MAX_ALTITUDE_M).contains(&h) {
        return Err(Error::Domain(format!(
            "altitude {h} m outside [0, {MAX_ALTITUDE_M}] m"
        )));
    }
    if !delta_t.is_finite() {
        return Err(Error::Domain("non-finite temperature offset".into()));
    }
    let (t_isa, p) = if h <= TROPOPAUSE_M {
        let t = T0 + LAPSE_RATE * h;
        (t, P0 * (t / T0).powf(-G0 / (LAPSE_RATE * R_AIR)))
    } else {
        let p = p_tropopause() * (-G0 / (R_AIR * T_TROPOPAUSE) * (h - TROPOPAUSE_M)).exp();
        (T_TROPOPAUSE, p)
    };
    let t = t_isa + delta_t;
    if t <= 0.0 {
        return Err(Error::Domain(format!(
            "temperature offset {delta_t} K gives non-positive temperature"
        )));
    }
    Ok(AtmosphereState {
        h,
        t_isa,
        delta_t,
        p,
        rho: p / (R_AIR * t),
    })
}

/// Inverse of the ISA pressure profile. Returns the altitude (unclamped) at
/// which the standard pressure equals `p`.
pub fn pressure_altitude(p: f64) -> f64 {
    let p_trop = p_tropopause();
    if p >= p_trop {
        let t = T0 * (p / P0).powf(-LAPSE_RATE * R_AIR / G0);
        (t - T0) / LAPSE_RATE
    } else {
        TROPOPAUSE_M - R_AIR * T_TROPOPAUSE / G0 * (p / p_trop).ln()
    }
}

/// Compressible CAS to TAS conversion.
pub fn cas_to_tas(v_cas: f64, state: &AtmosphereState) -> Result<f64> {
    if !v_cas.is_finite() || v_cas <= 0.0 {
        return Err(Error::Domain(format!("calibrated airspeed {v_cas} m/s")));
    }
    let (p, rho) = (state.p, state.rho);
    let impact = (1.0 + MU * RHO0 * v_cas * v_cas / (2.0 * P0)).powf(1.0 / MU) - 1.0;
    let inner = (1.0 + P0 / p * impact).powf(MU) - 1.0;
    Ok((2.0 * p / (MU * rho) * inner).sqrt())
}

pub fn mach_to_tas(mach: f64, state: &AtmosphereState) -> Result<f64> {
    if !mach.is_finite() || mach < 0.0 {
        return Err(Error::Domain(format!("Mach number {mach}")));
    }
    Ok(mach * state.speed_of_sound())
}

/// Nominal climb speed schedule: constant CAS up to the crossover altitude,
/// constant Mach above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSchedule {
    /// m/s
    pub v_cas: f64,
    pub mach: f64,
}

impl SpeedSchedule {
    pub fn new(v_cas: f64, mach: f64) -> Result<Self> {
        let s = SpeedSchedule { v_cas, mach };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_cas.is_finite() && self.v_cas > 0.0) {
            return Err(Error::validation("v_cas_ms", "must be positive"));
        }
        if !(self.mach > 0.0 && self.mach < 1.0) {
            return Err(Error::validation("mach", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Altitude at which the CAS leg and the Mach leg of `schedule` give the same
/// true airspeed. The crossover is a pressure level and so does not depend on
/// the temperature offset.
pub fn crossover_altitude(schedule: &SpeedSchedule) -> Result<f64> {
    schedule.validate()?;
    let a0_sq = KAPPA * R_AIR * T0;
    let half = (KAPPA - 1.0) / 2.0;
    let exponent = KAPPA / (KAPPA - 1.0);
    let cas_term = (1.0 + half * schedule.v_cas * schedule.v_cas / a0_sq).powf(exponent) - 1.0;
    let mach_term = (1.0 + half * schedule.mach * schedule.mach).powf(exponent) - 1.0;
    let p_trans = P0 * cas_term / mach_term;
    let h = pressure_altitude(p_trans);
    if !h.is_finite() || !(0.0..=MAX_ALTITUDE_M).contains(&h) {
        return Err(Error::Domain(format!(
            "crossover altitude {h:.1} m for CAS {} m/s / M{} lies outside [0, {MAX_ALTITUDE_M}] m",
            schedule.v_cas, schedule.mach
        )));
    }
    Ok(h)
}
