//! Per-type aircraft performance coefficients and the nominal thrust profile.
//!
//! Catalogs are stored as TOML, one `[[aircraft]]` table per type. See
//! `data/performance.toml` for the shipped (synthetic) parameter sets.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atmosphere::{isa_state, SpeedSchedule, MAX_ALTITUDE_M};
use crate::dynamics::{drag, schedule_speed};
use crate::error::{Error, Result};

const SHIPPED_CATALOG: &str = include_str!("../data/performance.toml");

/// Max-climb thrust coefficients for `T = c_t1 * (1 - h / c_t2 + c_t3 * h^2)`, h in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustCoefficients {
    pub c_t1: f64,
    pub c_t2: f64,
    pub c_t3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AircraftPerformance {
    pub type_code: String,
    pub c_d0: f64,
    pub c_d2: f64,
    /// Reference wing area, m².
    pub wing_area: f64,
    /// Nominal mass, kg.
    pub mass_nominal: f64,
    pub schedule: SpeedSchedule,
    pub thrust: ThrustCoefficients,
}

/// On-disk record. Field names are part of the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerformanceRecord {
    type_code: String,
    #[serde(rename = "c_D0")]
    c_d0: f64,
    #[serde(rename = "c_D2")]
    c_d2: f64,
    #[serde(rename = "S_m2")]
    s_m2: f64,
    m_nom_kg: f64,
    v_cas_ms: f64,
    mach: f64,
    #[serde(rename = "c_T1_N")]
    c_t1_n: f64,
    #[serde(rename = "c_T2_m")]
    c_t2_m: f64,
    #[serde(rename = "c_T3_per_m2")]
    c_t3_per_m2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    aircraft: Vec<PerformanceRecord>,
}

impl From<&AircraftPerformance> for PerformanceRecord {
    fn from(p: &AircraftPerformance) -> Self {
        PerformanceRecord {
            type_code: p.type_code.clone(),
            c_d0: p.c_d0,
            c_d2: p.c_d2,
            s_m2: p.wing_area,
            m_nom_kg: p.mass_nominal,
            v_cas_ms: p.schedule.v_cas,
            mach: p.schedule.mach,
            c_t1_n: p.thrust.c_t1,
            c_t2_m: p.thrust.c_t2,
            c_t3_per_m2: p.thrust.c_t3,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be positive, got {v}")))
    }
}

impl AircraftPerformance {
    fn from_record(r: PerformanceRecord) -> Result<Self> {
        let p = AircraftPerformance {
            type_code: r.type_code,
            c_d0: r.c_d0,
            c_d2: r.c_d2,
            wing_area: r.s_m2,
            mass_nominal: r.m_nom_kg,
            schedule: SpeedSchedule {
                v_cas: r.v_cas_ms,
                mach: r.mach,
            },
            thrust: ThrustCoefficients {
                c_t1: r.c_t1_n,
                c_t2: r.c_t2_m,
                c_t3: r.c_t3_per_m2,
            },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |e: Error| match e {
            Error::Validation { field, reason } => Error::Validation {
                field: format!("{}.{field}", self.type_code),
                reason,
            },
            other => other,
        };
        if self.type_code.trim().is_empty() {
            return Err(Error::validation("type_code", "must not be empty"));
        }
        positive("c_D0", self.c_d0).map_err(ctx)?;
        positive("c_D2", self.c_d2).map_err(ctx)?;
        positive("S_m2", self.wing_area).map_err(ctx)?;
        positive("m_nom_kg", self.mass_nominal).map_err(ctx)?;
        positive("c_T1_N", self.thrust.c_t1).map_err(ctx)?;
        positive("c_T2_m", self.thrust.c_t2).map_err(ctx)?;
        if !self.thrust.c_t3.is_finite() {
            return Err(ctx(Error::validation("c_T3_per_m2", "must be finite")));
        }
        self.schedule.validate().map_err(ctx)?;
        Ok(())
    }

    /// Nominal max-climb thrust at altitude `h` (m), in newtons.
    pub fn nominal_thrust(&self, h: f64) -> Result<f64> {
        if !h.is_finite() || !(0.0..=MAX_ALTITUDE_M).contains(&h) {
            return Err(Error::Domain(format!(
                "altitude {h} m outside [0, {MAX_ALTITUDE_M}] m"
            )));
        }
        let ThrustCoefficients { c_t1, c_t2, c_t3 } = self.thrust;
        let t = c_t1 * (1.0 - h / c_t2 + c_t3 * h * h);
        if t <= 0.0 {
            return Err(Error::ModelValidity(format!(
                "{}: nominal thrust {t:.1} N at {h:.1} m is not positive",
                self.type_code
            )));
        }
        Ok(t)
    }

    /// Thrust that holds level flight (zero climb rate): the drag at nominal
    /// mass and scheduled speed.
    pub fn min_level_thrust(&self, h: f64, delta_t: f64) -> Result<f64> {
        let state = isa_state(h, delta_t)?;
        let speed = schedule_speed(&self.schedule, &state)?;
        Ok(drag(self, self.mass_nominal, &state, speed.v_tas, 0.0))
    }
}

/// Performance parameters keyed by type code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerformanceCatalog {
    entries: BTreeMap<String, AircraftPerformance>,
}

impl PerformanceCatalog {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("performance file")
                .to_string();
            Error::validation(field, e.to_string())
        })?;
        let mut entries = BTreeMap::new();
        for record in file.aircraft {
            let perf = AircraftPerformance::from_record(record)?;
            if entries.contains_key(&perf.type_code) {
                return Err(Error::validation(
                    "type_code",
                    format!("duplicate type code {}", perf.type_code),
                ));
            }
            entries.insert(perf.type_code.clone(), perf);
        }
        Ok(PerformanceCatalog { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// The synthetic parameter sets bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_toml_str(SHIPPED_CATALOG).expect("bundled performance file is valid")
    }

    pub fn to_toml_string(&self) -> String {
        let file = CatalogFile {
            aircraft: self.entries.values().map(PerformanceRecord::from).collect(),
        };
        toml::to_string(&file).expect("catalog serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    pub fn insert(&mut self, perf: AircraftPerformance) -> Result<()> {
        perf.validate()?;
        if self.entries.contains_key(&perf.type_code) {
            return Err(Error::validation(
                "type_code",
                format!("duplicate type code {}", perf.type_code),
            ));
        }
        self.entries.insert(perf.type_code.clone(), perf);
        Ok(())
    }

    pub fn get(&self, type_code: &str) -> Option<&AircraftPerformance> {
        self.entries.get(type_code)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AircraftPerformance> {
        self.entries.values()
    }

    pub fn type_codes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
