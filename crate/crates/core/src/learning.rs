//! Effective thrust recovered from observed climb rates.

use crate::atmosphere::{crossover_altitude, FT_TO_M, G0};
use crate::dynamics::{ClimbConditions, FlightCondition, PointPerformance};
use crate::error::{Error, Result};
use crate::performance::AircraftPerformance;
use crate::pipeline::radar::Trajectory;
use crate::profile::{interp_clamped, ThrustProfile};

/// Fewest in-interval returns a flight must contribute.
pub const MIN_BLIPS: usize = 4;

fn invert_at(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    point: &PointPerformance,
    rocd_obs: f64,
) -> Result<f64> {
    let f = point.energy_share;
    let t = point.state.t_isa;
    let t_minus_dt = t - cond.delta_t;
    if f == 0.0 || !f.is_finite() || t_minus_dt <= 0.0 {
        return Err(Error::Degenerate(format!(
            "cannot invert at h={} m: f={f}, T-dT={t_minus_dt}",
            point.state.h
        )));
    }
    let (rho, v, s, m) = (point.state.rho, point.speed.v_tas, perf.wing_area, cond.mass);
    let induced = 2.0 * G0 * G0 * perf.c_d2 / (rho * v * s) * m * m;
    let climb = rocd_obs * t / (f * t_minus_dt) * m * G0;
    let parasitic = 0.5 * perf.c_d0 * rho * v * v * v * s;
    Ok((induced + climb + parasitic) / v)
}

/// Thrust (N) that makes the forward model produce `rocd_obs` (m/s) at `h` (m).
pub fn invert_thrust(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    rocd_obs: f64,
    h: f64,
) -> Result<f64> {
    if !rocd_obs.is_finite() {
        return Err(Error::validation("rocd_obs", "must be finite"));
    }
    let crossover = crossover_altitude(&perf.schedule)?;
    let point = PointPerformance::new(perf, cond, h, FlightCondition::at(h, crossover))?;
    invert_at(perf, cond, &point, rocd_obs)
}

/// Per-flight effective thrust on `grid`: each return inside the grid span
/// is inverted, and the results are interpolated linearly in altitude with
/// clamping beyond the covered range. Returns sharing an altitude are averaged.
pub fn profile_from_flight(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    traj: &Trajectory,
    grid: &[f64],
) -> Result<ThrustProfile> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for b in &traj.blips {
        let h = b.alt_ft * FT_TO_M;
        if h < lo || h > hi {
            continue;
        }
        let rocd = b.rocd_fpm * FT_TO_M / 60.0;
        points.push((h, invert_thrust(perf, cond, rocd, h)?));
    }
    if points.len() < MIN_BLIPS {
        return Err(Error::FlightRejected {
            flight_id: traj.flight_id.clone(),
            reason: format!("{} returns in the altitude interval, need {MIN_BLIPS}", points.len()),
        });
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut xs: Vec<f64> = Vec::with_capacity(points.len());
    let mut ys: Vec<f64> = Vec::with_capacity(points.len());
    let mut i = 0;
    while i < points.len() {
        let mut j = i;
        let mut sum = 0.0;
        while j < points.len() && points[j].0 == points[i].0 {
            sum += points[j].1;
            j += 1;
        }
        xs.push(points[i].0);
        ys.push(sum / (j - i) as f64);
        i = j;
    }
    if xs.len() < 2 {
        return Err(Error::FlightRejected {
            flight_id: traj.flight_id.clone(),
            reason: "all returns at a single altitude".into(),
        });
    }
    let values = grid.iter().map(|&h| interp_clamped(&xs, &ys, h)).collect();
    ThrustProfile::new(grid.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::fl_to_m;
    use crate::dynamics::{drag, rocd, schedule_speed};
    use crate::performance::PerformanceCatalog;
    use crate::pipeline::radar::Blip;
    use crate::profile::uniform_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn perf(code: &str) -> AircraftPerformance {
        PerformanceCatalog::shipped().get(code).unwrap().clone()
    }

    #[test]
    fn zero_climb_gives_level_thrust() {
        let p = perf("B738");
        let c = ClimbConditions::nominal(&p);
        for h in [fl_to_m(150.0), fl_to_m(250.0), fl_to_m(325.0)] {
            let t = invert_thrust(&p, &c, 0.0, h).unwrap();
            assert_relative_eq!(t, p.min_level_thrust(h, 0.0).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn round_trip_at_reference_rates() {
        let p = perf("B738");
        let c = ClimbConditions { mass: 60_000.0, delta_t: 7.0 };
        for h in [fl_to_m(160.0), fl_to_m(290.0), fl_to_m(320.0)] {
            for r in [2.54, 10.0, 20.0] {
                let t = invert_thrust(&p, &c, r, h).unwrap();
                assert_relative_eq!(rocd(&p, &c, t, h).unwrap(), r, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn slope_in_rocd_matches_formula() {
        let p = perf("C56X");
        let c = ClimbConditions { mass: 7500.0, delta_t: -4.0 };
        let h = fl_to_m(210.0);
        let t0 = invert_thrust(&p, &c, 0.0, h).unwrap();
        let t1 = invert_thrust(&p, &c, 1.0, h).unwrap();
        let t5 = invert_thrust(&p, &c, 5.0, h).unwrap();
        let st = crate::atmosphere::isa_state(h, c.delta_t).unwrap();
        let sp = schedule_speed(&p.schedule, &st).unwrap();
        let f = crate::dynamics::energy_share(sp.mach, h, &p.schedule).unwrap();
        let slope = st.t_isa * c.mass * G0 / (f * (st.t_isa - c.delta_t) * sp.v_tas);
        assert_relative_eq!(t1 - t0, slope, max_relative = 1e-9);
        assert_relative_eq!(t5 - t0, 5.0 * slope, max_relative = 1e-9);
        assert_relative_eq!(t0, drag(&p, c.mass, &st, sp.v_tas, 0.0), max_relative = 1e-12);
    }

    #[test]
    fn degenerate_temperature_is_rejected() {
        let p = perf("B738");
        let c = ClimbConditions { mass: 60_000.0, delta_t: 300.0 };
        assert!(matches!(
            invert_thrust(&p, &c, 5.0, fl_to_m(200.0)),
            Err(Error::Degenerate(_)) | Err(Error::Domain(_))
        ));
        assert!(invert_thrust(&p, &ClimbConditions::nominal(&p), f64::NAN, 5000.0).is_err());
    }

    fn flight(alts_ft: &[f64], rocd_fpm: f64) -> Trajectory {
        Trajectory {
            flight_id: "T".into(),
            type_code: "B738".into(),
            blips: alts_ft
                .iter()
                .enumerate()
                .map(|(i, &a)| Blip { t: i as f64, alt_ft: a, lat: None, lon: None, rocd_fpm })
                .collect(),
        }
    }

    #[test]
    fn blips_on_nodes_reproduce_pointwise_inversion() {
        let p = perf("B738");
        let c = ClimbConditions::nominal(&p);
        let grid = uniform_grid(fl_to_m(150.0), fl_to_m(325.0), 8);
        let alts: Vec<f64> = grid.iter().map(|h| h / FT_TO_M).collect();
        let prof = profile_from_flight(&p, &c, &flight(&alts, 2000.0), &grid).unwrap();
        for (k, &h) in grid.iter().enumerate() {
            let h_back = alts[k] * FT_TO_M;
            let t = invert_thrust(&p, &c, 2000.0 * FT_TO_M / 60.0, h_back).unwrap();
            assert_relative_eq!(prof.values()[k], t, max_relative = 1e-9);
            assert_relative_eq!(h_back, h, max_relative = 1e-12);
        }
    }

    #[test]
    fn too_few_blips_is_rejected() {
        let p = perf("B738");
        let c = ClimbConditions::nominal(&p);
        let grid = uniform_grid(fl_to_m(150.0), fl_to_m(325.0), 100);
        let r = profile_from_flight(&p, &c, &flight(&[16_000.0, 20_000.0, 24_000.0, 40_000.0], 1500.0), &grid);
        assert!(matches!(r, Err(Error::FlightRejected { .. })));
    }

    #[test]
    fn partial_coverage_is_clamped() {
        let p = perf("B738");
        let c = ClimbConditions::nominal(&p);
        let grid = uniform_grid(fl_to_m(150.0), fl_to_m(325.0), 100);
        let alts = [20_000.0, 21_000.0, 22_000.0, 23_000.0, 24_000.0];
        let prof = profile_from_flight(&p, &c, &flight(&alts, 1500.0), &grid).unwrap();
        let first = invert_thrust(&p, &c, 1500.0 * FT_TO_M / 60.0, 20_000.0 * FT_TO_M).unwrap();
        let last = invert_thrust(&p, &c, 1500.0 * FT_TO_M / 60.0, 24_000.0 * FT_TO_M).unwrap();
        assert_eq!(prof.values()[0], first);
        assert_eq!(prof.values()[99], last);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn inversion_round_trip(
            code in prop::sample::select(vec!["B738", "B772", "C56X"]),
            mass_frac in 0.8f64..1.15,
            delta_t in -15.0f64..15.0,
            fl in 150.0f64..325.0,
            r in 0.5f64..25.0,
        ) {
            let p = perf(code);
            let c = ClimbConditions { mass: p.mass_nominal * mass_frac, delta_t };
            let h = fl_to_m(fl);
            let t = invert_thrust(&p, &c, r, h).unwrap();
            let back = rocd(&p, &c, t, h).unwrap();
            prop_assert!((back - r).abs() <= 1e-9 * r);
        }
    }
}
