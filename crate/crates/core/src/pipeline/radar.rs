//! Radar tracks: CSV ingestion, per-blip climb-rate estimation and writing
//! tracks back out in the same schema.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Highest altitude (ft) accepted from a radar return.
pub const MAX_ALT_FT: f64 = 60_000.0;

const REQUIRED_HEADER: [&str; 4] = ["flight_id", "type_code", "t_s", "alt_ft"];

/// One radar return.
#[derive(Debug, Clone, PartialEq)]
pub struct Blip {
    /// Timestamp, s.
    pub t: f64,
    /// Pressure altitude, ft.
    pub alt_ft: f64,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    /// Derived rate of climb, ft/min.
    pub rocd_fpm: f64,
}

/// Time-ordered returns of one flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub flight_id: String,
    pub type_code: String,
    pub blips: Vec<Blip>,
}

impl Trajectory {
    /// Builds a trajectory from unordered returns: sorts by time, keeps the
    /// first return of any duplicated timestamp and derives climb rates.
    pub fn from_returns(flight_id: String, type_code: String, mut blips: Vec<Blip>) -> Self {
        blips.sort_by(|a, b| a.t.total_cmp(&b.t));
        blips.dedup_by(|later, earlier| later.t == earlier.t);
        let rocd = estimate_rocd(
            &blips.iter().map(|b| b.t).collect::<Vec<_>>(),
            &blips.iter().map(|b| b.alt_ft).collect::<Vec<_>>(),
        );
        for (b, r) in blips.iter_mut().zip(rocd) {
            b.rocd_fpm = r;
        }
        Trajectory {
            flight_id,
            type_code,
            blips,
        }
    }
}

/// Rate of climb (ft/min) at each sample: central differences in the
/// interior, one-sided at the ends, followed by a 3-point running median.
pub fn estimate_rocd(t: &[f64], alt_ft: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let slope = |i: usize, j: usize| (alt_ft[j] - alt_ft[i]) / (t[j] - t[i]) * 60.0;
    let raw: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => slope(0, 1),
            i if i + 1 == n => slope(n - 2, n - 1),
            i => slope(i - 1, i + 1),
        })
        .collect();
    median3(&raw)
}

/// 3-point running median; the end points are kept as they are.
pub fn median3(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = x.to_vec();
    for i in 1..n.saturating_sub(1) {
        let mut w = [x[i - 1], x[i], x[i + 1]];
        w.sort_by(f64::total_cmp);
        out[i] = w[1];
    }
    out
}

#[derive(Debug, Deserialize)]
struct Row {
    flight_id: String,
    type_code: String,
    t_s: f64,
    alt_ft: f64,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
}

/// Result of reading a radar CSV.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    /// One trajectory per flight, ordered by flight id.
    pub trajectories: Vec<Trajectory>,
    pub rows_read: usize,
    /// (line number, reason) for every malformed row that was skipped.
    pub skipped: Vec<(u64, String)>,
}

fn check_header(path: &Path, headers: &csv::StringRecord) -> Result<()> {
    let names: Vec<&str> = headers.iter().collect();
    let ok_base = names.len() >= 4 && names[..4] == REQUIRED_HEADER;
    let ok_tail = match &names[4.min(names.len())..] {
        [] => true,
        ["lat", "lon"] => true,
        _ => false,
    };
    if ok_base && ok_tail {
        Ok(())
    } else {
        Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!(
                "header must be flight_id,type_code,t_s,alt_ft[,lat,lon], found {}",
                names.join(",")
            ),
        })
    }
}

pub fn ingest_reader<R: std::io::Read>(path: &Path, reader: R) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        Ok(_) => {
            return Err(Error::InsufficientData(format!("{} is empty", path.display())));
        }
        Err(e) => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                reason: e.to_string(),
            })
        }
    };
    check_header(path, &headers)?;

    let mut by_flight: BTreeMap<String, (String, Vec<Blip>)> = BTreeMap::new();
    let mut report = IngestReport::default();
    for (idx, rec) in rdr.records().enumerate() {
        let line = rec
            .as_ref()
            .ok()
            .and_then(|r| r.position().map(|p| p.line()))
            .unwrap_or(idx as u64 + 2);
        report.rows_read += 1;
        let row: std::result::Result<Row, String> = rec
            .map_err(|e| e.to_string())
            .and_then(|r| r.deserialize(Some(&headers)).map_err(|e| e.to_string()));
        let row = match row {
            Ok(row) => row,
            Err(reason) => {
                warn!("{}:{line}: skipping malformed row: {reason}", path.display());
                report.skipped.push((line, reason));
                continue;
            }
        };
        let invalid = if !row.t_s.is_finite() {
            Some("timestamp is not finite".to_string())
        } else if !(0.0..=MAX_ALT_FT).contains(&row.alt_ft) {
            Some(format!("altitude {} ft outside [0, {MAX_ALT_FT}]", row.alt_ft))
        } else if row.flight_id.is_empty() || row.type_code.is_empty() {
            Some("empty flight_id or type_code".to_string())
        } else {
            None
        };
        if let Some(reason) = invalid {
            warn!("{}:{line}: skipping row: {reason}", path.display());
            report.skipped.push((line, reason));
            continue;
        }
        let entry = by_flight
            .entry(row.flight_id.clone())
            .or_insert_with(|| (row.type_code.clone(), Vec::new()));
        if entry.0 != row.type_code {
            let reason = format!(
                "flight {} changes type from {} to {}",
                row.flight_id, entry.0, row.type_code
            );
            report.skipped.push((line, reason));
            continue;
        }
        entry.1.push(Blip {
            t: row.t_s,
            alt_ft: row.alt_ft,
            lat: row.lat,
            lon: row.lon,
            rocd_fpm: 0.0,
        });
    }
    if report.rows_read == 0 {
        return Err(Error::InsufficientData(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    report.trajectories = by_flight
        .into_iter()
        .map(|(id, (ty, blips))| Trajectory::from_returns(id, ty, blips))
        .collect();
    Ok(report)
}

/// Reads a radar CSV and groups it into per-flight trajectories.
pub fn ingest(path: &Path) -> Result<IngestReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(path, std::io::BufReader::new(file))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes trajectories in the ingest schema. Lat/lon columns are emitted only
/// when at least one blip carries a position.
pub fn write_csv<W: Write>(out: W, trajectories: &[Trajectory]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    let with_pos = trajectories
        .iter()
        .flat_map(|t| &t.blips)
        .any(|b| b.lat.is_some() || b.lon.is_some());
    if with_pos {
        writeln!(w, "flight_id,type_code,t_s,alt_ft,lat,lon")?;
    } else {
        writeln!(w, "flight_id,type_code,t_s,alt_ft")?;
    }
    for traj in trajectories {
        for b in &traj.blips {
            if with_pos {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    traj.flight_id,
                    traj.type_code,
                    b.t,
                    b.alt_ft,
                    fmt_opt(b.lat),
                    fmt_opt(b.lon)
                )?;
            } else {
                writeln!(w, "{},{},{},{}", traj.flight_id, traj.type_code, b.t, b.alt_ft)?;
            }
        }
    }
    w.flush()
}

pub fn save_csv(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(file, trajectories).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(text: &str) -> Result<IngestReport> {
        ingest_reader(Path::new("mem.csv"), text.as_bytes())
    }

    #[test]
    fn two_flights() {
        let text = "flight_id,type_code,t_s,alt_ft\n\
                    A,B738,0,15000\nA,B738,4,15100\nA,B738,8,15200\n\
                    B,C56X,0,20000\nB,C56X,5,20150\n";
        let r = read(text).unwrap();
        assert_eq!(r.trajectories.len(), 2);
        assert_eq!(r.trajectories[0].blips.len(), 3);
        assert_eq!(r.trajectories[1].blips.len(), 2);
        assert_eq!(r.trajectories[1].type_code, "C56X");
    }

    #[test]
    fn constant_climb_rate_is_recovered() {
        let mut text = String::from("flight_id,type_code,t_s,alt_ft\n");
        for i in 0..50 {
            let t = 4.0 * i as f64;
            text += &format!("X,B738,{t},{}\n", 12_000.0 + 2000.0 * t / 60.0);
        }
        let r = read(&text).unwrap();
        for b in &r.trajectories[0].blips[1..49] {
            assert!((b.rocd_fpm - 2000.0).abs() < 1.0, "{}", b.rocd_fpm);
        }
    }

    #[test]
    fn malformed_rows_are_counted_and_skipped() {
        let text = "flight_id,type_code,t_s,alt_ft\nA,B738,0,15000\nA,B738,zz,15100\nA,B738,8,99999\nA,B738,12,15300\n";
        let r = read(text).unwrap();
        assert_eq!(r.rows_read, 4);
        assert_eq!(r.skipped.len(), 2);
        assert_eq!(r.skipped[0].0, 3);
        assert_eq!(r.skipped[1].0, 4);
        assert_eq!(r.trajectories[0].blips.len(), 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(read("").is_err());
        assert!(read("flight_id,type_code,t_s,alt_ft\n").is_err());
        assert!(matches!(read("a,b,c\n1,2,3\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_timestamps_keep_first() {
        let text = "flight_id,type_code,t_s,alt_ft\nA,B738,4,15100\nA,B738,0,15000\nA,B738,4,17000\n";
        let r = read(text).unwrap();
        let alts: Vec<f64> = r.trajectories[0].blips.iter().map(|b| b.alt_ft).collect();
        assert_eq!(alts, [15000.0, 15100.0]);
    }

    #[test]
    fn median_filter_removes_single_spike() {
        let m = median3(&[1.0, 1.0, 50.0, 1.0, 1.0]);
        assert_eq!(m, [1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    fn sample_trajectories() -> Vec<Trajectory> {
        (0..3)
            .map(|f| {
                let blips = (0..20)
                    .map(|i| Blip {
                        t: 1000.0 * f as f64 + 4.5 * i as f64,
                        alt_ft: 14_000.0 + 137.5 * i as f64 + f as f64,
                        lat: None,
                        lon: None,
                        rocd_fpm: 0.0,
                    })
                    .collect();
                Trajectory::from_returns(format!("F{f}"), "B738".into(), blips)
            })
            .collect()
    }

    #[test]
    fn write_then_ingest_is_identity() {
        let trajs = sample_trajectories();
        let mut buf = Vec::new();
        write_csv(&mut buf, &trajs).unwrap();
        let back = ingest_reader(Path::new("mem"), buf.as_slice()).unwrap();
        assert_eq!(back.trajectories, trajs);
    }

    proptest! {
        #[test]
        fn row_order_does_not_matter(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let trajs = sample_trajectories();
            let mut buf = Vec::new();
            write_csv(&mut buf, &trajs).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let mut lines: Vec<&str> = text.lines().skip(1).collect();
            lines.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = format!("flight_id,type_code,t_s,alt_ft\n{}\n", lines.join("\n"));
            let a = read(&text).unwrap().trajectories;
            let b = read(&shuffled).unwrap().trajectories;
            prop_assert_eq!(a, b);
        }
    }
}
