//! Arrival-time errors, KDE-based KL divergence and bound coverage.

use crate::atmosphere::{fl_to_m, FT_TO_M};
use crate::dynamics::ClimbTrajectory;
use crate::error::{Error, Result};
use crate::generative::BoundTrajectories;
use crate::pipeline::filter::{first_crossing, ClimbFlight};
use crate::pipeline::radar::Trajectory;

/// Smallest sample accepted by [`kl_divergence`].
pub const MIN_KDE_SAMPLE: usize = 20;
const DENSITY_FLOOR: f64 = 1e-12;
const KL_GRID_NODES: usize = 2048;

/// Times (s) at which an observed track climbs through each of `fls`,
/// measured from its crossing of `ref_fl`. `None` if any level is not reached.
pub fn observed_arrivals(traj: &Trajectory, ref_fl: f64, fls: &[f64]) -> Option<Vec<f64>> {
    let t0 = first_crossing(traj, ref_fl * 100.0)?;
    fls.iter()
        .map(|fl| first_crossing(traj, fl * 100.0).map(|t| t - t0))
        .collect()
}

/// As [`observed_arrivals`] for an integrated climb. Levels beyond a stall
/// give `+inf`.
pub fn model_arrivals(climb: &ClimbTrajectory, ref_fl: f64, fls: &[f64]) -> Option<Vec<f64>> {
    let t0 = climb.time_at(fl_to_m(ref_fl))?;
    fls.iter()
        .map(|fl| climb.time_at(fl_to_m(*fl)).map(|t| t - t0))
        .collect()
}

/// Mean absolute difference of paired values.
pub fn mae(predicted: &[f64], observed: &[f64]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != observed.len() {
        return Err(Error::InsufficientData(format!(
            "cannot pair {} predictions with {} observations",
            predicted.len(),
            observed.len()
        )));
    }
    Ok(predicted.iter().zip(observed).map(|(p, o)| (p - o).abs()).sum::<f64>() / predicted.len() as f64)
}

/// Gaussian kernel density estimate.
#[derive(Debug, Clone)]
pub struct Kde {
    sample: Vec<f64>,
    bandwidth: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

impl Kde {
    /// Bandwidth from Silverman's rule, `0.9 min(σ, IQR/1.34) n^(-1/5)`.
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.len() < 2 || sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::InsufficientData("KDE needs at least two finite values".into()));
        }
        let n = sample.len() as f64;
        let mean = sample.iter().sum::<f64>() / n;
        let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        if !(spread > 0.0) {
            return Err(Error::Degenerate("zero-variance sample".into()));
        }
        Ok(Kde {
            sample: sorted,
            bandwidth: 0.9 * spread * n.powf(-0.2),
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn min(&self) -> f64 {
        self.sample[0]
    }

    pub fn max(&self) -> f64 {
        self.sample[self.sample.len() - 1]
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        // Kernels beyond 9 bandwidths contribute below 1e-17.
        let lo = self.sample.partition_point(|&s| s < x - 9.0 * h);
        let hi = self.sample.partition_point(|&s| s <= x + 9.0 * h);
        let norm = 1.0 / (self.sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        norm * self.sample[lo..hi]
            .iter()
            .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
            .sum::<f64>()
    }
}

/// Shared evaluation grid covering both samples plus three bandwidths.
pub fn shared_grid(p: &Kde, q: &Kde) -> Vec<f64> {
    let pad = 3.0 * p.bandwidth.max(q.bandwidth);
    let lo = p.min().min(q.min()) - pad;
    let hi = p.max().max(q.max()) + pad;
    crate::profile::uniform_grid(lo, hi, KL_GRID_NODES)
}

/// KL(P ‖ Q) in nats between KDEs of two samples, by trapezoidal integration.
pub fn kl_divergence(sample_p: &[f64], sample_q: &[f64]) -> Result<f64> {
    for s in [sample_p, sample_q] {
        if s.len() < MIN_KDE_SAMPLE {
            return Err(Error::InsufficientData(format!(
                "KL needs at least {MIN_KDE_SAMPLE} values, got {}",
                s.len()
            )));
        }
    }
    let p = Kde::new(sample_p)?;
    let q = Kde::new(sample_q)?;
    let grid = shared_grid(&p, &q);
    let w = crate::profile::trapezoid_weights(&grid);
    let kl = grid
        .iter()
        .zip(&w)
        .map(|(&x, wi)| {
            let (pd, qd) = (p.density(x).max(DENSITY_FLOOR), q.density(x).max(DENSITY_FLOOR));
            wi * pd * (pd / qd).ln()
        })
        .sum::<f64>();
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverageCount {
    pub inside: usize,
    pub total: usize,
}

impl CoverageCount {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.inside as f64 / self.total as f64
        }
    }

    pub fn add(&mut self, other: CoverageCount) {
        self.inside += other.inside;
        self.total += other.total;
    }
}

/// Interval returns of `flights` whose time since the reference crossing lies
/// between the fast and slow bound times at their altitude.
pub fn coverage(flights: &[ClimbFlight], bounds: &BoundTrajectories) -> CoverageCount {
    let h_ref = bounds.fast.start_altitude();
    let mut count = CoverageCount::default();
    for f in flights {
        for b in &f.interval.blips {
            let h = b.alt_ft * FT_TO_M;
            let (Some(fast), Some(slow)) = (bounds.fast.time_at(h), bounds.slow.time_at(h)) else {
                continue;
            };
            let t = b.t - f.t_ref;
            let fast_ref = bounds.fast.time_at(h_ref).unwrap_or(0.0);
            let slow_ref = bounds.slow.time_at(h_ref).unwrap_or(0.0);
            count.total += 1;
            if fast - fast_ref <= t && t <= slow - slow_ref {
                count.inside += 1;
            }
        }
    }
    count
}
