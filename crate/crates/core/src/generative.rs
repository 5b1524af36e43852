//! Gaussian model over fPCA weights: sampling, analytic confidence bounds and
//! training from radar trajectories.

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::atmosphere::fl_to_m;
use crate::chi2::confidence_radius;
use crate::dynamics::{integrate_climb_until_stall, ClimbConditions, ClimbTrajectory};
use crate::error::{Error, Result};
use crate::fpca::{fit_fpca_full, project_weights, FpcaBasis, WeightVector};
use crate::learning::profile_from_flight;
use crate::performance::AircraftPerformance;
use crate::pipeline::radar::Trajectory;
use crate::profile::{uniform_grid, ThrustProfile};

/// Nodes of the common altitude grid.
pub const GRID_NODES: usize = 100;
/// Fewest weight vectors accepted by [`fit_weight_distribution`].
pub const MIN_WEIGHT_VECTORS: usize = 10;
/// Default confidence level of the bounds.
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Independent normals over the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution {
    pub mu_w: Vec<f64>,
    /// Variances.
    pub sigma_diag: Vec<f64>,
}

impl WeightDistribution {
    pub fn dim(&self) -> usize {
        self.mu_w.len()
    }

    /// `Σ (w_i - μ_i)² / σ_i²`.
    pub fn mahalanobis_sq(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(&self.mu_w)
            .zip(&self.sigma_diag)
            .map(|((w, m), s)| (w - m) * (w - m) / s)
            .sum()
    }
}

/// Sample mean and unbiased per-coordinate variances of `weights`.
pub fn fit_weight_distribution(weights: &[WeightVector]) -> Result<WeightDistribution> {
    if weights.len() < MIN_WEIGHT_VECTORS {
        return Err(Error::InsufficientData(format!(
            "{} weight vectors, need at least {MIN_WEIGHT_VECTORS}",
            weights.len()
        )));
    }
    let n = weights[0].len();
    if n == 0 || weights.iter().any(|w| w.len() != n) {
        return Err(Error::GridMismatch("weight vectors differ in length".into()));
    }
    let count = weights.len() as f64;
    let mu_w: Vec<f64> = (0..n)
        .map(|i| weights.iter().map(|w| w.0[i]).sum::<f64>() / count)
        .collect();
    let sigma_diag: Vec<f64> = (0..n)
        .map(|i| {
            weights.iter().map(|w| (w.0[i] - mu_w[i]).powi(2)).sum::<f64>() / (count - 1.0)
        })
        .collect();
    if let Some(i) = sigma_diag.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Degenerate(format!(
            "weight {} has zero variance; fit fewer modes",
            i + 1
        )));
    }
    Ok(WeightDistribution { mu_w, sigma_diag })
}

/// Lower and upper bound climbs.
#[derive(Debug, Clone)]
pub struct BoundTrajectories {
    /// Flown with the lower thrust bound.
    pub slow: ClimbTrajectory,
    /// Flown with the upper thrust bound.
    pub fast: ClimbTrajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeClimbModel {
    pub type_code: String,
    /// Altitude interval (flight levels) the model was fitted over.
    pub interval_fl: [f64; 2],
    pub basis: FpcaBasis,
    pub weights: WeightDistribution,
    pub n_flights_fit: usize,
}

impl GenerativeClimbModel {
    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        if self.weights.mu_w.len() != self.basis.n_modes()
            || self.weights.sigma_diag.len() != self.basis.n_modes()
        {
            return Err(Error::GridMismatch(format!(
                "{} modes but {} weight means and {} variances",
                self.basis.n_modes(),
                self.weights.mu_w.len(),
                self.weights.sigma_diag.len()
            )));
        }
        if self.weights.sigma_diag.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || self.weights.mu_w.iter().any(|m| !m.is_finite())
        {
            return Err(Error::Degenerate("weight variances must be positive".into()));
        }
        let [lo, hi] = self.interval_fl;
        if !(lo < hi) {
            return Err(Error::validation("interval_fl", "lower bound must be below upper"));
        }
        let g = &self.basis.grid;
        let tol = 1e-6;
        if g[0] > fl_to_m(lo) + tol || g[g.len() - 1] < fl_to_m(hi) - tol {
            return Err(Error::GridMismatch("grid does not cover the model interval".into()));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    pub fn h_start(&self) -> f64 {
        self.basis.grid[0]
    }

    pub fn h_end(&self) -> f64 {
        self.basis.grid[self.basis.grid.len() - 1]
    }

    /// Profile reconstructed at the mean weights.
    pub fn mean_profile(&self) -> ThrustProfile {
        self.basis
            .reconstruct(&self.weights.mu_w)
            .expect("validated model dimensions")
    }

    /// `count` weight draws; deterministic in `seed`.
    pub fn sample_weights(&self, count: usize, seed: u64) -> Vec<WeightVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd: Vec<f64> = self.weights.sigma_diag.iter().map(|s| s.sqrt()).collect();
        (0..count)
            .map(|_| {
                WeightVector(
                    self.weights
                        .mu_w
                        .iter()
                        .zip(&sd)
                        .map(|(m, s)| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            m + s * z
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// `count` synthetic thrust profiles; deterministic in `seed`.
    pub fn sample_thrust(&self, count: usize, seed: u64) -> Vec<ThrustProfile> {
        self.sample_weights(count, seed)
            .iter()
            .map(|w| self.basis.reconstruct(&w.0).expect("validated model dimensions"))
            .collect()
    }

    /// Points of the `level` ellipsoid minimising and maximising the thrust
    /// at grid node `k` (0-based).
    pub fn bound_weights(&self, k: usize, level: f64) -> Result<(WeightVector, WeightVector)> {
        let n_g = self.basis.n_grid();
        if k >= n_g {
            return Err(Error::validation("k", format!("grid index {k} outside 0..{n_g}")));
        }
        check_level(level)?;
        let c: Vec<f64> = self.weights.sigma_diag.iter().map(|s| s.sqrt()).collect();
        let n_vec: Vec<f64> = self.basis.modes.iter().zip(&c).map(|(m, ci)| m[k] * ci).collect();
        let norm = n_vec.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Degenerate(format!("all modes vanish at grid node {k}")));
        }
        let radius = confidence_radius(self.n_modes(), level).sqrt();
        let offset: Vec<f64> = c.iter().zip(&n_vec).map(|(ci, ni)| radius * ci * ni / norm).collect();
        let lower = self.weights.mu_w.iter().zip(&offset).map(|(m, o)| m - o).collect();
        let upper = self.weights.mu_w.iter().zip(&offset).map(|(m, o)| m + o).collect();
        Ok((WeightVector(lower), WeightVector(upper)))
    }

    /// Worst- and best-case thrust, assembled node by node from the tangency points.
    pub fn bound_profiles(&self, level: f64) -> Result<(ThrustProfile, ThrustProfile)> {
        let n_g = self.basis.n_grid();
        let mut lower = Vec::with_capacity(n_g);
        let mut upper = Vec::with_capacity(n_g);
        for k in 0..n_g {
            let (wl, wu) = self.bound_weights(k, level)?;
            lower.push(self.basis.reconstruct_at(k, &wl.0));
            upper.push(self.basis.reconstruct_at(k, &wu.0));
        }
        Ok((
            ThrustProfile::new(self.basis.grid.clone(), lower)?,
            ThrustProfile::new(self.basis.grid.clone(), upper)?,
        ))
    }

    /// Climbs through both bound profiles: one integration each. A lower
    /// bound that cannot sustain the climb stops at the failing altitude,
    /// and later altitudes are reached after unbounded time.
    pub fn bound_trajectories(
        &self,
        perf: &AircraftPerformance,
        cond: &ClimbConditions,
        h_start: f64,
        h_end: f64,
        level: f64,
    ) -> Result<BoundTrajectories> {
        let (lower, upper) = self.bound_profiles(level)?;
        let slow = integrate_climb_until_stall(perf, cond, &lower, h_start, h_end)?;
        let fast = integrate_climb_until_stall(perf, cond, &upper, h_start, h_end)?;
        if let Some(h) = slow.stalled_at {
            info!("{}: lower bound cannot climb above {h:.0} m", self.type_code);
        }
        Ok(BoundTrajectories { slow, fast })
    }
}

fn check_level(level: f64) -> Result<()> {
    if (0.0..1.0).contains(&level) {
        Ok(())
    } else {
        Err(Error::validation("level", format!("{level} not in [0, 1)")))
    }
}

/// Training settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub interval_fl: [f64; 2],
    pub n_max: usize,
    pub grid_nodes: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            interval_fl: [150.0, 325.0],
            n_max: 10,
            grid_nodes: GRID_NODES,
        }
    }
}

/// What happened during [`train`].
#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub flights_used: usize,
    pub flights_rejected: usize,
    /// Explained-variance fraction of every eigenvalue.
    pub spectrum: Vec<f64>,
}

/// Fits a model for one aircraft type from already-filtered climbs.
pub fn train(
    perf: &AircraftPerformance,
    cond: &ClimbConditions,
    trajectories: &[Trajectory],
    config: &TrainingConfig,
) -> Result<(GenerativeClimbModel, TrainingReport)> {
    let [lo, hi] = config.interval_fl;
    if !(lo < hi) {
        return Err(Error::validation("interval", "lower bound must be below upper"));
    }
    let grid = uniform_grid(fl_to_m(lo), fl_to_m(hi), config.grid_nodes);
    let mut profiles = Vec::with_capacity(trajectories.len());
    let mut rejected = 0;
    for traj in trajectories {
        match profile_from_flight(perf, cond, traj, &grid) {
            Ok(p) => profiles.push(p),
            Err(e @ Error::FlightRejected { .. }) => {
                debug!("{e}");
                rejected += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let fit = fit_fpca_full(&profiles, config.n_max.min(profiles.len().max(1)))?;
    let weights: Vec<WeightVector> = profiles
        .iter()
        .map(|p| project_weights(&fit.basis, p))
        .collect::<Result<_>>()?;
    let dist = fit_weight_distribution(&weights)?;
    info!(
        "{}: {} flights, {} modes, explained {:?}",
        perf.type_code,
        profiles.len(),
        fit.basis.n_modes(),
        fit.basis.explained_variance
    );
    let model = GenerativeClimbModel {
        type_code: perf.type_code.clone(),
        interval_fl: config.interval_fl,
        basis: fit.basis,
        weights: dist,
        n_flights_fit: profiles.len(),
    };
    model.validate()?;
    Ok((
        model,
        TrainingReport {
            flights_used: profiles.len(),
            flights_rejected: rejected,
            spectrum: fit.spectrum,
        },
    ))
}
