//! Functional principal components of thrust profiles.
//!
//! Inner products over altitude use trapezoidal weights `q`, so a mode is
//! normalised by `Σ q_j φ_j² = 1`. The covariance operator `C Q` is
//! symmetrised as `Q^½ C Q^½`, decomposed, and mapped back with `Q^-½`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kneedle::select_components;
use crate::profile::{trapezoid_weights, ThrustProfile};

/// Fewest profiles accepted by [`fit_fpca`].
pub const MIN_PROFILES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaBasis {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    /// Retained modes, each sampled on `grid`.
    pub modes: Vec<Vec<f64>>,
    /// Fraction of total variance carried by each retained mode.
    pub explained_variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A basis together with the full eigen-spectrum it was cut from.
#[derive(Debug, Clone)]
pub struct FpcaFit {
    pub basis: FpcaBasis,
    /// Explained-variance fractions of every eigenvalue, descending.
    pub spectrum: Vec<f64>,
    /// Eigenvalues (N²·m), descending.
    pub eigenvalues: Vec<f64>,
}

/// Trapezoidal inner product of two functions sampled on `grid`.
pub fn inner_product(grid: &[f64], a: &[f64], b: &[f64]) -> f64 {
    trapezoid_weights(grid)
        .iter()
        .zip(a.iter().zip(b))
        .map(|(q, (x, y))| q * x * y)
        .sum()
}

impl FpcaBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_grid(&self) -> usize {
        self.grid.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if n < 2 || self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::GridMismatch("basis grid must be strictly increasing".into()));
        }
        if self.mean.len() != n || self.modes.iter().any(|m| m.len() != n) {
            return Err(Error::GridMismatch("basis arrays do not match the grid".into()));
        }
        if self.modes.is_empty() || self.modes.len() != self.explained_variance.len() {
            return Err(Error::GridMismatch(format!(
                "{} modes but {} explained-variance entries",
                self.modes.len(),
                self.explained_variance.len()
            )));
        }
        let finite = self
            .mean
            .iter()
            .chain(self.modes.iter().flatten())
            .chain(&self.explained_variance)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("basis", "non-finite entries"));
        }
        Ok(())
    }

    /// `mean + Σ w_i φ_i` on the basis grid.
    pub fn reconstruct(&self, w: &[f64]) -> Result<ThrustProfile> {
        if w.len() != self.modes.len() {
            return Err(Error::GridMismatch(format!(
                "{} weights for {} modes",
                w.len(),
                self.modes.len()
            )));
        }
        let values = (0..self.grid.len())
            .map(|j| self.mean[j] + self.modes.iter().zip(w).map(|(m, wi)| wi * m[j]).sum::<f64>())
            .collect();
        ThrustProfile::new(self.grid.clone(), values)
    }

    /// Value of `mean + Σ w_i φ_i` at grid node `k`.
    pub fn reconstruct_at(&self, k: usize, w: &[f64]) -> f64 {
        self.mean[k] + self.modes.iter().zip(w).map(|(m, wi)| wi * m[k]).sum::<f64>()
    }
}

/// Weights of `profile` in the basis: quadrature inner products of the
/// centred profile with each mode.
pub fn project_weights(basis: &FpcaBasis, profile: &ThrustProfile) -> Result<WeightVector> {
    if !profile.same_grid(&basis.grid) {
        return Err(Error::GridMismatch("profile grid differs from basis grid".into()));
    }
    let q = trapezoid_weights(&basis.grid);
    let centred: Vec<f64> = profile.values().iter().zip(&basis.mean).map(|(v, m)| v - m).collect();
    Ok(WeightVector(
        basis
            .modes
            .iter()
            .map(|phi| q.iter().zip(phi.iter().zip(&centred)).map(|(qj, (p, c))| qj * p * c).sum())
            .collect(),
    ))
}

/// Flip `phi` so its integral is non-negative; a vanishing integral defers to
/// the first non-negligible node.
fn fix_sign(phi: &mut [f64], q: &[f64]) {
    let integral: f64 = phi.iter().zip(q).map(|(p, w)| p * w).sum();
    let scale: f64 = phi.iter().zip(q).map(|(p, w)| (p * w).abs()).sum();
    let flip = if integral.abs() > 1e-12 * scale {
        integral < 0.0
    } else {
        let peak = phi.iter().fold(0.0f64, |a, p| a.max(p.abs()));
        phi.iter().find(|p| p.abs() > 1e-9 * peak).is_some_and(|p| *p < 0.0)
    };
    if flip {
        phi.iter_mut().for_each(|p| *p = -*p);
    }
}

/// Fits mean and modes to `profiles`, keeping `min(n_max, knee)` modes.
pub fn fit_fpca(profiles: &[ThrustProfile], n_max: usize) -> Result<FpcaBasis> {
    fit_fpca_full(profiles, n_max).map(|f| f.basis)
}

pub fn fit_fpca_full(profiles: &[ThrustProfile], n_max: usize) -> Result<FpcaFit> {
    if n_max == 0 {
        return Err(Error::validation("n_max", "must be at least 1"));
    }
    if profiles.len() < MIN_PROFILES {
        return Err(Error::InsufficientData(format!(
            "{} profiles, need at least {MIN_PROFILES}",
            profiles.len()
        )));
    }
    if profiles.len() < n_max {
        return Err(Error::InsufficientData(format!(
            "{} profiles cannot support {n_max} modes",
            profiles.len()
        )));
    }
    let grid = profiles[0].grid().to_vec();
    if profiles.iter().any(|p| !p.same_grid(&grid)) {
        return Err(Error::GridMismatch("profiles are on different grids".into()));
    }
    let n_g = grid.len();
    let n_f = profiles.len() as f64;

    let mut mean = vec![0.0; n_g];
    for p in profiles {
        for (m, v) in mean.iter_mut().zip(p.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n_f);

    let q = trapezoid_weights(&grid);
    let sq: Vec<f64> = q.iter().map(|w| w.sqrt()).collect();
    // Rows are centred profiles scaled by sqrt(q).
    let x = DMatrix::from_fn(profiles.len(), n_g, |i, j| {
        (profiles[i].values()[j] - mean[j]) * sq[j]
    });
    let mut a = x.transpose() * &x / (n_f - 1.0);
    a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);

    let mut order: Vec<usize> = (0..n_g).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    // Round-off eigenvalues are zeroed relative to the data scale.
    let energy: f64 = mean.iter().zip(&q).map(|(m, w)| w * m * m).sum();
    let tol = 1e-12 * (eig.eigenvalues[order[0]].max(0.0) + energy);
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i])
        .map(|l| if l > tol { l } else { 0.0 })
        .collect();
    let total: f64 = eigenvalues.iter().sum();
    let spectrum: Vec<f64> = if total > 0.0 {
        eigenvalues.iter().map(|l| l / total).collect()
    } else {
        vec![0.0; n_g]
    };

    let keep = select_components(&spectrum).min(n_max);
    let modes: Vec<Vec<f64>> = order[..keep]
        .iter()
        .map(|&i| {
            let mut phi: Vec<f64> =
                (0..n_g).map(|j| eig.eigenvectors[(j, i)] / sq[j]).collect();
            fix_sign(&mut phi, &q);
            phi
        })
        .collect();

    Ok(FpcaFit {
        basis: FpcaBasis {
            grid,
            mean,
            modes,
            explained_variance: spectrum[..keep].to_vec(),
        },
        spectrum,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::uniform_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Vec<f64> {
        uniform_grid(4572.0, 9906.0, 100)
    }

    /// Shapes orthonormalised under the trapezoid inner product.
    fn orthonormal_shapes(g: &[f64], n: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = (g[0], g[g.len() - 1]);
        let mut out: Vec<Vec<f64>> = Vec::new();
        for k in 0..n {
            let mut v: Vec<f64> = g
                .iter()
                .map(|h| {
                    let x = 2.0 * (h - lo) / (hi - lo) - 1.0;
                    x.powi(k as i32) + 0.3 * (3.0 * x + k as f64).sin()
                })
                .collect();
            for u in &out {
                let c = inner_product(g, &v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
            let nrm = inner_product(g, &v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= nrm);
            out.push(v);
        }
        out
    }

    fn base_mean(g: &[f64]) -> Vec<f64> {
        g.iter().map(|h| 120_000.0 - 4.0 * h).collect()
    }

    fn profiles_from(g: &[f64], mean: &[f64], shapes: &[Vec<f64>], w: &[Vec<f64>]) -> Vec<ThrustProfile> {
        w.iter()
            .map(|wi| {
                let v = (0..g.len())
                    .map(|j| mean[j] + shapes.iter().zip(wi).map(|(s, c)| c * s[j]).sum::<f64>())
                    .collect();
                ThrustProfile::new(g.to_vec(), v).unwrap()
            })
            .collect()
    }

    /// Sixteen weight vectors whose coordinates are scaled, mutually
    /// orthogonal, zero-mean ±1 sequences: sample variances are exactly 9:4:1.
    fn walsh_weights() -> Vec<Vec<f64>> {
        (0..16u32)
            .map(|i| {
                let s = |b: u32| if (i >> b) & 1 == 0 { 1.0 } else { -1.0 };
                vec![3000.0 * s(0), 2000.0 * s(1), 1000.0 * s(2)]
            })
            .collect()
    }

    #[test]
    fn nine_four_one_construction() {
        let g = grid();
        let shapes = orthonormal_shapes(&g, 3);
        let mean = base_mean(&g);
        let profiles = profiles_from(&g, &mean, &shapes, &walsh_weights());
        let fit = fit_fpca_full(&profiles, 10).unwrap();
        let b = &fit.basis;
        assert_eq!(b.n_modes(), 3);
        for (got, want) in b.explained_variance.iter().zip([9.0 / 14.0, 4.0 / 14.0, 1.0 / 14.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-9);
        }
        for (m, s) in b.modes.iter().zip(&shapes) {
            assert_relative_eq!(inner_product(&g, m, s).abs(), 1.0, max_relative = 1e-9);
        }
        for (a, c) in b.mean.iter().zip(&mean) {
            assert_relative_eq!(*a, *c, max_relative = 1e-12);
        }
        // Eigenvalues are the weight variances (n/(n-1) sample correction).
        assert_relative_eq!(fit.eigenvalues[0], 9.0e6 * 16.0 / 15.0, max_relative = 1e-9);
    }

    #[test]
    fn rank_one_construction() {
        let g = grid();
        let psi = &orthonormal_shapes(&g, 2)[1];
        let mean = base_mean(&g);
        let w: Vec<Vec<f64>> = (0..12).map(|i| vec![if i % 2 == 0 { 500.0 } else { -500.0 }]).collect();
        let b = fit_fpca(&profiles_from(&g, &mean, std::slice::from_ref(psi), &w), 10).unwrap();
        assert_eq!(b.n_modes(), 1);
        assert_relative_eq!(b.explained_variance[0], 1.0, max_relative = 1e-9);
        assert_relative_eq!(inner_product(&g, &b.modes[0], psi).abs(), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn identical_profiles() {
        let g = grid();
        let p = ThrustProfile::new(g.clone(), base_mean(&g)).unwrap();
        let b = fit_fpca(&vec![p.clone(); 10], 10).unwrap();
        assert_eq!(b.n_modes(), 1);
        assert_eq!(b.explained_variance, [0.0]);
        for (a, c) in b.mean.iter().zip(p.values()) {
            assert_relative_eq!(*a, *c, max_relative = 1e-12);
        }
    }

    #[test]
    fn too_few_profiles() {
        let g = grid();
        let p = ThrustProfile::new(g.clone(), base_mean(&g)).unwrap();
        assert!(matches!(fit_fpca(&vec![p.clone(); 9], 3), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_fpca(&vec![p.clone(); 10], 11), Err(Error::InsufficientData(_))));
        let other = ThrustProfile::new(uniform_grid(0.0, 1.0, 100), base_mean(&g)).unwrap();
        let mut mixed = vec![p; 10];
        mixed.push(other);
        assert!(matches!(fit_fpca(&mixed, 3), Err(Error::GridMismatch(_))));
    }

    fn random_profiles(seed: u64, n: usize) -> Vec<ThrustProfile> {
        let g = grid();
        let shapes = orthonormal_shapes(&g, 5);
        let mean = base_mean(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = [4000.0, 2500.0, 900.0, 60.0, 30.0];
        let w: Vec<Vec<f64>> = (0..n)
            .map(|_| sd.iter().map(|s| s * rng.random_range(-1.0..1.0)).collect())
            .collect();
        profiles_from(&g, &mean, &shapes, &w)
    }

    #[test]
    fn projection_of_mean_plus_mode() {
        let b = fit_fpca(&random_profiles(1, 40), 10).unwrap();
        let w0 = project_weights(&b, &ThrustProfile::new(b.grid.clone(), b.mean.clone()).unwrap()).unwrap();
        assert!(w0.0.iter().all(|w| w.abs() < 1e-9));
        let v: Vec<f64> = b.mean.iter().zip(&b.modes[0]).map(|(m, p)| m + 3.0 * p).collect();
        let w = project_weights(&b, &ThrustProfile::new(b.grid.clone(), v).unwrap()).unwrap();
        assert!((w.0[0] - 3.0).abs() < 1e-9);
        assert!(w.0[1..].iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn projection_matches_normal_equations() {
        let profiles = random_profiles(7, 50);
        let b = fit_fpca(&profiles, 10).unwrap();
        let n = b.n_modes();
        assert!(n >= 2);
        let q = trapezoid_weights(&b.grid);
        let phi = DMatrix::from_fn(b.n_grid(), n, |j, i| b.modes[i][j]);
        let qm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(q));
        let gram = phi.transpose() * &qm * &phi;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let target: Vec<f64> = b.mean.iter().map(|m| m + rng.random_range(-5000.0..5000.0)).collect();
        let r = nalgebra::DVector::from_iterator(b.n_grid(), target.iter().zip(&b.mean).map(|(t, m)| t - m));
        let rhs = phi.transpose() * &qm * r;
        let w_ls = gram.lu().solve(&rhs).unwrap();
        let w = project_weights(&b, &ThrustProfile::new(b.grid.clone(), target).unwrap()).unwrap();
        for i in 0..n {
            assert_relative_eq!(w.0[i], w_ls[i], max_relative = 1e-8, epsilon = 1e-6);
        }
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let g = grid();
        let q = trapezoid_weights(&g);
        let mut a: Vec<f64> = g.iter().map(|h| -(h - 7000.0)).collect();
        fix_sign(&mut a, &q);
        assert!(a.iter().zip(&q).map(|(x, w)| x * w).sum::<f64>() >= 0.0);
        let mid = 0.5 * (g[0] + g[99]);
        let mut odd: Vec<f64> = g.iter().map(|h| -(h - mid)).collect();
        fix_sign(&mut odd, &q);
        assert!(odd[0] > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn orthonormal_and_residual_orthogonal(seed in any::<u64>(), n in 12usize..40) {
            let profiles = random_profiles(seed, n);
            let b = fit_fpca(&profiles, 10).unwrap();
            for i in 0..b.n_modes() {
                for j in 0..b.n_modes() {
                    let ip = inner_product(&b.grid, &b.modes[i], &b.modes[j]);
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((ip - want).abs() < 1e-8);
                }
            }
            prop_assert!(b.explained_variance.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(b.explained_variance.iter().sum::<f64>() <= 1.0 + 1e-12);
            for p in &profiles {
                let w = project_weights(&b, p).unwrap();
                let rec = b.reconstruct(&w.0).unwrap();
                let resid: Vec<f64> = p.values().iter().zip(rec.values()).map(|(a, r)| a - r).collect();
                let scale = inner_product(&b.grid, p.values(), p.values()).sqrt();
                for m in &b.modes {
                    prop_assert!(inner_product(&b.grid, &resid, m).abs() < 1e-8 * scale.max(1.0));
                }
            }
        }

        #[test]
        fn permutation_invariant(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let profiles = random_profiles(seed, 30);
            let mut shuffled = profiles.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
            let a = fit_fpca(&profiles, 10).unwrap();
            let b = fit_fpca(&shuffled, 10).unwrap();
            prop_assert_eq!(a.n_modes(), b.n_modes());
            for (ma, mb) in a.modes.iter().zip(&b.modes) {
                for (x, y) in ma.iter().zip(mb) {
                    prop_assert!((x - y).abs() < 1e-7 * x.abs().max(1e-3));
                }
            }
        }
    }
}
