//! Experiment design over a lognormal family of random channels.
//!
//! An experiment is a gain distribution `lognormal(z, σ)` whose mean lies in
//! `[ℓ₁, u₁]` and whose variance lies in `[ℓ₂, u₂]`. For large alphabets the
//! information an experiment can deliver approaches `Ent(V)/E[V]`, which for
//! the lognormal is `σ²/(2 ln 2)` and is maximized in closed form.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{mutual_information, normalize_rows, GainMatrix, ProbabilityVector};
use crate::distributions::{phi_entropy, standard_normal_matrix, MomentPair};
use crate::error::{Error, Result};
use crate::rng::derive_key;

/// Default σ² step of the grid searches.
pub const DEFAULT_RESOLUTION: f64 = 0.05;

/// Moment constraints defining the family of admissible experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalFamilyConstraints {
    pub l1: f64,
    pub u1: f64,
    pub l2: f64,
    pub u2: f64,
}

impl Default for LognormalFamilyConstraints {
    fn default() -> Self {
        LognormalFamilyConstraints {
            l1: 1.0,
            u1: 10.0,
            l2: 0.0,
            u2: 2.0,
        }
    }
}

impl LognormalFamilyConstraints {
    pub fn new(l1: f64, u1: f64, l2: f64, u2: f64) -> Result<Self> {
        let c = LognormalFamilyConstraints { l1, u1, l2, u2 };
        c.validate()?;
        Ok(c)
    }

    /// Checks `0 < ℓ₁ ≤ u₁` and `0 ≤ ℓ₂ ≤ u₂`, all finite.
    ///
    /// Under these conditions the family is never empty: `mean = ℓ₁` with
    /// `σ² = ln(u₂/ℓ₁² + 1)` satisfies both constraints.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.l1, self.u1, self.l2, self.u2].iter().all(|v| v.is_finite());
        if !all_finite || !(self.l1 > 0.0) || self.u1 < self.l1 || !(self.l2 >= 0.0) || self.u2 < self.l2 {
            return Err(Error::Infeasible(format!(
                "need 0 < l1 <= u1 and 0 <= l2 <= u2, got l1={}, u1={}, l2={}, u2={}",
                self.l1, self.u1, self.l2, self.u2
            )));
        }
        Ok(())
    }

    /// Feasible interval of σ²: `[ln(ℓ₂/u₁² + 1), ln(u₂/ℓ₁² + 1)]`.
    pub fn sigma2_range(&self) -> (f64, f64) {
        (
            (self.l2 / (self.u1 * self.u1)).ln_1p(),
            (self.u2 / (self.l1 * self.l1)).ln_1p(),
        )
    }

    /// A location `z` making `lognormal(z, √σ²)` feasible, or `None` if σ² is
    /// outside [`sigma2_range`](Self::sigma2_range).
    pub fn feasible_location(&self, sigma2: f64) -> Option<f64> {
        let (lo, hi) = self.sigma2_range();
        if !(sigma2 >= lo - 1e-12 && sigma2 <= hi + 1e-12) {
            return None;
        }
        let spread = sigma2.exp_m1();
        // smallest admissible mean keeps the variance under u2
        let mean = if spread * self.l1 * self.l1 >= self.l2 {
            self.l1
        } else {
            (self.l2 / spread).sqrt().min(self.u1)
        };
        Some(mean.ln() - sigma2 / 2.0)
    }

    /// Whether `lognormal(z, √σ²)` meets all four constraints, up to a
    /// relative tolerance of 1e-12.
    pub fn contains(&self, z: f64, sigma2: f64) -> bool {
        let Ok((mean, var)) = lognormal_mean_variance(z, sigma2) else {
            return false;
        };
        let tol = 1e-12;
        mean >= self.l1 * (1.0 - tol)
            && mean <= self.u1 * (1.0 + tol)
            && var >= self.l2 * (1.0 - tol) - tol
            && var <= self.u2 * (1.0 + tol) + tol
    }
}

/// `(E[V], Var[V])` for `V = exp(z + σN)`.
pub fn lognormal_mean_variance(z: f64, sigma2: f64) -> Result<(f64, f64)> {
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    Ok(((z + sigma2 / 2.0).exp(), sigma2.exp_m1() * (2.0 * z + sigma2).exp()))
}

/// The experiment maximizing `Ent(V)/E[V]` over the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignOptimum {
    pub z_star: f64,
    pub sigma2_star: f64,
    /// `σ*²/(2 ln 2)`.
    pub bound_bits: f64,
}

/// `σ*² = ln(u₂/ℓ₁² + 1)` at mean `ℓ₁`, i.e. `z* = ln ℓ₁ − σ*²/2`.
pub fn design_optimum(c: &LognormalFamilyConstraints) -> Result<DesignOptimum> {
    c.validate()?;
    let sigma2 = (c.u2 / (c.l1 * c.l1)).ln_1p();
    Ok(DesignOptimum {
        z_star: ((c.l1 * c.l1).ln() - sigma2) / 2.0,
        sigma2_star: sigma2,
        bound_bits: sigma2 / (2.0 * LN_2),
    })
}

/// `max Ent(V)/E[V]` over a finite set of experiments given by their moments.
pub fn family_gain_upper_bound(domain: &[MomentPair]) -> Result<f64> {
    if domain.is_empty() {
        return Err(Error::InvalidArgument("empty experiment domain".into()));
    }
    Ok(domain.iter().map(|m| phi_entropy(m) / m.mu1).fold(f64::NEG_INFINITY, f64::max))
}

/// `(μ₁, μ₂)` of `lognormal(z, √σ²)`.
pub fn lognormal_moments(z: f64, sigma2: f64) -> Result<MomentPair> {
    let (mean, _) = lognormal_mean_variance(z, sigma2)?;
    MomentPair::new(mean, (z + sigma2) / LN_2 * mean)
}

/// Moments of the feasible experiments at `σ² = lo, lo + r, lo + 2r, …`
/// up to the top of the feasible interval. The top itself is included only
/// if it falls on the grid.
pub fn lognormal_grid_moments(c: &LognormalFamilyConstraints, resolution: f64) -> Result<Vec<MomentPair>> {
    c.validate()?;
    check_resolution(resolution)?;
    let (lo, hi) = c.sigma2_range();
    let steps = ((hi - lo) / resolution).floor() as usize;
    (0..=steps)
        .map(|k| {
            let s2 = lo + k as f64 * resolution;
            let z = c.feasible_location(s2).expect("grid point inside feasible range");
            lognormal_moments(z, s2)
        })
        .collect()
}

/// σ² grid for the per-trial search: `lo, lo + r, …` with the optimum
/// `σ*²` always appended as the last point.
pub fn sigma2_grid(c: &LognormalFamilyConstraints, resolution: f64) -> Result<Vec<f64>> {
    c.validate()?;
    check_resolution(resolution)?;
    let (lo, hi) = c.sigma2_range();
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let s2 = lo + k as f64 * resolution;
        if s2 >= hi - 1e-12 {
            break;
        }
        grid.push(s2);
        k += 1;
    }
    grid.push(hi);
    Ok(grid)
}

fn check_resolution(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("grid resolution must be positive, got {r}")))
    }
}

fn check_trial_args(prior: &ProbabilityVector, n: usize, trials: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if prior.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: prior.len(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(())
}

/// Seed of one trial.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_key(&[seed, trial as u64])
}

/// `I(p, W)` for `W` the row normalization of `exp(z + σN)`.
fn gain_from_normals(prior: &ProbabilityVector, normals: &[f64], n: usize, z: f64, sigma2: f64) -> Result<f64> {
    let sigma = sigma2.sqrt();
    let data = normals.iter().map(|&g| (z + sigma * g).exp()).collect();
    let v = GainMatrix::new(n, n, data)?;
    mutual_information(prior, &normalize_rows(&v)?)
}

/// Gains (bits) of the experiment `lognormal(z, √σ²)` with `m = n` in
/// `trials` independent trials.
///
/// Trial `t` draws its matrix from `trial_seed(seed, t)`, so results do not
/// depend on scheduling.
pub fn evaluate_experiment(
    prior: &ProbabilityVector,
    z: f64,
    sigma2: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_trial_args(prior, n, trials)?;
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let normals = standard_normal_matrix(n, n, trial_seed(seed, t));
            gain_from_normals(prior, &normals, n, z, sigma2)
        })
        .collect()
}

/// Per-trial maximum gain over the feasible σ² grid.
///
/// Each trial draws one standard normal matrix and evaluates every grid point
/// on it, so the optimum `σ*²` (always on the grid) reproduces
/// [`evaluate_experiment`] at `(z*, σ*²)` exactly and the search result is
/// never below it.
pub fn optimal_gain_search(
    prior: &ProbabilityVector,
    c: &LognormalFamilyConstraints,
    n: usize,
    resolution: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_trial_args(prior, n, trials)?;
    let grid = sigma2_grid(c, resolution)?;
    let opt = design_optimum(c)?;
    let points: Vec<(f64, f64)> = grid
        .iter()
        .map(|&s2| {
            if s2 == opt.sigma2_star {
                (opt.z_star, s2)
            } else {
                (c.feasible_location(s2).expect("grid point inside feasible range"), s2)
            }
        })
        .collect();
    search_points(prior, &points, n, trials, seed)
}

/// Per-trial maximum gain over explicit `(z, σ²)` points.
pub fn search_points(
    prior: &ProbabilityVector,
    points: &[(f64, f64)],
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_trial_args(prior, n, trials)?;
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty search grid".into()));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let normals = standard_normal_matrix(n, n, trial_seed(seed, t));
            let mut best = f64::NEG_INFINITY;
            for &(z, s2) in points {
                best = best.max(gain_from_normals(prior, &normals, n, z, s2)?);
            }
            Ok(best)
        })
        .collect()
}
