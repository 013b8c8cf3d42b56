//! The catalog of gain distributions, their samplers, and the closed-form
//! moments that drive the asymptotic capacity `μ₂/μ₁ − log₂ μ₁`.

use std::f64::consts::LN_2;
use std::fmt;

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Exp, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{GainMatrix, Provenance};
use crate::error::{Error, Result};
use crate::rng::{cell_stream, CounterRng};
use crate::special::{digamma, harmonic, trigamma, EULER_GAMMA};

/// A distribution family together with validated parameters.
///
/// Serialized as `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    /// Uniform on `[0, max]`.
    Uniform { max: f64 },
    /// `exp(N(location, scale²))`.
    Lognormal { location: f64, scale: f64 },
    Gamma { shape: f64, scale: f64 },
    ChiSquared { dof: u32 },
    Beta { alpha: f64, beta: f64 },
    /// Mass `epsilon` at 1, the rest at 0.
    TwoPoint { epsilon: f64 },
    PointMass { value: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
enum SpecRepr {
    #[serde(alias = "exp")]
    Exponential {
        rate: f64,
    },
    Uniform {
        max: f64,
    },
    Lognormal {
        location: f64,
        scale: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    #[serde(alias = "chi2")]
    ChiSquared {
        dof: u32,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    TwoPoint {
        epsilon: f64,
    },
    PointMass {
        value: f64,
    },
}

impl TryFrom<SpecRepr> for DistributionSpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<Self> {
        let spec = match r {
            SpecRepr::Exponential { rate } => DistributionSpec::Exponential { rate },
            SpecRepr::Uniform { max } => DistributionSpec::Uniform { max },
            SpecRepr::Lognormal { location, scale } => {
                DistributionSpec::Lognormal { location, scale }
            }
            SpecRepr::Gamma { shape, scale } => DistributionSpec::Gamma { shape, scale },
            SpecRepr::ChiSquared { dof } => DistributionSpec::ChiSquared { dof },
            SpecRepr::Beta { alpha, beta } => DistributionSpec::Beta { alpha, beta },
            SpecRepr::TwoPoint { epsilon } => DistributionSpec::TwoPoint { epsilon },
            SpecRepr::PointMass { value } => DistributionSpec::PointMass { value },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<DistributionSpec> for SpecRepr {
    fn from(s: DistributionSpec) -> Self {
        match s {
            DistributionSpec::Exponential { rate } => SpecRepr::Exponential { rate },
            DistributionSpec::Uniform { max } => SpecRepr::Uniform { max },
            DistributionSpec::Lognormal { location, scale } => {
                SpecRepr::Lognormal { location, scale }
            }
            DistributionSpec::Gamma { shape, scale } => SpecRepr::Gamma { shape, scale },
            DistributionSpec::ChiSquared { dof } => SpecRepr::ChiSquared { dof },
            DistributionSpec::Beta { alpha, beta } => SpecRepr::Beta { alpha, beta },
            DistributionSpec::TwoPoint { epsilon } => SpecRepr::TwoPoint { epsilon },
            DistributionSpec::PointMass { value } => SpecRepr::PointMass { value },
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!("{name} must be positive and finite, got {v}")))
    }
}

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::checked(DistributionSpec::Exponential { rate })
    }

    pub fn uniform(max: f64) -> Result<Self> {
        Self::checked(DistributionSpec::Uniform { max })
    }

    pub fn lognormal(location: f64, scale: f64) -> Result<Self> {
        Self::checked(DistributionSpec::Lognormal { location, scale })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::checked(DistributionSpec::Gamma { shape, scale })
    }

    pub fn chi_squared(dof: u32) -> Result<Self> {
        Self::checked(DistributionSpec::ChiSquared { dof })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::checked(DistributionSpec::Beta { alpha, beta })
    }

    pub fn two_point(epsilon: f64) -> Result<Self> {
        Self::checked(DistributionSpec::TwoPoint { epsilon })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::checked(DistributionSpec::PointMass { value })
    }

    fn checked(spec: Self) -> Result<Self> {
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Exponential { rate } => positive("rate", rate),
            DistributionSpec::Uniform { max } => positive("max", max),
            DistributionSpec::Lognormal { location, scale } => {
                if !location.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "location must be finite, got {location}"
                    )));
                }
                positive("scale", scale)
            }
            DistributionSpec::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            DistributionSpec::ChiSquared { dof } => {
                if dof == 0 {
                    Err(Error::InvalidDistribution("dof must be at least 1".into()))
                } else {
                    Ok(())
                }
            }
            DistributionSpec::Beta { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            DistributionSpec::TwoPoint { epsilon } => {
                if epsilon > 0.0 && epsilon < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidDistribution(format!(
                        "epsilon must lie in (0, 1), got {epsilon}"
                    )))
                }
            }
            DistributionSpec::PointMass { value } => positive("value", value),
        }
    }

    /// Parses a family name and `name=value` parameters, as given on the
    /// command line.
    pub fn from_family_params(family: &str, params: &[(String, f64)]) -> Result<Self> {
        let mut lookup = Params::new(params);
        let spec = match family.to_ascii_lowercase().as_str() {
            "exp" | "exponential" => DistributionSpec::Exponential {
                rate: lookup.take(&["rate", "lambda"])?,
            },
            "uniform" | "unif" => DistributionSpec::Uniform {
                max: lookup.take(&["max", "a"])?,
            },
            "lognormal" | "lognorm" => DistributionSpec::Lognormal {
                location: lookup.take(&["location", "z"])?,
                scale: lookup.take(&["scale", "sigma"])?,
            },
            "gamma" => DistributionSpec::Gamma {
                shape: lookup.take(&["shape", "k"])?,
                scale: lookup.take(&["scale", "theta"])?,
            },
            "chi_squared" | "chi2" | "chisq" => {
                let dof = lookup.take(&["dof", "k"])?;
                if dof.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&dof) {
                    return Err(Error::InvalidDistribution(format!(
                        "dof must be a positive integer, got {dof}"
                    )));
                }
                DistributionSpec::ChiSquared { dof: dof as u32 }
            }
            "beta" => DistributionSpec::Beta {
                alpha: lookup.take(&["alpha"])?,
                beta: lookup.take(&["beta"])?,
            },
            "two_point" | "twopoint" | "bernoulli" => DistributionSpec::TwoPoint {
                epsilon: lookup.take(&["epsilon", "eps"])?,
            },
            "point_mass" | "pointmass" | "constant" => DistributionSpec::PointMass {
                value: lookup.take(&["value", "alpha"])?,
            },
            other => {
                return Err(Error::InvalidDistribution(format!("unknown family '{other}'")));
            }
        };
        lookup.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            DistributionSpec::Exponential { .. } => "exponential",
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::Lognormal { .. } => "lognormal",
            DistributionSpec::Gamma { .. } => "gamma",
            DistributionSpec::ChiSquared { .. } => "chi_squared",
            DistributionSpec::Beta { .. } => "beta",
            DistributionSpec::TwoPoint { .. } => "two_point",
            DistributionSpec::PointMass { .. } => "point_mass",
        }
    }

    /// Families that are almost surely positive. The others only exist to
    /// exercise the asymptotic formula and are refused by the rate bounds.
    pub fn is_strictly_positive(&self) -> bool {
        !matches!(self, DistributionSpec::TwoPoint { .. })
    }

    /// Draws one value from the stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Sampler::new(self).draw(rng)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            DistributionSpec::Uniform { max } => write!(f, "uniform(max={max})"),
            DistributionSpec::Lognormal { location, scale } => {
                write!(f, "lognormal(location={location}, scale={scale})")
            }
            DistributionSpec::Gamma { shape, scale } => {
                write!(f, "gamma(shape={shape}, scale={scale})")
            }
            DistributionSpec::ChiSquared { dof } => write!(f, "chi_squared(dof={dof})"),
            DistributionSpec::Beta { alpha, beta } => write!(f, "beta(alpha={alpha}, beta={beta})"),
            DistributionSpec::TwoPoint { epsilon } => write!(f, "two_point(epsilon={epsilon})"),
            DistributionSpec::PointMass { value } => write!(f, "point_mass(value={value})"),
        }
    }
}

struct Params<'a> {
    given: &'a [(String, f64)],
    used: Vec<bool>,
}

impl<'a> Params<'a> {
    fn new(given: &'a [(String, f64)]) -> Self {
        Params {
            given,
            used: vec![false; given.len()],
        }
    }

    fn take(&mut self, names: &[&str]) -> Result<f64> {
        let mut found = None;
        for (i, (k, v)) in self.given.iter().enumerate() {
            if names.iter().any(|n| n.eq_ignore_ascii_case(k)) {
                if found.is_some() {
                    return Err(Error::InvalidDistribution(format!(
                        "parameter '{}' given more than once",
                        names[0]
                    )));
                }
                self.used[i] = true;
                found = Some(*v);
            }
        }
        found.ok_or_else(|| {
            Error::InvalidDistribution(format!("missing parameter '{}'", names[0]))
        })
    }

    fn finish(self) -> Result<()> {
        match self.used.iter().position(|u| !u) {
            Some(i) => Err(Error::InvalidDistribution(format!(
                "unexpected parameter '{}'",
                self.given[i].0
            ))),
            None => Ok(()),
        }
    }
}

/// Parses `name=value`.
pub fn parse_param(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("expected name=value, got '{s}'")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::InvalidArgument(format!("empty parameter name in '{s}'")));
    }
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("'{}' is not a number", v.trim())))?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("parameter '{k}' must be finite")));
    }
    Ok((k.to_string(), v))
}

/// Prebuilt sampler; constructing the `rand_distr` objects once per matrix
/// keeps the per-cell cost to the draw itself.
enum Sampler {
    Exp(Exp<f64>),
    Uniform(f64),
    Lognormal { location: f64, scale: f64 },
    Gamma(Gamma<f64>),
    ChiSquared(ChiSquared<f64>),
    Beta(Beta<f64>),
    TwoPoint(f64),
    PointMass(f64),
}

impl Sampler {
    fn new(spec: &DistributionSpec) -> Self {
        // parameters were validated at construction, so the unwraps hold
        match *spec {
            DistributionSpec::Exponential { rate } => Sampler::Exp(Exp::new(rate).unwrap()),
            DistributionSpec::Uniform { max } => Sampler::Uniform(max),
            DistributionSpec::Lognormal { location, scale } => {
                Sampler::Lognormal { location, scale }
            }
            DistributionSpec::Gamma { shape, scale } => {
                Sampler::Gamma(Gamma::new(shape, scale).unwrap())
            }
            DistributionSpec::ChiSquared { dof } => {
                Sampler::ChiSquared(ChiSquared::new(dof as f64).unwrap())
            }
            DistributionSpec::Beta { alpha, beta } => Sampler::Beta(Beta::new(alpha, beta).unwrap()),
            DistributionSpec::TwoPoint { epsilon } => Sampler::TwoPoint(epsilon),
            DistributionSpec::PointMass { value } => Sampler::PointMass(value),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exp(d) => d.sample(rng),
            Sampler::Uniform(max) => max * rng.random::<f64>(),
            Sampler::Lognormal { location, scale } => {
                let z: f64 = rng.sample(StandardNormal);
                (location + scale * z).exp()
            }
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::ChiSquared(d) => d.sample(rng),
            Sampler::Beta(d) => d.sample(rng),
            Sampler::TwoPoint(eps) => {
                if rng.random::<f64>() < *eps {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::PointMass(v) => *v,
        }
    }
}

/// Output alphabet size `⌈γ n⌉`.
pub fn output_size(n: usize, gamma: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let m = (gamma * n as f64).ceil();
    if m > (usize::MAX / n.max(1)) as f64 {
        return Err(Error::InvalidArgument(format!("output size {m} is too large")));
    }
    Ok((m as usize).max(1))
}

/// Samples an `n × ⌈γn⌉` matrix of i.i.d. draws. Cell `(x, y)` uses the
/// stream addressed by `(seed, x, y)`, so the result does not depend on the
/// number of worker threads.
pub fn sample_gain_matrix(
    spec: &DistributionSpec,
    n: usize,
    gamma: f64,
    seed: u64,
) -> Result<GainMatrix> {
    spec.validate()?;
    let m = output_size(n, gamma)?;
    let sampler = Sampler::new(spec);
    let mut data = vec![0.0; n * m];
    data.par_chunks_mut(m).enumerate().for_each(|(x, row)| {
        for (y, cell) in row.iter_mut().enumerate() {
            let mut rng = cell_stream(seed, x as u64, y as u64);
            *cell = sampler.draw(&mut rng);
        }
    });
    Ok(GainMatrix::from_sampled(
        n,
        m,
        data,
        Provenance { spec: *spec, seed },
    ))
}

/// Standard normal draws on the same cell streams the lognormal sampler
/// uses: `exp(z + σ N)` reproduces `sample_gain_matrix(lognormal(z, σ), …)`.
pub fn standard_normal_matrix(n: usize, m: usize, seed: u64) -> Vec<f64> {
    let mut data = vec![0.0; n * m];
    if m == 0 {
        return data;
    }
    data.par_chunks_mut(m).enumerate().for_each(|(x, row)| {
        for (y, cell) in row.iter_mut().enumerate() {
            let mut rng = cell_stream(seed, x as u64, y as u64);
            *cell = rng.sample(StandardNormal);
        }
    });
    data
}

/// `(E[V], E[V log₂ V])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mu1: f64,
    pub mu2: f64,
}

impl MomentPair {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu1.is_finite()) || !mu2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "moment pair needs mu1 > 0 and finite mu2, got ({mu1}, {mu2})"
            )));
        }
        Ok(MomentPair { mu1, mu2 })
    }
}

/// Closed-form `(μ₁, μ₂)` for each family; μ₂ in bits.
pub fn analytic_moments(spec: &DistributionSpec) -> MomentPair {
    let (mu1, mu2) = match *spec {
        DistributionSpec::Exponential { rate } => {
            (1.0 / rate, (1.0 - EULER_GAMMA - rate.ln()) / (rate * LN_2))
        }
        DistributionSpec::Uniform { max } => (max / 2.0, max * (2.0 * max.ln() - 1.0) / (4.0 * LN_2)),
        DistributionSpec::Lognormal { location, scale } => {
            let s2 = scale * scale;
            let mu1 = (location + s2 / 2.0).exp();
            (mu1, (location + s2) / LN_2 * mu1)
        }
        DistributionSpec::Gamma { shape, scale } => gamma_moments(shape, scale),
        DistributionSpec::ChiSquared { dof } => {
            let k = dof as f64;
            (k, k + k / LN_2 * digamma(1.0 + k / 2.0))
        }
        DistributionSpec::Beta { alpha, beta } => {
            let mu1 = alpha / (alpha + beta);
            (mu1, mu1 / LN_2 * (harmonic(alpha) - harmonic(alpha + beta)))
        }
        DistributionSpec::TwoPoint { epsilon } => (epsilon, 0.0),
        DistributionSpec::PointMass { value } => (value, value * value.log2()),
    };
    MomentPair { mu1, mu2 }
}

fn gamma_moments(shape: f64, scale: f64) -> (f64, f64) {
    let mu1 = shape * scale;
    (mu1, mu1 * (digamma(shape + 1.0) + scale.ln()) / LN_2)
}

/// `(E[V²], E[(V log₂ V)²])`, used as the default Bernstein variance proxy.
pub fn analytic_second_moments(spec: &DistributionSpec) -> (f64, f64) {
    let ln2sq = LN_2 * LN_2;
    match *spec {
        DistributionSpec::Exponential { rate } => gamma_second_moments(1.0, 1.0 / rate),
        DistributionSpec::Uniform { max } => {
            let l = max.ln();
            let v2 = max * max / 3.0;
            (v2, max * max * (l * l / 3.0 - 2.0 * l / 9.0 + 2.0 / 27.0) / ln2sq)
        }
        DistributionSpec::Lognormal { location, scale } => {
            let s2 = scale * scale;
            let v2 = (2.0 * location + 2.0 * s2).exp();
            let c = location + 2.0 * s2;
            (v2, v2 * (c * c + s2) / ln2sq)
        }
        DistributionSpec::Gamma { shape, scale } => gamma_second_moments(shape, scale),
        DistributionSpec::ChiSquared { dof } => gamma_second_moments(dof as f64 / 2.0, 2.0),
        DistributionSpec::Beta { alpha, beta } => {
            let v2 = alpha * (alpha + 1.0) / ((alpha + beta) * (alpha + beta + 1.0));
            let d = digamma(alpha + 2.0) - digamma(alpha + beta + 2.0);
            let t = trigamma(alpha + 2.0) - trigamma(alpha + beta + 2.0);
            (v2, v2 * (d * d + t) / ln2sq)
        }
        DistributionSpec::TwoPoint { epsilon } => (epsilon, 0.0),
        DistributionSpec::PointMass { value } => {
            let vl = value * value.log2();
            (value * value, vl * vl)
        }
    }
}

fn gamma_second_moments(shape: f64, scale: f64) -> (f64, f64) {
    // E[V^s] = θ^s Γ(k+s)/Γ(k); differentiate twice in s at s = 2
    let v2 = shape * (shape + 1.0) * scale * scale;
    let d = digamma(shape + 2.0) + scale.ln();
    (v2, v2 * (d * d + trigamma(shape + 2.0)) / (LN_2 * LN_2))
}

/// `Ent(V) = μ₂ − μ₁ log₂ μ₁`.
pub fn phi_entropy(m: &MomentPair) -> f64 {
    m.mu2 - m.mu1 * m.mu1.log2()
}

/// Limit of the capacity as the alphabets grow: `μ₂/μ₁ − log₂ μ₁`.
pub fn asymptotic_capacity(spec: &DistributionSpec) -> f64 {
    asymptotic_capacity_from_moments(&analytic_moments(spec))
}

pub fn asymptotic_capacity_from_moments(m: &MomentPair) -> f64 {
    m.mu2 / m.mu1 - m.mu1.log2()
}

/// Monte-Carlo moments together with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMoments {
    pub moments: MomentPair,
    pub std_err_mu1: f64,
    pub std_err_mu2: f64,
}

const MOMENT_CHUNK: usize = 1 << 14;

/// Sample means of `V` and `V log₂ V` over `count` draws.
pub fn empirical_moments(spec: &DistributionSpec, count: usize, seed: u64) -> Result<MomentPair> {
    Ok(empirical_moments_with_error(spec, count, seed)?.moments)
}

pub fn empirical_moments_with_error(
    spec: &DistributionSpec,
    count: usize,
    seed: u64,
) -> Result<EmpiricalMoments> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let sampler = Sampler::new(spec);
    let chunks = count.div_ceil(MOMENT_CHUNK);
    // fixed-size chunks summed in index order keep the result thread-count independent
    let partials: Vec<[f64; 4]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * MOMENT_CHUNK;
            let end = (start + MOMENT_CHUNK).min(count);
            let mut acc = [0.0; 4];
            for i in start..end {
                let mut rng: CounterRng = cell_stream(seed, u64::MAX, i as u64);
                let v = sampler.draw(&mut rng);
                let vl = crate::channel::xlog2x(v);
                acc[0] += v;
                acc[1] += v * v;
                acc[2] += vl;
                acc[3] += vl * vl;
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 4];
    for p in &partials {
        for k in 0..4 {
            tot[k] += p[k];
        }
    }
    let n = count as f64;
    let mean1 = tot[0] / n;
    let mean2 = tot[2] / n;
    let se = |sum_sq: f64, mean: f64| {
        if count < 2 {
            0.0
        } else {
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        }
    };
    Ok(EmpiricalMoments {
        moments: MomentPair { mu1: mean1, mu2: mean2 },
        std_err_mu1: se(tot[1], mean1),
        std_err_mu2: se(tot[3], mean2),
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn sample_shape_and_determinism() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let v = sample_gain_matrix(&spec, 4, 1.5, 9).unwrap();
        assert_eq!((v.rows(), v.cols()), (4, 6));
        let w = sample_gain_matrix(&spec, 4, 1.5, 9).unwrap();
        assert_eq!(v, w);
        let other = sample_gain_matrix(&spec, 4, 1.5, 10).unwrap();
        assert_ne!(v.as_slice(), other.as_slice());
        assert_eq!(v.provenance().unwrap().seed, 9);
    }

    #[test]
    fn sample_is_prefix_stable() {
        // cell addressing: a smaller matrix is the top-left block of a larger one
        let spec = DistributionSpec::gamma(2.5, 1.0).unwrap();
        let small = sample_gain_matrix(&spec, 3, 1.0, 5).unwrap();
        let big = sample_gain_matrix(&spec, 5, 2.0, 5).unwrap();
        for x in 0..3 {
            assert_eq!(small.row(x), &big.row(x)[..3]);
        }
    }

    #[test]
    fn exponential_sample_mean() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let v = sample_gain_matrix(&spec, 200, 1.0, 2024).unwrap();
        let mean = v.as_slice().iter().sum::<f64>() / v.as_slice().len() as f64;
        assert!((0.95..=1.05).contains(&mean), "mean {mean}");
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(DistributionSpec::exponential(0.0).is_err());
        assert!(DistributionSpec::exponential(f64::INFINITY).is_err());
        assert!(DistributionSpec::uniform(-1.0).is_err());
        assert!(DistributionSpec::lognormal(f64::NAN, 1.0).is_err());
        assert!(DistributionSpec::lognormal(0.0, 0.0).is_err());
        assert!(DistributionSpec::gamma(1.0, 0.0).is_err());
        assert!(DistributionSpec::chi_squared(0).is_err());
        assert!(DistributionSpec::beta(0.0, 1.0).is_err());
        assert!(DistributionSpec::two_point(1.0).is_err());
        assert!(DistributionSpec::two_point(0.0).is_err());
        assert!(DistributionSpec::point_mass(0.0).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let spec = DistributionSpec::gamma(2.0, 0.5).unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"family":"gamma","params":{"shape":2.0,"scale":0.5}}"#);
        let back: DistributionSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let alias: DistributionSpec =
            serde_json::from_str(r#"{"family":"exp","params":{"rate":0.1}}"#).unwrap();
        assert_eq!(alias, DistributionSpec::Exponential { rate: 0.1 });
        assert!(serde_json::from_str::<DistributionSpec>(
            r#"{"family":"exponential","params":{"rate":-1}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<DistributionSpec>(r#"{"family":"cauchy","params":{}}"#)
            .is_err());
    }

    #[test]
    fn family_params_parsing() {
        let p = vec![("rate".to_string(), 0.1)];
        assert_eq!(
            DistributionSpec::from_family_params("exp", &p).unwrap(),
            DistributionSpec::Exponential { rate: 0.1 }
        );
        let p = vec![("k".to_string(), 3.0)];
        assert_eq!(
            DistributionSpec::from_family_params("chi2", &p).unwrap(),
            DistributionSpec::ChiSquared { dof: 3 }
        );
        let p = vec![("k".to_string(), 2.5)];
        assert!(DistributionSpec::from_family_params("chi2", &p).is_err());
        let p = vec![("rate".to_string(), 1.0), ("extra".to_string(), 2.0)];
        assert!(DistributionSpec::from_family_params("exp", &p).is_err());
        assert!(DistributionSpec::from_family_params("exp", &[]).is_err());
        assert_eq!(parse_param(" rate = 0.5 ").unwrap(), ("rate".to_string(), 0.5));
        assert!(parse_param("rate").is_err());
        assert!(parse_param("=1").is_err());
        assert!(parse_param("rate=inf").is_err());
    }

    #[test]
    fn analytic_moment_examples() {
        let m = analytic_moments(&DistributionSpec::exponential(1.0).unwrap());
        assert_eq!(m.mu1, 1.0);
        assert_abs_diff_eq!(m.mu2, (1.0 - EULER_GAMMA) / LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mu2, 0.609_948_863_612_096_2, epsilon = 1e-12);

        let m = analytic_moments(&DistributionSpec::uniform(2.0).unwrap());
        assert_eq!(m.mu1, 1.0);
        assert_abs_diff_eq!(m.mu2, 0.278_652_479_555_518_3, epsilon = 1e-12);

        let m = analytic_moments(&DistributionSpec::lognormal(0.0, 1.0).unwrap());
        assert_abs_diff_eq!(m.mu1, 0.5f64.exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.mu2, 0.5f64.exp() / LN_2, epsilon = 1e-15);
    }

    #[test]
    fn phi_entropy_examples() {
        let pm = analytic_moments(&DistributionSpec::point_mass(3.7).unwrap());
        assert_abs_diff_eq!(phi_entropy(&pm), 0.0, epsilon = 1e-15);
        let e = analytic_moments(&DistributionSpec::exponential(1.0).unwrap());
        assert_abs_diff_eq!(phi_entropy(&e), 0.609_948_863_612_096_2, epsilon = 1e-12);
        let tp = analytic_moments(&DistributionSpec::two_point(0.25).unwrap());
        assert_abs_diff_eq!(phi_entropy(&tp), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phi_entropy(&tp) / tp.mu1, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn asymptotic_capacity_examples() {
        for rate in [0.01, 0.1, 1.0, 7.5] {
            let c = asymptotic_capacity(&DistributionSpec::exponential(rate).unwrap());
            assert_abs_diff_eq!(c, 0.609_948_863_612_096_2, epsilon = 1e-12);
        }
        let c = asymptotic_capacity(&DistributionSpec::lognormal(0.3, 1.0).unwrap());
        assert_abs_diff_eq!(c, 0.721_347_520_444_481_7, epsilon = 1e-12);
        for max in [0.5, 2.0, 30.0] {
            let c = asymptotic_capacity(&DistributionSpec::uniform(max).unwrap());
            assert_abs_diff_eq!(c, 1.0 - 1.0 / (2.0 * LN_2), epsilon = 1e-12);
        }
        let c = asymptotic_capacity(&DistributionSpec::two_point(0.125).unwrap());
        assert_abs_diff_eq!(c, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_family_closed_form() {
        // ψ(1+k)/ln 2 − log₂ k, independent of θ
        for (k, theta) in [(0.5, 1.0), (2.0, 3.0), (7.0, 0.1)] {
            let c = asymptotic_capacity(&DistributionSpec::gamma(k, theta).unwrap());
            assert_abs_diff_eq!(c, digamma(1.0 + k) / LN_2 - k.log2(), epsilon = 1e-12);
        }
        // gamma(1, 1/λ) is exponential(λ)
        let g = asymptotic_capacity(&DistributionSpec::gamma(1.0, 4.0).unwrap());
        assert_abs_diff_eq!(g, (1.0 - EULER_GAMMA) / LN_2, epsilon = 1e-12);
    }

    #[test]
    fn chi_squared_matches_gamma() {
        for k in [1u32, 2, 5, 12] {
            let chi = asymptotic_capacity(&DistributionSpec::chi_squared(k).unwrap());
            let gam = asymptotic_capacity(&DistributionSpec::gamma(k as f64 / 2.0, 2.0).unwrap());
            assert_abs_diff_eq!(chi, gam, epsilon = 1e-12);
            let kf = k as f64;
            assert_abs_diff_eq!(
                chi,
                1.0 + digamma(1.0 + kf / 2.0) / LN_2 - kf.log2(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn beta_one_one_is_uniform() {
        let b = asymptotic_capacity(&DistributionSpec::beta(1.0, 1.0).unwrap());
        let u = asymptotic_capacity(&DistributionSpec::uniform(1.0).unwrap());
        assert_abs_diff_eq!(b, u, epsilon = 1e-12);
    }

    #[test]
    fn second_moments_special_cases() {
        // exponential(1): E[V²] = 2
        let (v2, _) = analytic_second_moments(&DistributionSpec::exponential(1.0).unwrap());
        assert_abs_diff_eq!(v2, 2.0, epsilon = 1e-12);
        // beta(1,1) = uniform(1)
        let b = analytic_second_moments(&DistributionSpec::beta(1.0, 1.0).unwrap());
        let u = analytic_second_moments(&DistributionSpec::uniform(1.0).unwrap());
        assert_abs_diff_eq!(b.0, u.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.1, u.1, epsilon = 1e-12);
        // uniform(1): ∫ x² ln² x = 2/27
        assert_abs_diff_eq!(u.1, 2.0 / 27.0 / (LN_2 * LN_2), epsilon = 1e-12);
    }

    #[test]
    fn empirical_point_mass_is_exact() {
        let m = empirical_moments(&DistributionSpec::point_mass(2.0).unwrap(), 17, 3).unwrap();
        assert_eq!((m.mu1, m.mu2), (2.0, 2.0));
        assert!(empirical_moments(&DistributionSpec::point_mass(2.0).unwrap(), 0, 3).is_err());
    }
}
