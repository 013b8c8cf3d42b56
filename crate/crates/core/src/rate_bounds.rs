//! Finite-size deviation bounds for the capacity of row-normalized random
//! channels around `μ₂,ₙ/μ₁,ₙ − log₂ μ₁,ₙ`.
//!
//! All bounds are assembled from the tail function
//! `f(t, n) = exp(−n t² / (2(K + T t)))`. This is not the same as the
//! `exp(−n² t² / (2(K + T n t)))` form of the Bernstein inequality; the `f`
//! form is used throughout.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::channel::{normalize_rows, GainMatrix};
use crate::distributions::{analytic_moments, analytic_second_moments, DistributionSpec};
use crate::error::{Error, Result};

/// Moment-growth constants `K` (variance proxy) and `T` (scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinConstants {
    pub k: f64,
    pub t: f64,
}

impl BernsteinConstants {
    pub fn new(k: f64, t: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) || !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Bernstein constants must be positive, got K={k}, T={t}"
            )));
        }
        Ok(BernsteinConstants { k, t })
    }

    /// `K = max(E[V²], E[(V log₂ V)²])` and `T = 1`.
    ///
    /// `T` is not derived from the distribution; callers that know a valid
    /// value should override it.
    pub fn default_for(spec: &DistributionSpec) -> Result<Self> {
        ensure_rate_family(spec)?;
        let (v2, vlog2) = analytic_second_moments(spec);
        BernsteinConstants::new(v2.max(vlog2), 1.0)
    }
}

/// Inputs to the deviation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBoundParams {
    pub mu1n: f64,
    /// In bits.
    pub mu2n: f64,
    pub constants: BernsteinConstants,
    /// Lower bound on the constant `a` of the upper-bound deviation.
    pub a_ub: f64,
    /// Lower bound on the constant `a` of the lower-bound deviation.
    pub a_lb: f64,
}

impl RateBoundParams {
    pub fn new(
        mu1n: f64,
        mu2n: f64,
        constants: BernsteinConstants,
        a_ub: f64,
        a_lb: f64,
    ) -> Result<Self> {
        if !(mu1n > 0.0 && mu1n.is_finite()) || !mu2n.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need mu1n > 0 and finite mu2n, got ({mu1n}, {mu2n})"
            )));
        }
        if !(a_ub > 0.0) || !(a_lb > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "a bounds must be positive, got a_ub={a_ub}, a_lb={a_lb}"
            )));
        }
        Ok(RateBoundParams {
            mu1n,
            mu2n,
            constants,
            a_ub,
            a_lb,
        })
    }

    /// Moments taken from the i.i.d. family.
    pub fn for_spec(
        spec: &DistributionSpec,
        constants: BernsteinConstants,
        a_ub: f64,
        a_lb: f64,
    ) -> Result<Self> {
        ensure_rate_family(spec)?;
        let m = analytic_moments(spec);
        RateBoundParams::new(m.mu1, m.mu2, constants, a_ub, a_lb)
    }

    /// The centre the bounds are stated around.
    pub fn asymptote(&self) -> f64 {
        self.mu2n / self.mu1n - self.mu1n.log2()
    }
}

fn ensure_rate_family(spec: &DistributionSpec) -> Result<()> {
    match spec {
        DistributionSpec::TwoPoint { .. } | DistributionSpec::PointMass { .. } => {
            Err(Error::InvalidArgument(format!(
                "{} is only supported by the asymptotic formula, not by the rate bounds",
                spec.family_name()
            )))
        }
        _ => Ok(()),
    }
}

/// A probability bound as computed and as a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub raw: f64,
    pub clamped: f64,
}

impl BoundValue {
    fn new(raw: f64) -> Self {
        BoundValue {
            raw,
            clamped: raw.min(1.0),
        }
    }
}

/// `f(t, n) = exp(−n t² / (2(K + T t)))`.
pub fn tail_f(t: f64, n: u64, c: &BernsteinConstants) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be nonnegative, got {t}")));
    }
    if t == f64::INFINITY {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    Ok((-(n as f64) * t * t / (2.0 * (c.k + c.t * t))).exp())
}

/// Ratio deviation level, with the branch chosen by the sign of `μ₁ + μ₂`.
pub fn alpha_t(t: f64, mu1n: f64, mu2n: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let denom = if mu1n + mu2n >= 0.0 {
        mu1n * (1.0 + t) + mu2n
    } else {
        mu1n * (1.0 - t) + mu2n
    };
    if !(denom > 0.0) {
        return Err(Error::InvalidRegime(format!(
            "alpha_t denominator is {denom} at t={t}, mu1n={mu1n}, mu2n={mu2n}"
        )));
    }
    Ok(t * mu1n * mu1n / denom)
}

/// `β_t = t μ₁ / (2 + t)`.
pub fn beta_t(t: f64, mu1n: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if t == f64::INFINITY {
        return Ok(mu1n);
    }
    Ok(t * mu1n / (2.0 + t))
}

/// Lipschitz constant of `log₂` on `[a, ∞)`: `1/(a ln 2)`.
pub fn lipschitz_l(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("a must be positive, got {a}")));
    }
    Ok(1.0 / (a * LN_2))
}

/// `2 f(α_{t/2}, s) + f(t/(2L), s)`.
fn ub_branch(t: f64, s: u64, p: &RateBoundParams, l: f64) -> Result<f64> {
    let c = &p.constants;
    let alpha = alpha_t(t / 2.0, p.mu1n, p.mu2n)?;
    Ok(2.0 * tail_f(alpha, s, c)? + tail_f(t / (2.0 * l), s, c)?)
}

/// `2 f(α_{t/4}, m) + f(t/(4L), m) + f(β_{t/(2L)}, n) + f(β_{t/(2L)}, m)`.
fn lb_branch(t: f64, n: u64, m: u64, p: &RateBoundParams, l: f64) -> Result<f64> {
    let c = &p.constants;
    let alpha = alpha_t(t / 4.0, p.mu1n, p.mu2n)?;
    let beta = beta_t(t / (2.0 * l), p.mu1n)?;
    Ok(2.0 * tail_f(alpha, m, c)?
        + tail_f(t / (4.0 * l), m, c)?
        + tail_f(beta, n, c)?
        + tail_f(beta, m, c)?)
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t must be positive and finite, got {t}")))
    }
}

/// Bound on `P[|C_UB(λ=0) − asymptote| ≥ t]`, evaluated at `n` as stated
/// for the upper bound and with `a = a_ub`.
pub fn prop4_ub_tail(t: f64, n: u64, params: &RateBoundParams) -> Result<BoundValue> {
    check_t(t)?;
    let l = lipschitz_l(params.a_ub)?;
    Ok(BoundValue::new(ub_branch(t, n, params, l)?))
}

/// Bound on `P[|C_LB(uniform) − asymptote| ≥ t]` with `a = a_lb`.
pub fn prop5_lb_tail(t: f64, n: u64, m: u64, params: &RateBoundParams) -> Result<BoundValue> {
    check_t(t)?;
    let l = lipschitz_l(params.a_lb)?;
    Ok(BoundValue::new(lb_branch(t, n, m, params, l)?))
}

/// Both branches of the capacity deviation bound and their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem2Bound {
    pub ub_branch: f64,
    pub lb_branch: f64,
    pub value: BoundValue,
}

/// Bound on `P[|C(W) − asymptote| ≥ t]`.
///
/// Uses a single constant `a = min(a_ub, a_lb)` for both branches, and
/// evaluates the upper-bound branch at `m`.
pub fn theorem2_tail(t: f64, n: u64, m: u64, params: &RateBoundParams) -> Result<Theorem2Bound> {
    check_t(t)?;
    let l = lipschitz_l(params.a_ub.min(params.a_lb))?;
    let ub = ub_branch(t, m, params, l)?;
    let lb = lb_branch(t, n, m, params, l)?;
    Ok(Theorem2Bound {
        ub_branch: ub,
        lb_branch: lb,
        value: BoundValue::new(ub.max(lb)),
    })
}

/// The constant `a` as realized by one sampled gain matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealizedA {
    /// `min(min_x (1/m) Σ_y V_{x,y}, μ₁,ₙ)`.
    pub a_ub: f64,
    /// `min(min_y Σ_k W_{k,y}, n/m)`.
    pub a_lb: f64,
}

pub fn realized_a(v: &GainMatrix, mu1n: f64) -> Result<RealizedA> {
    let w = normalize_rows(v)?;
    let m = v.cols() as f64;
    let min_row_mean = (0..v.rows())
        .map(|x| v.row(x).iter().sum::<f64>() / m)
        .fold(f64::INFINITY, f64::min);
    let mut col_sums = vec![0.0; w.cols()];
    for row in w.row_iter() {
        for (s, &e) in col_sums.iter_mut().zip(row) {
            *s += e;
        }
    }
    let min_col_sum = col_sums.into_iter().fold(f64::INFINITY, f64::min);
    Ok(RealizedA {
        a_ub: min_row_mean.min(mu1n),
        a_lb: min_col_sum.min(v.rows() as f64 / m),
    })
}
