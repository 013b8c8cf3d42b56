//! Capacity bounds from the Lagrange dual of the output-augmented capacity
//! program, and a bracket solver built on Blahut–Arimoto iterations.
//!
//! For any `λ ∈ ℝᵐ` the dual function is `G(λ) + F(λ)` with
//!
//! ```text
//! G(λ) = max_x (Wλ − r)_x          F(λ) = log₂ Σ_y 2^(−λ_y)
//! ```
//!
//! and weak duality gives `I(p, W) ≤ G(λ) + F(λ)` for every input `p`.
//! Setting `λ_y = −log₂ q_y` for an output distribution `q` makes `F = 0`
//! and `G = max_x D(W_x ‖ q)`, which is the certificate the solver reports.

use serde::Serialize;

use crate::channel::{
    conditional_entropy_vector, mutual_information, relative_entropy_of, xlog2x, ChannelMatrix,
    ProbabilityVector,
};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Inputs that underflow below this are lifted back to it so the iteration
/// cannot lock a symbol at zero.
const PROBABILITY_FLOOR: f64 = 1e-300;

/// A dual point together with its dual objective value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    pub lambda: Vec<f64>,
    pub value: f64,
}

impl DualCertificate {
    pub fn evaluate(lambda: Vec<f64>, w: &ChannelMatrix) -> Result<Self> {
        let value = dual_g(&lambda, w)? + dual_f(&lambda);
        Ok(DualCertificate { lambda, value })
    }

    /// `G(λ) + F(λ)` recomputed from scratch.
    pub fn recompute(&self, w: &ChannelMatrix) -> Result<f64> {
        Ok(dual_g(&self.lambda, w)? + dual_f(&self.lambda))
    }
}

/// Certified `lower ≤ C(W) ≤ upper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityBracket {
    pub lower: f64,
    pub upper: f64,
    pub input_distribution: ProbabilityVector,
    pub certificate: DualCertificate,
    pub iterations: usize,
    /// False when `max_iter` ran out before the gap closed; the bracket is
    /// still valid.
    pub converged: bool,
}

impl CapacityBracket {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolverOptions {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
        }
        if max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(SolverOptions { tol, max_iter })
    }
}

/// `G(λ) = max_x Σ_y W_{x,y} λ_y − r_x`. Zero entries of `W` contribute
/// nothing even against an infinite `λ_y`. Ties go to the lowest row.
pub fn dual_g(lambda: &[f64], w: &ChannelMatrix) -> Result<f64> {
    Ok(dual_g_argmax(lambda, w)?.1)
}

pub(crate) fn dual_g_argmax(lambda: &[f64], w: &ChannelMatrix) -> Result<(usize, f64)> {
    if lambda.len() != w.cols() {
        return Err(Error::DimensionMismatch {
            expected: w.cols(),
            found: lambda.len(),
        });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (x, row) in w.row_iter().enumerate() {
        let mut v = 0.0;
        for (&wxy, &l) in row.iter().zip(lambda) {
            if wxy > 0.0 {
                v += wxy * l + xlog2x(wxy);
            }
        }
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// `F(λ) = log₂ Σ_y 2^(−λ_y)`, shifted by `min λ` so large entries cannot
/// overflow.
pub fn dual_f(lambda: &[f64]) -> f64 {
    let shift = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    if shift == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    if shift == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = lambda.iter().map(|&l| (shift - l).exp2()).sum();
    s.log2() - shift
}

/// `G(0) + F(0) = max_x Σ_y W_{x,y} log₂ W_{x,y} + log₂ m`.
pub fn upper_bound_lambda0(w: &ChannelMatrix) -> f64 {
    let min_row_entropy = conditional_entropy_vector(w)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    (w.cols() as f64).log2() - min_row_entropy
}

/// Mutual information at the uniform input.
pub fn lower_bound_uniform(w: &ChannelMatrix) -> f64 {
    mutual_information(&ProbabilityVector::uniform(w.rows()), w)
        .expect("uniform input has the right length")
}

/// Dual certificate at `λ = −log₂ q`; its value is `max_x D(W_x ‖ q)`, or
/// `+∞` if some row puts mass where `q` has none.
pub fn upper_bound_from_output(q: &ProbabilityVector, w: &ChannelMatrix) -> Result<DualCertificate> {
    if q.len() != w.cols() {
        return Err(Error::DimensionMismatch {
            expected: w.cols(),
            found: q.len(),
        });
    }
    let lambda: Vec<f64> = q.as_slice().iter().map(|&qy| -qy.log2()).collect();
    let value = w
        .row_iter()
        .map(|row| relative_entropy_of(row, q.as_slice()))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DualCertificate { lambda, value })
}

/// Bounds produced by one evaluation of the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationBounds {
    /// `I(p_t, W)`.
    pub lower: f64,
    /// `max_x D(W_x ‖ p_t W)`.
    pub upper: f64,
}

/// Blahut–Arimoto iteration `p_{t+1}(x) ∝ p_t(x) · 2^{D(W_x ‖ p_t W)}`.
///
/// The per-row divergence is `−r_x − Σ_y W_{x,y} log₂ q_y`, so each step costs
/// two passes over `W` and `m` logarithms.
pub struct BlahutArimoto<'a> {
    w: &'a ChannelMatrix,
    neg_row_entropy: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    log_q: Vec<f64>,
    divergence: Vec<f64>,
}

impl<'a> BlahutArimoto<'a> {
    /// Starts from the uniform input.
    pub fn new(w: &'a ChannelMatrix) -> Self {
        Self::with_input(w, ProbabilityVector::uniform(w.rows())).expect("uniform input fits")
    }

    pub fn with_input(w: &'a ChannelMatrix, p: ProbabilityVector) -> Result<Self> {
        if p.len() != w.rows() {
            return Err(Error::DimensionMismatch {
                expected: w.rows(),
                found: p.len(),
            });
        }
        let mut p = p.into_vec();
        floor_and_normalize(&mut p);
        Ok(BlahutArimoto {
            w,
            neg_row_entropy: conditional_entropy_vector(w).into_iter().map(|r| -r).collect(),
            p,
            q: vec![0.0; w.cols()],
            log_q: vec![0.0; w.cols()],
            divergence: vec![0.0; w.rows()],
        })
    }

    pub fn input(&self) -> &[f64] {
        &self.p
    }

    /// Output distribution of the last evaluation.
    pub fn output(&self) -> &[f64] {
        &self.q
    }

    /// Bounds at the current input, without moving it.
    pub fn evaluate(&mut self) -> IterationBounds {
        self.q = self.w.push_forward(&self.p);
        for (lq, &qy) in self.log_q.iter_mut().zip(&self.q) {
            *lq = if qy > 0.0 { qy.log2() } else { f64::NEG_INFINITY };
        }
        let mut lower = 0.0;
        let mut upper = f64::NEG_INFINITY;
        for (x, row) in self.w.row_iter().enumerate() {
            let mut cross = 0.0;
            for (&wxy, &lq) in row.iter().zip(&self.log_q) {
                if wxy > 0.0 {
                    cross += wxy * lq;
                }
            }
            let d = (self.neg_row_entropy[x] - cross).max(0.0);
            self.divergence[x] = d;
            lower += self.p[x] * d;
            if d > upper {
                upper = d;
            }
        }
        IterationBounds { lower, upper }
    }

    /// Evaluates at the current input, then moves to the next iterate.
    pub fn step(&mut self) -> IterationBounds {
        let bounds = self.evaluate();
        let top = bounds.upper;
        for (px, &d) in self.p.iter_mut().zip(&self.divergence) {
            *px *= (d - top).exp2();
        }
        floor_and_normalize(&mut self.p);
        bounds
    }
}

fn floor_and_normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    if p.iter().any(|&v| v < PROBABILITY_FLOOR) {
        p.iter_mut().for_each(|v| *v = v.max(PROBABILITY_FLOOR));
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
    }
}

/// Runs the iteration from the uniform input until `upper − lower ≤ tol`.
///
/// The reported lower bound is the best one seen (with its input), and the
/// reported upper bound is the best certificate seen, so both move
/// monotonically toward the capacity.
pub fn solve_capacity(w: &ChannelMatrix, opts: SolverOptions) -> Result<CapacityBracket> {
    solve_capacity_traced(w, opts).map(|(b, _)| b)
}

/// As [`solve_capacity`], also returning the raw bounds of every iteration.
pub fn solve_capacity_traced(
    w: &ChannelMatrix,
    opts: SolverOptions,
) -> Result<(CapacityBracket, Vec<IterationBounds>)> {
    let opts = SolverOptions::new(opts.tol, opts.max_iter)?;
    let mut ba = BlahutArimoto::new(w);
    let mut trace = Vec::new();

    let mut best_lower = f64::NEG_INFINITY;
    let mut best_input = Vec::new();
    let mut best_upper = f64::INFINITY;
    let mut best_output = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let input = ba.input().to_vec();
        let bounds = ba.evaluate();
        iterations += 1;
        trace.push(bounds);
        if bounds.lower > best_lower {
            best_lower = bounds.lower;
            best_input = input;
        }
        if bounds.upper < best_upper {
            best_upper = bounds.upper;
            best_output = ba.output().to_vec();
        }
        if best_upper - best_lower <= opts.tol {
            converged = true;
            break;
        }
        ba.step();
    }

    let input_distribution = ProbabilityVector::from_weights(best_input)?;
    let output = ProbabilityVector::from_weights(best_output)?;
    let certificate = upper_bound_from_output(&output, w)?;
    // both bounds recomputed from the stored witnesses
    let lower = mutual_information(&input_distribution, w)?;
    let upper = certificate.value.max(lower);
    Ok((
        CapacityBracket {
            lower,
            upper,
            input_distribution,
            certificate,
            iterations,
            converged,
        },
        trace,
    ))
}
