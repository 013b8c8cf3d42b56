//! Finite-alphabet probability objects and the information measures built on
//! them. Every quantity is reported in bits.
//!
//! Conventions used throughout:
//!
//! * `0 · log 0 = 0`, so deterministic rows have zero entropy.
//! * Simplex membership is checked with an absolute tolerance of
//!   [`SIMPLEX_TOL`]; accepted inputs are rescaled so they sum to one exactly
//!   (up to rounding) before they are stored.
//! * A relative entropy whose support condition fails evaluates to
//!   `f64::INFINITY` instead of erroring, because dual bounds consult it.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};

/// Tolerance for "sums to one".
pub const SIMPLEX_TOL: f64 = 1e-9;

/// `x · log₂ x` with the continuity convention at zero.
#[inline]
pub(crate) fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        let mut sum = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidProbability(format!("entry {i} is not finite")));
            }
            if v < 0.0 {
                return Err(Error::InvalidProbability(format!("entry {i} is negative ({v})")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidProbability(format!("entries sum to {sum}")));
        }
        Ok(Self::renormalized(values, sum))
    }

    /// Builds a distribution from nonnegative weights with positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidProbability(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidProbability("weights sum to zero".into()));
        }
        Ok(Self::renormalized(weights, sum))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one outcome");
        ProbabilityVector(vec![1.0 / n as f64; n])
    }

    fn renormalized(mut values: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            values.iter_mut().for_each(|v| *v /= sum);
        }
        ProbabilityVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for ProbabilityVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        ProbabilityVector::new(values).map_err(serde::de::Error::custom)
    }
}

impl AsRef<[f64]> for ProbabilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Row-stochastic `n × m` transition matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ChannelMatrix {
    /// Validates nonnegativity and row sums, then rescales each row to sum to one.
    pub fn new(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidChannel {
                row: 0,
                reason: "channel needs at least one row and one column".into(),
            });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        for (x, row) in data.chunks_exact_mut(cols).enumerate() {
            let mut sum = 0.0;
            for (y, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidChannel {
                        row: x,
                        reason: format!("entry in column {y} is {w}"),
                    });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidChannel {
                    row: x,
                    reason: format!("row sums to {sum}"),
                });
            }
            if sum != 1.0 {
                row.iter_mut().for_each(|w| *w /= sum);
            }
        }
        Ok(ChannelMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidChannel {
                    row: x,
                    reason: format!("expected {cols} columns, found {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        ChannelMatrix::new(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        ChannelMatrix { rows: n, cols: n, data }
    }

    /// Every row uniform over `cols` outputs.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        ChannelMatrix {
            rows,
            cols,
            data: vec![1.0 / cols as f64; rows * cols],
        }
    }

    /// Wraps rows already known to be exactly normalized.
    pub(crate) fn from_normalized(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        ChannelMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.cols..(x + 1) * self.cols]
    }

    pub fn row_iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Output distribution `pW`.
    pub fn output_distribution(&self, p: &ProbabilityVector) -> Result<ProbabilityVector> {
        self.check_input_len(p)?;
        Ok(ProbabilityVector(self.push_forward(p.as_slice())))
    }

    pub(crate) fn push_forward(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.cols];
        for (row, &px) in self.row_iter().zip(p) {
            if px == 0.0 {
                continue;
            }
            for (qy, &w) in q.iter_mut().zip(row) {
                *qy += px * w;
            }
        }
        q
    }

    fn check_input_len(&self, p: &ProbabilityVector) -> Result<()> {
        if p.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: p.len(),
            });
        }
        Ok(())
    }
}

/// Provenance of a sampled gain matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: DistributionSpec,
    pub seed: u64,
}

/// Nonnegative matrix prior to row normalization.
///
/// Construction only checks that entries are finite and nonnegative. Rows
/// summing to zero are reported by [`normalize_rows`], which is where the
/// positivity requirement matters.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    provenance: Option<Provenance>,
}

impl GainMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGain {
                row: 0,
                col: 0,
                reason: "matrix needs at least one row and one column".into(),
            });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGain {
                row: i / cols,
                col: i % cols,
                reason: format!("entry is {}", data[i]),
            });
        }
        Ok(GainMatrix {
            rows,
            cols,
            data,
            provenance: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidGain {
                    row: x,
                    col: row.len().min(cols),
                    reason: format!("expected {cols} columns, found {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        GainMatrix::new(rows.len(), cols, data)
    }

    pub(crate) fn from_sampled(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        provenance: Provenance,
    ) -> Self {
        GainMatrix {
            rows,
            cols,
            data,
            provenance: Some(provenance),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.cols..(x + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Multiplies every entry by `alpha > 0`, keeping provenance.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {alpha}")));
        }
        Ok(GainMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * alpha).collect(),
            provenance: self.provenance.clone(),
        })
    }
}

/// Shannon entropy `H(p)`.
pub fn entropy(p: &ProbabilityVector) -> f64 {
    entropy_of(p.as_slice())
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// Relative entropy `D(a‖b)`; `+∞` when `a` is not absolutely continuous
/// with respect to `b`.
pub fn relative_entropy(a: &ProbabilityVector, b: &ProbabilityVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(relative_entropy_of(a.as_slice(), b.as_slice()))
}

pub(crate) fn relative_entropy_of(a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&ai, &bi) in a.iter().zip(b) {
        if ai > 0.0 {
            if bi <= 0.0 {
                return f64::INFINITY;
            }
            d += ai * (ai / bi).log2();
        }
    }
    // rounding can leave a tiny negative value for a ≈ b
    d.max(0.0)
}

/// Row entropies `r_x = H(W_{x,·})`.
pub fn conditional_entropy_vector(w: &ChannelMatrix) -> Vec<f64> {
    w.row_iter().map(entropy_of).collect()
}

/// `I(p, W) = Σ_x p_x D(W_x ‖ pW)`.
pub fn mutual_information(p: &ProbabilityVector, w: &ChannelMatrix) -> Result<f64> {
    w.check_input_len(p)?;
    let q = w.push_forward(p.as_slice());
    let mut info = 0.0;
    for (row, &px) in w.row_iter().zip(p.as_slice()) {
        if px > 0.0 {
            info += px * relative_entropy_of(row, &q);
        }
    }
    Ok(info)
}

/// `I(p, W) = H(pW) − Σ_x p_x r_x`, computed without any divergence.
pub fn mutual_information_entropy_form(p: &ProbabilityVector, w: &ChannelMatrix) -> Result<f64> {
    w.check_input_len(p)?;
    let q = w.push_forward(p.as_slice());
    let noise: f64 = conditional_entropy_vector(w)
        .iter()
        .zip(p.as_slice())
        .map(|(r, px)| r * px)
        .sum();
    Ok((entropy_of(&q) - noise).max(0.0))
}

/// `W_{x,y} = V_{x,y} / Σ_y V_{x,y}`.
pub fn normalize_rows(v: &GainMatrix) -> Result<ChannelMatrix> {
    let cols = v.cols;
    let mut data = Vec::with_capacity(v.data.len());
    for (x, row) in v.data.chunks_exact(cols).enumerate() {
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::DegenerateRow { row: x });
        }
        data.extend(row.iter().map(|&e| e / sum));
    }
    Ok(ChannelMatrix::from_normalized(v.rows, cols, data))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    fn skew() -> ChannelMatrix {
        ChannelMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&pv(&[0.5, 0.5])), 1.0, epsilon = 1e-15);
        assert_eq!(entropy(&pv(&[1.0, 0.0, 0.0])), 0.0);
        assert_abs_diff_eq!(entropy(&pv(&[0.9, 0.1])), 0.468_995_593_589_281_2, epsilon = 1e-12);
    }

    #[test]
    fn probability_vector_rejects_bad_input() {
        assert!(ProbabilityVector::new(vec![0.5, -0.1, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
        // within tolerance: accepted and rescaled
        let p = ProbabilityVector::new(vec![0.5 + 4e-10, 0.5]).unwrap();
        assert_abs_diff_eq!(p.as_slice().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn relative_entropy_examples() {
        let a = pv(&[0.3, 0.7]);
        assert_eq!(relative_entropy(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(
            relative_entropy(&pv(&[1.0, 0.0]), &pv(&[0.5, 0.5])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            relative_entropy(&pv(&[0.9, 0.1]), &pv(&[0.55, 0.45])).unwrap(),
            0.422_451_544_380_282_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn relative_entropy_support_violation_is_infinite() {
        let d = relative_entropy(&pv(&[0.5, 0.5]), &pv(&[1.0, 0.0])).unwrap();
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn relative_entropy_length_mismatch() {
        assert!(matches!(
            relative_entropy(&pv(&[1.0]), &pv(&[0.5, 0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conditional_entropy_examples() {
        assert_eq!(conditional_entropy_vector(&ChannelMatrix::identity(2)), vec![0.0, 0.0]);
        let r = conditional_entropy_vector(&ChannelMatrix::uniform(2, 4));
        assert_eq!(r, vec![2.0, 2.0]);
        let r = conditional_entropy_vector(&skew());
        assert_abs_diff_eq!(r[0], 0.468_995_593_589_281_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], 0.721_928_094_887_362_3, epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        let half = ProbabilityVector::uniform(2);
        assert_abs_diff_eq!(
            mutual_information(&half, &ChannelMatrix::identity(2)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let same = ChannelMatrix::from_rows(&vec![vec![0.2, 0.3, 0.5]; 3]).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&pv(&[0.1, 0.6, 0.3]), &same).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            mutual_information(&half, &skew()).unwrap(),
            0.397_312_609_749_486_46,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mutual_information_dimension_mismatch() {
        let err = mutual_information(&ProbabilityVector::uniform(3), &skew());
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 2, found: 3 })));
    }

    #[test]
    fn normalize_rows_examples() {
        let v = GainMatrix::from_rows(&[vec![2.0, 2.0], vec![1.0, 3.0]]).unwrap();
        let w = normalize_rows(&v).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.5, 0.25, 0.75]);

        let v = GainMatrix::from_rows(&[vec![0.0, 7.0, 0.0], vec![3.0, 0.0, 0.0]]).unwrap();
        let w = normalize_rows(&v).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);

        let v = GainMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(normalize_rows(&v), Err(Error::DegenerateRow { row: 0 })));
    }

    #[test]
    fn channel_rejects_bad_rows() {
        assert!(matches!(
            ChannelMatrix::from_rows(&[vec![0.5, 0.5], vec![0.6, 0.6]]),
            Err(Error::InvalidChannel { row: 1, .. })
        ));
        assert!(matches!(
            ChannelMatrix::from_rows(&[vec![1.5, -0.5]]),
            Err(Error::InvalidChannel { row: 0, .. })
        ));
        assert!(ChannelMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn gain_matrix_rejects_negative_entry() {
        let err = GainMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidGain { row: 1, col: 1, .. }));
    }
}
