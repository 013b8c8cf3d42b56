//! Configuration-driven sweeps: capacity versus alphabet size, and the
//! optimal versus fixed experiment study.
//!
//! Every run draws from a seed derived from `(config seed, n, repeat)`, and
//! results are collected in input order, so output files are byte-identical
//! across runs and thread counts (unless wall times are requested).

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{solve_capacity, SolverOptions, DEFAULT_MAX_ITER};
use crate::channel::{normalize_rows, ProbabilityVector};
use crate::design::{
    design_optimum, evaluate_experiment, optimal_gain_search, LognormalFamilyConstraints,
    DEFAULT_RESOLUTION,
};
use crate::distributions::{asymptotic_capacity, output_size, sample_gain_matrix, DistributionSpec};
use crate::error::{Error, Result};
use crate::rng::run_seed;

/// Output encoding of result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}
fn default_repeats() -> usize {
    5
}
fn default_sweep_tol() -> f64 {
    1e-4
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_trials() -> usize {
    100
}
fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}

/// Capacity sweep over alphabet sizes.
///
/// ```json
/// {
///   "family": {"family": "exponential", "params": {"rate": 0.1}},
///   "n_values": [10, 100, 500, 1000],
///   "gamma": 1.0,
///   "repeats": 5,
///   "tol": 1e-4,
///   "seed": 42,
///   "output": "sweep.csv"
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: DistributionSpec,
    pub n_values: Vec<usize>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_sweep_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    /// Written to stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Adds a wall-time column. Off by default since timings make the output
    /// nondeterministic.
    #[serde(default)]
    pub include_timing: bool,
}

fn check_n_values(n_values: &[usize]) -> Result<()> {
    if n_values.is_empty() {
        return Err(Error::Config("n_values must not be empty".into()));
    }
    if n_values[0] == 0 {
        return Err(Error::Config("n_values must be positive".into()));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("n_values must be strictly increasing".into()));
    }
    Ok(())
}

impl SweepConfig {
    pub fn from_json(input: &[u8]) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_slice(input).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        SweepConfig::from_json(&bytes)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        check_n_values(&self.n_values)?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        for &n in &self.n_values {
            output_size(n, self.gamma)?;
        }
        SolverOptions::new(self.tol, self.max_iter)?;
        Ok(())
    }
}

/// One solved channel of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub m: usize,
    pub repeat: usize,
    pub seed: u64,
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    /// `μ₂/μ₁ − log₂ μ₁ − log₂ γ`.
    pub asymptotic: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Runs `f` on a pool of `threads` workers, or on the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("thread count must be at least 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Solves every `(n, repeat)` channel. Non-convergence is recorded in the
/// `converged` column and does not stop the sweep.
pub fn run_capacity_sweep(cfg: &SweepConfig, threads: Option<usize>) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let opts = SolverOptions::new(cfg.tol, cfg.max_iter)?;
    let asymptote = asymptotic_capacity(&cfg.family) - cfg.gamma.log2();
    let runs: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.repeats).map(move |r| (n, r)))
        .collect();
    with_threads(threads, || {
        runs.par_iter()
            .map(|&(n, repeat)| {
                let start = Instant::now();
                let seed = run_seed(cfg.seed, n as u64, repeat as u64);
                let v = sample_gain_matrix(&cfg.family, n, cfg.gamma, seed)?;
                let w = normalize_rows(&v)?;
                let b = solve_capacity(&w, opts)?;
                Ok(SweepRecord {
                    n,
                    m: w.cols(),
                    repeat,
                    seed,
                    lower: b.lower,
                    upper: b.upper,
                    midpoint: b.midpoint(),
                    asymptotic: asymptote,
                    iterations: b.iterations,
                    converged: b.converged,
                    wall_time_s: cfg.include_timing.then(|| start.elapsed().as_secs_f64()),
                })
            })
            .collect()
    })?
}

/// Optimal versus fixed-design study over alphabet sizes, uniform prior.
///
/// ```json
/// {
///   "constraints": {"l1": 1, "u1": 10, "l2": 0, "u2": 2},
///   "n_values": [100, 500, 1000],
///   "trials": 100,
///   "seed": 7
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignStudyConfig {
    #[serde(default)]
    pub constraints: LognormalFamilyConstraints,
    pub n_values: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl DesignStudyConfig {
    pub fn from_json(input: &[u8]) -> Result<Self> {
        let cfg: DesignStudyConfig =
            serde_json::from_slice(input).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        DesignStudyConfig::from_json(&bytes)
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        check_n_values(&self.n_values)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config("resolution must be positive".into()));
        }
        Ok(())
    }
}

/// Summary of one alphabet size of a design study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignStudyRecord {
    pub n: usize,
    pub trials: usize,
    pub optimal_mean: f64,
    pub optimal_variance: f64,
    pub suboptimal_mean: f64,
    pub suboptimal_variance: f64,
    /// `σ*²/(2 ln 2)`.
    pub asymptote: f64,
    /// Set when a single trial makes the variance undefined; it is then
    /// reported as 0.
    pub degenerate: bool,
}

/// Sample mean and unbiased variance; the variance is 0 for one sample.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

pub fn run_design_study(cfg: &DesignStudyConfig, threads: Option<usize>) -> Result<Vec<DesignStudyRecord>> {
    cfg.validate()?;
    let opt = design_optimum(&cfg.constraints)?;
    with_threads(threads, || {
        cfg.n_values
            .iter()
            .map(|&n| {
                let prior = ProbabilityVector::uniform(n);
                let sub = evaluate_experiment(&prior, opt.z_star, opt.sigma2_star, n, cfg.trials, cfg.seed)?;
                let best = optimal_gain_search(&prior, &cfg.constraints, n, cfg.resolution, cfg.trials, cfg.seed)?;
                let (om, ov) = mean_variance(&best);
                let (sm, sv) = mean_variance(&sub);
                Ok(DesignStudyRecord {
                    n,
                    trials: cfg.trials,
                    optimal_mean: om,
                    optimal_variance: ov,
                    suboptimal_mean: sm,
                    suboptimal_variance: sv,
                    asymptote: opt.bound_bits,
                    degenerate: cfg.trials == 1,
                })
            })
            .collect()
    })?
}

/// Formats `v` like C's `%.{digits}g`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

const SIG_DIGITS: usize = 12;

/// Records that can be written as CSV rows.
pub trait Tabular: Serialize {
    /// Column names, given whether the optional timing column is present.
    fn header(timed: bool) -> Vec<&'static str>;
    fn row(&self, timed: bool, out: &mut String);
    fn timed(&self) -> bool {
        false
    }
}

impl Tabular for SweepRecord {
    fn header(timed: bool) -> Vec<&'static str> {
        let mut h = vec![
            "n", "m", "repeat", "seed", "lower", "upper", "midpoint", "asymptotic", "iterations", "converged",
        ];
        if timed {
            h.push("wall_time_s");
        }
        h
    }

    fn row(&self, timed: bool, out: &mut String) {
        let f = |v| format_sig(v, SIG_DIGITS);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.m,
            self.repeat,
            self.seed,
            f(self.lower),
            f(self.upper),
            f(self.midpoint),
            f(self.asymptotic),
            self.iterations,
            self.converged
        );
        if timed {
            let _ = write!(out, ",{}", self.wall_time_s.map_or(String::new(), f));
        }
    }

    fn timed(&self) -> bool {
        self.wall_time_s.is_some()
    }
}

impl Tabular for DesignStudyRecord {
    fn header(_timed: bool) -> Vec<&'static str> {
        vec![
            "n",
            "trials",
            "optimal_mean",
            "optimal_variance",
            "suboptimal_mean",
            "suboptimal_variance",
            "asymptote",
            "degenerate",
        ]
    }

    fn row(&self, _timed: bool, out: &mut String) {
        let f = |v| format_sig(v, SIG_DIGITS);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.trials,
            f(self.optimal_mean),
            f(self.optimal_variance),
            f(self.suboptimal_mean),
            f(self.suboptimal_variance),
            f(self.asymptote),
            self.degenerate
        );
    }
}

/// Encodes records; CSV always starts with the header line.
pub fn render_results<R: Tabular>(records: &[R], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            let timed = records.iter().any(Tabular::timed);
            let mut out = R::header(timed).join(",");
            out.push('\n');
            for r in records {
                r.row(timed, &mut out);
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let mut out =
                serde_json::to_string_pretty(records).map_err(|e| Error::Config(e.to_string()))?;
            out.push('\n');
            Ok(out)
        }
    }
}

/// Writes records to `path`, or to stdout when `path` is `None`.
pub fn emit_results<R: Tabular>(records: &[R], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let text = render_results(records, format)?;
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io(Path::new("<stdout>"), e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_sweep() -> SweepConfig {
        SweepConfig::from_json(
            br#"{"family": {"family": "exponential", "params": {"rate": 0.1}}, "n_values": [4, 9], "repeats": 2, "seed": 5}"#,
        )
        .unwrap()
    }

    #[test]
    fn format_sig_matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (0.609_948_863_612_096_2, "0.609948863612"),
            (123_456_789_012_345.0, "1.23456789012e+14"),
            (1e-7, "1e-07"),
            (-2.5e-5, "-2.5e-05"),
            (0.000_123_456_789_012_345, "0.000123456789012"),
            (100.0, "100"),
            (f64::NAN, "nan"),
            (f64::NEG_INFINITY, "-inf"),
        ];
        for (v, s) in cases {
            assert_eq!(format_sig(v, 12), s, "{v}");
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = small_sweep();
        assert_eq!((c.gamma, c.tol, c.max_iter), (1.0, 1e-4, DEFAULT_MAX_ITER));
        assert!(!c.include_timing);
        let bad = [
            r#"{"family": {"family": "exponential", "params": {"rate": 1}}, "n_values": []}"#,
            r#"{"family": {"family": "exponential", "params": {"rate": 1}}, "n_values": [5, 5]}"#,
            r#"{"family": {"family": "exponential", "params": {"rate": 1}}, "n_values": [5], "repeats": 0}"#,
            r#"{"family": {"family": "exponential", "params": {"rate": -1}}, "n_values": [5]}"#,
            r#"{"family": {"family": "exponential", "params": {"rate": 1}}, "n_values": [5], "tol": 0}"#,
            r#"{"family": {"family": "exponential", "params": {"rate": 1}}, "n_values": [5], "bogus": 1}"#,
        ];
        for b in bad {
            assert!(SweepConfig::from_json(b.as_bytes()).is_err(), "{b}");
        }
    }

    #[test]
    fn sweep_shape_and_order() {
        let recs = run_capacity_sweep(&small_sweep(), Some(2)).unwrap();
        let keys: Vec<(usize, usize)> = recs.iter().map(|r| (r.n, r.repeat)).collect();
        assert_eq!(keys, vec![(4, 0), (4, 1), (9, 0), (9, 1)]);
        for r in &recs {
            assert!(r.lower <= r.upper);
            assert!(r.converged && r.upper - r.lower <= 1e-4);
        }
    }

    #[test]
    fn single_record_sweep() {
        let mut c = small_sweep();
        c.n_values = vec![10];
        c.repeats = 1;
        let recs = run_capacity_sweep(&c, None).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].lower <= recs[0].upper);
    }

    #[test]
    fn csv_shapes() {
        let empty: Vec<SweepRecord> = vec![];
        let s = render_results(&empty, OutputFormat::Csv).unwrap();
        assert_eq!(s.lines().count(), 1);
        let mut c = small_sweep();
        c.n_values = vec![3];
        c.repeats = 1;
        let recs = run_capacity_sweep(&c, None).unwrap();
        let s = render_results(&recs, OutputFormat::Csv).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert!(s.starts_with("n,m,repeat,seed,lower,upper,midpoint,asymptotic,iterations,converged\n"));
    }

    #[test]
    fn json_uses_same_field_names() {
        let recs = run_capacity_sweep(&small_sweep(), None).unwrap();
        let s = render_results(&recs, OutputFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let obj = v[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        for h in SweepRecord::header(false) {
            assert!(keys.contains(&h), "{h}");
        }
        assert!(!keys.contains(&"wall_time_s"));
    }

    #[test]
    fn timing_column_is_opt_in() {
        let mut c = small_sweep();
        c.include_timing = true;
        let recs = run_capacity_sweep(&c, None).unwrap();
        let s = render_results(&recs, OutputFormat::Csv).unwrap();
        assert!(s.lines().next().unwrap().ends_with(",wall_time_s"));
        assert_eq!(s.lines().nth(1).unwrap().split(',').count(), 11);
    }

    #[test]
    fn design_study_single_trial_is_flagged() {
        let cfg = DesignStudyConfig::from_json(br#"{"n_values": [6], "trials": 1, "resolution": 0.5}"#).unwrap();
        let recs = run_design_study(&cfg, None).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].degenerate);
        assert_eq!(recs[0].optimal_variance, 0.0);
        assert_eq!(recs[0].suboptimal_variance, 0.0);
        assert!(recs[0].optimal_mean >= recs[0].suboptimal_mean);
    }

    #[test]
    fn mean_variance_values() {
        assert_eq!(mean_variance(&[2.0]), (2.0, 0.0));
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn output_format_parsing() {
        assert_eq!("CSV".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert_eq!("json".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
