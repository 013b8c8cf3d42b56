use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use randchan_core::capacity::{solve_capacity, SolverOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};
use randchan_core::channel::{normalize_rows, ProbabilityVector};
use randchan_core::design::{
    design_optimum, evaluate_experiment, optimal_gain_search, LognormalFamilyConstraints,
    DEFAULT_RESOLUTION,
};
use randchan_core::distributions::{
    analytic_moments, parse_param, sample_gain_matrix, DistributionSpec,
};
use randchan_core::io::{read_channel, write_matrix};
use randchan_core::rate_bounds::{
    prop4_ub_tail, prop5_lb_tail, realized_a, theorem2_tail, BernsteinConstants, RateBoundParams,
};
use randchan_core::sim::{
    emit_results, format_sig, run_capacity_sweep, run_design_study, with_threads,
    DesignStudyConfig, OutputFormat, SweepConfig,
};
use serde_json::json;

const THREADS_ENV: &str = "RANDCHAN_THREADS";

#[derive(Parser)]
#[command(name = "randchan", version, about = "Capacity of random discrete memoryless channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certified capacity bracket of a channel matrix (CSV, rows sum to 1).
    Capacity {
        matrix: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Print the capacity-achieving input distribution too.
        #[arg(long)]
        show_input: bool,
        #[arg(long)]
        json: bool,
    },
    /// Sample an n × ⌈γn⌉ gain matrix.
    Generate {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the row-normalized channel instead of the gains.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the distribution and seed as JSON.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Finite-size deviation bounds around the asymptotic capacity.
    RateBound {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        t: f64,
        /// Variance proxy; defaults to max(E[V²], E[(V log₂ V)²]).
        #[arg(long = "K")]
        k: Option<f64>,
        /// Scale constant; defaults to 1.
        #[arg(long = "T")]
        t_scale: Option<f64>,
        /// Lower bound on a for the upper-bound deviation; realized from a
        /// sampled matrix when omitted.
        #[arg(long)]
        a_ub: Option<f64>,
        #[arg(long)]
        a_lb: Option<f64>,
        /// Seed of the matrix used for realized a values.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Gains of the optimal or the fixed lognormal experiment.
    Design {
        #[arg(long, default_value_t = 1.0)]
        l1: f64,
        #[arg(long, default_value_t = 10.0)]
        u1: f64,
        #[arg(long, default_value_t = 0.0)]
        l2: f64,
        #[arg(long, default_value_t = 2.0)]
        u2: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Optimal)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Capacity sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Optimal versus fixed experiment study from a JSON config.
    DesignStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Optimal,
    Suboptimal,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Optimal => "optimal",
            Mode::Suboptimal => "suboptimal",
        }
    }
}

#[derive(clap::Args)]
struct FamilyArgs {
    /// Distribution family (exp, uniform, lognormal, gamma, chi2, beta, two_point, point_mass).
    #[arg(long, required_unless_present = "spec")]
    family: Option<String>,
    /// Family parameter as name=value; repeat for each parameter.
    #[arg(long = "param", value_parser = parse_param_arg)]
    params: Vec<(String, f64)>,
    /// Distribution as JSON, {"family": ..., "params": {...}}.
    #[arg(long, conflicts_with_all = ["family", "params"])]
    spec: Option<PathBuf>,
}

fn parse_param_arg(s: &str) -> std::result::Result<(String, f64), String> {
    parse_param(s).map_err(|e| e.to_string())
}

impl FamilyArgs {
    fn resolve(&self) -> Result<DistributionSpec> {
        match (&self.spec, &self.family) {
            (Some(path), _) => {
                let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?)
            }
            (None, Some(family)) => Ok(DistributionSpec::from_family_params(family, &self.params)?),
            (None, None) => bail!("either --family or --spec is required"),
        }
    }
}

/// Outcome of a successful command.
enum Status {
    Ok,
    NotConverged,
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{THREADS_ENV}: {e}"),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => bail!("{THREADS_ENV} must be a positive integer, got '{s}'"),
        },
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn capacity(matrix: &Path, tol: f64, max_iter: usize, show_input: bool, json: bool) -> Result<Status> {
    let w = read_channel(matrix)?;
    let b = solve_capacity(&w, SolverOptions::new(tol, max_iter)?)?;
    if json {
        let mut v = json!({
            "lower": b.lower,
            "upper": b.upper,
            "gap": b.gap(),
            "iterations": b.iterations,
            "converged": b.converged,
        });
        if show_input {
            v["input_distribution"] = json!(b.input_distribution.as_slice());
        }
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("lower      {}", format_sig(b.lower, 12));
        println!("upper      {}", format_sig(b.upper, 12));
        println!("gap        {}", format_sig(b.gap(), 12));
        println!("iterations {}", b.iterations);
        println!("converged  {}", b.converged);
        if show_input {
            let p: Vec<String> = b.input_distribution.as_slice().iter().map(|&x| format_sig(x, 12)).collect();
            println!("input      {}", p.join(","));
        }
    }
    Ok(if b.converged { Status::Ok } else { Status::NotConverged })
}

#[allow(clippy::too_many_arguments)]
fn generate(
    family: &FamilyArgs,
    n: usize,
    gamma: f64,
    seed: u64,
    normalize: bool,
    out: Option<&Path>,
    spec_out: Option<&Path>,
) -> Result<Status> {
    let spec = family.resolve()?;
    let v = sample_gain_matrix(&spec, n, gamma, seed)?;
    let mut buf = Vec::new();
    if normalize {
        let w = normalize_rows(&v)?;
        write_matrix(&mut buf, w.cols(), w.as_slice())?;
    } else {
        write_matrix(&mut buf, v.cols(), v.as_slice())?;
    }
    match out {
        Some(p) => fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    if let Some(p) = spec_out {
        let meta = json!({
            "spec": spec,
            "seed": seed,
            "n": v.rows(),
            "m": v.cols(),
            "gamma": gamma,
            "normalized": normalize,
        });
        write_output(Some(p), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    }
    Ok(Status::Ok)
}

#[allow(clippy::too_many_arguments)]
fn rate_bound(
    family: &FamilyArgs,
    n: u64,
    m: u64,
    t: f64,
    k: Option<f64>,
    t_scale: Option<f64>,
    a_ub: Option<f64>,
    a_lb: Option<f64>,
    seed: u64,
    json_out: bool,
) -> Result<Status> {
    let spec = family.resolve()?;
    let default_k = BernsteinConstants::default_for(&spec)?.k;
    let constants = BernsteinConstants::new(k.unwrap_or(default_k), t_scale.unwrap_or(1.0))?;
    let moments = analytic_moments(&spec);
    let realized = if a_ub.is_none() || a_lb.is_none() {
        if n == 0 || m == 0 {
            bail!("n and m must be positive to realize a from a sample");
        }
        let v = sample_gain_matrix(&spec, n as usize, m as f64 / n as f64, seed)?;
        if v.cols() as u64 != m {
            bail!("cannot sample an {n} x {m} matrix; pass --a-ub and --a-lb");
        }
        Some(realized_a(&v, moments.mu1)?)
    } else {
        None
    };
    let a_ub = a_ub.or(realized.map(|r| r.a_ub)).expect("a_ub resolved");
    let a_lb = a_lb.or(realized.map(|r| r.a_lb)).expect("a_lb resolved");
    let params = RateBoundParams::for_spec(&spec, constants, a_ub, a_lb)?;
    let p4 = prop4_ub_tail(t, n, &params)?;
    let p5 = prop5_lb_tail(t, n, m, &params)?;
    let th = theorem2_tail(t, n, m, &params)?;
    if json_out {
        let v = json!({
            "family": spec,
            "n": n,
            "m": m,
            "t": t,
            "asymptotic": params.asymptote(),
            "K": constants.k,
            "T": constants.t,
            "K_default": k.is_none(),
            "T_default": t_scale.is_none(),
            "a_ub": a_ub,
            "a_lb": a_lb,
            "a_realized": realized.is_some(),
            "prop4": p4,
            "prop5": p5,
            "theorem2": th,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        let f = |x| format_sig(x, 12);
        let mut s = String::new();
        writeln!(s, "family      {spec}")?;
        writeln!(s, "asymptotic  {}", f(params.asymptote()))?;
        writeln!(s, "K           {}{}", f(constants.k), if k.is_none() { " (default)" } else { "" })?;
        writeln!(s, "T           {}{}", f(constants.t), if t_scale.is_none() { " (default)" } else { "" })?;
        writeln!(s, "a_ub        {}{}", f(a_ub), if realized.is_some() { " (realized)" } else { "" })?;
        writeln!(s, "a_lb        {}{}", f(a_lb), if realized.is_some() { " (realized)" } else { "" })?;
        writeln!(s, "prop4       {} (raw {})", f(p4.clamped), f(p4.raw))?;
        writeln!(s, "prop5       {} (raw {})", f(p5.clamped), f(p5.raw))?;
        writeln!(s, "theorem2    {} (raw {})", f(th.value.clamped), f(th.value.raw))?;
        print!("{s}");
    }
    Ok(Status::Ok)
}

#[allow(clippy::too_many_arguments)]
fn design(
    c: LognormalFamilyConstraints,
    n: usize,
    trials: usize,
    seed: u64,
    mode: Mode,
    resolution: f64,
    out: Option<&Path>,
) -> Result<Status> {
    c.validate()?;
    let prior = ProbabilityVector::uniform(n.max(1));
    let gains = match mode {
        Mode::Optimal => optimal_gain_search(&prior, &c, n, resolution, trials, seed)?,
        Mode::Suboptimal => {
            let o = design_optimum(&c)?;
            evaluate_experiment(&prior, o.z_star, o.sigma2_star, n, trials, seed)?
        }
    };
    let mut s = String::from("trial,n,mode,gain_bits\n");
    for (i, g) in gains.iter().enumerate() {
        writeln!(s, "{i},{n},{},{}", mode.name(), format_sig(*g, 12))?;
    }
    write_output(out, &s)?;
    Ok(Status::Ok)
}

fn sweep(config: &Path, out: Option<&Path>, format: Option<OutputFormat>) -> Result<Status> {
    let cfg = SweepConfig::read(config)?;
    let records = run_capacity_sweep(&cfg, None)?;
    let path = out.or(cfg.output.as_deref());
    emit_results(&records, format.unwrap_or(cfg.format), path)?;
    let failed = records.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} runs did not converge", records.len());
        return Ok(Status::NotConverged);
    }
    Ok(Status::Ok)
}

fn design_study(
    config: &Path,
    out: Option<&Path>,
    format: Option<OutputFormat>,
) -> Result<Status> {
    let cfg = DesignStudyConfig::read(config)?;
    let records = run_design_study(&cfg, None)?;
    let path = out.or(cfg.output.as_deref());
    emit_results(&records, format.unwrap_or(cfg.format), path)?;
    Ok(Status::Ok)
}

/// Runs inside the worker pool set up by `main`.
fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Capacity {
            matrix,
            tol,
            max_iter,
            show_input,
            json,
        } => capacity(&matrix, tol, max_iter, show_input, json),
        Command::Generate {
            family,
            n,
            gamma,
            seed,
            normalize,
            out,
            spec_out,
        } => generate(&family, n, gamma, seed, normalize, out.as_deref(), spec_out.as_deref()),
        Command::RateBound {
            family,
            n,
            m,
            t,
            k,
            t_scale,
            a_ub,
            a_lb,
            seed,
            json,
        } => rate_bound(&family, n, m, t, k, t_scale, a_ub, a_lb, seed, json),
        Command::Design {
            l1,
            u1,
            l2,
            u2,
            n,
            trials,
            seed,
            mode,
            resolution,
            out,
        } => design(
            LognormalFamilyConstraints { l1, u1, l2, u2 },
            n,
            trials,
            seed,
            mode,
            resolution,
            out.as_deref(),
        ),
        Command::Sweep { config, out, format } => sweep(&config, out.as_deref(), format),
        Command::DesignStudy { config, out, format } => {
            design_study(&config, out.as_deref(), format)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = with_threads(threads, || run(cli)).map_err(anyhow::Error::from);
    match result.and_then(|r| r) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
