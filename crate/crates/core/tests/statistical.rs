//! Seeded Monte-Carlo checks of the large-alphabet limits and concentration bounds.

use randchan_core::capacity::{lower_bound_uniform, upper_bound_lambda0};
use randchan_core::channel::normalize_rows;
use randchan_core::distributions::{analytic_moments, asymptotic_capacity, sample_gain_matrix, DistributionSpec};
use randchan_core::rate_bounds::{prop4_ub_tail, prop5_lb_tail, realized_a, BernsteinConstants, RateBoundParams};
use randchan_core::rng::{cell_stream, run_seed};
use randchan_core::sim::{run_capacity_sweep, SweepConfig};

#[test]
fn normalized_exponential_rows_have_dirichlet_means() {
    let n = 200;
    for rate in [0.1, 1.0, 4.0] {
        let spec = DistributionSpec::exponential(rate).unwrap();
        let w = normalize_rows(&sample_gain_matrix(&spec, n, 1.0, 17).unwrap()).unwrap();
        let nf = n as f64;
        // symmetric Dirichlet(1, …, 1): Var W = (n − 1)/(n²(n + 1))
        let se = ((nf - 1.0) / (nf * nf * (nf + 1.0)) / nf).sqrt();
        for y in 0..n {
            let mean: f64 = (0..n).map(|x| w.row(x)[y]).sum::<f64>() / nf;
            assert!((mean - 1.0 / nf).abs() <= 5.0 * se, "rate {rate}, column {y}: {mean}");
        }
    }
}

#[test]
fn column_mass_concentrates_at_one_over_gamma() {
    // Rows are generated on the fly from the same cell streams the matrix
    // sampler uses, since a 10⁴ × 2·10⁴ matrix does not fit comfortably in
    // memory. Ten matrices, ten columns each.
    let spec = DistributionSpec::exponential(1.0).unwrap();
    let (n, m) = (10_000usize, 20_000usize);
    let columns: Vec<usize> = (0..10).map(|k| k * 1999).collect();
    let mut hits = 0;
    for matrix in 0..10u64 {
        let seed = 900 + matrix;
        let mut mass = vec![0.0; columns.len()];
        let mut row = vec![0.0; m];
        for x in 0..n {
            for (y, v) in row.iter_mut().enumerate() {
                *v = spec.sample(&mut cell_stream(seed, x as u64, y as u64));
            }
            let s: f64 = row.iter().sum();
            for (acc, &y) in mass.iter_mut().zip(&columns) {
                *acc += row[y] / s;
            }
        }
        hits += mass.iter().filter(|&&c| (c * m as f64 / n as f64 - 1.0).abs() <= 0.05).count();
    }
    assert!(hits >= 95, "{hits}/100 columns within 0.05");
}

#[test]
fn closed_form_bounds_respect_their_tails() {
    let spec = DistributionSpec::exponential(1.0).unwrap();
    let moments = analytic_moments(&spec);
    let asymptote = asymptotic_capacity(&spec);
    let constants = BernsteinConstants::default_for(&spec).unwrap();
    let trials = 200;
    for n in [50usize, 100, 200] {
        let mut ub_dev = Vec::with_capacity(trials);
        let mut lb_dev = Vec::with_capacity(trials);
        let (mut a_ub, mut a_lb) = (f64::INFINITY, f64::INFINITY);
        for trial in 0..trials {
            let v = sample_gain_matrix(&spec, n, 1.0, run_seed(61, n as u64, trial as u64)).unwrap();
            let a = realized_a(&v, moments.mu1).unwrap();
            a_ub = a_ub.min(a.a_ub);
            a_lb = a_lb.min(a.a_lb);
            let w = normalize_rows(&v).unwrap();
            ub_dev.push((upper_bound_lambda0(&w) - asymptote).abs());
            lb_dev.push((lower_bound_uniform(&w) - asymptote).abs());
        }
        let params = RateBoundParams::for_spec(&spec, constants, a_ub, a_lb).unwrap();
        for t in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0] {
            let checks = [
                (prop4_ub_tail(t, n as u64, &params).unwrap().clamped, &ub_dev),
                (prop5_lb_tail(t, n as u64, n as u64, &params).unwrap().clamped, &lb_dev),
            ];
            for (bound, devs) in checks {
                let freq = devs.iter().filter(|&&d| d >= t).count() as f64 / trials as f64;
                let se = (bound * (1.0 - bound) / trials as f64).sqrt();
                assert!(freq <= bound + 3.0 * se, "n={n}, t={t}: frequency {freq} above bound {bound}");
            }
        }
    }
}

#[test]
fn small_alphabets_show_large_spread() {
    let cfg = SweepConfig::from_json(
        br#"{"family": {"family": "exponential", "params": {"rate": 0.1}}, "n_values": [10], "repeats": 5, "seed": 42}"#,
    )
    .unwrap();
    let mids: Vec<f64> = run_capacity_sweep(&cfg, None).unwrap().iter().map(|r| r.midpoint).collect();
    let spread = mids.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - mids.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread >= 0.05, "spread {spread}");
}

#[test]
fn exponential_sweeps_are_scale_free() {
    let make = |rate: f64| {
        SweepConfig::from_json(
            format!(
                r#"{{"family": {{"family": "exponential", "params": {{"rate": {rate}}}}}, "n_values": [5, 20, 60], "repeats": 2, "seed": 3, "tol": 1e-6}}"#
            )
            .as_bytes(),
        )
        .unwrap()
    };
    let slow = run_capacity_sweep(&make(0.1), None).unwrap();
    let fast = run_capacity_sweep(&make(10.0), None).unwrap();
    assert_eq!(slow.len(), fast.len());
    for (a, b) in slow.iter().zip(&fast) {
        assert_eq!((a.n, a.repeat, a.seed), (b.n, b.repeat, b.seed));
        assert!((a.lower - b.lower).abs() <= 1e-9, "{a:?} vs {b:?}");
        assert!((a.upper - b.upper).abs() <= 1e-9, "{a:?} vs {b:?}");
        assert_eq!(a.asymptotic.to_bits(), b.asymptotic.to_bits());
    }
    for n in [5usize, 20, 60] {
        let seed = run_seed(3, n as u64, 0);
        let a = normalize_rows(&sample_gain_matrix(&DistributionSpec::exponential(0.1).unwrap(), n, 1.0, seed).unwrap()).unwrap();
        let b = normalize_rows(&sample_gain_matrix(&DistributionSpec::exponential(10.0).unwrap(), n, 1.0, seed).unwrap()).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}
