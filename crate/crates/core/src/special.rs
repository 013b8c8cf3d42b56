//! Digamma and trigamma on the positive half-line.

/// Euler–Mascheroni constant κ (20 significant digits).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SHIFT_TO: f64 = 10.0;

/// ψ(x) for `x > 0`; NaN elsewhere.
///
/// The argument is shifted up to at least 10 with ψ(x) = ψ(x+1) − 1/x and the
/// asymptotic Bernoulli series is used from there.
pub fn digamma(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return if x == f64::INFINITY { f64::INFINITY } else { f64::NAN };
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // B_{2k} / (2k) for k = 1..7
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// ψ'(x) for `x > 0`; NaN elsewhere.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return if x == f64::INFINITY { 0.0 } else { f64::NAN };
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                - inv2
                    * (1.0 / 30.0
                        - inv2
                            * (1.0 / 42.0
                                - inv2
                                    * (1.0 / 30.0
                                        - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
    acc + series
}

/// Generalized harmonic number `H_a = ψ(a + 1) + κ`, valid for real `a > -1`.
pub fn harmonic(a: f64) -> f64 {
    digamma(a + 1.0) + EULER_GAMMA
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{LN_2, PI};

    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn digamma_closed_forms() {
        assert_abs_diff_eq!(digamma(1.0), -EULER_GAMMA, epsilon = 1e-14);
        assert_abs_diff_eq!(digamma(0.5), -EULER_GAMMA - 2.0 * LN_2, epsilon = 1e-14);
        // ψ(n) = H_{n-1} − κ
        let mut h = 0.0;
        for n in 1..=50 {
            assert_abs_diff_eq!(digamma(n as f64), h - EULER_GAMMA, epsilon = 1e-13);
            h += 1.0 / n as f64;
        }
        // ψ(n + 1/2) = −κ − 2 ln 2 + Σ_{k=1}^{n} 2/(2k−1)
        let mut s = 0.0;
        for n in 1..=49 {
            s += 2.0 / (2 * n - 1) as f64;
            assert_abs_diff_eq!(
                digamma(n as f64 + 0.5),
                -EULER_GAMMA - 2.0 * LN_2 + s,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn digamma_reference_values() {
        assert_abs_diff_eq!(digamma(0.2), -5.289_039_896_592_188, epsilon = 1e-12);
        assert_abs_diff_eq!(digamma(123.4), 4.811_373_775_116_277_5, epsilon = 1e-12);
        assert_abs_diff_eq!(digamma(1e-3), -1_000.575_571_931_810_3, epsilon = 1e-10);
        assert_abs_diff_eq!(digamma(37.25), 3.604_169_073_005_627, epsilon = 1e-12);
    }

    #[test]
    fn digamma_domain() {
        assert!(digamma(0.0).is_nan());
        assert!(digamma(-1.5).is_nan());
        assert!(digamma(f64::NAN).is_nan());
    }

    #[test]
    fn trigamma_closed_forms() {
        assert_abs_diff_eq!(trigamma(1.0), PI * PI / 6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(trigamma(0.5), PI * PI / 2.0, epsilon = 1e-13);
        let mut partial = 0.0;
        for n in 1..=50 {
            assert_abs_diff_eq!(trigamma(n as f64), PI * PI / 6.0 - partial, epsilon = 1e-13);
            partial += 1.0 / (n * n) as f64;
        }
        assert_abs_diff_eq!(trigamma(0.01), 10_001.621_213_528_313, epsilon = 1e-8);
        assert_abs_diff_eq!(trigamma(7.3), 0.146_795_768_131_427_1, epsilon = 1e-13);
    }

    #[test]
    fn harmonic_matches_integer_sums() {
        let mut h = 0.0;
        for n in 1..=30 {
            h += 1.0 / n as f64;
            assert_abs_diff_eq!(harmonic(n as f64), h, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(harmonic(0.0), 0.0, epsilon = 1e-14);
    }
}
