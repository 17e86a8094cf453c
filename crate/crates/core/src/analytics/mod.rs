//! Closed forms for the threshold games and the compact-action game.

mod compact;
mod derivative;
mod sweep;

pub use compact::{compact_payoff, compact_value, compact_x_star, CompactValue};
pub use derivative::{derivative_check, smallest_regime_m, DerivativeReport, DerivativeSample};
pub use sweep::{sequence, sweep, Method, Sequence, SweepOptions, SweepReport, SweepRow};

use std::f64::consts::LN_2;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("peak of f not bracketed below n = {0}")]
    NotBracketed(u32),
    #[error("{0}")]
    Solver(String),
}

type Result<T> = std::result::Result<T, AnalyticsError>;

fn open_unit(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(AnalyticsError::Parameter(format!("lambda {lambda} outside (0, 1)")))
    }
}

// 2^{n+1} lambda (1 - lambda)^{-n}, in log space.
fn t_term(n: u32, lambda: f64) -> f64 {
    let n = n as f64;
    ((n + 1.0) * LN_2 + lambda.ln() - n * (-lambda).ln_1p()).exp()
}

/// `f(n) = (1 - 2^-n)(1 - lambda^2) / (1 + 2^{n+1} lambda (1-lambda)^{-n} - lambda)`.
pub fn f_lambda(n: u32, lambda: f64) -> Result<f64> {
    open_unit(lambda)?;
    let t = t_term(n, lambda);
    if !t.is_finite() {
        return Ok(0.0);
    }
    let num = -(-(n as f64) * LN_2).exp_m1() * (1.0 - lambda * lambda);
    Ok(num / (1.0 + t - lambda))
}

/// `1 - f(n)`, without cancellation near the peak.
pub fn one_minus_f(n: u32, lambda: f64) -> Result<f64> {
    open_unit(lambda)?;
    let t = t_term(n, lambda);
    if !t.is_finite() {
        return Ok(1.0);
    }
    let pow = (-(n as f64) * LN_2).exp();
    Ok((t - lambda + lambda * lambda + pow * (1.0 - lambda * lambda)) / (1.0 + t - lambda))
}

/// Value of the threshold pair `(a, b)`: `(1 - f(b)) / (1 - f(a) f(b))`.
pub fn g_lambda(a: u32, b: u32, lambda: f64) -> Result<f64> {
    let (fa, ca) = (f_lambda(a, lambda)?, one_minus_f(a, lambda)?);
    let cb = one_minus_f(b, lambda)?;
    // ca + fa rounds to 1 only up to an ulp
    Ok((cb / (ca + fa * cb)).min(1.0))
}

/// `E[(1 - lambda)^{T_n}]` for `T_n` the number of fair coin flips until `n`
/// heads in a row (`T_0 = 0`).
pub fn geometric_transform(n: u32, lambda: f64) -> Result<f64> {
    open_unit(lambda)?;
    let t = t_term(n, lambda);
    if !t.is_finite() {
        return Ok(0.0);
    }
    Ok((1.0 + lambda) / (1.0 + t - lambda))
}

fn s_exponent(lambda: f64) -> f64 {
    1.0 - (-lambda).ln_1p() / LN_2
}

/// Continuous version of `f`: `(1 - r) / (1 + 2 lambda r^{-s} - lambda)`
/// with `s = 1 - log2(1 - lambda)`, and `0` at `r = 0`.
pub fn f_hat(r: f64, lambda: f64) -> Result<f64> {
    open_unit(lambda)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(AnalyticsError::Parameter(format!("r {r} outside [0, 1]")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let k = 2.0 * lambda * (-s_exponent(lambda) * r.ln()).exp();
    Ok((1.0 - r) / (1.0 + k - lambda))
}

/// Sign-carrying factor of the derivative of [`f_hat`]:
/// `lambda - 1 + 2 lambda (s - (1 + s) r) r^{-s-1}`. Strictly decreasing on (0, 1].
pub fn h_lambda(r: f64, lambda: f64) -> Result<f64> {
    open_unit(lambda)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(AnalyticsError::Parameter(format!("r {r} outside (0, 1]")));
    }
    let s = s_exponent(lambda);
    Ok(lambda - 1.0 + 2.0 * lambda * (s - (1.0 + s) * r) * (-(s + 1.0) * r.ln()).exp())
}

/// Maximiser of [`f_hat`] on (0, 1): the root of [`h_lambda`], by bisection.
pub fn r_star(lambda: f64) -> Result<f64> {
    open_unit(lambda)?;
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h_lambda(mid, lambda)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (hl, hh) = (h_lambda(lo, lambda)?, h_lambda(hi, lambda)?);
    Ok(if hl.abs() <= hh.abs() { lo } else { hi })
}

/// Threshold game: Player 1 picks `a` in `stride1 * N`, Player 2 picks `b`
/// in `stride2 * N`, payoff `g_lambda(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdGame {
    pub lambda: f64,
    pub stride1: u32,
    pub stride2: u32,
}

impl ThresholdGame {
    pub fn new(lambda: f64, stride1: u32, stride2: u32) -> Result<Self> {
        open_unit(lambda)?;
        if stride1 == 0 || stride2 == 0 {
            return Err(AnalyticsError::Parameter("strides must be positive".into()));
        }
        Ok(ThresholdGame { lambda, stride1, stride2 })
    }

    /// The game on Γ(r): strides `r` and `2r`.
    pub fn for_r(lambda: f64, r: u32) -> Result<Self> {
        Self::new(lambda, r, 2 * r)
    }
}

pub const DEFAULT_N_MAX: u32 = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub a_star: u32,
    pub b_star: u32,
    /// All maximisers of `f` on Player 1's grid, ascending.
    pub ties_a: Vec<u32>,
    /// All maximisers of `f` on Player 2's grid, ascending.
    pub ties_b: Vec<u32>,
}

// Maximisers of f on {0, stride, 2 stride, ..} up to n_max, compared via 1 - f.
fn argmax_f(lambda: f64, stride: u32, n_max: u32) -> Result<Vec<u32>> {
    let grid: Vec<u32> = (0..=n_max).step_by(stride as usize).collect();
    let c: Vec<f64> = grid.iter().map(|&n| one_minus_f(n, lambda)).collect::<Result<_>>()?;
    let best = c.iter().copied().fold(f64::INFINITY, f64::min);
    let ties: Vec<u32> = grid
        .iter()
        .zip(&c)
        .filter(|(_, &cn)| cn <= best * (1.0 + 1e-12))
        .map(|(&n, _)| n)
        .collect();
    if ties.last() == grid.last() {
        return Err(AnalyticsError::NotBracketed(n_max));
    }
    Ok(ties)
}

/// Dominant thresholds: both players maximise `f` on their grid.
/// `a*` is the smallest maximiser; `b*` the tied maximiser that minimises
/// `g(a*, b)`.
pub fn optimal_thresholds(game: &ThresholdGame, n_max: u32) -> Result<Thresholds> {
    let ties_a = argmax_f(game.lambda, game.stride1, n_max)?;
    let ties_b = argmax_f(game.lambda, game.stride2, n_max)?;
    let a_star = ties_a[0];
    let mut b_star = ties_b[0];
    let mut best = g_lambda(a_star, b_star, game.lambda)?;
    for &b in &ties_b[1..] {
        let v = g_lambda(a_star, b, game.lambda)?;
        if v < best {
            best = v;
            b_star = b;
        }
    }
    Ok(Thresholds {
        a_star,
        b_star,
        ties_a,
        ties_b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdValue {
    pub value: f64,
    pub thresholds: Thresholds,
}

/// Value `g(a*, b*)` of a threshold game.
pub fn threshold_value(game: &ThresholdGame, n_max: u32) -> Result<ThresholdValue> {
    let thresholds = optimal_thresholds(game, n_max)?;
    let value = g_lambda(thresholds.a_star, thresholds.b_star, game.lambda)?;
    Ok(ThresholdValue { value, thresholds })
}

/// `lambda_m = 2^{-4mr-1}`.
pub fn lambda_m(r: u32, m: u32) -> f64 {
    2f64.powi(-(4 * (m * r) as i32) - 1)
}

/// `mu_m = 2^{-4mr-2r-1}`.
pub fn mu_m(r: u32, m: u32) -> f64 {
    2f64.powi(-(4 * (m * r) as i32) - 2 * r as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Direct evaluation, fine for moderate n and lambda.
    fn f_naive(n: u32, l: f64) -> f64 {
        (1.0 - 0.5f64.powi(n as i32)) * (1.0 - l * l) / (1.0 + 2f64.powi(n as i32 + 1) * l * (1.0 - l).powi(-(n as i32)) - l)
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_lambda(0, 0.3).unwrap(), 0.0);
        assert!((f_lambda(1, 0.5).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!(f_lambda(200, 0.01).unwrap() < 1e-6);
        assert_eq!(f_lambda(100_000, 0.01).unwrap(), 0.0);
        assert!(f_lambda(3, 0.0).is_err() && f_lambda(3, 1.0).is_err());
    }

    #[test]
    fn f_matches_naive() {
        for n in 0..30 {
            for l in [0.3, 0.01, 1e-4] {
                let (a, b) = (f_lambda(n, l).unwrap(), f_naive(n, l));
                assert!((a - b).abs() < 1e-13, "{n} {l}");
                assert!((one_minus_f(n, l).unwrap() - (1.0 - b)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_lambda(5, 0, 0.1).unwrap(), 1.0);
        assert_eq!(g_lambda(1, 0, 0.5).unwrap(), 1.0);
        for a in [1, 4, 9] {
            let f = f_lambda(a, 0.01).unwrap();
            assert!((g_lambda(a, a, 0.01).unwrap() - 1.0 / (1.0 + f)).abs() < 1e-14);
        }
    }

    #[test]
    fn geometric_transform_examples() {
        assert_eq!(geometric_transform(0, 0.2).unwrap(), 1.0);
        for l in [0.5, 0.1, 0.001] {
            assert!((geometric_transform(1, l).unwrap() - (1.0 - l) / (1.0 + l)).abs() < 1e-15);
        }
    }

    // E[z^{T_n}] from the renewal recursion on the current run length.
    fn transform_by_recursion(n: u32, l: f64) -> f64 {
        // u_k = E[z^{time to finish} | run k]; u_n = 1, u_k = z (u_{k+1} + u_0) / 2
        // u_k = A_k + B_k u_0 solved backwards.
        let z = 1.0 - l;
        let (mut a, mut b) = (1.0, 0.0);
        for _ in 0..n {
            a = z * a / 2.0;
            b = z * b / 2.0 + z / 2.0;
        }
        a / (1.0 - b)
    }

    #[test]
    fn geometric_transform_matches_recursion() {
        for n in 0..20 {
            for l in [0.2, 0.01, 0.001] {
                let (x, y) = (geometric_transform(n, l).unwrap(), transform_by_recursion(n, l));
                assert!((x - y).abs() < 1e-12, "{n} {l}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn f_hat_identity_and_edges() {
        assert_eq!(f_hat(0.0, 0.1).unwrap(), 0.0);
        assert_eq!(f_hat(1.0, 0.1).unwrap(), 0.0);
        let l = 0.01;
        let lhs = (1.0 - l * l) * f_hat(2f64.powi(-5), l).unwrap();
        assert!((lhs - f_lambda(5, l).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn h_and_r_star() {
        for l in [0.3, 1e-4, 1e-6] {
            assert!((h_lambda(1.0, l).unwrap() + 1.0 + l).abs() < 1e-14);
            let r = r_star(l).unwrap();
            assert!(h_lambda(r, l).unwrap().abs() < 1e-12);
        }
        let r = r_star(1e-6).unwrap() / (2e-6f64).sqrt();
        assert!((0.9..=1.1).contains(&r));
        let l = 1e-4;
        let r = r_star(l).unwrap();
        let d = r / 10.0;
        let peak = f_hat(r, l).unwrap();
        assert!(f_hat(r - d, l).unwrap() < peak && f_hat(r + d, l).unwrap() < peak);
    }

    #[test]
    fn thresholds_examples() {
        let t = optimal_thresholds(&ThresholdGame::new(2f64.powi(-13), 1, 2).unwrap(), DEFAULT_N_MAX).unwrap();
        assert_eq!((t.a_star, t.b_star), (6, 6));
        let t = optimal_thresholds(&ThresholdGame::new(2f64.powi(-15), 1, 2).unwrap(), DEFAULT_N_MAX).unwrap();
        assert_eq!(t.a_star, 7);
        assert!(t.b_star == 6 || t.b_star == 8);
        for l in [0.1, 1e-3, 1e-7] {
            let t = optimal_thresholds(&ThresholdGame::new(l, 3, 3).unwrap(), DEFAULT_N_MAX).unwrap();
            assert_eq!(t.a_star, t.b_star);
        }
        assert_eq!(
            optimal_thresholds(&ThresholdGame::new(1e-12, 1, 2).unwrap(), 10),
            Err(AnalyticsError::NotBracketed(10))
        );
    }

    #[test]
    fn thresholds_match_exhaustive_scan() {
        for k in 3..30 {
            let l = 2f64.powi(-k);
            let t = optimal_thresholds(&ThresholdGame::new(l, 1, 2).unwrap(), DEFAULT_N_MAX).unwrap();
            let best = (0..64).map(|n| f_lambda(n, l).unwrap()).fold(0.0, f64::max);
            assert!(f_lambda(t.a_star, l).unwrap() >= best * (1.0 - 1e-12));
            let best_even = (0..32).map(|n| f_lambda(2 * n, l).unwrap()).fold(0.0, f64::max);
            assert!(f_lambda(t.b_star, l).unwrap() >= best_even * (1.0 - 1e-12));
            assert_eq!(t.b_star % 2, 0);
        }
    }

    #[test]
    fn value_limits() {
        let v = threshold_value(&ThresholdGame::new(lambda_m(1, 6), 1, 2).unwrap(), DEFAULT_N_MAX).unwrap();
        assert!((v.value - 0.5).abs() < 1e-3);
        let v = threshold_value(&ThresholdGame::new(mu_m(1, 6), 1, 2).unwrap(), DEFAULT_N_MAX).unwrap();
        assert!((v.value - 5.0 / 9.0).abs() < 5e-3);
        let lim = (4.0 + 0.25) / (4.0 + 0.25 + 2.0);
        let v = threshold_value(&ThresholdGame::for_r(mu_m(2, 4), 2).unwrap(), DEFAULT_N_MAX).unwrap();
        assert!((v.value - lim).abs() < 5e-3);
    }

    #[test]
    fn sequences() {
        assert_eq!(lambda_m(1, 3), 2f64.powi(-13));
        assert_eq!(mu_m(1, 3), 2f64.powi(-15));
        assert_eq!(lambda_m(2, 2), 2f64.powi(-17));
        assert_eq!(mu_m(2, 2), 2f64.powi(-21));
    }

    #[test]
    fn f_hat_unimodal() {
        for l in [1e-3, 1e-5, 1e-7] {
            let r = r_star(l).unwrap();
            let left: Vec<f64> = (1..=50).map(|k| r * k as f64 / 50.0).collect();
            let right: Vec<f64> = (0..=50).map(|k| r + (1.0 - r) * k as f64 / 50.0).collect();
            for w in left.windows(2) {
                assert!(f_hat(w[0], l).unwrap() < f_hat(w[1], l).unwrap());
            }
            for w in right.windows(2) {
                assert!(f_hat(w[0], l).unwrap() > f_hat(w[1], l).unwrap());
            }
        }
    }

    #[test]
    fn f_hat_asymptotics() {
        for c in [0.5, 1.0, 2.0] {
            let rem = |l: f64| {
                let e = (2.0 * l).sqrt();
                ((f_hat(c * e, l).unwrap() - 1.0 + (c + 1.0 / c) * e) / l.sqrt()).abs()
            };
            let seq: Vec<f64> = (4..=10).map(|k| rem(10f64.powi(-k))).collect();
            assert!(seq.last().unwrap() < &1e-2);
            assert!(seq.last().unwrap() < &seq[0]);
        }
    }

    proptest! {
        #[test]
        fn identity_f_hat(n in 0u32..60, e in 1.0f64..12.0) {
            let l = 10f64.powf(-e);
            let lhs = (1.0 - l * l) * f_hat(0.5f64.powi(n as i32), l).unwrap();
            prop_assert!((lhs - f_lambda(n, l).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn g_monotone(a in 0u32..40, a2 in 0u32..40, b in 0u32..40, e in 1.0f64..8.0) {
            let l = 10f64.powf(-e);
            let (fa, fa2) = (f_lambda(a, l).unwrap(), f_lambda(a2, l).unwrap());
            if fa <= fa2 {
                prop_assert!(g_lambda(a, b, l).unwrap() <= g_lambda(a2, b, l).unwrap() + 1e-15);
                prop_assert!(g_lambda(b, a, l).unwrap() >= g_lambda(b, a2, l).unwrap() - 1e-15);
            }
        }

        #[test]
        fn g_in_unit_interval(a in 0u32..300, b in 0u32..300, e in 0.5f64..12.0) {
            let v = g_lambda(a, b, 10f64.powf(-e)).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0);
        }
    }
}
