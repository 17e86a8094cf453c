//! Finite-difference bounds on the slope of the Γ(r) value near the
//! discount sequences.

use serde::Serialize;

use super::{lambda_m, mu_m, optimal_thresholds, threshold_value, AnalyticsError, Result, ThresholdGame, DEFAULT_N_MAX};

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeSample {
    pub lambda: f64,
    pub derivative: f64,
    /// `|v'| * lambda` on the mu interval, `|v'| * sqrt(lambda)` on the lambda interval.
    pub scaled: f64,
    pub bound: f64,
    pub a_star: u32,
    pub b_star: u32,
    /// Thresholds differ at `lambda ± h`: the difference quotient straddles a kink.
    pub breakpoint: bool,
    /// Thresholds follow the expected pattern at this sample.
    pub in_regime: bool,
}

impl DerivativeSample {
    pub fn complies(&self) -> bool {
        self.scaled <= 1.1 * self.bound
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub r: u32,
    pub m: u32,
    pub mu_samples: Vec<DerivativeSample>,
    pub lambda_samples: Vec<DerivativeSample>,
    /// Every sample follows the expected threshold pattern.
    pub in_regime: bool,
    /// Changes of `(a*, b*)` between consecutive samples on the mu interval.
    pub mu_switches: usize,
    /// Fraction of non-breakpoint samples within 110% of their bound.
    pub compliance: f64,
    pub passed: bool,
}

impl DerivativeReport {
    pub fn failures(&self) -> impl Iterator<Item = &DerivativeSample> {
        self.mu_samples
            .iter()
            .chain(&self.lambda_samples)
            .filter(|s| !s.breakpoint && !s.complies())
    }
}

fn value_and_thresholds(lambda: f64, r: u32) -> Result<(f64, u32, u32)> {
    let v = threshold_value(&ThresholdGame::for_r(lambda, r)?, DEFAULT_N_MAX)?;
    Ok((v.value, v.thresholds.a_star, v.thresholds.b_star))
}

fn thresholds(lambda: f64, r: u32) -> Result<(u32, u32)> {
    let t = optimal_thresholds(&ThresholdGame::for_r(lambda, r)?, DEFAULT_N_MAX)?;
    Ok((t.a_star, t.b_star))
}

fn sample(lambda: f64, r: u32, bound: f64, sqrt_scale: bool, pattern: impl Fn(u32, u32) -> bool) -> Result<DerivativeSample> {
    let h = 1e-5 * lambda;
    let (_, a, b) = value_and_thresholds(lambda, r)?;
    let (vp, ap, bp) = value_and_thresholds(lambda + h, r)?;
    let (vm, am, bm) = value_and_thresholds(lambda - h, r)?;
    let derivative = (vp - vm) / (2.0 * h);
    let scale = if sqrt_scale { lambda.sqrt() } else { lambda };
    Ok(DerivativeSample {
        lambda,
        derivative,
        scaled: derivative.abs() * scale,
        bound,
        a_star: a,
        b_star: b,
        breakpoint: (ap, bp) != (am, bm),
        in_regime: pattern(a, b),
    })
}

/// Samples the slope of the Γ(r) value at `grid` log-spaced points of
/// `[mu_m, 2^{r/2-1} mu_m]` and `[lambda_m, 2^{r-1} lambda_m]`.
///
/// On the first interval the thresholds should be `a* = 2mr + r`,
/// `b* ∈ {2mr, 2mr + 2r}` and `|v'| mu <= 2^{-r/2}`; on the second
/// `a* = b* = 2mr` and `|v'| sqrt(lambda) <= 2^{r/2+2}`. The check passes when
/// the thresholds follow the pattern everywhere and at least 95% of the
/// samples that do not straddle a threshold switch are within 110% of the bound.
pub fn derivative_check(r: u32, m: u32, grid: usize) -> Result<DerivativeReport> {
    if r < 2 || m < 1 || grid < 2 {
        return Err(AnalyticsError::Parameter("need r >= 2, m >= 1, grid >= 2".into()));
    }
    let (mu0, l0) = (mu_m(r, m), lambda_m(r, m));
    if mu0 <= 0.0 || l0 <= 0.0 {
        return Err(AnalyticsError::Parameter(format!("2^-(4mr) underflows for r = {r}, m = {m}")));
    }
    let base = 2 * m * r;
    let points = |lo: f64, log2_width: f64| -> Vec<f64> {
        (0..grid)
            .map(|k| lo * 2f64.powf(log2_width * k as f64 / (grid - 1) as f64))
            .collect()
    };
    let rf = r as f64;
    let mu_bound = 2f64.powf(-rf / 2.0);
    let lambda_bound = 2f64.powf(rf / 2.0 + 2.0);
    let mu_samples = points(mu0, rf / 2.0 - 1.0)
        .into_iter()
        .map(|x| sample(x, r, mu_bound, false, |a, b| a == base + r && (b == base || b == base + 2 * r)))
        .collect::<Result<Vec<_>>>()?;
    let lambda_samples = points(l0, rf - 1.0)
        .into_iter()
        .map(|x| sample(x, r, lambda_bound, true, |a, b| a == base && b == base))
        .collect::<Result<Vec<_>>>()?;
    let mu_switches = mu_samples
        .windows(2)
        .filter(|w| (w[0].a_star, w[0].b_star) != (w[1].a_star, w[1].b_star))
        .count();
    let in_regime = mu_samples.iter().chain(&lambda_samples).all(|s| s.in_regime);
    let smooth: Vec<&DerivativeSample> = mu_samples.iter().chain(&lambda_samples).filter(|s| !s.breakpoint).collect();
    let compliance = if smooth.is_empty() {
        0.0
    } else {
        smooth.iter().filter(|s| s.complies()).count() as f64 / smooth.len() as f64
    };
    Ok(DerivativeReport {
        r,
        m,
        mu_samples,
        lambda_samples,
        in_regime,
        mu_switches,
        compliance,
        passed: in_regime && compliance >= 0.95,
    })
}

/// Smallest `m <= m_max` at which the thresholds at both interval ends follow
/// the pattern required by [`derivative_check`].
pub fn smallest_regime_m(r: u32, m_max: u32) -> Result<Option<u32>> {
    for m in 1..=m_max {
        let base = 2 * m * r;
        let (mu0, l0) = (mu_m(r, m), lambda_m(r, m));
        let mu_ok = [mu0, mu0 * 2f64.powf(r as f64 / 2.0 - 1.0)].iter().all(|&x| {
            thresholds(x, r).is_ok_and(|(a, b)| a == base + r && (b == base || b == base + 2 * r))
        });
        let l_ok = [l0, l0 * 2f64.powi(r as i32 - 1)]
            .iter()
            .all(|&x| thresholds(x, r).is_ok_and(|(a, b)| a == base && b == base));
        if mu_ok && l_ok {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(derivative_check(1, 2, 10).is_err());
        assert!(derivative_check(4, 0, 10).is_err());
        assert!(derivative_check(4, 2, 1).is_err());
    }

    #[test]
    fn single_smooth_sample_is_finite() {
        let s = sample(mu_m(4, 2), 4, 0.25, false, |_, _| true).unwrap();
        assert!(s.derivative.is_finite());
    }

    #[test]
    fn r4_regime_holds_and_bounds_are_met() {
        let m = smallest_regime_m(4, 4).unwrap().expect("regime reached");
        let rep = derivative_check(4, m, 41).unwrap();
        assert!(rep.in_regime);
        assert!(rep.mu_switches <= 1);
        assert!(rep.passed, "compliance {}", rep.compliance);
    }

    #[test]
    fn outside_regime_is_reported() {
        // r = 2, m = 1 sits at large lambda where the thresholds have not settled
        let rep = derivative_check(2, 1, 5).unwrap();
        if !rep.in_regime {
            assert!(!rep.passed);
        }
    }
}
