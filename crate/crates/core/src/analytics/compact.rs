//! The game where Player 1 picks a quitting intensity `x` in [0, 1] and
//! Player 2 picks `y` in {0} ∪ {4^-m}.

use super::{open_unit, AnalyticsError, Result};

/// Discounted payoff from state 1 when the stationary intensities are `x`, `y`.
pub fn compact_payoff(x: f64, y: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(AnalyticsError::Parameter(format!("lambda {lambda} outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(AnalyticsError::Parameter(format!("(x, y) = ({x}, {y}) outside [0, 1]^2")));
    }
    let d = 1.0 - lambda;
    let num = (1.0 - d * (1.0 - y * y)) * (1.0 - d * (1.0 - x));
    let den = (1.0 - d * (1.0 - x * y)) * (1.0 - d * (1.0 - x) * (1.0 - y));
    Ok(num / den)
}

/// `(sqrt(lambda) - lambda) / (1 - lambda)`: optimal intensity for both players
/// when `y` is unrestricted.
pub fn compact_x_star(lambda: f64) -> Result<f64> {
    open_unit(lambda)?;
    Ok((lambda.sqrt() - lambda) / (1.0 - lambda))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactValue {
    pub value: f64,
    /// Player 1's best reply to `y`.
    pub x: f64,
    /// Player 2's choice on the restricted grid.
    pub y: f64,
}

// max over x in [0, 1] of a concave function, by golden section.
fn golden_max<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    // include the end points: the maximiser can sit on the boundary
    [(a, f(a)), (b, f(b)), (0.0, f(0.0)), (1.0, f(1.0))]
        .into_iter()
        .fold((c, fc), |best, p| if p.1 > best.1 { p } else { best })
}

/// Value of the game with Player 2 restricted to `y ∈ {0} ∪ {4^-m}`.
///
/// Player 2 compares `y = 0` and the two grid points around `x*`; against
/// each, Player 1's best reply is found by golden-section search.
pub fn compact_value(lambda: f64) -> Result<CompactValue> {
    let ys = compact_x_star(lambda)?;
    // 4^{-m_hi} >= y* > 4^{-m_hi - 1}
    let m_hi = (-ys.log(4.0)).floor().max(0.0) as i32;
    let candidates = [0.0, 4f64.powi(-m_hi), 4f64.powi(-m_hi - 1)];
    let mut best: Option<CompactValue> = None;
    for y in candidates {
        let (x, value) = golden_max(|x| compact_payoff(x, y, lambda).unwrap_or(f64::NEG_INFINITY));
        if best.is_none_or(|b| value < b.value) {
            best = Some(CompactValue { value, x, y });
        }
    }
    Ok(best.expect("three candidates"))
}
