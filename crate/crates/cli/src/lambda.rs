//! Discount factors as typed on the command line.

use std::fmt;
use std::str::FromStr;

/// A discount factor together with the text it was given as.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda {
    pub text: String,
    pub value: f64,
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for Lambda {
    type Err = String;

    /// Accepts `2^-k`, `a/b` and decimals. Powers of two are built with
    /// `powi` so they are exact.
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let value = if let Some(exp) = t.strip_prefix("2^") {
            let k: i32 = exp.parse().map_err(|_| format!("bad exponent in {s:?}"))?;
            2f64.powi(k)
        } else if let Some((a, b)) = t.split_once('/') {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if b == 0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            a as f64 / b as f64
        } else {
            t.parse::<f64>().map_err(|_| format!("cannot read {s:?} as a discount factor"))?
        };
        if !(value > 0.0 && value < 1.0) {
            return Err(format!("discount factor {s} is outside (0, 1)"));
        }
        Ok(Lambda {
            text: t.to_string(),
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two_are_exact() {
        let l: Lambda = "2^-13".parse().unwrap();
        assert_eq!(l.value, 1.0 / 8192.0);
        assert_eq!(l.value.to_bits(), 2f64.powi(-13).to_bits());
        assert_eq!(l.to_string(), "2^-13");
        assert_eq!("2^-40".parse::<Lambda>().unwrap().value, 2f64.powi(-40));
    }

    #[test]
    fn fractions_and_decimals() {
        assert_eq!("1/16".parse::<Lambda>().unwrap().value, 0.0625);
        assert_eq!("0.01".parse::<Lambda>().unwrap().value, 0.01);
        assert_eq!("1e-3".parse::<Lambda>().unwrap().value, 0.001);
    }

    #[test]
    fn rejects_out_of_range_and_garbage() {
        for s in ["0", "1", "2^3", "2^0", "3/2", "1/0", "abc", "2^-x", "-0.5"] {
            assert!(s.parse::<Lambda>().is_err(), "{s}");
        }
    }
}
