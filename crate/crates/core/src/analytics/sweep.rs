//! Value tables over a list of discount factors.

use rayon::prelude::*;
use serde::Serialize;

use super::{lambda_m, mu_m, threshold_value, AnalyticsError, Result, ThresholdGame, DEFAULT_N_MAX};
use crate::belief::{reduce, Belief};
use crate::catalog;
use crate::dp::{discounted_value, ViOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    ValueIteration,
    Both,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::ValueIteration => "value-iteration",
            Method::Both => "both",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" | "closed" => Ok(Method::ClosedForm),
            "value-iteration" | "vi" => Ok(Method::ValueIteration),
            "both" => Ok(Method::Both),
            _ => Err(AnalyticsError::Parameter(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sequence {
    LambdaM,
    MuM,
}

/// `lambda_m` or `mu_m` for `m` in `m_from..=m_to`, in decreasing order.
pub fn sequence(kind: Sequence, r: u32, m_from: u32, m_to: u32) -> Vec<f64> {
    (m_from..=m_to)
        .map(|m| match kind {
            Sequence::LambdaM => lambda_m(r, m),
            Sequence::MuM => mu_m(r, m),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub n_max: u32,
    pub max_nodes: usize,
    pub vi: ViOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            n_max: DEFAULT_N_MAX,
            max_nodes: 4096,
            vi: ViOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub value: f64,
    pub a_star: Option<u32>,
    pub b_star: Option<u32>,
    pub method: Method,
    pub error_bound: f64,
    /// `|closed form - value iteration|`, for `Method::Both`.
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub game: String,
    pub r: u32,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Rows with a discrepancy larger than `1e-6 + error_bound`.
    pub fn disagreements(&self) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|row| row.discrepancy.is_some_and(|d| d > 1e-6 + row.error_bound))
            .collect()
    }
}

/// Values of `gamma` (r = 1) or `gamma_r` at each `lambda`, by closed form,
/// by value iteration on the belief chain from the initial state, or both.
/// Rows come back sorted by decreasing `lambda`.
pub fn sweep(game: &str, r: Option<u32>, lambdas: &[f64], method: Method, opts: &SweepOptions) -> Result<SweepReport> {
    let r = match (game, r) {
        ("gamma", None | Some(1)) => 1,
        ("gamma_r", Some(r)) => r,
        _ => {
            return Err(AnalyticsError::Parameter(format!(
                "sweep supports gamma and gamma_r with r, got {game:?} with r = {r:?}"
            )))
        }
    };
    let chain = if method == Method::ClosedForm {
        None
    } else {
        let spec = catalog::entry(game, (game == "gamma_r").then_some(r))
            .map_err(|e| AnalyticsError::Solver(e.to_string()))?
            .spec;
        let root = Belief::initial(&spec).map_err(|e| AnalyticsError::Solver(e.to_string()))?;
        Some(reduce(&spec, &root, opts.max_nodes, 0.0).map_err(|e| AnalyticsError::Solver(e.to_string()))?)
    };
    let mut rows = lambdas
        .par_iter()
        .map(|&lambda| -> Result<SweepRow> {
            let closed = match method {
                Method::ValueIteration => None,
                _ => Some(threshold_value(&ThresholdGame::for_r(lambda, r)?, opts.n_max)?),
            };
            let vi = match &chain {
                None => None,
                Some(chain) => Some(
                    discounted_value(chain, lambda, &opts.vi).map_err(|e| AnalyticsError::Solver(e.to_string()))?,
                ),
            };
            let (a_star, b_star) = closed
                .as_ref()
                .map_or((None, None), |c| (Some(c.thresholds.a_star), Some(c.thresholds.b_star)));
            let row = match (&closed, &vi) {
                (Some(c), None) => SweepRow {
                    lambda,
                    value: c.value,
                    a_star,
                    b_star,
                    method,
                    error_bound: 0.0,
                    discrepancy: None,
                },
                (None, Some(s)) => SweepRow {
                    lambda,
                    value: s.value.root(),
                    a_star,
                    b_star,
                    method,
                    error_bound: s.value.error_bound,
                    discrepancy: None,
                },
                (Some(c), Some(s)) => SweepRow {
                    lambda,
                    value: c.value,
                    a_star,
                    b_star,
                    method,
                    error_bound: s.value.error_bound,
                    discrepancy: Some((c.value - s.value.root()).abs()),
                },
                (None, None) => unreachable!(),
            };
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    Ok(SweepReport {
        game: game.to_string(),
        r,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences_decrease() {
        let s = sequence(Sequence::LambdaM, 1, 3, 6);
        assert_eq!(s, vec![2f64.powi(-13), 2f64.powi(-17), 2f64.powi(-21), 2f64.powi(-25)]);
        assert_eq!(sequence(Sequence::MuM, 2, 2, 2), vec![2f64.powi(-21)]);
    }

    #[test]
    fn closed_form_rows_sorted_and_in_range() {
        let mut ls = sequence(Sequence::MuM, 1, 3, 6);
        ls.extend(sequence(Sequence::LambdaM, 1, 3, 6));
        let rep = sweep("gamma", None, &ls, Method::ClosedForm, &SweepOptions::default()).unwrap();
        assert_eq!(rep.rows.len(), 8);
        assert!(rep.rows.windows(2).all(|w| w[0].lambda > w[1].lambda));
        assert!(rep.rows.iter().all(|row| (0.0..=1.0).contains(&row.value)));
    }

    #[test]
    fn limits_along_sequences() {
        let opts = SweepOptions::default();
        let lam = sweep("gamma", None, &sequence(Sequence::LambdaM, 1, 3, 6), Method::ClosedForm, &opts).unwrap();
        let gaps: Vec<f64> = lam.rows.iter().map(|r| (r.value - 0.5).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
        let mu = sweep("gamma", None, &sequence(Sequence::MuM, 1, 3, 6), Method::ClosedForm, &opts).unwrap();
        let gaps: Vec<f64> = mu.rows.iter().map(|r| (r.value - 5.0 / 9.0).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
        let lim = 4.25 / 6.25;
        let g2 = sweep("gamma_r", Some(2), &sequence(Sequence::MuM, 2, 3, 6), Method::ClosedForm, &opts).unwrap();
        assert!((g2.rows.last().unwrap().value - lim).abs() < 5e-3);
        let g2 = sweep("gamma_r", Some(2), &sequence(Sequence::LambdaM, 2, 3, 6), Method::ClosedForm, &opts).unwrap();
        assert!((g2.rows.last().unwrap().value - 0.5).abs() < 5e-3);
    }

    #[test]
    fn both_methods_agree_on_gamma() {
        let ls = [2f64.powi(-3), 2f64.powi(-6), 2f64.powi(-9)];
        let rep = sweep("gamma", None, &ls, Method::Both, &SweepOptions::default()).unwrap();
        assert!(rep.disagreements().is_empty(), "{:?}", rep.rows);
        assert!(rep.rows.iter().all(|r| r.discrepancy.is_some()));
    }

    #[test]
    fn unsupported_games_rejected() {
        assert!(sweep("state_blind", None, &[0.1], Method::ClosedForm, &SweepOptions::default()).is_err());
        assert!(sweep("gamma_r", None, &[0.1], Method::ClosedForm, &SweepOptions::default()).is_err());
        assert!("fast".parse::<Method>().is_err());
    }
}
