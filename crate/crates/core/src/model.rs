//! Finite repeated games with a hidden state, public signals and observed actions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("malformed game file: {0}")]
    Json(#[from] serde_json::Error),
}

/// The maximiser (`One`) or the minimiser (`Two`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

/// One outcome of a transition: move to `next` with probability `prob` and
/// emit public signal `signal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub prob: Rational,
    pub next: usize,
    pub signal: usize,
}

/// A problem found by [`GameSpec::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// A finite zero-sum game `(K, I, J, A, q, g, p)`.
///
/// Payoffs and kernel rows are stored densely, indexed by
/// `(state * |I| + i) * |J| + j`. Player 1 maximises.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub name: String,
    pub states: Vec<String>,
    pub actions1: Vec<String>,
    pub actions2: Vec<String>,
    pub signals: Vec<String>,
    pub payoff: Vec<f64>,
    pub kernel: Vec<Vec<Outcome>>,
    pub initial: Vec<Rational>,
    pub absorbing: Vec<bool>,
    /// Free-form annotations, e.g. which player is informed.
    pub metadata: BTreeMap<String, String>,
}

impl GameSpec {
    /// An empty game with the given name sets. Payoffs are zero and every
    /// kernel row is empty until filled in.
    pub fn new(
        name: &str,
        states: &[&str],
        actions1: &[&str],
        actions2: &[&str],
        signals: &[&str],
    ) -> Self {
        let cells = states.len() * actions1.len() * actions2.len();
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        GameSpec {
            name: name.to_string(),
            states: owned(states),
            actions1: owned(actions1),
            actions2: owned(actions2),
            signals: owned(signals),
            payoff: vec![0.0; cells],
            kernel: vec![Vec::new(); cells],
            initial: vec![Rational::ZERO; states.len()],
            absorbing: vec![false; states.len()],
            metadata: BTreeMap::new(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n1(&self) -> usize {
        self.actions1.len()
    }

    pub fn n2(&self) -> usize {
        self.actions2.len()
    }

    #[inline]
    pub fn cell(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n1() + i) * self.n2() + j
    }

    #[inline]
    pub fn g(&self, k: usize, i: usize, j: usize) -> f64 {
        self.payoff[self.cell(k, i, j)]
    }

    #[inline]
    pub fn q(&self, k: usize, i: usize, j: usize) -> &[Outcome] {
        &self.kernel[self.cell(k, i, j)]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action1_index(&self, name: &str) -> Option<usize> {
        self.actions1.iter().position(|s| s == name)
    }

    pub fn action2_index(&self, name: &str) -> Option<usize> {
        self.actions2.iter().position(|s| s == name)
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s == name)
    }

    fn require(&self, kind: &'static str, name: &str) -> Result<usize, ModelError> {
        let found = match kind {
            "state" => self.state_index(name),
            "action1" => self.action1_index(name),
            "action2" => self.action2_index(name),
            _ => self.signal_index(name),
        };
        found.ok_or_else(|| ModelError::UnknownName {
            kind,
            name: name.to_string(),
        })
    }

    /// Sets the payoff of state `k` for every action pair.
    pub fn set_state_payoff(&mut self, k: usize, value: f64) {
        for i in 0..self.n1() {
            for j in 0..self.n2() {
                let c = self.cell(k, i, j);
                self.payoff[c] = value;
            }
        }
    }

    /// Sets the kernel row of `(k, i, j)` from named outcomes.
    pub fn set_row(
        &mut self,
        k: usize,
        i: usize,
        j: usize,
        outcomes: &[(Rational, &str, &str)],
    ) -> Result<(), ModelError> {
        let mut row = Vec::with_capacity(outcomes.len());
        for &(prob, next, signal) in outcomes {
            row.push(Outcome {
                prob,
                next: self.require("state", next)?,
                signal: self.require("signal", signal)?,
            });
        }
        let c = self.cell(k, i, j);
        self.kernel[c] = row;
        Ok(())
    }

    /// Makes `k` absorbing: self-loop with `signal` and constant payoff.
    pub fn make_absorbing(&mut self, k: usize, payoff: f64, signal: usize) {
        self.absorbing[k] = true;
        self.set_state_payoff(k, payoff);
        for i in 0..self.n1() {
            for j in 0..self.n2() {
                let c = self.cell(k, i, j);
                self.kernel[c] = vec![Outcome {
                    prob: Rational::ONE,
                    next: k,
                    signal,
                }];
            }
        }
    }

    pub fn set_initial_state(&mut self, k: usize) {
        self.initial = vec![Rational::ZERO; self.n_states()];
        self.initial[k] = Rational::ONE;
    }

    /// `max |g|`.
    pub fn payoff_norm(&self) -> f64 {
        self.payoff.iter().fold(0.0f64, |m, g| m.max(g.abs()))
    }

    /// `max g - min g`, zero for an empty game.
    pub fn payoff_range(&self) -> f64 {
        if self.payoff.is_empty() {
            return 0.0;
        }
        let lo = self.payoff.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.payoff.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Checks every structural invariant and returns the list of violations.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |location: String, message: String| out.push(Violation { location, message });
        let (ns, n1, n2) = (self.n_states(), self.n1(), self.n2());

        if ns == 0 || n1 == 0 || n2 == 0 || self.signals.is_empty() {
            push("game".into(), "states, actions and signals must be nonempty".into());
            return out;
        }
        for (what, names) in [
            ("state", &self.states),
            ("action1", &self.actions1),
            ("action2", &self.actions2),
            ("signal", &self.signals),
        ] {
            let mut seen = BTreeSet::new();
            for n in names {
                if !seen.insert(n) {
                    push(what.into(), format!("duplicate name {n:?}"));
                }
            }
        }
        let cells = ns * n1 * n2;
        if self.payoff.len() != cells || self.kernel.len() != cells {
            push("game".into(), format!("expected {cells} payoff and kernel cells"));
            return out;
        }
        if self.initial.len() != ns || self.absorbing.len() != ns {
            push("game".into(), "initial/absorbing length differs from state count".into());
            return out;
        }

        for k in 0..ns {
            for i in 0..n1 {
                for j in 0..n2 {
                    let loc = format!("({}, {}, {})", self.states[k], self.actions1[i], self.actions2[j]);
                    let g = self.g(k, i, j);
                    if !g.is_finite() || g.abs() > 1.0 {
                        push(loc.clone(), format!("payoff {g} outside [-1, 1]"));
                    }
                    let row = self.q(k, i, j);
                    let mut sum = Some(Rational::ZERO);
                    for o in row {
                        if o.next >= ns {
                            push(loc.clone(), format!("undeclared next state index {}", o.next));
                        }
                        if o.signal >= self.signals.len() {
                            push(loc.clone(), format!("undeclared signal index {}", o.signal));
                        }
                        if o.prob.is_negative() {
                            push(loc.clone(), format!("negative probability {}", o.prob));
                        }
                        sum = sum.and_then(|s| s.checked_add(o.prob));
                    }
                    match sum {
                        Some(s) if s == Rational::ONE => {}
                        Some(s) => push(loc.clone(), format!("row sums to {s}")),
                        None => push(loc.clone(), "row sum overflows".into()),
                    }
                }
            }
            if self.absorbing[k] {
                let g0 = self.g(k, 0, 0);
                let mut signal = None;
                for i in 0..n1 {
                    for j in 0..n2 {
                        let loc = format!("({}, {}, {})", self.states[k], self.actions1[i], self.actions2[j]);
                        if self.g(k, i, j) != g0 {
                            push(loc.clone(), "absorbing payoff depends on actions".into());
                        }
                        let row = self.q(k, i, j);
                        let ok = row.len() == 1 && row[0].next == k && row[0].prob == Rational::ONE;
                        if !ok {
                            push(loc, "absorbing state must loop to itself with probability 1".into());
                        } else if *signal.get_or_insert(row[0].signal) != row[0].signal {
                            push(self.states[k].clone(), "absorbing signal is not fixed".into());
                        }
                    }
                }
            }
        }

        let mut total = Some(Rational::ZERO);
        for (k, p) in self.initial.iter().enumerate() {
            if p.is_negative() {
                push(format!("initial {}", self.states[k]), format!("negative weight {p}"));
            }
            total = total.and_then(|t| t.checked_add(*p));
        }
        if total != Some(Rational::ONE) {
            push("initial".into(), "initial distribution does not sum to 1".into());
        }
        out
    }

    /// Rescales payoffs into `[-1, 1]` when they exceed it. Returns the factor used.
    pub fn normalize_payoffs(&mut self) -> f64 {
        let norm = self.payoff_norm();
        if norm > 1.0 {
            for g in &mut self.payoff {
                *g /= norm;
            }
            self.metadata.insert("payoff_scale".into(), format!("{norm}"));
            norm
        } else {
            1.0
        }
    }

    /// `g(p, x, y) = sum p(k) x(i) y(j) g(k, i, j)`.
    pub fn extend_payoff(&self, p: &[f64], x: &[f64], y: &[f64]) -> Result<f64, ModelError> {
        check_len("p", p.len(), self.n_states())?;
        check_len("x", x.len(), self.n1())?;
        check_len("y", y.len(), self.n2())?;
        let mut total = 0.0;
        for (k, &pk) in p.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                for (j, &yj) in y.iter().enumerate() {
                    total += pk * xi * yj * self.g(k, i, j);
                }
            }
        }
        Ok(total)
    }

    pub fn from_json(text: &str) -> Result<GameSpec, ModelError> {
        let file: GameFile = serde_json::from_str(text)?;
        file.into_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GameFile::from_spec(self)).expect("game file serializes")
    }
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), ModelError> {
    if got != expected {
        return Err(ModelError::Dimension { what, got, expected });
    }
    Ok(())
}

/// A real-valued probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.is_empty() {
            return Err(ModelError::InvalidDistribution("empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ModelError::InvalidDistribution(format!("{weights:?}")));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidDistribution(format!("weights sum to {s}")));
        }
        Ok(Distribution { weights })
    }

    pub fn point(n: usize, k: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[k] = 1.0;
        Distribution { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Distribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn from_rationals(ws: &[Rational]) -> Result<Self, ModelError> {
        Self::new(ws.iter().map(Rational::to_f64).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

// --- file format -----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    #[serde(default)]
    name: String,
    states: Vec<String>,
    actions1: Vec<String>,
    actions2: Vec<String>,
    signals: Vec<String>,
    payoffs: Vec<PayoffEntry>,
    kernel: Vec<KernelEntry>,
    initial: BTreeMap<String, Rational>,
    #[serde(default)]
    absorbing: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PayoffEntry {
    state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a2: Option<String>,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct KernelEntry {
    state: String,
    a1: String,
    a2: String,
    outcomes: Vec<OutcomeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutcomeEntry {
    prob: Rational,
    next: String,
    signal: String,
}

// `"*"` in an action slot of the file format stands for every action.
fn expand(spec: &GameSpec, kind: &'static str, name: Option<&str>) -> Result<Vec<usize>, ModelError> {
    let n = if kind == "action1" { spec.n1() } else { spec.n2() };
    match name {
        None | Some("*") => Ok((0..n).collect()),
        Some(a) => Ok(vec![spec.require(kind, a)?]),
    }
}

impl GameFile {
    fn into_spec(self) -> Result<GameSpec, ModelError> {
        fn refs(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        let mut spec = GameSpec::new(
            &self.name,
            &refs(&self.states),
            &refs(&self.actions1),
            &refs(&self.actions2),
            &refs(&self.signals),
        );
        spec.metadata = self.metadata;

        let mut seen_payoff = HashSet::new();
        for e in &self.payoffs {
            let k = spec.require("state", &e.state)?;
            for i in expand(&spec, "action1", e.a1.as_deref())? {
                for j in expand(&spec, "action2", e.a2.as_deref())? {
                    let c = spec.cell(k, i, j);
                    spec.payoff[c] = e.value;
                    seen_payoff.insert(c);
                }
            }
        }
        if seen_payoff.len() != spec.payoff.len() {
            return Err(ModelError::Invalid(format!(
                "payoffs cover {} of {} (state, a1, a2) cells",
                seen_payoff.len(),
                spec.payoff.len()
            )));
        }
        for e in &self.kernel {
            let k = spec.require("state", &e.state)?;
            let outcomes = e
                .outcomes
                .iter()
                .map(|o| (o.prob, o.next.as_str(), o.signal.as_str()))
                .collect::<Vec<_>>();
            for i in expand(&spec, "action1", Some(&e.a1))? {
                for j in expand(&spec, "action2", Some(&e.a2))? {
                    spec.set_row(k, i, j, &outcomes)?;
                }
            }
        }
        for (s, p) in &self.initial {
            let k = spec.require("state", s)?;
            spec.initial[k] = *p;
        }
        for s in &self.absorbing {
            let k = spec.require("state", s)?;
            spec.absorbing[k] = true;
        }
        spec.normalize_payoffs();
        Ok(spec)
    }

    fn from_spec(spec: &GameSpec) -> GameFile {
        let mut payoffs = Vec::new();
        let mut kernel = Vec::new();
        for k in 0..spec.n_states() {
            let g0 = spec.g(k, 0, 0);
            let constant = (0..spec.n1()).all(|i| (0..spec.n2()).all(|j| spec.g(k, i, j) == g0));
            if constant {
                payoffs.push(PayoffEntry {
                    state: spec.states[k].clone(),
                    a1: None,
                    a2: None,
                    value: g0,
                });
            }
            for i in 0..spec.n1() {
                for j in 0..spec.n2() {
                    if !constant {
                        payoffs.push(PayoffEntry {
                            state: spec.states[k].clone(),
                            a1: Some(spec.actions1[i].clone()),
                            a2: Some(spec.actions2[j].clone()),
                            value: spec.g(k, i, j),
                        });
                    }
                    kernel.push(KernelEntry {
                        state: spec.states[k].clone(),
                        a1: spec.actions1[i].clone(),
                        a2: spec.actions2[j].clone(),
                        outcomes: spec
                            .q(k, i, j)
                            .iter()
                            .map(|o| OutcomeEntry {
                                prob: o.prob,
                                next: spec.states[o.next].clone(),
                                signal: spec.signals[o.signal].clone(),
                            })
                            .collect(),
                    });
                }
            }
        }
        GameFile {
            name: spec.name.clone(),
            states: spec.states.clone(),
            actions1: spec.actions1.clone(),
            actions2: spec.actions2.clone(),
            signals: spec.signals.clone(),
            payoffs,
            kernel,
            initial: spec
                .initial
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(k, p)| (spec.states[k].clone(), *p))
                .collect(),
            absorbing: (0..spec.n_states())
                .filter(|&k| spec.absorbing[k])
                .map(|k| spec.states[k].clone())
                .collect(),
            metadata: spec.metadata.clone(),
        }
    }
}
