//! Public beliefs and the perfect-observation game on them.
//!
//! Both players see the same signal, so they share one posterior over the
//! hidden state. Replacing the state by that posterior gives a game with
//! perfectly observed (belief) states; [`reduce`] enumerates the beliefs
//! reachable from a root.

use std::collections::{HashMap, VecDeque};

use serde_json::json;
use thiserror::Error;

use crate::catalog::block_of;
use crate::model::GameSpec;
use crate::rational::Rational;

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("impossible observation: signal {signal:?} has probability 0")]
    ImpossibleObservation { signal: String },
    #[error("rational overflow while updating a belief")]
    Overflow,
    #[error("invalid belief: {0}")]
    Invalid(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("exact enumeration stopped at {0} nodes; the reachable belief set is larger")]
    Incomplete(usize),
}

/// An exact probability vector over the states of a game.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Belief(Vec<Rational>);

impl Belief {
    pub fn new(weights: Vec<Rational>) -> Result<Self, BeliefError> {
        if weights.iter().any(Rational::is_negative) {
            return Err(BeliefError::Invalid("negative weight".into()));
        }
        match Rational::checked_sum(weights.iter().copied()) {
            Some(s) if s == Rational::ONE => Ok(Belief(weights)),
            Some(s) => Err(BeliefError::Invalid(format!("weights sum to {s}"))),
            None => Err(BeliefError::Overflow),
        }
    }

    pub fn point(n: usize, k: usize) -> Self {
        let mut w = vec![Rational::ZERO; n];
        w[k] = Rational::ONE;
        Belief(w)
    }

    /// The initial distribution of `spec`.
    pub fn initial(spec: &GameSpec) -> Result<Self, BeliefError> {
        Self::new(spec.initial.clone())
    }

    /// Builds a belief from `(state name, weight)` pairs.
    pub fn from_named(spec: &GameSpec, pairs: &[(&str, Rational)]) -> Result<Self, BeliefError> {
        let mut w = vec![Rational::ZERO; spec.n_states()];
        for &(name, p) in pairs {
            let k = spec
                .state_index(name)
                .ok_or_else(|| BeliefError::Invalid(format!("unknown state {name:?}")))?;
            w[k] = w[k].checked_add(p).ok_or(BeliefError::Overflow)?;
        }
        Self::new(w)
    }

    pub fn weights(&self) -> &[Rational] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Rational::to_f64).collect()
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, Rational)> + '_ {
        self.0.iter().copied().enumerate().filter(|(_, w)| !w.is_zero())
    }

    /// `Some(k)` if the belief is the point mass on `k`.
    pub fn as_point(&self) -> Option<usize> {
        let mut s = self.support();
        match (s.next(), s.next()) {
            (Some((k, _)), None) => Some(k),
            _ => None,
        }
    }

    /// Total variation style `l1` distance, in floating point.
    pub fn l1_distance(&self, other: &Belief) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
            .sum()
    }
}

fn check_dims(spec: &GameSpec, p: &Belief, i: usize, j: usize) -> Result<(), BeliefError> {
    if p.0.len() != spec.n_states() || i >= spec.n1() || j >= spec.n2() {
        return Err(BeliefError::Parameter(format!(
            "belief of length {} or action pair ({i}, {j}) does not fit the game",
            p.0.len()
        )));
    }
    Ok(())
}

// Joint law of (signal, next state) under (p, i, j), indexed [signal][state].
fn joint(spec: &GameSpec, p: &Belief, i: usize, j: usize) -> Result<Vec<Vec<Rational>>, BeliefError> {
    check_dims(spec, p, i, j)?;
    let mut out = vec![vec![Rational::ZERO; spec.n_states()]; spec.signals.len()];
    for (k, pk) in p.support() {
        for o in spec.q(k, i, j) {
            let w = pk.checked_mul(o.prob).ok_or(BeliefError::Overflow)?;
            let cell = &mut out[o.signal][o.next];
            *cell = cell.checked_add(w).ok_or(BeliefError::Overflow)?;
        }
    }
    Ok(out)
}

/// Law of the public signal after `(i, j)` is played at belief `p`.
pub fn signal_marginal(spec: &GameSpec, p: &Belief, i: usize, j: usize) -> Result<Vec<Rational>, BeliefError> {
    joint(spec, p, i, j)?
        .into_iter()
        .map(|row| Rational::checked_sum(row).ok_or(BeliefError::Overflow))
        .collect()
}

/// Law of the next state, ignoring the signal.
pub fn state_marginal(spec: &GameSpec, p: &Belief, i: usize, j: usize) -> Result<Vec<Rational>, BeliefError> {
    let joint = joint(spec, p, i, j)?;
    let mut out = vec![Rational::ZERO; spec.n_states()];
    for row in joint {
        for (k, w) in row.into_iter().enumerate() {
            out[k] = out[k].checked_add(w).ok_or(BeliefError::Overflow)?;
        }
    }
    Ok(out)
}

fn normalize(row: Vec<Rational>, total: Rational) -> Result<Belief, BeliefError> {
    let w = row
        .into_iter()
        .map(|x| x.checked_div(total).ok_or(BeliefError::Overflow))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Belief(w))
}

/// Posterior on the next state after `(i, j)` and public signal `a`.
pub fn bayes_update(spec: &GameSpec, p: &Belief, i: usize, j: usize, a: usize) -> Result<Belief, BeliefError> {
    let mut joint = joint(spec, p, i, j)?;
    if a >= joint.len() {
        return Err(BeliefError::Parameter(format!("signal index {a} out of range")));
    }
    let row = std::mem::take(&mut joint[a]);
    let total = Rational::checked_sum(row.iter().copied()).ok_or(BeliefError::Overflow)?;
    if total.is_zero() {
        return Err(BeliefError::ImpossibleObservation {
            signal: spec.signals[a].clone(),
        });
    }
    normalize(row, total)
}

/// Every signal with positive probability, with its probability and posterior.
pub fn split(spec: &GameSpec, p: &Belief, i: usize, j: usize) -> Result<Vec<(Rational, usize, Belief)>, BeliefError> {
    let joint = joint(spec, p, i, j)?;
    let mut out = Vec::new();
    for (a, row) in joint.into_iter().enumerate() {
        let total = Rational::checked_sum(row.iter().copied()).ok_or(BeliefError::Overflow)?;
        if !total.is_zero() {
            out.push((total, a, normalize(row, total)?));
        }
    }
    Ok(out)
}

// Position of a catalog chain state: `X++` is 0, `XT` is 1, `XTl` is l.
fn chain_position(name: &str) -> Option<u32> {
    let rest = &name[1..];
    match rest {
        "++" => Some(0),
        "T" => Some(1),
        _ => rest.strip_prefix('T')?.parse().ok(),
    }
}

fn dyadic_exponent(w: Rational) -> Option<u32> {
    let d = w.denom();
    (w.numer() == 1 && d > 0 && d & (d - 1) == 0).then(|| d.trailing_zeros())
}

/// Human-readable name of a belief.
///
/// Catalog games get the compact names `1_n` / `0_n` for the beliefs
/// `2^{-e} X^{T_l} + (1 - 2^{-e}) X^+` with `n = e + l`, and the state name
/// for absorbing point masses. Anything else is written out as a sum.
pub fn label(spec: &GameSpec, p: &Belief) -> String {
    catalog_label(spec, p).unwrap_or_else(|| {
        p.support()
            .map(|(k, w)| format!("{w}*{}", spec.states[k]))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn catalog_label(spec: &GameSpec, p: &Belief) -> Option<String> {
    let support: Vec<(usize, Rational)> = p.support().collect();
    if let [(k, _)] = support[..] {
        if spec.absorbing[k] {
            return Some(spec.states[k].clone());
        }
    }
    let r: u32 = spec.metadata.get("r").and_then(|r| r.parse().ok()).unwrap_or(1);
    let block = block_of(spec, support.first()?.0)?;
    let step = if block == '0' { r } else { 2 * r };
    let plus = format!("{block}+");
    let mut chain = None;
    let mut plus_weight = Rational::ZERO;
    for &(k, w) in &support {
        if block_of(spec, k) != Some(block) {
            return None;
        }
        if spec.states[k] == plus {
            plus_weight = w;
        } else if chain.replace((k, w)).is_some() {
            return None;
        }
    }
    let (k, w) = chain?;
    let l = chain_position(&spec.states[k])?;
    let e = dyadic_exponent(w)?;
    if l >= step || e % step != 0 || plus_weight != Rational::ONE - w {
        return None;
    }
    Some(format!("{block}_{}", e + l))
}

/// One edge of the belief chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainEdge {
    pub prob: Rational,
    pub next: usize,
    pub signal: usize,
}

/// The enumerated perfect-observation game on beliefs.
///
/// Node 0 is the root. Rows are indexed like the game's: `(node * |I| + i) * |J| + j`.
/// A boundary node is one whose successors were not enumerated; it loops to
/// itself and keeps its own payoff.
#[derive(Debug, Clone)]
pub struct BeliefChain {
    pub game: String,
    pub states: Vec<String>,
    pub actions1: Vec<String>,
    pub actions2: Vec<String>,
    pub signals: Vec<String>,
    pub nodes: Vec<Belief>,
    pub labels: Vec<String>,
    pub transitions: Vec<Vec<ChainEdge>>,
    pub payoff: Vec<f64>,
    pub boundary: Vec<bool>,
    /// Largest single-path probability found for each node during enumeration.
    pub reach: Vec<f64>,
    pub truncation_bound: f64,
    /// `max |g|` of the underlying game.
    pub payoff_norm: f64,
    /// `max g - min g` of the underlying game.
    pub payoff_span: f64,
    index: HashMap<Belief, usize>,
}

impl BeliefChain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n1(&self) -> usize {
        self.actions1.len()
    }

    pub fn n2(&self) -> usize {
        self.actions2.len()
    }

    #[inline]
    pub fn cell(&self, node: usize, i: usize, j: usize) -> usize {
        (node * self.n1() + i) * self.n2() + j
    }

    #[inline]
    pub fn edges(&self, node: usize, i: usize, j: usize) -> &[ChainEdge] {
        &self.transitions[self.cell(node, i, j)]
    }

    #[inline]
    pub fn g(&self, node: usize, i: usize, j: usize) -> f64 {
        self.payoff[self.cell(node, i, j)]
    }

    pub fn locate(&self, p: &Belief) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|b| **b).count()
    }

    /// JSON dump: node beliefs as rational strings, transitions, bound.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = (0..self.len())
            .map(|u| {
                let belief: serde_json::Map<_, _> = self.nodes[u]
                    .support()
                    .map(|(k, w)| (self.states[k].clone(), json!(w.to_string())))
                    .collect();
                let mut rows = Vec::new();
                for i in 0..self.n1() {
                    for j in 0..self.n2() {
                        let edges: Vec<_> = self
                            .edges(u, i, j)
                            .iter()
                            .map(|e| json!({"prob": e.prob.to_string(), "next": e.next, "signal": self.signals[e.signal]}))
                            .collect();
                        rows.push(json!({
                            "a1": self.actions1[i],
                            "a2": self.actions2[j],
                            "payoff": self.g(u, i, j),
                            "outcomes": edges,
                        }));
                    }
                }
                json!({
                    "index": u,
                    "label": self.labels[u],
                    "belief": belief,
                    "boundary": self.boundary[u],
                    "reach": self.reach[u],
                    "transitions": rows,
                })
            })
            .collect();
        json!({
            "game": self.game,
            "node_count": self.len(),
            "boundary_count": self.boundary_count(),
            "truncation_bound": self.truncation_bound,
            "nodes": nodes,
        })
    }
}

/// Enumerates beliefs reachable from `root` breadth first.
///
/// A node is left unexpanded (made a boundary self-loop) when expanding it
/// would push the node count past `max_nodes`, when its reach probability is
/// at most `tail_mass` (only if `tail_mass > 0`), or when an exact posterior
/// does not fit in 64-bit rationals. The chain records
/// `truncation_bound = min(1, total boundary reach) * 2 max|g|`.
pub fn reduce(spec: &GameSpec, root: &Belief, max_nodes: usize, tail_mass: f64) -> Result<BeliefChain, BeliefError> {
    if max_nodes < 1 {
        return Err(BeliefError::Parameter("max_nodes must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&tail_mass) {
        return Err(BeliefError::Parameter(format!("tail_mass {tail_mass} outside [0, 1)")));
    }
    if root.0.len() != spec.n_states() {
        return Err(BeliefError::Parameter("root belief does not fit the game".into()));
    }
    let (n1, n2) = (spec.n1(), spec.n2());
    let mut nodes = vec![root.clone()];
    let mut index = HashMap::from([(root.clone(), 0usize)]);
    let mut reach = vec![1.0f64];
    let mut transitions: Vec<Vec<ChainEdge>> = vec![Vec::new(); n1 * n2];
    let mut boundary = vec![false];
    let mut queue = VecDeque::from([0usize]);

    while let Some(u) = queue.pop_front() {
        let splits = if tail_mass > 0.0 && u != 0 && reach[u] <= tail_mass {
            None
        } else {
            let mut all = Vec::with_capacity(n1 * n2);
            let mut ok = true;
            for i in 0..n1 {
                for j in 0..n2 {
                    match split(spec, &nodes[u], i, j) {
                        Ok(s) => all.push(s),
                        Err(BeliefError::Overflow) => {
                            ok = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if !ok {
                    break;
                }
            }
            ok.then_some(all)
        };
        let splits = splits.filter(|all| {
            let mut fresh: Vec<&Belief> = Vec::new();
            for (_, _, b) in all.iter().flatten() {
                if !index.contains_key(b) && !fresh.contains(&b) {
                    fresh.push(b);
                }
            }
            nodes.len() + fresh.len() <= max_nodes
        });
        let base = u * n1 * n2;
        match splits {
            None => {
                boundary[u] = true;
                for c in 0..n1 * n2 {
                    transitions[base + c] = vec![ChainEdge {
                        prob: Rational::ONE,
                        next: u,
                        signal: 0,
                    }];
                }
            }
            Some(all) => {
                for (c, row) in all.into_iter().enumerate() {
                    let mut edges = Vec::with_capacity(row.len());
                    for (prob, signal, b) in row {
                        let v = match index.get(&b) {
                            Some(&v) => v,
                            None => {
                                let v = nodes.len();
                                index.insert(b.clone(), v);
                                nodes.push(b);
                                reach.push(0.0);
                                boundary.push(false);
                                transitions.extend(std::iter::repeat_with(Vec::new).take(n1 * n2));
                                queue.push_back(v);
                                v
                            }
                        };
                        let r = reach[u] * prob.to_f64();
                        if r > reach[v] {
                            reach[v] = r;
                        }
                        edges.push(ChainEdge { prob, next: v, signal });
                    }
                    transitions[base + c] = edges;
                }
            }
        }
    }

    let mut payoff = vec![0.0; nodes.len() * n1 * n2];
    for (u, p) in nodes.iter().enumerate() {
        for i in 0..n1 {
            for j in 0..n2 {
                payoff[(u * n1 + i) * n2 + j] = p.support().map(|(k, w)| w.to_f64() * spec.g(k, i, j)).sum();
            }
        }
    }
    let clamped: f64 = (0..nodes.len()).filter(|&u| boundary[u]).map(|u| reach[u]).sum();
    let payoff_norm = spec.payoff_norm();
    let labels = nodes.iter().map(|p| label(spec, p)).collect();
    Ok(BeliefChain {
        game: spec.name.clone(),
        states: spec.states.clone(),
        actions1: spec.actions1.clone(),
        actions2: spec.actions2.clone(),
        signals: spec.signals.clone(),
        nodes,
        labels,
        transitions,
        payoff,
        boundary,
        reach,
        truncation_bound: clamped.min(1.0) * 2.0 * payoff_norm,
        payoff_norm,
        payoff_span: spec.payoff_range(),
        index,
    })
}

/// Like [`reduce`] with no tail cut-off, but fails instead of clamping.
pub fn reduce_exact(spec: &GameSpec, root: &Belief, max_nodes: usize) -> Result<BeliefChain, BeliefError> {
    let chain = reduce(spec, root, max_nodes, 0.0)?;
    if chain.boundary_count() > 0 {
        return Err(BeliefError::Incomplete(chain.len()));
    }
    Ok(chain)
}
