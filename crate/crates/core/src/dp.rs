//! Dynamic programming on a belief chain: the discounted fixed point,
//! backward induction for the n-stage game, and evaluation of fixed profiles.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::belief::BeliefChain;
use crate::catalog::threshold_quits;
use crate::matrix::{game_value, solve, MatrixGame};
use crate::model::{GameSpec, Player};

#[derive(Debug, Error, PartialEq)]
pub enum DpError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("profile does not fit the chain: {0}")]
    Profile(String),
}

/// Value iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct ViOptions {
    /// Stop when the sup-norm step is at most `tol * lambda`.
    pub tol: f64,
    /// Hard cap on sweeps; an unconverged run reports its a-posteriori bound.
    pub max_iterations: u64,
    /// Chains with at least this many nodes are swept in parallel.
    pub parallel_threshold: usize,
}

impl Default for ViOptions {
    fn default() -> Self {
        ViOptions {
            tol: 1e-10,
            max_iterations: 20_000_000,
            parallel_threshold: 1024,
        }
    }
}

/// Per-node mixed actions of both players.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProfile {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

/// Values on every chain node with a guaranteed error bound at the root.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    /// Bound on `|values[u] - true value|` for every node `u`.
    pub node_bounds: Vec<f64>,
    pub error_bound: f64,
    pub iterations: u64,
    pub converged: bool,
}

impl ValueFunction {
    pub fn root(&self) -> f64 {
        self.values[0]
    }
}

#[derive(Debug, Clone)]
pub struct DiscountedSolution {
    pub value: ValueFunction,
    pub profile: StationaryProfile,
}

// Flattened chain with edges merged per successor and probabilities in f64.
struct Compiled {
    n1: usize,
    n2: usize,
    payoff: Vec<f64>,
    start: Vec<usize>,
    prob: Vec<f64>,
    next: Vec<usize>,
    boundary: Vec<bool>,
}

impl Compiled {
    fn new(chain: &BeliefChain) -> Self {
        let mut start = vec![0];
        let mut prob = Vec::new();
        let mut next = Vec::new();
        for row in &chain.transitions {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for e in row {
                *merged.entry(e.next).or_insert(0.0) += e.prob.to_f64();
            }
            for (v, p) in merged {
                next.push(v);
                prob.push(p);
            }
            start.push(next.len());
        }
        Compiled {
            n1: chain.n1(),
            n2: chain.n2(),
            payoff: chain.payoff.clone(),
            start,
            prob,
            next,
            boundary: chain.boundary.clone(),
        }
    }

    fn len(&self) -> usize {
        self.boundary.len()
    }

    #[inline]
    fn expect(&self, cell: usize, f: &[f64]) -> f64 {
        let (a, b) = (self.start[cell], self.start[cell + 1]);
        self.prob[a..b].iter().zip(&self.next[a..b]).map(|(p, &v)| p * f[v]).sum()
    }

    // Stage matrix `wg * g + wf * E f` at node u.
    fn stage_matrix(&self, u: usize, wg: f64, wf: f64, f: &[f64], out: &mut [f64]) {
        let base = u * self.n1 * self.n2;
        for c in 0..self.n1 * self.n2 {
            out[c] = wg * self.payoff[base + c] + wf * self.expect(base + c, f);
        }
    }

    fn operator(&self, wg: f64, wf: f64, f: &[f64], out: &mut [f64], parallel: bool) {
        let cells = self.n1 * self.n2;
        let one = |u: usize, o: &mut f64| {
            let mut buf = [0.0f64; 16];
            let mut heap;
            let m: &mut [f64] = if cells <= 16 {
                &mut buf[..cells]
            } else {
                heap = vec![0.0; cells];
                &mut heap[..]
            };
            self.stage_matrix(u, wg, wf, f, m);
            *o = game_value(self.n1, self.n2, m);
        };
        if parallel {
            out.par_iter_mut().enumerate().for_each(|(u, o)| one(u, o));
        } else {
            out.iter_mut().enumerate().for_each(|(u, o)| one(u, o));
        }
    }

    // One sweep of the discounted boundary-hitting bound
    // h(u) = 1 on the boundary, (1 - lambda) max_{i,j} E h otherwise.
    fn hit_step(&self, lambda: f64, h: &[f64], out: &mut [f64]) {
        let cells = self.n1 * self.n2;
        for u in 0..self.len() {
            out[u] = if self.boundary[u] {
                1.0
            } else {
                let best = (0..cells)
                    .map(|c| self.expect(u * cells + c, h))
                    .fold(0.0f64, f64::max);
                (1.0 - lambda) * best
            };
        }
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn check_lambda(lambda: f64) -> Result<(), DpError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(DpError::Parameter(format!("lambda {lambda} outside (0, 1]")));
    }
    Ok(())
}

/// One application of the Shapley operator:
/// `T f (p) = val[lambda g(p, ., .) + (1 - lambda) E f]`.
pub fn shapley_operator(chain: &BeliefChain, lambda: f64, f: &[f64]) -> Result<Vec<f64>, DpError> {
    check_lambda(lambda)?;
    if f.len() != chain.len() {
        return Err(DpError::Parameter(format!("f has length {}, chain has {} nodes", f.len(), chain.len())));
    }
    let c = Compiled::new(chain);
    let mut out = vec![0.0; c.len()];
    c.operator(lambda, 1.0 - lambda, f, &mut out, false);
    Ok(out)
}

/// Shared Jacobi loop: iterate `f <- step(f)` from zero until the sup-norm step
/// is at most `tol * lambda`, tracking the boundary-hitting bound alongside.
fn fixed_point<F>(c: &Compiled, lambda: f64, span: f64, opts: &ViOptions, mut step: F) -> ValueFunction
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = c.len();
    let track_hits = c.boundary.iter().any(|b| *b);
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut h = vec![if track_hits { 1.0 } else { 0.0 }; n];
    let mut h2 = h.clone();
    let mut iterations = 0u64;
    let mut last = f64::INFINITY;
    let target = opts.tol * lambda;
    while iterations < opts.max_iterations {
        step(&f, &mut g);
        if track_hits {
            c.hit_step(lambda, &h, &mut h2);
            std::mem::swap(&mut h, &mut h2);
        }
        iterations += 1;
        last = sup_diff(&f, &g);
        std::mem::swap(&mut f, &mut g);
        if last <= target {
            break;
        }
    }
    let converged = last <= target;
    // |T f - v| <= (1 - lambda) / lambda * |T f - f|, never more than the payoff span
    let contraction = (last * (1.0 - lambda) / lambda).min(span);
    let node_bounds: Vec<f64> = h.iter().map(|hu| contraction + span * hu).collect();
    ValueFunction {
        error_bound: node_bounds[0],
        values: f,
        node_bounds,
        iterations,
        converged,
    }
}

/// Fixed point of the Shapley operator by Jacobi value iteration from zero.
///
/// The reported bound at each node is the contraction bound
/// `step * (1 - lambda) / lambda` plus `span(g) * h(u)`, where `h(u)` bounds
/// the discounted probability of ever reaching a boundary node from `u`.
pub fn discounted_value(chain: &BeliefChain, lambda: f64, opts: &ViOptions) -> Result<DiscountedSolution, DpError> {
    check_lambda(lambda)?;
    if !(opts.tol > 0.0) {
        return Err(DpError::Parameter("tol must be positive".into()));
    }
    let c = Compiled::new(chain);
    let parallel = c.len() >= opts.parallel_threshold;
    let value = fixed_point(&c, lambda, chain.payoff_span, opts, |f, out| {
        c.operator(lambda, 1.0 - lambda, f, out, parallel)
    });
    let profile = extract_profile(&c, lambda, &value.values);
    Ok(DiscountedSolution { value, profile })
}

// Optimal stationary actions against the continuation `f`, made pure whenever
// a pure action (lowest index first) guarantees the value to within 1e-9.
fn extract_profile(c: &Compiled, lambda: f64, f: &[f64]) -> StationaryProfile {
    let (n1, n2) = (c.n1, c.n2);
    let mut x = Vec::with_capacity(c.len());
    let mut y = Vec::with_capacity(c.len());
    let mut m = vec![0.0; n1 * n2];
    for u in 0..c.len() {
        c.stage_matrix(u, lambda, 1.0 - lambda, f, &mut m);
        let game = MatrixGame::from_flat(n1, n2, m.clone()).expect("finite stage matrix");
        let sol = solve(&game);
        let v = sol.value;
        let pure_row = (0..n1).find(|&i| (0..n2).all(|j| game.at(i, j) >= v - 1e-9));
        let pure_col = (0..n2).find(|&j| (0..n1).all(|i| game.at(i, j) <= v + 1e-9));
        x.push(pure_row.map_or(sol.row_strategy, |i| unit(n1, i)));
        y.push(pure_col.map_or(sol.col_strategy, |j| unit(n2, j)));
    }
    StationaryProfile { x, y }
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// Discounted payoff of a fixed stationary profile:
/// the fixed point of `f = lambda g_xy + (1 - lambda) P_xy f`.
pub fn evaluate_profile(
    chain: &BeliefChain,
    profile: &StationaryProfile,
    lambda: f64,
    opts: &ViOptions,
) -> Result<ValueFunction, DpError> {
    check_lambda(lambda)?;
    let c = Compiled::new(chain);
    let (n1, n2) = (c.n1, c.n2);
    if profile.x.len() != c.len() || profile.y.len() != c.len() {
        return Err(DpError::Profile("one mixed action per node is required".into()));
    }
    for u in 0..c.len() {
        if profile.x[u].len() != n1 || profile.y[u].len() != n2 {
            return Err(DpError::Profile(format!("node {u} has the wrong number of actions")));
        }
    }
    // collapse the profile into one reward and one successor law per node
    let mut reward = vec![0.0; c.len()];
    let mut law: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c.len()];
    for u in 0..c.len() {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for i in 0..n1 {
            for j in 0..n2 {
                let w = profile.x[u][i] * profile.y[u][j];
                if w == 0.0 {
                    continue;
                }
                let cell = (u * n1 + i) * n2 + j;
                reward[u] += w * c.payoff[cell];
                for e in c.start[cell]..c.start[cell + 1] {
                    *acc.entry(c.next[e]).or_insert(0.0) += w * c.prob[e];
                }
            }
        }
        law[u] = acc.into_iter().collect();
    }
    Ok(fixed_point(&c, lambda, chain.payoff_span, opts, |f, out| {
        for u in 0..out.len() {
            let cont: f64 = law[u].iter().map(|&(v, p)| p * f[v]).sum();
            out[u] = lambda * reward[u] + (1.0 - lambda) * cont;
        }
    }))
}

/// Values of the n-stage games for horizons `1..=n`.
#[derive(Debug, Clone)]
pub struct FiniteHorizon {
    /// `values[m - 1]` is `v_m` on every node.
    pub values: Vec<Vec<f64>>,
    /// `span(g)` times the largest probability of reaching a boundary node
    /// from the root within the horizon, per horizon.
    pub error_bounds: Vec<f64>,
}

/// Backward induction `v_m = val[(1/m) g + ((m-1)/m) E v_{m-1}]`.
pub fn finite_horizon(chain: &BeliefChain, n: usize) -> Result<FiniteHorizon, DpError> {
    if n < 1 {
        return Err(DpError::Parameter("horizon must be at least 1".into()));
    }
    let c = Compiled::new(chain);
    let len = c.len();
    let zero = vec![0.0; len];
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut hit: Vec<f64> = c.boundary.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut hit_next = hit.clone();
    let cells = c.n1 * c.n2;
    let mut error_bounds = Vec::with_capacity(n);
    for m in 1..=n {
        let prev = values.last().unwrap_or(&zero);
        let mut out = vec![0.0; len];
        let mf = m as f64;
        c.operator(1.0 / mf, (mf - 1.0) / mf, prev, &mut out, len >= 1024);
        values.push(out);
        error_bounds.push(chain.payoff_span * hit[0]);
        for u in 0..len {
            hit_next[u] = if c.boundary[u] {
                1.0
            } else {
                (0..cells).map(|k| c.expect(u * cells + k, &hit)).fold(0.0f64, f64::max)
            };
        }
        std::mem::swap(&mut hit, &mut hit_next);
    }
    Ok(FiniteHorizon { values, error_bounds })
}

/// Both sides of the inequality
/// `|v_n - w_n| <= (n0/n) |v_{n0} - w_{n0}| + sum_{m=n0}^{n-1} |w_m - w_{m+1}|`
/// with `w_m` the discounted value at `lambda = 1/m`, in sup norm over the chain.
pub fn neyman_gap(chain: &BeliefChain, n0: usize, n: usize, opts: &ViOptions) -> Result<(f64, f64), DpError> {
    if n0 < 1 || n0 > n {
        return Err(DpError::Parameter(format!("need 1 <= n0 <= n, got n0 = {n0}, n = {n}")));
    }
    let v = finite_horizon(chain, n)?;
    let w: Vec<Vec<f64>> = (n0..=n)
        .into_par_iter()
        .map(|m| discounted_value(chain, 1.0 / m as f64, opts).map(|s| s.value.values))
        .collect::<Result<_, _>>()?;
    let lhs = sup_diff(&v.values[n - 1], &w[n - n0]);
    let mut rhs = (n0 as f64 / n as f64) * sup_diff(&v.values[n0 - 1], &w[0]);
    for k in 0..n - n0 {
        rhs += sup_diff(&w[k], &w[k + 1]);
    }
    Ok((lhs, rhs))
}

/// The profile `(s(a), t(b))` on a chain of a catalog game with actions
/// `C`/`Q`: each player quits in its own block once the belief index reaches
/// its threshold (`None`: never quit).
pub fn threshold_profile(
    spec: &GameSpec,
    chain: &BeliefChain,
    a: Option<u32>,
    b: Option<u32>,
) -> Result<StationaryProfile, DpError> {
    let idx = |names: &[String], want: &str| {
        names
            .iter()
            .position(|s| s == want)
            .ok_or_else(|| DpError::Profile(format!("game has no action {want:?}")))
    };
    let (c1, q1) = (idx(&spec.actions1, "C")?, idx(&spec.actions1, "Q")?);
    let (c2, q2) = (idx(&spec.actions2, "C")?, idx(&spec.actions2, "Q")?);
    let mut x = Vec::with_capacity(chain.len());
    let mut y = Vec::with_capacity(chain.len());
    for p in &chain.nodes {
        let w = p.weights();
        let i = if threshold_quits(spec, w, Player::One, a) { q1 } else { c1 };
        let j = if threshold_quits(spec, w, Player::Two, b) { q2 } else { c2 };
        x.push(unit(spec.n1(), i));
        y.push(unit(spec.n2(), j));
    }
    Ok(StationaryProfile { x, y })
}

/// Values keyed by node label, for reporting.
pub fn named_values(chain: &BeliefChain, values: &[f64]) -> BTreeMap<String, f64> {
    chain.labels.iter().cloned().zip(values.iter().copied()).collect()
}
