//! Seeded Monte Carlo play of a game under fixed strategies.
//!
//! Every episode draws from its own ChaCha stream (`seed`, stream = episode
//! index), so results do not depend on how rayon schedules the episodes.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{optimal_thresholds, ThresholdGame, DEFAULT_N_MAX};
use crate::belief::{bayes_update, Belief, BeliefError};
use crate::catalog::{one_informed, threshold_quits};
use crate::model::{GameSpec, Player};
use crate::rational::Rational;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("horizon {horizon} leaves a tail of {tail:e} > 1e-9")]
    HorizonTooShort { horizon: u64, tail: f64 },
    #[error("strategy does not fit the game: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

type Result<T> = std::result::Result<T, SimError>;

/// Mixed actions per state name, for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTable {
    pub states: BTreeMap<String, Vec<f64>>,
    /// Used where the state is not known to the player.
    pub default: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategySpec {
    /// Player 1: quit (`Q`) once the belief index in block 0 reaches `a`, else `C`.
    ThresholdS(Option<u32>),
    /// Player 2: quit once the belief index in block 1 reaches `b`, else `C`.
    ThresholdT(Option<u32>),
    /// Player 1 in the state-blind game: `Q` past `a*(lambda)`, else `T`/`B` evenly.
    StateBlindSigma,
    /// Player 2 in the state-blind game: `Q` past `b*(lambda)`, else `L`/`R` evenly.
    StateBlindTau,
    /// Player 1 in the one-informed game: `(1 - sqrt l) T + sqrt l B` in state 1,
    /// the state-blind rule elsewhere.
    InformedSigma,
    /// Player 2 in the one-informed game: `(1 - sqrt l) L + sqrt l R` in state 1,
    /// `L`/`R` evenly elsewhere.
    InformedTau,
    Table(StrategyTable),
}

impl FromStr for StrategySpec {
    type Err = SimError;

    /// `s:4`, `t:never`, `sigma*`, `tau*`, `informed-sigma*`, `informed-tau*`.
    fn from_str(s: &str) -> Result<Self> {
        let threshold = |v: &str| -> Result<Option<u32>> {
            if v == "never" {
                return Ok(None);
            }
            v.parse()
                .map(Some)
                .map_err(|_| SimError::Parameter(format!("bad threshold {v:?}")))
        };
        match s {
            "sigma*" => Ok(StrategySpec::StateBlindSigma),
            "tau*" => Ok(StrategySpec::StateBlindTau),
            "informed-sigma*" => Ok(StrategySpec::InformedSigma),
            "informed-tau*" => Ok(StrategySpec::InformedTau),
            _ => match s.split_once(':') {
                Some(("s", v)) => Ok(StrategySpec::ThresholdS(threshold(v)?)),
                Some(("t", v)) => Ok(StrategySpec::ThresholdT(threshold(v)?)),
                _ => Err(SimError::Parameter(format!("unknown strategy {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub mean: f64,
    pub se: f64,
    pub episodes: u64,
    pub horizon: u64,
    pub seed: u64,
    /// Episodes that ended in each absorbing state.
    pub absorbed: BTreeMap<String, u64>,
    pub unabsorbed: u64,
}

/// `ceil(ln 1e-9 / ln(1 - lambda))`.
pub fn default_horizon(lambda: f64) -> u64 {
    (1e-9f64.ln() / (-lambda).ln_1p()).ceil() as u64
}

// A strategy resolved against a game: action indices and parameters.
#[derive(Debug, Clone)]
enum Rule {
    Threshold { player: Player, threshold: Option<u32>, cont: usize, quit: usize },
    Blind { player: Player, threshold: u32, a: usize, b: usize, quit: usize },
    InformedSigma { one: usize, t: usize, b: usize, sqrt_l: f64, blind: Box<Rule> },
    InformedTau { one: usize, l: usize, r: usize, sqrt_l: f64 },
    Table { rows: Vec<Option<Vec<f64>>>, default: Vec<f64>, informed: bool },
}

fn action(names: &[String], want: &str) -> Result<usize> {
    names
        .iter()
        .position(|a| a == want)
        .ok_or_else(|| SimError::Mismatch(format!("game has no action {want:?}")))
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn informed_player(spec: &GameSpec, player: Player) -> bool {
    let tag = match player {
        Player::One => '1',
        Player::Two => '2',
    };
    spec.metadata.get("informed").map_or(false, |v| v.contains(tag))
}

impl Rule {
    fn new(spec: &GameSpec, s: &StrategySpec, player: Player, lambda: f64) -> Result<Rule> {
        let names = match player {
            Player::One => &spec.actions1,
            Player::Two => &spec.actions2,
        };
        let wrong_side = |expected: Player| {
            if expected != player {
                Err(SimError::Mismatch(format!("{s:?} is a strategy for the other player")))
            } else {
                Ok(())
            }
        };
        let stars = || -> Result<(u32, u32)> {
            let t = optimal_thresholds(
                &ThresholdGame::new(lambda, 1, 2).map_err(|e| SimError::Parameter(e.to_string()))?,
                DEFAULT_N_MAX,
            )
            .map_err(|e| SimError::Parameter(e.to_string()))?;
            Ok((t.a_star, t.b_star))
        };
        Ok(match s {
            StrategySpec::ThresholdS(a) | StrategySpec::ThresholdT(a) => {
                wrong_side(if matches!(s, StrategySpec::ThresholdS(_)) { Player::One } else { Player::Two })?;
                Rule::Threshold {
                    player,
                    threshold: *a,
                    cont: action(names, "C")?,
                    quit: action(names, "Q")?,
                }
            }
            StrategySpec::StateBlindSigma => {
                wrong_side(Player::One)?;
                Rule::Blind {
                    player,
                    threshold: stars()?.0,
                    a: action(names, "T")?,
                    b: action(names, "B")?,
                    quit: action(names, "Q")?,
                }
            }
            StrategySpec::StateBlindTau => {
                wrong_side(Player::Two)?;
                Rule::Blind {
                    player,
                    threshold: stars()?.1,
                    a: action(names, "L")?,
                    b: action(names, "R")?,
                    quit: action(names, "Q")?,
                }
            }
            StrategySpec::InformedSigma => {
                wrong_side(Player::One)?;
                Rule::InformedSigma {
                    one: spec
                        .state_index("1")
                        .ok_or_else(|| SimError::Mismatch("game has no state \"1\"".into()))?,
                    t: action(names, "T")?,
                    b: action(names, "B")?,
                    sqrt_l: lambda.sqrt(),
                    blind: Box::new(Rule::new(spec, &StrategySpec::StateBlindSigma, player, lambda)?),
                }
            }
            StrategySpec::InformedTau => {
                wrong_side(Player::Two)?;
                if !informed_player(spec, Player::Two) {
                    return Err(SimError::Mismatch("informed-tau* needs Player 2 to observe the state".into()));
                }
                Rule::InformedTau {
                    one: spec
                        .state_index("1")
                        .ok_or_else(|| SimError::Mismatch("game has no state \"1\"".into()))?,
                    l: action(names, "L")?,
                    r: action(names, "R")?,
                    sqrt_l: lambda.sqrt(),
                }
            }
            StrategySpec::Table(t) => {
                let check = |v: &Vec<f64>| -> Result<()> {
                    let sum: f64 = v.iter().sum();
                    if v.len() != names.len() || v.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                        return Err(SimError::Mismatch(format!("{v:?} is not a mixed action over {names:?}")));
                    }
                    Ok(())
                };
                check(&t.default)?;
                let mut rows = vec![None; spec.n_states()];
                for (name, v) in &t.states {
                    let k = spec
                        .state_index(name)
                        .ok_or_else(|| SimError::Mismatch(format!("unknown state {name:?}")))?;
                    check(v)?;
                    rows[k] = Some(v.clone());
                }
                Rule::Table {
                    rows,
                    default: t.default.clone(),
                    informed: informed_player(spec, player),
                }
            }
        })
    }

    fn depends_on_state(&self) -> bool {
        matches!(self, Rule::InformedTau { .. } | Rule::Table { informed: true, .. })
    }

    fn mixed(&self, spec: &GameSpec, p: &Belief, state: usize, n: usize) -> Vec<f64> {
        match self {
            Rule::Threshold { player, threshold, cont, quit } => {
                unit(n, if threshold_quits(spec, p.weights(), *player, *threshold) { *quit } else { *cont })
            }
            Rule::Blind { player, threshold, a, b, quit } => {
                if threshold_quits(spec, p.weights(), *player, Some(*threshold)) {
                    unit(n, *quit)
                } else {
                    let mut v = vec![0.0; n];
                    v[*a] = 0.5;
                    v[*b] = 0.5;
                    v
                }
            }
            Rule::InformedSigma { one, t, b, sqrt_l, blind } => {
                if p.as_point() == Some(*one) {
                    let mut v = vec![0.0; n];
                    v[*t] = 1.0 - sqrt_l;
                    v[*b] = *sqrt_l;
                    v
                } else {
                    blind.mixed(spec, p, state, n)
                }
            }
            Rule::InformedTau { one, l, r, sqrt_l } => {
                let mut v = vec![0.0; n];
                if state == *one {
                    v[*l] = 1.0 - sqrt_l;
                    v[*r] = *sqrt_l;
                } else {
                    v[*l] = 0.5;
                    v[*r] = 0.5;
                }
                v
            }
            Rule::Table { rows, default, informed } => {
                let k = if *informed { Some(state) } else { p.as_point() };
                k.and_then(|k| rows[k].clone()).unwrap_or_else(|| default.clone())
            }
        }
    }
}

// Interned beliefs and cached decisions, one per rayon worker.
struct Tracker<'a> {
    spec: &'a GameSpec,
    rules: [&'a Rule; 2],
    nodes: Vec<Belief>,
    index: HashMap<Belief, usize>,
    next: HashMap<(usize, usize, usize, usize), usize>,
    decisions: [Vec<Option<Vec<f64>>>; 2],
}

impl<'a> Tracker<'a> {
    fn new(spec: &'a GameSpec, rules: [&'a Rule; 2]) -> Self {
        Tracker {
            spec,
            rules,
            nodes: Vec::new(),
            index: HashMap::new(),
            next: HashMap::new(),
            decisions: [Vec::new(), Vec::new()],
        }
    }

    fn intern(&mut self, p: Belief) -> usize {
        if let Some(&u) = self.index.get(&p) {
            return u;
        }
        let u = self.nodes.len();
        self.index.insert(p.clone(), u);
        self.nodes.push(p);
        self.decisions[0].push(None);
        self.decisions[1].push(None);
        u
    }

    fn update(&mut self, u: usize, i: usize, j: usize, signal: usize) -> Result<usize> {
        if let Some(&v) = self.next.get(&(u, i, j, signal)) {
            return Ok(v);
        }
        let p = live_conditional(self.spec, bayes_update(self.spec, &self.nodes[u], i, j, signal)?)?;
        let v = self.intern(p);
        self.next.insert((u, i, j, signal), v);
        Ok(v)
    }

    fn mixed(&mut self, who: usize, u: usize, state: usize) -> Vec<f64> {
        let n = if who == 0 { self.spec.n1() } else { self.spec.n2() };
        let rule = self.rules[who];
        if rule.depends_on_state() {
            return rule.mixed(self.spec, &self.nodes[u], state, n);
        }
        if let Some(v) = &self.decisions[who][u] {
            return v.clone();
        }
        let v = rule.mixed(self.spec, &self.nodes[u], state, n);
        self.decisions[who][u] = Some(v.clone());
        v
    }
}

// Actions are irrelevant once play is absorbed, so the tracker keeps the
// belief conditional on not yet being absorbed. Without this the absorbed
// mass drags ever-growing denominators through every later update.
fn live_conditional(spec: &GameSpec, p: Belief) -> Result<Belief> {
    let live = Rational::checked_sum(p.support().filter(|&(k, _)| !spec.absorbing[k]).map(|(_, w)| w))
        .ok_or(BeliefError::Overflow)?;
    if live.is_zero() || live == Rational::ONE {
        return Ok(p);
    }
    let w = p
        .weights()
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            if spec.absorbing[k] {
                Some(Rational::ZERO)
            } else {
                w.checked_div(live)
            }
        })
        .collect::<Option<Vec<_>>>()
        .ok_or(BeliefError::Overflow)?;
    Ok(Belief::new(w)?)
}

fn draw(rng: &mut ChaCha8Rng, weights: impl IntoIterator<Item = f64>) -> usize {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.into_iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = k;
        if x < acc {
            return k;
        }
    }
    last
}

struct Episode {
    payoff: f64,
    absorbed: Option<usize>,
}

fn play(tr: &mut Tracker, root: usize, lambda: f64, horizon: u64, rng: &mut ChaCha8Rng) -> Result<Episode> {
    let spec = tr.spec;
    let mut state = draw(rng, spec.initial.iter().map(|w| w.to_f64()));
    let mut u = root;
    let mut total = 0.0;
    // (1 - lambda)^{m-1} at stage m
    let mut disc = 1.0;
    let tail = (1.0 - lambda).powf(horizon as f64);
    for _ in 0..horizon {
        if spec.absorbing[state] {
            total += spec.g(state, 0, 0) * (disc - tail);
            return Ok(Episode {
                payoff: total,
                absorbed: Some(state),
            });
        }
        let x = tr.mixed(0, u, state);
        let y = tr.mixed(1, u, state);
        let i = draw(rng, x);
        let j = draw(rng, y);
        total += lambda * disc * spec.g(state, i, j);
        let out = spec.q(state, i, j);
        let o = &out[draw(rng, out.iter().map(|o| o.prob.to_f64()))];
        u = tr.update(u, i, j, o.signal)?;
        state = o.next;
        disc *= 1.0 - lambda;
    }
    Ok(Episode {
        payoff: total,
        absorbed: None,
    })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Plays `episodes` independent episodes of `spec` from its initial
/// distribution and averages the discounted payoff
/// `sum_{m <= horizon} lambda (1 - lambda)^{m-1} g_m`.
///
/// `horizon` defaults to [`default_horizon`]; a shorter one is rejected.
pub fn simulate(
    spec: &GameSpec,
    sigma: &StrategySpec,
    tau: &StrategySpec,
    lambda: f64,
    episodes: u64,
    horizon: Option<u64>,
    seed: u64,
) -> Result<SimResult> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(SimError::Parameter(format!("lambda {lambda} outside (0, 1)")));
    }
    if episodes == 0 {
        return Err(SimError::Parameter("episodes must be positive".into()));
    }
    let horizon = horizon.unwrap_or_else(|| default_horizon(lambda));
    let tail = (1.0 - lambda).powf(horizon as f64);
    if tail > 1e-9 {
        return Err(SimError::HorizonTooShort { horizon, tail });
    }
    let r1 = Rule::new(spec, sigma, Player::One, lambda)?;
    let r2 = Rule::new(spec, tau, Player::Two, lambda)?;
    let root = Belief::initial(spec)?;
    let runs: Vec<Episode> = (0..episodes)
        .into_par_iter()
        .map_init(
            || {
                let mut tr = Tracker::new(spec, [&r1, &r2]);
                let u = tr.intern(root.clone());
                (tr, u)
            },
            |(tr, u), e| play(tr, *u, lambda, horizon, &mut episode_rng(seed, e)),
        )
        .collect::<Result<_>>()?;
    let payoffs: Vec<f64> = runs.iter().map(|e| e.payoff).collect();
    let (mean, se) = mean_se(&payoffs);
    let mut absorbed = BTreeMap::new();
    let mut unabsorbed = 0;
    for e in &runs {
        match e.absorbed {
            Some(k) => *absorbed.entry(spec.states[k].clone()).or_insert(0) += 1,
            None => unabsorbed += 1,
        }
    }
    Ok(SimResult {
        mean,
        se,
        episodes,
        horizon,
        seed,
        absorbed,
        unabsorbed,
    })
}

fn stopping_time(n: u32, rng: &mut ChaCha8Rng) -> u64 {
    if n == 0 {
        return 0;
    }
    let (mut flips, mut run) = (0u64, 0u32);
    while run < n {
        flips += 1;
        if rng.gen::<bool>() {
            run += 1;
        } else {
            run = 0;
        }
    }
    flips
}

/// Fair coin flips until the first run of `n` heads (`0` for `n = 0`).
pub fn sample_stopping_time(n: u32, seed: u64) -> u64 {
    stopping_time(n, &mut episode_rng(seed, 0))
}

/// Sample mean and standard error of `(1 - lambda)^{T_n}` over `samples`
/// draws, sample `k` using stream `k` of `seed`.
pub fn stopping_time_transform(n: u32, lambda: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda < 1.0) || samples == 0 {
        return Err(SimError::Parameter("need lambda in (0, 1) and samples > 0".into()));
    }
    let xs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| (1.0 - lambda).powf(stopping_time(n, &mut episode_rng(seed, k)) as f64))
        .collect();
    Ok(mean_se(&xs))
}

/// The one-informed game from state 1 under the informed strategies.
pub fn informed_eval(lambda: f64, episodes: u64, seed: u64) -> Result<SimResult> {
    simulate(
        &one_informed(),
        &StrategySpec::InformedSigma,
        &StrategySpec::InformedTau,
        lambda,
        episodes,
        None,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{g_lambda, geometric_transform, threshold_value};
    use crate::catalog::{gamma, state_blind};

    #[test]
    fn parses_strategy_names() {
        assert_eq!("s:4".parse::<StrategySpec>().unwrap(), StrategySpec::ThresholdS(Some(4)));
        assert_eq!("t:never".parse::<StrategySpec>().unwrap(), StrategySpec::ThresholdT(None));
        assert_eq!("tau*".parse::<StrategySpec>().unwrap(), StrategySpec::StateBlindTau);
        assert!("s:x".parse::<StrategySpec>().is_err());
        assert!("q:1".parse::<StrategySpec>().is_err());
    }

    #[test]
    fn horizon_rules() {
        let h = default_horizon(0.01);
        assert!((0.99f64).powf(h as f64) <= 1e-9);
        assert!((0.99f64).powf((h - 1) as f64) > 1e-9);
        let g = gamma();
        let (s, t) = (StrategySpec::ThresholdS(Some(1)), StrategySpec::ThresholdT(Some(2)));
        assert!(matches!(
            simulate(&g, &s, &t, 0.01, 10, Some(100), 1),
            Err(SimError::HorizonTooShort { .. })
        ));
        assert!(simulate(&g, &t, &s, 0.01, 10, None, 1).is_err());
        assert!(simulate(&state_blind(), &s, &t, 0.01, 10, None, 1).is_err());
    }

    #[test]
    fn absorbing_start_pays_everything() {
        let mut g = gamma();
        let k = g.state_index("1*").unwrap();
        g.set_initial_state(k);
        let r = simulate(&g, &"s:1".parse().unwrap(), &"t:2".parse().unwrap(), 0.01, 50, None, 3).unwrap();
        let h = r.horizon as f64;
        assert!((r.mean - (1.0 - 0.99f64.powf(h))).abs() < 1e-12);
        assert!(r.se < 1e-12);
        assert_eq!(r.absorbed["1*"], 50);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let g = gamma();
        let (s, t) = ("s:3".parse().unwrap(), "t:4".parse().unwrap());
        let a = simulate(&g, &s, &t, 0.05, 2000, None, 42).unwrap();
        let b = simulate(&g, &s, &t, 0.05, 2000, None, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let c = simulate(&g, &s, &t, 0.05, 2000, None, 43).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn threshold_pair_matches_closed_form() {
        let g = gamma();
        for (a, b, lambda) in [(4, 4, 0.01), (2, 6, 0.05), (5, 2, 0.02)] {
            let r = simulate(&g, &StrategySpec::ThresholdS(Some(a)), &StrategySpec::ThresholdT(Some(b)), lambda, 40_000, None, 7)
                .unwrap();
            let exact = g_lambda(a, b, lambda).unwrap();
            assert!((r.mean - exact).abs() <= 3.0 * r.se + 1e-9, "({a},{b},{lambda}): {} vs {exact}", r.mean);
        }
    }

    #[test]
    fn player_two_quits_into_win_with_probability_two_to_minus_b() {
        // Player 1 never quits, so the first quit is Player 2's at 1_b
        let g = gamma();
        let b = 4;
        let r = simulate(&g, &StrategySpec::ThresholdS(None), &StrategySpec::ThresholdT(Some(b)), 0.01, 40_000, None, 11)
            .unwrap();
        let n = r.episodes as f64;
        let p = r.absorbed.get("1*").copied().unwrap_or(0) as f64 / n;
        let want = 0.5f64.powi(b as i32);
        let se = (want * (1.0 - want) / n).sqrt();
        assert!((p - want).abs() <= 3.0 * se, "{p} vs {want}");
    }

    #[test]
    fn stopping_times() {
        assert_eq!(sample_stopping_time(0, 5), 0);
        let xs: Vec<f64> = (0..100_000).map(|k| stopping_time(1, &mut episode_rng(9, k)) as f64).collect();
        let (m, se) = mean_se(&xs);
        assert!((m - 2.0).abs() <= 3.0 * se);
        let (m, se) = stopping_time_transform(4, 0.01, 100_000, 1).unwrap();
        assert!((m - geometric_transform(4, 0.01).unwrap()).abs() <= 3.0 * se);
        assert_eq!(stopping_time_transform(0, 0.3, 10, 1).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn state_blind_matches_gamma_value() {
        let lambda = 0.01;
        let r = simulate(&state_blind(), &StrategySpec::StateBlindSigma, &StrategySpec::StateBlindTau, lambda, 40_000, None, 5)
            .unwrap();
        let v = threshold_value(&ThresholdGame::new(lambda, 1, 2).unwrap(), DEFAULT_N_MAX).unwrap().value;
        assert!((r.mean - v).abs() <= 3.0 * r.se, "{} vs {v}", r.mean);
    }

    #[test]
    fn table_strategy_uses_point_beliefs() {
        // (C, C) forever from 1++ keeps the chain in block 1 with payoff 1
        let g = gamma();
        let t = StrategyTable {
            states: BTreeMap::new(),
            default: vec![1.0, 0.0],
        };
        let r = simulate(&g, &StrategySpec::Table(t.clone()), &StrategySpec::Table(t), 0.05, 200, None, 1).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-8);
        assert_eq!(r.unabsorbed, 200);
        let bad = StrategyTable {
            states: BTreeMap::from([("nowhere".to_string(), vec![1.0, 0.0])]),
            default: vec![1.0, 0.0],
        };
        assert!(simulate(&g, &StrategySpec::Table(bad), &"t:1".parse().unwrap(), 0.05, 10, None, 1).is_err());
    }

    // Exact discounted payoff of the informed profile from state 1. A visit
    // to the 0 block lasts until a* matched action pairs in a row (T_a stages,
    // payoff 0), then Player 1 quits: back to 1 w.p. 1 - 2^-a, else to 0*.
    fn informed_exact(lambda: f64) -> f64 {
        let s = lambda.sqrt();
        let a = optimal_thresholds(&ThresholdGame::new(lambda, 1, 2).unwrap(), DEFAULT_N_MAX)
            .unwrap()
            .a_star;
        let d = 1.0 - lambda;
        let back = geometric_transform(a, lambda).unwrap() * d * (1.0 - 0.5f64.powi(a as i32));
        let stay = (1.0 - s) * (1.0 - s) + 2.0 * s * (1.0 - s) * back;
        (lambda + d * s * s) / (1.0 - d * stay)
    }

    #[test]
    fn informed_profile_matches_exact_evaluation() {
        let lambda = 2f64.powi(-6);
        let r = informed_eval(lambda, 20_000, 3).unwrap();
        let exact = informed_exact(lambda);
        assert!((r.mean - exact).abs() <= 3.0 * r.se + 1e-9, "{} vs {exact}", r.mean);
    }

    #[test]
    fn informed_degenerate_loop_pays_one() {
        // with lambda tiny the (T, L) loop in state 1 pays about 1 over a short horizon
        let g = one_informed();
        let stay = StrategyTable {
            states: BTreeMap::from([("1".to_string(), vec![1.0, 0.0, 0.0])]),
            default: vec![0.5, 0.5, 0.0],
        };
        let stay2 = StrategyTable {
            states: BTreeMap::from([("1".to_string(), vec![1.0, 0.0])]),
            default: vec![0.5, 0.5],
        };
        let r = simulate(&g, &StrategySpec::Table(stay), &StrategySpec::Table(stay2), 0.1, 100, None, 1).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-8);
    }
}
