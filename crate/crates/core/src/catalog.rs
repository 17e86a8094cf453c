//! Built-in games.
//!
//! State names follow one convention across the family: a leading `0` or
//! `1` says which block the state belongs to (and so its payoff), `++` is the
//! entry state of a block, `T`/`Tl` are the intermediate states, `+` is the
//! state a player wants to reach before quitting, and `*` marks absorption.
//! Player 1 controls the `0` block and Player 2 the `1` block.

use thiserror::Error;

use crate::model::{GameSpec, ModelError, Player};
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry {0:?}")]
    Unknown(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A named, possibly parameterised, catalog game.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub parameters: Vec<(&'static str, String)>,
    pub spec: GameSpec,
    pub notes: &'static str,
}

pub const NAMES: [&str; 4] = ["gamma", "gamma_r", "state_blind", "one_informed"];

/// Looks up a catalog game. Only `gamma_r` takes a parameter.
pub fn entry(name: &str, r: Option<u32>) -> Result<CatalogEntry, CatalogError> {
    let (name, parameters, spec, notes) = match name {
        "gamma" => ("gamma", vec![], gamma(), "seven-state game with signals D, D'"),
        "gamma_r" => {
            let r = r.ok_or_else(|| CatalogError::Parameter("gamma_r needs r".into()))?;
            (
                "gamma_r",
                vec![("r", r.to_string())],
                gamma_r(r)?,
                "risk-grid variant with chains of length r and 2r",
            )
        }
        "state_blind" => (
            "state_blind",
            vec![],
            state_blind(),
            "signal-free variant driven by matched and mismatched actions",
        ),
        "one_informed" => (
            "one_informed",
            vec![],
            one_informed(),
            "Player 2 observes the state; for simulation only",
        ),
        other => return Err(CatalogError::Unknown(other.to_string())),
    };
    Ok(CatalogEntry {
        name,
        parameters,
        spec,
        notes,
    })
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d).expect("catalog constants are well formed")
}

fn pow2(k: u32) -> Rational {
    Rational::dyadic(k).expect("catalog exponent fits")
}

// Fills the kernel row for every action of the player who does not control `k`.
fn controlled(spec: &mut GameSpec, k: &str, by: Player, action: &str, outcomes: &[(Rational, &str, &str)]) {
    let k = spec.state_index(k).expect("declared state");
    match by {
        Player::One => {
            let i = spec.action1_index(action).expect("declared action");
            for j in 0..spec.n2() {
                spec.set_row(k, i, j, outcomes).expect("declared names");
            }
        }
        Player::Two => {
            let j = spec.action2_index(action).expect("declared action");
            for i in 0..spec.n1() {
                spec.set_row(k, i, j, outcomes).expect("declared names");
            }
        }
    }
}

fn finish(spec: &mut GameSpec, initial: &str, absorbing: &[(&str, f64)], signal: &str) {
    let a0 = spec.signal_index(signal).expect("declared signal");
    for &(name, payoff) in absorbing {
        let k = spec.state_index(name).expect("declared state");
        spec.make_absorbing(k, payoff, a0);
    }
    for k in 0..spec.n_states() {
        if !spec.absorbing[k] && spec.states[k].starts_with('1') {
            spec.set_state_payoff(k, 1.0);
        }
    }
    let k0 = spec.state_index(initial).expect("declared state");
    spec.set_initial_state(k0);
    debug_assert!(spec.validate().is_empty(), "{:?}", spec.validate());
}

/// The seven-state game with signals `D`, `D'`.
pub fn gamma() -> GameSpec {
    let mut g = GameSpec::new(
        "gamma",
        &["1*", "1++", "1T", "1+", "0*", "0++", "0+"],
        &["C", "Q"],
        &["C", "Q"],
        &["D", "D'"],
    );
    use Player::{One, Two};
    controlled(&mut g, "1++", Two, "C", &[(q(1, 2), "1T", "D"), (q(1, 2), "1++", "D'")]);
    controlled(&mut g, "1++", Two, "Q", &[(Rational::ONE, "1*", "D'")]);
    controlled(
        &mut g,
        "1T",
        Two,
        "C",
        &[(q(1, 8), "1++", "D"), (q(3, 8), "1+", "D"), (q(1, 2), "1++", "D'")],
    );
    controlled(&mut g, "1T", Two, "Q", &[(Rational::ONE, "1*", "D'")]);
    controlled(&mut g, "1+", Two, "C", &[(q(1, 2), "1+", "D"), (q(1, 2), "1++", "D'")]);
    controlled(&mut g, "1+", Two, "Q", &[(Rational::ONE, "0++", "D")]);
    controlled(
        &mut g,
        "0++",
        One,
        "C",
        &[(q(1, 4), "0++", "D"), (q(1, 4), "0+", "D"), (q(1, 2), "0++", "D'")],
    );
    controlled(&mut g, "0++", One, "Q", &[(Rational::ONE, "0*", "D'")]);
    controlled(&mut g, "0+", One, "C", &[(q(1, 2), "0+", "D"), (q(1, 2), "0++", "D'")]);
    controlled(&mut g, "0+", One, "Q", &[(Rational::ONE, "1++", "D")]);
    finish(&mut g, "1++", &[("1*", 1.0), ("0*", 0.0)], "D");
    g.metadata.insert("family".into(), "gamma_r".into());
    g.metadata.insert("r".into(), "1".into());
    g
}

// Chain name for position `l` of a block (`l = 0` is the entry state). With
// `r = 1` the single intermediate state is plain `1T`.
fn chain_state(block: char, l: u32, r: u32) -> String {
    match l {
        0 => format!("{block}++"),
        _ if r == 1 => format!("{block}T"),
        _ => format!("{block}T{l}"),
    }
}

// One block of the risk-grid game: entry state, `len - 1` intermediate
// states, the plus state, and the exits used by Q.
fn fill_block(g: &mut GameSpec, block: char, len: u32, r: u32, by: Player, quit_chain: &str) {
    let plus = format!("{block}+");
    let entry = chain_state(block, 0, r);
    for l in 0..len {
        let here = chain_state(block, l, r);
        if l + 1 < len {
            let next = chain_state(block, l + 1, r);
            controlled(g, &here, by, "C", &[(q(1, 2), &next, "D"), (q(1, 2), &entry, "D'")]);
        } else {
            // last intermediate state: back to the entry or on to the plus state
            let back = pow2(len + 1);
            let on = q(1, 2) * (Rational::ONE - pow2(len));
            controlled(g, &here, by, "C", &[(back, &entry, "D"), (q(1, 2), &entry, "D'"), (on, &plus, "D")]);
        }
        controlled(g, &here, by, "Q", &[(Rational::ONE, quit_chain, "D'")]);
    }
    controlled(g, &plus, by, "C", &[(q(1, 2), &plus, "D"), (q(1, 2), &entry, "D'")]);
    let other = if block == '0' { "1++" } else { "0++" };
    controlled(g, &plus, by, "Q", &[(Rational::ONE, other, "D")]);
}

/// The risk-grid variant: Player 1 can only take absorbing risks `2^{-mr}`,
/// Player 2 only `2^{-2mr}`. `gamma_r(1)` is [`gamma`] up to state order.
pub fn gamma_r(r: u32) -> Result<GameSpec, CatalogError> {
    if r == 0 {
        return Err(CatalogError::Parameter("r must be at least 1".into()));
    }
    // 2^{-2r-1} must be representable
    if 2 * r + 1 > 62 {
        return Err(CatalogError::Parameter(format!("r = {r} is too large")));
    }
    let mut names = Vec::new();
    for l in 0..2 * r {
        names.push(chain_state('1', l, r));
    }
    names.extend(["1+".to_string(), "1*".to_string()]);
    for l in 0..r {
        names.push(chain_state('0', l, r));
    }
    names.extend(["0+".to_string(), "0*".to_string()]);
    let refs = names.iter().map(String::as_str).collect::<Vec<_>>();

    let mut g = GameSpec::new(&format!("gamma_r({r})"), &refs, &["C", "Q"], &["C", "Q"], &["D", "D'"]);
    fill_block(&mut g, '1', 2 * r, r, Player::Two, "1*");
    fill_block(&mut g, '0', r, r, Player::One, "0*");
    finish(&mut g, "1++", &[("1*", 1.0), ("0*", 0.0)], "D");
    g.metadata.insert("family".into(), "gamma_r".into());
    g.metadata.insert("r".into(), r.to_string());
    Ok(g)
}

/// The state-blind game: no signal at all, transitions driven by whether the
/// players' actions match.
pub fn state_blind() -> GameSpec {
    let mut g = GameSpec::new(
        "state_blind",
        &["1*", "1++", "1T", "1+", "0*", "0++", "0+"],
        &["T", "B", "Q"],
        &["L", "R", "Q"],
        &["nil"],
    );
    let split_1 = [(q(3, 4), "1+"), (q(1, 4), "1++")];
    let split_0 = [(q(1, 2), "0++"), (q(1, 2), "0+")];
    let det = |next: &'static str| vec![(Rational::ONE, next)];
    #[rustfmt::skip]
    let table: Vec<(&str, [[Vec<(Rational, &str)>; 3]; 3])> = vec![
        ("1++", [[det("1++"), det("1T"), det("1*")],
                 [det("1T"), det("1++"), det("1*")],
                 [det("0*"), det("0*"), det("0*")]]),
        ("1T",  [[det("1++"), split_1.to_vec(), det("1*")],
                 [split_1.to_vec(), det("1++"), det("1*")],
                 [det("0*"), det("0*"), det("0*")]]),
        ("1+",  [[det("1++"), det("1+"), det("0++")],
                 [det("1+"), det("1++"), det("0++")],
                 [det("0*"), det("0*"), det("0*")]]),
        ("0++", [[split_0.to_vec(), det("0++"), det("1*")],
                 [det("0++"), split_0.to_vec(), det("1*")],
                 [det("0*"), det("0*"), det("1*")]]),
        ("0+",  [[det("0+"), det("0++"), det("1*")],
                 [det("0++"), det("0+"), det("1*")],
                 [det("1++"), det("1++"), det("1*")]]),
    ];
    for (state, rows) in table {
        let k = g.state_index(state).unwrap();
        for (i, row) in rows.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let outcomes = cell.iter().map(|&(p, s)| (p, s, "nil")).collect::<Vec<_>>();
                g.set_row(k, i, j, &outcomes).unwrap();
            }
        }
    }
    finish(&mut g, "1++", &[("1*", 1.0), ("0*", 0.0)], "nil");
    g.metadata.insert("family".into(), "state_blind".into());
    g
}

/// The game where Player 2 is informed of the state. The information
/// asymmetry is recorded in `metadata["informed"] = "2"`; the belief solvers
/// do not model it.
pub fn one_informed() -> GameSpec {
    let mut g = GameSpec::new(
        "one_informed",
        &["1*", "1", "0*", "0++", "0+"],
        &["T", "B", "Q"],
        &["L", "R"],
        &["nil"],
    );
    let split_0 = [(q(1, 2), "0++"), (q(1, 2), "0+")];
    let det = |next: &'static str| vec![(Rational::ONE, next)];
    #[rustfmt::skip]
    let table: Vec<(&str, [[Vec<(Rational, &str)>; 2]; 3])> = vec![
        ("1",   [[det("1"), det("0++")],
                 [det("0++"), det("1*")],
                 [det("0*"), det("0*")]]),
        ("0++", [[split_0.to_vec(), det("0++")],
                 [det("0++"), split_0.to_vec()],
                 [det("0*"), det("0*")]]),
        ("0+",  [[det("0+"), det("0++")],
                 [det("0++"), det("0+")],
                 [det("1"), det("1")]]),
    ];
    for (state, rows) in table {
        let k = g.state_index(state).unwrap();
        for (i, row) in rows.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let outcomes = cell.iter().map(|&(p, s)| (p, s, "nil")).collect::<Vec<_>>();
                g.set_row(k, i, j, &outcomes).unwrap();
            }
        }
    }
    finish(&mut g, "1", &[("1*", 1.0), ("0*", 0.0)], "nil");
    g.metadata.insert("family".into(), "one_informed".into());
    g.metadata.insert("informed".into(), "2".into());
    g
}

/// Block character (`'0'` or `'1'`) of a non-absorbing state, if the name
/// follows the catalog convention.
pub fn block_of(spec: &GameSpec, k: usize) -> Option<char> {
    if spec.absorbing[k] {
        return None;
    }
    spec.states[k].chars().next().filter(|c| *c == '0' || *c == '1')
}

fn own_block(player: Player) -> char {
    match player {
        Player::One => '0',
        Player::Two => '1',
    }
}

/// The threshold quitting rule shared by the solvers and the simulator.
///
/// With public belief `p`, `player` quits iff all non-absorbed mass lies in
/// the block the player controls and
/// `P(plus state | not absorbed) >= 1 - 2^{-threshold}`. On the belief
/// `2^{-n} entry + (1 - 2^{-n}) plus` this quits exactly when `n >= threshold`.
/// `None` never quits.
pub fn threshold_quits(spec: &GameSpec, p: &[Rational], player: Player, threshold: Option<u32>) -> bool {
    let Some(a) = threshold else {
        return false;
    };
    let block = own_block(player);
    let plus = format!("{block}+");
    let mut live = Rational::ZERO;
    let mut other = Rational::ZERO;
    for (k, &w) in p.iter().enumerate() {
        if w.is_zero() || spec.absorbing[k] {
            continue;
        }
        if block_of(spec, k) != Some(block) {
            return false;
        }
        live = match live.checked_add(w) {
            Some(v) => v,
            None => return false,
        };
        if spec.states[k] != plus {
            other = match other.checked_add(w) {
                Some(v) => v,
                None => return false,
            };
        }
    }
    if live.is_zero() {
        return false;
    }
    if other.is_zero() {
        return true;
    }
    if a > 62 {
        return false;
    }
    // other / live <= 2^{-a}
    match other.checked_mul(Rational::integer(1i64 << a)) {
        Some(scaled) => scaled <= live,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Outcome;
    use std::collections::BTreeSet;

    fn row(g: &GameSpec, k: &str, i: &str, j: &str) -> BTreeSet<(String, String, String)> {
        let k = g.state_index(k).unwrap();
        let i = g.action1_index(i).unwrap();
        let j = g.action2_index(j).unwrap();
        g.q(k, i, j)
            .iter()
            .map(|o| (o.prob.to_string(), g.states[o.next].clone(), g.signals[o.signal].clone()))
            .collect()
    }

    fn set(items: &[(&str, &str, &str)]) -> BTreeSet<(String, String, String)> {
        items
            .iter()
            .map(|(p, s, a)| (p.to_string(), s.to_string(), a.to_string()))
            .collect()
    }

    #[test]
    fn every_entry_validates() {
        for name in NAMES {
            let e = entry(name, Some(3)).unwrap();
            assert!(e.spec.validate().is_empty(), "{name}: {:?}", e.spec.validate());
        }
        for r in 1..=6 {
            assert!(gamma_r(r).unwrap().validate().is_empty());
        }
        assert!(matches!(entry("nope", None), Err(CatalogError::Unknown(_))));
        assert!(matches!(gamma_r(0), Err(CatalogError::Parameter(_))));
        assert!(matches!(entry("gamma_r", None), Err(CatalogError::Parameter(_))));
    }

    #[test]
    fn gamma_edges() {
        let g = gamma();
        assert_eq!(row(&g, "1++", "Q", "C"), set(&[("1/2", "1T", "D"), ("1/2", "1++", "D'")]));
        assert_eq!(
            row(&g, "1T", "C", "C"),
            set(&[("1/8", "1++", "D"), ("3/8", "1+", "D"), ("1/2", "1++", "D'")])
        );
        assert_eq!(row(&g, "0+", "Q", "C"), set(&[("1", "1++", "D")]));
        assert_eq!(row(&g, "0+", "Q", "Q"), set(&[("1", "1++", "D")]));
        for i in ["C", "Q"] {
            for j in ["C", "Q"] {
                assert_eq!(row(&g, "0*", i, j), set(&[("1", "0*", "D")]));
            }
        }
        let k = g.state_index("1T").unwrap();
        assert_eq!(g.g(k, 0, 1), 1.0);
        assert_eq!(g.g(g.state_index("0+").unwrap(), 1, 0), 0.0);
    }

    #[test]
    fn gamma_states_controlled_by_one_player() {
        let g = gamma();
        for k in 0..g.n_states() {
            if g.absorbing[k] {
                continue;
            }
            let p1_controls = g.states[k].starts_with('0');
            for a in 0..2 {
                for b in 0..2 {
                    let (i1, j1, i2, j2) = if p1_controls { (a, b, a, 1 - b) } else { (b, a, 1 - b, a) };
                    assert_eq!(g.q(k, i1, j1), g.q(k, i2, j2), "state {}", g.states[k]);
                    assert_eq!(g.g(k, i1, j1), g.g(k, i2, j2));
                }
            }
        }
    }

    #[test]
    fn gamma_r_one_is_gamma_after_renaming() {
        let a = gamma();
        let b = gamma_r(1).unwrap();
        assert_eq!(b.n_states(), 7);
        let map = |name: &str| b.state_index(name).unwrap();
        for k in 0..a.n_states() {
            let kb = map(&a.states[k]);
            assert_eq!(a.absorbing[k], b.absorbing[kb]);
            assert_eq!(a.initial[k], b.initial[kb]);
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(a.g(k, i, j), b.g(kb, i, j));
                    let ra: BTreeSet<(Rational, usize, usize)> =
                        a.q(k, i, j).iter().map(|o| (o.prob, map(&a.states[o.next]), o.signal)).collect();
                    let rb: BTreeSet<(Rational, usize, usize)> =
                        b.q(kb, i, j).iter().map(|o: &Outcome| (o.prob, o.next, o.signal)).collect();
                    assert_eq!(ra, rb, "state {}", a.states[k]);
                }
            }
        }
    }

    #[test]
    fn gamma_r_boundary_and_middle_rows() {
        let g = gamma_r(2).unwrap();
        assert_eq!(g.n_states(), 4 + 2 + 2 + 2);
        // last 0-chain state for r = 2 is 0T1
        assert_eq!(
            row(&g, "0T1", "C", "Q"),
            set(&[("1/8", "0++", "D"), ("1/2", "0++", "D'"), ("3/8", "0+", "D")])
        );
        let sum: Rational = g
            .q(g.state_index("0T1").unwrap(), 0, 0)
            .iter()
            .fold(Rational::ZERO, |s, o| s + o.prob);
        assert_eq!(sum, Rational::ONE);
        // middle of the Player 2 chain
        assert_eq!(row(&g, "1T1", "Q", "C"), set(&[("1/2", "1T2", "D"), ("1/2", "1++", "D'")]));
        assert_eq!(
            row(&g, "1T3", "C", "C"),
            set(&[("1/32", "1++", "D"), ("1/2", "1++", "D'"), ("15/32", "1+", "D")])
        );
        assert_eq!(row(&g, "1T2", "C", "Q"), set(&[("1", "1*", "D'")]));
        assert_eq!(row(&g, "0+", "Q", "C"), set(&[("1", "1++", "D")]));
        assert_eq!(row(&g, "1+", "C", "Q"), set(&[("1", "0++", "D")]));
    }

    #[test]
    fn state_blind_tables() {
        let g = state_blind();
        assert_eq!(row(&g, "1++", "Q", "L"), set(&[("1", "0*", "nil")]));
        assert_eq!(row(&g, "0+", "Q", "R"), set(&[("1", "1++", "nil")]));
        assert_eq!(row(&g, "1T", "T", "R"), set(&[("3/4", "1+", "nil"), ("1/4", "1++", "nil")]));
        assert_eq!(row(&g, "0++", "T", "L"), set(&[("1/2", "0++", "nil"), ("1/2", "0+", "nil")]));
        assert_eq!(row(&g, "0++", "Q", "Q"), set(&[("1", "1*", "nil")]));
    }

    #[test]
    fn one_informed_tables() {
        let g = one_informed();
        assert_eq!(row(&g, "1", "B", "R"), set(&[("1", "1*", "nil")]));
        assert_eq!(row(&g, "1", "T", "L"), set(&[("1", "1", "nil")]));
        assert_eq!(row(&g, "0+", "Q", "L"), set(&[("1", "1", "nil")]));
        assert_eq!(g.metadata["informed"], "2");
    }

    #[test]
    fn quit_rule_matches_belief_index() {
        let g = gamma();
        let idx = |s: &str| g.state_index(s).unwrap();
        // 0_n = 2^{-n} 0++ + (1 - 2^{-n}) 0+
        let zero_n = |n: u32| {
            let mut p = vec![Rational::ZERO; g.n_states()];
            let w = Rational::dyadic(n).unwrap();
            p[idx("0++")] = w;
            p[idx("0+")] = Rational::ONE - w;
            p
        };
        for a in 0..8 {
            for n in 0..10 {
                assert_eq!(threshold_quits(&g, &zero_n(n), Player::One, Some(a)), n >= a, "a={a} n={n}");
                assert!(!threshold_quits(&g, &zero_n(n), Player::Two, Some(a)));
            }
        }
        assert!(!threshold_quits(&g, &zero_n(3), Player::One, None));
        let mut star = vec![Rational::ZERO; g.n_states()];
        star[idx("0*")] = Rational::ONE;
        assert!(!threshold_quits(&g, &star, Player::One, Some(0)));
    }
}
