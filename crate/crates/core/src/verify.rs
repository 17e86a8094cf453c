//! The numerical acceptance checks A1 to A10.
//!
//! Each runner returns a [`CriterionResult`]; nothing here panics on a failed
//! check, so callers can report every criterion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytics::{
    compact_payoff, compact_value, compact_x_star, derivative_check, f_hat, lambda_m, mu_m, r_star, smallest_regime_m,
    threshold_value, ThresholdGame, DEFAULT_N_MAX,
};
use crate::belief::{reduce, split, state_marginal, Belief, BeliefChain};
use crate::catalog::{gamma, state_blind};
use crate::dp::{discounted_value, neyman_gap, shapley_operator, ViOptions};
use crate::matrix::{solve, MatrixGame};
use crate::rational::Rational;
use crate::simulator::{simulate, stopping_time_transform, StrategySpec};

pub const IDS: [&str; 10] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10"];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: &str, passed: bool, detail: String) -> Self {
        CriterionResult {
            id: id.to_string(),
            passed,
            detail,
        }
    }

    /// `A1 PASS: ...`
    pub fn line(&self) -> String {
        format!("{} {}: {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.detail)
    }
}

fn fail(id: &str, e: impl std::fmt::Display) -> CriterionResult {
    CriterionResult::new(id, false, format!("error: {e}"))
}

/// Runs one criterion by id (`"A1"` .. `"A10"`).
pub fn run(id: &str) -> Option<CriterionResult> {
    Some(match id {
        "A1" => a1(),
        "A2" => a2(),
        "A3" => a3(),
        "A4" => a4(),
        "A5" => a5(),
        "A6" => a6(),
        "A7" => a7(),
        "A8" => a8(),
        "A9" => a9(),
        "A10" => a10(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    IDS.iter().filter_map(|id| run(id)).collect()
}

fn gamma_chain(max_nodes: usize) -> Result<BeliefChain, String> {
    let g = gamma();
    let root = Belief::initial(&g).map_err(|e| e.to_string())?;
    reduce(&g, &root, max_nodes, 0.0).map_err(|e| e.to_string())
}

fn closed(lambda: f64, r: u32) -> Result<f64, String> {
    threshold_value(&ThresholdGame::for_r(lambda, r).map_err(|e| e.to_string())?, DEFAULT_N_MAX)
        .map(|v| v.value)
        .map_err(|e| e.to_string())
}

/// Value iteration on Γ agrees with the closed form.
pub fn a1() -> CriterionResult {
    let chain = match gamma_chain(4096) {
        Ok(c) => c,
        Err(e) => return fail("A1", e),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [5, 9, 13, 17] {
        let lambda = 2f64.powi(-k);
        let opts = ViOptions {
            tol: 1e-10,
            ..ViOptions::default()
        };
        let (s, c) = match (discounted_value(&chain, lambda, &opts), closed(lambda, 1)) {
            (Ok(s), Ok(c)) => (s, c),
            (Err(e), _) => return fail("A1", e),
            (_, Err(e)) => return fail("A1", e),
        };
        let d = (s.value.root() - c).abs();
        let pass = d <= 1e-6 + s.value.error_bound;
        ok &= pass;
        parts.push(format!("2^-{k}: |{:.9} - {c:.9}| = {d:.2e} (bound {:.2e})", s.value.root(), s.value.error_bound));
    }
    CriterionResult::new("A1", ok, parts.join("; "))
}

// Values along a sequence approach `limit` monotonically and end within `tol`.
fn approaches(values: &[f64], limit: f64, tol: f64) -> bool {
    let gaps: Vec<f64> = values.iter().map(|v| (v - limit).abs()).collect();
    gaps.windows(2).all(|w| w[1] <= w[0]) && gaps.last().map_or(false, |g| *g <= tol)
}

fn along(r: u32, ms: std::ops::RangeInclusive<u32>, seq: fn(u32, u32) -> f64) -> Result<Vec<f64>, String> {
    ms.map(|m| closed(seq(r, m), r)).collect()
}

/// Oscillation of the Γ value between 1/2 and 5/9.
pub fn a2() -> CriterionResult {
    let (lam, mu) = match (along(1, 3..=6, lambda_m), along(1, 3..=6, mu_m)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail("A2", e),
    };
    let ok = approaches(&lam, 0.5, 1e-3) && approaches(&mu, 5.0 / 9.0, 5e-3);
    CriterionResult::new("A2", ok, format!("lambda_m: {lam:.6?}; mu_m: {mu:.6?}"))
}

/// Γ(2) limits 1/2 and (2^2 + 2^-2) / (2^2 + 2^-2 + 2).
pub fn a3() -> CriterionResult {
    let (lam, mu) = match (along(2, 2..=4, lambda_m), along(2, 2..=4, mu_m)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail("A3", e),
    };
    let lim = 4.25 / 6.25;
    let ok = approaches(&lam, 0.5, 5e-3) && approaches(&mu, lim, 5e-3);
    CriterionResult::new("A3", ok, format!("lambda_m: {lam:.6?}; mu_m: {mu:.6?} (limit {lim})"))
}

/// Peak location of the continuous f and its unimodality.
pub fn a4() -> CriterionResult {
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [1e-5, 1e-6, 1e-7] {
        let r = match r_star(lambda) {
            Ok(r) => r,
            Err(e) => return fail("A4", e),
        };
        let ratio = r / (2.0 * lambda).sqrt();
        // 50 points on each side of the peak, strictly monotone toward it
        let left: Vec<f64> = (1..=50).map(|k| r * k as f64 / 50.0).collect();
        let right: Vec<f64> = (0..50).map(|k| r + (1.0 - r) * k as f64 / 49.0).collect();
        let f = |x: f64| f_hat(x, lambda).unwrap_or(f64::NAN);
        let unimodal = left.windows(2).all(|w| f(w[0]) < f(w[1])) && right.windows(2).all(|w| f(w[0]) > f(w[1]));
        ok &= (0.9..=1.1).contains(&ratio) && unimodal;
        parts.push(format!("{lambda:e}: r*/sqrt(2l) = {ratio:.4}, unimodal {unimodal}"));
    }
    CriterionResult::new("A4", ok, parts.join("; "))
}

/// Simulated transform of the run-of-heads stopping time.
pub fn a5() -> CriterionResult {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, lambda, seed) in [(4u32, 0.01, 2024u64), (8, 0.001, 2025)] {
        let (mean, se) = match stopping_time_transform(n, lambda, 100_000, seed) {
            Ok(v) => v,
            Err(e) => return fail("A5", e),
        };
        let exact = match crate::analytics::geometric_transform(n, lambda) {
            Ok(v) => v,
            Err(e) => return fail("A5", e),
        };
        let pass = (mean - exact).abs() <= 3.0 * se;
        ok &= pass;
        parts.push(format!("(n={n}, l={lambda}): {mean:.6} +- {se:.1e} vs {exact:.6}"));
    }
    CriterionResult::new("A5", ok, parts.join("; "))
}

/// The comparison bound between n-stage and discounted values.
pub fn a6() -> CriterionResult {
    let chain = match gamma_chain(4096) {
        Ok(c) => c,
        Err(e) => return fail("A6", e),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (n0, n) in [(8, 64), (16, 256)] {
        match neyman_gap(&chain, n0, n, &ViOptions::default()) {
            Ok((lhs, rhs)) => {
                ok &= lhs <= rhs + 1e-6;
                parts.push(format!("({n0},{n}): {lhs:.3e} <= {rhs:.3e}"));
            }
            Err(e) => return fail("A6", e),
        }
    }
    CriterionResult::new("A6", ok, parts.join("; "))
}

/// Compact-action game: limits along the two sequences and the saddle point.
pub fn a7() -> CriterionResult {
    let (even, odd) = match (compact_value(2f64.powi(-20)), compact_value(2f64.powi(-21))) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail("A7", e),
    };
    let even_ok = (even.value - 0.5).abs() <= 2e-3;
    let odd_ok = (odd.value - 5.0 / 9.0).abs() <= 5e-3;
    let lambda = 1.0 / 16.0;
    let saddle_ok = match compact_x_star(lambda) {
        Ok(xs) => {
            let g = |x: f64, y: f64| compact_payoff(x, y, lambda).unwrap_or(f64::NAN);
            let v = g(xs, xs);
            let grid: Vec<f64> = (0..50).map(|k| k as f64 / 49.0).collect();
            grid.iter()
                .all(|&x| grid.iter().all(|&y| g(x, xs) <= v + 1e-12 && v <= g(xs, y) + 1e-12))
        }
        Err(e) => return fail("A7", e),
    };
    CriterionResult::new(
        "A7",
        even_ok && odd_ok && saddle_ok,
        format!(
            "v(2^-20) = {:.6} (1/2 within 2e-3: {even_ok}); v(2^-21) = {:.6} (5/9 within 5e-3: {odd_ok}); saddle {saddle_ok}",
            even.value, odd.value
        ),
    )
}

/// The state-blind game has the same value as Γ.
pub fn a8() -> CriterionResult {
    let lambda = 2f64.powi(-9);
    let sim = simulate(
        &state_blind(),
        &StrategySpec::StateBlindSigma,
        &StrategySpec::StateBlindTau,
        lambda,
        100_000,
        None,
        909,
    );
    let (sim, v) = match (sim, closed(lambda, 1)) {
        (Ok(s), Ok(v)) => (s, v),
        (Err(e), _) => return fail("A8", e),
        (_, Err(e)) => return fail("A8", e),
    };
    let ok = (sim.mean - v).abs() <= 3.0 * sim.se;
    CriterionResult::new("A8", ok, format!("simulated {:.6} +- {:.1e} vs {v:.6}", sim.mean, sim.se))
}

/// Solver hygiene: LP against kernel enumeration, contraction, Bayes splitting.
pub fn a9() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for t in 0..1000 {
        let k = if t % 2 == 0 { 2 } else { 3 };
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..k).map(|_| rng.gen_range(-9i32..=9) as f64).collect())
            .collect();
        let game = MatrixGame::new(rows).expect("finite");
        let Some(v) = oracle::kernel_value(&game) else {
            return CriterionResult::new("A9", false, format!("kernel enumeration found no solution for {game:?}"));
        };
        worst = worst.max((solve(&game).value - v).abs());
    }
    let lp_ok = worst <= 1e-9;

    let chain = match gamma_chain(4096) {
        Ok(c) => c,
        Err(e) => return fail("A9", e),
    };
    let n = chain.len();
    let mut contraction_ok = true;
    for _ in 0..100 {
        let lambda = rng.gen_range(0.001..1.0);
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (tf, tg) = match (shapley_operator(&chain, lambda, &f), shapley_operator(&chain, lambda, &g)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return fail("A9", e),
        };
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        contraction_ok &= d(&tf, &tg) <= (1.0 - lambda) * d(&f, &g) + 1e-12;
    }

    let g = gamma();
    let mut bayes_ok = true;
    let mut checked = 0;
    for (u, p) in chain.nodes.iter().enumerate() {
        if chain.boundary[u] {
            continue;
        }
        for i in 0..g.n1() {
            for j in 0..g.n2() {
                bayes_ok &= oracle::splitting_identity(&g, p, i, j).unwrap_or(false);
                checked += 1;
            }
        }
    }
    CriterionResult::new(
        "A9",
        lp_ok && contraction_ok && bayes_ok,
        format!(
            "matrix games max error {worst:.1e}; contraction {contraction_ok}; Bayes splitting exact on {checked} (node, action) pairs: {bayes_ok}"
        ),
    )
}

/// Slope bounds of the Γ(4) value near the discount sequences.
pub fn a10() -> CriterionResult {
    let m = match smallest_regime_m(4, 6) {
        Ok(Some(m)) => m,
        Ok(None) => return CriterionResult::new("A10", false, "threshold pattern not reached for m <= 6".into()),
        Err(e) => return fail("A10", e),
    };
    match derivative_check(4, m, 41) {
        Ok(rep) => {
            let failures: Vec<String> = rep
                .failures()
                .map(|s| format!("l = {:e}: {:.3} > 1.1 * {:.3}", s.lambda, s.scaled, s.bound))
                .collect();
            CriterionResult::new(
                "A10",
                rep.passed,
                format!(
                    "m = {m}, in regime {}, {} threshold switch(es) on the mu interval, compliance {:.3}{}",
                    rep.in_regime,
                    rep.mu_switches,
                    rep.compliance,
                    if failures.is_empty() { String::new() } else { format!("; outside: {}", failures.join(", ")) }
                ),
            )
        }
        Err(e) => fail("A10", e),
    }
}

/// Independent reference computations.
pub mod oracle {
    use super::*;
    use crate::model::GameSpec;

    // Solves a square system by Gaussian elimination with partial pivoting.
    fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
            if a[p][c].abs() < 1e-12 {
                return None;
            }
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        Some(x)
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = subsets(n - 1, k);
        for mut s in subsets(n - 1, k - 1) {
            s.push(n - 1);
            out.push(s);
        }
        out
    }

    /// Value of a small matrix game by enumerating square kernels: for each
    /// `k x k` submatrix, solve the equalising systems for both players and
    /// accept the first pair of nonnegative strategies that guarantee the
    /// common value against every pure reply.
    pub fn kernel_value(game: &MatrixGame) -> Option<f64> {
        let (m, n) = (game.rows(), game.cols());
        for k in 1..=m.min(n) {
            for rows in subsets(m, k) {
                for cols in subsets(n, k) {
                    // unknowns (x_1..x_k, v): sum_i x_i a_ij - v = 0 for j in cols, sum x = 1
                    let mut ax = vec![vec![0.0; k + 1]; k + 1];
                    let mut ay = vec![vec![0.0; k + 1]; k + 1];
                    for (c, &j) in cols.iter().enumerate() {
                        for (r, &i) in rows.iter().enumerate() {
                            ax[c][r] = game.at(i, j);
                            ay[r][c] = game.at(i, j);
                        }
                        ax[c][k] = -1.0;
                    }
                    for r in 0..k {
                        ay[r][k] = -1.0;
                    }
                    for t in 0..k {
                        ax[k][t] = 1.0;
                        ay[k][t] = 1.0;
                    }
                    let mut rhs = vec![0.0; k + 1];
                    rhs[k] = 1.0;
                    let (Some(xs), Some(ys)) = (solve_linear(ax, rhs.clone()), solve_linear(ay, rhs)) else {
                        continue;
                    };
                    let (v, w) = (xs[k], ys[k]);
                    if (v - w).abs() > 1e-9 || xs[..k].iter().chain(&ys[..k]).any(|&p| p < -1e-12) {
                        continue;
                    }
                    let mut x = vec![0.0; m];
                    let mut y = vec![0.0; n];
                    for (r, &i) in rows.iter().enumerate() {
                        x[i] = xs[r];
                    }
                    for (c, &j) in cols.iter().enumerate() {
                        y[j] = ys[c];
                    }
                    let row_ok = (0..n).all(|j| (0..m).map(|i| x[i] * game.at(i, j)).sum::<f64>() >= v - 1e-9);
                    let col_ok = (0..m).all(|i| (0..n).map(|j| y[j] * game.at(i, j)).sum::<f64>() <= v + 1e-9);
                    if row_ok && col_ok {
                        return Some(v);
                    }
                }
            }
        }
        None
    }

    /// `sum_a P(a) posterior_a = law of the next state`, in exact arithmetic,
    /// and the signal probabilities sum to one.
    pub fn splitting_identity(spec: &GameSpec, p: &Belief, i: usize, j: usize) -> Option<bool> {
        let parts = split(spec, p, i, j).ok()?;
        let marginal = state_marginal(spec, p, i, j).ok()?;
        let total = Rational::checked_sum(parts.iter().map(|(w, _, _)| *w))?;
        let mut mix = vec![Rational::ZERO; spec.n_states()];
        for (w, _, post) in &parts {
            for (k, &q) in post.weights().iter().enumerate() {
                mix[k] = mix[k].checked_add(w.checked_mul(q)?)?;
            }
        }
        Some(total == Rational::ONE && mix == marginal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_oracle_examples() {
        let mp = MatrixGame::new(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(oracle::kernel_value(&mp), Some(0.0));
        let saddle = MatrixGame::new(vec![vec![3.0, 1.0], vec![4.0, 2.0]]).unwrap();
        assert_eq!(oracle::kernel_value(&saddle), Some(2.0));
        let rps = MatrixGame::new(vec![vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]]).unwrap();
        assert!(oracle::kernel_value(&rps).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fast_criteria_pass() {
        for r in [a2(), a3(), a4()] {
            assert!(r.passed, "{}", r.line());
        }
    }

    #[test]
    fn line_format() {
        let r = CriterionResult::new("A0", true, "ok".into());
        assert_eq!(r.line(), "A0 PASS: ok");
        assert!(run("A11").is_none());
    }
}
