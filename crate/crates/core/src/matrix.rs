//! Finite two-player zero-sum matrix games. The row player maximises.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("matrix has non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("matrix must have at least one row and one column, and equal-length rows")]
    Shape,
    #[error("strategy has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    /// `max_i (My)_i - min_j (x^T M)_j`, nonnegative up to rounding.
    pub duality_gap: f64,
}

impl MatrixGame {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(MatrixError::Shape);
        }
        Self::from_flat(m, n, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(MatrixError::Shape);
        }
        if let Some(p) = data.iter().position(|x| !x.is_finite()) {
            return Err(MatrixError::NonFinite(p / cols, p % cols));
        }
        Ok(MatrixGame { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `-M^T`: the same game with the roles swapped.
    pub fn negated_transpose(&self) -> MatrixGame {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(-self.at(i, j));
            }
        }
        MatrixGame {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `min_j (x^T M)_j`: what the row strategy `x` guarantees.
    pub fn row_guarantee(&self, x: &[f64]) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| x[i] * self.at(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i (M y)_i`: what the column strategy `y` concedes at most.
    pub fn col_guarantee(&self, y: &[f64]) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * y[j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

// Lowest-index (row-major) pure saddle point, if any.
fn pure_saddle(m: usize, n: usize, a: &[f64]) -> Option<(usize, usize)> {
    for i in 0..m {
        let row = &a[i * n..(i + 1) * n];
        let row_min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        for (j, &v) in row.iter().enumerate() {
            if v == row_min && (0..m).all(|k| a[k * n + j] <= v) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Value of the game without building strategies; the hot path of value iteration.
pub fn game_value(m: usize, n: usize, a: &[f64]) -> f64 {
    if let Some((i, j)) = pure_saddle(m, n, a) {
        return a[i * n + j];
    }
    if m == 2 && n == 2 {
        // no saddle, so the equalizing mixture is interior
        let (p, q, r, s) = (a[0], a[1], a[2], a[3]);
        return (p * s - q * r) / (p + s - q - r);
    }
    simplex(m, n, a).0
}

/// Solves the game exactly up to floating point.
///
/// Order of attempts: constant matrix (uniform strategies), lowest-index pure
/// saddle point, then the simplex method with Bland's rule on the shifted
/// program `max sum w, A w <= 1, w >= 0`. The row strategy is read off the
/// dual prices of the slack columns.
pub fn solve(game: &MatrixGame) -> MatrixSolution {
    let (m, n, a) = (game.rows, game.cols, &game.data[..]);
    let first = a[0];
    let (value, x, y) = if a.iter().all(|&v| v == first) {
        (first, vec![1.0 / m as f64; m], vec![1.0 / n as f64; n])
    } else if let Some((i, j)) = pure_saddle(m, n, a) {
        (a[i * n + j], unit(m, i), unit(n, j))
    } else {
        simplex(m, n, a)
    };
    let duality_gap = game.col_guarantee(&y) - game.row_guarantee(&x);
    MatrixSolution {
        value,
        row_strategy: x,
        col_strategy: y,
        duality_gap,
    }
}

fn clean(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
}

fn simplex(m: usize, n: usize, a: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    const EPS: f64 = 1e-12;
    let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - lo;
    let width = n + m + 1;
    let rhs = n + m;
    // rows 0..m are constraints, row m is the objective
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = a[i * n + j] + shift;
        }
        t[i * width + n + i] = 1.0;
        t[i * width + rhs] = 1.0;
    }
    for j in 0..n {
        t[m * width + j] = -1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        let Some(enter) = (0..n + m).find(|&j| t[m * width + j] < -EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let piv = t[i * width + enter];
            if piv > EPS {
                let ratio = t[i * width + rhs] / piv;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, best)) => {
                        if ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[l]) {
                            Some((i, ratio))
                        } else {
                            Some((l, best))
                        }
                    }
                };
            }
        }
        // the feasible region is bounded because every entry of A is >= 1
        let (l, _) = leave.expect("bounded program");
        let piv = t[l * width + enter];
        for c in 0..width {
            t[l * width + c] /= piv;
        }
        for r in 0..=m {
            if r != l {
                let f = t[r * width + enter];
                if f != 0.0 {
                    for c in 0..width {
                        t[r * width + c] -= f * t[l * width + c];
                    }
                }
            }
        }
        basis[l] = enter;
    }

    let total = t[m * width + rhs];
    let mut y = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            y[b] = t[i * width + rhs];
        }
    }
    let mut x: Vec<f64> = (0..m).map(|i| t[m * width + n + i]).collect();
    clean(&mut x);
    clean(&mut y);
    (1.0 / total - shift, x, y)
}

/// Column minimising `x^T M`, lowest index on ties, with that payoff.
pub fn best_pure_response(game: &MatrixGame, x: &[f64]) -> Result<(usize, f64), MatrixError> {
    if x.len() != game.rows {
        return Err(MatrixError::Dimension {
            got: x.len(),
            expected: game.rows,
        });
    }
    let mut best = (0, f64::INFINITY);
    for j in 0..game.cols {
        let v: f64 = (0..game.rows).map(|i| x[i] * game.at(i, j)).sum();
        if v < best.1 {
            best = (j, v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(rows: &[&[f64]]) -> MatrixGame {
        MatrixGame::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn matching_pennies_style() {
        let s = solve(&g(&[&[1.0, 0.0], &[0.0, 1.0]]));
        assert!(close(s.value, 0.5));
        assert!(close(s.row_strategy[0], 0.5) && close(s.col_strategy[1], 0.5));
    }

    #[test]
    fn one_by_one_and_saddle() {
        let s = solve(&g(&[&[0.3]]));
        assert_eq!((s.value, s.row_strategy.clone(), s.col_strategy.clone()), (0.3, vec![1.0], vec![1.0]));
        let s = solve(&g(&[&[2.0, 3.0], &[0.0, 1.0]]));
        assert_eq!(s.value, 2.0);
        assert_eq!(s.row_strategy, vec![1.0, 0.0]);
        assert_eq!(s.col_strategy, vec![1.0, 0.0]);
    }

    #[test]
    fn constant_matrix_is_uniform() {
        let s = solve(&g(&[&[0.5, 0.5, 0.5], &[0.5, 0.5, 0.5]]));
        assert_eq!(s.value, 0.5);
        assert_eq!(s.row_strategy, vec![0.5, 0.5]);
        assert!(s.col_strategy.iter().all(|&p| close(p, 1.0 / 3.0)));
    }

    #[test]
    fn rock_paper_scissors() {
        let s = solve(&g(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]]));
        assert!(close(s.value, 0.0));
        assert!(s.row_strategy.iter().all(|&p| close(p, 1.0 / 3.0)));
        assert!(s.duality_gap.abs() < 1e-9);
    }

    #[test]
    fn best_response_examples() {
        let m = g(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(best_pure_response(&m, &[1.0, 0.0]).unwrap(), (1, 0.0));
        assert_eq!(best_pure_response(&g(&[&[0.7]]), &[1.0]).unwrap(), (0, 0.7));
        let m = g(&[&[2.0, 3.0], &[0.0, 1.0]]);
        assert_eq!(best_pure_response(&m, &[0.5, 0.5]).unwrap(), (0, 1.0));
        assert!(best_pure_response(&m, &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(MatrixGame::new(vec![]), Err(MatrixError::Shape));
        assert_eq!(MatrixGame::new(vec![vec![1.0], vec![1.0, 2.0]]), Err(MatrixError::Shape));
        assert_eq!(MatrixGame::new(vec![vec![1.0, f64::NAN]]), Err(MatrixError::NonFinite(0, 1)));
    }

    fn matrix() -> impl Strategy<Value = MatrixGame> {
        (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
            prop::collection::vec(-3.0f64..3.0, m * n).prop_map(move |d| MatrixGame::from_flat(m, n, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn certificates_hold(m in matrix()) {
            let s = solve(&m);
            prop_assert!(m.row_guarantee(&s.row_strategy) >= s.value - 1e-9);
            prop_assert!(m.col_guarantee(&s.col_strategy) <= s.value + 1e-9);
            prop_assert!(s.duality_gap <= 1e-9);
            prop_assert!((game_value(m.rows(), m.cols(), m.data()) - s.value).abs() <= 1e-9);
        }

        #[test]
        fn antisymmetry(m in matrix()) {
            prop_assert!((solve(&m).value + solve(&m.negated_transpose()).value).abs() <= 1e-9);
        }

        #[test]
        fn shift_equivariance(m in matrix(), c in -5.0f64..5.0) {
            let shifted = MatrixGame::from_flat(m.rows(), m.cols(), m.data().iter().map(|x| x + c).collect()).unwrap();
            prop_assert!((solve(&shifted).value - solve(&m).value - c).abs() <= 1e-9);
        }
    }
}
