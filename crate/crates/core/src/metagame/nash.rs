use serde::{Deserialize, Serialize};

use super::{check_matrix, MetagameError, MixedStrategy};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashConfig {
    pub tolerance: f64,
    pub max_iterations: u64,
}

impl Default for NashConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 1_000_000,
        }
    }
}

/// Equilibrium estimate from fictitious play, exact when support polishing
/// succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashSolution<T> {
    pub row: MixedStrategy<T>,
    pub col: MixedStrategy<T>,
    /// Midpoint of the row player's guaranteed value and the column
    /// player's guaranteed cap; within `exploitability / 2` of the true value.
    pub value: T,
    pub exploitability: T,
    pub iterations: u64,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
    /// True when the profile came from solving the indifference system on
    /// the supports suggested by fictitious play.
    pub polished: bool,
}

/// Gaussian elimination with partial pivoting. `None` if singular.
fn solve_linear<T: Scalar>(mut m: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() <= T::epsilon() * T::lit(64.0) {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let d = f * m[col][c];
                m[r][c] -= d;
            }
            let d = f * b[col];
            b[r] -= d;
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

/// Mix over `own` support making every opponent strategy in `other`
/// indifferent. `rows` selects whether `own` indexes rows of `a`.
fn indifferent_mix<T: Scalar>(a: &[Vec<T>], own: &[usize], other: &[usize], rows: bool, size: usize) -> Option<Vec<T>> {
    let k = own.len();
    // Unknowns: k probabilities and the common value.
    let mut m = Vec::with_capacity(k + 1);
    let mut b = Vec::with_capacity(k + 1);
    for &o in other {
        let mut eq: Vec<T> = own.iter().map(|&s| if rows { a[s][o] } else { a[o][s] }).collect();
        eq.push(-T::one());
        m.push(eq);
        b.push(T::zero());
    }
    let mut sum = vec![T::one(); k];
    sum.push(T::zero());
    m.push(sum);
    b.push(T::one());
    let x = solve_linear(m, b)?;
    let mut out = vec![T::zero(); size];
    for (&s, &p) in own.iter().zip(&x) {
        if p < -T::lit(1e-9) {
            return None;
        }
        out[s] = p.max(T::zero());
    }
    Some(out)
}

fn by_mass<T: Scalar>(p: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| p[j].partial_cmp(&p[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    order
}

fn try_support<T: Scalar>(a: &[Vec<T>], sr: &[usize], sc: &[usize]) -> Option<(MixedStrategy<T>, MixedStrategy<T>, T)> {
    let (m, n) = (a.len(), a[0].len());
    let x = MixedStrategy::from_weights(&indifferent_mix(a, sr, sc, true, m)?).ok()?;
    let y = MixedStrategy::from_weights(&indifferent_mix(a, sc, sr, false, n)?).ok()?;
    let e = exploitability(a, &x, &y).ok()?;
    Some((x, y, e))
}

fn keep_best<T: Scalar>(best: &mut Option<(MixedStrategy<T>, MixedStrategy<T>, T)>, c: Option<(MixedStrategy<T>, MixedStrategy<T>, T)>) {
    if let Some(c) = c {
        if best.as_ref().is_none_or(|b| c.2 < b.2) {
            *best = Some(c);
        }
    }
}

/// Tries to turn an approximate profile into an exact equilibrium by
/// solving the indifference equations on the k heaviest strategies of each
/// side, for every k. Returns the least exploitable candidate.
fn polish<T: Scalar>(a: &[Vec<T>], row: &[T], col: &[T]) -> Option<(MixedStrategy<T>, MixedStrategy<T>, T)> {
    let (rows, cols) = (by_mass(row), by_mass(col));
    let mut best = None;
    for k in 1..=rows.len().min(cols.len()) {
        let mut sr = rows[..k].to_vec();
        let mut sc = cols[..k].to_vec();
        sr.sort_unstable();
        sc.sort_unstable();
        keep_best(&mut best, try_support(a, &sr, &sc));
    }
    best
}

const ENUMERATE_MAX: usize = 8;

fn subsets_of(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << items.len())
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| {
            let mut s: Vec<usize> = (0..items.len()).filter(|i| m >> i & 1 == 1).map(|i| items[i]).collect();
            s.sort_unstable();
            s
        })
        .collect()
}

/// [`polish`] plus every equal-size support pair drawn from the strategies
/// carrying visible mass (at most [`ENUMERATE_MAX`] per side).
fn polish_thorough<T: Scalar>(a: &[Vec<T>], row: &[T], col: &[T]) -> Option<(MixedStrategy<T>, MixedStrategy<T>, T)> {
    let mut best = polish(a, row, col);
    let visible = |p: &[T]| -> Vec<usize> {
        by_mass(p).into_iter().filter(|&i| p[i] > T::lit(1e-3)).take(ENUMERATE_MAX).collect()
    };
    let (cr, cc) = (visible(row), visible(col));
    for k in 1..=cr.len().min(cc.len()) {
        for sr in subsets_of(&cr, k) {
            for sc in subsets_of(&cc, k) {
                keep_best(&mut best, try_support(a, &sr, &sc));
            }
        }
    }
    best
}

const POLISH_EVERY: u64 = 200;

fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn argmin<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Row payoffs against a column mix: `A · col`.
pub fn best_response_value<T: Scalar>(a: &[Vec<T>], col: &[T]) -> Vec<T> {
    a.iter()
        .map(|row| row.iter().zip(col).map(|(&x, &p)| x * p).sum())
        .collect()
}

fn col_values<T: Scalar>(a: &[Vec<T>], row: &[T]) -> Vec<T> {
    let n = a[0].len();
    (0..n)
        .map(|c| a.iter().zip(row).map(|(r, &p)| r[c] * p).sum())
        .collect()
}

/// `(max_r (A col)_r - v) + (v - min_c (row^T A)_c)` with `v = row^T A col`.
pub fn exploitability<T: Scalar>(
    a: &[Vec<T>],
    row: &MixedStrategy<T>,
    col: &MixedStrategy<T>,
) -> Result<T, MetagameError> {
    let (m, n) = check_matrix(a)?;
    if row.len() != m {
        return Err(MetagameError::Dimension { expected: m, got: row.len() });
    }
    if col.len() != n {
        return Err(MetagameError::Dimension { expected: n, got: col.len() });
    }
    let rv = best_response_value(a, col.probs());
    let cv = col_values(a, row.probs());
    let value: T = rv.iter().zip(row.probs()).map(|(&x, &p)| x * p).sum();
    let best_row = rv.iter().copied().fold(T::neg_infinity(), T::max);
    let best_col = cv.iter().copied().fold(T::infinity(), T::min);
    Ok(((best_row - value) + (value - best_col)).max(T::zero()))
}

/// Fictitious play on a zero-sum matrix game (row player maximises).
///
/// Both players best-respond to the opponent's empirical average each
/// iteration, ties going to the lowest index. Every few hundred iterations
/// the averaged profile's supports are used to solve for an exact
/// equilibrium; the first candidate within `tolerance` is returned.
/// Otherwise iterates until the averaged profile's exploitability is at
/// most `tolerance` or the cap is reached.
pub fn solve_nash<T: Scalar>(a: &[Vec<T>], config: &NashConfig) -> Result<NashSolution<T>, MetagameError> {
    let (m, n) = check_matrix(a)?;
    let tol = T::lit(config.tolerance);
    let mut row_counts = vec![0u64; m];
    let mut col_counts = vec![0u64; n];
    // Cumulative payoffs against the opponent's counts.
    let mut row_payoff = vec![T::zero(); m];
    let mut col_payoff = vec![T::zero(); n];
    // Start from the lowest-index pure profile.
    let (mut r, mut c) = (0usize, 0usize);
    let mut t = 0u64;
    let mut gap;
    loop {
        row_counts[r] += 1;
        col_counts[c] += 1;
        for (i, row) in a.iter().enumerate() {
            row_payoff[i] += row[c];
        }
        for (j, x) in a[r].iter().enumerate() {
            col_payoff[j] += *x;
        }
        t += 1;
        let tt = T::from_count(t as usize);
        r = argmax(&row_payoff);
        c = argmin(&col_payoff);
        gap = (row_payoff[r] - col_payoff[c]) / tt;
        if gap <= tol || t >= config.max_iterations {
            break;
        }
        if t.is_multiple_of(POLISH_EVERY) {
            let x: Vec<T> = row_counts.iter().map(|&k| T::from_count(k as usize) / tt).collect();
            let y: Vec<T> = col_counts.iter().map(|&k| T::from_count(k as usize) / tt).collect();
            if let Some((row, col, e)) = polish(a, &x, &y) {
                if e <= tol {
                    let value: T = best_response_value(a, col.probs()).iter().zip(row.probs()).map(|(&v, &p)| v * p).sum();
                    return Ok(NashSolution { row, col, value, exploitability: e, iterations: t, converged: true, polished: true });
                }
            }
        }
    }
    let tt = T::from_count(t as usize);
    let row = MixedStrategy::from_weights(&row_counts.iter().map(|&k| T::from_count(k as usize) / tt).collect::<Vec<_>>())?;
    let col = MixedStrategy::from_weights(&col_counts.iter().map(|&k| T::from_count(k as usize) / tt).collect::<Vec<_>>())?;
    let exploit = exploitability(a, &row, &col)?;
    if let Some((prow, pcol, e)) = polish_thorough(a, row.probs(), col.probs()) {
        if e <= exploit {
            let value: T = best_response_value(a, pcol.probs()).iter().zip(prow.probs()).map(|(&v, &p)| v * p).sum();
            return Ok(NashSolution { row: prow, col: pcol, value, exploitability: e, iterations: t, converged: e <= tol, polished: true });
        }
    }
    let upper = best_response_value(a, col.probs()).into_iter().fold(T::neg_infinity(), T::max);
    let lower = col_values(a, row.probs()).into_iter().fold(T::infinity(), T::min);
    Ok(NashSolution {
        row,
        col,
        value: (upper + lower) * T::lit(0.5),
        exploitability: exploit,
        iterations: t,
        converged: exploit <= tol,
        polished: false,
    })
}
