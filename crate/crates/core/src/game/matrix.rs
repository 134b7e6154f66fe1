use serde::{Deserialize, Serialize};

use super::GameError;
use crate::scalar::Scalar;

/// Zero-sum normal-form game; `payoff[r][c]` is the row player's payoff and
/// the column player receives its negation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame<T> {
    payoff: Vec<Vec<T>>,
}

impl<T: Scalar> MatrixGame<T> {
    pub fn new(payoff: Vec<Vec<T>>) -> Result<Self, GameError> {
        let cols = payoff.first().map(Vec::len).unwrap_or(0);
        if cols == 0
            || payoff.iter().any(|row| row.len() != cols)
            || payoff.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(GameError::BadMatrix);
        }
        Ok(Self { payoff })
    }

    pub fn rock_paper_scissors() -> Self {
        let one = T::one();
        let zero = T::zero();
        Self {
            payoff: vec![
                vec![zero, -one, one],
                vec![one, zero, -one],
                vec![-one, one, zero],
            ],
        }
    }

    pub fn rows(&self) -> usize {
        self.payoff.len()
    }

    pub fn cols(&self) -> usize {
        self.payoff[0].len()
    }

    pub fn payoff(&self) -> &[Vec<T>] {
        &self.payoff
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// `(A[r][c], -A[r][c])`.
    pub fn step(&self, row: usize, col: usize) -> Result<(T, T), GameError> {
        let v = self
            .payoff
            .get(row)
            .and_then(|r| r.get(col))
            .copied()
            .ok_or(GameError::StrategyOutOfRange {
                row,
                col,
                rows: self.rows(),
                cols: self.cols(),
            })?;
        Ok((v, -v))
    }

    /// The symmetrised game `(A - A^T) / 2` a single strategy set faces when
    /// it plays both seats equally often. Requires a square game.
    pub fn symmetrized(&self) -> Result<Self, GameError> {
        if !self.is_square() {
            return Err(GameError::InvalidConfig(
                "symmetrising requires a square payoff matrix".into(),
            ));
        }
        let n = self.rows();
        let half = T::lit(0.5);
        let payoff = (0..n)
            .map(|r| (0..n).map(|c| (self.payoff[r][c] - self.payoff[c][r]) * half).collect())
            .collect();
        Ok(Self { payoff })
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows()).all(|r| (0..self.cols()).all(|c| self.payoff[r][c] == -self.payoff[c][r]))
    }

    /// Parses whitespace separated rows, one per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GameError> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map(T::lit)
                        .map_err(|_| GameError::InvalidConfig(format!("line {}: bad number {s:?}", n + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rps_lookups() {
        let g = MatrixGame::<f64>::rock_paper_scissors();
        // rock vs scissors
        assert_eq!(g.step(0, 2).unwrap(), (1.0, -1.0));
        assert_eq!(g.step(0, 0).unwrap(), (0.0, 0.0));
        assert!(g.is_antisymmetric());
    }

    #[test]
    fn table_lookup_and_range_errors() {
        let g = MatrixGame::new(vec![vec![0.0f32, 2.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(g.step(0, 1).unwrap(), (2.0, -2.0));
        assert!(matches!(g.step(2, 0), Err(GameError::StrategyOutOfRange { .. })));
        assert!(g.step(0, 2).is_err());
    }

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(MatrixGame::new(vec![vec![0.0, 1.0], vec![1.0]]).is_err());
        assert!(MatrixGame::new(vec![vec![f64::NAN]]).is_err());
        assert!(MatrixGame::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn parse_and_symmetrize() {
        let g = MatrixGame::<f64>::parse("# comment\n0 2\n1, 0\n").unwrap();
        assert_eq!(g.payoff(), &[vec![0.0, 2.0], vec![1.0, 0.0]]);
        let s = g.symmetrized().unwrap();
        assert_eq!(s.payoff(), &[vec![0.0, 0.5], vec![-0.5, 0.0]]);
        assert!(s.is_antisymmetric());
        assert!(MatrixGame::<f64>::parse("0 x").is_err());
    }
}
