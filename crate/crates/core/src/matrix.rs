//! Dense square matrices for transition counts and probabilities.
//!
//! The state spaces here are tiny (4 or 25 states), so both types are plain
//! row-major `Vec`s with validated constructors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for a valid transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// An n-by-n matrix of observed one-step transition counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl CountMatrix {
    /// All-zero n-by-n matrix.
    pub fn zeros(n: usize) -> Self {
        CountMatrix {
            n,
            counts: vec![0; n * n],
        }
    }

    /// Build from row-major entries; `entries.len()` must be `n * n`.
    pub fn from_rows(n: usize, entries: Vec<u64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "count matrix needs {} entries for n={n}, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(CountMatrix { n, counts: entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: u64) {
        self.counts[i * self.n + j] = value;
    }

    /// Increment one cell.
    pub fn record(&mut self, i: usize, j: usize) {
        self.counts[i * self.n + j] += 1;
    }

    /// Sum of row `i`.
    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Sum over all entries.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Row-major view of the entries.
    pub fn entries(&self) -> &[u64] {
        &self.counts
    }

    /// Elementwise sum with another matrix of the same size.
    pub fn add_assign(&mut self, other: &CountMatrix) -> Result<()> {
        if other.n != self.n {
            return Err(Error::InvalidInput(format!(
                "cannot pool count matrices of sizes {} and {}",
                self.n, other.n
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

/// An n-by-n row-stochastic matrix of transition probabilities.
///
/// Entry `(i, j)` is the probability of moving from state `i` to state `j`
/// in one step. Rows must sum to 1 within [`ROW_SUM_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransitionMatrixRows", into = "TransitionMatrixRows")]
pub struct TransitionMatrix {
    n: usize,
    probs: Vec<f64>,
}

/// Serialized form: a list of rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TransitionMatrixRows {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<TransitionMatrixRows> for TransitionMatrix {
    type Error = Error;

    fn try_from(value: TransitionMatrixRows) -> Result<Self> {
        TransitionMatrix::from_rows(value.rows)
    }
}

impl From<TransitionMatrix> for TransitionMatrixRows {
    fn from(value: TransitionMatrix) -> Self {
        TransitionMatrixRows {
            rows: (0..value.n).map(|i| value.row(i).to_vec()).collect(),
        }
    }
}

impl TransitionMatrix {
    /// Build from rows, validating shape and row-stochasticity.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("transition matrix cannot be empty".into()));
        }
        let mut probs = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "transition matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0 + ROW_SUM_TOL).contains(&p) || p.is_nan() {
                    return Err(Error::InvalidInput(format!(
                        "transition probability ({i},{j}) = {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "transition matrix row {i} sums to {sum}, not 1"
                )));
            }
            probs.extend_from_slice(row);
        }
        Ok(TransitionMatrix { n, probs })
    }

    /// Uniform matrix with every entry `1/n`.
    pub fn uniform(n: usize) -> Self {
        TransitionMatrix {
            n,
            probs: vec![1.0 / n as f64; n * n],
        }
    }

    /// Row-normalize a count matrix; rows with zero total become uniform.
    pub fn from_counts_uniform_fallback(counts: &CountMatrix) -> Self {
        let n = counts.n();
        let mut probs = vec![0.0; n * n];
        for i in 0..n {
            let total = counts.row_total(i);
            for j in 0..n {
                probs[i * n + j] = if total == 0 {
                    1.0 / n as f64
                } else {
                    counts.get(i, j) as f64 / total as f64
                };
            }
        }
        TransitionMatrix { n, probs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }

    /// Borrow row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n..(i + 1) * self.n]
    }

    /// Row-major view of all entries.
    pub fn entries(&self) -> &[f64] {
        &self.probs
    }

    /// Left-multiply a row vector: returns `x M`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(&self.probs[i * n..(i + 1) * n]) {
                *o += xi * p;
            }
        }
        out
    }

    /// Permute states: row/column `i` of the result is state `perm[i]` of
    /// the original.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidInput("permutation length mismatch".into()));
        }
        let n = self.n;
        let mut probs = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                probs[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Ok(TransitionMatrix { n, probs })
    }

    /// Max-abs elementwise difference to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_matrix_totals() {
        let mut c = CountMatrix::zeros(3);
        c.record(0, 1);
        c.record(0, 1);
        c.record(2, 0);
        assert_eq!(c.get(0, 1), 2);
        assert_eq!(c.row_total(0), 2);
        assert_eq!(c.row_total(1), 0);
        assert_eq!(c.total(), 3);
    }

    #[test]
    fn pooling_requires_matching_sizes() {
        let mut a = CountMatrix::zeros(2);
        let b = CountMatrix::zeros(3);
        assert!(a.add_assign(&b).is_err());
    }

    #[test]
    fn transition_matrix_validates_rows() {
        assert!(TransitionMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.6, 0.6]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![1.2, -0.2], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![0.5, 0.5]]).is_err());
        let m = TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        assert_eq!(m.get(0, 1), 0.1);
        assert_eq!(m.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn from_counts_handles_zero_rows() {
        let c = CountMatrix::from_rows(2, vec![3, 1, 0, 0]).unwrap();
        let m = TransitionMatrix::from_counts_uniform_fallback(&c);
        assert_eq!(m.row(0), &[0.75, 0.25]);
        assert_eq!(m.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn left_mul_matches_hand_computation() {
        let m = TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let y = m.left_mul(&[0.5, 0.5]);
        assert!((y[0] - 0.7).abs() < 1e-15);
        assert!((y[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn permute_relabels_states() {
        let m = TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let p = m.permute(&[1, 0]).unwrap();
        assert_eq!(p.get(0, 0), 0.5);
        assert_eq!(p.get(1, 1), 0.9);
    }

    #[test]
    fn serde_round_trip() {
        let m = TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: TransitionMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        // invalid rows are rejected on the way back in
        let bad = r#"{"rows":[[0.9,0.3],[0.5,0.5]]}"#;
        assert!(serde_json::from_str::<TransitionMatrix>(bad).is_err());
    }
}
