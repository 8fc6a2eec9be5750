//! Stationary distributions of transition matrices.
//!
//! The stationary vector solves `x M = x` on the probability simplex. It
//! is unique exactly when the matrix is regular (some power is entrywise
//! positive), which is checked before solving; reducible or periodic
//! matrices produce an error naming the detected structure rather than an
//! arbitrary pick among several solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;

/// Eigen-equation residual bound a returned solution must satisfy.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-8;

/// How a stationary vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Direct linear solve of the eigen-equation with the simplex
    /// constraint.
    Direct,
    /// Repeated left-multiplication from the uniform vector.
    PowerIteration,
}

/// A stationary probability vector together with its achieved residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
    /// `max_k |(x M)_k - x_k|` for the returned vector.
    pub residual_norm: f64,
    pub method: SolveMethod,
}

/// True iff some power `M^t` with `t <= max_power` is entrywise positive.
///
/// `max_power` defaults to `n * n`, which is above the Wielandt bound
/// `n^2 - 2n + 2`, so the default never misclassifies a regular matrix.
pub fn is_regular(m: &TransitionMatrix, max_power: Option<usize>) -> bool {
    let n = m.n();
    let limit = max_power.unwrap_or(n * n);
    let base: Vec<bool> = m.entries().iter().map(|&p| p > 0.0).collect();
    let mut current = base.clone();
    for _ in 0..limit {
        if current.iter().all(|&b| b) {
            return true;
        }
        let mut next = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if current[i * n + k] {
                    for j in 0..n {
                        if base[k * n + j] {
                            next[i * n + j] = true;
                        }
                    }
                }
            }
        }
        if next == current {
            return false;
        }
        current = next;
    }
    current.iter().all(|&b| b)
}

/// Whether the positive-entry digraph of `m` is strongly connected.
fn strongly_connected(m: &TransitionMatrix) -> bool {
    let n = m.n();
    let reach = |forward: bool| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let reachable = (0..n).filter(|&j| {
                let edge = if forward { m.get(i, j) } else { m.get(j, i) };
                edge > 0.0
            });
            for j in reachable {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    reach(true).iter().all(|&b| b) && reach(false).iter().all(|&b| b)
}

/// Solve `x M = x`, `sum x = 1`, `x >= 0` for a regular matrix.
///
/// Solves `(M^T - I) x = 0` directly with the normalization constraint
/// replacing one equation, then verifies the eigen-equation residual.
pub fn stationary(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    ensure_regular(m)?;
    let n = m.n();

    // a[i][j] x_j = b_i with the last equation replaced by sum x = 1
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = m.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;

    let mut x = solve_linear(n, a, b)?;

    // rounding can leave tiny negatives; clamp and renormalize
    for v in &mut x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "stationary solve produced a zero vector".into(),
        ));
    }
    for v in &mut x {
        *v /= total;
    }

    let residual_norm = eigen_residual(m, &x);
    if residual_norm > STATIONARY_RESIDUAL_TOL {
        return Err(Error::Degenerate(format!(
            "stationary solve residual {residual_norm:.3e} exceeds {STATIONARY_RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(StationaryDistribution {
        probs: x,
        residual_norm,
        method: SolveMethod::Direct,
    })
}

/// Stationary vector by power iteration from the uniform distribution.
///
/// Kept as an independent route for cross-checking the direct solve.
pub fn power_iteration(
    m: &TransitionMatrix,
    max_iterations: usize,
    tolerance: f64,
) -> Result<StationaryDistribution> {
    ensure_regular(m)?;
    let n = m.n();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iterations {
        let next = m.left_mul(&x);
        let delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if delta < tolerance {
            break;
        }
    }
    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }
    let residual_norm = eigen_residual(m, &x);
    Ok(StationaryDistribution {
        probs: x,
        residual_norm,
        method: SolveMethod::PowerIteration,
    })
}

/// `max_k |(x M)_k - x_k|`.
pub fn eigen_residual(m: &TransitionMatrix, x: &[f64]) -> f64 {
    m.left_mul(x)
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn ensure_regular(m: &TransitionMatrix) -> Result<()> {
    if is_regular(m, None) {
        return Ok(());
    }
    let structure = if strongly_connected(m) {
        "periodic"
    } else {
        "reducible"
    };
    Err(Error::NonUniqueStationary { structure })
}

/// Gaussian elimination with partial pivoting on a dense system.
fn solve_linear(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .expect("no NaN in solver")
            })
            .expect("nonempty range");
        if a[pivot_row * n + col].abs() < 1e-14 {
            return Err(Error::Degenerate(
                "singular system in stationary solve".into(),
            ));
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= a[row * n + j] * x[j];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}
