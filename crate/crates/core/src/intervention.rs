//! What-if transforms on 4-state transition matrices: boost the
//! probability of moving toward good mood (or low pain) by `beta` and
//! redistribute the displaced mass, then compare stationary distributions
//! before and after.
//!
//! State order is the canonical `BH, BL, GH, GL`. The mood transform
//! rewrites the two bad-mood rows: both good-mood target columns gain
//! `beta`, and the remaining bad-mood mass `(P(BL) + P(BH) - 2 beta)` is
//! divided `split : (1 - split)` between BL and BH. The pain transform is
//! the mirror image on the high-pain rows and columns. Row sums are
//! algebraically unchanged, so both transforms preserve
//! row-stochasticity.
//!
//! Note that at `beta = 0` the transform still redistributes the bad-mood
//! (or high-pain) mass by the split ratio; pass `strict_noop` to make
//! `beta = 0` the identity instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::stationary::{stationary, StationaryDistribution};

/// Which symptom the transform improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Mood,
    Pain,
}

/// How much probability to shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaChoice {
    /// A fixed value, checked against the per-matrix feasibility bound.
    Fixed(f64),
    /// Use each matrix's own maximum feasible value.
    Max,
}

/// A full intervention specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub target: Target,
    pub beta: BetaChoice,
    /// Share of the redistributed mass kept away from the worst state
    /// (default 0.8).
    pub split: f64,
    /// Make `beta = 0` a strict identity instead of applying the
    /// split redistribution.
    pub strict_noop: bool,
}

impl InterventionSpec {
    pub fn new(target: Target, beta: BetaChoice) -> Self {
        InterventionSpec {
            target,
            beta,
            split: 0.8,
            strict_noop: false,
        }
    }
}

/// Effect of the transform on one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionResult {
    /// The beta actually applied (resolved per matrix when `Max`).
    pub beta: f64,
    pub original: TransitionMatrix,
    pub modified: TransitionMatrix,
    pub original_stationary: StationaryDistribution,
    pub modified_stationary: StationaryDistribution,
    /// `modified - original` stationary mass per state; sums to zero.
    pub deltas: Vec<f64>,
}

const BH: usize = 0;
const BL: usize = 1;
const GH: usize = 2;
const GL: usize = 3;

struct Layout {
    /// Rows the transform rewrites.
    rows: [usize; 2],
    /// Columns gaining `beta` each.
    boosted: [usize; 2],
    /// Columns sharing the remaining mass; first gets `split`.
    redistributed: [usize; 2],
}

fn layout(target: Target) -> Layout {
    match target {
        Target::Mood => Layout {
            rows: [BH, BL],
            boosted: [GL, GH],
            redistributed: [BL, BH],
        },
        Target::Pain => Layout {
            rows: [BH, GH],
            boosted: [GL, BL],
            redistributed: [GH, BH],
        },
    }
}

fn check_four_state(m: &TransitionMatrix) -> Result<()> {
    if m.n() != 4 {
        return Err(Error::InvalidInput(format!(
            "intervention transforms need the 4-state space (BH, BL, GH, GL), got n={}",
            m.n()
        )));
    }
    Ok(())
}

/// Largest `beta` keeping every modified entry of `m` inside `[0, 1]`.
///
/// Two families of constraints bind: the boosted entries must stay at or
/// below 1, and the redistributed mass `(sum of redistributed columns -
/// 2 beta)` must stay nonnegative.
pub fn max_feasible_beta(m: &TransitionMatrix, target: Target) -> Result<f64> {
    check_four_state(m)?;
    let lay = layout(target);
    let mut bound = f64::INFINITY;
    for &i in &lay.rows {
        let mass = m.get(i, lay.redistributed[0]) + m.get(i, lay.redistributed[1]);
        let boosted_max = m.get(i, lay.boosted[0]).max(m.get(i, lay.boosted[1]));
        bound = bound.min(mass / 2.0).min(1.0 - boosted_max);
    }
    Ok(bound.max(0.0))
}

fn apply(m: &TransitionMatrix, target: Target, beta: f64, split: f64, strict_noop: bool) -> Result<TransitionMatrix> {
    check_four_state(m)?;
    if !(0.0 < split && split < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split ratio must lie strictly between 0 and 1, got {split}"
        )));
    }
    if beta < 0.0 {
        return Err(Error::InvalidInput(format!("beta must be nonnegative, got {beta}")));
    }
    let bound = max_feasible_beta(m, target)?;
    if beta > bound {
        return Err(Error::InvalidInput(format!(
            "beta {beta} exceeds the feasible bound {bound} for this matrix"
        )));
    }
    if strict_noop && beta == 0.0 {
        return Ok(m.clone());
    }
    let lay = layout(target);
    let mut rows: Vec<Vec<f64>> = (0..4).map(|i| m.row(i).to_vec()).collect();
    for &i in &lay.rows {
        let mass = m.get(i, lay.redistributed[0]) + m.get(i, lay.redistributed[1]) - 2.0 * beta;
        rows[i][lay.boosted[0]] += beta;
        rows[i][lay.boosted[1]] += beta;
        rows[i][lay.redistributed[0]] = split * mass;
        rows[i][lay.redistributed[1]] = (1.0 - split) * mass;
    }
    TransitionMatrix::from_rows(rows)
}

/// Boost transitions from bad-mood states toward good mood.
pub fn improve_mood(m: &TransitionMatrix, beta: f64, split: f64) -> Result<TransitionMatrix> {
    apply(m, Target::Mood, beta, split, false)
}

/// Boost transitions from high-pain states toward low pain.
pub fn improve_pain(m: &TransitionMatrix, beta: f64, split: f64) -> Result<TransitionMatrix> {
    apply(m, Target::Pain, beta, split, false)
}

/// Apply the transform to one matrix and compare stationary
/// distributions.
pub fn intervene_matrix(m: &TransitionMatrix, spec: &InterventionSpec) -> Result<InterventionResult> {
    let beta = match spec.beta {
        BetaChoice::Fixed(b) => b,
        BetaChoice::Max => max_feasible_beta(m, spec.target)?,
    };
    let modified = apply(m, spec.target, beta, spec.split, spec.strict_noop)?;
    let original_stationary = stationary(m)?;
    let modified_stationary = stationary(&modified)?;
    let deltas: Vec<f64> = modified_stationary
        .probs
        .iter()
        .zip(&original_stationary.probs)
        .map(|(b, a)| b - a)
        .collect();
    Ok(InterventionResult {
        beta,
        original: m.clone(),
        modified,
        original_stationary,
        modified_stationary,
        deltas,
    })
}

/// Apply the transform to every cluster matrix of a fitted model.
pub fn intervene(components: &[TransitionMatrix], spec: &InterventionSpec) -> Result<Vec<InterventionResult>> {
    components.iter().map(|m| intervene_matrix(m, spec)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Build a matrix from rows given in canonical BH, BL, GH, GL order.
    fn matrix(rows: [[f64; 4]; 4]) -> TransitionMatrix {
        TransitionMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn feasibility_bound_hand_cases() {
        // bad-mood rows with mass 0.4 on the bad-mood columns and boosted
        // entries at most 0.5: bound = min(0.4 / 2, 1 - 0.5) = 0.2, set by
        // the mass constraint
        let m = matrix([
            [0.2, 0.2, 0.1, 0.5],
            [0.2, 0.2, 0.1, 0.5],
            [0.1, 0.1, 0.4, 0.4],
            [0.1, 0.1, 0.4, 0.4],
        ]);
        let bound = max_feasible_beta(&m, Target::Mood).unwrap();
        assert!((bound - 0.2).abs() < 1e-12);

        let uniform = TransitionMatrix::uniform(4);
        let bound = max_feasible_beta(&uniform, Target::Mood).unwrap();
        assert!((bound - 0.25).abs() < 1e-12);
        let bound = max_feasible_beta(&uniform, Target::Pain).unwrap();
        assert!((bound - 0.25).abs() < 1e-12);

        // beta = 0 is always feasible
        for target in [Target::Mood, Target::Pain] {
            assert!(max_feasible_beta(&uniform, target).unwrap() >= 0.0);
            assert!(improve_mood(&uniform, 0.0, 0.8).is_ok());
        }
    }

    #[test]
    fn mood_transform_at_beta_zero_still_redistributes() {
        // BH row with GL=0.1, GH=0.1, BL=0.3, BH=0.5: bad-mood mass 0.8
        // splits 0.8/0.2 into BL=0.64, BH=0.16; boosted columns unchanged
        let m = matrix([
            [0.5, 0.3, 0.1, 0.1],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
        ]);
        let out = improve_mood(&m, 0.0, 0.8).unwrap();
        let want = [0.16, 0.64, 0.1, 0.1];
        for (j, w) in want.iter().enumerate() {
            assert!((out.get(0, j) - w).abs() < 1e-15, "col {j}");
        }
    }

    #[test]
    fn mood_transform_hand_case_at_beta_015() {
        // same BH row, beta = 0.15: boosted 0.1 + 0.15 twice, remainder
        // 0.8 - 0.3 = 0.5 split 0.8/0.2 into 0.40 / 0.10
        let m = matrix([
            [0.5, 0.3, 0.1, 0.1],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
        ]);
        let out = improve_mood(&m, 0.15, 0.8).unwrap();
        let want = [0.10, 0.40, 0.25, 0.25];
        for (j, w) in want.iter().enumerate() {
            assert!((out.get(0, j) - w).abs() < 1e-15, "col {j}");
        }
    }

    #[test]
    fn mood_transform_leaves_good_mood_rows_bit_identical() {
        let m = matrix([
            [0.4, 0.3, 0.2, 0.1],
            [0.1, 0.4, 0.3, 0.2],
            [0.2, 0.1, 0.4, 0.3],
            [0.3, 0.2, 0.1, 0.4],
        ]);
        let out = improve_mood(&m, 0.1, 0.8).unwrap();
        assert_eq!(m.row(GH), out.row(GH));
        assert_eq!(m.row(GL), out.row(GL));
    }

    #[test]
    fn pain_transform_hand_case() {
        // BH row with GL=0.1, BL=0.3, GH=0.2, BH=0.4 at beta = 0.15:
        // GL=0.25, BL=0.45, GH = 0.8*(0.2+0.4-0.3) = 0.24, BH = 0.06
        let m = matrix([
            [0.4, 0.3, 0.2, 0.1],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
        ]);
        let out = improve_pain(&m, 0.15, 0.8).unwrap();
        assert!((out.get(BH, GL) - 0.25).abs() < 1e-15);
        assert!((out.get(BH, BL) - 0.45).abs() < 1e-15);
        assert!((out.get(BH, GH) - 0.24).abs() < 1e-15);
        assert!((out.get(BH, BH) - 0.06).abs() < 1e-15);
        // low-pain rows untouched
        assert_eq!(m.row(BL), out.row(BL));
        assert_eq!(m.row(GL), out.row(GL));
    }

    #[test]
    fn pain_transform_fixed_point_at_beta_zero() {
        // high-pain mass already split 0.8/0.2 between GH and BH in both
        // modified rows (GH = 0.8 m, BH = 0.2 m), so beta = 0 changes
        // nothing
        let m = matrix([
            [0.1, 0.2, 0.4, 0.3],
            [0.25, 0.25, 0.25, 0.25],
            [0.04, 0.4, 0.16, 0.4],
            [0.25, 0.25, 0.25, 0.25],
        ]);
        let out = improve_pain(&m, 0.0, 0.8).unwrap();
        assert!(m.max_abs_diff(&out) < 1e-15);
    }

    #[test]
    fn strict_noop_flag_makes_beta_zero_identity() {
        let m = matrix([
            [0.5, 0.3, 0.1, 0.1],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.25, 0.25, 0.25],
        ]);
        let spec = InterventionSpec {
            target: Target::Mood,
            beta: BetaChoice::Fixed(0.0),
            split: 0.8,
            strict_noop: true,
        };
        let result = intervene_matrix(&m, &spec).unwrap();
        assert_eq!(result.original, result.modified);
        for d in &result.deltas {
            assert_eq!(*d, 0.0);
        }
    }

    #[test]
    fn infeasible_beta_errors_with_bound() {
        let m = TransitionMatrix::uniform(4);
        let bound = max_feasible_beta(&m, Target::Mood).unwrap();
        assert!(improve_mood(&m, bound, 0.8).is_ok());
        let err = improve_mood(&m, bound + 1e-6, 0.8).unwrap_err();
        assert!(err.to_string().contains("feasible bound"));
        assert!(improve_mood(&m, -0.01, 0.8).is_err());
        assert!(improve_mood(&m, 0.1, 1.0).is_err());
        assert!(improve_mood(&TransitionMatrix::uniform(3), 0.0, 0.8).is_err());
    }

    #[test]
    fn transforms_preserve_row_sums_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
                    let t: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / t).collect()
                })
                .collect();
            let m = TransitionMatrix::from_rows(rows).unwrap();
            for target in [Target::Mood, Target::Pain] {
                let bound = max_feasible_beta(&m, target).unwrap();
                let beta = bound * rng.gen_range(0.0..1.0);
                let out = apply(&m, target, beta, 0.8, false).unwrap();
                for i in 0..4 {
                    let sum: f64 = out.row(i).iter().sum();
                    assert!((sum - 1.0).abs() < 1e-9, "trial {trial} row {i}");
                }
            }
        }
    }

    #[test]
    fn pessimistic_cluster_loses_bh_mass_under_mood_intervention() {
        // heavy attraction into BH
        let m = matrix([
            [0.7, 0.1, 0.1, 0.1],
            [0.6, 0.2, 0.1, 0.1],
            [0.5, 0.2, 0.2, 0.1],
            [0.5, 0.1, 0.2, 0.2],
        ]);
        let spec = InterventionSpec::new(Target::Mood, BetaChoice::Max);
        let result = intervene_matrix(&m, &spec).unwrap();
        assert!(result.beta > 0.0);
        assert!(
            result.deltas[BH] < 0.0,
            "BH stationary mass should strictly decrease, got {:?}",
            result.deltas
        );
        let delta_sum: f64 = result.deltas.iter().sum();
        assert!(delta_sum.abs() < 1e-9);
    }

    #[test]
    fn stationary_mass_on_boosted_states_grows_with_beta() {
        let m = matrix([
            [0.55, 0.2, 0.15, 0.1],
            [0.3, 0.4, 0.2, 0.1],
            [0.2, 0.2, 0.4, 0.2],
            [0.1, 0.2, 0.3, 0.4],
        ]);
        let bound = max_feasible_beta(&m, Target::Mood).unwrap();
        let mut last = f64::NEG_INFINITY;
        for step in 0..=8 {
            let beta = bound * step as f64 / 8.0;
            let out = improve_mood(&m, beta, 0.8).unwrap();
            let x = stationary(&out).unwrap();
            let good = x.probs[GH] + x.probs[GL];
            assert!(
                good >= last - 1e-12,
                "good-mood stationary mass decreased at beta {beta}"
            );
            last = good;
        }
    }
}
