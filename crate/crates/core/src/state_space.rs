//! Ordinal score scales, the compound (mood, pain) state space, and the
//! binarized four-state reduction.
//!
//! All matrices in the toolkit share one canonical ordering of the reduced
//! states: `BH, BL, GH, GL` (indices 0..=3). Compound states are indexed
//! row-major by (mood, pain) ascending: `(m, p) -> (m-1) * |pain| + (p-1)`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One ordinal Likert-style scale: consecutive integer scores starting at 1,
/// each with a text description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalScale {
    /// Scale name, e.g. `"mood"`.
    pub name: String,
    /// Description of each level; score `i+1` has description `levels[i]`.
    pub levels: Vec<String>,
    /// Whether a higher score is the better outcome.
    pub higher_is_better: bool,
}

impl OrdinalScale {
    /// Build a scale, enforcing at least two levels.
    pub fn new(name: &str, levels: Vec<String>, higher_is_better: bool) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "scale '{name}' must have at least 2 levels, got {}",
                levels.len()
            )));
        }
        Ok(OrdinalScale {
            name: name.to_string(),
            levels,
            higher_is_better,
        })
    }

    /// Number of levels.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    /// True if the scale has no levels (never holds for a validated scale).
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Whether `score` lies within this scale.
    pub fn contains(&self, score: u8) -> bool {
        score >= 1 && (score as usize) <= self.levels.len()
    }
}

/// A raw (mood, pain) score pair on the original scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompoundState {
    pub mood: u8,
    pub pain: u8,
}

impl CompoundState {
    pub fn new(mood: u8, pain: u8) -> Self {
        CompoundState { mood, pain }
    }
}

/// One of the four binarized (mood, pain) states.
///
/// Canonical index order is `BH, BL, GH, GL`, matching the row order used
/// for the intervention transforms; every matrix in the toolkit indexes its
/// rows and columns this way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReducedState {
    /// Bad mood, high pain.
    BadHigh,
    /// Bad mood, low pain.
    BadLow,
    /// Good mood, high pain.
    GoodHigh,
    /// Good mood, low pain.
    GoodLow,
}

/// Number of reduced states.
pub const REDUCED_STATE_COUNT: usize = 4;

impl ReducedState {
    /// All reduced states in canonical index order.
    pub const ALL: [ReducedState; REDUCED_STATE_COUNT] = [
        ReducedState::BadHigh,
        ReducedState::BadLow,
        ReducedState::GoodHigh,
        ReducedState::GoodLow,
    ];

    /// Canonical index in `0..4` (BH=0, BL=1, GH=2, GL=3).
    pub fn index(self) -> usize {
        match self {
            ReducedState::BadHigh => 0,
            ReducedState::BadLow => 1,
            ReducedState::GoodHigh => 2,
            ReducedState::GoodLow => 3,
        }
    }

    /// Inverse of [`ReducedState::index`].
    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Two-letter label: mood letter (G/B) then pain letter (L/H).
    pub fn label(self) -> &'static str {
        match self {
            ReducedState::BadHigh => "BH",
            ReducedState::BadLow => "BL",
            ReducedState::GoodHigh => "GH",
            ReducedState::GoodLow => "GL",
        }
    }

    /// Parse a two-letter label.
    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "BH" => Some(ReducedState::BadHigh),
            "BL" => Some(ReducedState::BadLow),
            "GH" => Some(ReducedState::GoodHigh),
            "GL" => Some(ReducedState::GoodLow),
            _ => None,
        }
    }
}

impl fmt::Display for ReducedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Labels of the four reduced states in canonical order.
pub fn reduced_state_labels() -> Vec<String> {
    ReducedState::ALL.iter().map(|s| s.label().to_string()).collect()
}

/// Which scores collapse to the unfavourable half of each scale.
///
/// Mood scores in `mood_bad` map to Bad, the rest to Good; pain scores in
/// `pain_high` map to High, the rest to Low.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarizationRule {
    pub mood_bad: BTreeSet<u8>,
    pub pain_high: BTreeSet<u8>,
}

/// Scales plus binarization rule: everything needed to map raw scores to
/// compound and reduced states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    pub mood: OrdinalScale,
    pub pain: OrdinalScale,
    pub rule: BinarizationRule,
}

impl Default for StateSpace {
    /// The default five-point mood and pain scales with mood 1-3 Bad,
    /// 4-5 Good, pain 1-2 Low, 3-5 High.
    fn default() -> Self {
        let mood = OrdinalScale {
            name: "mood".to_string(),
            levels: vec![
                "Depressed".to_string(),
                "Feeling low".to_string(),
                "Not very happy".to_string(),
                "Quite happy".to_string(),
                "Very happy".to_string(),
            ],
            higher_is_better: true,
        };
        let pain = OrdinalScale {
            name: "pain".to_string(),
            levels: vec![
                "No pain".to_string(),
                "Low pain".to_string(),
                "Moderate pain".to_string(),
                "Severe pain".to_string(),
                "Very severe pain".to_string(),
            ],
            higher_is_better: false,
        };
        let rule = BinarizationRule {
            mood_bad: [1, 2, 3].into_iter().collect(),
            pain_high: [3, 4, 5].into_iter().collect(),
        };
        StateSpace { mood, pain, rule }
    }
}

impl StateSpace {
    /// Build a state space, validating that the rule's cut sets are
    /// nonempty proper subsets of their scales (so binarize is surjective).
    pub fn new(mood: OrdinalScale, pain: OrdinalScale, rule: BinarizationRule) -> Result<Self> {
        for (set, scale, what) in [
            (&rule.mood_bad, &mood, "mood_bad"),
            (&rule.pain_high, &pain, "pain_high"),
        ] {
            if set.is_empty() || set.len() >= scale.len() {
                return Err(Error::InvalidInput(format!(
                    "binarization set '{what}' must be a nonempty proper subset of the {} scale",
                    scale.name
                )));
            }
            if let Some(&bad) = set.iter().find(|&&s| !scale.contains(s)) {
                return Err(Error::InvalidInput(format!(
                    "binarization set '{what}' contains score {bad} outside the {} scale",
                    scale.name
                )));
            }
        }
        Ok(StateSpace { mood, pain, rule })
    }

    /// Number of compound states, `|mood| * |pain|`.
    pub fn compound_count(&self) -> usize {
        self.mood.len() * self.pain.len()
    }

    /// Validate a score pair against the scales, naming the offending field.
    pub fn check_scores(&self, state: CompoundState) -> Result<()> {
        if !self.mood.contains(state.mood) {
            return Err(Error::InvalidInput(format!(
                "mood score {} out of range 1..={}",
                state.mood,
                self.mood.len()
            )));
        }
        if !self.pain.contains(state.pain) {
            return Err(Error::InvalidInput(format!(
                "pain score {} out of range 1..={}",
                state.pain,
                self.pain.len()
            )));
        }
        Ok(())
    }

    /// Collapse a compound state to its reduced state under the rule.
    pub fn binarize(&self, state: CompoundState) -> Result<ReducedState> {
        self.check_scores(state)?;
        let bad = self.rule.mood_bad.contains(&state.mood);
        let high = self.rule.pain_high.contains(&state.pain);
        Ok(match (bad, high) {
            (true, true) => ReducedState::BadHigh,
            (true, false) => ReducedState::BadLow,
            (false, true) => ReducedState::GoodHigh,
            (false, false) => ReducedState::GoodLow,
        })
    }

    /// Row-major compound index: `(m, p) -> (m-1) * |pain| + (p-1)`.
    pub fn compound_index(&self, state: CompoundState) -> Result<usize> {
        self.check_scores(state)?;
        Ok((state.mood as usize - 1) * self.pain.len() + (state.pain as usize - 1))
    }

    /// Inverse of [`StateSpace::compound_index`].
    pub fn compound_from_index(&self, index: usize) -> Option<CompoundState> {
        if index >= self.compound_count() {
            return None;
        }
        let mood = (index / self.pain.len()) as u8 + 1;
        let pain = (index % self.pain.len()) as u8 + 1;
        Some(CompoundState { mood, pain })
    }

    /// Labels `m{mood}p{pain}` for the compound states in index order.
    pub fn compound_labels(&self) -> Vec<String> {
        (0..self.compound_count())
            .map(|i| {
                let s = self.compound_from_index(i).expect("index in range");
                format!("m{}p{}", s.mood, s.pain)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rule_matches_score_table() {
        let space = StateSpace::default();
        // mood 3 is Bad, pain 2 is Low
        let s = space.binarize(CompoundState::new(3, 2)).unwrap();
        assert_eq!(s, ReducedState::BadLow);
        // mood 5 is Good, pain 5 is High
        let s = space.binarize(CompoundState::new(5, 5)).unwrap();
        assert_eq!(s, ReducedState::GoodHigh);
        // mood 1 is Bad, pain 1 is Low
        let s = space.binarize(CompoundState::new(1, 1)).unwrap();
        assert_eq!(s, ReducedState::BadLow);
    }

    #[test]
    fn binarize_agrees_with_cut_sets_everywhere() {
        let space = StateSpace::default();
        let mut seen = BTreeSet::new();
        for m in 1..=5u8 {
            for p in 1..=5u8 {
                let s = space.binarize(CompoundState::new(m, p)).unwrap();
                let expect_bad = m <= 3;
                let expect_high = p >= 3;
                assert_eq!(s.label().starts_with('B'), expect_bad, "mood {m}");
                assert_eq!(s.label().ends_with('H'), expect_high, "pain {p}");
                seen.insert(s);
            }
        }
        // surjective onto all four reduced states
        assert_eq!(seen.len(), 4);
        assert_eq!(space.compound_count(), 25);
    }

    #[test]
    fn binarize_rejects_out_of_range_scores() {
        let space = StateSpace::default();
        let err = space.binarize(CompoundState::new(6, 2)).unwrap_err();
        assert!(err.to_string().contains("mood score 6"));
        let err = space.binarize(CompoundState::new(2, 0)).unwrap_err();
        assert!(err.to_string().contains("pain score 0"));
    }

    #[test]
    fn reduced_index_is_canonical_and_bijective() {
        assert_eq!(ReducedState::BadHigh.index(), 0);
        assert_eq!(ReducedState::GoodLow.index(), 3);
        for (i, s) in ReducedState::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(ReducedState::from_index(i), Some(*s));
            assert_eq!(ReducedState::from_label(s.label()), Some(*s));
        }
        assert_eq!(ReducedState::from_index(4), None);
    }

    #[test]
    fn compound_index_round_trips_row_major() {
        let space = StateSpace::default();
        assert_eq!(space.compound_index(CompoundState::new(1, 1)).unwrap(), 0);
        assert_eq!(space.compound_index(CompoundState::new(1, 5)).unwrap(), 4);
        assert_eq!(space.compound_index(CompoundState::new(2, 1)).unwrap(), 5);
        assert_eq!(space.compound_index(CompoundState::new(5, 5)).unwrap(), 24);
        for i in 0..space.compound_count() {
            let s = space.compound_from_index(i).unwrap();
            assert_eq!(space.compound_index(s).unwrap(), i);
        }
        assert_eq!(space.compound_from_index(25), None);
    }

    #[test]
    fn rule_validation_rejects_degenerate_cuts() {
        let mood = OrdinalScale::new("mood", vec!["a".into(), "b".into()], true).unwrap();
        let pain = OrdinalScale::new("pain", vec!["a".into(), "b".into()], false).unwrap();
        // empty cut
        let rule = BinarizationRule {
            mood_bad: BTreeSet::new(),
            pain_high: [2].into_iter().collect(),
        };
        assert!(StateSpace::new(mood.clone(), pain.clone(), rule).is_err());
        // cut covering the whole scale
        let rule = BinarizationRule {
            mood_bad: [1, 2].into_iter().collect(),
            pain_high: [2].into_iter().collect(),
        };
        assert!(StateSpace::new(mood.clone(), pain.clone(), rule).is_err());
        // score outside the scale
        let rule = BinarizationRule {
            mood_bad: [3].into_iter().collect(),
            pain_high: [2].into_iter().collect(),
        };
        assert!(StateSpace::new(mood, pain, rule).is_err());
    }

    #[test]
    fn scales_need_two_levels() {
        assert!(OrdinalScale::new("x", vec!["only".into()], true).is_err());
    }
}
