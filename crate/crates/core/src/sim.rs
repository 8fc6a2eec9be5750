//! Sampling trajectories from Markov chains.

use rand::Rng;

use crate::matrix::TransitionMatrix;

/// Initial-state rule for sampled paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Uniform over all states.
    Uniform,
    /// Start in a fixed state index.
    Fixed(usize),
}

/// Draw an index from a discrete distribution by inverse CDF.
///
/// `probs` must sum to 1; any rounding shortfall goes to the last index.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Sample a path of `length` states from the chain.
pub fn sample_path<R: Rng + ?Sized>(
    m: &TransitionMatrix,
    length: usize,
    init: InitialState,
    rng: &mut R,
) -> Vec<usize> {
    if length == 0 {
        return Vec::new();
    }
    let mut path = Vec::with_capacity(length);
    let state = match init {
        InitialState::Uniform => rng.gen_range(0..m.n()),
        InitialState::Fixed(s) => s.min(m.n() - 1),
    };
    path.push(state);
    let mut current = state;
    for _ in 1..length {
        current = sample_index(m.row(current), rng);
        path.push(current);
    }
    path
}

/// Empirical state frequencies of a path over `n` states.
pub fn state_frequencies(path: &[usize], n: usize) -> Vec<f64> {
    let mut counts = vec![0u64; n];
    for &s in path {
        counts[s] += 1;
    }
    let total = path.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::stationary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sample_index_respects_point_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_index(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }

    #[test]
    fn paths_have_requested_length_and_fixed_start() {
        let m = TransitionMatrix::uniform(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let path = sample_path(&m, 10, InitialState::Fixed(2), &mut rng);
        assert_eq!(path.len(), 10);
        assert_eq!(path[0], 2);
        assert!(sample_path(&m, 0, InitialState::Uniform, &mut rng).is_empty());
    }

    #[test]
    fn long_run_frequencies_approach_stationary() {
        let m = TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let x = stationary(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path = sample_path(&m, 200_000, InitialState::Uniform, &mut rng);
        let freq = state_frequencies(&path, 2);
        for (f, s) in freq.iter().zip(&x.probs) {
            assert!((f - s).abs() < 0.01, "{f} vs {s}");
        }
    }
}
