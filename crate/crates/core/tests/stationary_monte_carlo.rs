//! Long-run simulation checks of the stationary solver: the empirical
//! time in each state over a million steps must match the solved vector,
//! and the direct solve must agree with power iteration.

use endotype_core::matrix::TransitionMatrix;
use endotype_core::sim::{sample_path, state_frequencies, InitialState};
use endotype_core::stationary::{power_iteration, stationary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_regular(n: usize, rng: &mut ChaCha8Rng) -> TransitionMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    TransitionMatrix::from_rows(rows).unwrap()
}

#[test]
fn million_step_frequencies_match_the_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(2023);
    let mut cases = vec![TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap()];
    for _ in 0..3 {
        cases.push(random_regular(4, &mut rng));
    }
    for (case, m) in cases.iter().enumerate() {
        let solved = stationary(m).unwrap();
        let path = sample_path(m, 1_000_000, InitialState::Uniform, &mut rng);
        let freq = state_frequencies(&path, m.n());
        for (state, (&f, &x)) in freq.iter().zip(&solved.probs).enumerate() {
            assert!(
                (f - x).abs() < 0.005,
                "case {case} state {state}: empirical {f} vs solved {x}"
            );
        }
    }
}

#[test]
fn hand_case_is_exact_to_machine_precision() {
    let m = TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
    let s = stationary(&m).unwrap();
    assert!((s.probs[0] - 5.0 / 6.0).abs() < 1e-12);
    assert!((s.probs[1] - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn direct_solve_agrees_with_power_iteration_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..20 {
        let n = rng.gen_range(2..=8);
        let m = random_regular(n, &mut rng);
        let direct = stationary(&m).unwrap();
        let power = power_iteration(&m, 100_000, 1e-15).unwrap();
        for (a, b) in direct.probs.iter().zip(&power.probs) {
            assert!((a - b).abs() < 1e-9, "trial {trial}: {a} vs {b}");
        }
    }
}
