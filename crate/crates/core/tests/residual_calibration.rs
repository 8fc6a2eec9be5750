//! Monte Carlo checks of the residual machinery: residuals of data drawn
//! from a fitted null are approximately standard normal, clustered data
//! produce gross excesses, and the neighbour-structured model strictly
//! improves on the uniform one when the data really have neighbour
//! structure.

use endotype_core::ingest::count_index_transitions;
use endotype_core::matrix::CountMatrix;
use endotype_core::residuals::{
    fit_model1, fit_model2, pearson_residuals, residual_normality, CompoundLayout, ResidualReport,
};
use endotype_core::sim::{sample_path, InitialState};
use endotype_core::TransitionMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

/// Draw a multinomial row by sequential binomial splitting.
fn sample_multinomial(total: u64, probs: &[f64], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut out = Vec::with_capacity(probs.len());
    let mut remaining = total;
    let mut mass = 1.0f64;
    for (idx, &p) in probs.iter().enumerate() {
        if idx + 1 == probs.len() {
            out.push(remaining);
            break;
        }
        if remaining == 0 || mass <= 0.0 {
            out.push(0);
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q).unwrap().sample(rng);
        out.push(draw);
        remaining -= draw;
        mass -= p;
    }
    out
}

/// A base count matrix with sticky diagonals and uneven off-diagonals.
fn base_counts(n: usize, per_row: u64) -> CountMatrix {
    let mut y = CountMatrix::zeros(n);
    for i in 0..n {
        let diag = (per_row as f64 * 0.75) as u64;
        y.set(i, i, diag);
        let rest = per_row - diag;
        // skew the off-diagonal mass so the fixture is not trivially uniform
        let weights: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| 1.0 + ((i + 2 * j) % 5) as f64)
            .collect();
        let wsum: f64 = weights.iter().sum();
        let mut assigned = 0u64;
        let mut slot = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let share = if slot + 1 == weights.len() {
                rest - assigned
            } else {
                (rest as f64 * weights[slot] / wsum) as u64
            };
            y.set(i, j, share);
            assigned += share;
            slot += 1;
        }
    }
    y
}

#[test]
fn residuals_under_the_null_are_calibrated() {
    // n = 25 matches the compound space; the variance window accounts for
    // the degrees of freedom the refit consumes (diagonal residuals are
    // exactly zero under the refitted model, so the ratio is ~(n-2)/n)
    let n = 25;
    let base = base_counts(n, 50_000);
    let fit = fit_model1(&base).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    let mut pooled: Vec<f64> = Vec::new();
    for _ in 0..50 {
        let mut simulated = CountMatrix::zeros(n);
        for i in 0..n {
            let probs: Vec<f64> = (0..n)
                .map(|j| fit.expected(i, j).unwrap() / base.row_total(i) as f64)
                .collect();
            let row = sample_multinomial(base.row_total(i), &probs, &mut rng);
            for (j, &v) in row.iter().enumerate() {
                simulated.set(i, j, v);
            }
        }
        let refit = fit_model1(&simulated).unwrap();
        let report = pearson_residuals(&simulated, &refit).unwrap();
        pooled.extend(report.defined_values());
    }

    let count = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / count;
    let var = pooled.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (count - 1.0);
    let rate = pooled.iter().filter(|r| r.abs() > 2.0).count() as f64 / count;
    assert!(mean.abs() < 0.05, "pooled residual mean {mean}");
    assert!((0.85..=1.15).contains(&var), "pooled residual variance {var}");
    assert!((0.03..=0.07).contains(&rate), "|R|>2 rate {rate}");
}

#[test]
fn clustered_data_blow_past_the_null_rate() {
    // two sticky chains attracted to opposite states, pooled and fitted
    // with the uniform off-diagonal null
    let attract = |target: usize| {
        TransitionMatrix::from_rows(
            (0..4)
                .map(|_| (0..4).map(|j| if j == target { 0.7 } else { 0.1 }).collect())
                .collect(),
        )
        .unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pooled = CountMatrix::zeros(4);
    for s in 0..200 {
        let m = attract(if s % 2 == 0 { 0 } else { 3 });
        let path = sample_path(&m, 100, InitialState::Uniform, &mut rng);
        pooled.add_assign(&count_index_transitions(&path, 4).unwrap()).unwrap();
    }
    let fit = fit_model1(&pooled).unwrap();
    let report = pearson_residuals(&pooled, &fit).unwrap();
    let values = report.defined_values();
    let rate = values.iter().filter(|r| r.abs() > 2.0).count() as f64 / values.len() as f64;
    assert!(
        rate > 0.25,
        "clustered data should push far more than 5% of residuals past 2, got {rate}"
    );
}

#[test]
fn synthetic_standard_normal_diagnostics_recover_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let normal = rand_distr::StandardNormal;
    let values: Vec<Option<f64>> = (0..10_000)
        .map(|_| Some(<rand_distr::StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)))
        .collect();
    let report = ResidualReport::from_matrix(100, values, vec![]);
    let d = residual_normality(&report).unwrap();
    assert!(d.mean.abs() < 0.05, "mean {}", d.mean);
    assert!((d.variance - 1.0).abs() < 0.1, "variance {}", d.variance);
    let binned: usize = d.histogram.iter().map(|b| b.count).sum();
    assert_eq!(binned, 10_000);
}

#[test]
fn neighbor_structured_data_prefer_model_two() {
    let layout = CompoundLayout {
        mood_levels: 5,
        pain_levels: 5,
    };
    let n = layout.n();
    // true chain: sticky, with genuine extra mass on one-step neighbours
    let mut y = CountMatrix::zeros(n);
    let per_row = 1_000_000f64;
    for i in 0..n {
        let (m, p) = (i / 5, i % 5);
        let mut neighbors = Vec::new();
        if p > 0 {
            neighbors.push(m * 5 + p - 1);
        }
        if p < 4 {
            neighbors.push(m * 5 + p + 1);
        }
        if m > 0 {
            neighbors.push((m - 1) * 5 + p);
        }
        if m < 4 {
            neighbors.push((m + 1) * 5 + p);
        }
        let stay = 0.4;
        let neighbor_p = 0.1;
        let covered = stay + neighbor_p * neighbors.len() as f64;
        let other = (1.0 - covered) / (n - 1 - neighbors.len()) as f64;
        for j in 0..n {
            let prob = if j == i {
                stay
            } else if neighbors.contains(&j) {
                neighbor_p
            } else {
                other
            };
            y.set(i, j, (per_row * prob).round() as u64);
        }
    }

    let m1 = fit_model1(&y).unwrap();
    let m2 = fit_model2(&y, layout).unwrap();
    let r1 = pearson_residuals(&y, &m1).unwrap();
    let r2 = pearson_residuals(&y, &m2).unwrap();
    let max_abs = |r: &ResidualReport| {
        r.defined_values()
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max)
    };
    let (a1, a2) = (max_abs(&r1), max_abs(&r2));
    assert!(a1 > 10.0, "model 1 should misfit badly, max |R| = {a1}");
    assert!(a2 <= a1, "model 2 max |R| {a2} should not exceed model 1's {a1}");
    assert!(a2 < 1.0, "model 2 should fit this data nearly exactly, max |R| = {a2}");
}
