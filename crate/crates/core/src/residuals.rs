//! Null models for pooled transition counts and Pearson residual
//! diagnostics.
//!
//! Model 1 assumes each state has a stay probability and spreads the
//! remaining mass uniformly over the other states. Model 2 additionally
//! gives each one-step neighbour in mood or pain score its own
//! probability, with the remainder uniform over all other targets. Both
//! are fitted by maximum likelihood (cell count over row total), and both
//! yield expected counts `E[i][j] = N_i * P[i][j]` whose Pearson residuals
//! `(Y - E) / sqrt(E)` are approximately standard normal when the model
//! fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CountMatrix;

/// Which null model a fit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullModel {
    /// Stay probability per state, uniform off-diagonal.
    UniformOffDiagonal,
    /// Stay plus one-step neighbour probabilities, uniform elsewhere.
    NeighborStructured,
}

/// Grid shape of a compound state space: index `(m, p)` is
/// `(m-1) * pain_levels + (p-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompoundLayout {
    pub mood_levels: usize,
    pub pain_levels: usize,
}

impl CompoundLayout {
    pub fn n(&self) -> usize {
        self.mood_levels * self.pain_levels
    }

    fn split(&self, index: usize) -> (usize, usize) {
        (index / self.pain_levels, index % self.pain_levels)
    }

    fn join(&self, m: usize, p: usize) -> usize {
        m * self.pain_levels + p
    }
}

/// Fitted parameters for one source state under model 2.
///
/// Neighbour fields are `None` when the neighbouring score does not exist
/// (grid boundary). `uniform_other` is the probability assigned to each of
/// the `other_cells` non-distinguished target states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborParams {
    pub stay: f64,
    pub pain_down: Option<f64>,
    pub pain_up: Option<f64>,
    pub mood_down: Option<f64>,
    pub mood_up: Option<f64>,
    pub uniform_other: f64,
    pub other_cells: usize,
}

/// Per-row fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RowFit {
    /// The row had zero observed transitions; its parameters are
    /// undefined and it contributes no expected counts or residuals.
    Undefined,
    /// Model 1 parameters.
    Model1 { stay: f64, off_diagonal: f64 },
    /// Model 2 parameters.
    Model2(NeighborParams),
}

/// A maximum-likelihood fit of one null model to a count matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModelFit {
    pub model: NullModel,
    pub n: usize,
    /// Observed row totals `N_i`.
    pub row_totals: Vec<u64>,
    /// Fitted parameters per source state.
    pub rows: Vec<RowFit>,
    expected: Vec<f64>,
}

impl NullModelFit {
    /// Expected count for a cell; `None` if the row's fit is undefined.
    pub fn expected(&self, i: usize, j: usize) -> Option<f64> {
        if self.row_defined(i) {
            Some(self.expected[i * self.n + j])
        } else {
            None
        }
    }

    /// Whether row `i` had observations to fit on.
    pub fn row_defined(&self, i: usize) -> bool {
        !matches!(self.rows[i], RowFit::Undefined)
    }

    /// Row-major expected counts with `None` in undefined rows.
    pub fn expected_matrix(&self) -> Vec<Option<f64>> {
        (0..self.n * self.n)
            .map(|idx| self.expected(idx / self.n, idx % self.n))
            .collect()
    }
}

/// Fit model 1: per-row stay probability, uniform off-diagonal mass.
///
/// Rows with zero total are flagged [`RowFit::Undefined`] and the fit
/// proceeds for the remaining rows.
pub fn fit_model1(y: &CountMatrix) -> Result<NullModelFit> {
    let n = y.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "null models need at least 2 states, got {n}"
        )));
    }
    let mut rows = Vec::with_capacity(n);
    let mut row_totals = Vec::with_capacity(n);
    let mut expected = vec![0.0; n * n];
    for i in 0..n {
        let total = y.row_total(i);
        row_totals.push(total);
        if total == 0 {
            rows.push(RowFit::Undefined);
            continue;
        }
        let nf = total as f64;
        let stay = y.get(i, i) as f64 / nf;
        let off_diagonal = (1.0 - stay) / (n as f64 - 1.0);
        for j in 0..n {
            expected[i * n + j] = nf * if i == j { stay } else { off_diagonal };
        }
        rows.push(RowFit::Model1 { stay, off_diagonal });
    }
    Ok(NullModelFit {
        model: NullModel::UniformOffDiagonal,
        n,
        row_totals,
        rows,
        expected,
    })
}

/// Fit model 2: stay and one-step-neighbour probabilities per source
/// state, uniform over all other targets.
pub fn fit_model2(y: &CountMatrix, layout: CompoundLayout) -> Result<NullModelFit> {
    let n = y.n();
    if n != layout.n() {
        return Err(Error::InvalidInput(format!(
            "count matrix size {n} does not match {}x{} compound layout",
            layout.mood_levels, layout.pain_levels
        )));
    }
    if layout.mood_levels < 2 || layout.pain_levels < 2 {
        return Err(Error::InvalidInput(
            "compound layout needs at least 2 levels per scale".into(),
        ));
    }

    let mut rows = Vec::with_capacity(n);
    let mut row_totals = Vec::with_capacity(n);
    let mut expected = vec![0.0; n * n];
    for i in 0..n {
        let total = y.row_total(i);
        row_totals.push(total);
        if total == 0 {
            rows.push(RowFit::Undefined);
            continue;
        }
        let nf = total as f64;
        let (m, p) = layout.split(i);
        let cell_prob = |j: usize| y.get(i, j) as f64 / nf;

        let stay = cell_prob(i);
        let pain_down = (p > 0).then(|| cell_prob(layout.join(m, p - 1)));
        let pain_up = (p + 1 < layout.pain_levels).then(|| cell_prob(layout.join(m, p + 1)));
        let mood_down = (m > 0).then(|| cell_prob(layout.join(m - 1, p)));
        let mood_up = (m + 1 < layout.mood_levels).then(|| cell_prob(layout.join(m + 1, p)));

        let neighbors = [pain_down, pain_up, mood_down, mood_up];
        let distinguished = 1 + neighbors.iter().flatten().count();
        let other_cells = n - distinguished;
        let covered: f64 = stay + neighbors.iter().flatten().sum::<f64>();
        let uniform_other = if other_cells == 0 {
            0.0
        } else {
            ((1.0 - covered) / other_cells as f64).max(0.0)
        };

        let mut probs = vec![uniform_other; n];
        probs[i] = stay;
        if let Some(q) = pain_down {
            probs[layout.join(m, p - 1)] = q;
        }
        if let Some(q) = pain_up {
            probs[layout.join(m, p + 1)] = q;
        }
        if let Some(q) = mood_down {
            probs[layout.join(m - 1, p)] = q;
        }
        if let Some(q) = mood_up {
            probs[layout.join(m + 1, p)] = q;
        }
        for j in 0..n {
            expected[i * n + j] = nf * probs[j];
        }
        rows.push(RowFit::Model2(NeighborParams {
            stay,
            pain_down,
            pain_up,
            mood_down,
            mood_up,
            uniform_other,
            other_cells,
        }));
    }
    Ok(NullModelFit {
        model: NullModel::NeighborStructured,
        n,
        row_totals,
        rows,
        expected,
    })
}

/// A cell whose residual is undefined because its expected count is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub from: usize,
    pub to: usize,
    pub observed: u64,
}

/// Pearson residual matrix plus its summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub n: usize,
    residuals: Vec<Option<f64>>,
    /// Cells in defined rows where `E = 0`, excluded from summaries.
    pub flagged_zero_expected: Vec<FlaggedCell>,
    pub defined_cells: usize,
    /// Mean over defined residuals; `None` when no cell is defined.
    pub mean: Option<f64>,
    /// Sample variance over defined residuals (needs at least 2 cells).
    pub variance: Option<f64>,
    /// Number of defined cells with `|R| > 2`.
    pub count_abs_over_2: usize,
}

impl ResidualReport {
    /// Assemble a report from a residual matrix, computing the summaries.
    pub fn from_matrix(
        n: usize,
        residuals: Vec<Option<f64>>,
        flagged_zero_expected: Vec<FlaggedCell>,
    ) -> Self {
        let defined: Vec<f64> = residuals.iter().flatten().copied().collect();
        let defined_cells = defined.len();
        let mean = (defined_cells > 0).then(|| defined.iter().sum::<f64>() / defined_cells as f64);
        let variance = (defined_cells > 1).then(|| {
            let m = mean.expect("nonempty");
            defined.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (defined_cells - 1) as f64
        });
        let count_abs_over_2 = defined.iter().filter(|r| r.abs() > 2.0).count();
        ResidualReport {
            n,
            residuals,
            flagged_zero_expected,
            defined_cells,
            mean,
            variance,
            count_abs_over_2,
        }
    }

    /// Residual for a cell; `None` where undefined.
    pub fn residual(&self, i: usize, j: usize) -> Option<f64> {
        self.residuals[i * self.n + j]
    }

    /// Row-major residual matrix.
    pub fn matrix(&self) -> &[Option<f64>] {
        &self.residuals
    }

    /// All defined residual values.
    pub fn defined_values(&self) -> Vec<f64> {
        self.residuals.iter().flatten().copied().collect()
    }
}

/// Pearson residuals of observed counts against a fitted null model.
pub fn pearson_residuals(y: &CountMatrix, fit: &NullModelFit) -> Result<ResidualReport> {
    let n = y.n();
    if n != fit.n {
        return Err(Error::InvalidInput(format!(
            "count matrix size {n} does not match fit size {}",
            fit.n
        )));
    }
    let mut residuals = vec![None; n * n];
    let mut flagged = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let Some(e) = fit.expected(i, j) else { continue };
            if e == 0.0 {
                flagged.push(FlaggedCell {
                    from: i,
                    to: j,
                    observed: y.get(i, j),
                });
                continue;
            }
            residuals[i * n + j] = Some((y.get(i, j) as f64 - e) / e.sqrt());
        }
    }
    Ok(ResidualReport::from_matrix(n, residuals, flagged))
}

/// One histogram bin over `[lo, hi)` (the last bin is closed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// A sampled point of the matching normal density curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub density: f64,
}

/// Normality diagnostics for a residual matrix: moments, a histogram, and
/// a normal density with the same mean and variance for overlay plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityDiagnostics {
    pub mean: f64,
    pub variance: f64,
    pub defined_cells: usize,
    pub count_abs_over_2: usize,
    pub histogram: Vec<HistogramBin>,
    pub normal_curve: Vec<CurvePoint>,
}

/// Number of density samples emitted for the overlay curve.
const CURVE_POINTS: usize = 101;

/// Histogram and matching normal-curve samples for a residual report.
///
/// Fails with an insufficient-data error when fewer than two residuals
/// are defined.
pub fn residual_normality(report: &ResidualReport) -> Result<NormalityDiagnostics> {
    let values = report.defined_values();
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "normality diagnostics need at least 2 defined residuals, got {}",
            values.len()
        )));
    }
    let mean = report.mean.expect("nonempty");
    let variance = report.variance.expect("at least two values");

    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let histogram = if lo == hi {
        vec![HistogramBin {
            lo,
            hi,
            count: values.len(),
        }]
    } else {
        let bins = (values.len() as f64).sqrt().ceil().clamp(5.0, 40.0) as usize;
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in &values {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(b, count)| HistogramBin {
                lo: lo + b as f64 * width,
                hi: lo + (b + 1) as f64 * width,
                count,
            })
            .collect()
    };

    let normal_curve = if variance > 0.0 {
        let sd = variance.sqrt();
        let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
        (0..CURVE_POINTS)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / (CURVE_POINTS - 1) as f64;
                let z = (x - mean) / sd;
                CurvePoint {
                    x,
                    density: norm * (-0.5 * z * z).exp(),
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(NormalityDiagnostics {
        mean,
        variance,
        defined_cells: values.len(),
        count_abs_over_2: report.count_abs_over_2,
        histogram,
        normal_curve,
    })
}
