//! Cluster-versus-covariate association statistics: 2x2 contingency
//! tables, log odds ratios with asymptotic confidence intervals, covariate
//! proportions, and per-cluster numeric summaries.
//!
//! Covariates are binary memberships that may be multi-valued per
//! participant (someone can report several conditions). For a cluster and
//! a covariate value the table cells are:
//!
//! - `n11`: participants with the value, in the cluster;
//! - `n12`: with the value, not in the cluster;
//! - `n21`: without the value, in the cluster;
//! - `n22`: without the value, not in the cluster;
//!
//! counted over participants who reported the covariate group at all.
//! Non-reporters are excluded and tallied in a coverage report.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal quantile for the 95% confidence interval.
const Z_95: f64 = 1.96;

/// Cluster assignment per participant, 0-based component indices.
pub type Assignments = Vec<(String, usize)>;

/// Covariate data keyed by participant id.
///
/// `multi` holds multi-valued binary memberships (conditions, pain
/// sites); `single` holds one-valued grouping labels (sex); `numeric`
/// holds parseable numbers (age). A participant absent from a group's map
/// did not report that group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CovariateTable {
    pub multi: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    pub single: BTreeMap<String, BTreeMap<String, String>>,
    pub numeric: BTreeMap<String, BTreeMap<String, f64>>,
}

impl CovariateTable {
    /// All values ever reported for a multi-valued group, sorted.
    pub fn values_of(&self, group: &str) -> Vec<String> {
        self.multi
            .get(group)
            .map(|per| {
                let mut set = BTreeSet::new();
                for values in per.values() {
                    set.extend(values.iter().cloned());
                }
                set.into_iter().collect()
            })
            .unwrap_or_default()
    }
}

/// A 2x2 contingency table of nonnegative counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub n11: u64,
    pub n12: u64,
    pub n21: u64,
    pub n22: u64,
}

impl ContingencyTable2x2 {
    pub fn total(&self) -> u64 {
        self.n11 + self.n12 + self.n21 + self.n22
    }

    /// Swap the rows (condition vs no condition).
    pub fn swap_rows(&self) -> Self {
        ContingencyTable2x2 {
            n11: self.n21,
            n12: self.n22,
            n21: self.n11,
            n22: self.n12,
        }
    }
}

/// Log odds ratio with its asymptotic standard error and 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioResult {
    pub log_or: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Whether the +0.5 continuity correction was applied.
    pub corrected: bool,
}

/// How many participants a covariate group covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub group: String,
    pub total: usize,
    pub reporters: usize,
    pub excluded: usize,
}

fn index_assignments(assignments: &Assignments) -> Result<(BTreeMap<&str, usize>, usize)> {
    let mut map = BTreeMap::new();
    let mut clusters = 0usize;
    for (id, cluster) in assignments {
        if map.insert(id.as_str(), *cluster).is_some() {
            return Err(Error::InvalidInput(format!(
                "participant '{id}' appears twice in assignments"
            )));
        }
        clusters = clusters.max(cluster + 1);
    }
    Ok((map, clusters))
}

/// Reporting coverage of one covariate group over the assigned cohort.
pub fn coverage(
    assignments: &Assignments,
    covariates: &CovariateTable,
    group: &str,
) -> Result<CoverageReport> {
    let (by_id, _) = index_assignments(assignments)?;
    let per = covariates
        .multi
        .get(group)
        .ok_or_else(|| Error::InvalidInput(format!("unknown covariate group '{group}'")))?;
    let reporters = by_id.keys().filter(|id| per.contains_key(**id)).count();
    Ok(CoverageReport {
        group: group.to_string(),
        total: by_id.len(),
        reporters,
        excluded: by_id.len() - reporters,
    })
}

/// Build the 2x2 table for one cluster and one covariate value.
///
/// Participants who never reported the covariate group are excluded and
/// returned in the coverage report.
pub fn build_table(
    assignments: &Assignments,
    covariates: &CovariateTable,
    group: &str,
    value: &str,
    cluster: usize,
) -> Result<(ContingencyTable2x2, CoverageReport)> {
    let (by_id, clusters) = index_assignments(assignments)?;
    if cluster >= clusters {
        return Err(Error::InvalidInput(format!(
            "unknown cluster index {cluster}; assignments cover {clusters} clusters"
        )));
    }
    let per = covariates
        .multi
        .get(group)
        .ok_or_else(|| Error::InvalidInput(format!("unknown covariate group '{group}'")))?;
    if !covariates.values_of(group).iter().any(|v| v == value) {
        return Err(Error::InvalidInput(format!(
            "covariate value '{value}' never reported in group '{group}'"
        )));
    }

    let mut table = ContingencyTable2x2 {
        n11: 0,
        n12: 0,
        n21: 0,
        n22: 0,
    };
    let mut reporters = 0usize;
    for (id, &assigned) in &by_id {
        let Some(values) = per.get(*id) else { continue };
        reporters += 1;
        let has = values.contains(value);
        let inside = assigned == cluster;
        match (has, inside) {
            (true, true) => table.n11 += 1,
            (true, false) => table.n12 += 1,
            (false, true) => table.n21 += 1,
            (false, false) => table.n22 += 1,
        }
    }
    let total = by_id.len();
    Ok((
        table,
        CoverageReport {
            group: group.to_string(),
            total,
            reporters,
            excluded: total - reporters,
        },
    ))
}

fn odds_ratio_from_cells(c11: f64, c12: f64, c21: f64, c22: f64, corrected: bool) -> OddsRatioResult {
    let log_or = c11.ln() + c22.ln() - c12.ln() - c21.ln();
    let std_error = (1.0 / c11 + 1.0 / c12 + 1.0 / c21 + 1.0 / c22).sqrt();
    OddsRatioResult {
        log_or,
        std_error,
        ci_low: log_or - Z_95 * std_error,
        ci_high: log_or + Z_95 * std_error,
        corrected,
    }
}

/// Log odds ratio `log(n11 n22 / (n12 n21))` with asymptotic standard
/// error `sqrt(sum of reciprocal cells)` and 95% interval `L +- 1.96 s`.
///
/// Any zero cell is an error naming the offending cell; use
/// [`log_odds_ratio_corrected`] for the +0.5 continuity correction.
pub fn log_odds_ratio(table: &ContingencyTable2x2) -> Result<OddsRatioResult> {
    for (cell, value) in [
        ("n11", table.n11),
        ("n12", table.n12),
        ("n21", table.n21),
        ("n22", table.n22),
    ] {
        if value == 0 {
            return Err(Error::ZeroCell { cell });
        }
    }
    Ok(odds_ratio_from_cells(
        table.n11 as f64,
        table.n12 as f64,
        table.n21 as f64,
        table.n22 as f64,
        false,
    ))
}

/// Log odds ratio with the Haldane-Anscombe +0.5 correction added to
/// every cell; defined even when cells are zero.
pub fn log_odds_ratio_corrected(table: &ContingencyTable2x2) -> OddsRatioResult {
    odds_ratio_from_cells(
        table.n11 as f64 + 0.5,
        table.n12 as f64 + 0.5,
        table.n21 as f64 + 0.5,
        table.n22 as f64 + 0.5,
        true,
    )
}

/// Share of a cluster's reporters naming a covariate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProportionRow {
    pub cluster: usize,
    pub value: String,
    pub proportion: f64,
    /// Reporters in the cluster; 0 flags an empty denominator (the
    /// proportion is reported as 0).
    pub reporters: usize,
}

/// Share of a covariate value's reporters falling into a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterShareRow {
    pub value: String,
    pub cluster: usize,
    pub proportion: f64,
}

/// Both proportion tables for one covariate group.
///
/// The first table answers "what fraction of cluster c's reporters name
/// value v"; the second answers "what fraction of value v's reporters sit
/// in cluster c" (rows per value sum to 1).
pub fn covariate_proportions(
    assignments: &Assignments,
    covariates: &CovariateTable,
    group: &str,
) -> Result<(Vec<ClusterProportionRow>, Vec<ClusterShareRow>)> {
    let (by_id, clusters) = index_assignments(assignments)?;
    let per = covariates
        .multi
        .get(group)
        .ok_or_else(|| Error::InvalidInput(format!("unknown covariate group '{group}'")))?;
    let values = covariates.values_of(group);

    let mut cluster_reporters = vec![0usize; clusters];
    let mut with_value = vec![vec![0usize; clusters]; values.len()];
    let mut value_totals = vec![0usize; values.len()];
    for (id, &cluster) in &by_id {
        let Some(reported) = per.get(*id) else { continue };
        cluster_reporters[cluster] += 1;
        for (vi, v) in values.iter().enumerate() {
            if reported.contains(v) {
                with_value[vi][cluster] += 1;
                value_totals[vi] += 1;
            }
        }
    }

    let mut by_cluster = Vec::new();
    for (cluster, &reporters) in cluster_reporters.iter().enumerate() {
        for (vi, v) in values.iter().enumerate() {
            by_cluster.push(ClusterProportionRow {
                cluster,
                value: v.clone(),
                proportion: if reporters == 0 {
                    0.0
                } else {
                    with_value[vi][cluster] as f64 / reporters as f64
                },
                reporters,
            });
        }
    }
    let mut shares = Vec::new();
    for (vi, v) in values.iter().enumerate() {
        for (cluster, &count) in with_value[vi].iter().enumerate() {
            shares.push(ClusterShareRow {
                value: v.clone(),
                cluster,
                proportion: if value_totals[vi] == 0 {
                    0.0
                } else {
                    count as f64 / value_totals[vi] as f64
                },
            });
        }
    }
    Ok((by_cluster, shares))
}

/// Mean of a numeric covariate and its response rate within one
/// (cluster, group value) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummaryRow {
    pub cluster: usize,
    /// Value of the grouping label, `"all"` when no grouping column is
    /// used, `"(missing)"` when the participant lacks one.
    pub group: String,
    /// Mean over responders; `None` when nobody responded.
    pub mean: Option<f64>,
    /// Percentage of the cell's participants with the numeric value.
    pub response_rate: f64,
    pub responders: usize,
    pub total: usize,
}

/// Per-cluster mean and response rate of a numeric covariate, optionally
/// broken out by a single-valued grouping column.
pub fn group_summary(
    assignments: &Assignments,
    covariates: &CovariateTable,
    numeric: &str,
    group_by: Option<&str>,
) -> Result<Vec<GroupSummaryRow>> {
    let (by_id, _) = index_assignments(assignments)?;
    let values = covariates
        .numeric
        .get(numeric)
        .ok_or_else(|| Error::InvalidInput(format!("unknown numeric covariate '{numeric}'")))?;
    let grouping = match group_by {
        Some(name) => Some(
            covariates
                .single
                .get(name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown grouping column '{name}'")))?,
        ),
        None => None,
    };

    #[derive(Default)]
    struct Cell {
        total: usize,
        responders: usize,
        sum: f64,
    }
    let mut cells: BTreeMap<(usize, String), Cell> = BTreeMap::new();
    for (id, &cluster) in &by_id {
        let label = match grouping {
            Some(per) => per.get(*id).cloned().unwrap_or_else(|| "(missing)".to_string()),
            None => "all".to_string(),
        };
        let cell = cells.entry((cluster, label)).or_default();
        cell.total += 1;
        if let Some(&v) = values.get(*id) {
            cell.responders += 1;
            cell.sum += v;
        }
    }

    Ok(cells
        .into_iter()
        .map(|((cluster, group), cell)| GroupSummaryRow {
            cluster,
            group,
            mean: (cell.responders > 0).then(|| cell.sum / cell.responders as f64),
            response_rate: if cell.total == 0 {
                0.0
            } else {
                100.0 * cell.responders as f64 / cell.total as f64
            },
            responders: cell.responders,
            total: cell.total,
        })
        .collect())
}
