//! Readers and writers for the toolkit's file artifacts.
//!
//! Everything is plain text: delimited tables (CSV) for matrices and
//! per-row results, JSON documents for structured records (models,
//! summaries, diagnostics). Floats are written in shortest round-trip
//! form, so identical in-memory results always serialize to identical
//! bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::association::{
    Assignments, ClusterProportionRow, ClusterShareRow, CovariateTable, CoverageReport,
    GroupSummaryRow, OddsRatioResult,
};
use crate::em::{EmConfig, EmTrace, KSelectionRow, MixtureModel, RatioMatrix};
use crate::error::{Error, Result};
use crate::ingest::{RejectedRow, Trajectory, TrajectoryEntry};
use crate::intervention::InterventionResult;
use crate::matrix::{CountMatrix, TransitionMatrix};
use crate::state_space::{CompoundState, ReducedState, StateSpace};
use crate::stationary::StationaryDistribution;

/// Date format used in all emitted tables.
pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Column layout of the odds-ratio tables.
pub const ODDS_RATIO_HEADER: &str = "cluster,covariate,log_or,std_error,ci_low,ci_high";

/// Render a 0-based component index as the reported cluster label.
pub fn cluster_label(index: usize) -> String {
    format!("Cluster {}", index + 1)
}

/// Write a value as pretty-printed JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Read a JSON document.
pub fn read_json<R: Read, T: DeserializeOwned>(reader: R) -> Result<T> {
    Ok(serde_json::from_reader(reader)?)
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// labeled square matrices

/// Write a count matrix with row/column state labels.
pub fn write_count_matrix<W: Write>(writer: W, m: &CountMatrix, labels: &[String]) -> Result<()> {
    check_labels(m.n(), labels)?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["state".to_string()];
    header.extend_from_slice(labels);
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut record = vec![label.clone()];
        record.extend((0..m.n()).map(|j| m.get(i, j).to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a labeled count matrix, returning the matrix and its labels.
pub fn read_count_matrix<R: Read>(reader: R) -> Result<(CountMatrix, Vec<String>)> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.is_empty() || header.get(0) != Some("state") {
        return Err(Error::Schema("count matrix header must start with 'state'".into()));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    if n == 0 {
        return Err(Error::Schema("count matrix has no state columns".into()));
    }
    let mut entries = Vec::with_capacity(n * n);
    let mut row_labels = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != n + 1 {
            return Err(Error::Schema(format!(
                "count matrix row has {} fields, expected {}",
                record.len(),
                n + 1
            )));
        }
        row_labels.push(record.get(0).unwrap_or("").to_string());
        for cell in record.iter().skip(1) {
            let v: u64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("non-integer count '{cell}'")))?;
            entries.push(v);
        }
    }
    if row_labels != labels {
        return Err(Error::Schema(
            "count matrix row labels do not match column labels".into(),
        ));
    }
    Ok((CountMatrix::from_rows(n, entries)?, labels))
}

/// Write a real-valued matrix with labels; `None` cells are left empty.
pub fn write_real_matrix<W: Write>(
    writer: W,
    n: usize,
    values: &[Option<f64>],
    labels: &[String],
) -> Result<()> {
    check_labels(n, labels)?;
    if values.len() != n * n {
        return Err(Error::InvalidInput("matrix entry count mismatch".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["state".to_string()];
    header.extend_from_slice(labels);
    w.write_record(&header)?;
    for i in 0..n {
        let mut record = vec![labels[i].clone()];
        record.extend(
            (0..n).map(|j| values[i * n + j].map(fmt_f64).unwrap_or_default()),
        );
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a transition matrix with row/column state labels.
pub fn write_transition_matrix<W: Write>(
    writer: W,
    m: &TransitionMatrix,
    labels: &[String],
) -> Result<()> {
    let values: Vec<Option<f64>> = m.entries().iter().map(|&v| Some(v)).collect();
    write_real_matrix(writer, m.n(), &values, labels)
}

/// Read a labeled transition matrix, validating row-stochasticity.
pub fn read_transition_matrix<R: Read>(reader: R) -> Result<(TransitionMatrix, Vec<String>)> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.is_empty() || header.get(0) != Some("state") {
        return Err(Error::Schema(
            "transition matrix header must start with 'state'".into(),
        ));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut rows = Vec::new();
    let mut row_labels = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != n + 1 {
            return Err(Error::Schema(format!(
                "transition matrix row has {} fields, expected {}",
                record.len(),
                n + 1
            )));
        }
        row_labels.push(record.get(0).unwrap_or("").to_string());
        let mut row = Vec::with_capacity(n);
        for cell in record.iter().skip(1) {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("non-numeric probability '{cell}'")))?;
            row.push(v);
        }
        rows.push(row);
    }
    if row_labels != labels {
        return Err(Error::Schema(
            "transition matrix row labels do not match column labels".into(),
        ));
    }
    Ok((TransitionMatrix::from_rows(rows)?, labels))
}

fn check_labels(n: usize, labels: &[String]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} labels supplied for {n} states",
            labels.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// trajectories and rejects

/// Write trajectories as `id,date,mood,pain,state` rows.
pub fn write_trajectories<W: Write>(writer: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "date", "mood", "pain", "state"])?;
    for t in trajectories {
        for e in &t.entries {
            w.write_record([
                t.participant_id.as_str(),
                &e.date.format(DATE_FORMAT).to_string(),
                &e.compound.mood.to_string(),
                &e.compound.pain.to_string(),
                e.state.label(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a trajectories file, validating scores, state labels against the
/// binarization rule, and strictly increasing dates per participant.
pub fn read_trajectories<R: Read>(reader: R, space: &StateSpace) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let expect = ["id", "date", "mood", "pain", "state"];
    if header.iter().collect::<Vec<_>>() != expect {
        return Err(Error::Schema(format!(
            "trajectories header must be '{}'",
            expect.join(",")
        )));
    }
    let mut per: BTreeMap<String, Vec<TrajectoryEntry>> = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let id = record.get(0).unwrap_or("").to_string();
        let date = NaiveDate::parse_from_str(record.get(1).unwrap_or(""), DATE_FORMAT)
            .map_err(|_| Error::Schema(format!("bad date '{}'", record.get(1).unwrap_or(""))))?;
        let mood: u8 = record
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Schema("bad mood score".into()))?;
        let pain: u8 = record
            .get(3)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Schema("bad pain score".into()))?;
        let compound = CompoundState::new(mood, pain);
        let state = ReducedState::from_label(record.get(4).unwrap_or(""))
            .ok_or_else(|| Error::Schema(format!("bad state label '{}'", record.get(4).unwrap_or(""))))?;
        let derived = space.binarize(compound)?;
        if derived != state {
            return Err(Error::Schema(format!(
                "state label {state} disagrees with scores (mood={mood}, pain={pain}) under the configured rule"
            )));
        }
        per.entry(id).or_default().push(TrajectoryEntry {
            date,
            compound,
            state,
        });
    }
    let mut out = Vec::new();
    for (participant_id, mut entries) in per {
        entries.sort_by_key(|e| e.date);
        for pair in entries.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(Error::Schema(format!(
                    "duplicate date {} for participant {participant_id}",
                    pair[0].date
                )));
            }
        }
        out.push(Trajectory {
            participant_id,
            entries,
        });
    }
    Ok(out)
}

/// Write the rejects report as `line,reason` rows.
pub fn write_rejects<W: Write>(writer: W, rejects: &[RejectedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["line", "reason"])?;
    for r in rejects {
        w.write_record([r.line.to_string().as_str(), r.reason.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// clustering artifacts

/// Serialized form of a fitted mixture model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub k: usize,
    /// State labels in matrix index order.
    pub states: Vec<String>,
    pub weights: Vec<f64>,
    pub components: Vec<TransitionMatrix>,
    pub seed: u64,
    pub config: EmConfig,
    pub trace: EmTrace,
}

impl ModelFile {
    pub fn new(model: &MixtureModel, trace: &EmTrace, config: &EmConfig, states: Vec<String>) -> Self {
        ModelFile {
            k: model.k(),
            states,
            weights: model.weights.clone(),
            components: model.components.clone(),
            seed: config.seed,
            config: *config,
            trace: trace.clone(),
        }
    }

    /// Rebuild a mixture model (responsibilities are stored separately
    /// and left empty here).
    pub fn into_mixture(self) -> MixtureModel {
        MixtureModel {
            weights: self.weights,
            components: self.components,
            responsibilities: Vec::new(),
        }
    }
}

/// Write a model document as JSON.
pub fn write_model<W: Write>(writer: W, model: &ModelFile) -> Result<()> {
    write_json(writer, model)
}

/// Read a model document, validating basic shape.
pub fn read_model<R: Read>(reader: R) -> Result<ModelFile> {
    let model: ModelFile = read_json(reader)?;
    if model.weights.len() != model.k || model.components.len() != model.k {
        return Err(Error::Schema(
            "model file k disagrees with weights/components".into(),
        ));
    }
    if let Some(first) = model.components.first() {
        if model.states.len() != first.n() {
            return Err(Error::Schema("model file state labels do not match matrix size".into()));
        }
    }
    Ok(model)
}

/// Write hard assignments as `id,cluster` rows (clusters 1-based).
pub fn write_assignments<W: Write>(writer: W, assignments: &Assignments) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "cluster"])?;
    for (id, cluster) in assignments {
        w.write_record([id.as_str(), &(cluster + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read assignments back to 0-based component indices.
pub fn read_assignments<R: Read>(reader: R) -> Result<Assignments> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "cluster"] {
        return Err(Error::Schema("assignments header must be 'id,cluster'".into()));
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for record in r.records() {
        let record = record?;
        let id = record.get(0).unwrap_or("").to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::Schema(format!("duplicate participant '{id}' in assignments")));
        }
        let cluster: usize = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Schema("bad cluster index".into()))?;
        if cluster == 0 {
            return Err(Error::Schema("cluster indices are 1-based in files".into()));
        }
        out.push((id, cluster - 1));
    }
    Ok(out)
}

/// Write the responsibility matrix keyed by participant id.
pub fn write_responsibilities<W: Write>(
    writer: W,
    ids: &[String],
    gamma: &[Vec<f64>],
) -> Result<()> {
    if ids.len() != gamma.len() {
        return Err(Error::InvalidInput("ids and responsibility rows differ in length".into()));
    }
    let k = gamma.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((1..=k).map(|c| format!("p_cluster_{c}")));
    w.write_record(&header)?;
    for (id, row) in ids.iter().zip(gamma) {
        let mut record = vec![id.clone()];
        record.extend(row.iter().map(|&g| fmt_f64(g)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Write the model-selection table as `k,neg_log_likelihood,...` rows.
pub fn write_k_selection<W: Write>(writer: W, rows: &[KSelectionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "neg_log_likelihood", "best_seed", "restarts"])?;
    for row in rows {
        w.write_record([
            row.k.to_string(),
            fmt_f64(row.neg_log_likelihood),
            row.best_seed.to_string(),
            row.restarts.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write cluster-to-pooled transition ratios in long form; indeterminate
/// cells (pooled probability zero) have an empty ratio and a flag.
pub fn write_ratio_matrices<W: Write>(
    writer: W,
    ratios: &[RatioMatrix],
    labels: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "from", "to", "ratio", "flag"])?;
    for (c, ratio) in ratios.iter().enumerate() {
        check_labels(ratio.n, labels)?;
        for i in 0..ratio.n {
            for j in 0..ratio.n {
                let (value, flag) = match ratio.get(i, j) {
                    Some(v) => (fmt_f64(v), ""),
                    None => (String::new(), "indeterminate"),
                };
                w.write_record([
                    cluster_label(c).as_str(),
                    labels[i].as_str(),
                    labels[j].as_str(),
                    value.as_str(),
                    flag,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// stationary and intervention artifacts

/// Write per-cluster stationary vectors as `cluster,state,probability`.
pub fn write_stationary_clusters<W: Write>(
    writer: W,
    distributions: &[StationaryDistribution],
    labels: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "state", "probability"])?;
    for (c, dist) in distributions.iter().enumerate() {
        check_labels(dist.probs.len(), labels)?;
        for (label, &p) in labels.iter().zip(&dist.probs) {
            w.write_record([cluster_label(c).as_str(), label.as_str(), &fmt_f64(p)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write one stationary vector as `state,probability`.
pub fn write_stationary_single<W: Write>(
    writer: W,
    distribution: &StationaryDistribution,
    labels: &[String],
) -> Result<()> {
    check_labels(distribution.probs.len(), labels)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["state", "probability"])?;
    for (label, &p) in labels.iter().zip(&distribution.probs) {
        w.write_record([label.as_str(), &fmt_f64(p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Write intervention results: one row per (cluster, state) with the
/// stationary probability before and after and its delta.
pub fn write_intervention_results<W: Write>(
    writer: W,
    results: &[InterventionResult],
    target: &str,
    split: f64,
    labels: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "target", "beta", "split", "state", "original", "modified", "delta"])?;
    for (c, r) in results.iter().enumerate() {
        check_labels(r.original_stationary.probs.len(), labels)?;
        for (s, label) in labels.iter().enumerate() {
            w.write_record([
                cluster_label(c).as_str(),
                target,
                &fmt_f64(r.beta),
                &fmt_f64(split),
                label.as_str(),
                &fmt_f64(r.original_stationary.probs[s]),
                &fmt_f64(r.modified_stationary.probs[s]),
                &fmt_f64(r.deltas[s]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write original and modified transition probabilities in long form.
pub fn write_modified_matrices<W: Write>(
    writer: W,
    results: &[InterventionResult],
    labels: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "from", "to", "original", "modified"])?;
    for (c, r) in results.iter().enumerate() {
        let n = r.original.n();
        check_labels(n, labels)?;
        for i in 0..n {
            for j in 0..n {
                w.write_record([
                    cluster_label(c).as_str(),
                    labels[i].as_str(),
                    labels[j].as_str(),
                    &fmt_f64(r.original.get(i, j)),
                    &fmt_f64(r.modified.get(i, j)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// association artifacts

/// One odds-ratio table row before formatting.
#[derive(Debug, Clone, PartialEq)]
pub struct OddsRow {
    pub cluster: usize,
    pub covariate: String,
    pub result: OddsRatioResult,
}

/// Write an odds-ratio table in the documented column layout
/// ([`ODDS_RATIO_HEADER`]).
pub fn write_odds_ratios<W: Write>(writer: W, rows: &[OddsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ODDS_RATIO_HEADER.split(','))?;
    for row in rows {
        w.write_record([
            cluster_label(row.cluster).as_str(),
            row.covariate.as_str(),
            &fmt_f64(row.result.log_or),
            &fmt_f64(row.result.std_error),
            &fmt_f64(row.result.ci_low),
            &fmt_f64(row.result.ci_high),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A parsed odds-ratio table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOddsRow {
    pub cluster: String,
    pub covariate: String,
    pub log_or: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Read an odds-ratio table, enforcing the documented header.
pub fn read_odds_ratios<R: Read>(reader: R) -> Result<Vec<ParsedOddsRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let expect: Vec<&str> = ODDS_RATIO_HEADER.split(',').collect();
    if header.iter().collect::<Vec<_>>() != expect {
        return Err(Error::Schema(format!(
            "odds-ratio header must be '{ODDS_RATIO_HEADER}'"
        )));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let number = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("bad number in odds-ratio column {idx}")))
        };
        out.push(ParsedOddsRow {
            cluster: record.get(0).unwrap_or("").to_string(),
            covariate: record.get(1).unwrap_or("").to_string(),
            log_or: number(2)?,
            std_error: number(3)?,
            ci_low: number(4)?,
            ci_high: number(5)?,
        });
    }
    Ok(out)
}

/// Write per-cluster covariate proportions.
pub fn write_cluster_proportions<W: Write>(writer: W, rows: &[ClusterProportionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "covariate", "proportion", "reporters"])?;
    for row in rows {
        w.write_record([
            cluster_label(row.cluster).as_str(),
            row.value.as_str(),
            &fmt_f64(row.proportion),
            &row.reporters.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write per-covariate cluster shares.
pub fn write_cluster_shares<W: Write>(writer: W, rows: &[ClusterShareRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["covariate", "cluster", "proportion"])?;
    for row in rows {
        w.write_record([
            row.value.as_str(),
            cluster_label(row.cluster).as_str(),
            &fmt_f64(row.proportion),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write covariate coverage counts.
pub fn write_coverage<W: Write>(writer: W, reports: &[CoverageReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["group", "total", "reporters", "excluded"])?;
    for r in reports {
        w.write_record([
            r.group.as_str(),
            &r.total.to_string(),
            &r.reporters.to_string(),
            &r.excluded.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write per-cluster numeric summaries; undefined means are left empty.
pub fn write_group_summary<W: Write>(writer: W, rows: &[GroupSummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "group", "mean", "response_rate", "responders", "total"])?;
    for row in rows {
        w.write_record([
            cluster_label(row.cluster).as_str(),
            row.group.as_str(),
            &row.mean.map(fmt_f64).unwrap_or_default(),
            &fmt_f64(row.response_rate),
            &row.responders.to_string(),
            &row.total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// covariate input

/// Column typing for a covariates file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CovariateConfig {
    pub id_column: String,
    /// Columns parsed as numbers (means and response rates).
    pub numeric: Vec<String>,
    /// Single-valued grouping columns.
    pub single: Vec<String>,
    /// Separator inside multi-valued cells.
    pub separator: char,
}

impl Default for CovariateConfig {
    fn default() -> Self {
        CovariateConfig {
            id_column: "id".to_string(),
            numeric: vec!["age".to_string()],
            single: vec!["sex".to_string()],
            separator: ';',
        }
    }
}

/// Read a covariates file: one row per participant, an `id` column, and
/// any number of covariate columns typed by the config. Empty cells mean
/// the participant did not report that covariate.
pub fn read_covariates<R: Read>(reader: R, config: &CovariateConfig) -> Result<CovariateTable> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let id_idx = header
        .iter()
        .position(|h| h == config.id_column)
        .ok_or_else(|| Error::Schema(format!("missing mandatory column '{}'", config.id_column)))?;

    let mut table = CovariateTable::default();
    // register every column as its configured group up front, so a
    // column nobody filled in still shows up with zero coverage
    for (idx, name) in header.iter().enumerate() {
        if idx == id_idx {
            continue;
        }
        if config.numeric.iter().any(|c| c == name) {
            table.numeric.entry(name.to_string()).or_default();
        } else if config.single.iter().any(|c| c == name) {
            table.single.entry(name.to_string()).or_default();
        } else {
            table.multi.entry(name.to_string()).or_default();
        }
    }
    let mut seen = BTreeSet::new();
    for record in r.records() {
        let record = record?;
        let id = record.get(id_idx).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::Schema("empty participant id in covariates".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Schema(format!(
                "duplicate participant '{id}' in covariates"
            )));
        }
        for (idx, name) in header.iter().enumerate() {
            if idx == id_idx {
                continue;
            }
            let cell = record.get(idx).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            if config.numeric.iter().any(|c| c == name) {
                let value: f64 = cell.parse().map_err(|_| {
                    Error::Schema(format!("non-numeric value '{cell}' in column '{name}'"))
                })?;
                table
                    .numeric
                    .entry(name.to_string())
                    .or_default()
                    .insert(id.clone(), value);
            } else if config.single.iter().any(|c| c == name) {
                table
                    .single
                    .entry(name.to_string())
                    .or_default()
                    .insert(id.clone(), cell.to_string());
            } else {
                let values: BTreeSet<String> = cell
                    .split(config.separator)
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect();
                table
                    .multi
                    .entry(name.to_string())
                    .or_default()
                    .insert(id.clone(), values);
            }
        }
    }
    Ok(table)
}
