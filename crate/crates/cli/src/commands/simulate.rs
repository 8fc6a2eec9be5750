//! `endotype simulate`: generate a synthetic cohort with known component
//! labels from a planted mixture spec (or a fitted model file), with
//! configurable missingness and planted covariate prevalences.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use endotype_core::error::{Error, Result};
use endotype_core::io::read_model;
use endotype_core::matrix::TransitionMatrix;
use endotype_core::sim::{sample_index, sample_path, InitialState};
use endotype_core::state_space::{ReducedState, StateSpace};

use crate::config::{PlantedCovariate, SimulateSection, ToolkitConfig};
use crate::manifest::ManifestBuilder;
use crate::util::{create_output, ensure_out_dir, open_input};
use crate::SimulateArgs;

const START_DATE: (i32, u32, u32) = (2016, 1, 1);

pub fn run(args: &SimulateArgs) -> Result<()> {
    let config = ToolkitConfig::load_or_default(args.common.config.as_deref())?;
    let mut section = config.simulate.clone().unwrap_or_default();
    if let Some(v) = args.participants {
        section.participants = v;
    }
    if let Some(v) = args.length {
        section.length = v;
    }
    if let Some(v) = args.seed {
        section.seed = v;
    }
    if let Some(v) = args.missingness {
        section.missingness = v;
    }
    if !(0.0..=1.0).contains(&section.missingness) {
        return Err(Error::InvalidInput(format!(
            "missingness must lie in [0, 1], got {}",
            section.missingness
        )));
    }

    let (weights, components, covariates): (Vec<f64>, Vec<TransitionMatrix>, Vec<PlantedCovariate>) =
        match &args.model {
            Some(path) => {
                let model = read_model(open_input(path)?)?;
                (model.weights, model.components, Vec::new())
            }
            None => {
                let planted = section.planted.as_ref().ok_or_else(|| {
                    Error::InvalidInput(
                        "simulate needs either --model or a [simulate.planted] spec in the config"
                            .into(),
                    )
                })?;
                planted.validate()?;
                (
                    planted.weights.clone(),
                    planted.components.clone(),
                    planted.covariates.clone(),
                )
            }
        };
    if components.iter().any(|m| m.n() != 4) {
        return Err(Error::InvalidInput(
            "the generator maps states to scores, so components must be 4-state".into(),
        ));
    }

    let space = config.state_space()?;
    let out = &args.common.out_dir;
    ensure_out_dir(out)?;
    let mut manifest = ManifestBuilder::new(
        "simulate",
        &json!({
            "model": args.model.as_ref().map(|p| p.display().to_string()),
            "participants": section.participants,
            "length": section.length,
            "seed": section.seed,
            "missingness": section.missingness,
            "planted": section.planted,
        }),
    )?;
    if let Some(path) = &args.model {
        manifest.input(path)?;
    }

    generate(out, &space, &section, &weights, &components, &covariates, &mut manifest)?;
    manifest.write(out)?;
    Ok(())
}

/// Scores available for each half of each scale under the binarization
/// rule.
struct ScorePools {
    mood: [Vec<u8>; 2],
    pain: [Vec<u8>; 2],
}

impl ScorePools {
    fn new(space: &StateSpace) -> Self {
        let mood_scores = 1..=space.mood.len() as u8;
        let pain_scores = 1..=space.pain.len() as u8;
        let (bad, good): (Vec<u8>, Vec<u8>) =
            mood_scores.partition(|s| space.rule.mood_bad.contains(s));
        let (high, low): (Vec<u8>, Vec<u8>) =
            pain_scores.partition(|s| space.rule.pain_high.contains(s));
        ScorePools {
            mood: [bad, good],
            pain: [low, high],
        }
    }

    /// Uniformly draw a (mood, pain) score pair consistent with the
    /// reduced state.
    fn draw(&self, state: ReducedState, rng: &mut ChaCha8Rng) -> (u8, u8) {
        let (bad, high) = match state {
            ReducedState::BadHigh => (true, true),
            ReducedState::BadLow => (true, false),
            ReducedState::GoodHigh => (false, true),
            ReducedState::GoodLow => (false, false),
        };
        let mood_pool = &self.mood[usize::from(!bad)];
        let pain_pool = &self.pain[usize::from(high)];
        (
            mood_pool[rng.gen_range(0..mood_pool.len())],
            pain_pool[rng.gen_range(0..pain_pool.len())],
        )
    }
}

fn generate(
    out: &Path,
    space: &StateSpace,
    section: &SimulateSection,
    weights: &[f64],
    components: &[TransitionMatrix],
    covariates: &[PlantedCovariate],
    manifest: &mut ManifestBuilder,
) -> Result<()> {
    let pools = ScorePools::new(space);
    let start = NaiveDate::from_ymd_opt(START_DATE.0, START_DATE.1, START_DATE.2)
        .expect("valid start date");
    let id_width = section.participants.to_string().len().max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(section.seed);

    let records_path = out.join("records.csv");
    let labels_path = out.join("labels.csv");
    let mut records = csv::Writer::from_writer(create_output(&records_path)?);
    let mut labels = csv::Writer::from_writer(create_output(&labels_path)?);
    records.write_record(["id", "date", "mood", "pain"])?;
    labels.write_record(["id", "component"])?;

    let mut covariate_rows: Vec<(String, BTreeMap<String, Vec<String>>)> = Vec::new();

    for s in 0..section.participants {
        let id = format!("p{:0width$}", s + 1, width = id_width);
        let component = sample_index(weights, &mut rng);
        labels.write_record([id.as_str(), &(component + 1).to_string()])?;

        let path = sample_path(&components[component], section.length, InitialState::Uniform, &mut rng);
        for (t, &state_idx) in path.iter().enumerate() {
            let state = ReducedState::from_index(state_idx).expect("4-state path");
            let (mood, pain) = pools.draw(state, &mut rng);
            let date = start + Duration::days(t as i64);
            let (mut mood_cell, mut pain_cell) = (mood.to_string(), pain.to_string());
            if section.missingness > 0.0 && rng.gen::<f64>() < section.missingness {
                match rng.gen_range(0..3u8) {
                    0 => mood_cell.clear(),
                    1 => pain_cell.clear(),
                    _ => {
                        mood_cell.clear();
                        pain_cell.clear();
                    }
                }
            }
            records.write_record([
                id.as_str(),
                &date.format("%Y-%m-%d").to_string(),
                &mood_cell,
                &pain_cell,
            ])?;
        }

        if !covariates.is_empty() {
            let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for cov in covariates {
                if rng.gen::<f64>() < cov.prevalence[component] {
                    groups.entry(cov.group.clone()).or_default().push(cov.value.clone());
                }
            }
            covariate_rows.push((id, groups));
        }
    }
    records.flush()?;
    labels.flush()?;
    manifest.output(&records_path)?;
    manifest.output(&labels_path)?;

    if !covariates.is_empty() {
        let covariates_path = out.join("covariates.csv");
        let mut w = csv::Writer::from_writer(create_output(&covariates_path)?);
        let group_names: Vec<String> = {
            let mut names: Vec<String> = covariates.iter().map(|c| c.group.clone()).collect();
            names.sort_unstable();
            names.dedup();
            names
        };
        let mut header = vec!["id".to_string()];
        header.extend(group_names.iter().cloned());
        w.write_record(&header)?;
        for (id, groups) in &covariate_rows {
            let mut row = vec![id.clone()];
            for group in &group_names {
                // participants who report no value still report the group
                let cell = groups
                    .get(group)
                    .map(|values| values.join(";"))
                    .filter(|v| !v.is_empty())
                    .unwrap_or_else(|| "none".to_string());
                row.push(cell);
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        manifest.output(&covariates_path)?;
    }
    Ok(())
}
