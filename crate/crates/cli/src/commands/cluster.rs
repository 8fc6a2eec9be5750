//! `endotype cluster`: fit the mixture of Markov chains to trajectories
//! and emit the model, assignments, responsibilities, cluster-to-pooled
//! ratios, and the model-selection table.

use serde_json::json;

use endotype_core::em::{assign_clusters, em_fit, log_likelihood, select_k, EmConfig, KSelectionRow};
use endotype_core::error::{Error, Result};
use endotype_core::ingest::{count_reduced_transitions, pool_counts};
use endotype_core::io::{
    read_trajectories, write_assignments, write_k_selection, write_model, write_ratio_matrices,
    write_responsibilities, ModelFile,
};
use endotype_core::matrix::TransitionMatrix;
use endotype_core::state_space::{reduced_state_labels, REDUCED_STATE_COUNT};
use endotype_core::em::transition_ratio;

use crate::config::ToolkitConfig;
use crate::manifest::ManifestBuilder;
use crate::util::{create_output, ensure_out_dir, open_input};
use crate::ClusterArgs;

pub fn run(args: &ClusterArgs) -> Result<()> {
    let mut config = ToolkitConfig::load_or_default(args.common.config.as_deref())?;
    if let Some(gap) = args.max_gap_days {
        config.ingest.max_gap_days = Some(gap);
    }
    if let Some(seed) = args.seed {
        config.em.seed = seed;
    }
    if let Some(eps) = args.epsilon {
        config.em.epsilon = eps;
    }
    if let Some(iters) = args.max_iterations {
        config.em.max_iterations = iters;
    }
    if let Some(restarts) = args.restarts {
        config.em.restarts = restarts;
    }
    if let Some(smoothing) = args.smoothing {
        config.em.smoothing = smoothing;
    }
    let k = args.k.unwrap_or(config.em.k);
    let k_range = args.k_range.as_deref().map(parse_k_range).transpose()?;

    let space = config.state_space()?;
    let out = &args.common.out_dir;
    ensure_out_dir(out)?;

    let mut manifest = ManifestBuilder::new(
        "cluster",
        &json!({
            "trajectories": args.trajectories.display().to_string(),
            "k": k,
            "k_range": k_range,
            "em": config.em,
            "max_gap_days": config.ingest.max_gap_days,
        }),
    )?;
    manifest.input(&args.trajectories)?;

    let trajectories = read_trajectories(open_input(&args.trajectories)?, &space)?;
    if trajectories.is_empty() {
        return Err(Error::Degenerate("no trajectories to cluster".into()));
    }
    let ids: Vec<String> = trajectories.iter().map(|t| t.participant_id.clone()).collect();
    let counts: Vec<_> = trajectories
        .iter()
        .map(|t| count_reduced_transitions(t, config.ingest.max_gap_days))
        .collect();

    // best-of-restarts fit: restart r uses seed + r
    let base = config.em.em_config();
    let mut best: Option<(f64, _, _, EmConfig)> = None;
    for r in 0..config.em.restarts.max(1) {
        let run_config = EmConfig {
            seed: base.seed.wrapping_add(r as u64),
            ..base
        };
        let (model, trace) = em_fit(&counts, k, &run_config)?;
        let ll = log_likelihood(&model, &counts)?;
        if best.as_ref().is_none_or(|(b, ..)| ll > *b) {
            best = Some((ll, model, trace, run_config));
        }
    }
    let (best_ll, model, trace, winning_config) = best.expect("at least one restart");

    let labels = reduced_state_labels();
    let model_path = out.join("model.json");
    write_model(
        create_output(&model_path)?,
        &ModelFile::new(&model, &trace, &winning_config, labels.clone()),
    )?;

    let assignments: Vec<(String, usize)> = ids
        .iter()
        .cloned()
        .zip(assign_clusters(&model))
        .collect();
    let assignments_path = out.join("assignments.csv");
    write_assignments(create_output(&assignments_path)?, &assignments)?;
    let responsibilities_path = out.join("responsibilities.csv");
    write_responsibilities(create_output(&responsibilities_path)?, &ids, &model.responsibilities)?;

    let pooled = pool_counts(&counts, REDUCED_STATE_COUNT)?;
    let pooled_matrix = TransitionMatrix::from_counts_uniform_fallback(&pooled);
    let ratios = transition_ratio(&model, &pooled_matrix)?;
    let ratios_path = out.join("ratios.csv");
    write_ratio_matrices(create_output(&ratios_path)?, &ratios, &labels)?;

    manifest.output(&model_path)?;
    manifest.output(&assignments_path)?;
    manifest.output(&responsibilities_path)?;
    manifest.output(&ratios_path)?;

    let nll_rows: Vec<KSelectionRow> = match k_range {
        Some((lo, hi)) => {
            let ks: Vec<usize> = (lo..=hi).collect();
            select_k(&counts, &ks, &base, config.em.restarts.max(1))?
        }
        // no sweep requested: the table is just the fitted k's row
        None => vec![KSelectionRow {
            k,
            neg_log_likelihood: -best_ll,
            best_seed: winning_config.seed,
            restarts: config.em.restarts.max(1),
        }],
    };
    let nll_path = out.join("nll.csv");
    write_k_selection(create_output(&nll_path)?, &nll_rows)?;
    manifest.output(&nll_path)?;

    manifest.write(out)?;
    Ok(())
}

fn parse_k_range(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "k range must look like 'lo:hi', got '{text}'"
        )));
    }
    let lo: usize = parts[0]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad k range bound '{}'", parts[0])))?;
    let hi: usize = parts[1]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad k range bound '{}'", parts[1])))?;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidInput(format!("empty k range '{text}'")));
    }
    Ok((lo, hi))
}
