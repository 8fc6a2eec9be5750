//! `endotype ingest`: raw records -> trajectories, rejects report,
//! cohort summary, and optionally pooled compound-state counts.

use serde_json::json;

use endotype_core::error::Result;
use endotype_core::ingest::{
    build_trajectories, count_compound_transitions, parse_records, pool_counts, summarize_cohort,
};
use endotype_core::io::{write_count_matrix, write_json, write_rejects, write_trajectories};

use crate::config::ToolkitConfig;
use crate::manifest::ManifestBuilder;
use crate::util::{create_output, ensure_out_dir, open_input};
use crate::IngestArgs;

pub fn run(args: &IngestArgs) -> Result<()> {
    let mut config = ToolkitConfig::load_or_default(args.common.config.as_deref())?;
    if let Some(gap) = args.max_gap_days {
        config.ingest.max_gap_days = Some(gap);
    }
    let space = config.state_space()?;
    let out = &args.common.out_dir;
    ensure_out_dir(out)?;

    let mut manifest = ManifestBuilder::new(
        "ingest",
        &json!({
            "input": args.input.display().to_string(),
            "counts_out": args.counts_out,
            "scales": config.scales,
            "binarize": config.binarize,
            "ingest": config.ingest,
        }),
    )?;
    manifest.input(&args.input)?;

    let outcome = parse_records(open_input(&args.input)?, &config.ingest, &space)?;
    let trajectories = build_trajectories(&outcome.records, &space)?;
    let summary = summarize_cohort(&outcome.records, &trajectories, &space);

    let trajectories_path = out.join("trajectories.csv");
    write_trajectories(create_output(&trajectories_path)?, &trajectories)?;
    let rejects_path = out.join("rejects.csv");
    write_rejects(create_output(&rejects_path)?, &outcome.rejects)?;
    let summary_path = out.join("summary.json");
    write_json(create_output(&summary_path)?, &summary)?;
    manifest.output(&trajectories_path)?;
    manifest.output(&rejects_path)?;
    manifest.output(&summary_path)?;

    if args.counts_out {
        let per: Vec<_> = trajectories
            .iter()
            .map(|t| count_compound_transitions(t, &space, config.ingest.max_gap_days))
            .collect();
        let pooled = pool_counts(&per, space.compound_count())?;
        let counts_path = out.join("compound_counts.csv");
        write_count_matrix(create_output(&counts_path)?, &pooled, &space.compound_labels())?;
        manifest.output(&counts_path)?;
    }

    manifest.write(out)?;
    Ok(())
}
