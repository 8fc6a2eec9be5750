//! `endotype pipeline`: run simulate -> ingest -> cluster -> stationary
//! -> intervene -> associate from one config file, one subdirectory per
//! stage, with a top-level manifest covering every artifact.

use std::path::PathBuf;

use serde_json::json;

use endotype_core::error::{Error, Result};

use crate::config::ToolkitConfig;
use crate::manifest::{digest_file, FileDigest, Manifest};
use crate::util::{create_output, ensure_out_dir};
use crate::{
    AssociateArgs, ClusterArgs, CommonArgs, IngestArgs, InterveneArgs, PipelineArgs, SimulateArgs,
    StationaryArgs,
};

use super::{associate, cluster, ingest, intervene, simulate, stationary};

pub fn run(args: &PipelineArgs) -> Result<()> {
    let config = ToolkitConfig::load(&args.config)?;
    let simulate_section = config
        .simulate
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("pipeline config needs a [simulate] section".into()))?;
    let planted = simulate_section
        .planted
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("pipeline config needs [simulate.planted]".into()))?;
    if planted.covariates.is_empty() {
        return Err(Error::InvalidInput(
            "pipeline needs at least one [[simulate.planted.covariates]] entry for the associate stage"
                .into(),
        ));
    }

    let out = &args.out_dir;
    ensure_out_dir(out)?;
    let common = |stage: &str| CommonArgs {
        config: Some(args.config.clone()),
        out_dir: out.join(stage),
    };

    simulate::run(&SimulateArgs {
        common: common("simulate"),
        model: None,
        participants: None,
        length: None,
        seed: None,
        missingness: None,
    })?;

    ingest::run(&IngestArgs {
        common: common("ingest"),
        input: out.join("simulate/records.csv"),
        max_gap_days: None,
        counts_out: true,
    })?;

    cluster::run(&ClusterArgs {
        common: common("cluster"),
        trajectories: out.join("ingest/trajectories.csv"),
        k: None,
        k_range: None,
        seed: None,
        epsilon: None,
        max_iterations: None,
        restarts: None,
        smoothing: None,
        max_gap_days: None,
    })?;

    stationary::run(&StationaryArgs {
        common: common("stationary"),
        model: Some(out.join("cluster/model.json")),
        matrix: None,
    })?;

    intervene::run(&InterveneArgs {
        common: common("intervene"),
        model: out.join("cluster/model.json"),
        target: None,
        beta: None,
        split: None,
        strict_noop: false,
    })?;

    associate::run(&AssociateArgs {
        common: common("associate"),
        assignments: out.join("cluster/assignments.csv"),
        covariates: out.join("simulate/covariates.csv"),
        haldane: false,
    })?;

    // top-level manifest over every stage artifact
    let mut outputs: Vec<FileDigest> = Vec::new();
    let mut stack = vec![out.clone()];
    let mut files: Vec<PathBuf> = Vec::new();
    while let Some(dir) = stack.pop() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|entry| entry.path()))
            .collect::<std::io::Result<_>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                stack.push(path);
            } else if path != out.join("manifest.json") {
                files.push(path);
            }
        }
    }
    files.sort();
    for path in &files {
        outputs.push(digest_file(path)?);
    }
    let manifest = Manifest {
        tool: "endotype",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: "pipeline".to_string(),
        config: json!({
            "config_file": args.config.display().to_string(),
            "config": config,
        }),
        inputs: vec![digest_file(&args.config)?],
        outputs,
    };
    let manifest_path = out.join("manifest.json");
    endotype_core::io::write_json(create_output(&manifest_path)?, &manifest)?;
    Ok(())
}
