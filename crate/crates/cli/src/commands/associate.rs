//! `endotype associate`: odds-ratio tables, covariate proportions,
//! coverage counts, and numeric group summaries per cluster.

use serde_json::json;

use endotype_core::association::{
    build_table, coverage, covariate_proportions, group_summary, log_odds_ratio,
    log_odds_ratio_corrected, CoverageReport,
};
use endotype_core::error::Result;
use endotype_core::io::{
    read_assignments, read_covariates, write_cluster_proportions, write_cluster_shares,
    write_coverage, write_group_summary, write_odds_ratios, OddsRow,
};

use crate::config::ToolkitConfig;
use crate::manifest::ManifestBuilder;
use crate::util::{create_output, ensure_out_dir, open_input};
use crate::AssociateArgs;

pub fn run(args: &AssociateArgs) -> Result<()> {
    let config = ToolkitConfig::load_or_default(args.common.config.as_deref())?;
    let haldane = args.haldane || config.association.haldane;
    let out = &args.common.out_dir;
    ensure_out_dir(out)?;

    let mut manifest = ManifestBuilder::new(
        "associate",
        &json!({
            "assignments": args.assignments.display().to_string(),
            "covariates": args.covariates.display().to_string(),
            "haldane": haldane,
            "columns": config.covariates,
        }),
    )?;
    manifest.input(&args.assignments)?;
    manifest.input(&args.covariates)?;

    let assignments = read_assignments(open_input(&args.assignments)?)?;
    let covariates = read_covariates(open_input(&args.covariates)?, &config.covariates)?;
    let clusters = assignments
        .iter()
        .map(|(_, c)| c + 1)
        .max()
        .unwrap_or(0);

    let mut coverage_rows: Vec<CoverageReport> = Vec::new();
    for group in covariates.multi.keys() {
        let values = covariates.values_of(group);
        coverage_rows.push(coverage(&assignments, &covariates, group)?);
        let mut odds_rows = Vec::new();
        for cluster in 0..clusters {
            for value in &values {
                let (table, _) = build_table(&assignments, &covariates, group, value, cluster)?;
                let result = if haldane {
                    log_odds_ratio_corrected(&table)
                } else {
                    log_odds_ratio(&table)?
                };
                odds_rows.push(OddsRow {
                    cluster,
                    covariate: value.clone(),
                    result,
                });
            }
        }

        let odds_path = out.join(format!("odds_ratios_{}.csv", sanitize(group)));
        write_odds_ratios(create_output(&odds_path)?, &odds_rows)?;
        manifest.output(&odds_path)?;

        let (by_cluster, shares) = covariate_proportions(&assignments, &covariates, group)?;
        let proportions_path = out.join(format!("proportions_by_cluster_{}.csv", sanitize(group)));
        write_cluster_proportions(create_output(&proportions_path)?, &by_cluster)?;
        let shares_path = out.join(format!("cluster_share_by_covariate_{}.csv", sanitize(group)));
        write_cluster_shares(create_output(&shares_path)?, &shares)?;
        manifest.output(&proportions_path)?;
        manifest.output(&shares_path)?;
    }

    let coverage_path = out.join("coverage.csv");
    write_coverage(create_output(&coverage_path)?, &coverage_rows)?;
    manifest.output(&coverage_path)?;

    // numeric summaries, broken out by the first single-valued column
    let group_by = covariates.single.keys().next().cloned();
    for numeric in covariates.numeric.keys() {
        let rows = group_summary(&assignments, &covariates, numeric, group_by.as_deref())?;
        let summary_path = out.join(format!("group_summary_{}.csv", sanitize(numeric)));
        write_group_summary(create_output(&summary_path)?, &rows)?;
        manifest.output(&summary_path)?;
    }

    manifest.write(out)?;
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}
