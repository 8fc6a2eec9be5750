//! `endotype residuals`: fit a null model to a pooled count matrix and
//! emit expected counts, the Pearson residual matrix, and normality
//! diagnostics.

use std::io::Write;

use serde_json::json;

use endotype_core::error::{Error, Result};
use endotype_core::io::{read_count_matrix, write_json, write_real_matrix};
use endotype_core::residuals::{
    fit_model1, fit_model2, pearson_residuals, residual_normality, CompoundLayout, NullModelFit,
    RowFit,
};

use crate::config::ToolkitConfig;
use crate::manifest::ManifestBuilder;
use crate::util::{create_output, ensure_out_dir, open_input};
use crate::ResidualsArgs;

pub fn run(args: &ResidualsArgs) -> Result<()> {
    let config = ToolkitConfig::load_or_default(args.common.config.as_deref())?;
    let space = config.state_space()?;
    let out = &args.common.out_dir;
    ensure_out_dir(out)?;

    let mut manifest = ManifestBuilder::new(
        "residuals",
        &json!({
            "counts": args.counts.display().to_string(),
            "model": args.model,
            "scales": config.scales,
        }),
    )?;
    manifest.input(&args.counts)?;

    let (counts, labels) = read_count_matrix(open_input(&args.counts)?)?;
    let fit = match args.model {
        1 => fit_model1(&counts)?,
        2 => fit_model2(
            &counts,
            CompoundLayout {
                mood_levels: space.mood.len(),
                pain_levels: space.pain.len(),
            },
        )?,
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown model id {other}; expected 1 or 2"
            )))
        }
    };
    let report = pearson_residuals(&counts, &fit)?;
    let normality = residual_normality(&report)?;

    let expected_path = out.join("expected_counts.csv");
    write_real_matrix(create_output(&expected_path)?, fit.n, &fit.expected_matrix(), &labels)?;
    let residuals_path = out.join("residuals.csv");
    write_real_matrix(create_output(&residuals_path)?, report.n, report.matrix(), &labels)?;
    let diagnostics_path = out.join("diagnostics.json");
    let rows_of = |values: &[Option<f64>]| -> Vec<Vec<Option<f64>>> {
        (0..fit.n).map(|i| values[i * fit.n..(i + 1) * fit.n].to_vec()).collect()
    };
    write_json(
        create_output(&diagnostics_path)?,
        &json!({
            "model": fit.model,
            "states": labels,
            "row_totals": fit.row_totals,
            "undefined_rows": (0..fit.n).filter(|&i| !fit.row_defined(i)).collect::<Vec<_>>(),
            "expected": rows_of(&fit.expected_matrix()),
            "residuals": rows_of(report.matrix()),
            "flagged_zero_expected": report.flagged_zero_expected,
            "defined_cells": report.defined_cells,
            "count_abs_over_2": report.count_abs_over_2,
            "normality": normality,
        }),
    )?;
    manifest.output(&expected_path)?;
    manifest.output(&residuals_path)?;
    manifest.output(&diagnostics_path)?;

    if args.model == 2 {
        let params_path = out.join("model2_params.csv");
        write_model2_params(create_output(&params_path)?, &fit, &labels)?;
        manifest.output(&params_path)?;
    }

    manifest.write(out)?;
    Ok(())
}

fn write_model2_params<W: Write>(writer: W, fit: &NullModelFit, labels: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "state",
        "defined",
        "stay",
        "pain_down",
        "pain_up",
        "mood_down",
        "mood_up",
        "uniform_other",
        "other_cells",
    ])?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for (i, row) in fit.rows.iter().enumerate() {
        match row {
            RowFit::Model2(p) => w.write_record([
                labels[i].as_str(),
                "true",
                &format!("{}", p.stay),
                &fmt(p.pain_down),
                &fmt(p.pain_up),
                &fmt(p.mood_down),
                &fmt(p.mood_up),
                &format!("{}", p.uniform_other),
                &p.other_cells.to_string(),
            ])?,
            _ => w.write_record([labels[i].as_str(), "false", "", "", "", "", "", "", ""])?,
        }
    }
    w.flush()?;
    Ok(())
}
