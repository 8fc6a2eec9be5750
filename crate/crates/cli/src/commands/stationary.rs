//! `endotype stationary`: stationary distributions of a fitted model's
//! cluster matrices, or of one matrix file.

use serde_json::json;

use endotype_core::error::{Error, Result};
use endotype_core::io::{
    read_model, read_transition_matrix, write_stationary_clusters, write_stationary_single,
};
use endotype_core::stationary::stationary;

use crate::manifest::ManifestBuilder;
use crate::util::{create_output, ensure_out_dir, open_input};
use crate::StationaryArgs;

pub fn run(args: &StationaryArgs) -> Result<()> {
    let out = &args.common.out_dir;
    ensure_out_dir(out)?;
    let mut manifest = ManifestBuilder::new(
        "stationary",
        &json!({
            "model": args.model.as_ref().map(|p| p.display().to_string()),
            "matrix": args.matrix.as_ref().map(|p| p.display().to_string()),
        }),
    )?;

    let stationary_path = out.join("stationary.csv");
    match (&args.model, &args.matrix) {
        (Some(model_path), None) => {
            manifest.input(model_path)?;
            let model = read_model(open_input(model_path)?)?;
            let distributions = model
                .components
                .iter()
                .map(stationary)
                .collect::<Result<Vec<_>>>()?;
            write_stationary_clusters(create_output(&stationary_path)?, &distributions, &model.states)?;
        }
        (None, Some(matrix_path)) => {
            manifest.input(matrix_path)?;
            let (matrix, labels) = read_transition_matrix(open_input(matrix_path)?)?;
            let distribution = stationary(&matrix)?;
            write_stationary_single(create_output(&stationary_path)?, &distribution, &labels)?;
        }
        _ => {
            return Err(Error::InvalidInput(
                "exactly one of --model or --matrix is required".into(),
            ))
        }
    }
    manifest.output(&stationary_path)?;
    manifest.write(out)?;
    Ok(())
}
