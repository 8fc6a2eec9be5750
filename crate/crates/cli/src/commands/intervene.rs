//! `endotype intervene`: apply the mood or pain improvement transform to
//! every cluster matrix and report the stationary-distribution changes.

use serde_json::json;

use endotype_core::error::{Error, Result};
use endotype_core::intervention::{intervene, BetaChoice, InterventionSpec, Target};
use endotype_core::io::{read_model, write_intervention_results, write_modified_matrices};

use crate::config::{BetaSetting, MaxKeyword, ToolkitConfig};
use crate::manifest::ManifestBuilder;
use crate::util::{create_output, ensure_out_dir, open_input};
use crate::InterveneArgs;

pub fn run(args: &InterveneArgs) -> Result<()> {
    let config = ToolkitConfig::load_or_default(args.common.config.as_deref())?;
    let target = match &args.target {
        Some(text) => match text.as_str() {
            "mood" => Target::Mood,
            "pain" => Target::Pain,
            other => {
                return Err(Error::InvalidInput(format!(
                    "target must be 'mood' or 'pain', got '{other}'"
                )))
            }
        },
        None => config.intervention.target,
    };
    let beta_setting = match &args.beta {
        Some(text) => BetaSetting::parse(text)?,
        None => config.intervention.beta,
    };
    let beta = match beta_setting {
        BetaSetting::Value(v) => BetaChoice::Fixed(v),
        BetaSetting::Keyword(MaxKeyword::Max) => BetaChoice::Max,
    };
    let split = args.split.unwrap_or(config.intervention.split);
    let strict_noop = args.strict_noop || config.intervention.strict_noop;
    let spec = InterventionSpec {
        target,
        beta,
        split,
        strict_noop,
    };

    let out = &args.common.out_dir;
    ensure_out_dir(out)?;
    let mut manifest = ManifestBuilder::new(
        "intervene",
        &json!({
            "model": args.model.display().to_string(),
            "spec": spec,
        }),
    )?;
    manifest.input(&args.model)?;

    let model = read_model(open_input(&args.model)?)?;
    let results = intervene(&model.components, &spec)?;

    let target_name = match target {
        Target::Mood => "mood",
        Target::Pain => "pain",
    };
    let results_path = out.join("interventions.csv");
    write_intervention_results(create_output(&results_path)?, &results, target_name, split, &model.states)?;
    let matrices_path = out.join("modified_transitions.csv");
    write_modified_matrices(create_output(&matrices_path)?, &results, &model.states)?;
    manifest.output(&results_path)?;
    manifest.output(&matrices_path)?;
    manifest.write(out)?;
    Ok(())
}
