use carleson_kit::weighted::{classify_weight, p0_norm_check, Weight, DEFAULT_MAX_LOG2};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{to_value, Check, Report};

const DEFAULT_SECTION: usize = 1024;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct WeightInput {
    weight: Weight,
}

pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let input: WeightInput = cfg.document()?;
    let max_log2 = cfg.depth_in(DEFAULT_MAX_LOG2, 24)?;
    if max_log2 < 6 {
        return Err(CliError::Parameter(
            "refinement depth must be at least 6".into(),
        ));
    }
    let section = cfg.section_size.unwrap_or(DEFAULT_SECTION);
    if section == 0 {
        return Err(CliError::Parameter("section_size must be positive".into()));
    }
    let class = classify_weight(&input.weight, max_log2);
    let mut checks = Vec::new();
    if let Some(exact) = class.closed_form_level {
        checks.push(Check::flag(
            "numerical_level_agrees",
            exact == class.numerical_level,
        ));
    }
    // the identity needs w and 1/w integrable
    let p0 = if class.level >= 3 {
        let r = p0_norm_check(&input.weight, section, max_log2)?;
        checks.push(Check::at_most(
            "p0_section_below_limit",
            r.lhs,
            r.rhs * (1.0 + 1e-8),
        ));
        Some(r)
    } else {
        None
    };
    let results = json!({
        "classification": to_value(&class),
        "p0": to_value(&p0),
    });
    let params = json!({ "max_log2": max_log2, "section_size": section });
    Ok(Report::new(
        "weight",
        params,
        to_value(&input),
        results,
        checks,
    ))
}
