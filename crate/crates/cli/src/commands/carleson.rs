use std::f64::consts::TAU;

use carleson_kit::carleson::{
    carleson_norm_curve, compare_constants, CurveMeasure, DiscreteMeasure, MAX_DEPTH,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{to_value, Check, Report};

const COMPARABILITY_FACTOR: f64 = 100.0;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct MeasureInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atoms: Option<Vec<(Complex64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polylines: Option<Vec<Vec<Complex64>>>,
}

pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let input: MeasureInput = cfg.document()?;
    let depth = cfg.depth_in(12, MAX_DEPTH)?;
    let (results, checks) = match (&input.atoms, &input.polylines) {
        (Some(atoms), None) => {
            let mu = DiscreteMeasure::new(atoms.clone())?;
            let c = compare_constants(&mu, depth);
            (
                json!({
                    "kind": "discrete",
                    "total_mass": mu.total_mass(),
                    "carleson_norm": c.box_constant / TAU,
                    "comparison": to_value(&c),
                }),
                vec![Check::at_most(
                    "constants_comparable",
                    c.worst_ratio,
                    COMPARABILITY_FACTOR,
                )],
            )
        }
        (None, Some(lines)) => {
            let mu = CurveMeasure::new(lines.clone())?;
            let norm = carleson_norm_curve(&mu, depth);
            (
                json!({
                    "kind": "curve",
                    "total_length": mu.total_length(),
                    "carleson_norm": norm,
                }),
                vec![Check::flag("norm_finite", norm.is_finite())],
            )
        }
        _ => {
            return Err(CliError::Parse(
                "give exactly one of `atoms` or `polylines`".into(),
            ))
        }
    };
    Ok(Report::new(
        "carleson",
        json!({ "depth": depth }),
        to_value(&input),
        results,
        checks,
    ))
}
