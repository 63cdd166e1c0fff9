use carleson_kit::blaschke::{
    default_carleson_depth, interpolation_constants_at_depth, projection_norm_formula,
};
use carleson_kit::riesz::{
    embedding_norm, orthogonalizer_condition, skew_projection_norm, uniform_minimality,
    SubspaceSystem,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{to_value, Check, Report};

const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SequenceInput {
    points: Vec<Complex64>,
}

#[derive(Serialize)]
struct PointRow {
    point: Complex64,
    projection_norm_formula: f64,
    projection_norm_gram: f64,
    minimality: f64,
}

pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let input: SequenceInput = cfg.document()?;
    let depth = match cfg.depth {
        Some(_) => cfg.depth_in(0, carleson_kit::carleson::MAX_DEPTH)?,
        None => default_carleson_depth(&input.points),
    };
    let interp = interpolation_constants_at_depth(&input.points, depth)?;
    let sys = SubspaceSystem::kernels(&input.points)?;
    let minimality = uniform_minimality(&sys)?;
    let mut rows = Vec::with_capacity(input.points.len());
    let mut worst_rel: f64 = 0.0;
    let mut worst_minimality: f64 = 0.0;
    for (i, &p) in input.points.iter().enumerate() {
        let formula = projection_norm_formula(&input.points, p)?;
        let gram = skew_projection_norm(&sys, &[i])?;
        worst_rel = worst_rel.max((formula - gram).abs() / formula);
        worst_minimality = worst_minimality.max((1.0 / gram - minimality.per_subspace[i]).abs());
        rows.push(PointRow {
            point: p,
            projection_norm_formula: formula,
            projection_norm_gram: gram,
            minimality: minimality.per_subspace[i],
        });
    }
    let results = json!({
        "interpolation": to_value(&interp),
        "uniform_minimality": minimality.delta,
        "orthogonalizer_condition": orthogonalizer_condition(&sys)?,
        "embedding_norm": embedding_norm(&sys),
        "points": to_value(&rows),
    });
    let checks = vec![
        Check::at_most("projection_norm_identity", worst_rel, IDENTITY_TOL),
        Check::at_most(
            "minimality_matches_projection",
            worst_minimality,
            IDENTITY_TOL,
        ),
        Check::flag("interpolating", interp.delta > 0.0),
    ];
    Ok(Report::new(
        "sequence",
        json!({ "depth": depth }),
        to_value(&input),
        results,
        checks,
    ))
}
