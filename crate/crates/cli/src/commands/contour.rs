use carleson_kit::carleson::MAX_DEPTH;
use carleson_kit::contour::{
    bourgain_contour, verification_samples, verify_region, BoundedFunction, ContourOptions,
    RegionPiece, SingularAtom,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Outcome;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{to_value, Check, Report};
use crate::svg::DiskFigure;

const SAMPLE_LAYERS: u32 = 7;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FunctionInput {
    #[serde(default)]
    zeros: Vec<Complex64>,
    #[serde(default)]
    singular: Vec<SingularAtom>,
    /// |h| at the nodes 2πj/n of a power-of-two grid
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_modulus: Option<Vec<f64>>,
}

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    let input: FunctionInput = cfg.document()?;
    let eps = cfg.epsilon_or(0.1)?;
    let depth = cfg.depth_in(12, MAX_DEPTH)?;
    let constants = cfg.constants.unwrap_or_default();
    let options = ContourOptions::default();
    let phi = BoundedFunction::new(
        &input.zeros,
        input.singular.clone(),
        input.boundary_modulus.clone(),
    )?;
    let contour = bourgain_contour(&phi, eps, constants, options)?;
    let samples = verification_samples(&phi, &contour.region, SAMPLE_LAYERS);
    let v = verify_region(
        &phi,
        &contour.region,
        &contour.polylines,
        eps,
        contour.derived.log_eps_prime,
        &samples,
        depth,
    )?;
    let disks: Vec<(Complex64, f64)> = contour.region.disks().collect();
    let worst_child = contour
        .generations
        .iter()
        .map(|g| g.worst_child_ratio)
        .fold(0.0, f64::max);
    let results = json!({
        "derived": to_value(&contour.derived),
        "generations": to_value(&contour.generations),
        "truncated": contour.truncated,
        "region_pieces": contour.region.pieces.len(),
        "disks": to_value(&disks),
        "polyline_count": contour.polylines.len(),
        "vertex_count": contour.polylines.iter().map(Vec::len).sum::<usize>(),
        "verification": to_value(&v),
    });
    let checks = vec![
        Check::at_most("upper_sandwich_violations", v.upper_violations as f64, 0.0),
        Check::at_most("lower_sandwich_violations", v.lower_violations as f64, 0.0),
        Check::at_most("child_mass_ratio", worst_child, 0.01),
        Check::at_most("contour_carleson_norm", v.carleson_norm, v.norm_target),
    ];
    let params = json!({
        "epsilon": eps,
        "depth": depth,
        "constants": to_value(&constants),
        "options": to_value(&options),
        "sample_layers": SAMPLE_LAYERS,
    });
    let svg = cfg.svg.as_ref().map(|_| {
        DiskFigure {
            boxes: contour
                .region
                .pieces
                .iter()
                .map(|p| match p {
                    RegionPiece::Residual { base, .. } | RegionPiece::ZeroDisks { base, .. } => {
                        *base
                    }
                })
                .collect(),
            zeros: phi.zeros(),
            curves: contour.polylines.clone(),
            points: Vec::new(),
        }
        .render()
    });
    Ok(Outcome {
        report: Report::new("contour", params, to_value(&input), results, checks),
        svg,
    })
}
