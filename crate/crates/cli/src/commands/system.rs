use carleson_kit::linalg::{orthonormal_basis, CMatrix};
use carleson_kit::riesz::{
    biorthogonality_defect, dual_system, embedding_norm, extract_critical_subset,
    orthogonalizer_condition, skew_projection_norm, subset_constant, uniform_minimality,
    SubspaceSystem,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{to_value, Check, Report};

const TOL: f64 = 1e-8;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SystemInput {
    /// each subspace as a list of spanning vectors
    subspaces: Vec<Vec<Vec<Complex64>>>,
}

fn frames(input: &SystemInput) -> CliResult<Vec<CMatrix>> {
    let dim = input
        .subspaces
        .first()
        .and_then(|s| s.first())
        .map(Vec::len)
        .ok_or_else(|| CliError::Parse("no subspaces".into()))?;
    input
        .subspaces
        .iter()
        .enumerate()
        .map(|(n, vecs)| {
            if vecs.is_empty() || vecs.iter().any(|v| v.len() != dim) {
                return Err(CliError::Parse(format!(
                    "subspace {n}: vectors must be nonempty of length {dim}"
                )));
            }
            let m = CMatrix::from_fn(dim, vecs.len(), |i, j| vecs[j][i]);
            let q = orthonormal_basis(&m, 1e-12);
            if q.ncols() == 0 {
                return Err(CliError::Parse(format!("subspace {n} is zero")));
            }
            Ok(q)
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let input: SystemInput = cfg.document()?;
    let delta = cfg.delta.unwrap_or(0.5);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CliError::Parameter(format!(
            "delta = {delta} must lie in (0, 1)"
        )));
    }
    let sys = SubspaceSystem::from_frames(&frames(&input)?)?;
    let minimality = uniform_minimality(&sys)?;
    let dual = dual_system(&sys)?;
    let dual_minimality = uniform_minimality(&dual)?;
    let defect = biorthogonality_defect(&sys, &dual).unwrap_or(0.0);
    let mut projection_gap: f64 = 0.0;
    let mut projection_norms = Vec::with_capacity(sys.len());
    for n in 0..sys.len() {
        let p = skew_projection_norm(&sys, &[n])?;
        projection_gap = projection_gap.max((1.0 / p - minimality.per_subspace[n]).abs());
        projection_norms.push(p);
    }
    let critical = extract_critical_subset(&sys, delta)?;
    let mut checks = vec![
        Check::at_most("dual_biorthogonality", defect, TOL),
        Check::at_most("minimality_matches_projection", projection_gap, TOL),
        Check::flag(
            "dual_minimal_together",
            (minimality.delta > TOL) == (dual_minimality.delta > TOL),
        ),
        Check::at_most(
            "embedding_norm_bound",
            embedding_norm(&sys),
            sys.len() as f64 + TOL,
        ),
    ];
    if let Some(c) = &critical {
        let below = subset_constant(&sys, &c.indices) < delta;
        let critical_ok = (0..c.indices.len()).all(|k| {
            let mut rest = c.indices.clone();
            rest.remove(k);
            subset_constant(&sys, &rest) >= delta
        });
        checks.push(Check::flag("critical_subset_below", below));
        checks.push(Check::flag("critical_subset_minimal", critical_ok));
    }
    let results = json!({
        "uniform_minimality": to_value(&minimality),
        "dual_uniform_minimality": dual_minimality.delta,
        "orthogonalizer_condition": orthogonalizer_condition(&sys)?,
        "embedding_norm": embedding_norm(&sys),
        "projection_norms": projection_norms,
        "biorthogonality_defect": defect,
        "critical_subset": to_value(&critical),
    });
    Ok(Report::new(
        "system",
        json!({ "delta": delta }),
        to_value(&input),
        results,
        checks,
    ))
}
