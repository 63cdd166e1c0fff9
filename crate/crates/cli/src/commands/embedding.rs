use carleson_kit::blaschke::BlaschkeProduct;
use carleson_kit::construction::condition_sums;
use carleson_kit::disk::quasi_uniform_grid;
use carleson_kit::linalg::CVector;
use carleson_kit::model_space::{
    model_space_system, scalar_kernel_sums, InnerFunction, MatrixEntry, MatrixFunction,
};
use carleson_kit::riesz::embedding_norm;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::MatrixSpec;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{to_value, Check, Report};

const KERNEL_GRID: usize = 4096;
const TOL: f64 = 1e-8;
const RANDOM_DIRECTIONS: usize = 32;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingInput {
    /// zero lists of scalar inner functions θ_n
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inner_functions: Option<Vec<Vec<Complex64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix_family: Option<Vec<MatrixSpec>>,
    /// zero lists of Blaschke products B_n
    #[serde(default)]
    blaschke: Vec<Vec<Complex64>>,
}

fn test_directions(d: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<CVector> = (0..d)
        .map(|i| CVector::from_fn(d, |j, _| Complex64::new((i == j) as u8 as f64, 0.0)))
        .collect();
    for _ in 0..RANDOM_DIRECTIONS {
        let v = CVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let n = v.norm();
        out.push(v / Complex64::new(n, 0.0));
    }
    out
}

pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let input: EmbeddingInput = cfg.document()?;
    let layers = cfg.depth_in(4, 8)?;
    let grid = quasi_uniform_grid(layers);
    let blaschke = input
        .blaschke
        .iter()
        .map(|z| BlaschkeProduct::with_multiplicity(z))
        .collect::<Result<Vec<_>, _>>()?;
    let mut checks = Vec::new();
    let mut extra = serde_json::Map::new();
    let mut params = json!({ "grid_layers": layers, "grid_points": grid.len() });
    let (family, directions) = match (&input.inner_functions, &input.matrix_family) {
        (Some(_), Some(_)) => {
            return Err(CliError::Parse(
                "give `inner_functions` or `matrix_family`, not both".into(),
            ));
        }
        (Some(zs), None) => {
            let inner = zs
                .iter()
                .map(|z| InnerFunction::new(z))
                .collect::<Result<Vec<_>, _>>()?;
            let norm = embedding_norm(&model_space_system(&inner)?);
            let mut identity_gap: f64 = 0.0;
            let mut worst_sum: f64 = 0.0;
            for &l in &grid {
                let (lhs, rhs) = scalar_kernel_sums(&inner, l, KERNEL_GRID)?;
                identity_gap = identity_gap.max((lhs - rhs).abs());
                worst_sum = worst_sum.max(rhs);
            }
            extra.insert("embedding_norm".into(), json!(norm));
            extra.insert("kernel_sum_sup".into(), json!(worst_sum));
            extra.insert("kernel_identity_gap".into(), json!(identity_gap));
            checks.push(Check::at_most(
                "kernel_projection_identity",
                identity_gap,
                TOL,
            ));
            checks.push(Check::at_most(
                "kernel_sums_below_embedding_norm",
                worst_sum,
                norm + TOL,
            ));
            let family: Vec<MatrixFunction> = zs
                .iter()
                .map(|z| MatrixFunction::scalar(MatrixEntry::blaschke(z.clone())))
                .collect();
            (
                family,
                vec![CVector::from_element(1, Complex64::new(1.0, 0.0))],
            )
        }
        (None, Some(specs)) => {
            let family = specs
                .iter()
                .map(MatrixSpec::build)
                .collect::<CliResult<Vec<_>>>()?;
            let d = family.first().map(MatrixFunction::rows).unwrap_or(1);
            let seed = cfg.require_seed()?;
            params["seed"] = json!(seed);
            (family, test_directions(d, seed))
        }
        (None, None) => (Vec::new(), Vec::new()),
    };
    if family.is_empty() && blaschke.is_empty() {
        return Err(CliError::Parse("no family given".into()));
    }
    let sums = condition_sums(&family, &blaschke, &[], &grid, &directions)?;
    if sums.chain_checked {
        checks.push(Check::at_most(
            "determinant_dominates_vector_sum",
            sums.chain_violations as f64,
            0.0,
        ));
    }
    let mut results = json!({ "condition_sums": to_value(&sums) });
    if let Value::Object(m) = &mut results {
        m.extend(extra);
    }
    Ok(Report::new(
        "embedding",
        params,
        to_value(&input),
        results,
        checks,
    ))
}
