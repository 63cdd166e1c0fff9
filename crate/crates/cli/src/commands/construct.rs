use carleson_kit::construction::{
    build_contour_nets, condition_sums, default_n_power, epsilon_net_split, measured_c_alpha,
    product_bound_check, ConstructionConfig, EpsilonNet,
};
use carleson_kit::contour::Region;
use carleson_kit::disk::quasi_uniform_grid;
use carleson_kit::linalg::CVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{MatrixSpec, Outcome};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{to_value, Check, Report};
use crate::svg::DiskFigure;

const VERTEX_STRIDE: usize = 16;
const RANDOM_DIRECTIONS: usize = 32;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConstructInput {
    family: Vec<MatrixSpec>,
}

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    let input: ConstructInput = cfg.document()?;
    if input.family.is_empty() {
        return Err(CliError::Parse("empty family".into()));
    }
    let family = input
        .family
        .iter()
        .map(MatrixSpec::build)
        .collect::<CliResult<Vec<_>>>()?;
    let seed = cfg.require_seed()?;
    let layers = cfg.depth_in(5, 8)?;
    let mut config = ConstructionConfig::new(cfg.alpha_or(0.05)?, cfg.epsilon_or(0.1)?)?;
    config.cv_half_delta = cfg.cv_half_delta;
    if let Some(c) = cfg.constants {
        config.constants = c;
    }
    config.validate()?;

    let ps = build_contour_nets(&family, &config)?;
    let net = EpsilonNet::build(ps.dim, ps.epsilon)?;
    let split = epsilon_net_split(&ps, &family, &net)?;
    let blaschke = split.blaschke_products()?;
    let parts = (0..split.part_count())
        .map(|k| split.part_family(k))
        .collect::<Result<Vec<_>, _>>()?;

    let mut grid = quasi_uniform_grid(layers);
    for m in &split.members {
        grid.extend(m.det_zeros.iter().copied());
        grid.extend(m.zeros());
        grid.extend(m.vertices().step_by(VERTEX_STRIDE));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions: Vec<CVector> = net
        .vectors
        .iter()
        .map(|v| CVector::from_column_slice(v))
        .collect();
    for _ in 0..RANDOM_DIRECTIONS {
        let v = CVector::from_fn(ps.dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let n = v.norm();
        directions.push(v / Complex64::new(n, 0.0));
    }
    let sums = condition_sums(&family, &blaschke, &parts, &grid, &directions)?;
    let n_power = default_n_power(config.alpha, split.log_eps_prime, split.dim)?;
    let regions: Vec<Region> = split.members.iter().map(|m| m.region.clone()).collect();
    let bound = product_bound_check(
        &family,
        &blaschke,
        &regions,
        split.log_eps_prime,
        n_power,
        &grid,
    )?;
    let c_alpha = measured_c_alpha(&split)?;

    let mut checks = vec![
        Check::flag("nets_separated_and_dense", split.nets_valid()),
        Check::at_most(
            "residual_over_epsilon",
            split.max_residual() / split.epsilon,
            1.0,
        ),
        Check::flag("split_is_partition", split.split_is_partition()),
        Check::at_most("hypothesis_margin", split.hypothesis_margin(), 2.0),
        Check::flag("split_sums_dominate", sums.split_dominance),
        Check::flag("product_bound_chain", bound.passed),
    ];
    if sums.chain_checked {
        checks.push(Check::at_most(
            "determinant_dominates_vector_sum",
            sums.chain_violations as f64,
            0.0,
        ));
    }
    let choice = match cfg.delta {
        Some(delta) => {
            let c = config.check_epsilon_choice(c_alpha, delta, &mut rng)?;
            checks.push(Check::at_most("epsilon_choice", c.product, c.bound));
            Some(c)
        }
        None => None,
    };

    let members: Vec<_> = split
        .members
        .iter()
        .map(|m| {
            json!({
                "det_zeros": to_value(&m.det_zeros),
                "points": to_value(&m.points),
                "separated": m.separated,
                "dense": m.dense,
                "max_vertex_modulus": m.max_vertex_modulus,
                "contour_vertices": m.vertices().count(),
                "truncated": m.truncated,
            })
        })
        .collect();
    let results = json!({
        "dimension": split.dim,
        "log_eps_prime": split.log_eps_prime,
        "n_power": n_power,
        "net_size": net.len(),
        "net_certified_distance": net.certified_distance,
        "members": members,
        "condition_sums": to_value(&sums),
        "product_bound": to_value(&bound),
        "c_alpha": c_alpha,
        "epsilon_choice": to_value(&choice),
    });
    let params = json!({
        "epsilon": config.epsilon,
        "alpha": config.alpha,
        "seed": seed,
        "grid_layers": layers,
        "constants": to_value(&config.constants),
        "cv_half_delta": config.cv_half_delta,
        "delta": cfg.delta,
    });
    let svg = cfg.svg.as_ref().map(|_| {
        DiskFigure {
            boxes: Vec::new(),
            zeros: split
                .members
                .iter()
                .flat_map(|m| m.det_zeros.iter().copied())
                .collect(),
            curves: split
                .members
                .iter()
                .flat_map(|m| m.contour.iter().cloned())
                .collect(),
            points: split.members.iter().flat_map(|m| m.zeros()).collect(),
        }
        .render()
    });
    Ok(Outcome {
        report: Report::new("construct", params, to_value(&input), results, checks),
        svg,
    })
}
