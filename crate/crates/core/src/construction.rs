//! Point systems on Carleson contours of det Θ_n: α-nets σ_n with attached
//! almost-annihilated vectors e_λ, the Blaschke products B_n, their split by
//! an ε-net of the unit sphere, and the condition sums relating Θ_n to B_n.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blaschke::{check_net, place_net_on_curve, BlaschkeProduct};
use crate::contour::{bourgain_contour, BoundedFunction, ContourConstants, ContourOptions, Region};
use crate::disk::pseudo_hyperbolic_unchecked;
use crate::error::{domain, Error, Result};
use crate::hardy::{BoundaryGrid, OuterFunction};
use crate::linalg::{normalize_phase, smallest_left_singular_vector, CMatrix, CVector, ZERO};
use crate::model_space::{det_theta, MatrixFunction};
use crate::riesz::{orthogonalizer_condition, uniform_minimality, SubspaceSystem};

/// Boundary grid for |det Θ_n| and the comparison outer functions.
pub const DET_GRID_SIZE: usize = 4096;
/// Fresh random probes used to certify an ε-net.
pub const NET_CERTIFY_PROBES: usize = 10_000;
const NET_POOL_PER_DIM: usize = 20_000;
const MAX_NET_SIZE: usize = 50_000;
const NET_SEED: u64 = 0x5eed_0e7;
/// Roots closer than this to the circle count as boundary zeros.
const BOUNDARY_ROOT_TOL: f64 = 1e-9;
const CHAIN_TOL: f64 = 1e-8;
const ALGEBRA_TOL: f64 = 1e-12;
const BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub alpha: f64,
    pub epsilon: f64,
    /// ε allowed by the covering argument; the smaller of the two is used.
    pub covering_epsilon: Option<f64>,
    /// CV(δ/2); estimated from random kernel systems when absent.
    pub cv_half_delta: Option<f64>,
    pub constants: ContourConstants,
    pub options: ContourOptions,
}

impl ConstructionConfig {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            epsilon,
            covering_epsilon: None,
            cv_half_delta: None,
            constants: ContourConstants::default(),
            options: ContourOptions::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.1) {
            return domain(format!("α = {} must lie in (0, 0.1)", self.alpha));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return domain(format!("ε = {} must lie in (0, 1)", self.epsilon));
        }
        if let Some(e) = self.covering_epsilon {
            if !(e > 0.0 && e < 1.0) {
                return domain(format!("covering ε = {e} must lie in (0, 1)"));
            }
        }
        if let Some(cv) = self.cv_half_delta {
            if !(cv >= 1.0 && cv.is_finite()) {
                return domain(format!("CV(δ/2) = {cv} must be a finite constant ≥ 1"));
            }
        }
        Ok(())
    }

    pub fn effective_epsilon(&self) -> f64 {
        self.covering_epsilon
            .map_or(self.epsilon, |e| e.min(self.epsilon))
    }

    /// Check ε·C(α)·CV(δ/2) < δ/10 for a measured C(α).
    pub fn check_epsilon_choice<R: Rng>(
        &self,
        c_alpha: f64,
        delta: f64,
        rng: &mut R,
    ) -> Result<EpsilonChoice> {
        if !(delta > 0.0 && delta <= 1.0) {
            return domain("δ must lie in (0, 1]");
        }
        let (cv, estimated) = match self.cv_half_delta {
            Some(v) => (v, false),
            None => (estimate_cv(delta / 2.0, 400, rng)?.value, true),
        };
        let product = self.effective_epsilon() * c_alpha * cv;
        Ok(EpsilonChoice {
            c_alpha,
            cv_half_delta: cv,
            cv_estimated: estimated,
            product,
            bound: delta / 10.0,
            holds: product < delta / 10.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonChoice {
    pub c_alpha: f64,
    pub cv_half_delta: f64,
    /// CV came from the random-family estimate rather than configuration
    pub cv_estimated: bool,
    pub product: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvEstimate {
    pub value: f64,
    pub accepted: usize,
    pub trials: usize,
}

/// Largest orthogonalizer condition among random kernel systems whose
/// uniform-minimality constant is at least `delta`.
pub fn estimate_cv<R: Rng>(delta: f64, trials: usize, rng: &mut R) -> Result<CvEstimate> {
    let mut value: f64 = 1.0;
    let mut accepted = 0;
    for _ in 0..trials {
        let n = rng.random_range(2..=6);
        let points: Vec<Complex64> = (0..n)
            .map(|_| {
                Complex64::from_polar(
                    rng.random_range(0.0..0.95),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let Ok(sys) = SubspaceSystem::kernels(&points) else {
            continue;
        };
        let Ok(min) = uniform_minimality(&sys) else {
            continue;
        };
        if min.delta >= delta {
            accepted += 1;
            value = value.max(orthogonalizer_condition(&sys)?);
        }
    }
    if accepted == 0 {
        return domain(format!("no random kernel system reached δ = {delta}"));
    }
    Ok(CvEstimate {
        value,
        accepted,
        trials,
    })
}

/// A finite ε-net for phase-normalized unit vectors of C^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonNet {
    pub dim: usize,
    pub radius: f64,
    pub vectors: Vec<Vec<Complex64>>,
    /// largest distance from a certification probe to the net
    pub certified_distance: f64,
}

fn unit_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn random_unit<R: Rng>(rng: &mut R, dim: usize, zero_lead: usize) -> Vec<Complex64> {
    let mut v = CVector::from_fn(dim, |i, _| {
        if i < zero_lead {
            ZERO
        } else {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        }
    });
    let n = v.norm();
    v /= Complex64::new(n, 0.0);
    normalize_phase(&mut v);
    v.iter().copied().collect()
}

fn probe<R: Rng>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    // a share of probes lies on the faces where leading entries vanish
    let lead = if dim > 1 && rng.random_bool(0.1) {
        rng.random_range(1..dim)
    } else {
        0
    };
    random_unit(rng, dim, lead)
}

impl EpsilonNet {
    /// Greedy farthest-point net on a probe pool, certified on fresh probes.
    pub fn build(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("ε-net needs dim ≥ 1".into()));
        }
        if !(radius > 0.0 && radius < 2.0) {
            return domain(format!("net radius {radius} must lie in (0, 2)"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(NET_SEED ^ dim as u64);
        if dim == 1 {
            let net = Self {
                dim,
                radius,
                vectors: vec![vec![Complex64::new(1.0, 0.0)]],
                certified_distance: 0.0,
            };
            return Ok(net);
        }
        let mut pool: Vec<Vec<Complex64>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| Complex64::new((i == j) as u8 as f64, 0.0))
                    .collect()
            })
            .collect();
        pool.extend((0..NET_POOL_PER_DIM * (dim - 1)).map(|_| probe(&mut rng, dim)));
        let mut vectors: Vec<Vec<Complex64>> = Vec::new();
        let mut nearest = vec![f64::INFINITY; pool.len()];
        loop {
            let next = if vectors.is_empty() {
                Some(0)
            } else {
                let (i, d) = nearest.iter().copied().enumerate().fold((0, 0.0), |a, b| {
                    if b.1 > a.1 {
                        b
                    } else {
                        a
                    }
                });
                (d > 0.9 * radius).then_some(i)
            };
            match next {
                Some(i) => {
                    if vectors.len() >= MAX_NET_SIZE {
                        return Err(Error::NetValidity(format!(
                            "more than {MAX_NET_SIZE} vectors needed for radius {radius} in dimension {dim}"
                        )));
                    }
                    let v = pool[i].clone();
                    nearest
                        .par_iter_mut()
                        .zip(pool.par_iter())
                        .for_each(|(m, p)| *m = m.min(unit_distance(p, &v)));
                    vectors.push(v);
                }
                None => {
                    let fresh: Vec<Vec<Complex64>> = (0..NET_CERTIFY_PROBES)
                        .map(|_| probe(&mut rng, dim))
                        .collect();
                    let mut net = Self {
                        dim,
                        radius,
                        vectors: std::mem::take(&mut vectors),
                        certified_distance: 0.0,
                    };
                    let dists: Vec<f64> = fresh.par_iter().map(|p| net.nearest(p).1).collect();
                    let worst = dists.iter().copied().fold(0.0, f64::max);
                    if worst <= radius {
                        net.certified_distance = worst;
                        return Ok(net);
                    }
                    // enlarge the pool with the failing probes and continue
                    vectors = net.vectors;
                    for (p, d) in fresh.into_iter().zip(dists) {
                        nearest.push(d);
                        pool.push(p);
                    }
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// (index, distance) of the closest net vector.
    pub fn nearest(&self, v: &[Complex64]) -> (usize, f64) {
        self.vectors
            .iter()
            .enumerate()
            .map(|(k, u)| (k, unit_distance(u, v)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// Largest distance to the net over `probes` fresh phase-normalized probes.
    pub fn probe_distance<R: Rng>(&self, probes: usize, rng: &mut R) -> f64 {
        (0..probes)
            .map(|_| self.nearest(&probe(rng, self.dim)).1)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetPoint {
    pub lambda: Complex64,
    /// unit e_λ minimizing ‖Θ_n(λ)*e‖
    pub vector: Vec<Complex64>,
    /// ‖Θ_n(λ)*e_λ‖
    pub residual: f64,
    /// net index k once split
    pub part: Option<usize>,
    /// ‖Θ_n(λ)*e^k‖ once split
    pub part_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetMember {
    pub det_zeros: Vec<Complex64>,
    pub region: Region,
    pub contour: Vec<Vec<Complex64>>,
    pub truncated: bool,
    pub points: Vec<NetPoint>,
    pub separated: bool,
    pub dense: bool,
    /// max |B_n| over contour vertices
    pub max_vertex_modulus: f64,
}

impl NetMember {
    pub fn zeros(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn blaschke(&self) -> Result<BlaschkeProduct> {
        BlaschkeProduct::with_multiplicity(&self.zeros())
    }

    pub fn part_zeros(&self, k: usize) -> Vec<Complex64> {
        self.points
            .iter()
            .filter(|p| p.part == Some(k))
            .map(|p| p.lambda)
            .collect()
    }

    /// B_n^k, the identity for an empty part.
    pub fn part_blaschke(&self, k: usize) -> Result<BlaschkeProduct> {
        BlaschkeProduct::with_multiplicity(&self.part_zeros(k))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.contour.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSystem {
    pub dim: usize,
    pub epsilon: f64,
    pub alpha: f64,
    /// log ε′ of the construction; the contour's lower threshold is ε′^d
    pub log_eps_prime: f64,
    pub members: Vec<NetMember>,
    pub net: Option<EpsilonNet>,
}

impl PointSystem {
    pub fn blaschke_products(&self) -> Result<Vec<BlaschkeProduct>> {
        self.members.iter().map(NetMember::blaschke).collect()
    }

    pub fn part_count(&self) -> usize {
        self.net.as_ref().map_or(0, EpsilonNet::len)
    }

    /// {B_n^k}_n for one net index k.
    pub fn part_family(&self, k: usize) -> Result<Vec<BlaschkeProduct>> {
        self.members.iter().map(|m| m.part_blaschke(k)).collect()
    }

    /// Every net is α-separated, α-dense on its vertices and |B_n| < α there.
    pub fn nets_valid(&self) -> bool {
        self.members.iter().all(|m| {
            m.separated && m.dense && (m.contour.is_empty() || m.max_vertex_modulus < self.alpha)
        })
    }

    /// Every point lies in exactly one part and the parts rebuild σ_n.
    pub fn split_is_partition(&self) -> bool {
        let k = self.part_count();
        self.members.iter().all(|m| {
            m.points.iter().all(|p| p.part.is_some_and(|j| j < k))
                && (0..k).map(|j| m.part_zeros(j).len()).sum::<usize>() == m.points.len()
        })
    }

    /// max ‖Θ_n(λ)*e^k‖ / ε over split points.
    pub fn hypothesis_margin(&self) -> f64 {
        self.members
            .iter()
            .flat_map(|m| m.points.iter())
            .filter_map(|p| p.part_residual)
            .fold(0.0, f64::max)
            / self.epsilon
    }

    pub fn max_residual(&self) -> f64 {
        self.members
            .iter()
            .flat_map(|m| m.points.iter())
            .map(|p| p.residual)
            .fold(0.0, f64::max)
    }
}

/// Roots of c_0 + c_1 z + … by companion eigenvalues and Newton polishing.
fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut deg = coeffs.len().saturating_sub(1);
    while deg > 0 && coeffs[deg].norm() <= 1e-13 * top {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let companion = CMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -coeffs[deg - 1 - j] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    });
    let eig = companion
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Domain("companion eigenvalues did not converge".into()))?;
    let p = &coeffs[..=deg];
    let eval = |z: Complex64| {
        p.iter()
            .rev()
            .fold((ZERO, ZERO), |(v, dv), &c| (v * z + c, dv * z + v))
    };
    Ok(eig
        .iter()
        .map(|&r0| {
            let mut r = r0;
            for _ in 0..4 {
                let (v, dv) = eval(r);
                if dv.norm() == 0.0 {
                    break;
                }
                let step = v / dv;
                if !step.is_finite() || step.norm() > 1e-3 * (1.0 + r.norm()) {
                    break;
                }
                r -= step;
            }
            r
        })
        .collect())
}

/// Zeros of det Θ in the open disk, with multiplicity.
pub fn det_zeros(theta: &MatrixFunction) -> Result<Vec<Complex64>> {
    if !theta.is_square() {
        return domain(format!(
            "{}×{} member is not square",
            theta.rows(),
            theta.cols()
        ));
    }
    let entries = theta.entries();
    let d = theta.rows();
    let all_zeros: Vec<Complex64> = entries
        .iter()
        .flat_map(|e| e.zeros.iter().copied())
        .collect();
    let row_degree: usize = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let e = &entries[i * d + j];
                    e.coeffs.len() - 1 + e.zeros.len()
                })
                .max()
                .unwrap_or(0)
        })
        .sum();
    let bound = row_degree + all_zeros.len();
    let size = (2 * (bound + 1)).next_power_of_two().max(8);
    // det Θ · ∏(1 − āz) is a polynomial of degree ≤ bound
    let grid = BoundaryGrid::from_fn(size, |xi| {
        let cleared = all_zeros.iter().fold(Complex64::new(1.0, 0.0), |acc, &a| {
            acc * (1.0 - a.conj() * xi)
        });
        det_theta(theta, xi) * cleared
    })?;
    let coeffs = grid.coefficients();
    let roots = polynomial_roots(&coeffs[..=bound])?;
    if let Some(r) = roots
        .iter()
        .find(|r| (r.norm() - 1.0).abs() < BOUNDARY_ROOT_TOL)
    {
        return domain(format!("det Θ vanishes on the circle near {r}"));
    }
    Ok(roots.into_iter().filter(|r| r.norm() < 1.0).collect())
}

/// det Θ as B·h with B its interior zeros and h outer with |h| = |det Θ| on the circle.
pub fn det_as_bounded_function(
    theta: &MatrixFunction,
) -> Result<(BoundedFunction, Vec<Complex64>)> {
    let zeros = det_zeros(theta)?;
    let modulus: Vec<f64> = (0..DET_GRID_SIZE)
        .into_par_iter()
        .map(|j| det_theta(theta, BoundaryGrid::node(j, DET_GRID_SIZE)).norm())
        .collect();
    if let Some(m) = modulus.iter().find(|m| **m > 1.0 + 1e-8) {
        return domain(format!(
            "member is not contractive on the circle (|det| = {m})"
        ));
    }
    Ok((
        BoundedFunction::new(&zeros, Vec::new(), Some(modulus))?,
        zeros,
    ))
}

fn build_member(
    theta: &MatrixFunction,
    threshold: f64,
    cfg: &ConstructionConfig,
) -> Result<NetMember> {
    let (phi, zeros) = det_as_bounded_function(theta)?;
    let contour = bourgain_contour(&phi, threshold, cfg.constants, cfg.options)?;
    let vertices: Vec<Complex64> = contour.polylines.iter().flatten().copied().collect();
    let sigma = if vertices.is_empty() {
        Vec::new()
    } else {
        place_net_on_curve(&vertices, cfg.alpha)?
    };
    let (separated, dense) = check_net(&sigma, &vertices, cfg.alpha);
    let b = BlaschkeProduct::with_multiplicity(&sigma)?;
    let max_vertex_modulus = vertices
        .par_iter()
        .map(|&z| b.modulus(z))
        .reduce(|| 0.0, f64::max);
    let points = sigma
        .iter()
        .map(|&lambda| {
            let m = theta.eval(lambda);
            let e = smallest_left_singular_vector(&m);
            let residual = (m.adjoint() * &e).norm();
            NetPoint {
                lambda,
                vector: e.iter().copied().collect(),
                residual,
                part: None,
                part_residual: None,
            }
        })
        .collect();
    Ok(NetMember {
        det_zeros: zeros,
        region: contour.region,
        contour: contour.polylines,
        truncated: contour.truncated,
        points,
        separated,
        dense,
        max_vertex_modulus,
    })
}

/// Contours of det Θ_n at threshold ε^d, α-nets σ_n on them and the vectors e_λ.
pub fn build_contour_nets(
    family: &[MatrixFunction],
    cfg: &ConstructionConfig,
) -> Result<PointSystem> {
    cfg.validate()?;
    let Some(first) = family.first() else {
        return domain("empty family");
    };
    let d = first.rows();
    for (n, t) in family.iter().enumerate() {
        if !t.is_square() {
            return domain(format!(
                "member {n} is {}×{}, not square",
                t.rows(),
                t.cols()
            ));
        }
        if t.rows() != d {
            return Err(Error::Dimension(format!(
                "member {n} has dimension {} ≠ {d}",
                t.rows()
            )));
        }
    }
    let eps = cfg.effective_epsilon();
    let threshold = eps.powi(d as i32);
    let derived = cfg.constants.derive(threshold)?;
    let members = family
        .par_iter()
        .map(|t| build_member(t, threshold, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointSystem {
        dim: d,
        epsilon: eps,
        alpha: cfg.alpha,
        log_eps_prime: derived.log_eps_prime / d as f64,
        members,
        net: None,
    })
}

/// Assign each λ to its nearest net vector e^k, requiring ‖e_λ − e^k‖ < ε,
/// and record ‖Θ_n(λ)*e^k‖.
pub fn epsilon_net_split(
    ps: &PointSystem,
    family: &[MatrixFunction],
    net: &EpsilonNet,
) -> Result<PointSystem> {
    if net.dim != ps.dim {
        return Err(Error::Dimension(format!(
            "net dimension {} ≠ {}",
            net.dim, ps.dim
        )));
    }
    if family.len() != ps.members.len() {
        return Err(Error::Dimension("one matrix function per member".into()));
    }
    if net.radius > ps.epsilon {
        return Err(Error::NetValidity(format!(
            "net radius {} exceeds ε = {}",
            net.radius, ps.epsilon
        )));
    }
    let mut out = ps.clone();
    for (member, theta) in out.members.iter_mut().zip(family) {
        for p in &mut member.points {
            let (k, dist) = net.nearest(&p.vector);
            if !(dist < ps.epsilon) {
                return Err(Error::NetValidity(format!(
                    "e_λ at λ = {} lies {dist:.3e} from the net",
                    p.lambda
                )));
            }
            let ek = CVector::from_column_slice(&net.vectors[k]);
            p.part = Some(k);
            p.part_residual = Some((theta.eval(p.lambda).adjoint() * ek).norm());
        }
    }
    out.net = Some(net.clone());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridExtremum {
    pub value: f64,
    pub at: Complex64,
}

fn fold_max(a: Option<GridExtremum>, b: GridExtremum) -> Option<GridExtremum> {
    match a {
        Some(a) if a.value >= b.value => Some(a),
        _ => Some(b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSums {
    /// sup Σ(1 − |θ_n|²) for a scalar family
    pub scalar: Option<GridExtremum>,
    /// sup over λ and unit e of Σ(‖e‖² − ‖Θ_n(λ)*e‖²)
    pub vector: Option<GridExtremum>,
    /// sup Σ(1 − |det Θ_n|²)
    pub determinant: Option<GridExtremum>,
    /// sup Σ(1 − |B_n|²)
    pub blaschke: Option<GridExtremum>,
    /// whether the det sum dominates the vector sum pointwise (square families)
    pub chain_checked: bool,
    pub chain_violations: usize,
    /// inf over the grid of min_n(|θ_n| + ∏_{k≠n}|θ_k|)
    pub delta_prime: Option<GridExtremum>,
    /// sup_λ Σ_n(1 − |B_n^k|²) for each split index k
    pub split_sups: Vec<f64>,
    /// grid points where Σ_n(1−|B_n|²) exceeds Σ_k Σ_n(1−|B_n^k|²)
    pub split_violations: usize,
    /// sup Σ(1 − |B_n|²) ≤ Σ_k split_sups[k]
    pub split_dominance: bool,
}

fn scalar_deficiency_sum(values: &[f64]) -> f64 {
    values.iter().map(|m| 1.0 - m * m).sum()
}

fn delta_prime_at(moduli: &[f64]) -> f64 {
    let n = moduli.len();
    if n == 0 {
        return 1.0;
    }
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * moduli[i];
    }
    let mut suffix = 1.0;
    let mut best = f64::INFINITY;
    for i in (0..n).rev() {
        best = best.min(moduli[i] + prefix[i] * suffix);
        suffix *= moduli[i];
    }
    best
}

/// The suprema of the Carleson-type condition sums over the grids.
pub fn condition_sums(
    family: &[MatrixFunction],
    blaschke: &[BlaschkeProduct],
    split: &[Vec<BlaschkeProduct>],
    lambda_grid: &[Complex64],
    e_grid: &[CVector],
) -> Result<ConditionSums> {
    let d = family.first().map(|t| t.rows());
    if family.iter().any(|t| Some(t.rows()) != d) {
        return Err(Error::Dimension(
            "family members map into different spaces".into(),
        ));
    }
    if let Some(d) = d {
        if e_grid.iter().any(|e| e.len() != d) {
            return Err(Error::Dimension(format!(
                "test vectors must have length {d}"
            )));
        }
    }
    let units: Vec<CVector> = e_grid
        .iter()
        .filter(|e| e.norm() > 0.0)
        .map(|e| e / Complex64::new(e.norm(), 0.0))
        .collect();
    let scalar_family = !family.is_empty() && family.iter().all(|t| t.rows() == 1 && t.cols() == 1);
    let square = family.iter().all(MatrixFunction::is_square);

    struct PointSums {
        z: Complex64,
        scalar: Option<f64>,
        vector: Option<f64>,
        det: Option<f64>,
        chain_bad: bool,
        blaschke: Option<f64>,
        delta_prime: Option<f64>,
        split: Vec<f64>,
    }

    let per_point: Vec<PointSums> = lambda_grid
        .par_iter()
        .map(|&z| {
            let mats: Vec<CMatrix> = family.iter().map(|t| t.eval(z)).collect();
            let det_sum = (!family.is_empty()).then(|| {
                scalar_deficiency_sum(
                    &family
                        .iter()
                        .map(|t| det_theta(t, z).norm())
                        .collect::<Vec<_>>(),
                )
            });
            let vec_sums: Vec<f64> = units
                .iter()
                .map(|e| {
                    mats.iter()
                        .map(|m| 1.0 - (m.adjoint() * e).norm_squared())
                        .sum()
                })
                .collect();
            let vector = (!family.is_empty())
                .then(|| vec_sums.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let chain_bad =
                square && det_sum.is_some_and(|s| vec_sums.iter().any(|&v| s < v - CHAIN_TOL));
            let scalar_moduli: Option<Vec<f64>> = if scalar_family {
                Some(mats.iter().map(|m| m[(0, 0)].norm()).collect())
            } else if !blaschke.is_empty() {
                Some(blaschke.iter().map(|b| b.modulus(z)).collect())
            } else {
                None
            };
            let b_sum = (!blaschke.is_empty()).then(|| {
                scalar_deficiency_sum(&blaschke.iter().map(|b| b.modulus(z)).collect::<Vec<_>>())
            });
            let split_sums = split
                .iter()
                .map(|fam| {
                    scalar_deficiency_sum(&fam.iter().map(|b| b.modulus(z)).collect::<Vec<_>>())
                })
                .collect();
            PointSums {
                z,
                scalar: scalar_family.then(|| det_sum.unwrap_or(0.0)),
                vector: vector.filter(|v| v.is_finite()),
                det: det_sum,
                chain_bad,
                blaschke: b_sum,
                delta_prime: scalar_moduli.map(|m| delta_prime_at(&m)),
                split: split_sums,
            }
        })
        .collect();

    let mut out = ConditionSums {
        scalar: None,
        vector: None,
        determinant: None,
        blaschke: None,
        chain_checked: square && !family.is_empty() && !units.is_empty(),
        chain_violations: 0,
        delta_prime: None,
        split_sups: vec![0.0; split.len()],
        split_violations: 0,
        split_dominance: true,
    };
    for p in &per_point {
        let at = |value| GridExtremum { value, at: p.z };
        if let Some(v) = p.scalar {
            out.scalar = fold_max(out.scalar, at(v));
        }
        if let Some(v) = p.vector {
            out.vector = fold_max(out.vector, at(v));
        }
        if let Some(v) = p.det {
            out.determinant = fold_max(out.determinant, at(v));
        }
        if let Some(v) = p.blaschke {
            out.blaschke = fold_max(out.blaschke, at(v));
            if !split.is_empty() && v > p.split.iter().sum::<f64>() + ALGEBRA_TOL {
                out.split_violations += 1;
            }
        }
        if let Some(v) = p.delta_prime {
            out.delta_prime = match out.delta_prime {
                Some(cur) if cur.value <= v => Some(cur),
                _ => Some(at(v)),
            };
        }
        out.chain_violations += p.chain_bad as usize;
        for (s, v) in out.split_sups.iter_mut().zip(&p.split) {
            *s = s.max(*v);
        }
    }
    if let (Some(b), false) = (out.blaschke, split.is_empty()) {
        out.split_dominance = b.value <= out.split_sups.iter().sum::<f64>() + ALGEBRA_TOL
            && out.split_violations == 0;
    }
    Ok(out)
}

/// Σ(1 − a_i) − (1 − ∏a_i), non-negative for a_i ∈ [0, 1].
pub fn product_inequality_gap(moduli: &[f64]) -> f64 {
    let sum: f64 = moduli.iter().map(|a| 1.0 - a).sum();
    let prod: f64 = moduli.iter().product();
    sum - (1.0 - prod)
}

/// Smallest N with α^N < ε′^d.
pub fn default_n_power(alpha: f64, log_eps_prime: f64, d: usize) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) || !(log_eps_prime < 0.0) {
        return domain("need α ∈ (0, 1) and ε′ < 1");
    }
    let ratio = d as f64 * log_eps_prime / alpha.ln();
    Ok(ratio.floor() as usize + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductBoundReport {
    pub grid_points: usize,
    pub n_power: usize,
    /// max multiplicity of the boundary sets {|det Θ_n| < 1}
    pub d_star: usize,
    /// worst Σ(1−a_i) − (1−∏a_i) over the computed moduli
    pub algebra_min_gap: f64,
    pub algebra_violations: usize,
    pub outer_sum_max: GridExtremum,
    /// 2·d_*·log(1/ε′)
    pub outer_bound: f64,
    /// 2·d·d_*·log(1/ε′), the bound carrying the per-member floor ε′^d
    pub outer_bound_with_dim: f64,
    pub outer_bound_holds: bool,
    /// min over z of Σ_n log|h_n(z)| − d_*·log ε′
    pub outer_product_margin: f64,
    /// min over z of rhs − lhs in the assembled bound
    pub assembled_margin: GridExtremum,
    pub assembled_violations: usize,
    /// max over z of #{n : z ∈ O_n}
    pub region_cover: usize,
    /// points z ∉ O_n where |h_n||B_n|^N > |det Θ_n| (beyond 1e−9 in log)
    pub comparison_violations: usize,
    pub passed: bool,
}

/// Outer h with |h| = max(|det Θ|, ε′^d) on the circle.
pub fn comparison_outer(
    theta: &MatrixFunction,
    log_floor: f64,
    size: usize,
) -> Result<OuterFunction> {
    let logs: Vec<f64> = (0..size)
        .into_par_iter()
        .map(|j| {
            det_theta(theta, BoundaryGrid::node(j, size))
                .norm()
                .ln()
                .max(log_floor)
                .min(0.0)
        })
        .collect();
    OuterFunction::from_log_modulus(&logs)
}

/// Replay of the comparison between Σ(1−|det Θ_n|²) and the Blaschke sums.
/// `regions` holds the sets O_n; pass an empty slice when none are known.
pub fn product_bound_check(
    family: &[MatrixFunction],
    blaschke: &[BlaschkeProduct],
    regions: &[Region],
    log_eps_prime: f64,
    n_power: usize,
    z_grid: &[Complex64],
) -> Result<ProductBoundReport> {
    let Some(first) = family.first() else {
        return domain("empty family");
    };
    if n_power == 0 {
        return domain("N must be at least 1");
    }
    if !(log_eps_prime < 0.0) {
        return domain("ε′ must lie in (0, 1)");
    }
    if blaschke.len() != family.len() || !(regions.is_empty() || regions.len() == family.len()) {
        return Err(Error::Dimension(
            "one Blaschke product and region per member".into(),
        ));
    }
    let d = first.rows();
    if family.iter().any(|t| !t.is_square() || t.rows() != d) {
        return domain("members must be square of a common size");
    }
    let log_floor = d as f64 * log_eps_prime;
    let outers = family
        .iter()
        .map(|t| comparison_outer(t, log_floor, DET_GRID_SIZE))
        .collect::<Result<Vec<_>>>()?;
    let d_star = (0..DET_GRID_SIZE)
        .into_par_iter()
        .map(|j| {
            let xi = BoundaryGrid::node(j, DET_GRID_SIZE);
            family
                .iter()
                .filter(|t| det_theta(t, xi).norm() < 1.0 - 1e-8)
                .count()
        })
        .max()
        .unwrap_or(0);
    let log_inv = -log_eps_prime;
    let outer_bound = 2.0 * d_star as f64 * log_inv;
    let n = n_power as f64;

    struct Local {
        z: Complex64,
        gap: f64,
        outer_sum: f64,
        log_outer: f64,
        margin: f64,
        cover: usize,
        comparison_bad: usize,
    }
    let locals: Vec<Local> = z_grid
        .par_iter()
        .map(|&z| {
            let det: Vec<f64> = family.iter().map(|t| det_theta(t, z).norm()).collect();
            let h_log: Vec<f64> = outers.iter().map(|h| h.log_modulus(z).min(0.0)).collect();
            let b: Vec<f64> = blaschke.iter().map(|b| b.modulus(z)).collect();
            let inside: Vec<bool> = if regions.is_empty() {
                vec![false; family.len()]
            } else {
                regions.iter().map(|r| r.contains(z)).collect()
            };
            let sq = |v: &[f64]| v.iter().map(|a| a * a).collect::<Vec<_>>();
            let gap = product_inequality_gap(&sq(&det)).min(product_inequality_gap(&sq(&b)));
            let outer_sum: f64 = h_log.iter().map(|l| 1.0 - (2.0 * l).exp()).sum();
            let lhs = scalar_deficiency_sum(&det);
            let cover = inside.iter().filter(|&&i| i).count();
            let rhs = outer_sum + n * scalar_deficiency_sum(&b) + cover as f64;
            let comparison_bad = (0..family.len())
                .filter(|&i| !inside[i])
                .filter(|&i| h_log[i] + n * b[i].ln() > det[i].ln() + 1e-9)
                .count();
            Local {
                z,
                gap,
                outer_sum,
                log_outer: h_log.iter().sum(),
                margin: rhs - lhs,
                cover,
                comparison_bad,
            }
        })
        .collect();

    let mut report = ProductBoundReport {
        grid_points: z_grid.len(),
        n_power,
        d_star,
        algebra_min_gap: f64::INFINITY,
        algebra_violations: 0,
        outer_sum_max: GridExtremum {
            value: 0.0,
            at: ZERO,
        },
        outer_bound,
        outer_bound_with_dim: d as f64 * outer_bound,
        outer_bound_holds: true,
        outer_product_margin: f64::INFINITY,
        assembled_margin: GridExtremum {
            value: f64::INFINITY,
            at: ZERO,
        },
        assembled_violations: 0,
        region_cover: 0,
        comparison_violations: 0,
        passed: false,
    };
    for l in &locals {
        report.algebra_min_gap = report.algebra_min_gap.min(l.gap);
        report.algebra_violations += (l.gap < -ALGEBRA_TOL) as usize;
        if l.outer_sum > report.outer_sum_max.value {
            report.outer_sum_max = GridExtremum {
                value: l.outer_sum,
                at: l.z,
            };
        }
        report.outer_product_margin = report
            .outer_product_margin
            .min(l.log_outer - d_star as f64 * log_eps_prime);
        if l.margin < report.assembled_margin.value {
            report.assembled_margin = GridExtremum {
                value: l.margin,
                at: l.z,
            };
        }
        report.assembled_violations += (l.margin < -BOUND_TOL) as usize;
        report.region_cover = report.region_cover.max(l.cover);
        report.comparison_violations += l.comparison_bad;
    }
    report.outer_bound_holds = report.outer_sum_max.value <= outer_bound + BOUND_TOL;
    report.passed = report.algebra_violations == 0
        && report.outer_bound_holds
        && report.assembled_violations == 0;
    Ok(report)
}

/// C(α): the largest orthogonalizer condition of the kernel systems on σ_n.
pub fn measured_c_alpha(ps: &PointSystem) -> Result<f64> {
    let mut c: f64 = 1.0;
    for m in &ps.members {
        if m.points.len() > 1 {
            c = c.max(orthogonalizer_condition(&SubspaceSystem::kernels(
                &m.zeros(),
            )?)?);
        }
    }
    Ok(c)
}

/// min over pairs of distinct points of the pseudo-hyperbolic distance.
pub fn separation(points: &[Complex64]) -> f64 {
    let mut best: f64 = 1.0;
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            best = best.min(pseudo_hyperbolic_unchecked(a, b));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::blaschke_factor;
    use crate::model_space::MatrixEntry;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> ConstructionConfig {
        ConstructionConfig::new(0.05, 0.1).unwrap()
    }

    fn grid() -> Vec<Complex64> {
        crate::disk::quasi_uniform_grid(5)
    }

    #[test]
    fn polynomial_roots_recover_known_roots() {
        // (z − 0.5)(z + 0.25i)(z − 2)
        let r = [c(0.5, 0.0), c(0.0, -0.25), c(2.0, 0.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for &a in &r {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (k, &v) in coeffs.iter().enumerate() {
                next[k + 1] += v;
                next[k] -= a * v;
            }
            coeffs = next;
        }
        let mut found = polynomial_roots(&coeffs).unwrap();
        found.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        assert_abs_diff_eq!(found[0], r[1], epsilon = 1e-12);
        assert_abs_diff_eq!(found[1], r[0], epsilon = 1e-12);
        assert_abs_diff_eq!(found[2], r[2], epsilon = 1e-12);
    }

    #[test]
    fn det_zeros_of_diagonal_blaschke_matrix() {
        let mu = c(0.3, -0.2);
        let nu = c(-0.5, 0.4);
        let t = MatrixFunction::diagonal(vec![
            MatrixEntry::blaschke(vec![mu]),
            MatrixEntry::blaschke(vec![nu]),
        ]);
        let mut z = det_zeros(&t).unwrap();
        z.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_eq!(z.len(), 2);
        assert_abs_diff_eq!(z[0], nu, epsilon = 1e-10);
        assert_abs_diff_eq!(z[1], mu, epsilon = 1e-10);
    }

    #[test]
    fn det_zeros_of_polynomial_contraction() {
        // 0.5·(z − 0.2): single zero at 0.2
        let t = MatrixFunction::scalar(MatrixEntry::polynomial(vec![c(-0.1, 0.0), c(0.5, 0.0)]));
        let z = det_zeros(&t).unwrap();
        assert_eq!(z.len(), 1);
        assert_abs_diff_eq!(z[0], c(0.2, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn boundary_zero_is_rejected() {
        let t = MatrixFunction::scalar(MatrixEntry::polynomial(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        assert!(matches!(det_zeros(&t), Err(Error::Domain(_))));
    }

    #[test]
    fn scalar_blaschke_family_nets() {
        let lambdas = [c(0.5, 0.0), c(-0.3, 0.6), c(0.1, -0.85)];
        let family: Vec<_> = lambdas
            .iter()
            .map(|&l| MatrixFunction::scalar(MatrixEntry::blaschke(vec![l])))
            .collect();
        let ps = build_contour_nets(&family, &cfg()).unwrap();
        assert!(ps.nets_valid());
        for (m, &l) in ps.members.iter().zip(&lambdas) {
            assert!(!m.points.is_empty());
            for p in &m.points {
                let b = blaschke_factor(l, p.lambda).unwrap().norm();
                assert_abs_diff_eq!(p.residual, b, epsilon = 1e-12);
                assert!(p.residual < ps.epsilon);
            }
            for z in m.vertices() {
                assert!(pseudo_hyperbolic_unchecked(z, l) < 1e-3);
            }
        }
    }

    #[test]
    fn large_determinant_gives_empty_net() {
        // |det| ≥ 0.9 everywhere
        let t = MatrixFunction::diagonal(vec![
            MatrixEntry::polynomial(vec![c(0.95, 0.0), c(0.0, 0.0)]),
            MatrixEntry::constant(c(1.0, 0.0)),
        ]);
        let ps = build_contour_nets(&[t], &cfg()).unwrap();
        assert!(ps.members[0].contour.is_empty());
        assert!(ps.members[0].points.is_empty());
        assert!(ps.nets_valid());
    }

    #[test]
    fn diagonal_member_attaches_first_basis_vector() {
        let mu = c(0.2, 0.3);
        let t = MatrixFunction::diagonal(vec![
            MatrixEntry::blaschke(vec![mu]),
            MatrixEntry::constant(c(1.0, 0.0)),
        ]);
        let ps = build_contour_nets(&[t], &ConstructionConfig::new(0.05, 0.3).unwrap()).unwrap();
        let m = &ps.members[0];
        assert!(!m.points.is_empty());
        for p in &m.points {
            assert_abs_diff_eq!(p.vector[0], c(1.0, 0.0), epsilon = 1e-9);
            assert_abs_diff_eq!(p.vector[1].norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_square_member_is_rejected() {
        let t = MatrixFunction::new(
            1,
            2,
            vec![MatrixEntry::constant(ZERO), MatrixEntry::constant(ZERO)],
        )
        .unwrap();
        assert!(matches!(
            build_contour_nets(&[t], &cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn one_dimensional_split_has_one_part() {
        let family = vec![MatrixFunction::scalar(MatrixEntry::blaschke(vec![c(
            0.4, 0.1,
        )]))];
        let ps = build_contour_nets(&family, &cfg()).unwrap();
        let net = EpsilonNet::build(1, ps.epsilon).unwrap();
        let split = epsilon_net_split(&ps, &family, &net).unwrap();
        assert_eq!(split.part_count(), 1);
        assert!(split.split_is_partition());
        assert_eq!(split.members[0].part_zeros(0), split.members[0].zeros());
    }

    #[test]
    fn net_is_certified_in_two_dimensions() {
        let net = EpsilonNet::build(2, 0.3).unwrap();
        assert!(net.certified_distance <= 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(net.probe_distance(2000, &mut rng) <= 0.3);
    }

    #[test]
    fn split_matches_exact_partition() {
        let e1 = vec![c(1.0, 0.0), ZERO];
        let e2 = vec![ZERO, c(1.0, 0.0)];
        let net = EpsilonNet {
            dim: 2,
            radius: 0.1,
            vectors: vec![e1.clone(), e2.clone()],
            certified_distance: 0.0,
        };
        let point = |l: Complex64, v: &Vec<Complex64>| NetPoint {
            lambda: l,
            vector: v.clone(),
            residual: 0.0,
            part: None,
            part_residual: None,
        };
        let member = NetMember {
            det_zeros: vec![],
            region: Region::default(),
            contour: vec![],
            truncated: false,
            points: vec![
                point(c(0.1, 0.0), &e1),
                point(c(0.5, 0.0), &e2),
                point(c(-0.5, 0.0), &e1),
            ],
            separated: true,
            dense: true,
            max_vertex_modulus: 0.0,
        };
        let ps = PointSystem {
            dim: 2,
            epsilon: 0.1,
            alpha: 0.05,
            log_eps_prime: -10.0,
            members: vec![member],
            net: None,
        };
        let id = MatrixFunction::scalar_identity(MatrixEntry::constant(c(1.0, 0.0)), 2);
        let split = epsilon_net_split(&ps, &[id], &net).unwrap();
        assert_eq!(
            split.members[0].part_zeros(0),
            vec![c(0.1, 0.0), c(-0.5, 0.0)]
        );
        assert_eq!(split.members[0].part_zeros(1), vec![c(0.5, 0.0)]);
        assert!(split.split_is_partition());
    }

    #[test]
    fn far_vector_is_a_net_error() {
        let net = EpsilonNet {
            dim: 2,
            radius: 0.1,
            vectors: vec![vec![c(1.0, 0.0), ZERO]],
            certified_distance: 0.0,
        };
        let ps = PointSystem {
            dim: 2,
            epsilon: 0.1,
            alpha: 0.05,
            log_eps_prime: -10.0,
            members: vec![NetMember {
                det_zeros: vec![],
                region: Region::default(),
                contour: vec![],
                truncated: false,
                points: vec![NetPoint {
                    lambda: ZERO,
                    vector: vec![ZERO, c(1.0, 0.0)],
                    residual: 0.0,
                    part: None,
                    part_residual: None,
                }],
                separated: true,
                dense: true,
                max_vertex_modulus: 0.0,
            }],
            net: None,
        };
        let id = MatrixFunction::scalar_identity(MatrixEntry::constant(c(1.0, 0.0)), 2);
        assert!(matches!(
            epsilon_net_split(&ps, &[id], &net),
            Err(Error::NetValidity(_))
        ));
    }

    #[test]
    fn split_on_two_dimensional_family_keeps_hypothesis() {
        let family = vec![
            MatrixFunction::diagonal(vec![
                MatrixEntry::blaschke(vec![c(0.3, 0.0)]),
                MatrixEntry::blaschke(vec![c(-0.4, 0.2)]),
            ]),
            MatrixFunction::diagonal(vec![
                MatrixEntry::constant(c(1.0, 0.0)),
                MatrixEntry::blaschke(vec![c(0.1, 0.6)]),
            ]),
        ];
        let config = ConstructionConfig::new(0.05, 0.3).unwrap();
        let ps = build_contour_nets(&family, &config).unwrap();
        let net = EpsilonNet::build(2, ps.epsilon).unwrap();
        let split = epsilon_net_split(&ps, &family, &net).unwrap();
        assert!(split.split_is_partition());
        assert!(split.hypothesis_margin() < 2.0);
        for m in &split.members {
            for p in &m.points {
                assert!(p.part_residual.unwrap() <= p.residual + ps.epsilon + 1e-12);
            }
            let mut parts: Vec<Complex64> = (0..split.part_count())
                .flat_map(|k| m.part_zeros(k))
                .collect();
            let mut all = m.zeros();
            let key = |z: &Complex64| (z.re, z.im);
            parts.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            all.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            assert_eq!(parts, all);
        }
    }

    #[test]
    fn single_factor_condition_sum() {
        let b = BlaschkeProduct::new(&[ZERO]).unwrap();
        let mut g = grid();
        g.push(ZERO);
        let s = condition_sums(&[], &[b], &[], &g, &[]).unwrap();
        let sup = s.blaschke.unwrap();
        assert_abs_diff_eq!(sup.value, 1.0, epsilon = 1e-15);
        assert_eq!(sup.at, ZERO);
    }

    #[test]
    fn isotropic_family_vector_sum_is_scalar_sum() {
        let thetas = [c(0.3, 0.1), c(-0.5, 0.2)];
        let matrix: Vec<_> = thetas
            .iter()
            .map(|&l| MatrixFunction::scalar_identity(MatrixEntry::blaschke(vec![l]), 2))
            .collect();
        let scalar: Vec<_> = thetas
            .iter()
            .map(|&l| MatrixFunction::scalar(MatrixEntry::blaschke(vec![l])))
            .collect();
        let e = vec![CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)])];
        for &z in &grid()[..50] {
            let v = condition_sums(&matrix, &[], &[], &[z], &e)
                .unwrap()
                .vector
                .unwrap()
                .value;
            let s = condition_sums(
                &scalar,
                &[],
                &[],
                &[z],
                &[CVector::from_vec(vec![c(1.0, 0.0)])],
            )
            .unwrap()
            .scalar
            .unwrap()
            .value;
            assert_abs_diff_eq!(v, s, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_holds_for_random_square_contractions() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let family: Vec<_> = (0..3)
            .map(|_| crate::model_space::random_contraction(&mut rng, 2, 2, 3, 256, 0.95).unwrap())
            .collect();
        let es: Vec<CVector> = (0..20)
            .map(|_| CVector::from_vec(random_unit(&mut rng, 2, 0)))
            .collect();
        let s = condition_sums(&family, &[], &[], &grid(), &es).unwrap();
        assert!(s.chain_checked);
        assert_eq!(s.chain_violations, 0);
        assert!(s.determinant.unwrap().value >= s.vector.unwrap().value - 1e-8);
    }

    #[test]
    fn equal_zeros_give_zero_delta_prime() {
        let mu = c(0.2, -0.4);
        let family: Vec<_> = (0..2)
            .map(|_| MatrixFunction::scalar(MatrixEntry::blaschke(vec![mu])))
            .collect();
        let s = condition_sums(&family, &[], &[], &[mu, c(0.5, 0.5)], &[]).unwrap();
        let dp = s.delta_prime.unwrap();
        assert_abs_diff_eq!(dp.value, 0.0, epsilon = 1e-15);
        assert_eq!(dp.at, mu);
    }

    #[test]
    fn split_sums_dominate() {
        let parts = [vec![c(0.5, 0.0), c(-0.2, 0.3)], vec![c(0.1, 0.7)]];
        let whole: Vec<Complex64> = parts.iter().flatten().copied().collect();
        let b = vec![BlaschkeProduct::new(&whole).unwrap()];
        let split: Vec<Vec<BlaschkeProduct>> = parts
            .iter()
            .map(|p| vec![BlaschkeProduct::new(p).unwrap()])
            .collect();
        let s = condition_sums(&[], &b, &split, &grid(), &[]).unwrap();
        assert!(s.split_dominance);
        assert_eq!(s.split_violations, 0);
    }

    #[test]
    fn product_bound_algebra_instance() {
        assert_abs_diff_eq!(
            product_inequality_gap(&[0.9, 0.8]),
            0.3 - 0.28,
            epsilon = 1e-15
        );
    }

    #[test]
    fn n_power_is_smallest_exponent() {
        let n = default_n_power(0.05, -10.0, 2).unwrap();
        assert!(0.05f64.powi(n as i32) < (-20.0f64).exp());
        assert!(0.05f64.powi(n as i32 - 1) >= (-20.0f64).exp());
    }

    #[test]
    fn inner_family_has_trivial_outer_sum() {
        let family = vec![
            MatrixFunction::scalar_identity(MatrixEntry::blaschke(vec![c(0.3, 0.2)]), 2),
            MatrixFunction::diagonal(vec![
                MatrixEntry::blaschke(vec![c(-0.6, 0.1)]),
                MatrixEntry::constant(c(1.0, 0.0)),
            ]),
        ];
        let b = vec![BlaschkeProduct::identity(), BlaschkeProduct::identity()];
        let r = product_bound_check(&family, &b, &[], -50.0, 10, &grid()).unwrap();
        assert_eq!(r.d_star, 0);
        assert_abs_diff_eq!(r.outer_sum_max.value, 0.0, epsilon = 1e-9);
        assert!(r.outer_bound_holds);
    }

    #[test]
    fn scalar_blaschke_chain_holds() {
        let mu = c(0.4, -0.3);
        let family = vec![MatrixFunction::scalar(MatrixEntry::blaschke(vec![mu]))];
        let config = cfg();
        let ps = build_contour_nets(&family, &config).unwrap();
        let n = default_n_power(config.alpha, ps.log_eps_prime, 1).unwrap();
        let regions: Vec<Region> = ps.members.iter().map(|m| m.region.clone()).collect();
        let mut z = grid();
        z.push(mu);
        z.extend(ps.members[0].vertices().take(50));
        let r = product_bound_check(
            &family,
            &ps.blaschke_products().unwrap(),
            &regions,
            ps.log_eps_prime,
            n,
            &z,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.comparison_violations, 0);
        assert!(r.region_cover <= 1);
        assert!(r.assembled_margin.value >= 0.0);
    }

    #[test]
    fn outer_sum_bounded_for_contractive_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let family: Vec<_> = (0..3)
            .map(|_| crate::model_space::random_contraction(&mut rng, 2, 2, 2, 256, 0.9).unwrap())
            .collect();
        let b = vec![BlaschkeProduct::identity(); 3];
        let r = product_bound_check(&family, &b, &[], -30.0, 5, &grid()).unwrap();
        assert_eq!(r.algebra_violations, 0);
        assert!(r.outer_bound_holds);
        assert!(r.outer_product_margin >= -1e-9);
    }

    #[test]
    fn cv_estimate_at_least_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let est = estimate_cv(0.3, 200, &mut rng).unwrap();
        assert!(est.value >= 1.0);
        assert!(est.accepted > 0);
    }
}
