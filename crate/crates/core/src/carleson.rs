//! Carleson norms of atomic and polyline arc-length measures over dyadic
//! Carleson squares, the reproducing-kernel test and the H² embedding
//! constant.
//!
//! All quantities use Euclidean units: |I| in radians, arc length and point
//! masses as given.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{dyadic_index, kernel_unchecked, layer_of_radius, quasi_uniform_grid, turn_of};
use crate::error::{domain, Result};
use crate::linalg::{lambda_max, CMatrix};

/// Largest supported dyadic depth for the Carleson sup.
pub const MAX_DEPTH: u32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<(Complex64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(Complex64, f64)>) -> Result<Self> {
        for (z, m) in &atoms {
            if !(*m > 0.0) || !m.is_finite() {
                return domain(format!("atom mass {m} must be positive and finite"));
            }
            if z.norm() > 1.0 + 1e-12 {
                return domain(format!("atom {z} lies outside the closed disk"));
            }
        }
        Ok(Self { atoms })
    }

    pub fn empty() -> Self {
        Self { atoms: Vec::new() }
    }

    /// Σ (1 − |λ|²) δ_λ over an interior sequence.
    pub fn sequence_measure(points: &[Complex64]) -> Result<Self> {
        Self::new(points.iter().map(|&p| (p, 1.0 - p.norm_sqr())).collect())
    }

    pub fn atoms(&self) -> &[(Complex64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// Arc length along one or more polylines of interior points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeasure {
    polylines: Vec<Vec<Complex64>>,
}

impl CurveMeasure {
    pub fn new(polylines: Vec<Vec<Complex64>>) -> Result<Self> {
        if polylines.iter().flatten().any(|z| !(z.norm() < 1.0)) {
            return domain("polyline vertices must be interior");
        }
        Ok(Self { polylines })
    }

    pub fn single(polyline: Vec<Complex64>) -> Result<Self> {
        Self::new(vec![polyline])
    }

    pub fn polylines(&self) -> &[Vec<Complex64>] {
        &self.polylines
    }

    pub fn total_length(&self) -> f64 {
        self.segments()
            .map(|(a, b)| (b - a).norm())
            .fold(0.0, |s, l| s + l)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.polylines
            .iter()
            .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
    }
}

/// Masses accumulated per dyadic square, `mass[d][j]` for S(I_{d,j}).
struct DyadicMasses {
    depth: u32,
    mass: Vec<Vec<f64>>,
}

impl DyadicMasses {
    fn new(depth: u32) -> Self {
        Self {
            depth,
            mass: (0..=depth).map(|d| vec![0.0; 1usize << d]).collect(),
        }
    }

    /// Adds `m` to every square S(I) with |I| ≥ the radial band at `max_depth`.
    fn deposit(&mut self, turn: f64, max_depth: u32, m: f64) {
        let top = max_depth.min(self.depth);
        let finest = dyadic_index(turn, self.depth);
        for d in 0..=top {
            self.mass[d as usize][(finest >> (self.depth - d)) as usize] += m;
        }
    }

    fn norm(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .flat_map(|(d, row)| {
                let len = TAU * (-(d as f64)).exp2();
                row.iter().map(move |m| m / len)
            })
            .fold(0.0, f64::max)
    }
}

fn deepest_square_depth(z: Complex64, closed: bool) -> Option<u32> {
    let r = z.norm();
    if r >= 1.0 {
        return closed.then_some(u32::MAX);
    }
    Some(layer_of_radius(r))
}

/// sup over dyadic I of depth ≤ `depth` of μ(S(I))/|I| for an atomic measure.
pub fn carleson_norm_discrete(mu: &DiscreteMeasure, depth: u32) -> f64 {
    dyadic_masses_discrete(mu, depth, false).norm()
}

/// Same sup with closed squares Q(I), which also count boundary atoms.
pub fn carleson_norm_discrete_closed(mu: &DiscreteMeasure, depth: u32) -> f64 {
    dyadic_masses_discrete(mu, depth, true).norm()
}

fn dyadic_masses_discrete(mu: &DiscreteMeasure, depth: u32, closed: bool) -> DyadicMasses {
    let depth = depth.min(MAX_DEPTH);
    let mut acc = DyadicMasses::new(depth);
    for &(z, m) in &mu.atoms {
        if let Some(top) = deepest_square_depth(z, closed) {
            let turn = if z.norm() == 0.0 {
                0.0
            } else {
                turn_of(z.arg())
            };
            acc.deposit(turn, top, m);
        }
    }
    acc
}

/// Pieces of the segment [a, b] on which both |z| and arg z are monotone and
/// no layer circle 1 − 2^{−d} (d ≤ depth) or dyadic ray of that depth is crossed.
fn split_segment(a: Complex64, b: Complex64, depth: u32, out: &mut Vec<(Complex64, Complex64)>) {
    let dir = b - a;
    let len2 = dir.norm_sqr();
    if len2 == 0.0 {
        return;
    }
    let mut cuts = vec![0.0, 1.0];
    let s_min = (-(a.conj() * dir).re / len2).clamp(0.0, 1.0);
    cuts.push(s_min);
    let at = |s: f64| a + dir * s;
    for (s0, s1) in [(0.0, s_min), (s_min, 1.0)] {
        if s1 - s0 <= 0.0 {
            continue;
        }
        let (p0, p1) = (at(s0), at(s1));
        let (r0, r1) = (p0.norm(), p1.norm());
        let (lo, hi) = (r0.min(r1), r0.max(r1));
        for d in 1..=depth {
            let rho = 1.0 - (-(d as f64)).exp2();
            if rho <= lo || rho >= hi {
                continue;
            }
            // |a + s·dir|² = ρ² on the monotone half
            let bq = (a.conj() * dir).re;
            let cq = a.norm_sqr() - rho * rho;
            let disc = (bq * bq - len2 * cq).max(0.0).sqrt();
            for s in [(-bq - disc) / len2, (-bq + disc) / len2] {
                if s > s0 && s < s1 {
                    cuts.push(s);
                }
            }
        }
        if p0.norm() > 0.0 && p1.norm() > 0.0 {
            let t0 = p0.arg();
            let mut dt = p1.arg() - t0;
            if dt > std::f64::consts::PI {
                dt -= TAU;
            } else if dt < -std::f64::consts::PI {
                dt += TAU;
            }
            let n = (1u64 << depth) as f64;
            let (ta, tb) = if dt >= 0.0 {
                (t0, t0 + dt)
            } else {
                (t0 + dt, t0)
            };
            let k0 = (ta / TAU * n).floor() as i64 + 1;
            let k1 = (tb / TAU * n).ceil() as i64 - 1;
            for k in k0..=k1 {
                let phi = TAU * k as f64 / n;
                let ray = Complex64::from_polar(1.0, phi);
                // Im(conj(ray)·(a + s·dir)) = 0
                let den = (ray.conj() * dir).im;
                if den == 0.0 {
                    continue;
                }
                let s = -(ray.conj() * a).im / den;
                if s > s0 && s < s1 && (ray.conj() * at(s)).re > 0.0 {
                    cuts.push(s);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            out.push((at(w[0]), at(w[1])));
        }
    }
}

fn dyadic_masses_curve(mu: &CurveMeasure, depth: u32) -> DyadicMasses {
    let depth = depth.min(MAX_DEPTH);
    let mut acc = DyadicMasses::new(depth);
    let mut pieces = Vec::new();
    for (a, b) in mu.segments() {
        pieces.clear();
        split_segment(a, b, depth, &mut pieces);
        for &(p, q) in &pieces {
            let mid = 0.5 * (p + q);
            let top = layer_of_radius(mid.norm().min(1.0 - f64::EPSILON));
            let turn = if mid.norm() == 0.0 {
                0.0
            } else {
                turn_of(mid.arg())
            };
            acc.deposit(turn, top, (q - p).norm());
        }
    }
    acc
}

/// sup over dyadic I of depth ≤ `depth` of |γ ∩ S(I)|/|I| for arc length on polylines.
pub fn carleson_norm_curve(mu: &CurveMeasure, depth: u32) -> f64 {
    dyadic_masses_curve(mu, depth).norm()
}

/// Either kind of measure, for APIs that accept both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Curve(CurveMeasure),
}

pub fn carleson_norm(mu: &Measure, depth: u32) -> f64 {
    match mu {
        Measure::Discrete(m) => carleson_norm_discrete(m, depth),
        Measure::Curve(c) => carleson_norm_curve(c, depth),
    }
}

/// max over `lambda_grid` of Σ mass·|k_λ(atom)|².
pub fn kernel_test_constant(mu: &DiscreteMeasure, lambda_grid: &[Complex64]) -> (f64, Complex64) {
    lambda_grid
        .par_iter()
        .map(|&l| {
            let v: f64 = mu
                .atoms
                .iter()
                .map(|&(z, m)| m * kernel_unchecked(l, z).norm_sqr())
                .sum();
            (v, l)
        })
        .reduce(
            || (0.0, Complex64::new(0.0, 0.0)),
            |a, b| if b.0 > a.0 { b } else { a },
        )
}

/// The default λ grid: quasi-uniform layers up to `max_layer` plus the
/// interior atoms themselves.
pub fn default_lambda_grid(mu: &DiscreteMeasure, max_layer: u32) -> Vec<Complex64> {
    let mut g = quasi_uniform_grid(max_layer);
    g.extend(mu.atoms.iter().map(|a| a.0).filter(|z| z.norm() < 1.0));
    g
}

/// λ_max of A[j,k] = Σ mass·conj(z^j)·z^k on polynomials of degree ≤ `test_degree`.
pub fn embedding_constant_empirical(mu: &DiscreteMeasure, test_degree: usize) -> f64 {
    let dim = test_degree + 1;
    let mut a = CMatrix::zeros(dim, dim);
    for &(z, m) in &mu.atoms {
        let mut pows = Vec::with_capacity(dim);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..dim {
            pows.push(p);
            p *= z;
        }
        for j in 0..dim {
            for k in 0..dim {
                a[(j, k)] += pows[j].conj() * pows[k] * m;
            }
        }
    }
    lambda_max(&a).max(0.0)
}

/// Test degree and λ-grid depth used by [`compare_constants`].
pub const COMPARISON_TEST_DEGREE: usize = 64;
pub const COMPARISON_LAMBDA_LAYERS: u32 = 8;

/// The three Carleson constants of a discrete measure in common units
/// (box norm times 2π) and their worst pairwise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantComparison {
    pub box_constant: f64,
    pub kernel_constant: f64,
    pub embedding_constant: f64,
    pub worst_ratio: f64,
}

pub fn compare_constants(mu: &DiscreteMeasure, depth: u32) -> ConstantComparison {
    let box_constant = TAU * carleson_norm_discrete(mu, depth);
    let (kernel_constant, _) =
        kernel_test_constant(mu, &default_lambda_grid(mu, COMPARISON_LAMBDA_LAYERS));
    let embedding_constant = embedding_constant_empirical(mu, COMPARISON_TEST_DEGREE);
    let v = [box_constant, kernel_constant, embedding_constant];
    let hi = v.iter().copied().fold(0.0, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    ConstantComparison {
        box_constant,
        kernel_constant,
        embedding_constant,
        worst_ratio: if hi == 0.0 { 1.0 } else { hi / lo },
    }
}
