//! Finite Blaschke products, interpolation and separation constants, the
//! skew-projection norm formula for kernels at the zeros, and α-net
//! placement along polylines.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleson::{carleson_norm_discrete, DiscreteMeasure, MAX_DEPTH};
use crate::disk::{layer_of_radius, pseudo_hyperbolic_unchecked, turn_of, BlaschkeFactor};
use crate::error::{domain, Result};

/// Pseudo-hyperbolic distance below which two zeros count as the same point.
const DUPLICATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeProduct {
    factors: Vec<BlaschkeFactor>,
}

impl BlaschkeProduct {
    /// A product with simple zeros; repeated zeros are rejected.
    pub fn new(zeros: &[Complex64]) -> Result<Self> {
        let factors = zeros
            .iter()
            .map(|&z| BlaschkeFactor::new(z))
            .collect::<Result<Vec<_>>>()?;
        check_distinct(zeros)?;
        Ok(Self { factors })
    }

    /// A product that allows repeated zeros (used for determinants and split parts).
    pub fn with_multiplicity(zeros: &[Complex64]) -> Result<Self> {
        let factors = zeros
            .iter()
            .map(|&z| BlaschkeFactor::new(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub fn identity() -> Self {
        Self {
            factors: Vec::new(),
        }
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.factors.iter().map(|f| f.zero()).collect()
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.factors
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.eval(z))
    }

    /// log|B(z)| as a sum, finite unless z is a zero.
    pub fn log_modulus(&self, z: Complex64) -> f64 {
        self.factors.iter().map(|f| f.modulus(z).ln()).sum()
    }

    pub fn modulus(&self, z: Complex64) -> f64 {
        self.factors.iter().map(|f| f.modulus(z)).product()
    }

    /// min over zeros of |b_λ(z)|.
    pub fn nearest_zero_distance(&self, z: Complex64) -> f64 {
        self.factors
            .iter()
            .map(|f| f.modulus(z))
            .fold(1.0, f64::min)
    }
}

fn check_distinct(points: &[Complex64]) -> Result<()> {
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            if pseudo_hyperbolic_unchecked(a, b) < DUPLICATE_TOL {
                return domain(format!("repeated point {a}"));
            }
        }
    }
    Ok(())
}

pub fn evaluate(b: &BlaschkeProduct, z: Complex64) -> Result<Complex64> {
    if z.norm() > 1.0 + 1e-12 {
        return domain(format!("|z| = {} exceeds 1", z.norm()));
    }
    Ok(b.eval(z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    /// min_λ ∏_{μ≠λ} |b_μ(λ)|
    pub delta: f64,
    /// min pairwise pseudo-hyperbolic distance
    pub alpha: f64,
    /// Carleson norm of Σ(1 − |λ|²)δ_λ (Euclidean units)
    pub carleson_norm_of_sequence_measure: f64,
    pub carleson_depth: u32,
}

/// Depth that resolves every point of σ: two layers past the deepest one.
pub fn default_carleson_depth(points: &[Complex64]) -> u32 {
    points
        .iter()
        .map(|p| match p.norm() {
            r if r < 1.0 => layer_of_radius(r).saturating_add(2),
            _ => MAX_DEPTH,
        })
        .max()
        .unwrap_or(0)
        .min(MAX_DEPTH)
}

pub fn interpolation_constants(points: &[Complex64]) -> Result<InterpolationReport> {
    interpolation_constants_at_depth(points, default_carleson_depth(points))
}

pub fn interpolation_constants_at_depth(
    points: &[Complex64],
    depth: u32,
) -> Result<InterpolationReport> {
    for p in points {
        BlaschkeFactor::new(*p)?;
    }
    check_distinct(points)?;
    let mut delta = f64::INFINITY;
    let mut alpha = 1.0f64;
    for (i, &l) in points.iter().enumerate() {
        let mut log_prod = 0.0;
        for (j, &m) in points.iter().enumerate() {
            if i != j {
                let d = pseudo_hyperbolic_unchecked(m, l);
                log_prod += d.ln();
                alpha = alpha.min(d);
            }
        }
        delta = delta.min(log_prod.exp());
    }
    if points.is_empty() {
        delta = 1.0;
    }
    let mu = DiscreteMeasure::sequence_measure(points)?;
    Ok(InterpolationReport {
        delta: delta.min(1.0),
        alpha,
        carleson_norm_of_sequence_measure: carleson_norm_discrete(&mu, depth),
        carleson_depth: depth,
    })
}

/// ‖P^λ‖ = (∏_{μ∈σ∖{λ}} |b_μ(λ)|)^{−1} for the kernel system at σ.
pub fn projection_norm_formula(points: &[Complex64], lambda: Complex64) -> Result<f64> {
    let Some(pos) = points.iter().position(|&p| p == lambda) else {
        return domain(format!("{lambda} is not a point of σ"));
    };
    let log_prod: f64 = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != pos)
        .map(|(_, &m)| pseudo_hyperbolic_unchecked(m, lambda).ln())
        .sum();
    Ok((-log_prod).exp())
}

/// Bins of selected net points keyed by (layer, angular bin).
struct NetIndex {
    bins: HashMap<(u32, u64), Vec<Complex64>>,
}

impl NetIndex {
    fn bin_count(layer: u32) -> u64 {
        if layer <= 1 {
            1
        } else {
            1u64 << layer.min(40)
        }
    }

    fn key(z: Complex64) -> (u32, u64) {
        let layer = layer_of_radius(z.norm());
        let n = Self::bin_count(layer);
        let t = if z.norm() == 0.0 {
            0.0
        } else {
            turn_of(z.arg())
        };
        (layer, ((t * n as f64) as u64).min(n - 1))
    }

    /// min |b_λ(z)| over stored λ that can lie within pseudo-hyperbolic
    /// distance 0.1 of z; larger values are reported as 1.
    fn nearest(&self, z: Complex64) -> f64 {
        let (layer, _) = Self::key(z);
        let t = if z.norm() == 0.0 {
            0.0
        } else {
            turn_of(z.arg())
        };
        let mut best = 1.0f64;
        for l in layer.saturating_sub(1)..=layer + 1 {
            let n = Self::bin_count(l);
            let center = ((t * n as f64) as u64).min(n - 1);
            let mut seen = Vec::with_capacity(3);
            for off in [n - 1, 0, 1] {
                let b = (center + off) % n;
                if seen.contains(&b) {
                    continue;
                }
                seen.push(b);
                if let Some(pts) = self.bins.get(&(l, b)) {
                    for &p in pts {
                        best = best.min(pseudo_hyperbolic_unchecked(p, z));
                    }
                }
            }
        }
        best
    }

    fn insert(&mut self, z: Complex64) {
        self.bins.entry(Self::key(z)).or_default().push(z);
    }
}

/// Greedy α-net on polyline vertices, visited layer by layer (D_0, D_1, …)
/// and in input order within a layer. A vertex is selected when it is
/// farther than α from every selected point.
pub fn place_net_on_curve(vertices: &[Complex64], alpha: f64) -> Result<Vec<Complex64>> {
    if vertices.is_empty() {
        return domain("empty polyline");
    }
    if !(alpha > 0.0 && alpha < 0.1) {
        return domain(format!("α = {alpha} must lie in (0, 0.1)"));
    }
    if let Some(z) = vertices.iter().find(|z| !(z.norm() < 1.0)) {
        return domain(format!("vertex {z} is not interior"));
    }
    let mut order: Vec<(u32, usize)> = vertices
        .iter()
        .enumerate()
        .map(|(i, z)| (layer_of_radius(z.norm()), i))
        .collect();
    order.sort_unstable();
    let mut index = NetIndex {
        bins: HashMap::new(),
    };
    let mut net = Vec::new();
    for (_, i) in order {
        let z = vertices[i];
        if index.nearest(z) > alpha {
            index.insert(z);
            net.push(z);
        }
    }
    Ok(net)
}

/// Post-conditions of an α-net: (separated, dense) over the given vertices.
pub fn check_net(net: &[Complex64], vertices: &[Complex64], alpha: f64) -> (bool, bool) {
    let separated = net.iter().enumerate().all(|(i, &a)| {
        net[i + 1..]
            .iter()
            .all(|&b| pseudo_hyperbolic_unchecked(a, b) > alpha)
    });
    let dense = vertices.iter().all(|&z| {
        net.iter()
            .any(|&l| pseudo_hyperbolic_unchecked(l, z) < alpha)
    });
    (separated, dense)
}
