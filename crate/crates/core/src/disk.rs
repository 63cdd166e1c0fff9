//! Geometry of the unit disk: Blaschke factors, the pseudo-hyperbolic and
//! hyperbolic metrics, normalized reproducing kernels of H², Carleson
//! squares over boundary arcs, dyadic arcs and radial layers.
//!
//! Arc lengths are stored in radians. Wherever a "normalized" length is
//! needed (radial depth of a Carleson square, representing-measure
//! comparisons) it is obtained by dividing by 2π.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A point of the open unit disk, or of the unit circle when `boundary` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub value: Complex64,
    pub boundary: bool,
}

impl DiskPoint {
    pub fn interior(value: Complex64) -> Result<Self> {
        if !(value.norm() < 1.0) {
            return domain(format!("|z| = {} is not < 1", value.norm()));
        }
        Ok(Self {
            value,
            boundary: false,
        })
    }

    /// A point with |z| = 1 (up to 1e-12), used for boundary sampling.
    pub fn on_circle(value: Complex64) -> Result<Self> {
        if (value.norm() - 1.0).abs() > 1e-12 {
            return domain(format!("|z| = {} is not 1", value.norm()));
        }
        Ok(Self {
            value,
            boundary: true,
        })
    }

    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        Self::interior(Complex64::from_polar(r, theta))
    }
}

fn check_interior(z: Complex64, what: &str) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        domain(format!("{what} = {z} must lie in the open disk"))
    }
}

/// The Blaschke factor b_λ(z) = (|λ|/λ)(λ − z)/(1 − λ̄z), with b_0(z) = z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlaschkeFactor {
    zero: Complex64,
    phase: Complex64,
}

impl BlaschkeFactor {
    pub fn new(zero: Complex64) -> Result<Self> {
        check_interior(zero, "Blaschke zero")?;
        let phase = if zero == Complex64::new(0.0, 0.0) {
            Complex64::new(-1.0, 0.0)
        } else {
            zero.norm() / zero
        };
        Ok(Self { zero, phase })
    }

    pub fn zero(&self) -> Complex64 {
        self.zero
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        // For λ = 0 the phase is -1 so that -1·(0 − z)/1 = z.
        self.phase * (self.zero - z) / (1.0 - self.zero.conj() * z)
    }

    /// |b_λ(z)| without the unimodular prefactor.
    #[inline]
    pub fn modulus(&self, z: Complex64) -> f64 {
        pseudo_hyperbolic_unchecked(self.zero, z)
    }
}

pub fn blaschke_factor(lambda: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(BlaschkeFactor::new(lambda)?.eval(z))
}

#[inline]
pub(crate) fn pseudo_hyperbolic_unchecked(a: Complex64, b: Complex64) -> f64 {
    let den = (1.0 - a.conj() * b).norm();
    if den == 0.0 {
        return 1.0;
    }
    ((a - b).norm() / den).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub pseudo_hyperbolic: f64,
    pub hyperbolic: f64,
}

/// Pseudo-hyperbolic distance |b_λ(μ)| and hyperbolic distance
/// ½ log((1 + |b_λ(μ)|)/(1 − |b_λ(μ)|)).
pub fn metrics(lambda: Complex64, mu: Complex64) -> Result<Metrics> {
    check_interior(lambda, "λ")?;
    check_interior(mu, "μ")?;
    let p = pseudo_hyperbolic_unchecked(lambda, mu);
    Ok(Metrics {
        pseudo_hyperbolic: p,
        hyperbolic: p.atanh(),
    })
}

/// Normalized reproducing kernel k_λ(z) = (1 − |λ|²)^{1/2}/(1 − λ̄z).
pub fn kernel(lambda: Complex64, z: Complex64) -> Result<Complex64> {
    check_interior(lambda, "λ")?;
    Ok(kernel_unchecked(lambda, z))
}

#[inline]
pub(crate) fn kernel_unchecked(lambda: Complex64, z: Complex64) -> Complex64 {
    (1.0 - lambda.norm_sqr()).sqrt() / (1.0 - lambda.conj() * z)
}

/// ⟨k_μ, k_λ⟩ = (1 − |μ|²)^{1/2}(1 − |λ|²)^{1/2}/(1 − μ̄λ).
pub fn kernel_inner(lambda: Complex64, mu: Complex64) -> Result<Complex64> {
    check_interior(lambda, "λ")?;
    check_interior(mu, "μ")?;
    Ok(kernel_inner_unchecked(lambda, mu))
}

#[inline]
pub(crate) fn kernel_inner_unchecked(lambda: Complex64, mu: Complex64) -> Complex64 {
    ((1.0 - mu.norm_sqr()) * (1.0 - lambda.norm_sqr())).sqrt() / (1.0 - mu.conj() * lambda)
}

/// Euclidean description of the pseudo-hyperbolic disk {z : |b_a(z)| < γ}.
pub fn pseudo_hyperbolic_disk(a: Complex64, gamma: f64) -> Result<(Complex64, f64)> {
    check_interior(a, "center")?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("γ = {gamma} must lie in (0, 1)"));
    }
    let g2 = gamma * gamma;
    let den = 1.0 - g2 * a.norm_sqr();
    Ok((a * (1.0 - g2) / den, gamma * (1.0 - a.norm_sqr()) / den))
}

/// The unique m ≥ 0 with 1 − 2^{−m} ≤ |z| < 1 − 2^{−m−1}.
pub fn layer_index(z: Complex64) -> Result<u32> {
    check_interior(z, "z")?;
    Ok(layer_of_radius(z.norm()))
}

pub(crate) fn layer_of_radius(r: f64) -> u32 {
    let gap = 1.0 - r;
    let mut m = (1.0 / gap).log2().floor().max(0.0) as u32;
    // Guard the floating-point estimate against the exact half-open rule.
    while m > 0 && r < 1.0 - (-(m as f64)).exp2() {
        m -= 1;
    }
    while r >= 1.0 - (-(m as f64) - 1.0).exp2() {
        m += 1;
    }
    m
}

/// Fractional turn of an angle, in [0, 1).
#[inline]
pub(crate) fn turn_of(theta: f64) -> f64 {
    let t = (theta / TAU).rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

/// A closed-open arc of the unit circle, [center − length/2, center + length/2).
///
/// Stored as a start turn in [0, 1) and a length in turns so that dyadic arcs
/// are represented exactly; serialized as center angle and length in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ArcRepr", try_from = "ArcRepr")]
pub struct Arc {
    start: f64,
    turns: f64,
}

#[derive(Serialize, Deserialize)]
struct ArcRepr {
    center_angle: f64,
    length: f64,
}

impl From<Arc> for ArcRepr {
    fn from(a: Arc) -> Self {
        Self {
            center_angle: a.center_angle(),
            length: a.length(),
        }
    }
}

impl TryFrom<ArcRepr> for Arc {
    type Error = crate::error::Error;
    fn try_from(r: ArcRepr) -> Result<Self> {
        Arc::new(r.center_angle, r.length)
    }
}

impl Arc {
    pub fn new(center_angle: f64, length: f64) -> Result<Self> {
        if !(length > 0.0 && length <= TAU + 1e-12) {
            return domain(format!("arc length {length} outside (0, 2π]"));
        }
        let turns = (length / TAU).min(1.0);
        Ok(Self::from_turns(center_angle / TAU - 0.5 * turns, turns))
    }

    pub fn full_circle() -> Self {
        Self {
            start: 0.0,
            turns: 1.0,
        }
    }

    pub fn from_turns(start_turn: f64, length_turns: f64) -> Self {
        let start = start_turn.rem_euclid(1.0);
        Self {
            start: if start >= 1.0 { 0.0 } else { start },
            turns: length_turns.min(1.0),
        }
    }

    pub fn dyadic(depth: u32, index: u64) -> Self {
        let len = (-(depth as f64)).exp2();
        Self::from_turns(index as f64 * len, len)
    }

    pub fn center_angle(&self) -> f64 {
        (self.start + 0.5 * self.turns) * TAU
    }

    /// Euclidean length in radians.
    pub fn length(&self) -> f64 {
        self.turns * TAU
    }

    pub fn is_full(&self) -> bool {
        self.turns >= 1.0
    }

    /// Length divided by 2π.
    pub fn normalized_length(&self) -> f64 {
        self.turns
    }

    pub fn start_turn(&self) -> f64 {
        self.start
    }

    pub fn start_angle(&self) -> f64 {
        self.start * TAU
    }

    pub fn end_angle(&self) -> f64 {
        (self.start + self.turns) * TAU
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        self.contains_turn(turn_of(theta))
    }

    pub fn contains_turn(&self, t: f64) -> bool {
        if self.is_full() {
            return true;
        }
        (t - self.start).rem_euclid(1.0) < self.turns
    }

    /// The concentric arc k·I, capped at the full circle.
    pub fn scaled(&self, k: f64) -> Self {
        let turns = (self.turns * k).min(1.0);
        if turns >= 1.0 {
            return Self::full_circle();
        }
        Self::from_turns(self.start + 0.5 * self.turns - 0.5 * turns, turns)
    }

    /// Whether `other` is contained in this arc (up to 1e-12 turns).
    pub fn contains_arc(&self, other: &Arc) -> bool {
        if self.is_full() {
            return true;
        }
        if other.turns > self.turns + 1e-12 {
            return false;
        }
        let off = (other.start - self.start).rem_euclid(1.0);
        let off = if off > 1.0 - 1e-12 { 0.0 } else { off };
        off + other.turns <= self.turns + 1e-12
    }

    pub fn intersects(&self, other: &Arc) -> bool {
        if self.is_full() || other.is_full() {
            return true;
        }
        let a = (other.start - self.start).rem_euclid(1.0);
        let b = (self.start - other.start).rem_euclid(1.0);
        a < self.turns || b < other.turns
    }
}

/// A Carleson square over a boundary arc: S(I) (open at |z| = 1) or Q(I)
/// (closed disk).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonSquare {
    pub base: Arc,
    pub closed: bool,
}

impl CarlesonSquare {
    pub fn open(base: Arc) -> Self {
        Self {
            base,
            closed: false,
        }
    }

    pub fn closed(base: Arc) -> Self {
        Self { base, closed: true }
    }

    /// Radius of the inner edge, 1 − |I|/(2π).
    pub fn inner_radius(&self) -> f64 {
        1.0 - self.base.normalized_length()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        if r > 1.0 || (!self.closed && r >= 1.0) {
            return false;
        }
        if r < self.inner_radius() {
            return false;
        }
        if r == 0.0 {
            return self.base.is_full();
        }
        self.base.contains_angle(z.arg())
    }
}

pub fn square_membership(sq: &CarlesonSquare, z: Complex64) -> bool {
    sq.contains(z)
}

/// Index of the depth-`depth` dyadic arc containing the turn `t`.
#[inline]
pub(crate) fn dyadic_index(t: f64, depth: u32) -> u64 {
    let n = 1u64 << depth;
    ((t * n as f64).floor() as u64).min(n - 1)
}

/// All dyadic arcs of depths 0..=max_depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub max_depth: u32,
}

impl DyadicGrid {
    pub fn new(max_depth: u32) -> Self {
        assert!(max_depth < 48, "dyadic depth {max_depth} too large");
        Self { max_depth }
    }

    pub fn arcs_at(&self, depth: u32) -> impl Iterator<Item = Arc> {
        (0..(1u64 << depth)).map(move |j| Arc::dyadic(depth, j))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (u32, u64, Arc)> + '_ {
        (0..=self.max_depth).flat_map(|d| (0..(1u64 << d)).map(move |j| (d, j, Arc::dyadic(d, j))))
    }

    pub fn parent(depth: u32, index: u64) -> Option<(u32, u64)> {
        (depth > 0).then(|| (depth - 1, index >> 1))
    }

    pub fn index_of_angle(theta: f64, depth: u32) -> u64 {
        dyadic_index(turn_of(theta), depth)
    }
}

/// Hyperbolically quasi-uniform sample of the disk: the origin, then for
/// each layer m ≤ `max_layer` a ring of 2^{m+3} points at radius
/// 1 − 0.75·2^{−m}. Rings are rotated by half a step on odd layers.
pub fn quasi_uniform_grid(max_layer: u32) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for m in 0..=max_layer {
        let r = 1.0 - 0.75 * (-(m as f64)).exp2();
        let n = 1usize << (m + 3);
        let shift = if m % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..n {
            pts.push(Complex64::from_polar(
                r,
                TAU * (j as f64 + shift) / n as f64,
            ));
        }
    }
    pts
}
