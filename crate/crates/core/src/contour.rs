//! Carleson contours for bounded analytic functions: representing measures,
//! Poisson potentials, bad-interval selection, generation-by-generation
//! region assembly, boundary extraction and verification.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::blaschke::BlaschkeProduct;
use crate::carleson::{carleson_norm_curve, CurveMeasure};
use crate::disk::{
    dyadic_index, pseudo_hyperbolic_disk, pseudo_hyperbolic_unchecked, Arc, CarlesonSquare,
};
use crate::error::{domain, Result};
use crate::hardy::{BoundaryGrid, OuterFunction};

pub const DEFAULT_DEPTH_FLOOR: u32 = 20;
pub const DEFAULT_CURVE_SAMPLES: usize = 512;
/// Largest boundary sample count per side in the witness search.
const MAX_WITNESS_SAMPLES: usize = 4096;
const MAX_GENERATIONS: usize = 64;
/// Target Carleson norm of the contour.
pub const CONTOUR_NORM_TARGET: f64 = 10.0;

/// A point mass on the circle, entering φ as exp(−mass·(ξ+z)/(ξ−z)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularAtom {
    pub angle: f64,
    pub mass: f64,
}

/// φ = B · S · h with B a finite Blaschke product, S a singular inner factor
/// with finitely many atoms and h an outer function with |h| ≤ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedFunction {
    blaschke: BlaschkeProduct,
    singular: Vec<SingularAtom>,
    log_modulus: Option<Vec<f64>>,
    outer: Option<OuterFunction>,
}

impl BoundedFunction {
    /// `boundary_modulus` holds |h| at the grid nodes 2πj/n.
    pub fn new(
        zeros: &[Complex64],
        singular: Vec<SingularAtom>,
        boundary_modulus: Option<Vec<f64>>,
    ) -> Result<Self> {
        let blaschke = BlaschkeProduct::with_multiplicity(zeros)?;
        for a in &singular {
            if !(a.mass >= 0.0 && a.mass.is_finite() && a.angle.is_finite()) {
                return domain("singular atoms need finite non-negative mass");
            }
        }
        let (log_modulus, outer) = match boundary_modulus {
            None => (None, None),
            Some(u) => {
                if let Some(bad) = u.iter().find(|v| !(**v > 0.0 && **v <= 1.0 + 1e-8)) {
                    return domain(format!("boundary modulus {bad} outside (0, 1]"));
                }
                let logs: Vec<f64> = u.iter().map(|v| v.min(1.0).ln()).collect();
                let outer = OuterFunction::from_log_modulus(&logs)?;
                (Some(logs), Some(outer))
            }
        };
        Ok(Self {
            blaschke,
            singular,
            log_modulus,
            outer,
        })
    }

    pub fn blaschke(zeros: &[Complex64]) -> Result<Self> {
        Self::new(zeros, Vec::new(), None)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.blaschke.zeros()
    }

    pub fn singular_atoms(&self) -> &[SingularAtom] {
        &self.singular
    }

    /// log|φ(z)|, −∞ at zeros.
    pub fn log_abs(&self, z: Complex64) -> f64 {
        let mut v = self.blaschke.log_modulus(z);
        for a in &self.singular {
            v -= a.mass * poisson_kernel_boundary(a.angle, z);
        }
        if let Some(h) = &self.outer {
            v += h.log_modulus(z);
        }
        v
    }

    pub fn abs(&self, z: Complex64) -> f64 {
        self.log_abs(z).exp()
    }

    /// A certified upper bound for log|φ| on the whole disk.
    fn global_log_bound(&self) -> f64 {
        match &self.log_modulus {
            None => 0.0,
            Some(logs) => {
                let grid =
                    BoundaryGrid::new(logs.iter().map(|&v| Complex64::new(v, 0.0)).collect())
                        .expect("validated grid");
                let c = grid.coefficients();
                let n = c.len();
                // Re G on the circle is c_0 + 2 Re Σ_{0<k<n/2} c_k ξ^k
                c[0].re + 2.0 * c[1..n / 2].iter().map(|v| v.norm()).sum::<f64>()
            }
        }
    }
}

fn poisson_kernel_boundary(angle: f64, z: Complex64) -> f64 {
    let xi = Complex64::from_polar(1.0, angle);
    (1.0 - z.norm_sqr()) / (xi - z).norm_sqr()
}

/// ν = μ + ½Σ(1−|λ_n|²)δ_{λ_n}, masses in units of normalized arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentingMeasure {
    pub zero_atoms: Vec<(Complex64, f64)>,
    pub singular_atoms: Vec<SingularAtom>,
    /// −log|h| on cells of width 1/n centred at the nodes j/n (in turns).
    pub ac_density: Vec<f64>,
    #[serde(skip)]
    prefix: Vec<f64>,
    #[serde(skip)]
    outer: Option<OuterFunction>,
}

pub fn representing_measure(phi: &BoundedFunction) -> RepresentingMeasure {
    let zero_atoms = phi
        .zeros()
        .into_iter()
        .map(|l| (l, 0.5 * (1.0 - l.norm_sqr())))
        .collect();
    let ac_density: Vec<f64> = phi
        .log_modulus
        .as_ref()
        .map(|l| l.iter().map(|v| -v).collect())
        .unwrap_or_default();
    let mut prefix = Vec::with_capacity(ac_density.len() + 1);
    prefix.push(0.0);
    let n = ac_density.len().max(1) as f64;
    for d in &ac_density {
        prefix.push(prefix.last().unwrap() + d / n);
    }
    RepresentingMeasure {
        zero_atoms,
        singular_atoms: phi.singular.clone(),
        ac_density,
        prefix,
        outer: phi.outer.clone(),
    }
}

impl RepresentingMeasure {
    pub fn total_mass(&self) -> f64 {
        self.zero_atoms.iter().map(|a| a.1).sum::<f64>()
            + self.singular_atoms.iter().map(|a| a.mass).sum::<f64>()
            + self.prefix.last().copied().unwrap_or(0.0)
    }

    /// ∫ of the density over turns [0, t] for t ∈ [0, 1] (cells centred at j/n).
    fn density_cumulative(&self, t: f64) -> f64 {
        let n = self.ac_density.len();
        if n == 0 {
            return 0.0;
        }
        // shift so cell j covers [j, j+1) in units of 1/n
        let x = (t * n as f64 + 0.5).clamp(0.0, n as f64 + 0.5);
        let whole = (x.floor() as usize).min(n);
        let frac = x - whole as f64;
        let mut v = self.prefix[whole];
        if whole < n {
            v += frac * self.ac_density[whole] / n as f64;
        } else {
            v += frac * self.ac_density[0] / n as f64;
        }
        // the first half cell belongs to cell 0 centred at 0
        v - 0.5 * self.ac_density[0] / n as f64
    }

    fn density_on_arc(&self, arc: &Arc) -> f64 {
        if self.ac_density.is_empty() {
            return 0.0;
        }
        if arc.is_full() {
            return self.prefix[self.ac_density.len()];
        }
        let a = arc.start_turn();
        let b = a + arc.normalized_length();
        if b <= 1.0 {
            self.density_cumulative(b) - self.density_cumulative(a)
        } else {
            self.density_cumulative(1.0) - self.density_cumulative(a)
                + self.density_cumulative(b - 1.0)
        }
    }

    fn max_density_on_arc(&self, arc: &Arc) -> f64 {
        let n = self.ac_density.len();
        if n == 0 {
            return 0.0;
        }
        if arc.is_full() || arc.normalized_length() * n as f64 >= n as f64 - 2.0 {
            return self.ac_density.iter().cloned().fold(0.0, f64::max);
        }
        let first = (arc.start_turn() * n as f64 - 0.5).floor() as i64;
        let count = (arc.normalized_length() * n as f64).ceil() as i64 + 2;
        (first..first + count)
            .map(|j| self.ac_density[j.rem_euclid(n as i64) as usize])
            .fold(0.0, f64::max)
    }

    /// ν(Q(I)) for the closed square over `arc`.
    pub fn square_mass(&self, arc: &Arc) -> f64 {
        let sq = CarlesonSquare::closed(*arc);
        let atoms: f64 = self
            .zero_atoms
            .iter()
            .filter(|a| sq.contains(a.0))
            .map(|a| a.1)
            .sum();
        let singular: f64 = self
            .singular_atoms
            .iter()
            .filter(|a| arc.contains_angle(a.angle))
            .map(|a| a.mass)
            .sum();
        atoms + singular + self.density_on_arc(arc)
    }

    fn zero_count_in(&self, arc: &Arc) -> usize {
        let sq = CarlesonSquare::closed(*arc);
        self.zero_atoms.iter().filter(|a| sq.contains(a.0)).count()
    }

    fn singular_mass_in(&self, arc: &Arc) -> f64 {
        self.singular_atoms
            .iter()
            .filter(|a| arc.contains_angle(a.angle))
            .map(|a| a.mass)
            .sum()
    }
}

/// ∫(1−|z|²)/|1−ξ̄z|² dν(ξ) over the closed disk.
pub fn poisson_potential(nu: &RepresentingMeasure, z: Complex64) -> f64 {
    let s = 1.0 - z.norm_sqr();
    let atoms: f64 = nu
        .zero_atoms
        .iter()
        .map(|(l, w)| w * s / (Complex64::new(1.0, 0.0) - l.conj() * z).norm_sqr())
        .sum();
    let singular: f64 = nu
        .singular_atoms
        .iter()
        .map(|a| a.mass * poisson_kernel_boundary(a.angle, z))
        .sum();
    let ac = nu.outer.as_ref().map(|h| -h.log_modulus(z)).unwrap_or(0.0);
    atoms + singular + ac
}

/// The two sides of the potential bound for −log|φ(z)|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialBounds {
    pub potential: f64,
    pub neg_log_abs: f64,
    /// 2·log(1/ε)·potential
    pub upper: f64,
    /// inf_n |b_{λ_n}(z)|
    pub separation: f64,
    pub lower_holds: bool,
    /// `None` when z is not ε-separated from the zeros.
    pub upper_holds: Option<bool>,
}

pub fn potential_bounds(
    phi: &BoundedFunction,
    nu: &RepresentingMeasure,
    z: Complex64,
    eps: f64,
    slack: f64,
) -> PotentialBounds {
    let potential = poisson_potential(nu, z);
    let neg_log_abs = -phi.log_abs(z);
    let upper = 2.0 * (1.0 / eps).ln() * potential;
    let separation = phi
        .zeros()
        .iter()
        .map(|&l| pseudo_hyperbolic_unchecked(l, z))
        .fold(1.0, f64::min);
    PotentialBounds {
        potential,
        neg_log_abs,
        upper,
        separation,
        lower_holds: potential <= neg_log_abs + slack,
        upper_holds: (separation >= eps).then_some(neg_log_abs <= upper + slack),
    }
}

/// C₁, C₂, C₃ of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for ContourConstants {
    fn default() -> Self {
        Self {
            c1: 8.0,
            c2: 8.0,
            c3: 8.0,
        }
    }
}

/// M, γ and ε′ for a given ε; ε′ is kept as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub epsilon: f64,
    pub m: f64,
    pub gamma: f64,
    pub log_eps_prime: f64,
}

impl DerivedConstants {
    pub fn eps_prime(&self) -> f64 {
        self.log_eps_prime.exp()
    }
}

impl ContourConstants {
    pub fn derive(&self, eps: f64) -> Result<DerivedConstants> {
        if !(eps > 0.0 && eps < 1.0) {
            return domain("ε must lie in (0, 1)");
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c3 > 0.0) {
            return domain("contour constants must be positive");
        }
        let l = (1.0 / eps).ln();
        let m = 100.0 * self.c1 * l;
        let gamma = eps.min(1.0 / (2.0 * self.c3 * (m + l)));
        let log_eps_prime = -self.c2 * (1.0 / gamma).ln() * (m + l);
        Ok(DerivedConstants {
            epsilon: eps,
            m,
            gamma,
            log_eps_prime,
        })
    }
}

/// The Whitney tile of a dyadic arc: 1 − |I| ≤ |z| ≤ 1 − |I|/2 over I.
fn tile_boundary_points(depth: u32, index: u64, per_side: usize) -> (Vec<Complex64>, f64) {
    let len = (-(depth as f64)).exp2();
    let a = index as f64 * len;
    let r1 = 1.0 - 0.5 * len;
    let r0 = if depth == 0 { 0.0 } else { 1.0 - len };
    let mut pts = Vec::with_capacity(4 * per_side + 4);
    let angle = |t: f64| TAU * t;
    if depth == 0 {
        for i in 0..per_side {
            pts.push(Complex64::from_polar(r1, angle(i as f64 / per_side as f64)));
        }
        let step = TAU * r1 / per_side as f64;
        return (pts, 0.5 * step / (1.0 - r1 * r1));
    }
    for i in 0..=per_side {
        let t = a + len * i as f64 / per_side as f64;
        pts.push(Complex64::from_polar(r1, angle(t)));
        pts.push(Complex64::from_polar(r0, angle(t)));
    }
    for i in 1..per_side {
        let r = r0 + (r1 - r0) * i as f64 / per_side as f64;
        pts.push(Complex64::from_polar(r, angle(a)));
        pts.push(Complex64::from_polar(r, angle(a + len)));
    }
    let arc_step = TAU * len * r1 / per_side as f64;
    let radial_step = (r1 - r0) / per_side as f64;
    (pts, 0.5 * arc_step.max(radial_step) / (1.0 - r1 * r1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Witness {
    Found,
    Absent,
    /// Sampling could not separate the maximum from ε; treated as found.
    Ambiguous,
}

/// Whether the tile contains a point with |φ| ≥ ε, certified by the maximum
/// principle and the Schwarz–Pick bound between boundary samples.
fn tile_witness(phi: &BoundedFunction, depth: u32, index: u64, eps: f64) -> Witness {
    let mut per_side = 32;
    loop {
        let (pts, eta) = tile_boundary_points(depth, index, per_side);
        let mut max_abs: f64 = 0.0;
        for z in &pts {
            let a = phi.abs(*z);
            if a >= eps {
                return Witness::Found;
            }
            max_abs = max_abs.max(a);
        }
        if eta < 1.0 && (max_abs + eta) / (1.0 + max_abs * eta) < eps {
            return Witness::Absent;
        }
        if per_side >= MAX_WITNESS_SAMPLES {
            return Witness::Ambiguous;
        }
        per_side *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub depth: u32,
    pub index: u64,
}

impl DyadicIndex {
    pub fn arc(&self) -> Arc {
        Arc::dyadic(self.depth, self.index)
    }

    fn children(&self) -> [DyadicIndex; 2] {
        [
            DyadicIndex {
                depth: self.depth + 1,
                index: 2 * self.index,
            },
            DyadicIndex {
                depth: self.depth + 1,
                index: 2 * self.index + 1,
            },
        ]
    }
}

/// Dyadic arcs of the given depth meeting `arc`.
fn dyadic_cover(arc: &Arc, depth: u32) -> Vec<DyadicIndex> {
    let n = 1u64 << depth;
    if arc.is_full() || arc.normalized_length() * n as f64 >= n as f64 - 1.0 {
        return (0..n).map(|index| DyadicIndex { depth, index }).collect();
    }
    let first = dyadic_index(arc.start_turn(), depth);
    let count = (arc.normalized_length() * n as f64).ceil() as u64 + 1;
    let mut out: Vec<DyadicIndex> = (0..=count)
        .map(|k| DyadicIndex {
            depth,
            index: (first + k) % n,
        })
        .filter(|d| d.arc().intersects(arc))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn depth_at_least(len_turns: f64) -> u32 {
    // largest d with 2^{-d} ≥ len, minus one so that every point of Q(J) lies in a tile at depth ≥ d
    let d = (1.0 / len_turns).log2().floor().max(0.0) as u32;
    d.saturating_sub(1)
}

/// Maximal dyadic arcs meeting J whose Whitney tile contains a witness
/// |φ| ≥ ε; the flag reports a descent stopped at the depth floor.
fn witness_intervals(
    phi: &BoundedFunction,
    j: &Arc,
    eps: f64,
    floor: u32,
    globally_small: bool,
) -> (Vec<DyadicIndex>, bool, usize) {
    if globally_small {
        return (Vec::new(), false, 0);
    }
    let d0 = depth_at_least(j.normalized_length());
    if d0 > floor {
        return (Vec::new(), true, 0);
    }
    let mut stack = dyadic_cover(j, d0);
    stack.reverse();
    let mut found = Vec::new();
    let mut truncated = false;
    let mut ambiguous = 0;
    while let Some(node) = stack.pop() {
        if !node.arc().intersects(j) {
            continue;
        }
        match tile_witness(phi, node.depth, node.index, eps) {
            Witness::Found => found.push(node),
            Witness::Ambiguous => {
                ambiguous += 1;
                found.push(node)
            }
            Witness::Absent => {
                if node.depth >= floor {
                    truncated = true;
                } else {
                    let [a, b] = node.children();
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
    }
    found.sort();
    (found, truncated, ambiguous)
}

/// Sorted disjoint sub-intervals of [0, 1] in turns.
#[derive(Debug, Clone, Default, PartialEq)]
struct TurnSet(Vec<(f64, f64)>);

impl TurnSet {
    fn from_arc(arc: &Arc) -> Self {
        if arc.is_full() {
            return Self(vec![(0.0, 1.0)]);
        }
        let a = arc.start_turn();
        let b = a + arc.normalized_length();
        if b <= 1.0 {
            Self(vec![(a, b)])
        } else {
            Self(vec![(0.0, b - 1.0), (a, 1.0)])
        }
    }

    fn union(arcs: &[Arc]) -> Self {
        let mut iv: Vec<(f64, f64)> = arcs.iter().flat_map(|a| Self::from_arc(a).0).collect();
        iv.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (a, b) in iv {
            match out.last_mut() {
                // open arcs only merge when they overlap
                Some(last) if a < last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self(out)
    }

    fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.0 {
            for &(c, d) in &other.0 {
                let lo = a.max(c);
                let hi = b.min(d);
                if hi > lo {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self(out)
    }

    /// Connected components as arcs, joining pieces across turn 0.
    fn to_arcs(&self) -> Vec<Arc> {
        let mut iv = self.0.clone();
        if iv.len() == 1 && iv[0] == (0.0, 1.0) {
            return vec![Arc::full_circle()];
        }
        if iv.len() >= 2 && iv[0].0 == 0.0 && iv[iv.len() - 1].1 == 1.0 {
            let first = iv.remove(0);
            let last = iv.last_mut().unwrap();
            last.1 = 1.0 + first.1;
        }
        iv.into_iter()
            .map(|(a, b)| Arc::from_turns(a, b - a))
            .collect()
    }
}

/// The outcome of the bad-interval selection over 5I.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadIntervals {
    /// maximal dyadic J ⊂ 5I with ν(Q(J)) > M|J|
    pub selected: Vec<Arc>,
    /// connected components of (∪ 5J_k) ∩ 5I
    pub components: Vec<Arc>,
    pub truncated: bool,
}

impl BadIntervals {
    pub fn total_length(&self) -> f64 {
        self.components
            .iter()
            .map(|a| a.normalized_length())
            .fold(0.0, |s, l| s + l)
    }
}

/// Select the intervals J ⊂ 5I with ν(Q(J)) > M|J| (lengths in turns),
/// keep the maximal ones and return the components of their 5-fold dilations.
pub fn select_bad_intervals(
    nu: &RepresentingMeasure,
    base: &Arc,
    m: f64,
    floor: u32,
) -> BadIntervals {
    let five = base.scaled(5.0);
    let d0 = depth_at_least(five.normalized_length()).saturating_sub(2);
    let mut stack = dyadic_cover(&five, d0);
    stack.reverse();
    let mut selected = Vec::new();
    let mut truncated = false;
    while let Some(node) = stack.pop() {
        let arc = node.arc();
        if !arc.intersects(&five) {
            continue;
        }
        let len = arc.normalized_length();
        if five.contains_arc(&arc) && nu.square_mass(&arc) > m * len {
            selected.push(arc);
            continue;
        }
        // ν(Q(J)) ≤ S + (ρ_max + #zeros)|J| for J ⊂ arc
        let singular = nu.singular_mass_in(&arc);
        let slope = nu.max_density_on_arc(&arc) + nu.zero_count_in(&arc) as f64;
        if singular == 0.0 && slope <= m {
            continue;
        }
        if node.depth >= floor {
            truncated = true;
            continue;
        }
        let [a, b] = node.children();
        stack.push(b);
        stack.push(a);
    }
    let dilated: Vec<Arc> = selected.iter().map(|a| a.scaled(5.0)).collect();
    let components = TurnSet::union(&dilated)
        .intersect(&TurnSet::from_arc(&five))
        .to_arcs();
    BadIntervals {
        selected,
        components,
        truncated,
    }
}

/// One building block of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionPiece {
    /// Q(base) minus the closed squares over `holes`.
    Residual { base: Arc, holes: Vec<Arc> },
    /// [Q(base) ∖ ∪Q(holes)] ∩ ∪ disks; disks as (centre, radius).
    ZeroDisks {
        base: Arc,
        holes: Vec<Arc>,
        disks: Vec<(Complex64, f64)>,
    },
}

impl RegionPiece {
    fn square_part(base: &Arc, holes: &[Arc], z: Complex64) -> bool {
        CarlesonSquare::closed(*base).contains(z)
            && !holes.iter().any(|h| CarlesonSquare::closed(*h).contains(z))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Self::Residual { base, holes } => Self::square_part(base, holes, z),
            Self::ZeroDisks { base, holes, disks } => {
                disks.iter().any(|(c, r)| (z - c).norm() < *r) && Self::square_part(base, holes, z)
            }
        }
    }
}

/// A region in D given by a membership predicate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub pieces: Vec<RegionPiece>,
}

impl Region {
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() < 1.0 && self.pieces.iter().any(|p| p.contains(z))
    }

    /// A copy with every disk radius multiplied by `factor`.
    pub fn with_disks_scaled(&self, factor: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| match p {
                RegionPiece::ZeroDisks { base, holes, disks } => RegionPiece::ZeroDisks {
                    base: *base,
                    holes: holes.clone(),
                    disks: disks.iter().map(|(c, r)| (*c, r * factor)).collect(),
                },
                other => other.clone(),
            })
            .collect();
        Self { pieces }
    }

    pub fn disks(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.pieces.iter().flat_map(|p| match p {
            RegionPiece::ZeroDisks { disks, .. } => disks.clone(),
            RegionPiece::Residual { .. } => Vec::new(),
        })
    }

    /// Polylines approximating ∂O ∩ D.
    pub fn boundary_polylines(
        &self,
        samples_per_curve: usize,
        depth_floor: u32,
    ) -> Vec<Vec<Complex64>> {
        let curves = candidate_curves(self, depth_floor);
        let samples = samples_per_curve.max(8);
        curves
            .par_iter()
            .flat_map(|c| trace_curve(self, c, samples))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Curve {
    Circle {
        center: Complex64,
        radius: f64,
    },
    /// radial segment at turn t from r0 towards the circle
    Radial {
        turn: f64,
        r0: f64,
        r_end: f64,
    },
    /// arc of |z| = radius over turns [t0, t0 + len]
    Circular {
        radius: f64,
        t0: f64,
        len: f64,
    },
}

impl Curve {
    fn point(&self, s: f64) -> (Complex64, Complex64, f64) {
        match *self {
            Curve::Circle { center, radius } => {
                let dir = Complex64::from_polar(1.0, TAU * s);
                (center + dir * radius, dir, radius)
            }
            Curve::Radial { turn, r0, r_end } => {
                // geometric in the distance to the circle
                let gap0 = 1.0 - r0;
                let gap = (gap0.ln() + s * ((1.0 - r_end).ln() - gap0.ln())).exp();
                let r = 1.0 - gap;
                let dir = Complex64::from_polar(1.0, TAU * turn);
                (dir * r, dir * Complex64::i(), gap.max(1e-300))
            }
            Curve::Circular { radius, t0, len } => {
                let dir = Complex64::from_polar(1.0, TAU * (t0 + s * len));
                (dir * radius, dir, (1.0 - radius).max(1e-300))
            }
        }
    }
}

fn square_edges(
    arc: &Arc,
    radial: &mut BTreeMap<u64, f64>,
    circular: &mut BTreeMap<u64, Vec<Arc>>,
) {
    let r0 = 1.0 - arc.normalized_length();
    if !arc.is_full() {
        for t in [
            arc.start_turn(),
            (arc.start_turn() + arc.normalized_length()).rem_euclid(1.0),
        ] {
            let key = t.to_bits();
            let e = radial.entry(key).or_insert(r0);
            *e = e.min(r0);
        }
    }
    if r0 > 0.0 {
        circular.entry(r0.to_bits()).or_default().push(*arc);
    }
}

fn candidate_curves(region: &Region, floor: u32) -> Vec<Curve> {
    let mut radial: BTreeMap<u64, f64> = BTreeMap::new();
    let mut circular: BTreeMap<u64, Vec<Arc>> = BTreeMap::new();
    let mut circles: Vec<(Complex64, f64)> = Vec::new();
    for p in &region.pieces {
        let (base, holes) = match p {
            RegionPiece::Residual { base, holes } => (base, holes),
            RegionPiece::ZeroDisks { base, holes, disks } => {
                circles.extend(disks.iter().copied());
                (base, holes)
            }
        };
        square_edges(base, &mut radial, &mut circular);
        for h in holes {
            square_edges(h, &mut radial, &mut circular);
        }
    }
    circles.sort_by(|a, b| {
        (a.0.re, a.0.im, a.1)
            .partial_cmp(&(b.0.re, b.0.im, b.1))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    circles.dedup();
    let end_gap = (-(floor as f64)).exp2();
    let mut curves: Vec<Curve> = circles
        .into_iter()
        .map(|(center, radius)| Curve::Circle { center, radius })
        .collect();
    for (key, r0) in radial {
        let r_end = 1.0 - (1.0 - r0) * end_gap;
        curves.push(Curve::Radial {
            turn: f64::from_bits(key),
            r0,
            r_end,
        });
    }
    for (key, arcs) in circular {
        let radius = f64::from_bits(key);
        for a in TurnSet::union(&arcs).to_arcs() {
            curves.push(Curve::Circular {
                radius,
                t0: a.start_turn(),
                len: a.normalized_length(),
            });
        }
    }
    curves
}

fn on_boundary(region: &Region, curve: &Curve, s: f64) -> bool {
    let (p, n, scale) = curve.point(s);
    if p.norm() >= 1.0 {
        return false;
    }
    let d = n * (scale * 1e-7);
    region.contains(p + d) != region.contains(p - d)
}

fn trace_curve(region: &Region, curve: &Curve, samples: usize) -> Vec<Vec<Complex64>> {
    let closed = matches!(curve, Curve::Circle { .. });
    let params: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
    let status: Vec<bool> = params
        .iter()
        .map(|&s| on_boundary(region, curve, s))
        .collect();
    let bisect = |mut lo: f64, mut hi: f64, lo_status: bool| {
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if on_boundary(region, curve, mid) == lo_status {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo_status {
            lo
        } else {
            hi
        }
    };
    let mut lines: Vec<Vec<Complex64>> = Vec::new();
    let mut current: Vec<Complex64> = Vec::new();
    for i in 0..=samples {
        if status[i] {
            if current.is_empty() && i > 0 {
                current.push(curve.point(bisect(params[i - 1], params[i], false)).0);
            }
            current.push(curve.point(params[i]).0);
        } else if !current.is_empty() {
            current.push(curve.point(bisect(params[i - 1], params[i], true)).0);
            lines.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        lines.push(current);
    }
    if closed && lines.len() >= 2 && status[0] && status[samples] {
        // the run through s = 0 wraps around
        let first = lines.remove(0);
        lines.last_mut().unwrap().extend(first.into_iter().skip(1));
    }
    lines.retain(|l| l.len() >= 2);
    lines
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourOptions {
    pub depth_floor: u32,
    pub samples_per_curve: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            depth_floor: DEFAULT_DEPTH_FLOOR,
            samples_per_curve: DEFAULT_CURVE_SAMPLES,
        }
    }
}

/// Per-generation bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub generation: usize,
    pub intervals: usize,
    pub witness_intervals: usize,
    pub ambiguous_witnesses: usize,
    /// max over I of Σ_k |I_k| / |I|
    pub worst_child_ratio: f64,
    /// every I satisfies Σ_k |I_k| ≤ |I|/100
    pub child_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourResult {
    pub region: Region,
    pub polylines: Vec<Vec<Complex64>>,
    pub constants: ContourConstants,
    pub derived: DerivedConstants,
    pub generations: Vec<GenerationReport>,
    pub truncated: bool,
}

struct LocalOutcome {
    pieces: Vec<RegionPiece>,
    children: Vec<Arc>,
    witnesses: usize,
    ambiguous: usize,
    worst_ratio: f64,
    truncated: bool,
}

fn local_construction(
    phi: &BoundedFunction,
    nu: &RepresentingMeasure,
    j: &Arc,
    d: &DerivedConstants,
    floor: u32,
    globally_small: bool,
) -> Result<LocalOutcome> {
    let (witnesses, mut truncated, ambiguous) =
        witness_intervals(phi, j, d.epsilon, floor, globally_small);
    let mut pieces = vec![RegionPiece::Residual {
        base: *j,
        holes: witnesses.iter().map(|w| w.arc()).collect(),
    }];
    let mut children = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for w in &witnesses {
        let arc = w.arc();
        let bad = select_bad_intervals(nu, &arc, d.m, floor);
        truncated |= bad.truncated;
        worst_ratio = worst_ratio.max(bad.total_length() / arc.normalized_length());
        let double = CarlesonSquare::closed(arc.scaled(2.0));
        let disks = nu
            .zero_atoms
            .iter()
            .filter(|(l, _)| double.contains(*l))
            .map(|(l, _)| pseudo_hyperbolic_disk(*l, d.gamma))
            .collect::<Result<Vec<_>>>()?;
        if !disks.is_empty() {
            pieces.push(RegionPiece::ZeroDisks {
                base: arc,
                holes: bad.components.clone(),
                disks,
            });
        }
        children.extend(bad.components);
    }
    Ok(LocalOutcome {
        pieces,
        children,
        witnesses: witnesses.len(),
        ambiguous,
        worst_ratio,
        truncated,
    })
}

/// Build a region O with {|φ| < ε′} ⊂ O ⊂ {|φ| ≤ ε} and the polyline ∂O ∩ D.
pub fn bourgain_contour(
    phi: &BoundedFunction,
    eps: f64,
    constants: ContourConstants,
    options: ContourOptions,
) -> Result<ContourResult> {
    let derived = constants.derive(eps)?;
    let nu = representing_measure(phi);
    let globally_small = phi.global_log_bound() < eps.ln();
    let mut region = Region::default();
    let mut generations = Vec::new();
    let mut truncated = false;
    let mut current = vec![Arc::full_circle()];
    for generation in 1..=MAX_GENERATIONS {
        if current.is_empty() {
            break;
        }
        let outcomes = current
            .par_iter()
            .map(|j| local_construction(phi, &nu, j, &derived, options.depth_floor, globally_small))
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::new();
        let mut report = GenerationReport {
            generation,
            intervals: current.len(),
            witness_intervals: 0,
            ambiguous_witnesses: 0,
            worst_child_ratio: 0.0,
            child_bound_holds: true,
        };
        for o in outcomes {
            region.pieces.extend(o.pieces);
            next.extend(o.children);
            report.witness_intervals += o.witnesses;
            report.ambiguous_witnesses += o.ambiguous;
            report.worst_child_ratio = report.worst_child_ratio.max(o.worst_ratio);
            truncated |= o.truncated;
        }
        report.child_bound_holds = report.worst_child_ratio <= 0.01;
        generations.push(report);
        current = next;
    }
    truncated |= !current.is_empty();
    let polylines = region.boundary_polylines(options.samples_per_curve, options.depth_floor);
    Ok(ContourResult {
        region,
        polylines,
        constants,
        derived,
        generations,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerification {
    pub samples: usize,
    /// points of O with |φ| > ε
    pub upper_violations: usize,
    /// points with |φ| < ε′ outside O
    pub lower_violations: usize,
    pub contour_length: f64,
    pub carleson_norm: f64,
    pub norm_target: f64,
    pub passed: bool,
}

/// Interior test points: a quasi-uniform grid, the zeros, and points inside
/// and around each disk of the region.
pub fn verification_samples(
    phi: &BoundedFunction,
    region: &Region,
    max_layer: u32,
) -> Vec<Complex64> {
    let mut pts = crate::disk::quasi_uniform_grid(max_layer);
    pts.extend(phi.zeros());
    for (c, r) in region.disks() {
        pts.push(c);
        for k in 0..8 {
            let dir = Complex64::from_polar(1.0, TAU * k as f64 / 8.0 + 0.3);
            for f in [0.5, 0.99, 1.01, 1.5] {
                let z = c + dir * (r * f);
                if z.norm() < 1.0 {
                    pts.push(z);
                }
            }
        }
    }
    pts
}

pub fn verify_region(
    phi: &BoundedFunction,
    region: &Region,
    polylines: &[Vec<Complex64>],
    eps: f64,
    log_eps_prime: f64,
    samples: &[Complex64],
    depth: u32,
) -> Result<RegionVerification> {
    let (upper, lower) = samples
        .par_iter()
        .map(|&z| {
            let inside = region.contains(z);
            let la = phi.log_abs(z);
            let up = inside && la > eps.ln() + 1e-12;
            let low = !inside && la < log_eps_prime;
            (up as usize, low as usize)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (contour_length, carleson_norm) = if polylines.is_empty() {
        (0.0, 0.0)
    } else {
        let mu = CurveMeasure::new(polylines.to_vec())?;
        (mu.total_length(), carleson_norm_curve(&mu, depth))
    };
    Ok(RegionVerification {
        samples: samples.len(),
        upper_violations: upper,
        lower_violations: lower,
        contour_length,
        carleson_norm,
        norm_target: CONTOUR_NORM_TARGET,
        passed: upper == 0 && lower == 0 && carleson_norm <= CONTOUR_NORM_TARGET,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_zeros(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| {
                Complex64::from_polar(
                    rng.random::<f64>().powf(0.3) * 0.999,
                    rng.random::<f64>() * TAU,
                )
            })
            .collect()
    }

    #[test]
    fn single_zero_measure() {
        let nu = representing_measure(&BoundedFunction::blaschke(&[c(0.5, 0.0)]).unwrap());
        assert_eq!(nu.zero_atoms.len(), 1);
        assert_abs_diff_eq!(nu.zero_atoms[0].1, 0.375, epsilon = 1e-15);
    }

    #[test]
    fn constant_modulus_density() {
        let phi = BoundedFunction::new(&[], vec![], Some(vec![0.3; 64])).unwrap();
        let nu = representing_measure(&phi);
        assert!(nu
            .ac_density
            .iter()
            .all(|d| (d - (1.0f64 / 0.3).ln()).abs() < 1e-15));
        assert_abs_diff_eq!(
            nu.square_mass(&Arc::full_circle()),
            (1.0f64 / 0.3).ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            nu.square_mass(&Arc::dyadic(2, 1)),
            0.25 * (1.0f64 / 0.3).ln(),
            epsilon = 1e-12
        );
        assert!(BoundedFunction::new(&[], vec![], Some(vec![1.1; 64])).is_err());
    }

    #[test]
    fn potential_at_origin_is_total_mass() {
        let u: Vec<f64> = (0..256)
            .map(|j| 0.6 + 0.3 * (TAU * j as f64 / 256.0).cos())
            .collect();
        let phi = BoundedFunction::new(
            &[c(0.4, 0.2), c(-0.7, 0.1)],
            vec![SingularAtom {
                angle: 1.0,
                mass: 0.3,
            }],
            Some(u),
        )
        .unwrap();
        let nu = representing_measure(&phi);
        assert_abs_diff_eq!(
            poisson_potential(&nu, c(0.0, 0.0)),
            nu.total_mass(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_zero_potential_below_log() {
        for r in [0.3, 0.7, 0.95] {
            let phi = BoundedFunction::blaschke(&[c(r, 0.0)]).unwrap();
            let nu = representing_measure(&phi);
            let p = poisson_potential(&nu, c(0.0, 0.0));
            assert_abs_diff_eq!(p, (1.0 - r * r) / 2.0, epsilon = 1e-15);
            assert!(p <= -(r as f64).ln());
        }
    }

    #[test]
    fn potential_bounds_hold_at_separated_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let eps = 0.1;
        let mut checked = 0;
        for _ in 0..20 {
            let phi = BoundedFunction::blaschke(&random_zeros(&mut rng, 10)).unwrap();
            let nu = representing_measure(&phi);
            for _ in 0..200 {
                let z = Complex64::from_polar(
                    rng.random::<f64>().sqrt() * 0.999,
                    rng.random::<f64>() * TAU,
                );
                let b = potential_bounds(&phi, &nu, z, eps, 1e-8);
                assert!(b.lower_holds);
                if let Some(up) = b.upper_holds {
                    checked += 1;
                    assert!(up, "{b:?}");
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn derived_constants() {
        let d = ContourConstants::default().derive(0.1).unwrap();
        let l = 10f64.ln();
        assert_abs_diff_eq!(d.m, 800.0 * l, epsilon = 1e-9);
        assert_abs_diff_eq!(d.gamma, 1.0 / (16.0 * 801.0 * l), epsilon = 1e-15);
        assert!(d.log_eps_prime < -1e5);
        assert_eq!(d.eps_prime(), 0.0);
    }

    #[test]
    fn no_bad_intervals_for_zero_measure() {
        let nu = representing_measure(&BoundedFunction::blaschke(&[]).unwrap());
        let bad = select_bad_intervals(&nu, &Arc::dyadic(3, 2), 10.0, 20);
        assert!(bad.selected.is_empty() && bad.components.is_empty());
    }

    #[test]
    fn heavy_atom_threshold() {
        let r = 1.0 - (-8f64).exp2();
        let angle = Arc::dyadic(3, 2).center_angle() + 0.01;
        let phi = BoundedFunction::blaschke(&[Complex64::from_polar(r, angle)]).unwrap();
        let nu = representing_measure(&phi);
        let base = Arc::dyadic(3, 2);
        let weight = nu.zero_atoms[0].1;
        assert!(select_bad_intervals(&nu, &base, 1e6, 20)
            .components
            .is_empty());
        let bad = select_bad_intervals(&nu, &base, 0.5 * weight / (-8f64).exp2(), 20);
        assert_eq!(bad.components.len(), 1);
        assert!(bad.components[0].contains_angle(angle));
        for comp in &bad.components {
            assert!(base.scaled(5.0).contains_arc(comp));
        }
    }

    #[test]
    fn bad_intervals_cover_every_heavy_arc() {
        // exhaustive check of the covering property on a small dyadic depth
        let phi = BoundedFunction::new(
            &[],
            vec![
                SingularAtom {
                    angle: 0.7,
                    mass: 0.02,
                },
                SingularAtom {
                    angle: 0.75,
                    mass: 0.01,
                },
                SingularAtom {
                    angle: 2.0,
                    mass: 0.03,
                },
            ],
            None,
        )
        .unwrap();
        let nu = representing_measure(&phi);
        let base = Arc::dyadic(2, 0);
        let m = 2.0;
        let bad = select_bad_intervals(&nu, &base, m, 12);
        let five = base.scaled(5.0);
        for d in 0..=12u32 {
            for j in 0..(1u64 << d) {
                let arc = Arc::dyadic(d, j);
                if five.contains_arc(&arc) && nu.square_mass(&arc) > m * arc.normalized_length() {
                    assert!(bad
                        .selected
                        .iter()
                        .any(|s| s.scaled(5.0).contains_arc(&arc)));
                }
            }
        }
        for (i, a) in bad.selected.iter().enumerate() {
            for b in &bad.selected[i + 1..] {
                assert!(!a.intersects(b));
            }
        }
    }

    #[test]
    fn outer_bounded_below_gives_empty_region() {
        let u: Vec<f64> = (0..128)
            .map(|j| 0.5 + 0.3 * (TAU * j as f64 / 128.0).sin().powi(2))
            .collect();
        let phi = BoundedFunction::new(&[], vec![], Some(u)).unwrap();
        let res = bourgain_contour(
            &phi,
            0.1,
            ContourConstants::default(),
            ContourOptions::default(),
        )
        .unwrap();
        assert!(res.polylines.is_empty());
        let samples = verification_samples(&phi, &res.region, 6);
        assert!(samples.iter().all(|z| !res.region.contains(*z)));
        let v = verify_region(
            &phi,
            &res.region,
            &res.polylines,
            0.1,
            res.derived.log_eps_prime,
            &samples,
            12,
        )
        .unwrap();
        assert!(v.passed);
        assert_eq!(v.carleson_norm, 0.0);
    }

    #[test]
    fn identity_function_contour() {
        let phi = BoundedFunction::blaschke(&[c(0.0, 0.0)]).unwrap();
        let res = bourgain_contour(
            &phi,
            0.1,
            ContourConstants::default(),
            ContourOptions::default(),
        )
        .unwrap();
        assert!(res.region.contains(c(0.0, 0.0)));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<Complex64> = (0..10_000)
            .map(|_| Complex64::from_polar(rng.random::<f64>() * 0.2, rng.random::<f64>() * TAU))
            .chain(verification_samples(&phi, &res.region, 6))
            .collect();
        let v = verify_region(
            &phi,
            &res.region,
            &res.polylines,
            0.1,
            res.derived.log_eps_prime,
            &samples,
            12,
        )
        .unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.carleson_norm <= 10.0);
        assert_abs_diff_eq!(
            v.contour_length,
            TAU * res.derived.gamma,
            epsilon = 1e-3 * res.derived.gamma
        );
    }

    #[test]
    fn enlarged_disks_are_caught() {
        // constants small enough that γ = ε
        let constants = ContourConstants {
            c1: 0.01,
            c2: 1.0,
            c3: 1.0,
        };
        let phi = BoundedFunction::blaschke(&[c(0.0, 0.0)]).unwrap();
        let res = bourgain_contour(&phi, 0.1, constants, ContourOptions::default()).unwrap();
        assert_abs_diff_eq!(res.derived.gamma, 0.1, epsilon = 1e-15);
        let samples = verification_samples(&phi, &res.region, 6);
        let ok = verify_region(
            &phi,
            &res.region,
            &res.polylines,
            0.1,
            res.derived.log_eps_prime,
            &samples,
            12,
        )
        .unwrap();
        assert_eq!(ok.upper_violations, 0);
        let bad = res.region.with_disks_scaled(2.0);
        let v = verify_region(
            &phi,
            &bad,
            &res.polylines,
            0.1,
            res.derived.log_eps_prime,
            &samples,
            12,
        )
        .unwrap();
        assert!(v.upper_violations > 0);
    }

    #[test]
    fn small_constant_fills_the_disk() {
        let phi = BoundedFunction::new(&[], vec![], Some(vec![0.05; 64])).unwrap();
        let res = bourgain_contour(
            &phi,
            0.1,
            ContourConstants::default(),
            ContourOptions::default(),
        )
        .unwrap();
        assert!(res.region.contains(c(0.3, 0.2)));
        assert!(res.polylines.is_empty());
        assert!(!res.truncated);
    }

    #[test]
    fn random_blaschke_product_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let phi = BoundedFunction::blaschke(&random_zeros(&mut rng, 50)).unwrap();
        let res = bourgain_contour(
            &phi,
            0.05,
            ContourConstants::default(),
            ContourOptions::default(),
        )
        .unwrap();
        assert!(res.generations.iter().all(|g| g.child_bound_holds));
        let samples = verification_samples(&phi, &res.region, 9);
        let v = verify_region(
            &phi,
            &res.region,
            &res.polylines,
            0.05,
            res.derived.log_eps_prime,
            &samples,
            12,
        )
        .unwrap();
        assert!(v.passed, "{v:?}");
    }

    #[test]
    fn turn_set_components() {
        let arcs = [
            Arc::from_turns(0.9, 0.2),
            Arc::from_turns(0.05, 0.1),
            Arc::from_turns(0.5, 0.1),
        ];
        let comps = TurnSet::union(&arcs).to_arcs();
        assert_eq!(comps.len(), 2);
        let wrapped = comps.iter().find(|a| a.contains_turn(0.0)).unwrap();
        assert_abs_diff_eq!(wrapped.start_turn(), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(wrapped.normalized_length(), 0.25, epsilon = 1e-12);
    }
}
