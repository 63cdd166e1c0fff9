//! Scalar model spaces K_θ = H² ⊖ θH² for finite Blaschke products and the
//! two-component subspaces M_{Θ,Δ,P} ⊂ H²(E) ⊕ L²(E_*) sampled on a
//! boundary grid, with their projections, distance formulas and
//! determinant/support counting.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blaschke::BlaschkeProduct;
use crate::disk::BlaschkeFactor;
use crate::error::{domain, Error, Result};
use crate::hardy::{BoundaryGrid, OuterFunction, Projection};
use crate::linalg::{
    hermitian_function, operator_norm, orthonormal_basis, rank, CMatrix, CVector, ZERO,
};
use crate::riesz::{kernel_gram, SubspaceSystem};

/// Tolerance for the triple identities and projection checks.
pub const TRIPLE_TOL: f64 = 1e-8;
/// Relative rank / support threshold for boundary supports.
pub const SUPPORT_TOL: f64 = 1e-8;

/// A scalar inner function given by a finite Blaschke product.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerFunction {
    product: BlaschkeProduct,
}

impl InnerFunction {
    pub fn new(zeros: &[Complex64]) -> Result<Self> {
        Ok(Self {
            product: BlaschkeProduct::with_multiplicity(zeros)?,
        })
    }

    pub fn from_product(product: BlaschkeProduct) -> Self {
        Self { product }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.product.eval(z)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.product.zeros()
    }

    pub fn product(&self) -> &BlaschkeProduct {
        &self.product
    }

    pub fn to_grid(&self, size: usize) -> Result<BoundaryGrid> {
        BoundaryGrid::from_fn(size, |z| self.eval(z))
    }
}

fn check_analytic(f: &BoundaryGrid) -> Result<()> {
    let size = f.antianalytic_size();
    if size > TRIPLE_TOL * f.norm().max(1.0) {
        return domain(format!(
            "input is not analytic (negative coefficient {size:.2e})"
        ));
    }
    Ok(())
}

/// P_θ f = f − θ·P₊(θ̄f) on the grid.
pub fn project_model(theta: &InnerFunction, f: &BoundaryGrid) -> Result<BoundaryGrid> {
    check_analytic(f)?;
    let t = theta.to_grid(f.len())?;
    Ok(project_model_on_grid(&t, f))
}

pub(crate) fn project_model_on_grid(theta: &BoundaryGrid, f: &BoundaryGrid) -> BoundaryGrid {
    let inner = theta.conj().mul(f).riesz_project(Projection::Plus);
    f.sub(&theta.mul(&inner))
}

/// Samples of k_λ on a grid.
pub fn kernel_grid(lambda: Complex64, size: usize) -> Result<BoundaryGrid> {
    if !(lambda.norm() < 1.0) {
        return domain("kernel point must be interior");
    }
    BoundaryGrid::from_fn(size, |z| crate::disk::kernel_unchecked(lambda, z))
}

/// The kernel frame of K_θ: {k_λ}_{λ∈σ}, its Gram matrix and the
/// coefficients G^{−1/2} of an orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSubspace {
    pub zeros: Vec<Complex64>,
    pub gram: CMatrix,
    pub orthonormal_coefficients: CMatrix,
}

impl ModelSubspace {
    pub fn new(theta: &InnerFunction) -> Result<Self> {
        let zeros = theta.zeros();
        BlaschkeProduct::new(&zeros)?;
        let gram = kernel_gram(&zeros)?;
        let orthonormal_coefficients = hermitian_function(&gram, |x| x.powf(-0.5));
        Ok(Self {
            zeros,
            gram,
            orthonormal_coefficients,
        })
    }

    pub fn dim(&self) -> usize {
        self.zeros.len()
    }
}

/// One entry of a matrix function: a polynomial times a finite Blaschke product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub coeffs: Vec<Complex64>,
    #[serde(default)]
    pub zeros: Vec<Complex64>,
}

impl MatrixEntry {
    pub fn constant(c: Complex64) -> Self {
        Self {
            coeffs: vec![c],
            zeros: Vec::new(),
        }
    }

    pub fn blaschke(zeros: Vec<Complex64>) -> Self {
        Self {
            coeffs: vec![Complex64::new(1.0, 0.0)],
            zeros,
        }
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        Self {
            coeffs,
            zeros: Vec::new(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let p = self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c);
        if self.zeros.is_empty() || p == ZERO {
            return p;
        }
        self.zeros.iter().fold(p, |acc, &l| {
            acc * BlaschkeFactor::new(l).expect("validated zero").eval(z)
        })
    }
}

/// Analytic matrix function E_1 → E with rows = dim E and cols = dim E_1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFunction {
    rows: usize,
    cols: usize,
    entries: Vec<MatrixEntry>,
}

impl MatrixFunction {
    /// Entries in row-major order.
    pub fn new(rows: usize, cols: usize, entries: Vec<MatrixEntry>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}×{cols} matrix",
                entries.len()
            )));
        }
        for e in &entries {
            for &z in &e.zeros {
                BlaschkeFactor::new(z)?;
            }
            if e.coeffs.is_empty() {
                return domain("entry without coefficients");
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn scalar(entry: MatrixEntry) -> Self {
        Self {
            rows: 1,
            cols: 1,
            entries: vec![entry],
        }
    }

    pub fn diagonal(entries: Vec<MatrixEntry>) -> Self {
        let d = entries.len();
        let mut all = vec![MatrixEntry::constant(ZERO); d * d];
        for (i, e) in entries.into_iter().enumerate() {
            all[i * d + i] = e;
        }
        Self {
            rows: d,
            cols: d,
            entries: all,
        }
    }

    /// θ·I_d for a scalar entry θ.
    pub fn scalar_identity(entry: MatrixEntry, d: usize) -> Self {
        Self::diagonal(vec![entry; d])
    }

    /// Σ_j A_j z^j from coefficient matrices.
    pub fn from_coefficient_matrices(coeffs: &[CMatrix]) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return domain("no coefficients");
        };
        let (rows, cols) = first.shape();
        if coeffs.iter().any(|c| c.shape() != (rows, cols)) {
            return Err(Error::Dimension("coefficient shapes differ".into()));
        }
        let entries = (0..rows * cols)
            .map(|k| {
                MatrixEntry::polynomial(coeffs.iter().map(|c| c[(k / cols, k % cols)]).collect())
            })
            .collect();
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[MatrixEntry] {
        &self.entries
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.entries[i * self.cols + j].eval(z)
        })
    }

    pub fn sample(&self, size: usize) -> Vec<CMatrix> {
        (0..size)
            .into_par_iter()
            .map(|j| self.eval(BoundaryGrid::node(j, size)))
            .collect()
    }

    /// Largest boundary singular value over a grid.
    pub fn boundary_sup_norm(&self, size: usize) -> f64 {
        self.sample(size)
            .iter()
            .map(operator_norm)
            .fold(0.0, f64::max)
    }

    pub fn is_contractive(&self, size: usize) -> bool {
        self.boundary_sup_norm(size) <= 1.0 + 1e-8
    }
}

/// det Θ(z) for square Θ; 0 when dim E_1 < dim E and 1 when dim E_1 > dim E.
pub fn det_theta(theta: &MatrixFunction, z: Complex64) -> Complex64 {
    match theta.cols.cmp(&theta.rows) {
        std::cmp::Ordering::Less => ZERO,
        std::cmp::Ordering::Greater => Complex64::new(1.0, 0.0),
        std::cmp::Ordering::Equal => theta.eval(z).determinant(),
    }
}

/// max over the grid of #{n : |det Θ_n(z)| < ε^d}, d = dim E.
pub fn covering_count(
    family: &[MatrixFunction],
    eps: f64,
    z_grid: &[Complex64],
) -> Result<(usize, Complex64)> {
    let Some(first) = family.first() else {
        return Ok((0, ZERO));
    };
    let d = first.rows;
    if family.iter().any(|t| t.rows != d) {
        return Err(Error::Dimension(
            "family members map into different spaces".into(),
        ));
    }
    let threshold = eps.powi(d as i32);
    Ok(z_grid
        .par_iter()
        .map(|&z| {
            let count = family
                .iter()
                .filter(|t| det_theta(t, z).norm() < threshold)
                .count();
            (count, z)
        })
        .reduce(|| (0, ZERO), |a, b| if b.0 > a.0 { b } else { a }))
}

/// The subspaces K_{θ_n} ⊂ H² as one system, each carried by the
/// orthonormalized kernels at the zeros of θ_n.
pub fn model_space_system(family: &[InnerFunction]) -> Result<SubspaceSystem> {
    let spaces = family
        .iter()
        .map(ModelSubspace::new)
        .collect::<Result<Vec<_>>>()?;
    if spaces.iter().any(|s| s.dim() == 0) {
        return domain("constant inner function gives a trivial model space");
    }
    let zeros: Vec<Complex64> = spaces
        .iter()
        .flat_map(|s| s.zeros.iter().copied())
        .collect();
    let total = zeros.len();
    let mut coeffs = CMatrix::zeros(total, total);
    let mut offset = 0;
    for s in &spaces {
        coeffs
            .view_mut((offset, offset), (s.dim(), s.dim()))
            .copy_from(&s.orthonormal_coefficients);
        offset += s.dim();
    }
    let gram = coeffs.adjoint() * kernel_gram(&zeros)? * &coeffs;
    SubspaceSystem::from_gram(gram, spaces.iter().map(ModelSubspace::dim).collect())
}

/// Boundary data (Θ, Δ, P) sampled on a grid of `size` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTriple {
    theta: Vec<CMatrix>,
    delta: Vec<CMatrix>,
    projection: Vec<CMatrix>,
    theta_function: Option<MatrixFunction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleDefects {
    /// max ‖Θ*Θ + Δ*Δ − I‖
    pub isometry: f64,
    /// max ‖P Δ‖
    pub orthogonality: f64,
    /// max of ‖P² − P‖ and ‖P − P*‖
    pub projection: f64,
}

impl ModelTriple {
    /// Validated triple from boundary samples of Θ (dim E × dim E_1),
    /// Δ (dim E_* × dim E_1) and P (dim E_* × dim E_*).
    pub fn from_samples(
        theta: Vec<CMatrix>,
        delta: Vec<CMatrix>,
        projection: Vec<CMatrix>,
    ) -> Result<Self> {
        let t = Self {
            theta,
            delta,
            projection,
            theta_function: None,
        };
        t.check_shapes()?;
        let d = t.defects();
        if d.isometry > TRIPLE_TOL || d.orthogonality > TRIPLE_TOL || d.projection > TRIPLE_TOL {
            return domain(format!("invalid triple: {d:?}"));
        }
        Ok(t)
    }

    pub fn new(
        theta: &MatrixFunction,
        delta: Vec<CMatrix>,
        projection: Vec<CMatrix>,
    ) -> Result<Self> {
        let samples = theta.sample(delta.len());
        let mut t = Self::from_samples(samples, delta, projection)?;
        t.theta_function = Some(theta.clone());
        Ok(t)
    }

    /// Θ inner: Δ = 0 (with dim E_* = `e_star`) and P ≡ `p_const`.
    pub fn inner(
        theta: &MatrixFunction,
        size: usize,
        e_star: usize,
        p_const: &CMatrix,
    ) -> Result<Self> {
        let delta = vec![CMatrix::zeros(e_star, theta.cols); size];
        Self::new(theta, delta, vec![p_const.clone(); size])
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.theta.len();
        if n < 2 || !n.is_power_of_two() || self.delta.len() != n || self.projection.len() != n {
            return Err(Error::Dimension(
                "samples must share a power-of-two grid".into(),
            ));
        }
        let (e, e1) = self.theta[0].shape();
        let es = self.delta[0].nrows();
        for j in 0..n {
            if self.theta[j].shape() != (e, e1)
                || self.delta[j].shape() != (es, e1)
                || self.projection[j].shape() != (es, es)
            {
                return Err(Error::Dimension(format!(
                    "inconsistent shapes at sample {j}"
                )));
            }
        }
        Ok(())
    }

    pub fn defects(&self) -> TripleDefects {
        let mut out = TripleDefects {
            isometry: 0.0,
            orthogonality: 0.0,
            projection: 0.0,
        };
        for ((t, d), p) in self.theta.iter().zip(&self.delta).zip(&self.projection) {
            let e1 = t.ncols();
            let iso = t.adjoint() * t + d.adjoint() * d - CMatrix::identity(e1, e1);
            out.isometry = out.isometry.max(operator_norm(&iso));
            if d.nrows() > 0 {
                out.orthogonality = out.orthogonality.max(operator_norm(&(p * d)));
                out.projection = out
                    .projection
                    .max(operator_norm(&(p * p - p)))
                    .max(operator_norm(&(p - p.adjoint())));
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        self.theta.len()
    }

    pub fn dim_e(&self) -> usize {
        self.theta[0].nrows()
    }

    pub fn dim_e1(&self) -> usize {
        self.theta[0].ncols()
    }

    pub fn dim_e_star(&self) -> usize {
        self.delta[0].nrows()
    }

    pub fn theta_samples(&self) -> &[CMatrix] {
        &self.theta
    }

    pub fn delta_samples(&self) -> &[CMatrix] {
        &self.delta
    }

    pub fn projection_samples(&self) -> &[CMatrix] {
        &self.projection
    }

    /// Θ(λ) from the analytic description, or from the Taylor coefficients
    /// of the boundary samples when only samples are known.
    pub fn theta_at(&self, lambda: Complex64) -> CMatrix {
        if let Some(f) = &self.theta_function {
            return f.eval(lambda);
        }
        let (r, c) = self.theta[0].shape();
        CMatrix::from_fn(r, c, |i, j| {
            let g = BoundaryGrid::new(self.theta.iter().map(|m| m[(i, j)]).collect())
                .expect("power-of-two grid");
            let coeffs = g.coefficients();
            coeffs[..coeffs.len() / 2]
                .iter()
                .rev()
                .fold(ZERO, |acc, &a| acc * lambda + a)
        })
    }
}

/// A vector-valued grid function stored as one grid per component.
pub type VectorGrid = Vec<BoundaryGrid>;

fn apply(mats: &[CMatrix], adjoint: bool, f: &VectorGrid) -> Result<VectorGrid> {
    let n = mats.len();
    let (r, c) = mats[0].shape();
    let (in_dim, out_dim) = if adjoint { (r, c) } else { (c, r) };
    if f.len() != in_dim || f.iter().any(|g| g.len() != n) {
        return Err(Error::Dimension(format!(
            "expected {in_dim} components of length {n}, got {}",
            f.len()
        )));
    }
    let mut out = vec![vec![ZERO; n]; out_dim];
    for j in 0..n {
        let v = CVector::from_iterator(in_dim, f.iter().map(|g| g.values()[j]));
        let w = if adjoint {
            mats[j].adjoint() * v
        } else {
            &mats[j] * v
        };
        for (k, x) in w.iter().enumerate() {
            out[k][j] = *x;
        }
    }
    out.into_iter().map(BoundaryGrid::new).collect()
}

fn add_vec(a: &VectorGrid, b: &VectorGrid) -> VectorGrid {
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

fn zeros_vec(dim: usize, size: usize) -> VectorGrid {
    (0..dim)
        .map(|_| BoundaryGrid::zeros(size).expect("power of two"))
        .collect()
}

pub fn vector_norm(f: &VectorGrid) -> f64 {
    f.iter().map(|g| g.norm().powi(2)).sum::<f64>().sqrt()
}

pub fn vector_inner(f: &VectorGrid, g: &VectorGrid) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a.inner(b)).sum()
}

fn plus(f: &VectorGrid) -> VectorGrid {
    f.iter()
        .map(|g| g.riesz_project(Projection::Plus))
        .collect()
}

/// P_M(f, g) = (Θ; Δ)P₊(Θ*f + Δ*g) + (0; Pg).
pub fn two_component_project(
    t: &ModelTriple,
    f: &VectorGrid,
    g: &VectorGrid,
) -> Result<(VectorGrid, VectorGrid)> {
    for c in f {
        check_analytic(c)?;
    }
    project_m_unchecked(t, f, g)
}

fn project_m_unchecked(
    t: &ModelTriple,
    f: &VectorGrid,
    g: &VectorGrid,
) -> Result<(VectorGrid, VectorGrid)> {
    let h = plus(&add_vec(
        &apply(&t.theta, true, f)?,
        &apply(&t.delta, true, g)?,
    ));
    let first = apply(&t.theta, false, &h)?;
    let second = add_vec(
        &apply(&t.delta, false, &h)?,
        &apply(&t.projection, false, g)?,
    );
    Ok((first, second))
}

/// The K-side projection, identity minus P_M.
pub fn project_k(
    t: &ModelTriple,
    f: &VectorGrid,
    g: &VectorGrid,
) -> Result<(VectorGrid, VectorGrid)> {
    let (a, b) = project_m_unchecked(t, f, g)?;
    Ok((
        f.iter().zip(&a).map(|(x, y)| x.sub(y)).collect(),
        g.iter().zip(&b).map(|(x, y)| x.sub(y)).collect(),
    ))
}

/// Inputs of the distance formulas.
#[derive(Debug, Clone)]
pub enum DistanceDatum {
    /// (f, 0) with f analytic
    Analytic(VectorGrid),
    /// (k_λ e, 0)
    Kernel { lambda: Complex64, e: CVector },
    /// (0, f) with f ∈ L²(E_*)
    CoAnalytic(VectorGrid),
}

/// dist(datum, K_{Θ,Δ,P}) by the closed forms.
pub fn distance_to_k(t: &ModelTriple, datum: &DistanceDatum) -> Result<f64> {
    match datum {
        DistanceDatum::Analytic(f) => {
            for c in f {
                check_analytic(c)?;
            }
            Ok(vector_norm(&plus(&apply(&t.theta, true, f)?)))
        }
        DistanceDatum::Kernel { lambda, e } => {
            if e.len() != t.dim_e() {
                return Err(Error::Dimension("e must lie in E".into()));
            }
            if !(lambda.norm() < 1.0) {
                return domain("λ must be interior");
            }
            Ok((t.theta_at(*lambda).adjoint() * e).norm())
        }
        DistanceDatum::CoAnalytic(f) => {
            let pf = vector_norm(&apply(&t.projection, false, f)?);
            let pd = vector_norm(&plus(&apply(&t.delta, true, f)?));
            Ok((pf * pf + pd * pd).sqrt())
        }
    }
}

/// The grid representation of a distance datum as a pair (f, g).
pub fn datum_to_pair(t: &ModelTriple, datum: &DistanceDatum) -> Result<(VectorGrid, VectorGrid)> {
    let n = t.size();
    Ok(match datum {
        DistanceDatum::Analytic(f) => (f.clone(), zeros_vec(t.dim_e_star(), n)),
        DistanceDatum::Kernel { lambda, e } => {
            let k = kernel_grid(*lambda, n)?;
            (
                e.iter().map(|&c| k.map(|v| v * c)).collect(),
                zeros_vec(t.dim_e_star(), n),
            )
        }
        DistanceDatum::CoAnalytic(f) => (zeros_vec(t.dim_e(), n), f.clone()),
    })
}

/// Maximal multiplicities of the supports σ_k = {‖Δ_k‖ > tol} and
/// τ_k = {rank P_k + rank Δ_k < d_*} over the grid samples.
pub fn support_cover_count(family: &[ModelTriple]) -> Result<(usize, usize)> {
    let Some(first) = family.first() else {
        return Ok((0, 0));
    };
    let n = first.size();
    let ds = first.dim_e_star();
    if family.iter().any(|t| t.size() != n || t.dim_e_star() != ds) {
        return Err(Error::Dimension(
            "triples must share the grid and E_*".into(),
        ));
    }
    let supports: Vec<(Vec<bool>, Vec<bool>)> = family
        .par_iter()
        .map(|t| {
            let mut sigma = vec![false; n];
            let mut tau = vec![false; n];
            for j in 0..n {
                let d = &t.delta[j];
                sigma[j] = ds > 0 && operator_norm(d) > SUPPORT_TOL;
                let rd = if sigma[j] { rank(d, SUPPORT_TOL) } else { 0 };
                tau[j] = rank(&t.projection[j], SUPPORT_TOL) + rd < ds;
            }
            (sigma, tau)
        })
        .collect();
    let mut best = (0, 0);
    for j in 0..n {
        let s = supports.iter().filter(|x| x.0[j]).count();
        let t = supports.iter().filter(|x| x.1[j]).count();
        best = (best.0.max(s), best.1.max(t));
    }
    Ok(best)
}

/// A random polynomial matrix of the given degree scaled so that its
/// boundary sup norm over the grid equals `sup_norm` (< 1 keeps Δ invertible).
pub fn random_contraction<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    degree: usize,
    size: usize,
    sup_norm: f64,
) -> Result<MatrixFunction> {
    let coeffs: Vec<CMatrix> = (0..=degree)
        .map(|_| {
            CMatrix::from_fn(rows, cols, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        })
        .collect();
    let raw = MatrixFunction::from_coefficient_matrices(&coeffs)?;
    let scale = sup_norm / raw.boundary_sup_norm(size);
    let scaled: Vec<CMatrix> = coeffs
        .iter()
        .map(|c| c * Complex64::new(scale, 0.0))
        .collect();
    MatrixFunction::from_coefficient_matrices(&scaled)
}

fn complement_projection(range: &CMatrix, dim: usize) -> CMatrix {
    if range.ncols() == 0 {
        return CMatrix::identity(dim, dim);
    }
    let q = orthonormal_basis(range, 1e-14);
    CMatrix::identity(dim, dim) - &q * q.adjoint()
}

/// The triple with Δ = [(I − Θ*Θ)^{1/2}; 0] in E_* = C^{e_star} and P the
/// projection onto the orthogonal complement of Range Δ.
pub fn defect_triple(theta: &MatrixFunction, size: usize, e_star: usize) -> Result<ModelTriple> {
    let e1 = theta.cols();
    if e_star < e1 {
        return Err(Error::Dimension(format!(
            "dim E_* = {e_star} < dim E_1 = {e1}"
        )));
    }
    let samples = theta.sample(size);
    let mut delta = Vec::with_capacity(size);
    let mut projection = Vec::with_capacity(size);
    for t in &samples {
        let defect = CMatrix::identity(e1, e1) - t.adjoint() * t;
        let root = hermitian_function(&defect, |x| x.max(0.0).sqrt());
        let mut d = CMatrix::zeros(e_star, e1);
        d.view_mut((0, 0), (e1, e1)).copy_from(&root);
        projection.push(complement_projection(&d, e_star));
        delta.push(d);
    }
    ModelTriple::new(theta, delta, projection)
}

fn smooth_bump(t: f64, start: f64, len: f64) -> f64 {
    let x = (t - start).rem_euclid(std::f64::consts::TAU) / len;
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let y = 2.0 * x - 1.0;
    (1.0 - 1.0 / (1.0 - y * y)).exp()
}

fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// A family of scalar-Θ triples in E_* = C^{d_star} whose defect supports σ_k
/// and rank-deficiency supports τ_k are arcs arranged in `d_star` rounds of
/// disjoint arcs, so both multiplicities are at most `d_star`.
///
/// Θ_k is the outer function with |Θ_k|² = 1 − s_k² b_k² for a smooth bump
/// b_k on σ_k, and Δ_k = s_k b_k v_k.
pub fn bounded_support_family<R: Rng>(
    rng: &mut R,
    arcs_per_round: usize,
    d_star: usize,
    size: usize,
) -> Result<Vec<ModelTriple>> {
    if d_star == 0 || arcs_per_round == 0 {
        return domain("need at least one round and one arc");
    }
    let tau_len = std::f64::consts::TAU / arcs_per_round as f64;
    let mut family = Vec::new();
    for _round in 0..d_star {
        let offset = rng.random::<f64>() * tau_len;
        for k in 0..arcs_per_round {
            let start = offset + k as f64 * tau_len;
            let sigma_len = tau_len * rng.random_range(0.3..1.0);
            let tau_start = start + tau_len * rng.random_range(0.0..0.5);
            let tau_arc = tau_len * rng.random_range(0.0..0.5);
            let strength = rng.random_range(0.2..0.95);
            let v = random_unit(rng, d_star);
            let w = random_unit(rng, d_star);
            let bumps: Vec<f64> = (0..size)
                .map(|j| {
                    strength
                        * smooth_bump(
                            std::f64::consts::TAU * j as f64 / size as f64,
                            start,
                            sigma_len,
                        )
                })
                .collect();
            let log_u: Vec<f64> = bumps.iter().map(|b| 0.5 * (1.0 - b * b).ln()).collect();
            let outer = OuterFunction::from_log_modulus(&log_u)?;
            let mut theta = Vec::with_capacity(size);
            let mut delta = Vec::with_capacity(size);
            let mut projection = Vec::with_capacity(size);
            for j in 0..size {
                let t = std::f64::consts::TAU * j as f64 / size as f64;
                let b = bumps[j];
                let in_tau = smooth_bump(t, tau_start, tau_arc) > 0.0;
                theta.push(CMatrix::from_element(
                    1,
                    1,
                    outer.boundary_values().values()[j],
                ));
                let d = CMatrix::from_fn(d_star, 1, |i, _| v[i] * b);
                let mut cols = Vec::new();
                if b > 0.0 {
                    cols.push(v.clone());
                }
                if in_tau {
                    cols.push(w.clone());
                }
                projection.push(if cols.is_empty() {
                    CMatrix::identity(d_star, d_star)
                } else {
                    complement_projection(&CMatrix::from_columns(&cols), d_star)
                });
                delta.push(d);
            }
            family.push(ModelTriple::from_samples(theta, delta, projection)?);
        }
    }
    Ok(family)
}

/// Σ_n ‖P_{K_n}(0, f)‖² from the closed form and from the grid projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoAnalyticSum {
    pub closed_form: f64,
    pub projected: f64,
    pub f_norm_squared: f64,
}

pub fn coanalytic_projection_sum(family: &[ModelTriple], f: &VectorGrid) -> Result<CoAnalyticSum> {
    let f2 = vector_norm(f).powi(2);
    let parts: Vec<Result<(f64, f64)>> = family
        .par_iter()
        .map(|t| {
            let dist = distance_to_k(t, &DistanceDatum::CoAnalytic(f.clone()))?;
            let (a, b) = project_k(t, &zeros_vec(t.dim_e(), t.size()), f)?;
            Ok((
                f2 - dist * dist,
                vector_norm(&a).powi(2) + vector_norm(&b).powi(2),
            ))
        })
        .collect();
    let mut out = CoAnalyticSum {
        closed_form: 0.0,
        projected: 0.0,
        f_norm_squared: f2,
    };
    for p in parts {
        let (c, d) = p?;
        out.closed_form += c;
        out.projected += d;
    }
    Ok(out)
}

/// (Σ_n ‖P_{θ_n} k_λ‖², Σ_n (1 − |θ_n(λ)|²)) with the left side computed on a grid.
pub fn scalar_kernel_sums(
    family: &[InnerFunction],
    lambda: Complex64,
    size: usize,
) -> Result<(f64, f64)> {
    let k = kernel_grid(lambda, size)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for theta in family {
        let t = theta.to_grid(size)?;
        lhs += project_model_on_grid(&t, &k).norm().powi(2);
        rhs += 1.0 - theta.eval(lambda).norm_sqr();
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn taylor_truncation_for_z_squared() {
        let theta = InnerFunction::new(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let f = BoundaryGrid::from_fn(64, |z| 1.0 + z + z * z).unwrap();
        let p = project_model(&theta, &f).unwrap();
        for (z, v) in p.nodes().zip(p.values()) {
            assert_abs_diff_eq!(*v, 1.0 + z, epsilon = 1e-13);
        }
    }

    #[test]
    fn kernel_lies_in_its_model_space() {
        let l = c(0.4, -0.3);
        let theta = InnerFunction::new(&[l]).unwrap();
        let k = kernel_grid(l, 1024).unwrap();
        let p = project_model(&theta, &k).unwrap();
        assert!(p.sub(&k).norm() < 1e-12);
        assert!(project_model(&theta, &k.conj()).is_err());
    }

    #[test]
    fn kernel_norm_identity() {
        let zeros = [c(0.2, 0.5), c(-0.6, 0.1), c(0.7, -0.2)];
        let theta = InnerFunction::new(&zeros).unwrap();
        let l = c(0.1, 0.35);
        let p = project_model(&theta, &kernel_grid(l, 1 << 12).unwrap()).unwrap();
        assert_abs_diff_eq!(
            p.norm().powi(2),
            1.0 - theta.eval(l).norm_sqr(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn det_conventions() {
        let mu = c(0.3, 0.1);
        let diag = MatrixFunction::diagonal(vec![
            MatrixEntry::blaschke(vec![mu]),
            MatrixEntry::constant(c(1.0, 0.0)),
        ]);
        let z = c(-0.2, 0.4);
        assert_abs_diff_eq!(
            det_theta(&diag, z),
            BlaschkeFactor::new(mu).unwrap().eval(z),
            epsilon = 1e-15
        );
        let tall = MatrixFunction::new(2, 1, vec![MatrixEntry::constant(c(1.0, 0.0)); 2]).unwrap();
        assert_eq!(det_theta(&tall, z), ZERO);
        let wide = MatrixFunction::new(1, 2, vec![MatrixEntry::constant(c(1.0, 0.0)); 2]).unwrap();
        assert_eq!(det_theta(&wide, z), c(1.0, 0.0));
    }

    #[test]
    fn covering_examples() {
        let z0 = MatrixFunction::scalar(MatrixEntry::blaschke(vec![c(0.0, 0.0)]));
        let grid = [c(0.0, 0.0), c(0.9, 0.0)];
        assert_eq!(covering_count(&[z0.clone()], 0.5, &grid).unwrap().0, 1);
        let mu = c(0.3, 0.3);
        let a = MatrixFunction::scalar(MatrixEntry::blaschke(vec![mu]));
        assert_eq!(covering_count(&[a.clone(), a], 0.5, &[mu]).unwrap().0, 2);
    }

    #[test]
    fn scalar_inner_triple_projects_onto_theta_h2() {
        let theta = MatrixFunction::scalar(MatrixEntry::blaschke(vec![c(0.5, 0.2)]));
        let n = 256;
        let t = ModelTriple::inner(&theta, n, 1, &CMatrix::zeros(1, 1)).unwrap();
        let f = vec![BoundaryGrid::from_fn(n, |z| 2.0 + z * z - z * 0.3).unwrap()];
        let g = vec![BoundaryGrid::zeros(n).unwrap()];
        let (m, _) = two_component_project(&t, &f, &g).unwrap();
        let inner = InnerFunction::new(&[c(0.5, 0.2)]).unwrap();
        let k = project_model(&inner, &f[0]).unwrap();
        assert!(m[0].add(&k).sub(&f[0]).norm() < 1e-12);
    }

    #[test]
    fn kernel_distance_scalar() {
        let mu = c(0.3, -0.2);
        let theta = MatrixFunction::scalar(MatrixEntry::blaschke(vec![mu]));
        let t = ModelTriple::inner(&theta, 512, 0, &CMatrix::zeros(0, 0)).unwrap();
        let l = c(-0.1, 0.6);
        let e = CVector::from_element(1, c(1.0, 0.0));
        let datum = DistanceDatum::Kernel { lambda: l, e };
        let d = distance_to_k(&t, &datum).unwrap();
        assert_abs_diff_eq!(
            d,
            BlaschkeFactor::new(mu).unwrap().modulus(l),
            epsilon = 1e-14
        );
        let (f, g) = datum_to_pair(&t, &datum).unwrap();
        let (a, b) = two_component_project(&t, &f, &g).unwrap();
        assert_abs_diff_eq!(
            (vector_norm(&a).powi(2) + vector_norm(&b).powi(2)).sqrt(),
            d,
            epsilon = 1e-10
        );
    }

    #[test]
    fn support_counts() {
        let n = 64;
        let theta = MatrixFunction::scalar(MatrixEntry::constant(c(1.0, 0.0)));
        let t = ModelTriple::inner(&theta, n, 1, &CMatrix::identity(1, 1)).unwrap();
        assert_eq!(support_cover_count(&[t.clone(), t]).unwrap(), (0, 0));
    }

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_analytic(rng: &mut ChaCha8Rng, dim: usize, size: usize, degree: usize) -> VectorGrid {
        (0..dim)
            .map(|_| {
                let coeffs: Vec<Complex64> = (0..=degree)
                    .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect();
                BoundaryGrid::from_fn(size, |z| coeffs.iter().rev().fold(ZERO, |a, &x| a * z + x))
                    .unwrap()
            })
            .collect()
    }

    fn random_l2(rng: &mut ChaCha8Rng, dim: usize, size: usize) -> VectorGrid {
        (0..dim)
            .map(|_| {
                BoundaryGrid::new(
                    (0..size)
                        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                        .collect(),
                )
                .unwrap()
            })
            .collect()
    }

    fn pair_distance(a: &(VectorGrid, VectorGrid), b: &(VectorGrid, VectorGrid)) -> f64 {
        let d1: VectorGrid = a.0.iter().zip(&b.0).map(|(x, y)| x.sub(y)).collect();
        let d2: VectorGrid = a.1.iter().zip(&b.1).map(|(x, y)| x.sub(y)).collect();
        (vector_norm(&d1).powi(2) + vector_norm(&d2).powi(2)).sqrt()
    }

    #[test]
    fn random_triple_projection_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1 << 10;
        let theta = random_contraction(&mut rng, 2, 2, 3, n, 0.9).unwrap();
        let t = defect_triple(&theta, n, 2).unwrap();
        for _ in 0..20 {
            let f = random_analytic(&mut rng, 2, n, 6);
            let g = random_l2(&mut rng, 2, n);
            let p1 = two_component_project(&t, &f, &g).unwrap();
            let p2 = project_m_unchecked(&t, &p1.0, &p1.1).unwrap();
            assert!(pair_distance(&p1, &p2) < 1e-8);
            let f2 = random_analytic(&mut rng, 2, n, 6);
            let g2 = random_l2(&mut rng, 2, n);
            let q = project_m_unchecked(&t, &f2, &g2).unwrap();
            let lhs = vector_inner(&p1.0, &f2) + vector_inner(&p1.1, &g2);
            let rhs = vector_inner(&f, &q.0) + vector_inner(&g, &q.1);
            assert!((lhs - rhs).norm() < 1e-8);
        }
    }

    #[test]
    fn elements_of_m_are_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 256;
        let theta = random_contraction(&mut rng, 2, 2, 2, n, 0.8).unwrap();
        let t = defect_triple(&theta, n, 2).unwrap();
        let h = random_analytic(&mut rng, 2, n, 3);
        let f = apply(&t.theta, false, &h).unwrap();
        let g = apply(&t.delta, false, &h).unwrap();
        let p = two_component_project(&t, &f, &g).unwrap();
        assert!(pair_distance(&p, &(f, g)) < 1e-10);
    }

    #[test]
    fn distance_forms_match_projection_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1 << 10;
        let theta = random_contraction(&mut rng, 2, 2, 3, n, 0.9).unwrap();
        let t = defect_triple(&theta, n, 3).unwrap();
        let data = vec![
            DistanceDatum::Analytic(random_analytic(&mut rng, 2, n, 5)),
            DistanceDatum::Kernel {
                lambda: c(0.3, -0.5),
                e: random_unit(&mut rng, 2),
            },
            DistanceDatum::CoAnalytic(random_l2(&mut rng, 3, n)),
        ];
        for datum in &data {
            let closed = distance_to_k(&t, datum).unwrap();
            let (f, g) = datum_to_pair(&t, datum).unwrap();
            let (a, b) = project_m_unchecked(&t, &f, &g).unwrap();
            let direct = (vector_norm(&a).powi(2) + vector_norm(&b).powi(2)).sqrt();
            assert!(
                (closed - direct).abs() < 1e-8,
                "{datum:?}: {closed} vs {direct}"
            );
        }
    }

    #[test]
    fn kernel_projection_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1 << 10;
        let theta = random_contraction(&mut rng, 2, 2, 2, n, 0.9).unwrap();
        let t = defect_triple(&theta, n, 2).unwrap();
        let l = c(-0.2, 0.45);
        let e = random_unit(&mut rng, 2);
        let (f, g) = datum_to_pair(
            &t,
            &DistanceDatum::Kernel {
                lambda: l,
                e: e.clone(),
            },
        )
        .unwrap();
        let (a, _) = project_m_unchecked(&t, &f, &g).unwrap();
        let coef = theta.eval(l).adjoint() * e;
        let k = kernel_grid(l, n).unwrap();
        let expected: Vec<Complex64> = (0..n)
            .map(|j| {
                let v = &t.theta[j] * &coef;
                v[0] * k.values()[j]
            })
            .collect();
        let err = a[0].sub(&BoundaryGrid::new(expected).unwrap()).norm();
        assert!(err < 1e-8);
    }

    #[test]
    fn coanalytic_identity_cases() {
        let n = 128;
        let theta = MatrixFunction::scalar(MatrixEntry::blaschke(vec![c(0.1, 0.2)]));
        let t = ModelTriple::inner(&theta, n, 2, &CMatrix::identity(2, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_l2(&mut rng, 2, n);
        let d = distance_to_k(&t, &DistanceDatum::CoAnalytic(f.clone())).unwrap();
        assert_abs_diff_eq!(d, vector_norm(&f), epsilon = 1e-12);
        let zero = DistanceDatum::Kernel {
            lambda: c(0.1, 0.2),
            e: CVector::from_element(1, c(1.0, 0.0)),
        };
        assert!(distance_to_k(&t, &zero).unwrap() < 1e-15);
    }

    #[test]
    fn support_count_examples() {
        let n = 64;
        let half = |j: usize| j < n / 2;
        let build = |on: &dyn Fn(usize) -> bool| {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let theta: Vec<CMatrix> = (0..n)
                .map(|j| CMatrix::from_element(1, 1, c(if on(j) { s } else { 1.0 }, 0.0)))
                .collect();
            let delta: Vec<CMatrix> = (0..n)
                .map(|j| {
                    CMatrix::from_column_slice(2, 1, &[c(if on(j) { s } else { 0.0 }, 0.0), ZERO])
                })
                .collect();
            let proj: Vec<CMatrix> = (0..n)
                .map(|j| {
                    if on(j) {
                        CMatrix::from_diagonal(&CVector::from_vec(vec![ZERO, c(1.0, 0.0)]))
                    } else {
                        CMatrix::identity(2, 2)
                    }
                })
                .collect();
            ModelTriple::from_samples(theta, delta, proj).unwrap()
        };
        let a = build(&half);
        assert_eq!(support_cover_count(&[a.clone()]).unwrap(), (1, 0));
        let b = build(&|j: usize| j >= n / 4 && j < 3 * n / 4);
        assert_eq!(support_cover_count(&[a, b]).unwrap(), (2, 0));
    }

    #[test]
    fn bounded_support_family_satisfies_embedding_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 1 << 10;
        for d_star in 1..=3 {
            let family = bounded_support_family(&mut rng, 5, d_star, n).unwrap();
            let (s, t) = support_cover_count(&family).unwrap();
            assert!(s <= d_star && t <= d_star);
            for _ in 0..3 {
                let f = random_l2(&mut rng, d_star, n);
                let sum = coanalytic_projection_sum(&family, &f).unwrap();
                assert!(
                    (sum.closed_form - sum.projected).abs() < 1e-8 * sum.f_norm_squared.max(1.0)
                );
                assert!(sum.closed_form <= 2.0 * d_star as f64 * sum.f_norm_squared + 1e-6);
            }
        }
    }

    #[test]
    fn scalar_necessity_identity() {
        let family: Vec<InnerFunction> = [[c(0.5, 0.1), c(-0.3, 0.6)], [c(0.0, -0.7), c(0.2, 0.2)]]
            .iter()
            .map(|z| InnerFunction::new(z).unwrap())
            .collect();
        let (lhs, rhs) = scalar_kernel_sums(&family, c(0.35, -0.15), 1 << 12).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-8);
    }

    #[test]
    fn separated_scalar_family_covering() {
        let centers = [c(0.0, 0.0), c(0.95, 0.0), c(0.0, -0.95), c(-0.95, 0.0)];
        let family: Vec<MatrixFunction> = centers
            .iter()
            .map(|&a| {
                MatrixFunction::scalar(MatrixEntry::blaschke(vec![a, a * 0.99 + c(0.0, 0.002)]))
            })
            .collect();
        let grid = crate::disk::quasi_uniform_grid(6);
        let (count, _) = covering_count(&family, 0.05, &grid).unwrap();
        assert!(count <= 1);
    }

    #[test]
    fn model_system_embedding_bounds_kernel_sums() {
        let family = vec![
            InnerFunction::new(&[c(0.3, 0.1), c(-0.2, 0.5)]).unwrap(),
            InnerFunction::new(&[c(0.6, -0.3)]).unwrap(),
        ];
        let sys = model_space_system(&family).unwrap();
        let norm = crate::riesz::embedding_norm(&sys);
        for lambda in [c(0.0, 0.0), c(0.3, 0.1), c(0.5, -0.3), c(-0.7, 0.2)] {
            let (lhs, rhs) = scalar_kernel_sums(&family, lambda, 1024).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
            assert!(rhs <= norm + 1e-8);
        }
    }
}
