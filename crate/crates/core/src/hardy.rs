//! Discrete Hardy-space numerics on a uniform boundary grid of 2^m samples.
//!
//! Fourier coefficients use the convention ĉ(k) = (1/n) Σ_j f_j e^{−2πijk/n}
//! with indices −n/2..n/2−1; index k < 0 is stored at position n + k.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::disk::kernel_unchecked;
use crate::error::{domain, Error, Result};
use crate::linalg::{lambda_max, CMatrix, CVector, ZERO};

pub const DEFAULT_GRID_LOG2: u32 = 12;
/// Negative coefficients below this are treated as zero when testing analyticity.
pub const ANALYTIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    Plus,
    Minus,
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Complex samples at the angles 2πj/n, n a power of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    values: Vec<Complex64>,
}

impl BoundaryGrid {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 || !values.len().is_power_of_two() {
            return domain(format!(
                "grid size {} is not a power of two ≥ 2",
                values.len()
            ));
        }
        Ok(Self { values })
    }

    pub fn from_fn(size: usize, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::new((0..size).map(|j| f(Self::node(j, size))).collect())
    }

    pub fn from_real_fn(size: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            (0..size)
                .map(|j| Complex64::new(f(TAU * j as f64 / size as f64), 0.0))
                .collect(),
        )
    }

    #[inline]
    pub fn node(j: usize, size: usize) -> Complex64 {
        Complex64::from_polar(1.0, TAU * j as f64 / size as f64)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        let n = self.len();
        (0..n).map(move |j| Self::node(j, n))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Fourier coefficients in FFT storage order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft_in_place(&mut buf, false);
        let scale = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub fn from_coefficients(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 || !coeffs.len().is_power_of_two() {
            return domain("coefficient count must be a power of two");
        }
        fft_in_place(&mut coeffs, true);
        Ok(Self { values: coeffs })
    }

    /// Coefficient with signed index in −n/2..n/2−1.
    pub fn coefficient(coeffs: &[Complex64], k: i64) -> Complex64 {
        let n = coeffs.len() as i64;
        coeffs[k.rem_euclid(n) as usize]
    }

    pub fn is_nonnegative_index(pos: usize, size: usize) -> bool {
        pos < size / 2
    }

    pub fn riesz_project(&self, which: Projection) -> Self {
        let mut c = self.coefficients();
        let n = c.len();
        for (pos, v) in c.iter_mut().enumerate() {
            let plus = Self::is_nonnegative_index(pos, n);
            if plus != (which == Projection::Plus) {
                *v = ZERO;
            }
        }
        Self::from_coefficients(c).expect("size preserved")
    }

    /// Largest modulus of a negative-index coefficient.
    pub fn antianalytic_size(&self) -> f64 {
        let c = self.coefficients();
        let n = c.len();
        c[n / 2..].iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Grid inner product ⟨f, g⟩ = (1/n) Σ f_j ḡ_j.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        s / self.len() as f64
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.len() as f64).sqrt()
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.len() as f64
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.len(), other.len(), "grid sizes differ");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn zeros(size: usize) -> Result<Self> {
        Self::new(vec![ZERO; size])
    }
}

/// Result of a Poisson extension together with the undersampling flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonValue {
    pub value: f64,
    pub resolution_warning: bool,
}

/// Poisson extension of the trigonometric interpolant of real grid data:
/// Σ_{k≥0} ĉ(k)λ^k + Σ_{k<0} ĉ(k)λ̄^{|k|}, with the Nyquist term split evenly.
#[derive(Debug, Clone)]
pub struct PoissonExtender {
    coeffs: Vec<Complex64>,
    warn_factor: f64,
}

impl PoissonExtender {
    pub fn new(f: &BoundaryGrid) -> Result<Self> {
        let scale = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if f.values.iter().any(|v| v.im.abs() > 1e-12 * scale.max(1.0)) {
            return domain("Poisson extension expects real samples");
        }
        Ok(Self {
            coeffs: f.coefficients(),
            warn_factor: 4.0,
        })
    }

    /// Threshold factor c of the resolution warning 1 − |λ| < c/n.
    pub fn with_warn_factor(mut self, c: f64) -> Self {
        self.warn_factor = c;
        self
    }

    pub fn eval(&self, lambda: Complex64) -> Result<PoissonValue> {
        if !(lambda.norm() < 1.0) {
            return domain(format!("λ = {lambda} must be interior"));
        }
        let n = self.coeffs.len();
        let half = n / 2;
        let mut total = self.coeffs[0].re;
        let mut p = Complex64::new(1.0, 0.0);
        for k in 1..half {
            p *= lambda;
            total += (self.coeffs[k] * p + self.coeffs[n - k] * p.conj()).re;
        }
        p *= lambda;
        total += (self.coeffs[half] * p).re;
        Ok(PoissonValue {
            value: total,
            resolution_warning: 1.0 - lambda.norm() < self.warn_factor / n as f64,
        })
    }
}

/// ∫ f(ξ)(1 − |λ|²)/|1 − λ̄ξ|² dm(ξ) for real grid data; warns when
/// 1 − |λ| < 4/n.
pub fn poisson_extend(f: &BoundaryGrid, lambda: Complex64) -> Result<PoissonValue> {
    PoissonExtender::new(f)?.eval(lambda)
}

/// Polynomial in H²: coefficients of z^0, z^1, ….
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyFunction {
    coeffs: Vec<Complex64>,
}

impl HardyFunction {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: Complex64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![ZERO; k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    /// Analytic part of a grid function; fails when negative-index
    /// coefficients exceed `ANALYTIC_TOL`.
    pub fn from_grid(f: &BoundaryGrid) -> Result<Self> {
        let c = f.coefficients();
        let n = c.len();
        let worst = c[n / 2..].iter().map(|v| v.norm()).fold(0.0, f64::max);
        if worst > ANALYTIC_TOL {
            return domain(format!(
                "function is not analytic: negative coefficient of size {worst:.3e}"
            ));
        }
        let mut coeffs = c[..n / 2].to_vec();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|v| v.norm() == 0.0) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.norm() != 0.0)
            .unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Boundary samples on a grid of `size` points (coefficients beyond
    /// size/2 alias and are rejected).
    pub fn to_grid(&self, size: usize) -> Result<BoundaryGrid> {
        if self.coeffs.len() > size / 2 {
            return domain(format!(
                "degree {} does not fit a grid of {size} samples",
                self.coeffs.len() - 1
            ));
        }
        let mut c = vec![ZERO; size];
        c[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        BoundaryGrid::from_coefficients(c)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// An outer function exp(G) with G the Herglotz polynomial of log u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterFunction {
    log_coeffs: Vec<Complex64>,
    boundary: BoundaryGrid,
}

impl OuterFunction {
    /// log h(z) = c_0 + 2 Σ_{k>0} c_k z^k for the coefficients c of log u.
    pub fn from_log_modulus(log_u: &[f64]) -> Result<Self> {
        let grid = BoundaryGrid::new(log_u.iter().map(|&v| Complex64::new(v, 0.0)).collect())?;
        let c = grid.coefficients();
        let n = c.len();
        let mut log_coeffs = Vec::with_capacity(n / 2);
        log_coeffs.push(Complex64::new(c[0].re, 0.0));
        log_coeffs.extend(c[1..n / 2].iter().map(|v| v * 2.0));
        let mut g = vec![ZERO; n];
        g[..n / 2].copy_from_slice(&log_coeffs);
        let boundary = BoundaryGrid::from_coefficients(g)?.map(|v| v.exp());
        Ok(Self {
            log_coeffs,
            boundary,
        })
    }

    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        self.log_coeffs
            .iter()
            .rev()
            .fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.log_eval(z).exp()
    }

    /// log|h(z)|, finite even when |h(z)| underflows.
    pub fn log_modulus(&self, z: Complex64) -> f64 {
        self.log_eval(z).re
    }

    pub fn boundary_values(&self) -> &BoundaryGrid {
        &self.boundary
    }

    /// Taylor coefficients of h recovered from its boundary samples.
    pub fn hardy(&self) -> HardyFunction {
        let c = self.boundary.coefficients();
        HardyFunction::new(c[..c.len() / 2].to_vec())
    }
}

/// Outer function with boundary modulus `u`. The Herglotz construction
/// already gives h(0) = exp(∫ log u) > 0, so `normalize_positive_at_0`
/// only documents the chosen unimodular constant.
pub fn outer_from_modulus(
    u: &BoundaryGrid,
    normalize_positive_at_0: bool,
) -> Result<OuterFunction> {
    let _ = normalize_positive_at_0;
    let mut log_u = Vec::with_capacity(u.len());
    for (j, v) in u.values().iter().enumerate() {
        if v.im.abs() > 1e-12 * v.re.abs().max(1.0) || !(v.re > 0.0) {
            return domain(format!("modulus sample {j} = {v} is not positive"));
        }
        log_u.push(v.re.ln());
    }
    OuterFunction::from_log_modulus(&log_u)
}

/// Matrix-valued analytic polynomial Σ_j A_j z^j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixPolynomial {
    pub coeffs: Vec<CMatrix>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return domain("matrix polynomial needs at least one coefficient");
        };
        let shape = first.shape();
        if coeffs.iter().any(|c| c.shape() != shape) {
            return Err(Error::Dimension("coefficient shapes differ".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let (r, c) = self.coeffs[0].shape();
        self.coeffs
            .iter()
            .rev()
            .fold(CMatrix::zeros(r, c), |acc, a| acc * z + a)
    }
}

/// Σ_{p,q} c(p,q)·(H[ξ^p ξ̄^q](λ) − λ^p λ̄^q), where H is the harmonic
/// extension; c must be Hermitian so the result is real.
fn garsia_from_products(
    len: usize,
    lambda: Complex64,
    c: impl Fn(usize, usize) -> Complex64,
) -> f64 {
    let mut pow = Vec::with_capacity(len);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..len {
        pow.push(p);
        p *= lambda;
    }
    let mut total = 0.0;
    for a in 0..len {
        for b in 0..len {
            let harmonic = if a >= b {
                pow[a - b]
            } else {
                pow[b - a].conj()
            };
            let point = pow[a] * pow[b].conj();
            total += (c(a, b) * (harmonic - point)).re;
        }
    }
    total
}

/// Σ_n (|F_n|²(λ) − |F_n(λ)|²), computed exactly for polynomials.
pub fn garsia_sum(family: &[HardyFunction], lambda: Complex64) -> Result<f64> {
    if !(lambda.norm() < 1.0) {
        return domain("λ must be interior");
    }
    Ok(family
        .iter()
        .map(|f| {
            let a = f.coeffs();
            garsia_from_products(a.len(), lambda, |p, q| a[p] * a[q].conj())
        })
        .sum())
}

/// Σ_n (‖F_n* e‖²(λ) − ‖F_n(λ)* e‖²) for matrix polynomials and a unit vector e.
pub fn garsia_sum_vector(
    family: &[MatrixPolynomial],
    lambda: Complex64,
    e: &CVector,
) -> Result<f64> {
    if !(lambda.norm() < 1.0) {
        return domain("λ must be interior");
    }
    if (e.norm() - 1.0).abs() > 1e-10 {
        return domain("e must be a unit vector");
    }
    let mut total = 0.0;
    for f in family {
        if f.coeffs[0].nrows() != e.len() {
            return Err(Error::Dimension(
                "e does not match the row dimension".into(),
            ));
        }
        let v: Vec<CVector> = f.coeffs.iter().map(|a| a.adjoint() * e).collect();
        // ‖Σ_j v_j ξ̄^j‖² = Σ_{p,q} ⟨v_q, v_p⟩ ξ^p ξ̄^q
        total += garsia_from_products(v.len(), lambda, |p, q| v[q].dotc(&v[p]));
    }
    Ok(total)
}

/// Supremum of the scalar Garsia sum over a point grid, with its maximizer.
pub fn garsia_sup(family: &[HardyFunction], lambda_grid: &[Complex64]) -> Result<(f64, Complex64)> {
    let vals: Result<Vec<f64>> = lambda_grid
        .par_iter()
        .map(|&l| garsia_sum(family, l))
        .collect();
    let vals = vals?;
    let (i, v) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (i, v))
        .unwrap_or((0, 0.0));
    Ok((v, lambda_grid.get(i).copied().unwrap_or(ZERO)))
}

/// λ_max of Σ_n H*_{F̄_n}H_{F̄_n} restricted to polynomials of degree ≤ `ambient_degree`.
pub fn hankel_embedding_constant(family: &[HardyFunction], ambient_degree: usize) -> f64 {
    let dim = ambient_degree + 1;
    let mut gram = CMatrix::zeros(dim, dim);
    for f in family {
        let a = f.coeffs();
        let deg = f.degree();
        if deg == 0 {
            continue;
        }
        // H[m, k] = conj(a_{k+m}), row m = 1..deg, column k = 0..ambient_degree
        let mut h = CMatrix::zeros(deg, dim);
        for m in 1..=deg {
            for k in 0..dim {
                if let Some(c) = a.get(k + m) {
                    h[(m - 1, k)] = c.conj();
                }
            }
        }
        gram += h.adjoint() * h;
    }
    lambda_max(&gram).max(0.0)
}

/// |F|²(λ) computed as ‖F k_λ‖² on a grid, used as an independent check.
pub fn harmonic_modulus_squared(f: &HardyFunction, lambda: Complex64, size: usize) -> Result<f64> {
    let g = f.to_grid(size)?;
    let weighted: f64 = g
        .nodes()
        .zip(g.values())
        .map(|(xi, v)| v.norm_sqr() * kernel_unchecked(lambda, xi).norm_sqr())
        .sum();
    Ok(weighted / size as f64)
}
