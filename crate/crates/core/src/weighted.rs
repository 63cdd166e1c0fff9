//! The exponential system {zⁿ} in L²(w): integrability of log w and 1/w,
//! the dyadic A₂ constant, boundedness, and the norm of the zeroth
//! coefficient functional on trigonometric polynomials.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{domain, Result};
use crate::hardy::BoundaryGrid;

/// Ratio of successive refinement increments above which a sequence is
/// declared divergent.
pub const DIVERGENCE_RATIO: f64 = 0.9;
/// Relative increment below which a sequence is declared stable.
pub const STABILITY_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_LOG2: u32 = 20;
const MIN_LOG2: u32 = 6;

/// Weights with a known formula in the angle t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFormula {
    Constant {
        value: f64,
    },
    /// |1 − e^{it}|^exponent
    PowerSingularity {
        exponent: f64,
    },
    /// mean + amplitude·cos t
    CosineShift {
        mean: f64,
        amplitude: f64,
    },
}

impl WeightFormula {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::PowerSingularity { exponent } => (2.0 * (t / 2.0).sin().abs()).powf(exponent),
            Self::CosineShift { mean, amplitude } => mean + amplitude * t.cos(),
        }
    }

    /// The level decided analytically.
    pub fn closed_form_level(&self) -> u8 {
        match *self {
            Self::Constant { value } => {
                if value > 0.0 {
                    5
                } else {
                    0
                }
            }
            Self::PowerSingularity { exponent } => {
                if exponent == 0.0 {
                    5
                } else if exponent < 1.0 {
                    4
                } else {
                    2
                }
            }
            Self::CosineShift { mean, amplitude } => {
                if mean > amplitude.abs() {
                    5
                } else if mean > 0.0 {
                    2
                } else {
                    0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Weight {
    Formula(WeightFormula),
    /// Values at the grid nodes t_j = 2πj/n.
    Samples {
        values: Vec<f64>,
    },
}

impl Weight {
    pub fn formula(f: WeightFormula) -> Result<Self> {
        match f {
            WeightFormula::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                domain("constant weight must be non-negative")
            }
            WeightFormula::PowerSingularity { exponent }
                if !(exponent > -1.0 && exponent.is_finite()) =>
            {
                domain("|1 − e^{it}|^a is integrable only for a > −1")
            }
            WeightFormula::CosineShift { mean, amplitude }
                if !(mean >= amplitude.abs() && mean.is_finite() && amplitude.is_finite()) =>
            {
                domain("mean + amplitude·cos t must be non-negative")
            }
            _ => Ok(Self::Formula(f)),
        }
    }

    pub fn samples(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !values.len().is_power_of_two() {
            return domain("weight samples must have power-of-two length");
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return domain("weight samples must be finite and non-negative");
        }
        Ok(Self::Samples { values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::formula(WeightFormula::Constant { value })
    }

    fn closed_form(&self) -> Option<WeightFormula> {
        match self {
            Self::Formula(f) => Some(*f),
            Self::Samples { .. } => None,
        }
    }

    /// Midpoint samples for formulas, node samples for sampled weights.
    fn quadrature_samples(&self, size: usize) -> Vec<f64> {
        match self {
            Self::Formula(f) => (0..size)
                .into_par_iter()
                .map(|j| f.eval(TAU * (j as f64 + 0.5) / size as f64))
                .collect(),
            Self::Samples { values } => values.clone(),
        }
    }

    fn refinement_sizes(&self, max_log2: u32) -> Vec<usize> {
        match self {
            Self::Formula(_) => (MIN_LOG2..=max_log2.max(MIN_LOG2))
                .map(|k| 1usize << k)
                .collect(),
            Self::Samples { values } => vec![values.len()],
        }
    }

    /// Fourier coefficients ŵ(k), |k| ≤ order, from a grid of at least `size` nodes.
    fn fourier_coefficients(&self, order: usize, size: usize) -> Result<Vec<Complex64>> {
        let grid = match self {
            Self::Formula(f) => {
                let n = size.max(8 * order.max(1)).next_power_of_two();
                BoundaryGrid::from_real_fn(n, |t| f.eval(t))?
            }
            Self::Samples { values } => {
                if values.len() < 2 * order + 1 {
                    return domain("too few samples for the requested section");
                }
                BoundaryGrid::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())?
            }
        };
        let c = grid.coefficients();
        Ok((0..=order)
            .map(|k| BoundaryGrid::coefficient(&c, k as i64))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Stable,
    /// Geometric tail with ratio below the divergence threshold.
    Converging,
    Divergent,
    /// Only one resolution was available.
    Unrefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedValue {
    pub value: f64,
    pub status: Convergence,
    pub finest_size: usize,
}

impl RefinedValue {
    pub fn is_finite(&self) -> bool {
        self.status != Convergence::Divergent && self.value.is_finite()
    }
}

/// Classify a refinement sequence and extrapolate its limit.
pub fn refine_sequence(values: &[f64], sizes: &[usize]) -> RefinedValue {
    let finest_size = *sizes.last().unwrap_or(&0);
    let Some(&last) = values.last() else {
        return RefinedValue {
            value: f64::NAN,
            status: Convergence::Unrefined,
            finest_size,
        };
    };
    if !last.is_finite() {
        return RefinedValue {
            value: last,
            status: Convergence::Divergent,
            finest_size,
        };
    }
    if values.len() == 1 {
        return RefinedValue {
            value: last,
            status: Convergence::Unrefined,
            finest_size,
        };
    }
    let incs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let d = *incs.last().unwrap();
    if d <= STABILITY_TOL * last.abs().max(1.0) {
        return RefinedValue {
            value: last,
            status: Convergence::Stable,
            finest_size,
        };
    }
    if incs.len() >= 3 {
        let k = incs.len();
        let r1 = incs[k - 1] / incs[k - 2];
        let r2 = incs[k - 2] / incs[k - 3];
        if r1 > DIVERGENCE_RATIO && r2 > DIVERGENCE_RATIO {
            return RefinedValue {
                value: last,
                status: Convergence::Divergent,
                finest_size,
            };
        }
        let r = r1.min(DIVERGENCE_RATIO);
        let sign = (values[values.len() - 1] - values[values.len() - 2]).signum();
        return RefinedValue {
            value: last + sign * d * r / (1.0 - r),
            status: Convergence::Converging,
            finest_size,
        };
    }
    RefinedValue {
        value: last,
        status: Convergence::Converging,
        finest_size,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// sup over dyadic arcs with at least 8 samples of (avg w)(avg 1/w).
pub fn dyadic_a2_constant(samples: &[f64]) -> f64 {
    let n = samples.len();
    let inv: Vec<f64> = samples.iter().map(|w| 1.0 / w).collect();
    if inv.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    let prefix = |v: &[f64]| {
        let mut p = Vec::with_capacity(v.len() + 1);
        p.push(0.0);
        let mut acc = 0.0;
        for x in v {
            acc += x;
            p.push(acc);
        }
        p
    };
    let pw = prefix(samples);
    let pi = prefix(&inv);
    let mut best: f64 = 1.0;
    let mut width = n;
    loop {
        for start in (0..n).step_by(width) {
            let aw = (pw[start + width] - pw[start]) / width as f64;
            let ai = (pi[start + width] - pi[start]) / width as f64;
            best = best.max(aw * ai);
        }
        if width < 16 {
            break;
        }
        width /= 2;
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightClassification {
    /// Highest level 0..=5 with all lower levels satisfied, from the numerics.
    pub numerical_level: u8,
    pub closed_form_level: Option<u8>,
    /// The closed-form level when known, else the numerical one.
    pub level: u8,
    pub integral_w: RefinedValue,
    pub integral_log_w: RefinedValue,
    pub integral_inv_w: RefinedValue,
    pub a2_constant: RefinedValue,
    pub sup_w: RefinedValue,
    pub sup_inv_w: RefinedValue,
}

/// Run the integrability and boundedness tests with grids of 2⁶ … 2^max_log2 samples.
pub fn classify_weight(w: &Weight, max_log2: u32) -> WeightClassification {
    let sizes = w.refinement_sizes(max_log2);
    let rows: Vec<[f64; 6]> = sizes
        .iter()
        .map(|&n| {
            let s = w.quadrature_samples(n);
            let logs: Vec<f64> = s.iter().map(|x| x.ln()).collect();
            let inv: Vec<f64> = s.iter().map(|x| 1.0 / x).collect();
            [
                mean(&s),
                mean(&logs),
                mean(&inv),
                dyadic_a2_constant(&s),
                s.iter().cloned().fold(0.0, f64::max),
                inv.iter().cloned().fold(0.0, f64::max),
            ]
        })
        .collect();
    let column = |i: usize| refine_sequence(&rows.iter().map(|r| r[i]).collect::<Vec<_>>(), &sizes);
    let integral_w = column(0);
    let integral_log_w = column(1);
    let integral_inv_w = column(2);
    let a2_constant = column(3);
    let sup_w = column(4);
    let sup_inv_w = column(5);

    let checks = [
        integral_w.value > 0.0,
        integral_log_w.is_finite(),
        integral_inv_w.is_finite(),
        a2_constant.is_finite(),
        sup_w.is_finite() && sup_inv_w.is_finite(),
    ];
    let numerical_level = checks.iter().take_while(|c| **c).count() as u8;
    let closed_form_level = w.closed_form().map(|f| f.closed_form_level());
    WeightClassification {
        numerical_level,
        closed_form_level,
        level: closed_form_level.unwrap_or(numerical_level),
        integral_w,
        integral_log_w,
        integral_inv_w,
        a2_constant,
        sup_w,
        sup_inv_w,
    }
}

/// Solve T x = y for a Hermitian positive definite Toeplitz matrix with
/// first column `col` by Levinson recursion.
pub fn levinson_solve(col: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = col.len();
    if n == 0 || y.len() != n {
        return domain("Toeplitz system of mismatched size");
    }
    let t = |k: i64| {
        if k >= 0 {
            col[k as usize]
        } else {
            col[(-k) as usize].conj()
        }
    };
    if col[0].re <= 0.0 {
        return domain("Toeplitz matrix is not positive definite");
    }
    // forward vector f (T_k f = e_1) and backward vector b (T_k b = e_k)
    let mut f = vec![Complex64::new(1.0, 0.0) / t(0)];
    let mut b = f.clone();
    let mut x = vec![y[0] / t(0)];
    for k in 1..n {
        // error of the extended forward/backward vectors
        let ef: Complex64 = (0..k).map(|i| t((k - i) as i64) * f[i]).sum();
        let eb: Complex64 = (0..k).map(|i| t(-((i + 1) as i64)) * b[i]).sum();
        let denom = Complex64::new(1.0, 0.0) - ef * eb;
        if denom.norm() < 1e-300 {
            return domain("Toeplitz recursion broke down");
        }
        let mut nf = vec![Complex64::new(0.0, 0.0); k + 1];
        let mut nb = vec![Complex64::new(0.0, 0.0); k + 1];
        for i in 0..=k {
            let fe = if i < k {
                f[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let be = if i > 0 {
                b[i - 1]
            } else {
                Complex64::new(0.0, 0.0)
            };
            nf[i] = (fe - ef * be) / denom;
            nb[i] = (be - eb * fe) / denom;
        }
        f = nf;
        b = nb;
        let ex: Complex64 = (0..k).map(|i| t((k - i) as i64) * x[i]).sum();
        x.push(Complex64::new(0.0, 0.0));
        let corr = y[k] - ex;
        for i in 0..=k {
            x[i] += corr * b[i];
        }
    }
    Ok(x)
}

#[cfg(test)]
fn toeplitz_matrix(col: &[Complex64]) -> crate::linalg::CMatrix {
    let n = col.len();
    crate::linalg::CMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            col[i - j]
        } else {
            col[j - i].conj()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P0Check {
    pub section_size: usize,
    /// ‖P⁰‖² on trigonometric polynomials of degree ≤ section_size
    pub lhs: f64,
    /// ∫w · ∫1/w
    pub rhs: f64,
    pub rhs_status: Convergence,
}

/// Compare the squared norm of f ↦ f̂(0)·1 on degree-≤N trigonometric
/// polynomials in L²(w) with ∫w·∫w⁻¹.
pub fn p0_norm_check(w: &Weight, section_size: usize, max_log2: u32) -> Result<P0Check> {
    let class = classify_weight(w, max_log2);
    if !class.integral_inv_w.is_finite() {
        return domain(format!(
            "1/w is not integrable (refinement to {} samples diverges)",
            class.integral_inv_w.finest_size
        ));
    }
    let coeffs = w.fourier_coefficients(2 * section_size, 1 << max_log2.min(16))?;
    // Gram matrix of z^{−N}, …, z^{N}: entry (j, k) = ŵ(j − k)
    let dim = 2 * section_size + 1;
    let mut rhs_vec = vec![Complex64::new(0.0, 0.0); dim];
    rhs_vec[section_size] = Complex64::new(1.0, 0.0);
    let sol = levinson_solve(&coeffs[..dim], &rhs_vec)?;
    let w_mean = coeffs[0].re;
    Ok(P0Check {
        section_size,
        lhs: w_mean * sol[section_size].re,
        rhs: class.integral_w.value * class.integral_inv_w.value,
        rhs_status: class.integral_inv_w.status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_weight_is_level_five() {
        let c = classify_weight(&Weight::constant(1.0).unwrap(), 12);
        assert_eq!(c.numerical_level, 5);
        assert_eq!(c.level, 5);
        assert_abs_diff_eq!(c.a2_constant.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_weight_fails_level_one() {
        let c = classify_weight(&Weight::constant(0.0).unwrap(), 10);
        assert_eq!(c.numerical_level, 0);
        assert_eq!(c.level, 0);
    }

    #[test]
    fn distance_weight_is_level_two() {
        let w = Weight::formula(WeightFormula::PowerSingularity { exponent: 1.0 }).unwrap();
        let c = classify_weight(&w, 20);
        assert_eq!(c.integral_inv_w.status, Convergence::Divergent);
        assert!(c.integral_log_w.is_finite());
        assert_abs_diff_eq!(c.integral_log_w.value, 0.0, epsilon = 1e-5);
        assert_eq!(c.numerical_level, 2);
        assert_eq!(c.closed_form_level, Some(2));
    }

    #[test]
    fn square_root_weight_is_level_four() {
        let w = Weight::formula(WeightFormula::PowerSingularity { exponent: 0.5 }).unwrap();
        let c = classify_weight(&w, 20);
        assert!(c.a2_constant.is_finite());
        assert_eq!(c.sup_inv_w.status, Convergence::Divergent);
        assert_eq!(c.numerical_level, 4);
        assert_eq!(c.closed_form_level, Some(4));
    }

    #[test]
    fn levinson_matches_dense_solve() {
        let col: Vec<Complex64> = (0..9)
            .map(|k| Complex64::new(0.5f64.powi(k), 0.1 * k as f64 * 0.3f64.powi(k)))
            .collect();
        let mut col = col;
        col[0] = Complex64::new(3.0, 0.0);
        let y: Vec<Complex64> = (0..9).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let x = levinson_solve(&col, &y).unwrap();
        let dense = toeplitz_matrix(&col)
            .lu()
            .solve(&crate::linalg::CVector::from_vec(y))
            .unwrap();
        for (a, b) in x.iter().zip(dense.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn p0_constant_weights() {
        for c in [1.0, 3.5] {
            let r = p0_norm_check(&Weight::constant(c).unwrap(), 8, 12).unwrap();
            assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn p0_cosine_weight() {
        let w = Weight::formula(WeightFormula::CosineShift {
            mean: 2.0,
            amplitude: 1.0,
        })
        .unwrap();
        let r = p0_norm_check(&w, 1 << 10, 14).unwrap();
        assert_abs_diff_eq!(r.rhs, 2.0 / 3f64.sqrt(), epsilon = 1e-10);
        assert!((r.lhs - r.rhs).abs() < 1e-4);
        assert!(r.lhs <= r.rhs + 1e-8);
    }

    #[test]
    fn p0_rejects_non_integrable_inverse() {
        let w = Weight::formula(WeightFormula::PowerSingularity { exponent: 1.0 }).unwrap();
        assert!(p0_norm_check(&w, 4, 16).is_err());
    }
}
