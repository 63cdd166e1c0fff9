//! Finite systems of finite-dimensional subspaces: block Gram matrices,
//! uniform minimality, skew projections, dual systems, embedding norms,
//! tensor bounds for kernel systems and critical-subset extraction.
//!
//! Every diagnostic depends only on the block Gram matrix G = F*F of the
//! concatenated orthonormal frames, so systems may be built either from
//! explicit frames or directly from G.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::disk::kernel_inner_unchecked;
use crate::error::{domain, Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_function, lambda_max, lambda_min, CMatrix};

pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Smallest admissible singular value of the concatenated frame.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSystem {
    gram: CMatrix,
    blocks: Vec<usize>,
    frames: Option<CMatrix>,
    labels: Vec<String>,
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("E{i}")).collect()
}

fn concat_frames(frames: &[CMatrix]) -> Result<(CMatrix, Vec<usize>)> {
    let Some(first) = frames.first() else {
        return domain("a system needs at least one subspace");
    };
    let ambient = first.nrows();
    if frames.iter().any(|f| f.nrows() != ambient) {
        return Err(Error::Dimension(
            "frames live in different ambient spaces".into(),
        ));
    }
    let blocks: Vec<usize> = frames.iter().map(|f| f.ncols()).collect();
    if blocks.contains(&0) {
        return domain("empty frame");
    }
    let total: usize = blocks.iter().sum();
    let mut all = CMatrix::zeros(ambient, total);
    let mut col = 0;
    for f in frames {
        all.view_mut((0, col), f.shape()).copy_from(f);
        col += f.ncols();
    }
    Ok((all, blocks))
}

impl SubspaceSystem {
    /// Orthonormal frames (columns) with linearly independent union.
    pub fn from_frames(frames: &[CMatrix]) -> Result<Self> {
        let sys = Self::from_frames_allow_dependent(frames)?;
        sys.check_independent()?;
        Ok(sys)
    }

    /// Orthonormal frames whose union may be dependent; only
    /// [`embedding_norm`] is meaningful for such systems.
    pub fn from_frames_allow_dependent(frames: &[CMatrix]) -> Result<Self> {
        let (all, blocks) = concat_frames(frames)?;
        let gram = all.adjoint() * &all;
        let sys = Self {
            gram,
            labels: default_labels(blocks.len()),
            blocks,
            frames: Some(all),
        };
        sys.check_orthonormal_blocks()?;
        Ok(sys)
    }

    /// Unit vectors as one-dimensional subspaces (each is normalized).
    pub fn from_vectors(vectors: &[Vec<Complex64>]) -> Result<Self> {
        let frames: Vec<CMatrix> = vectors
            .iter()
            .map(|v| {
                let m = CMatrix::from_column_slice(v.len(), 1, v);
                let n = m.norm();
                m / Complex64::new(n, 0.0)
            })
            .collect();
        Self::from_frames(&frames)
    }

    /// A system described only by its block Gram matrix.
    pub fn from_gram(gram: CMatrix, blocks: Vec<usize>) -> Result<Self> {
        if gram.nrows() != gram.ncols() || gram.nrows() != blocks.iter().sum::<usize>() {
            return Err(Error::Dimension(
                "Gram size does not match the blocks".into(),
            ));
        }
        if blocks.is_empty() || blocks.contains(&0) {
            return domain("blocks must be nonempty");
        }
        let sys = Self {
            gram,
            labels: default_labels(blocks.len()),
            blocks,
            frames: None,
        };
        sys.check_orthonormal_blocks()?;
        sys.check_independent()?;
        Ok(sys)
    }

    /// Normalized reproducing kernels {k_λ}_{λ∈σ} as one-dimensional subspaces of H².
    pub fn kernels(points: &[Complex64]) -> Result<Self> {
        Self::from_gram(kernel_gram(points)?, vec![1; points.len()])
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.blocks.len() {
            return Err(Error::Dimension("one label per subspace".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    fn check_orthonormal_blocks(&self) -> Result<()> {
        for n in 0..self.len() {
            let r = self.range(n);
            let d = self.gram.view((r.start, r.start), (r.len(), r.len()));
            let err = (d - CMatrix::identity(r.len(), r.len())).camax();
            if err > ORTHONORMAL_TOL {
                return domain(format!("frame {n} is not orthonormal (error {err:.2e})"));
            }
        }
        Ok(())
    }

    fn check_independent(&self) -> Result<()> {
        let lmin = lambda_min(&self.gram);
        if !(lmin > INDEPENDENCE_TOL * INDEPENDENCE_TOL) {
            return Err(Error::LinearDependence(format!(
                "smallest singular value {:.3e} of the joint frame",
                lmin.max(0.0).sqrt()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn frames(&self) -> Option<&CMatrix> {
        self.frames.as_ref()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Column range of subspace n inside G.
    pub fn range(&self, n: usize) -> std::ops::Range<usize> {
        let start: usize = self.blocks[..n].iter().sum();
        start..start + self.blocks[n]
    }

    fn indices(&self, subset: &[usize]) -> Vec<usize> {
        subset.iter().flat_map(|&n| self.range(n)).collect()
    }

    fn sub_gram(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self.gram[(rows[i], cols[j])])
    }

    /// The subsystem on the listed subspaces (in the given order).
    pub fn subsystem(&self, subset: &[usize]) -> Self {
        let idx = self.indices(subset);
        Self {
            gram: self.sub_gram(&idx, &idx),
            blocks: subset.iter().map(|&n| self.blocks[n]).collect(),
            frames: self
                .frames
                .as_ref()
                .map(|f| CMatrix::from_fn(f.nrows(), idx.len(), |i, j| f[(i, idx[j])])),
            labels: subset.iter().map(|&n| self.labels[n].clone()).collect(),
        }
    }

    /// G_aa − G_ab G_bb^{−1} G_ba.
    fn schur_complement(&self, keep: &[usize], eliminate: &[usize]) -> Result<CMatrix> {
        let gaa = self.sub_gram(keep, keep);
        if eliminate.is_empty() {
            return Ok(gaa);
        }
        let gab = self.sub_gram(keep, eliminate);
        let gbb = self.sub_gram(eliminate, eliminate);
        let chol = gbb.cholesky().ok_or_else(|| {
            Error::LinearDependence("complementary block is not positive definite".into())
        })?;
        Ok(&gaa - &gab * chol.solve(&gab.adjoint()))
    }
}

/// G[i, j] = ⟨k_{σ_j}, k_{σ_i}⟩.
pub fn kernel_gram(points: &[Complex64]) -> Result<CMatrix> {
    if let Some(p) = points.iter().find(|p| !(p.norm() < 1.0)) {
        return domain(format!("kernel point {p} must be interior"));
    }
    let n = points.len();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        kernel_inner_unchecked(points[i], points[j])
    }))
}

/// sqrt(λ_max(G)/λ_min(G)) = ‖R‖·‖R⁻¹‖ for the normalized orthogonalizer.
pub fn orthogonalizer_condition(sys: &SubspaceSystem) -> Result<f64> {
    let ev = hermitian_eigenvalues(&sys.gram);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::LinearDependence("Gram matrix is singular".into()));
    }
    Ok((hi / lo).sqrt().max(1.0))
}

/// (‖R‖, ‖R⁻¹‖) = (λ_min(G)^{−1/2}, λ_max(G)^{1/2}).
pub fn orthogonalizer_norms(sys: &SubspaceSystem) -> Result<(f64, f64)> {
    let ev = hermitian_eigenvalues(&sys.gram);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::LinearDependence("Gram matrix is singular".into()));
    }
    Ok((lo.powf(-0.5), hi.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub delta: f64,
    /// δ_n = inf over unit f ∈ E_n of dist(f, span of the others)
    pub per_subspace: Vec<f64>,
}

/// δ_n = λ_min(G_nn − G_no G_oo^{−1} G_on)^{1/2}; a single subspace has δ = 1.
pub fn uniform_minimality(sys: &SubspaceSystem) -> Result<MinimalityReport> {
    let mut per = Vec::with_capacity(sys.len());
    for n in 0..sys.len() {
        let others: Vec<usize> = (0..sys.len()).filter(|&k| k != n).collect();
        let s = sys.schur_complement(&sys.indices(&[n]), &sys.indices(&others))?;
        per.push(lambda_min(&s).max(0.0).sqrt().min(1.0));
    }
    let delta = per.iter().copied().fold(1.0, f64::min);
    Ok(MinimalityReport {
        delta,
        per_subspace: per,
    })
}

/// Norm of the skew projection onto span{E_k : k ∈ σ} along span{E_k : k ∉ σ}.
pub fn skew_projection_norm(sys: &SubspaceSystem, subset: &[usize]) -> Result<f64> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() >= sys.len() || sorted.iter().any(|&k| k >= sys.len()) {
        return domain("σ must be a nonempty proper subset of the indices");
    }
    let rest: Vec<usize> = (0..sys.len()).filter(|k| !sorted.contains(k)).collect();
    let keep = sys.indices(&sorted);
    let s = sys.schur_complement(&keep, &sys.indices(&rest))?;
    let gss = sys.sub_gram(&keep, &keep);
    let w = hermitian_function(&gss, |x| x.max(f64::MIN_POSITIVE).powf(-0.5));
    let lmin = lambda_min(&(&w * s * &w));
    if !(lmin > 0.0) {
        return Err(Error::LinearDependence(
            "skew projection is unbounded".into(),
        ));
    }
    Ok(lmin.powf(-0.5).max(1.0))
}

/// The dual (biorthogonal) system E′_n = (P^n)*H, as orthonormalized frames.
pub fn dual_system(sys: &SubspaceSystem) -> Result<SubspaceSystem> {
    let ginv = sys
        .gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearDependence("Gram matrix is singular".into()))?
        .inverse();
    let total = sys.gram.nrows();
    // Dual frame n is F·(G⁻¹)_{:,n}·W_n with W_n = ((G⁻¹)_{nn})^{−1/2}.
    let mut coeff = CMatrix::zeros(total, total);
    for n in 0..sys.len() {
        let r = sys.range(n);
        let block = ginv
            .view((r.start, r.start), (r.len(), r.len()))
            .into_owned();
        let w = hermitian_function(&block, |x| x.powf(-0.5));
        let cols = ginv.columns(r.start, r.len()) * w;
        coeff.view_mut((0, r.start), cols.shape()).copy_from(&cols);
    }
    let gram = crate::linalg::hermitian_part(&(coeff.adjoint() * &sys.gram * &coeff));
    Ok(SubspaceSystem {
        gram,
        blocks: sys.blocks.clone(),
        frames: sys.frames.as_ref().map(|f| f * &coeff),
        labels: sys.labels.iter().map(|l| format!("{l}'")).collect(),
    })
}

/// Cross Gram ⟨E′_m frame, E_n frame⟩ blocks, i.e. F_n* D_m, for frames-based systems.
pub fn biorthogonality_defect(sys: &SubspaceSystem, dual: &SubspaceSystem) -> Option<f64> {
    let (f, d) = (sys.frames()?, dual.frames()?);
    let cross = f.adjoint() * d;
    let mut worst = 0.0f64;
    for n in 0..sys.len() {
        for m in 0..sys.len() {
            if n != m {
                let (rn, rm) = (sys.range(n), sys.range(m));
                worst = worst.max(
                    cross
                        .view((rn.start, rm.start), (rn.len(), rm.len()))
                        .camax(),
                );
            }
        }
    }
    Some(worst)
}

/// Smallest C with Σ_n ‖P_{E_n} f‖² ≤ C‖f‖², which is λ_max(G).
pub fn embedding_norm(sys: &SubspaceSystem) -> f64 {
    lambda_max(&sys.gram)
}

/// The constant δ of a subsystem, with dependent subsets reported as 0.
pub fn subset_constant(sys: &SubspaceSystem, subset: &[usize]) -> f64 {
    if subset.len() <= 1 {
        return 1.0;
    }
    let sub = sys.subsystem(subset);
    if sub.check_independent().is_err() {
        return 0.0;
    }
    uniform_minimality(&sub).map(|r| r.delta).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSubset {
    pub indices: Vec<usize>,
    pub constant: f64,
    pub iterations: usize,
}

/// If δ(sys) < δ, shrink N (starting from all indices) by removing the first
/// index whose removal keeps the constant below δ; the result has
/// δ(N) < δ and δ(N∖{k}) ≥ δ for every k ∈ N.
pub fn extract_critical_subset(sys: &SubspaceSystem, delta: f64) -> Result<Option<CriticalSubset>> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("δ = {delta} must lie in (0, 1)"));
    }
    let mut current: Vec<usize> = (0..sys.len()).collect();
    let mut constant = subset_constant(sys, &current);
    if constant >= delta {
        return Ok(None);
    }
    let mut iterations = 0;
    'shrink: loop {
        iterations += 1;
        for pos in 0..current.len() {
            let mut trial = current.clone();
            trial.remove(pos);
            let c = subset_constant(sys, &trial);
            if c < delta {
                current = trial;
                constant = c;
                continue 'shrink;
            }
        }
        break;
    }
    Ok(Some(CriticalSubset {
        indices: current,
        constant,
        iterations,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBoundReport {
    pub lower_factor: f64,
    pub upper_factor: f64,
    pub trials: usize,
    pub violations: usize,
    pub worst_lower_slack: f64,
    pub worst_upper_slack: f64,
}

/// Checks ‖R‖⁻² Σ‖f_λ‖² ≤ ‖Σ k_λ f_λ‖² ≤ ‖R⁻¹‖² Σ‖f_λ‖² for random
/// f_λ ∈ C^{e_dim}, with ‖R‖, ‖R⁻¹‖ from the scalar kernel Gram.
pub fn tensor_bound_check<R: Rng>(
    points: &[Complex64],
    e_dim: usize,
    trials: usize,
    rng: &mut R,
) -> Result<TensorBoundReport> {
    let k = kernel_gram(points)?;
    let ev = hermitian_eigenvalues(&k);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let n = points.len();
    let mut violations = 0;
    let (mut worst_lo, mut worst_hi) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..trials {
        let x = CMatrix::from_fn(n, e_dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let coeff_norm = x.norm_squared();
        let middle = (x.adjoint() * &k * &x).trace().re;
        let slack_lo = middle - lo * coeff_norm;
        let slack_hi = hi * coeff_norm - middle;
        let scale = coeff_norm.max(1.0);
        if slack_lo < -1e-10 * scale || slack_hi < -1e-10 * scale {
            violations += 1;
        }
        worst_lo = worst_lo.min(slack_lo / scale);
        worst_hi = worst_hi.min(slack_hi / scale);
    }
    Ok(TensorBoundReport {
        lower_factor: lo,
        upper_factor: hi,
        trials,
        violations,
        worst_lower_slack: worst_lo,
        worst_upper_slack: worst_hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pair(cos: f64) -> SubspaceSystem {
        SubspaceSystem::from_vectors(&[
            vec![c(1.0), c(0.0)],
            vec![c(cos), c((1.0 - cos * cos).sqrt())],
        ])
        .unwrap()
    }

    fn orthogonal(n: usize) -> SubspaceSystem {
        let id = CMatrix::identity(n, n);
        let frames: Vec<CMatrix> = (0..n).map(|i| id.columns(i, 1).into_owned()).collect();
        SubspaceSystem::from_frames(&frames).unwrap()
    }

    #[test]
    fn two_vectors_at_cosine_point_six() {
        let s = pair(0.6);
        assert_abs_diff_eq!(orthogonalizer_condition(&s).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(uniform_minimality(&s).unwrap().delta, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(
            skew_projection_norm(&s, &[1]).unwrap(),
            1.25,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(embedding_norm(&s), 1.6, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_system() {
        let s = orthogonal(4);
        assert_abs_diff_eq!(orthogonalizer_condition(&s).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(uniform_minimality(&s).unwrap().delta, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            skew_projection_norm(&s, &[0, 2]).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(embedding_norm(&s), 1.0, epsilon = 1e-14);
        assert_eq!(extract_critical_subset(&s, 0.5).unwrap(), None);
        assert!(skew_projection_norm(&s, &[0, 1, 2, 3]).is_err());
        let d = dual_system(&s).unwrap();
        assert!(biorthogonality_defect(&s, &d).unwrap() < 1e-14);
    }

    #[test]
    fn single_subspace_constant_is_one() {
        let s = SubspaceSystem::from_vectors(&[vec![c(0.3), c(0.4)]]).unwrap();
        assert_eq!(uniform_minimality(&s).unwrap().delta, 1.0);
    }

    #[test]
    fn kernel_pair_closed_form() {
        let s = SubspaceSystem::kernels(&[c(0.0), c(0.5)]).unwrap();
        let g = 0.75f64.sqrt();
        assert_abs_diff_eq!(s.gram()[(0, 1)].re, g, epsilon = 1e-15);
        let expected = ((1.0 + g) / (1.0 - g)).sqrt();
        assert_abs_diff_eq!(
            orthogonalizer_condition(&s).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dual_of_pair_matches_inverse() {
        let s = pair(0.6);
        let d = dual_system(&s).unwrap();
        let f = d.frames().unwrap();
        // dual of u = e1 is orthogonal to v, the dual of v orthogonal to u
        assert_abs_diff_eq!(f[(0, 1)].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            (f[(0, 0)] * 0.6 + f[(1, 0)] * 0.8).norm(),
            0.0,
            epsilon = 1e-12
        );
        assert!(biorthogonality_defect(&s, &d).unwrap() < 1e-12);
    }

    #[test]
    fn repeated_subspace_embedding() {
        let v = CMatrix::from_column_slice(2, 1, &[c(0.6), c(0.8)]);
        let s = SubspaceSystem::from_frames_allow_dependent(&[v.clone(), v.clone(), v]).unwrap();
        assert_abs_diff_eq!(embedding_norm(&s), 3.0, epsilon = 1e-12);
        assert!(SubspaceSystem::from_frames(&vec![
            CMatrix::from_column_slice(
                2,
                1,
                &[c(1.0), c(0.0)]
            );
            2
        ])
        .is_err());
    }

    #[test]
    fn critical_subset_finds_parallel_pair() {
        let t = 0.05f64;
        let vecs = vec![
            vec![c(0.0), c(0.0), c(1.0), c(0.0)],
            vec![c(1.0), c(0.0), c(0.0), c(0.0)],
            vec![c(0.0), c(0.0), c(0.0), c(1.0)],
            vec![c(t.cos()), c(t.sin()), c(0.0), c(0.0)],
        ];
        let s = SubspaceSystem::from_vectors(&vecs).unwrap();
        let out = extract_critical_subset(&s, 0.5).unwrap().unwrap();
        assert_eq!(out.indices, vec![1, 3]);
        assert!(out.constant < 0.5);
    }

    #[test]
    fn tensor_bounds_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = tensor_bound_check(&[c(0.0), c(0.5)], 3, 100, &mut rng).unwrap();
        assert_eq!(r.violations, 0);
        let r = tensor_bound_check(&[c(0.2)], 2, 10, &mut rng).unwrap();
        assert_abs_diff_eq!(r.lower_factor, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.upper_factor, 1.0, epsilon = 1e-14);
    }
}
