//! Jordan/eigen decomposition of the Laplacian with the partitioning
//! `R = [α·1, R̃]`, the observable index set, and the geometric weight
//! matrices ν and Σ_Q.
//!
//! Jordan blocks are indexed 0-based: block 0 is the consensus block
//! (λ = 0, size 1); blocks `1..m` carry the stable spectrum.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{has_globally_reachable_node, FamilyHint, Laplacian, OutputMatrix};

/// Relative residual allowed in `‖L·R − R·J‖_F ≤ tol·‖L‖_F`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Allowed deviation in `‖R·Rinv − I‖_F`.
pub const INVERSE_TOL: f64 = 1e-8;
/// `λ` counts as the consensus eigenvalue when `|λ| ≤ tol·‖L‖_F`.
pub const ZERO_EIG_TOL: f64 = 1e-9;
/// Largest eigenvector condition number accepted on the numeric path.
pub const COND_LIMIT: f64 = 1e8;
/// Relative threshold deciding whether `C·R̃_k` is nonzero.
pub const OBSV_TOL: f64 = 1e-10;

/// The decomposition `L = R J R⁻¹` with the consensus mode isolated in
/// front: `eigenvalues[0] = 0`, `block_sizes[0] = 1`, first column of `R`
/// equal to `α·1`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: Vec<Complex64>,
    block_sizes: Vec<usize>,
    r: Array2<Complex64>,
    r_inv: Array2<Complex64>,
    alpha: Complex64,
    offsets: Vec<usize>,
}

impl SpectralData {
    /// Number of Jordan blocks (m).
    pub fn block_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// State offset of block k: `d_k = Σ_{i<k} n_i`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn r(&self) -> &Array2<Complex64> {
        &self.r
    }

    pub fn r_inv(&self) -> &Array2<Complex64> {
        &self.r_inv
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// Columns of `R` except the consensus column.
    pub fn r_tilde(&self) -> ArrayView2<'_, Complex64> {
        self.r.slice(s![.., 1..])
    }

    /// Rows of `R⁻¹` except the consensus row.
    pub fn q_tilde(&self) -> ArrayView2<'_, Complex64> {
        self.r_inv.slice(s![1.., ..])
    }

    /// The eigenvector column block of Jordan block `k`.
    pub fn block_columns(&self, k: usize) -> ArrayView2<'_, Complex64> {
        let start = self.offsets[k];
        let end = start + self.block_sizes[k];
        self.r.slice(s![.., start..end])
    }

    /// Assemble the Jordan matrix J from `(λ_k, n_k)`.
    pub fn jordan_matrix(&self) -> Array2<Complex64> {
        let n = self.n();
        let mut j = Array2::<Complex64>::zeros((n, n));
        for (k, (&lam, &nk)) in self.eigenvalues.iter().zip(&self.block_sizes).enumerate() {
            let d = self.offsets[k];
            for i in 0..nk {
                j[[d + i, d + i]] = lam;
                if i + 1 < nk {
                    j[[d + i, d + i + 1]] = Complex64::new(1.0, 0.0);
                }
            }
        }
        j
    }

    /// The deflated Jordan matrix J̃ (the consensus block removed).
    pub fn jordan_matrix_deflated(&self) -> Array2<Complex64> {
        let j = self.jordan_matrix();
        j.slice(s![1.., 1..]).to_owned()
    }

    /// Validate the structural invariants against `L`.
    fn validate(self, l: &Laplacian) -> Result<Self> {
        let n = l.n();
        if self.r.dim() != (n, n) || self.r_inv.dim() != (n, n) {
            return Err(Error::ShapeMismatch("R must be n x n".into()));
        }
        let total: usize = self.block_sizes.iter().sum();
        if total != n || self.block_sizes.len() != self.eigenvalues.len() {
            return Err(Error::ShapeMismatch(format!(
                "block sizes sum to {total}, expected {n}"
            )));
        }
        let l_norm = l.norm_fro().max(f64::MIN_POSITIVE);
        if self.eigenvalues[0].norm() > ZERO_EIG_TOL * l_norm || self.block_sizes[0] != 1 {
            return Err(Error::ResidualTooLarge(format!(
                "first block must be the scalar consensus eigenvalue, got {} (size {})",
                self.eigenvalues[0], self.block_sizes[0]
            )));
        }
        for (k, lam) in self.eigenvalues.iter().enumerate().skip(1) {
            if lam.re <= 0.0 {
                return Err(Error::ResidualTooLarge(format!(
                    "eigenvalue {lam} of block {k} does not have positive real part"
                )));
            }
        }
        // first column of R equals alpha * 1
        for i in 0..n {
            if (self.r[[i, 0]] - self.alpha).norm() > 1e-10 * (1.0 + self.alpha.norm()) {
                return Err(Error::ResidualTooLarge(
                    "first column of R is not a constant vector".into(),
                ));
            }
        }
        let lc = l.matrix().mapv(|v| Complex64::new(v, 0.0));
        let j = self.jordan_matrix();
        let resid = &lc.dot(&self.r) - &self.r.dot(&j);
        let resid_norm = resid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if resid_norm > RESIDUAL_TOL * l_norm {
            return Err(Error::ResidualTooLarge(format!(
                "‖LR − RJ‖ = {resid_norm:.3e} exceeds {RESIDUAL_TOL:.1e}·‖L‖"
            )));
        }
        let mut eye_resid = self.r.dot(&self.r_inv);
        for i in 0..n {
            eye_resid[[i, i]] -= Complex64::new(1.0, 0.0);
        }
        let eye_norm = eye_resid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if eye_norm > INVERSE_TOL {
            return Err(Error::SingularR(format!(
                "‖R·Rinv − I‖ = {eye_norm:.3e} exceeds {INVERSE_TOL:.1e}"
            )));
        }
        Ok(self)
    }
}

fn offsets_from_sizes(sizes: &[usize]) -> Vec<usize> {
    let mut offs = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for &s in sizes {
        offs.push(acc);
        acc += s;
    }
    offs
}

/// Decompose `L = R J R⁻¹`.
///
/// With a family hint the analytic decomposition is returned, including the
/// defective directed-path chain. Without a hint a numeric eigendecomposition
/// is used; it is accepted only when the eigenvector matrix has condition
/// number at most [`COND_LIMIT`], in which case all Jordan blocks are scalar.
pub fn decompose(l: &Laplacian, hint: Option<FamilyHint>) -> Result<SpectralData> {
    if !has_globally_reachable_node(&l.to_digraph()) {
        return Err(Error::NoReachableNode);
    }
    let data = match hint {
        Some(FamilyHint::Cycle { n, d, omega }) => cycle_decomposition(l, n, d, omega)?,
        Some(FamilyHint::Star { n }) => star_decomposition(l, n)?,
        Some(FamilyHint::Path { n }) => path_decomposition(l, n)?,
        None => numeric_decomposition(l)?,
    };
    data.validate(l)
}

fn cycle_decomposition(l: &Laplacian, n: usize, d: f64, omega: usize) -> Result<SpectralData> {
    if l.n() != n {
        return Err(Error::ShapeMismatch(format!(
            "hint says n = {n} but L is {}x{}",
            l.n(),
            l.n()
        )));
    }
    // λ_k = d (1 − (1/ω) Σ_{i=1..ω} e^{−j 2π i (k−1)/n}), Fourier eigenvectors
    let mut eigenvalues = Vec::with_capacity(n);
    for k in 0..n {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 1..=omega {
            let ang = -2.0 * PI * (i as f64) * (k as f64) / n as f64;
            s += Complex64::from_polar(1.0, ang);
        }
        eigenvalues.push(Complex64::new(d, 0.0) * (Complex64::new(1.0, 0.0) - s / omega as f64));
    }
    eigenvalues[0] = Complex64::new(0.0, 0.0);
    let scale = 1.0 / (n as f64).sqrt();
    let mut r = Array2::<Complex64>::zeros((n, n));
    for col in 0..n {
        for row in 0..n {
            // conjugated Vandermonde column, unit 2-norm
            let ang = -2.0 * PI * (col as f64) * (row as f64) / n as f64;
            r[[row, col]] = Complex64::from_polar(scale, ang);
        }
    }
    // unitary: Rinv = R*
    let r_inv = conj_transpose(&r);
    let block_sizes = vec![1usize; n];
    let offsets = offsets_from_sizes(&block_sizes);
    Ok(SpectralData {
        eigenvalues,
        block_sizes,
        r,
        r_inv,
        alpha: Complex64::new(scale, 0.0),
        offsets,
    })
}

fn star_decomposition(l: &Laplacian, n: usize) -> Result<SpectralData> {
    if l.n() != n {
        return Err(Error::ShapeMismatch(format!(
            "hint says n = {n} but L is {}x{}",
            l.n(),
            l.n()
        )));
    }
    let lam = n as f64 / (n as f64 - 1.0);
    let mut eigenvalues = vec![Complex64::new(0.0, 0.0)];
    eigenvalues.extend(std::iter::repeat_n(Complex64::new(lam, 0.0), n - 1));
    // R = [1, e_1, ..., e_{n-1}]  (alpha = 1)
    let mut r = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        r[[i, 0]] = Complex64::new(1.0, 0.0);
    }
    for k in 1..n {
        r[[k - 1, k]] = Complex64::new(1.0, 0.0);
    }
    // Rinv = [e_n^T; I, -1]
    let mut r_inv = Array2::<Complex64>::zeros((n, n));
    r_inv[[0, n - 1]] = Complex64::new(1.0, 0.0);
    for k in 1..n {
        r_inv[[k, k - 1]] = Complex64::new(1.0, 0.0);
        r_inv[[k, n - 1]] = Complex64::new(-1.0, 0.0);
    }
    let block_sizes = vec![1usize; n];
    let offsets = offsets_from_sizes(&block_sizes);
    Ok(SpectralData {
        eigenvalues,
        block_sizes,
        r,
        r_inv,
        alpha: Complex64::new(1.0, 0.0),
        offsets,
    })
}

fn path_decomposition(l: &Laplacian, n: usize) -> Result<SpectralData> {
    if l.n() != n {
        return Err(Error::ShapeMismatch(format!(
            "hint says n = {n} but L is {}x{}",
            l.n(),
            l.n()
        )));
    }
    // Eigenvalue 1 carries one Jordan block of size n−1 with the chain
    // v_j = (−1)^{j−1} e_{n−j}: (L − I) v_1 = 0 and (L − I) v_{j+1} = v_j.
    let eigenvalues = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let block_sizes = vec![1usize, n - 1];
    let mut r = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        r[[i, 0]] = Complex64::new(1.0, 0.0);
    }
    for j in 1..n {
        let sign = if (j - 1) % 2 == 0 { 1.0 } else { -1.0 };
        r[[n - j, j]] = Complex64::new(sign, 0.0);
    }
    // Rinv rows: q_1* = e_0^T; row j: (−1)^{j−1} (e_{n−j} − e_0)^T
    let mut r_inv = Array2::<Complex64>::zeros((n, n));
    r_inv[[0, 0]] = Complex64::new(1.0, 0.0);
    for j in 1..n {
        let sign = if (j - 1) % 2 == 0 { 1.0 } else { -1.0 };
        r_inv[[j, n - j]] = Complex64::new(sign, 0.0);
        r_inv[[j, 0]] = Complex64::new(-sign, 0.0);
    }
    let offsets = offsets_from_sizes(&block_sizes);
    Ok(SpectralData {
        eigenvalues,
        block_sizes,
        r,
        r_inv,
        alpha: Complex64::new(1.0, 0.0),
        offsets,
    })
}

fn numeric_decomposition(l: &Laplacian) -> Result<SpectralData> {
    let n = l.n();
    let l_norm = l.norm_fro().max(f64::MIN_POSITIVE);
    let (vals, vecs) = l
        .matrix()
        .eig()
        .map_err(|e| Error::DefectiveOrIllConditioned(format!("eigensolver failed: {e}")))?;

    // locate the consensus eigenvalue
    let zero_idx = (0..n)
        .filter(|&i| vals[i].norm() <= ZERO_EIG_TOL * l_norm)
        .min_by(|&a, &b| vals[a].norm().partial_cmp(&vals[b].norm()).unwrap());
    let zero_idx = match zero_idx {
        Some(i) => i,
        None => return Err(Error::NoReachableNode),
    };
    let mut order: Vec<usize> = (0..n).filter(|&i| i != zero_idx).collect();
    order.sort_by(|&a, &b| {
        (vals[a].re, vals[a].im)
            .partial_cmp(&(vals[b].re, vals[b].im))
            .unwrap()
    });

    let normal = l.is_normal(1e-10);
    let alpha = if normal {
        Complex64::new(1.0 / (n as f64).sqrt(), 0.0)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut r = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        r[[i, 0]] = alpha;
    }
    let mut eigenvalues = vec![Complex64::new(0.0, 0.0)];
    for (col, &idx) in order.iter().enumerate() {
        let v: Array1<Complex64> = vecs.column(idx).to_owned();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::SingularR(format!("zero eigenvector column {idx}")));
        }
        r.column_mut(col + 1).assign(&v);
        eigenvalues.push(vals[idx]);
    }

    if normal {
        // eigenvectors of distinct eigenvalues of a normal matrix are
        // already orthogonal; orthonormalize within degenerate clusters so
        // that R̃ comes out unitary
        let cluster_tol = 1e-9 * l_norm.max(1.0);
        let mut start = 1;
        while start < n {
            let mut end = start + 1;
            while end < n && (eigenvalues[end] - eigenvalues[start]).norm() <= cluster_tol {
                end += 1;
            }
            for j in start..end {
                for prev in start..j {
                    let mut proj = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        proj += r[[i, prev]].conj() * r[[i, j]];
                    }
                    for i in 0..n {
                        let sub = proj * r[[i, prev]];
                        r[[i, j]] -= sub;
                    }
                }
                let norm = r.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-10 {
                    return Err(Error::DefectiveOrIllConditioned(format!(
                        "degenerate eigenvector cluster at λ = {} is rank deficient",
                        eigenvalues[start]
                    )));
                }
                for i in 0..n {
                    r[[i, j]] /= norm;
                }
            }
            start = end;
        }
    }

    // gauge: unit norm, entry of largest magnitude real positive
    for col in 1..n {
        let mut v = r.column(col).to_owned();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut pivot = 0;
        for i in 1..n {
            if v[i].norm() > v[pivot].norm() {
                pivot = i;
            }
        }
        let phase = v[pivot] / v[pivot].norm();
        let scale = phase.conj() / norm;
        v.mapv_inplace(|z| z * scale);
        r.column_mut(col).assign(&v);
    }

    let (_, sing, _) = r
        .svd(false, false)
        .map_err(|e| Error::DefectiveOrIllConditioned(format!("svd failed: {e}")))?;
    let smax = sing[0];
    let smin = sing[sing.len() - 1];
    if smin <= 0.0 || smin.is_nan() || smax / smin > COND_LIMIT {
        return Err(Error::DefectiveOrIllConditioned(format!(
            "eigenvector condition number {:.3e} exceeds {COND_LIMIT:.1e}; \
             supply a family hint or explicit Jordan data",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let r_inv = r
        .inv()
        .map_err(|e| Error::SingularR(format!("inversion failed: {e}")))?;
    let block_sizes = vec![1usize; n];
    let offsets = offsets_from_sizes(&block_sizes);
    Ok(SpectralData {
        eigenvalues,
        block_sizes,
        r,
        r_inv,
        alpha,
        offsets,
    })
}

/// Validate user-supplied Jordan data `(eigenvalues, block_sizes, R)`
/// against `L` and wrap it as [`SpectralData`].
pub fn import_jordan(
    l: &Laplacian,
    eigenvalues: Vec<Complex64>,
    block_sizes: Vec<usize>,
    r: Array2<Complex64>,
) -> Result<SpectralData> {
    let n = l.n();
    if r.dim() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "R is {:?}, expected ({n}, {n})",
            r.dim()
        )));
    }
    if eigenvalues.len() != block_sizes.len() {
        return Err(Error::ShapeMismatch(
            "eigenvalues and block_sizes must have equal length".into(),
        ));
    }
    let r_inv = r
        .inv()
        .map_err(|e| Error::SingularR(format!("inversion failed: {e}")))?;
    let offsets = offsets_from_sizes(&block_sizes);
    let alpha = r[[0, 0]];
    SpectralData {
        eigenvalues,
        block_sizes,
        r,
        r_inv,
        alpha,
        offsets,
    }
    .validate(l)
}

/// Observable Jordan block indices `{k ≥ 1 : ‖C·R̃_k‖ > tol·‖C‖·‖R̃_k‖}`.
pub fn observable_indices(c: &OutputMatrix, s: &SpectralData) -> Result<BTreeSet<usize>> {
    if !c.annihilates_consensus() {
        return Err(Error::AssumptionViolated(format!(
            "C·1 has max residual {:.3e}; the output matrix must annihilate the consensus mode",
            c.ones_residual()
        )));
    }
    if c.n() != s.n() {
        return Err(Error::ShapeMismatch(format!(
            "C has {} columns but L has {} nodes",
            c.n(),
            s.n()
        )));
    }
    let cc = c.matrix().mapv(|v| Complex64::new(v, 0.0));
    let c_norm = c.matrix().iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut set = BTreeSet::new();
    for k in 1..s.block_count() {
        let cols = s.block_columns(k);
        let prod = cc.dot(&cols);
        let p_norm = prod.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let r_norm = cols.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if p_norm > OBSV_TOL * c_norm * r_norm {
            set.insert(k);
        }
    }
    Ok(set)
}

/// The geometric side of the performance formulas: ν, the spectrum of
/// `M = CᵀC`, and the observable index set.
#[derive(Debug, Clone)]
pub struct GeometricWeights {
    nu: Array2<Complex64>,
    mu: Vec<f64>,
    observable: BTreeSet<usize>,
}

impl GeometricWeights {
    /// The (n−1)×(n−1) Hermitian matrix ν over non-consensus states.
    pub fn nu(&self) -> &Array2<Complex64> {
        &self.nu
    }

    /// Eigenvalues of `M = CᵀC`, `mu[0] = 0` paired with `θ_1 = 1/√n·1`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn observable(&self) -> &BTreeSet<usize> {
        &self.observable
    }

    /// ν entry addressed by the paper-style state indices `η = d_k + p`,
    /// which run over `2..=n`; the consensus state is excluded.
    pub fn nu_entry(&self, eta: usize, kappa: usize) -> Complex64 {
        self.nu[[eta - 2, kappa - 2]]
    }
}

/// Build ν from the spectral sum `ν_{ηκ} = Σ_{l≥2} ⟨θ_l, r_η⟩⟨r_κ, θ_l⟩ μ_l`
/// with the eigendecomposition of `M = CᵀC` restricted to `1⊥` so that
/// `μ_1 = 0` is always paired with `θ_1 = 1/√n·1`.
pub fn geometric_weights(c: &OutputMatrix, s: &SpectralData) -> Result<GeometricWeights> {
    let observable = observable_indices(c, s)?; // also checks C·1 = 0 and shape
    let n = s.n();
    let m = c.matrix().t().dot(c.matrix());

    // Householder basis of 1-perp: columns 1..n of the reflector sending
    // e_1 to the normalized ones vector.
    let u_basis = ones_complement_basis(n);
    let m_red = u_basis.t().dot(&m).dot(&u_basis);
    let (mu_red, theta_red) = m_red
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Numerical(format!("eigh of reduced M failed: {e}")))?;
    let mut mu = Vec::with_capacity(n);
    mu.push(0.0);
    for &w in mu_red.iter() {
        // clip the tiny negatives a PSD matrix can produce in floating point
        mu.push(if w < 0.0 && w > -1e-10 { 0.0 } else { w });
    }
    if let Some(bad) = mu.iter().find(|&&w| w < 0.0) {
        return Err(Error::NotPsd(format!("CᵀC has negative eigenvalue {bad}")));
    }
    let thetas = u_basis.dot(&theta_red); // n x (n-1), columns θ_2..θ_n

    let r_tilde = s.r_tilde();
    let thetas_c = thetas.mapv(|v| Complex64::new(v, 0.0));
    // inner[l, η] = ⟨θ_l, r_η⟩ = r_η* θ_l
    let inner = conj_transpose(&r_tilde.to_owned()).dot(&thetas_c);
    let mut nu = Array2::<Complex64>::zeros((n - 1, n - 1));
    for eta in 0..n - 1 {
        for kappa in 0..n - 1 {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..n - 1 {
                acc += inner[[eta, l]] * inner[[kappa, l]].conj() * mu[l + 1];
            }
            nu[[eta, kappa]] = acc;
        }
    }
    // Hermitian by construction up to floating point; symmetrize and clean
    // the diagonal so downstream consumers can rely on it.
    let nu_h = conj_transpose(&nu);
    let mut nu = (&nu + &nu_h) * Complex64::new(0.5, 0.0);
    for i in 0..n - 1 {
        let d = nu[[i, i]].re;
        nu[[i, i]] = Complex64::new(if d < 0.0 && d > -1e-12 { 0.0 } else { d }, 0.0);
        if nu[[i, i]].re < 0.0 {
            return Err(Error::Numerical(format!(
                "ν has negative diagonal entry {}",
                nu[[i, i]].re
            )));
        }
    }
    Ok(GeometricWeights { nu, mu, observable })
}

/// Orthonormal basis of `span{1}⊥` as the trailing columns of a Householder
/// reflector.
fn ones_complement_basis(n: usize) -> Array2<f64> {
    // H = I − 2 w wᵀ with w ∝ (e_1 − q), q = 1/√n · 1; columns 2..n span 1⊥
    let q = 1.0 / (n as f64).sqrt();
    let mut w = Array1::<f64>::from_elem(n, -q);
    w[0] += 1.0;
    let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w = &w / w_norm;
    let mut h = Array2::<f64>::eye(n);
    for i in 0..n {
        for j in 0..n {
            h[[i, j]] -= 2.0 * w[i] * w[j];
        }
    }
    h.slice(s![.., 1..]).to_owned()
}

/// Input specification for the performance metric.
#[derive(Debug, Clone)]
pub enum InputSpec {
    /// Deterministic impulse direction `w_0`.
    Deterministic(Array1<f64>),
    /// Covariance `Σ_0` of a random impulse direction.
    Covariance(Array2<f64>),
    /// `E[w_0 w_0ᵀ] = I`; the metric then equals the squared H2 norm.
    IdentityCovariance,
}

impl InputSpec {
    /// Realize `Σ_0` as a dense matrix, validating PSD-ness for the
    /// covariance case.
    pub fn sigma0(&self, n: usize) -> Result<Array2<f64>> {
        match self {
            InputSpec::Deterministic(w0) => {
                if w0.len() != n {
                    return Err(Error::ShapeMismatch(format!(
                        "w0 has length {}, expected {n}",
                        w0.len()
                    )));
                }
                let mut s = Array2::<f64>::zeros((n, n));
                for i in 0..n {
                    for j in 0..n {
                        s[[i, j]] = w0[i] * w0[j];
                    }
                }
                Ok(s)
            }
            InputSpec::Covariance(s0) => {
                if s0.dim() != (n, n) {
                    return Err(Error::ShapeMismatch(format!(
                        "Sigma0 is {:?}, expected ({n}, {n})",
                        s0.dim()
                    )));
                }
                let asym = (s0 - &s0.t())
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0, f64::max);
                if asym > 1e-10 {
                    return Err(Error::NotPsd(format!(
                        "Sigma0 is not symmetric (max asymmetry {asym:.3e})"
                    )));
                }
                let (w, _) = s0
                    .eigh(UPLO::Lower)
                    .map_err(|e| Error::Numerical(format!("eigh of Sigma0 failed: {e}")))?;
                let scale = w.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
                if w.iter().any(|&v| v < -1e-10 * scale) {
                    return Err(Error::NotPsd(format!(
                        "Sigma0 has negative eigenvalue {:.3e}",
                        w.iter().cloned().fold(f64::INFINITY, f64::min)
                    )));
                }
                Ok(s0.clone())
            }
            InputSpec::IdentityCovariance => Ok(Array2::<f64>::eye(n)),
        }
    }
}

/// `Σ_Q = Q̃ Σ_0 Q̃*`.
pub fn sigma_q(s: &SpectralData, input: &InputSpec) -> Result<Array2<Complex64>> {
    let sigma0 = input.sigma0(s.n())?;
    let sigma0c = sigma0.mapv(|v| Complex64::new(v, 0.0));
    let q = s.q_tilde().to_owned();
    let qh = conj_transpose(&q);
    Ok(q.dot(&sigma0c).dot(&qh))
}

/// Conjugate transpose of a complex matrix.
pub fn conj_transpose(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}
