//! Density operators, pure states, ensembles, entropies, and the distance
//! measures used by the rate formulas and the protocol error criteria.
//!
//! Validation tolerances: Hermiticity 1e-10, minimum eigenvalue −1e-9,
//! trace 1e-10. Violations inside tolerance are repaired by symmetrizing
//! ρ ← (ρ+ρ†)/2 and renormalizing; anything beyond is rejected. Eigenvalues
//! below 1e-12 are treated as zero for entropies and pseudo-inverses.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat::{self, CMat, CVec};

pub const HERM_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-10;
/// Support cutoff for entropies and pseudo-inverses (eigen-solver noise floor).
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// Hermitian eigendecomposition, ascending eigenvalues. The input is
/// symmetrized first so eigen-solver input is exactly Hermitian.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let h = mat::hermitize(m);
    let se = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let d = se.eigenvectors.nrows();
    let mut vecs = CMat::zeros(d, d);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Apply `f` to the eigenvalues of a Hermitian matrix.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let d = vals.len();
    let mut out = CMat::zeros(d, d);
    for k in 0..d {
        let col = vecs.column(k);
        let fv = f(vals[k]);
        if fv != 0.0 {
            out += (col * col.adjoint()).scale(fv);
        }
    }
    out
}

/// Hermitian PSD unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
}

impl DensityOperator {
    /// Validate and repair within tolerance.
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if !mat::is_finite(&m) {
            return Err(Error::NonFinite);
        }
        let herm_dev = mat::max_abs_entry(&(&m - m.adjoint()));
        if herm_dev > HERM_TOL {
            return Err(Error::NotHermitian(herm_dev));
        }
        let h = mat::hermitize(&m);
        let tr = mat::trace(&h).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let (vals, _) = eigh(&h);
        let min_ev = vals.first().copied().unwrap_or(0.0);
        if min_ev < -PSD_TOL {
            return Err(Error::NotPsd(min_ev));
        }
        Ok(Self {
            matrix: h.unscale(tr),
        })
    }

    /// Pure state ρ = |ψ⟩⟨ψ| from a (normalized) vector.
    pub fn pure_from_vec(v: &CVec) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(n));
        }
        Self::new(mat::outer(v, v).unscale(n * n))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: mat::identity(d).unscale(d as f64),
        }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let mut m = CMat::zeros(d, d);
        for (i, &p) in probs.iter().enumerate() {
            m[(i, i)] = mat::cr(p);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn eigen(&self) -> (Vec<f64>, CMat) {
        eigh(&self.matrix)
    }

    /// Entrywise transpose in the computational basis; this is the reduced
    /// state of the canonical purification on the reference side.
    pub fn transposed(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }
}

/// Normalized vector on an ordered tensor product of factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vector: CVec,
    subsystem_dims: Vec<usize>,
}

impl PureState {
    pub fn new(vector: CVec, subsystem_dims: Vec<usize>) -> Result<Self> {
        let total: usize = subsystem_dims.iter().product();
        if total != vector.len() {
            return Err(Error::BadFactorization {
                dims: subsystem_dims,
                dim: vector.len(),
            });
        }
        let n = vector.norm();
        if (n - 1.0).abs() > HERM_TOL.max(1e-10) {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self {
            vector: vector.unscale(n),
            subsystem_dims,
        })
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: mat::outer(&self.vector, &self.vector),
        }
    }

    /// Reduced density operator on the given factors.
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityOperator> {
        let rho = mat::outer(&self.vector, &self.vector);
        let red = mat::partial_trace(&rho, &self.subsystem_dims, keep)?;
        Ok(DensityOperator { matrix: red })
    }
}

/// Finite ensemble of weighted density operators.
#[derive(Debug, Clone)]
pub struct Ensemble {
    items: Vec<(f64, DensityOperator)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, DensityOperator)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Invalid("empty ensemble".into()));
        }
        let d = items[0].1.dim();
        let mut sum = 0.0;
        for (p, rho) in &items {
            if *p < -1e-12 {
                return Err(Error::BadProbability(*p));
            }
            if rho.dim() != d {
                return Err(Error::DimensionMismatch(rho.dim(), d));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistribution(sum));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(f64, DensityOperator)] {
        &self.items
    }

    pub fn average(&self) -> CMat {
        let d = self.items[0].1.dim();
        let mut avg = CMat::zeros(d, d);
        for (p, rho) in &self.items {
            avg += rho.matrix().scale(*p);
        }
        avg
    }
}

/// −Σ λ log₂ λ over eigenvalues above the support cutoff, in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    let (vals, _) = rho.eigen();
    entropy_of_eigenvalues(&vals)
}

pub fn entropy_of_eigenvalues(vals: &[f64]) -> f64 {
    -vals
        .iter()
        .filter(|&&v| v > SUPPORT_CUTOFF)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Binary entropy h_b(p) = −p log₂ p − (1−p) log₂(1−p) in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability(p));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Shannon entropy of a distribution, in bits.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > SUPPORT_CUTOFF)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Trace norm ‖M‖₁ = sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Unnormalized trace distance ‖ρ−σ‖₁ ∈ [0, 2].
pub fn trace_norm_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    // difference of Hermitian matrices: singular values = |eigenvalues|
    let (vals, _) = eigh(&(rho.matrix() - sigma.matrix()));
    Ok(vals.iter().map(|v| v.abs()).sum())
}

/// Square-root fidelity convention: F(ρ,σ) = (Tr√(√ρ σ √ρ))².
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let sq = matrix_sqrt(rho.matrix());
    let inner = &sq * sigma.matrix() * &sq;
    let (vals, _) = eigh(&inner);
    let root_sum: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0 + 1e-9).min(1.0))
}

/// Principal square root of a PSD matrix (negative noise clipped to zero).
pub fn matrix_sqrt(m: &CMat) -> CMat {
    herm_fn(m, |v| v.max(0.0).sqrt())
}

/// λ^{−1/2} on the support (eigenvalues above the cutoff), 0 elsewhere.
pub fn matrix_sqrt_pinv(rho: &DensityOperator) -> CMat {
    herm_fn(rho.matrix(), |v| {
        if v > SUPPORT_CUTOFF {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    })
}

/// Canonical purification |ψ_ρ⟩ = (I ⊗ √ρ)Γ with Γ = Σ_i |i⟩|i⟩, ordered
/// reference ⊗ system. Tracing the system factor yields the entrywise
/// transpose of ρ; tracing the reference yields ρ.
pub fn canonical_purification(rho: &DensityOperator) -> PureState {
    let d = rho.dim();
    let sq = matrix_sqrt(rho.matrix());
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            // ⟨i|⊗⟨j| (I ⊗ √ρ) Σ_k |k⟩|k⟩ = (√ρ)_{j i}
            v[i * d + j] = sq[(j, i)];
        }
    }
    let n = v.norm();
    PureState {
        vector: v.unscale(n),
        subsystem_dims: vec![d, d],
    }
}

/// Overlap fidelity |⟨ψ|φ⟩|² for pure states.
pub fn pure_fidelity(psi: &PureState, phi: &PureState) -> Result<f64> {
    if psi.vector.len() != phi.vector.len() {
        return Err(Error::DimensionMismatch(psi.vector.len(), phi.vector.len()));
    }
    let ov = (psi.vector.adjoint() * &phi.vector)[(0, 0)];
    Ok(ov.norm_sqr())
}

/// Unnormalized maximally entangled vector Γ = Σ_i |i⟩|i⟩.
pub fn gamma_vector(d: usize) -> CVec {
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = Complex64::new(1.0, 0.0);
    }
    v
}
