//! CPTP-map algebra: Kraus and Stinespring forms, complementary channels,
//! posterior reference maps, measurement-operator decompositions, Uhlmann
//! isometries, and Naimark extension.
//!
//! Conventions fixed here and relied on everywhere else:
//! * Stinespring output order is system ⊗ environment, with the Kraus index
//!   as the environment basis label.
//! * Reference-side basis vectors come from the fixed Γ = Σ_i |i⟩|i⟩, so
//!   |a⟩^{A_R} = (I ⊗ ⟨a|)Γ is the entrywise conjugate of |a⟩^A.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat::{self, CMat, CVec};
use crate::state::{self, DensityOperator, PureState, SUPPORT_CUTOFF};

pub const KRAUS_TOL: f64 = 1e-9;
pub const ISOMETRY_TOL: f64 = 1e-9;

/// CPTP map in Kraus form: ρ ↦ Σ_k K_k ρ K_k†.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    kraus: Vec<CMat>,
    d_in: usize,
    d_out: usize,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Invalid(
                "channel needs at least one Kraus operator".into(),
            ));
        }
        let d_out = kraus[0].nrows();
        let d_in = kraus[0].ncols();
        let mut comp = CMat::zeros(d_in, d_in);
        for k in &kraus {
            if k.nrows() != d_out || k.ncols() != d_in {
                return Err(Error::DimensionMismatch(k.nrows(), d_out));
            }
            if !mat::is_finite(k) {
                return Err(Error::NonFinite);
            }
            comp += k.adjoint() * k;
        }
        let dev = mat::max_abs_entry(&(comp - mat::identity(d_in)));
        if dev > KRAUS_TOL {
            return Err(Error::KrausIncomplete(dev));
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![mat::identity(d)],
            d_in: d,
            d_out: d,
        }
    }

    /// Bit-flip channel {√(1−p) I, √p X}.
    pub fn bit_flip(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadProbability(p));
        }
        let x = CMat::from_row_slice(
            2,
            2,
            &[mat::cr(0.0), mat::cr(1.0), mat::cr(1.0), mat::cr(0.0)],
        );
        Self::new(vec![
            mat::identity(2).scale((1.0 - p).sqrt()),
            x.scale(p.sqrt()),
        ])
    }

    /// Depolarizing channel (1−3p/4)ρ + (p/4)(XρX + YρY + ZρZ).
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadProbability(p));
        }
        let x = CMat::from_row_slice(
            2,
            2,
            &[mat::cr(0.0), mat::cr(1.0), mat::cr(1.0), mat::cr(0.0)],
        );
        let y = CMat::from_row_slice(
            2,
            2,
            &[
                mat::cr(0.0),
                mat::c(0.0, -1.0),
                mat::c(0.0, 1.0),
                mat::cr(0.0),
            ],
        );
        let z = CMat::from_row_slice(
            2,
            2,
            &[mat::cr(1.0), mat::cr(0.0), mat::cr(0.0), mat::cr(-1.0)],
        );
        Self::new(vec![
            mat::identity(2).scale((1.0 - 3.0 * p / 4.0).sqrt()),
            x.scale((p / 4.0).sqrt()),
            y.scale((p / 4.0).sqrt()),
            z.scale((p / 4.0).sqrt()),
        ])
    }

    /// Σ_k K_k ρ K_k†.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        DensityOperator::new(self.apply_matrix(rho.matrix())?)
    }

    /// Action on an arbitrary matrix (no state validation).
    pub fn apply_matrix(&self, m: &CMat) -> Result<CMat> {
        if m.nrows() != self.d_in || m.ncols() != self.d_in {
            return Err(Error::DimensionMismatch(m.nrows(), self.d_in));
        }
        let mut out = CMat::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        Ok(out)
    }

    /// Adjoint map X ↦ Σ_k K_k† X K_k.
    pub fn apply_adjoint(&self, m: &CMat) -> Result<CMat> {
        if m.nrows() != self.d_out || m.ncols() != self.d_out {
            return Err(Error::DimensionMismatch(m.nrows(), self.d_out));
        }
        let mut out = CMat::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            out += k.adjoint() * m * k;
        }
        Ok(out)
    }

    /// Canonical Stinespring isometry V = Σ_k K_k ⊗ |k⟩_E with environment
    /// dimension max(#Kraus, env_dim_min, d_out); Tr_E{VρV†} = Σ KρK†.
    pub fn stinespring(&self, env_dim_min: usize) -> Isometry {
        let d_env = self.kraus.len().max(env_dim_min).max(self.d_out);
        let mut v = CMat::zeros(self.d_out * d_env, self.d_in);
        for (k, kr) in self.kraus.iter().enumerate() {
            for a in 0..self.d_out {
                for b in 0..self.d_in {
                    v[(a * d_env + k, b)] = kr[(a, b)];
                }
            }
        }
        Isometry {
            matrix: v,
            out_dims: vec![self.d_out, d_env],
        }
    }

    /// Complementary channel to the environment of the canonical Stinespring:
    /// N^c(ρ) = Tr_out{VρV†}, realized with Kraus operators L_a = (⟨a| ⊗ I_E)V.
    pub fn complementary(&self) -> QuantumChannel {
        let v = self.stinespring(self.d_in);
        let d_env = v.out_dims[1];
        let mut kraus = Vec::with_capacity(self.d_out);
        for a in 0..self.d_out {
            let mut l = CMat::zeros(d_env, self.d_in);
            for e in 0..d_env {
                for b in 0..self.d_in {
                    l[(e, b)] = v.matrix[(a * d_env + e, b)];
                }
            }
            kraus.push(l);
        }
        QuantumChannel {
            kraus,
            d_in: self.d_in,
            d_out: d_env,
        }
    }
}

/// Isometric map with a declared tensor factorization of its output space.
#[derive(Debug, Clone)]
pub struct Isometry {
    matrix: CMat,
    out_dims: Vec<usize>,
}

impl Isometry {
    pub fn new(matrix: CMat, out_dims: Vec<usize>) -> Result<Self> {
        let big: usize = out_dims.iter().product();
        if matrix.nrows() != big {
            return Err(Error::BadFactorization {
                dims: out_dims,
                dim: matrix.nrows(),
            });
        }
        if matrix.nrows() < matrix.ncols() {
            return Err(Error::Invalid("isometry must not shrink the space".into()));
        }
        let dev = mat::max_abs_entry(&(matrix.adjoint() * &matrix - mat::identity(matrix.ncols())));
        if dev > ISOMETRY_TOL {
            return Err(Error::NotIsometry(dev));
        }
        Ok(Self { matrix, out_dims })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn d_in(&self) -> usize {
        self.matrix.ncols()
    }

    /// Conjugate a state: VρV†.
    pub fn conjugate(&self, m: &CMat) -> CMat {
        &self.matrix * m * self.matrix.adjoint()
    }

    /// The channel obtained by tracing out all factors except `keep_factor`.
    pub fn channel_to(&self, keep_factor: usize) -> Result<QuantumChannel> {
        let d_keep = self.out_dims[keep_factor];
        let traced_dim: usize = self
            .out_dims
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != keep_factor)
            .map(|(_, &d)| d)
            .product();
        // Kraus operators indexed by a basis of the traced factors
        let mut kraus = Vec::with_capacity(traced_dim);
        let st = {
            let mut s = vec![1usize; self.out_dims.len()];
            for f in (0..self.out_dims.len() - 1).rev() {
                s[f] = s[f + 1] * self.out_dims[f + 1];
            }
            s
        };
        let other: Vec<usize> = (0..self.out_dims.len())
            .filter(|&f| f != keep_factor)
            .collect();
        let mut idx = vec![0usize; other.len()];
        for _ in 0..traced_dim {
            let off: usize = idx.iter().zip(&other).map(|(&i, &f)| i * st[f]).sum();
            let mut k = CMat::zeros(d_keep, self.matrix.ncols());
            for a in 0..d_keep {
                let row = off + a * st[keep_factor];
                for b in 0..self.matrix.ncols() {
                    k[(a, b)] = self.matrix[(row, b)];
                }
            }
            kraus.push(k);
            let mut f = other.len();
            while f > 0 {
                f -= 1;
                idx[f] += 1;
                if idx[f] < self.out_dims[other[f]] {
                    break;
                }
                idx[f] = 0;
            }
        }
        QuantumChannel::new(kraus)
    }
}

/// Measurement operators M_a = (⟨a| ⊗ I_E)V of an isometry V: H_B → H_A ⊗ H_E
/// sliced along an orthonormal basis {|a⟩} of the first output factor.
/// Satisfies Σ_a M_a† M_a = I.
pub fn measurement_operators(v: &Isometry, out_basis: &[CVec]) -> Result<Vec<CMat>> {
    if v.out_dims.len() != 2 {
        return Err(Error::Invalid("expected a two-factor output".into()));
    }
    let (d_a, d_e) = (v.out_dims[0], v.out_dims[1]);
    if out_basis.len() != d_a {
        return Err(Error::DimensionMismatch(out_basis.len(), d_a));
    }
    let mut gram_dev = 0f64;
    for (i, u) in out_basis.iter().enumerate() {
        if u.len() != d_a {
            return Err(Error::DimensionMismatch(u.len(), d_a));
        }
        for (j, w) in out_basis.iter().enumerate() {
            let ov = (u.adjoint() * w)[(0, 0)];
            let expect = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((ov - mat::cr(expect)).norm());
        }
    }
    if gram_dev > 1e-9 {
        return Err(Error::BasisNotOrthonormal(gram_dev));
    }
    let d_in = v.d_in();
    let mut out = Vec::with_capacity(d_a);
    for a_vec in out_basis {
        let mut m = CMat::zeros(d_e, d_in);
        for e in 0..d_e {
            for b in 0..d_in {
                let mut acc = Complex64::default();
                for i in 0..d_a {
                    acc += a_vec[i].conj() * v.matrix[(i * d_e + e, b)];
                }
                m[(e, b)] = acc;
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Posterior reference map of an isometry V: H_B → H_A ⊗ H_E with respect to
/// a source ρ^B: the isometry W: H_{A_R} → H_{B_R} ⊗ H_E with
/// (W ⊗ I_A)|ψ_{ρ^A}⟩ = (I_{B_R} ⊗ V)|ψ_{ρ^B}⟩, where ρ^A = Tr_E{Vρ^BV†}.
///
/// Columns on the support of ρ^{A_R} are W|a⟩^{A_R} = (I ⊗ M_a)|ψ_ρ⟩/√λ_a;
/// off-support columns are completed by Gram–Schmidt in lexicographic basis
/// order (the map is non-unique there).
pub fn posterior_reference_map(v: &Isometry, source: &DensityOperator) -> Result<Isometry> {
    if v.out_dims.len() != 2 {
        return Err(Error::Invalid("expected a two-factor output".into()));
    }
    let (d_a, d_e) = (v.out_dims[0], v.out_dims[1]);
    let d_b = v.d_in();
    if source.dim() != d_b {
        return Err(Error::DimensionMismatch(source.dim(), d_b));
    }
    if d_e < d_a {
        return Err(Error::EnvironmentTooSmall(d_e, d_a));
    }
    let rho_a = mat::partial_trace(&v.conjugate(source.matrix()), &[d_a, d_e], &[0])?;
    let (vals, vecs) = state::eigh(&rho_a);
    let psi_b = state::canonical_purification(source);

    // reference-side eigenvectors are entrywise conjugates (Γ convention)
    let mut cols: Vec<CVec> = Vec::new();
    let mut ref_basis: Vec<CVec> = Vec::new();
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= SUPPORT_CUTOFF {
            continue;
        }
        let a_vec: CVec = vecs.column(k).into();
        let m_a = measurement_op_for(v, &a_vec);
        // (I_{B_R} ⊗ M_a)|ψ_ρ⟩ ∈ H_{B_R} ⊗ H_E
        let mut u = CVec::zeros(d_b * d_e);
        for i in 0..d_b {
            for e in 0..d_e {
                let mut acc = Complex64::default();
                for j in 0..d_b {
                    acc += m_a[(e, j)] * psi_b.vector()[i * d_b + j];
                }
                u[i * d_e + e] = acc;
            }
        }
        cols.push(u.unscale(lam.sqrt()));
        ref_basis.push(a_vec.map(|z| z.conj()));
    }
    if cols.is_empty() {
        return Err(Error::PosteriorConstruction(
            "output state has empty support".into(),
        ));
    }
    // W restricted to the support: Σ_a u_a ⟨a|^{A_R}
    let mut w = CMat::zeros(d_b * d_e, d_a);
    for (u, r) in cols.iter().zip(&ref_basis) {
        w += u * r.adjoint();
    }
    // complete off-support columns to a full isometry
    if cols.len() < d_a {
        let image = mat::complete_orthonormal(&cols, d_b * d_e);
        if image.len() < d_a {
            return Err(Error::PosteriorConstruction(
                "could not complete isometry columns".into(),
            ));
        }
        let kernel_basis = mat::complete_orthonormal(&ref_basis, d_a);
        let mut next = cols.len();
        for r in kernel_basis.iter().skip(cols.len()) {
            w += &image[next] * r.adjoint();
            next += 1;
        }
    }
    let iso = Isometry::new(w, vec![d_b, d_e])?;

    // verify the defining intertwining relation on the support
    let resid = intertwining_residual(&iso, v, source)?;
    if resid > 1e-9 {
        return Err(Error::PosteriorConstruction(format!(
            "intertwining residual {resid:.3e} beyond tolerance"
        )));
    }
    Ok(iso)
}

fn measurement_op_for(v: &Isometry, a_vec: &CVec) -> CMat {
    let (d_a, d_e) = (v.out_dims[0], v.out_dims[1]);
    let d_in = v.d_in();
    let mut m = CMat::zeros(d_e, d_in);
    for e in 0..d_e {
        for b in 0..d_in {
            let mut acc = Complex64::default();
            for i in 0..d_a {
                acc += a_vec[i].conj() * v.matrix[(i * d_e + e, b)];
            }
            m[(e, b)] = acc;
        }
    }
    m
}

/// ‖(W ⊗ I_A)|ψ_{ρ^A}⟩ − (I_{B_R} ⊗ V)|ψ_{ρ^B}⟩‖ with factors aligned to
/// (B_R, E, A) ordering.
pub fn intertwining_residual(w: &Isometry, v: &Isometry, source: &DensityOperator) -> Result<f64> {
    let (d_a, d_e) = (v.out_dims[0], v.out_dims[1]);
    let d_b = v.d_in();
    let rho_a_mat = mat::partial_trace(&v.conjugate(source.matrix()), &[d_a, d_e], &[0])?;
    let rho_a = DensityOperator::new(mat::hermitize(&rho_a_mat))?;
    let psi_a = state::canonical_purification(&rho_a); // A_R ⊗ A
    let psi_b = state::canonical_purification(source); // B_R ⊗ B

    // lhs = (W ⊗ I_A)|ψ_{ρ^A}⟩ ∈ (B_R ⊗ E) ⊗ A
    let w_ext = mat::tensor(w.matrix(), &mat::identity(d_a));
    let lhs = &w_ext * psi_a.vector();
    // rhs = (I_{B_R} ⊗ V)|ψ_{ρ^B}⟩ ∈ B_R ⊗ (A ⊗ E) → permute to (B_R, E, A)
    let v_ext = mat::tensor(&mat::identity(d_b), v.matrix());
    let rhs = &v_ext * psi_b.vector();
    let rhs = mat::permute_vector_factors(&rhs, &[d_b, d_a, d_e], &[0, 2, 1])?;
    Ok((lhs - rhs).norm())
}

/// Uhlmann isometry aligning two purifications of the same reduced state.
///
/// `reference_factor` selects which of the two tensor factors is rotated;
/// the other factor must carry identical reduced states (fidelity ≥ 1−1e-9).
/// Built from the SVD of the overlap matrix, with phases chosen so the
/// aligned overlap is real nonnegative. Returns U with
/// |⟨φ|(U ⊗ I)|ψ⟩| = √F(reduced states) within 1e-8.
pub fn uhlmann_isometry(
    psi: &PureState,
    phi: &PureState,
    reference_factor: usize,
) -> Result<Isometry> {
    if psi.subsystem_dims().len() != 2 || phi.subsystem_dims().len() != 2 {
        return Err(Error::Invalid(
            "uhlmann_isometry expects bipartite states".into(),
        ));
    }
    if reference_factor > 1 {
        return Err(Error::Invalid("reference_factor must be 0 or 1".into()));
    }
    let sys_factor = 1 - reference_factor;
    let red_psi = psi.reduce(&[sys_factor])?;
    let red_phi = phi.reduce(&[sys_factor])?;
    let f = state::fidelity(&red_psi, &red_phi)?;
    if f < 1.0 - 1e-9 {
        return Err(Error::PurificationMismatch(1.0 - f));
    }
    let r1 = psi.subsystem_dims()[reference_factor];
    let r2 = phi.subsystem_dims()[reference_factor];
    if r2 < r1 {
        return Err(Error::EnvironmentTooSmall(r2, r1));
    }
    let ds = psi.subsystem_dims()[sys_factor];
    if phi.subsystem_dims()[sys_factor] != ds {
        return Err(Error::DimensionMismatch(
            phi.subsystem_dims()[sys_factor],
            ds,
        ));
    }

    // reshape to (reference × system) matrices
    let to_matrix = |st: &PureState, dr: usize| -> CMat {
        let mut m = CMat::zeros(dr, ds);
        let dims = st.subsystem_dims();
        for r in 0..dr {
            for s in 0..ds {
                let lin = if reference_factor == 0 {
                    r * dims[1] + s
                } else {
                    s * dims[1] + r
                };
                m[(r, s)] = st.vector()[lin];
            }
        }
        m
    };
    let psi_m = to_matrix(psi, r1);
    let phi_m = to_matrix(phi, r2);

    // maximize |Tr(U · ΨΦ†)| over isometries U: r1 → r2
    let k = &psi_m * phi_m.adjoint(); // r1 × r2
    let svd = k.svd(true, true);
    let u_l = svd.u.as_ref().unwrap(); // r1 × min
    let v_t = svd.v_t.as_ref().unwrap(); // min × r2
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12).count();

    let mut p_cols: Vec<CVec> = (0..rank).map(|i| u_l.column(i).into()).collect();
    let mut q_cols: Vec<CVec> = (0..rank).map(|i| v_t.row(i).adjoint()).collect();
    p_cols = mat::complete_orthonormal(&p_cols, r1);
    q_cols = mat::complete_orthonormal(&q_cols, r2);
    let mut u = CMat::zeros(r2, r1);
    for (p, q) in p_cols.iter().zip(q_cols.iter()) {
        u += q * p.adjoint();
    }
    Isometry::new(u, vec![r2])
}

/// POVM: PSD elements summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<CMat>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<CMat>, labels: Option<Vec<String>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        let d = elements[0].nrows();
        let mut sum = CMat::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::InvalidPovm(format!("element {i} has wrong shape")));
            }
            let (vals, _) = state::eigh(e);
            if vals.first().copied().unwrap_or(0.0) < -KRAUS_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} is not PSD (min eigenvalue {:.3e})",
                    vals[0]
                )));
            }
            sum += e;
        }
        let dev = mat::max_abs_entry(&(sum - mat::identity(d)));
        if dev > KRAUS_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {dev:.3e}"
            )));
        }
        let labels = labels.unwrap_or_else(|| (0..elements.len()).map(|i| i.to_string()).collect());
        if labels.len() != elements.len() {
            return Err(Error::InvalidPovm("label count mismatch".into()));
        }
        Ok(Self { elements, labels })
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }
}

/// Naimark extension: a unitary U on H_A ⊗ H_{A'} (dim H_{A'} = #outcomes)
/// and orthogonal projectors Γ̄_x = U†(I ⊗ |x⟩⟨x|)U with
/// Tr{Γ̄_x (ρ ⊗ |0⟩⟨0|)} = Tr{Γ_x ρ}.
pub fn naimark_extension(povm: &Povm) -> Result<(CMat, Vec<CMat>)> {
    let d = povm.dim();
    let n = povm.outcomes();
    let big = d * n;
    // isometry Y|ψ⟩ = Σ_x √Γ_x|ψ⟩ ⊗ |x⟩, mapping |b⟩⊗|0⟩ ↦ Y|b⟩
    let roots: Vec<CMat> = povm.elements().iter().map(state::matrix_sqrt).collect();
    let mut first_cols: Vec<CVec> = Vec::with_capacity(d);
    for b in 0..d {
        let mut col = CVec::zeros(big);
        for (x, r) in roots.iter().enumerate() {
            for a in 0..d {
                col[a * n + x] = r[(a, b)];
            }
        }
        first_cols.push(col);
    }
    let basis = mat::complete_orthonormal(&first_cols, big);
    if basis.len() < big {
        return Err(Error::InvalidPovm(
            "could not complete Naimark unitary".into(),
        ));
    }
    // unitary columns ordered so that column (b, x'=0) = Y|b⟩
    let mut u = CMat::zeros(big, big);
    let mut extra = d;
    for b in 0..d {
        for x in 0..n {
            let col = b * n + x;
            let src = if x == 0 {
                &basis[b]
            } else {
                let s = &basis[extra];
                extra += 1;
                s
            };
            for r in 0..big {
                u[(r, col)] = src[r];
            }
        }
    }
    let dev = mat::max_abs_entry(&(u.adjoint() * &u - mat::identity(big)));
    if dev > 1e-9 {
        return Err(Error::NotIsometry(dev));
    }
    let mut projectors = Vec::with_capacity(n);
    for x in 0..n {
        let mut px = CMat::zeros(n, n);
        px[(x, x)] = mat::cr(1.0);
        let proj = u.adjoint() * mat::tensor(&mat::identity(d), &px) * &u;
        projectors.push(proj);
    }
    Ok((u, projectors))
}
