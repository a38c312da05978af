//! Dense complex matrix helpers: Kronecker products, partial traces, and the
//! real Hermitian coordinate system used by the rate solvers.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` throughout. Multi-partite
//! indices are row-major with factor 0 outermost, so `tensor(a, b)` places
//! `a`'s indices outermost.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(r: usize, cols: usize) -> CMat {
    CMat::zeros(r, cols)
}

/// Kronecker product with `a`'s indices outermost.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of a list, left to right.
pub fn tensor_all<'a>(ms: impl IntoIterator<Item = &'a CMat>) -> CMat {
    let mut out = CMat::from_element(1, 1, cr(1.0));
    for m in ms {
        out = out.kronecker(m);
    }
    out
}

pub fn tensor_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Computational basis column |i⟩ in dimension d.
pub fn basis_vec(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = cr(1.0);
    v
}

/// |i⟩⟨j| in dimension d.
pub fn basis_op(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = cr(1.0);
    m
}

/// Rank-one operator |u⟩⟨v|.
pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().sum()
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// (M + M†)/2.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Entrywise transpose (no conjugation), in the fixed computational basis.
pub fn transpose_entrywise(m: &CMat) -> CMat {
    m.transpose()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        s[f] = s[f + 1] * dims[f + 1];
    }
    s
}

/// Partial trace over the factors *not* listed in `keep`. Kept factors stay
/// in their original relative order.
pub fn partial_trace(op: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if op.nrows() != total || op.ncols() != total {
        return Err(Error::BadFactorization {
            dims: dims.to_vec(),
            dim: op.nrows(),
        });
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Invalid("keep index out of range".into()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();
    let st = strides(dims);
    let dk: usize = keep.iter().map(|&f| dims[f]).product();
    let dt: usize = traced.iter().map(|&f| dims[f]).product();

    // linear offsets contributed by each kept / traced multi-index
    let offsets = |factors: &[usize], count: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(count);
        let mut idx = vec![0usize; factors.len()];
        loop {
            out.push(idx.iter().zip(factors).map(|(&i, &f)| i * st[f]).sum());
            let mut f = factors.len();
            loop {
                if f == 0 {
                    return out;
                }
                f -= 1;
                idx[f] += 1;
                if idx[f] < dims[factors[f]] {
                    break;
                }
                idx[f] = 0;
            }
        }
    };
    let keep_off = offsets(&keep, dk);
    let tr_off = offsets(&traced, dt);

    let mut out = CMat::zeros(dk, dk);
    for (i, &oi) in keep_off.iter().enumerate() {
        for (j, &oj) in keep_off.iter().enumerate() {
            let mut acc = Complex64::default();
            for &ot in &tr_off {
                acc += op[(oi + ot, oj + ot)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reorder the tensor factors of a vector: `perm[k]` names the old factor
/// placed at new position `k`.
pub fn permute_vector_factors(v: &CVec, dims: &[usize], perm: &[usize]) -> Result<CVec> {
    let total: usize = dims.iter().product();
    if v.len() != total || perm.len() != dims.len() {
        return Err(Error::BadFactorization {
            dims: dims.to_vec(),
            dim: v.len(),
        });
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let st_new = strides(&new_dims);
    let mut out = CVec::zeros(total);
    let mut idx = vec![0usize; dims.len()];
    for lin_old in 0..total {
        let mut lin_new = 0;
        for (k, &p) in perm.iter().enumerate() {
            lin_new += idx[p] * st_new[k];
        }
        out[lin_new] = v[lin_old];
        let mut f = dims.len();
        while f > 0 {
            f -= 1;
            idx[f] += 1;
            if idx[f] < dims[f] {
                break;
            }
            idx[f] = 0;
        }
    }
    Ok(out)
}

/// Isometric embedding of Hermitian d×d matrices into R^{d²}:
/// diagonal first, then (re, im) of the upper triangle scaled by √2.
pub fn herm_to_coords(m: &CMat) -> Vec<f64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(m[(i, i)].re);
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            v.push(m[(i, j)].re * s);
            v.push(m[(i, j)].im * s);
        }
    }
    v
}

pub fn coords_to_herm(v: &[f64], d: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = cr(v[i]);
    }
    let s = std::f64::consts::SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = c(v[k] / s, v[k + 1] / s);
            k += 2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Gram–Schmidt completion: extend the columns of `cols` (assumed orthonormal)
/// to an orthonormal basis of C^d by sweeping computational basis vectors in
/// lexicographic order.
pub fn complete_orthonormal(cols: &[CVec], d: usize) -> Vec<CVec> {
    let mut basis: Vec<CVec> = cols.to_vec();
    let mut cand = 0usize;
    while basis.len() < d && cand < d {
        let mut v = basis_vec(d, cand);
        cand += 1;
        for b in &basis {
            let ov = b.adjoint() * &v;
            v -= b * ov[(0, 0)];
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.unscale(n));
        }
    }
    basis
}
