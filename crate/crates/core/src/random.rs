//! Seeded random instances: states, channels, isometries, and POVMs.
//! Used by the property tests, the acceptance suite, and Monte Carlo
//! baselines; all generators are deterministic given the RNG state.

use rand::Rng;

use crate::channel::{Povm, QuantumChannel};
use crate::mat::{self, CMat, CVec};
use crate::state::{self, DensityOperator};

/// Full-rank random density operator (Gaussian Wishart, normalized).
pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> DensityOperator {
    let g = CMat::from_fn(d, d, |_, _| {
        mat::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let mut m = &g * g.adjoint();
    // keep comfortably away from singular so "full-rank state" holds
    m += mat::identity(d).scale(1e-3);
    let tr = mat::trace(&m).re;
    DensityOperator::new(m.unscale(tr)).unwrap()
}

/// Haar-ish random unit vector.
pub fn random_pure<R: Rng>(rng: &mut R, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| {
        mat::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let n = v.norm();
    v.unscale(n)
}

/// Random isometry of shape (rows × cols) via Gram–Schmidt on Gaussian columns.
pub fn random_isometry<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    assert!(rows >= cols);
    let mut ortho: Vec<CVec> = Vec::with_capacity(cols);
    while ortho.len() < cols {
        let mut v = CVec::from_fn(rows, |_, _| {
            mat::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        for b in &ortho {
            let ov = (b.adjoint() * &v)[(0, 0)];
            v -= b * ov;
        }
        let n = v.norm();
        if n > 1e-6 {
            ortho.push(v.unscale(n));
        }
    }
    CMat::from_fn(rows, cols, |i, j| ortho[j][i])
}

/// Random unitary.
pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> CMat {
    random_isometry(rng, d, d)
}

/// Random CPTP map with `nk` Kraus operators, from a random Stinespring
/// isometry.
pub fn random_channel<R: Rng>(rng: &mut R, d_in: usize, d_out: usize, nk: usize) -> QuantumChannel {
    let v = random_isometry(rng, d_out * nk, d_in);
    let kraus: Vec<CMat> = (0..nk)
        .map(|k| CMat::from_fn(d_out, d_in, |a, b| v[(a * nk + k, b)]))
        .collect();
    QuantumChannel::new(kraus).unwrap()
}

/// Random POVM with `n` outcomes: Wishart parts conjugated by S^{-1/2}.
pub fn random_povm<R: Rng>(rng: &mut R, d: usize, n: usize) -> Povm {
    let gs: Vec<CMat> = (0..n)
        .map(|_| {
            let g = CMat::from_fn(d, d, |_, _| {
                mat::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            &g * g.adjoint() + mat::identity(d).scale(1e-6)
        })
        .collect();
    let total: CMat = gs.iter().fold(CMat::zeros(d, d), |acc, g| acc + g);
    let inv_sqrt = state::herm_fn(&total, |v| 1.0 / v.sqrt());
    let els: Vec<CMat> = gs
        .iter()
        .map(|g| mat::hermitize(&(&inv_sqrt * g * &inv_sqrt)))
        .collect();
    Povm::new(els, None).unwrap()
}

/// Random probability distribution over `n` letters.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Random row-stochastic matrix with `rows` rows over `cols` letters.
pub fn random_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| random_distribution(rng, cols)).collect()
}
