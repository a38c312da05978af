//! Minimization of coherent information over the feasible slice
//! {ρ ∈ D(H_{A_R}) : N_W(ρ) = ρ^{B_R}}.
//!
//! On the feasible set S(N_W(ρ)) is pinned, so minimizing I_c is maximizing
//! the concave environment entropy S(N_W^c(ρ)) over a convex set. The set is
//! the intersection of an affine slice (real Hermitian coordinates) and the
//! PSD cone; projections onto it alternate a least-squares affine projection
//! with eigenvalue clipping, Dykstra-style. The outer loop is projected
//! supergradient ascent with an adaptive step, 5 restarts perturbed along
//! nullspace directions (scale 1e-2), iteration cap 10 000, relative-change
//! stop 1e-9.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::mat::{self, CMat};
use crate::state::{self, DensityOperator};

pub const ITER_CAP: usize = 10_000;
pub const REL_STOP: f64 = 1e-9;
pub const RESTARTS: usize = 5;
pub const NULLSPACE_PERTURBATION: f64 = 1e-2;
/// Constraint residual separating "empty feasible set" from solver noise.
pub const INFEAS_THRESHOLD: f64 = 1e-7;

/// The affine slice N_W(ρ) = σ, Tr ρ = 1 in real Hermitian coordinates.
pub struct FeasibleSlice {
    d: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    pinv: DMatrix<f64>,
    nullspace: Vec<DVector<f64>>,
}

impl FeasibleSlice {
    pub fn new(chan: &QuantumChannel, target: &CMat) -> Result<Self> {
        let d = chan.d_in();
        let n = d * d;
        let d_out = chan.d_out();
        if target.nrows() != d_out {
            return Err(Error::DimensionMismatch(target.nrows(), d_out));
        }
        let rows = d_out * d_out + 1;
        let mut a = DMatrix::<f64>::zeros(rows, n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let basis = mat::coords_to_herm(&e, d);
            let img = chan.apply_matrix(&basis)?;
            let col = mat::herm_to_coords(&img);
            for (r, v) in col.iter().enumerate() {
                a[(r, k)] = *v;
            }
            a[(rows - 1, k)] = mat::herm_to_coords(&mat::identity(d))[k];
        }
        let mut b = DVector::<f64>::zeros(rows);
        for (r, v) in mat::herm_to_coords(&mat::hermitize(target))
            .iter()
            .enumerate()
        {
            b[r] = *v;
        }
        b[rows - 1] = 1.0;
        let svd = a.clone().svd(true, true);
        let pinv = svd
            .clone()
            .pseudo_inverse(1e-11)
            .map_err(|e| Error::Invalid(format!("pseudo-inverse failed: {e}")))?;
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9).count();
        let v_t = svd.v_t.as_ref().unwrap();
        let nullspace: Vec<DVector<f64>> = (rank..v_t.nrows())
            .map(|i| v_t.row(i).transpose())
            .collect();
        Ok(Self {
            d,
            a,
            b,
            pinv,
            nullspace,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn nullspace(&self) -> &[DVector<f64>] {
        &self.nullspace
    }

    pub fn affine_residual(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).norm()
    }

    pub fn project_affine(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.pinv * (&self.a * x - &self.b)
    }

    pub fn least_norm_point(&self) -> DVector<f64> {
        &self.pinv * &self.b
    }

    pub fn project_psd(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = mat::coords_to_herm(x.as_slice(), self.d);
        let clipped = state::herm_fn(&m, |v| v.max(0.0));
        DVector::from_vec(mat::herm_to_coords(&clipped))
    }

    /// Dykstra alternation between the affine slice and the PSD cone.
    pub fn project_feasible(&self, x0: &DVector<f64>, iters: usize) -> (DVector<f64>, f64) {
        let mut x = x0.clone();
        let mut p = DVector::<f64>::zeros(x.len());
        let mut q = DVector::<f64>::zeros(x.len());
        let mut resid = f64::INFINITY;
        for _ in 0..iters {
            let y = self.project_affine(&(&x + &p));
            p = &x + &p - &y;
            let z = self.project_psd(&(&y + &q));
            q = &y + &q - &z;
            let step = (&z - &x).norm();
            x = z;
            resid = self.residual(&x);
            if step < 1e-13 && resid < 1e-12 {
                break;
            }
        }
        (x, resid)
    }

    /// Total constraint violation: affine residual plus PSD deficit.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        let m = mat::coords_to_herm(x.as_slice(), self.d);
        let (vals, _) = state::eigh(&m);
        let neg: f64 = vals.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
        self.affine_residual(x) + neg
    }

    pub fn to_density(&self, x: &DVector<f64>) -> Result<DensityOperator> {
        let m = mat::coords_to_herm(x.as_slice(), self.d);
        let cleaned = state::herm_fn(&m, |v| v.max(0.0));
        let tr = mat::trace(&cleaned).re;
        DensityOperator::new(cleaned.unscale(tr))
    }
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub restarts: usize,
    pub residual: f64,
    pub converged: bool,
    pub boundary_stall: bool,
    pub path: Vec<String>,
}

pub struct AscentOutcome {
    pub argmax: DensityOperator,
    pub objective: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Maximize the concave `objective` over the feasible slice by projected
/// supergradient ascent.
pub fn maximize_concave(
    slice: &FeasibleSlice,
    x_feasible: &DVector<f64>,
    objective: &dyn Fn(&DVector<f64>) -> f64,
    gradient: &dyn Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<AscentOutcome> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut diag = SolverDiagnostics::default();
    let mut best_x = x_feasible.clone();
    let mut best_f = objective(&best_x);
    let budget_per_restart = ITER_CAP / RESTARTS;

    for restart in 0..RESTARTS {
        diag.restarts = restart + 1;
        let mut x = if restart == 0 {
            x_feasible.clone()
        } else if slice.nullspace().is_empty() {
            break; // singleton slice: nothing to explore
        } else {
            let mut pert = DVector::<f64>::zeros(x_feasible.len());
            for dir in slice.nullspace() {
                pert += dir * ((rng.gen::<f64>() - 0.5) * 2.0 * NULLSPACE_PERTURBATION);
            }
            let (p, _) = slice.project_feasible(&(x_feasible + pert), 600);
            p
        };
        let mut f = objective(&x);
        let mut alpha = 0.5f64;
        for it in 0..budget_per_restart {
            diag.iterations += 1;
            let g = gradient(&x);
            let gn = g.norm();
            if gn < 1e-14 {
                break;
            }
            let (cand, _) = slice.project_feasible(&(&x + g * (alpha / gn)), 400);
            let fc = objective(&cand);
            let rel = (fc - f).abs() / f.abs().max(1.0);
            if fc > f {
                let moved = (&cand - &x).norm();
                x = cand;
                f = fc;
                alpha = (alpha * 1.4).min(4.0);
                if rel < REL_STOP && moved < 1e-10 {
                    break;
                }
            } else {
                alpha *= 0.5;
                if alpha < 1e-13 {
                    break;
                }
            }
            if it + 1 == budget_per_restart {
                diag.path
                    .push(format!("restart {restart}: iteration budget exhausted"));
            }
        }
        if f > best_f {
            best_f = f;
            best_x = x;
        }
    }
    diag.residual = slice.residual(&best_x);
    diag.converged = diag.residual < INFEAS_THRESHOLD;
    // boundary diagnostics: smallest eigenvalue of the argmax near zero
    let rho = slice.to_density(&best_x)?;
    let (vals, _) = rho.eigen();
    diag.boundary_stall = vals.first().copied().unwrap_or(0.0) < 1e-7;
    Ok(AscentOutcome {
        argmax: rho,
        objective: best_f,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_flip_slice_is_singleton() {
        let ch = QuantumChannel::bit_flip(0.2).unwrap();
        let target = mat::identity(2).scale(0.5);
        let slice = FeasibleSlice::new(&ch, &target).unwrap();
        assert!(slice.nullspace().is_empty());
        let (x, resid) = slice.project_feasible(&slice.least_norm_point(), 2000);
        assert!(resid < 1e-10);
        let rho = slice.to_density(&x).unwrap();
        assert!(mat::max_abs_entry(&(rho.matrix() - &target)) < 1e-9);
    }

    #[test]
    fn infeasible_target_detected() {
        // bit-flip output is always a mixture: a pure target is unreachable
        let ch = QuantumChannel::bit_flip(0.3).unwrap();
        let target = mat::basis_op(2, 0, 0);
        let slice = FeasibleSlice::new(&ch, &target).unwrap();
        let (_, resid) = slice.project_feasible(&slice.least_norm_point(), 4000);
        assert!(resid > INFEAS_THRESHOLD, "residual {resid}");
    }
}
