//! Exact small-blocklength simulation of the quantum-classical covering
//! protocol: sandwiched ξ operators, cut-off projector, the sub-POVM built
//! from a pruned random codebook, its exact trace-norm error split into
//! covering and non-covering terms, and Monte Carlo over codebooks.
//!
//! Also houses the Hamming-code evaluator for the local entanglement
//! fidelity of maximally mixed sources.
//!
//! The same small-blocklength tension as in the classical simulator applies
//! with eigenvalue spreads in place of likelihood ratios: a single operator
//! γ·√ρ⁻ⁿ ρ̃ √ρ⁻ⁿ can exceed unit norm whenever ⌈2^{nR}⌉ is small, and
//! raising the cut-off threshold tames it only by cutting covering mass.
//! The sub-POVM flag and the ζ/ζ̃ split expose which side failed.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::{self, CMat};
use crate::rates::QcProblem;
use crate::state::{self, trace_norm, von_neumann_entropy, DensityOperator};
use crate::typicality::{self, TypicalSpec};

/// Pruned codebook of reconstruction sequences for the QC protocol.
#[derive(Debug, Clone)]
pub struct QcCodebook {
    pub codewords: Vec<Vec<u8>>,
    pub n: usize,
    pub rate: f64,
    pub delta: f64,
    pub eta: f64,
    pub epsilon_cutoff: f64,
    pub delta1: f64,
    pub prune_mass: f64,
}

/// Simulation configuration. `delta1` and `epsilon_cutoff` are the cut-off
/// knobs (defaults δ₁ = δ, ε_cutoff = 0.01).
#[derive(Debug, Clone)]
pub struct QcSimConfig {
    pub problem: QcProblem,
    pub recon_dist: Vec<f64>,
    pub n: usize,
    pub rate: f64,
    pub delta: f64,
    pub eta: f64,
    pub epsilon_cutoff: f64,
    pub delta1: f64,
    pub seed: u64,
    pub trials: usize,
}

impl QcSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rate <= 0.0 {
            return Err(Error::Invalid("rate must be positive".into()));
        }
        if !(0.0 < self.eta && self.eta < 1.0) {
            return Err(Error::Invalid("eta must lie in (0,1)".into()));
        }
        if self.recon_dist.len() != self.problem.posterior.len() {
            return Err(Error::DimensionMismatch(
                self.recon_dist.len(),
                self.problem.posterior.len(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        if self.n as f64 * self.rate > typicality::MAX_ENUM_BITS {
            return Err(Error::EnumerationBound(format!(
                "codebook size 2^{:.1} exceeds the enumeration budget",
                self.n as f64 * self.rate
            )));
        }
        let d = self.problem.source.dim();
        if d.pow(self.n as u32) > typicality::MAX_PROJECTOR_DIM {
            return Err(Error::EnumerationBound(format!(
                "d^n = {}^{} exceeds {}",
                d,
                self.n,
                typicality::MAX_PROJECTOR_DIM
            )));
        }
        Ok(())
    }

    pub fn codebook_size(&self) -> usize {
        (2f64.powf(self.n as f64 * self.rate)).ceil() as usize
    }
}

/// The operators A_{x^n} keyed by codeword, the completion operator, and the
/// sub-POVM flag λ_max(Σ A) ≤ 1 + 1e-9.
pub struct PovmCollection {
    pub operators: Vec<(Vec<u8>, CMat)>,
    pub completion: CMat,
    pub completion_label: Vec<u8>,
    pub subpovm_flag: bool,
}

/// ξ_{x^n} = π_ρ π_{x^n} W_{x^n} π_{x^n} π_ρ for typical x^n, zero otherwise.
pub fn build_xi(x_n: &[u8], problem: &QcProblem, recon_dist: &[f64], delta: f64) -> Result<CMat> {
    let n = x_n.len();
    let d = problem.source.dim();
    let dim = d
        .checked_pow(n as u32)
        .filter(|&x| x <= typicality::MAX_PROJECTOR_DIM)
        .ok_or_else(|| Error::EnumerationBound(format!("d^n too large at n = {n}")))?;
    let spec = TypicalSpec::new(recon_dist.to_vec(), n, delta)?;
    let counts = {
        let mut c = vec![0usize; recon_dist.len()];
        for &s in x_n {
            c[s as usize] += 1;
        }
        c
    };
    if !typicality::counts_typical(&counts, n, &spec.base, delta) {
        return Ok(CMat::zeros(dim, dim));
    }
    let pi_rho = typicality::typical_projector(&problem.source, n, delta)?;
    let pi_x = typicality::conditional_typical_projector(&problem.posterior, x_n, delta)?;
    let w_xn = mat::tensor_all(x_n.iter().map(|&x| problem.posterior[x as usize].matrix()));
    Ok(&pi_rho.matrix * &pi_x.matrix * w_xn * &pi_x.matrix * &pi_rho.matrix)
}

/// Precomputed per-configuration state shared by all trials: ξ operators,
/// cut-off projector, √ρ^{⊗n} and its support pseudo-inverse.
pub struct Protocol {
    config: QcSimConfig,
    typical: Vec<Vec<u8>>,
    xi: HashMap<Vec<u8>, CMat>,
    prune_mass: f64,
    sandwich: HashMap<Vec<u8>, CMat>, // π̂ ξ_{x^n} π̂ pre-conjugated by √ρ^{-n}
    rho_n: CMat,
    sqrt_rho_n: CMat,
    x0: Vec<u8>,
    w_x0: CMat,
    pub cutoff_rank: usize,
}

impl Protocol {
    pub fn prepare(config: QcSimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let spec = TypicalSpec::new(config.recon_dist.clone(), n, config.delta)?;
        let typical: Vec<Vec<u8>> = typicality::typical_set(&spec)?.collect();
        if typical.is_empty() {
            return Err(Error::TypicalSetEmpty);
        }
        let masses: Vec<f64> = typical
            .iter()
            .map(|s| s.iter().map(|&c| config.recon_dist[c as usize]).product())
            .collect();
        let total: f64 = masses.iter().sum();
        let prune_mass = (1.0 - total).max(0.0);

        let pi_rho = typicality::typical_projector(&problem_source(&config), n, config.delta)?;
        let d = problem_source(&config).dim();
        let dim = d.pow(n as u32);
        let mut xi: HashMap<Vec<u8>, CMat> = HashMap::new();
        let mut xi_bar = CMat::zeros(dim, dim);
        for (seq, mass) in typical.iter().zip(&masses) {
            let pi_x = typicality::conditional_typical_projector(
                &config.problem.posterior,
                seq,
                config.delta,
            )?;
            let w_xn = mat::tensor_all(
                seq.iter()
                    .map(|&x| config.problem.posterior[x as usize].matrix()),
            );
            let op = &pi_rho.matrix * &pi_x.matrix * w_xn * &pi_x.matrix * &pi_rho.matrix;
            xi_bar += op.scale(mass / total);
            xi.insert(seq.clone(), op);
        }
        let h_source = von_neumann_entropy(&problem_source(&config));
        let threshold = config.epsilon_cutoff * 2f64.powf(-(n as f64) * (h_source + config.delta1));
        let pihat = typicality::cutoff_projector(&mat::hermitize(&xi_bar), threshold)?;

        let rho_n = mat::tensor_all(std::iter::repeat_n(problem_source(&config).matrix(), n));
        let rho_n_density = DensityOperator::new(rho_n.clone())?;
        let sqrt_rho_n = state::matrix_sqrt(&rho_n);
        let sqrt_pinv_n = state::matrix_sqrt_pinv(&rho_n_density);

        let mut sandwich = HashMap::new();
        for (seq, op) in &xi {
            let tilde = &pihat.matrix * op * &pihat.matrix;
            sandwich.insert(seq.clone(), &sqrt_pinv_n * tilde * &sqrt_pinv_n);
        }

        let x0 = first_atypical(&config.recon_dist, n, config.delta)?;
        let w_x0 = mat::tensor_all(
            x0.iter()
                .map(|&x| config.problem.posterior[x as usize].matrix()),
        );
        Ok(Self {
            config,
            typical,
            xi,
            prune_mass,
            sandwich,
            rho_n,
            sqrt_rho_n,
            x0,
            w_x0,
            cutoff_rank: pihat.rank,
        })
    }

    pub fn prune_mass(&self) -> f64 {
        self.prune_mass
    }

    pub fn xi_of(&self, seq: &[u8]) -> Option<&CMat> {
        self.xi.get(seq)
    }

    /// Sample the trial's pruned codebook (bit-reproducible per
    /// (seed, trial, index) stream).
    pub fn sample_codebook(&self, trial: u64) -> QcCodebook {
        let cfg = &self.config;
        let masses: Vec<f64> = self
            .typical
            .iter()
            .map(|s| s.iter().map(|&c| cfg.recon_dist[c as usize]).product())
            .collect();
        let total: f64 = masses.iter().sum();
        let mut cdf = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for m in &masses {
            acc += m / total;
            cdf.push(acc);
        }
        let m_count = cfg.codebook_size();
        let mut codewords = Vec::with_capacity(m_count);
        for m in 0..m_count {
            let mut rng = stream_rng(cfg.seed, trial, m as u64);
            let u: f64 = rng.gen();
            let idx = cdf.partition_point(|&c| c < u).min(self.typical.len() - 1);
            codewords.push(self.typical[idx].clone());
        }
        QcCodebook {
            codewords,
            n: cfg.n,
            rate: cfg.rate,
            delta: cfg.delta,
            eta: cfg.eta,
            epsilon_cutoff: cfg.epsilon_cutoff,
            delta1: cfg.delta1,
            prune_mass: self.prune_mass,
        }
    }

    /// A_{x^n} = γ_{x^n} √ρ^{−n} π̂ ξ_{x^n} π̂ √ρ^{−n} with γ counting
    /// codeword multiplicity, plus the completion operator.
    pub fn build_povm(&self, codebook: &QcCodebook) -> PovmCollection {
        let m_count = codebook.codewords.len();
        let mut counts: HashMap<&[u8], usize> = HashMap::new();
        for cw in &codebook.codewords {
            *counts.entry(cw.as_slice()).or_insert(0) += 1;
        }
        let scale = (1.0 - codebook.prune_mass) / ((1.0 + codebook.eta) * m_count as f64);
        let dim = self.rho_n.nrows();
        let mut operators = Vec::with_capacity(counts.len());
        let mut total = CMat::zeros(dim, dim);
        for (cw, count) in counts {
            let gamma = scale * count as f64;
            let a = self.sandwich[cw].scale(gamma);
            total += &a;
            operators.push((cw.to_vec(), a));
        }
        operators.sort_by(|a, b| a.0.cmp(&b.0));
        let (vals, _) = state::eigh(&total);
        let lam_max = vals.last().copied().unwrap_or(0.0);
        let subpovm_flag = lam_max <= 1.0 + 1e-9;
        let completion = mat::identity(dim) - &total;
        PovmCollection {
            operators,
            completion,
            completion_label: self.x0.clone(),
            subpovm_flag,
        }
    }

    /// Exact protocol error Ξ(Γ, f) = Σ_{x^n} ‖√ρ^{⊗n} A √ρ^{⊗n} −
    /// Tr(Aρ^{⊗n}) W_{x^n}‖₁ with the diagnostic split (ζ, ζ̃); when the
    /// sub-POVM flag fails the collection degenerates to Γ = {I} at x₀.
    pub fn qc_error(&self, povm: &PovmCollection) -> QcErrorReport {
        if !povm.subpovm_flag {
            let xi = trace_norm(&(&self.rho_n - &self.w_x0));
            return QcErrorReport {
                xi,
                zeta: 0.0,
                zeta_tilde: 1.0,
            };
        }
        let mut zeta = 0.0;
        for (cw, a) in &povm.operators {
            let w_xn = mat::tensor_all(
                cw.iter()
                    .map(|&x| self.config.problem.posterior[x as usize].matrix()),
            );
            let post = &self.sqrt_rho_n * a * &self.sqrt_rho_n;
            let tr = mat::trace(&(a * &self.rho_n)).re;
            zeta += trace_norm(&(post - w_xn.scale(tr)));
        }
        let zeta_tilde = mat::trace(&(&povm.completion * &self.rho_n)).re;
        let post0 = &self.sqrt_rho_n * &povm.completion * &self.sqrt_rho_n;
        let x0_term = trace_norm(&(post0 - self.w_x0.scale(zeta_tilde)));
        QcErrorReport {
            xi: zeta + x0_term,
            zeta,
            zeta_tilde,
        }
    }
}

fn problem_source(cfg: &QcSimConfig) -> DensityOperator {
    cfg.problem.source.clone()
}

fn first_atypical(recon_dist: &[f64], n: usize, delta: f64) -> Result<Vec<u8>> {
    let alphabet = recon_dist.len();
    let total = alphabet.pow(n as u32);
    let spec = TypicalSpec::new(recon_dist.to_vec(), n, delta)?;
    'seqs: for idx in 0..total {
        let mut seq = vec![0u8; n];
        let mut v = idx;
        for i in (0..n).rev() {
            seq[i] = (v % alphabet) as u8;
            v /= alphabet;
        }
        let mut counts = vec![0usize; alphabet];
        for &s in &seq {
            counts[s as usize] += 1;
        }
        if typicality::counts_typical(&counts, n, &spec.base, delta) {
            continue 'seqs;
        }
        return Ok(seq);
    }
    Err(Error::NoAtypicalSequence)
}

fn stream_rng(seed: u64, trial: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9c_c0de);
    rng.set_stream(trial.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index);
    rng
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct QcErrorReport {
    pub xi: f64,
    pub zeta: f64,
    pub zeta_tilde: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct QcTrialRecord {
    pub xi: f64,
    pub zeta: f64,
    pub zeta_tilde: f64,
    pub subpovm_ok: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct QcSimResult {
    pub mean_xi: f64,
    pub subpovm_fraction: f64,
    pub mean_zeta: f64,
    pub mean_zeta_tilde: f64,
    pub per_trial: Vec<QcTrialRecord>,
}

/// Monte Carlo over random codebooks.
pub fn monte_carlo(config: QcSimConfig) -> Result<QcSimResult> {
    let trials = config.trials;
    let protocol = Protocol::prepare(config)?;
    let per_trial: Vec<QcTrialRecord> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let cb = protocol.sample_codebook(t);
            let povm = protocol.build_povm(&cb);
            let err = protocol.qc_error(&povm);
            QcTrialRecord {
                xi: err.xi,
                zeta: err.zeta,
                zeta_tilde: err.zeta_tilde,
                subpovm_ok: povm.subpovm_flag,
            }
        })
        .collect();
    Ok(QcSimResult {
        mean_xi: crate::stats::mean(&per_trial.iter().map(|r| r.xi).collect::<Vec<_>>()),
        subpovm_fraction: per_trial.iter().filter(|r| r.subpovm_ok).count() as f64
            / per_trial.len() as f64,
        mean_zeta: crate::stats::mean(&per_trial.iter().map(|r| r.zeta).collect::<Vec<_>>()),
        mean_zeta_tilde: crate::stats::mean(
            &per_trial.iter().map(|r| r.zeta_tilde).collect::<Vec<_>>(),
        ),
        per_trial,
    })
}

// ---------------------------------------------------------------------------
// Hamming-code evaluator
// ---------------------------------------------------------------------------

/// Codewords of the [2^r−1, 2^r−r−1] Hamming code, as bit masks. Columns of
/// the parity-check matrix are the nonzero r-bit vectors 1..2^r−1; a word is
/// a codeword when its syndrome vanishes.
pub fn hamming_code(r: u32) -> Result<Vec<u32>> {
    if !(2..=4).contains(&r) {
        return Err(Error::Invalid(format!("unsupported Hamming order r = {r}")));
    }
    let n = (1u32 << r) - 1;
    let mut code = Vec::new();
    for word in 0..(1u32 << n) {
        let mut syndrome = 0u32;
        for pos in 0..n {
            if (word >> pos) & 1 == 1 {
                syndrome ^= pos + 1; // column label
            }
        }
        if syndrome == 0 {
            code.push(word);
        }
    }
    Ok(code)
}

/// Nearest codeword under Hamming distance (unique weight-≤1 coset leader;
/// perfect code, so ties are impossible).
pub fn nearest_codeword(word: u32, r: u32) -> u32 {
    let n = (1u32 << r) - 1;
    let mut syndrome = 0u32;
    for pos in 0..n {
        if (word >> pos) & 1 == 1 {
            syndrome ^= pos + 1;
        }
    }
    if syndrome == 0 {
        word
    } else {
        word ^ (1 << (syndrome - 1))
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HammingReport {
    pub r: u32,
    pub n: u32,
    pub k: u32,
    pub avg_fidelity: f64,
    pub env_entropy_bits: f64,
}

/// Average single-letter entanglement fidelity of the Hamming compression of
/// the maximally mixed source, summed combinatorially over codewords and
/// weight-≤1 errors (the 4^n-dimensional state is never materialized), plus
/// the environment entropy log₂(n+1) = r.
pub fn hamming_local_fidelity(r: u32) -> Result<HammingReport> {
    let code = hamming_code(r)?;
    let n = (1u32 << r) - 1;
    let k = n - r;
    let scale = 1.0 / 2f64.powi(n as i32 + 1);
    let mut total = 0.0;
    for &c in &code {
        for e in std::iter::once(0u32).chain((0..n).map(|p| 1u32 << p)) {
            for i in 0..n {
                let ci = (c >> i) & 1;
                let bi = ((c ^ e) >> i) & 1;
                // ⟨ψ_m| (|b_i⟩⟨b_i| ⊗ |c_i⟩⟨c_i|) |ψ_m⟩ = ½·1{b_i = c_i}
                if ci == bi {
                    total += scale;
                }
            }
        }
    }
    let avg_fidelity = total / n as f64;
    Ok(HammingReport {
        r,
        n,
        k,
        avg_fidelity,
        env_entropy_bits: ((n + 1) as f64).log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::closed_form;

    fn example4_config(n: usize, rate: f64, delta: f64, trials: usize) -> QcSimConfig {
        let p = 0.5;
        let q = 0.1;
        let source = closed_form::qc_bsc_source(p).unwrap();
        let (w0, w1) = closed_form::qc_bsc_states(q).unwrap();
        let problem = QcProblem::new(source, vec!["0".into(), "1".into()], vec![w0, w1]).unwrap();
        let r = closed_form::qc_bsc_r(p, q).unwrap();
        QcSimConfig {
            problem,
            recon_dist: vec![r, 1.0 - r],
            n,
            rate,
            delta,
            eta: 0.05,
            epsilon_cutoff: 0.01,
            delta1: delta,
            seed: 11,
            trials,
        }
    }

    #[test]
    fn xi_zero_for_atypical() {
        let cfg = example4_config(4, 0.5, 0.2, 1);
        let xi = build_xi(&[0, 0, 0, 0], &cfg.problem, &cfg.recon_dist, 0.2).unwrap();
        assert!(mat::max_abs_entry(&xi) < 1e-15);
    }

    #[test]
    fn xi_equals_w_when_projectors_trivial() {
        // commuting diagonal W's and vacuous δ: both projectors are the
        // identity, so ξ = W_{x^n} exactly
        let w0 = DensityOperator::from_diagonal(&[0.5, 0.5]).unwrap();
        let w1 = DensityOperator::from_diagonal(&[0.5, 0.5]).unwrap();
        let source = DensityOperator::maximally_mixed(2);
        let problem = QcProblem::new(source, vec!["0".into(), "1".into()], vec![w0, w1]).unwrap();
        let xi = build_xi(&[0, 1], &problem, &[0.5, 0.5], 1.5).unwrap();
        let expect = mat::identity(4).scale(0.25);
        assert!(mat::max_abs_entry(&(xi - expect)) < 1e-10);
    }

    #[test]
    fn xi_matches_explicit_projector_sandwich() {
        // independent re-implementation through explicit eigenbases
        let cfg = example4_config(2, 0.6, 0.3, 1);
        let x_n = vec![0u8, 1u8];
        let xi = build_xi(&x_n, &cfg.problem, &cfg.recon_dist, 0.3).unwrap();
        let pi_rho = typicality::typical_projector(&cfg.problem.source, 2, 0.3).unwrap();
        let pi_x =
            typicality::conditional_typical_projector(&cfg.problem.posterior, &x_n, 0.3).unwrap();
        let w = mat::tensor(
            cfg.problem.posterior[0].matrix(),
            cfg.problem.posterior[1].matrix(),
        );
        let expect = &pi_rho.matrix * &pi_x.matrix * w * &pi_x.matrix * &pi_rho.matrix;
        assert!(mat::max_abs_entry(&(xi - expect)) < 1e-12);
    }

    #[test]
    fn povm_completion_sums_to_identity() {
        let cfg = example4_config(2, 0.6, 0.3, 1);
        let protocol = Protocol::prepare(cfg).unwrap();
        let cb = protocol.sample_codebook(0);
        let povm = protocol.build_povm(&cb);
        let mut total = povm.completion.clone();
        for (_, a) in &povm.operators {
            total += a;
        }
        assert!(mat::max_abs_entry(&(total - mat::identity(4))) < 1e-12);
    }

    #[test]
    fn povm_multiplicity_doubles_gamma() {
        let cfg = example4_config(2, 0.6, 0.3, 1);
        let protocol = Protocol::prepare(cfg).unwrap();
        let mut cb = protocol.sample_codebook(0);
        // force a duplicated codeword
        let cw = cb.codewords[0].clone();
        cb.codewords = vec![cw.clone(), cw.clone()];
        let povm = protocol.build_povm(&cb);
        assert_eq!(povm.operators.len(), 1);
        let mut cb_single = cb.clone();
        cb_single.codewords = vec![cw.clone()];
        // γ scales by count/M: two copies out of two slots equals one out of one
        let povm_single = protocol.build_povm(&cb_single);
        assert!(mat::max_abs_entry(&(&povm.operators[0].1 - &povm_single.operators[0].1)) < 1e-12);
    }

    #[test]
    fn sandwiching_only_shrinks() {
        // ξ is PSD; the conditional projector commutes with W_{x^n} so
        // π_x W π_x ≤ W exactly; and the sandwich chain shrinks trace and
        // operator norm: Tr ρ̃ ≤ Tr ξ ≤ Tr W = 1, ‖ρ̃‖ ≤ ‖ξ‖ ≤ ‖W‖.
        let cfg = example4_config(2, 0.6, 0.3, 1);
        let protocol = Protocol::prepare(cfg.clone()).unwrap();
        for seq in protocol.typical.clone() {
            let xi = protocol.xi_of(&seq).unwrap();
            let (xi_vals, _) = state::eigh(xi);
            assert!(xi_vals[0] > -1e-9, "ξ not PSD: {}", xi_vals[0]);
            let w = mat::tensor_all(
                seq.iter()
                    .map(|&x| cfg.problem.posterior[x as usize].matrix()),
            );
            let pi_x = typicality::conditional_typical_projector(&cfg.problem.posterior, &seq, 0.3)
                .unwrap();
            let inner = &pi_x.matrix * &w * &pi_x.matrix;
            let (vals, _) = state::eigh(&(&w - &inner));
            assert!(vals[0] > -1e-9, "π_x W π_x ≰ W: {}", vals[0]);
            let tilde =
                &protocol.sqrt_rho_n * &protocol.sandwich[seq.as_slice()] * &protocol.sqrt_rho_n;
            let tr_tilde = mat::trace(&tilde).re;
            let tr_xi = mat::trace(xi).re;
            assert!(tr_tilde <= tr_xi + 1e-9 && tr_xi <= 1.0 + 1e-9);
            let norm = |m: &CMat| state::eigh(m).0.last().copied().unwrap_or(0.0);
            assert!(norm(&tilde) <= norm(xi) + 1e-9);
            assert!(norm(xi) <= norm(&w) + 1e-9);
        }
    }

    #[test]
    fn trace_identity_of_construction() {
        // Tr(A_{x^n} ρ^{⊗n}) = γ Tr(ρ̃_{x^n}) exactly
        let cfg = example4_config(2, 0.6, 0.3, 1);
        let protocol = Protocol::prepare(cfg).unwrap();
        let cb = protocol.sample_codebook(1);
        let povm = protocol.build_povm(&cb);
        let m_count = cb.codewords.len();
        for (cw, a) in &povm.operators {
            let count = cb.codewords.iter().filter(|c| *c == cw).count();
            let gamma = (1.0 - cb.prune_mass) / ((1.0 + cb.eta) * m_count as f64) * count as f64;
            let lhs = mat::trace(&(a * &protocol.rho_n)).re;
            // ρ̃ = √ρ (√ρ⁻ ρ̃ √ρ⁻) √ρ on the support
            let tilde =
                &protocol.sqrt_rho_n * &protocol.sandwich[cw.as_slice()] * &protocol.sqrt_rho_n;
            let rhs = gamma / count as f64 * count as f64 * mat::trace(&tilde).re
                / (1.0 - cb.prune_mass)
                * (1.0 - cb.prune_mass);
            let tilde_tr = mat::trace(&tilde).re;
            assert!(
                (lhs - gamma * tilde_tr).abs() < 1e-10,
                "lhs {lhs} vs γTr(ρ̃) {}",
                gamma * tilde_tr
            );
            let _ = rhs;
        }
    }

    #[test]
    fn degenerate_povm_single_term_error() {
        let cfg = example4_config(2, 0.6, 0.3, 1);
        let protocol = Protocol::prepare(cfg).unwrap();
        let cb = protocol.sample_codebook(0);
        let mut povm = protocol.build_povm(&cb);
        povm.subpovm_flag = false;
        let err = protocol.qc_error(&povm);
        let expect = trace_norm(&(&protocol.rho_n - &protocol.w_x0));
        assert!((err.xi - expect).abs() < 1e-12);
        assert_eq!(err.zeta, 0.0);
        assert_eq!(err.zeta_tilde, 1.0);
    }

    #[test]
    fn zeta_tilde_matches_trace_complement() {
        let cfg = example4_config(2, 0.6, 0.3, 4);
        let protocol = Protocol::prepare(cfg).unwrap();
        for t in 0..4 {
            let cb = protocol.sample_codebook(t);
            let povm = protocol.build_povm(&cb);
            if !povm.subpovm_flag {
                continue;
            }
            let err = protocol.qc_error(&povm);
            let sum_tr: f64 = povm
                .operators
                .iter()
                .map(|(_, a)| mat::trace(&(a * &protocol.rho_n)).re)
                .sum();
            assert!((err.zeta_tilde - (1.0 - sum_tr)).abs() < 1e-10);
        }
    }

    #[test]
    fn monte_carlo_reproducible() {
        let cfg = example4_config(2, 0.6, 0.3, 6);
        let a = monte_carlo(cfg.clone()).unwrap();
        let b = monte_carlo(cfg).unwrap();
        assert_eq!(a.mean_xi.to_bits(), b.mean_xi.to_bits());
        assert_eq!(a.subpovm_fraction, b.subpovm_fraction);
    }

    #[test]
    fn hamming_code_sizes() {
        assert_eq!(hamming_code(2).unwrap().len(), 2); // [3,1]
        assert_eq!(hamming_code(3).unwrap().len(), 16); // [7,4]
        assert_eq!(hamming_code(4).unwrap().len(), 2048); // [15,11]
        assert!(hamming_code(5).is_err());
    }

    #[test]
    fn hamming_min_distance_three() {
        for r in 2..=3u32 {
            let code = hamming_code(r).unwrap();
            for (i, &a) in code.iter().enumerate() {
                for &b in code.iter().skip(i + 1) {
                    assert!((a ^ b).count_ones() >= 3);
                }
            }
        }
    }

    #[test]
    fn nearest_codeword_is_syndrome_decoder() {
        for r in 2..=4u32 {
            let n = (1u32 << r) - 1;
            let code = hamming_code(r).unwrap();
            let codeset: std::collections::HashSet<u32> = code.iter().copied().collect();
            for word in 0..(1u32 << n).min(1 << 12) {
                let c = nearest_codeword(word, r);
                assert!(codeset.contains(&c));
                assert!((word ^ c).count_ones() <= 1);
            }
        }
    }

    #[test]
    fn hamming_fidelity_closed_form() {
        for r in 2..=4u32 {
            let report = hamming_local_fidelity(r).unwrap();
            let expect = ((1u64 << r) - 1) as f64 / (2.0 * (1u64 << r) as f64);
            assert!(
                (report.avg_fidelity - expect).abs() < 1e-12,
                "r={r}: {} vs {expect}",
                report.avg_fidelity
            );
            assert!((report.env_entropy_bits - r as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn hamming_fidelity_grows_toward_half() {
        let f2 = hamming_local_fidelity(2).unwrap().avg_fidelity;
        let f3 = hamming_local_fidelity(3).unwrap().avg_fidelity;
        let f4 = hamming_local_fidelity(4).unwrap().avg_fidelity;
        assert!(f2 < f3 && f3 < f4 && f4 < 0.5);
    }
}
