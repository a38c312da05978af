//! Exact finite-blocklength simulation of the classical likelihood-encoder
//! protocol: pruned random codebooks, the likelihood encoder row by row, the
//! system-induced joint distribution, its total-variation error against the
//! n-product posterior approximation, and Monte Carlo over codebooks.
//!
//! Codeword sampling uses counter-based RNG streams keyed by
//! (seed, trial, codeword index) so codebooks are bit-reproducible and
//! trials parallelize.
//!
//! The (δ, η, n) interplay is sharp at enumerable blocklengths: the encoder
//! weights range over a factor ~2^{cnδ} across the conditional-typical
//! shell, so the sub-PMF event needs 2^{n(R−I)} to dominate that range,
//! while coverage of the typical set needs δ ≳ 1/√n. Narrow shells drive
//! the m = 0 mass toward 1 and the total-variation error with it; wide
//! shells trip the sub-PMF condition instead. Both regimes are reported
//! per trial rather than hidden.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rates::ClassicalProblem;
use crate::typicality::{self, TypicalSpec};

/// Pruned random codebook: M = ⌈2^{nR}⌉ codewords i.i.d. from P_X̂^n
/// restricted to T_δ(X̂) and renormalized by 1−ε.
#[derive(Debug, Clone)]
pub struct ClassicalCodebook {
    pub codewords: Vec<Vec<u8>>,
    pub n: usize,
    pub rate: f64,
    pub delta: f64,
    pub eta: f64,
    /// pruning mass ε(δ,n) = Σ_{x̂^n ∉ T_δ} P^n(x̂^n)
    pub prune_mass: f64,
}

impl ClassicalCodebook {
    pub fn size(&self) -> usize {
        self.codewords.len()
    }
}

/// One simulation configuration: problem, feasible reconstruction
/// distribution, blocklength, rate, typicality and slack knobs, seeding.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub problem: ClassicalProblem,
    pub recon_dist: Vec<f64>,
    pub n: usize,
    pub rate: f64,
    pub delta: f64,
    pub eta: f64,
    pub seed: u64,
    pub trials: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rate <= 0.0 {
            return Err(Error::Invalid("rate must be positive".into()));
        }
        if !(0.0 < self.eta && self.eta < 1.0) {
            return Err(Error::Invalid("eta must lie in (0,1)".into()));
        }
        if self.recon_dist.len() != self.problem.n_recon() {
            return Err(Error::DimensionMismatch(
                self.recon_dist.len(),
                self.problem.n_recon(),
            ));
        }
        let s: f64 = self.recon_dist.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistribution(s));
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
        Ok(())
    }

    pub fn codebook_size(&self) -> usize {
        (2f64.powf(self.n as f64 * self.rate)).ceil() as usize
    }
}

/// Per-trial record.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrialRecord {
    pub tv: f64,
    pub subpmf_ok: bool,
    pub mass_m0: f64,
    /// true when no codebook could be drawn (empty pruned support) and the
    /// all-m=0 branch was simulated instead
    pub degenerate: bool,
}

/// Monte Carlo aggregate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SimResult {
    pub mean_tv: f64,
    pub subpmf_fraction: f64,
    pub mass_m0: f64,
    pub degenerate_trials: usize,
    pub per_trial: Vec<TrialRecord>,
}

fn stream_rng(seed: u64, trial: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index);
    rng
}

fn seq_product(dist: &[f64], seq: &[u8]) -> f64 {
    seq.iter().map(|&s| dist[s as usize]).product()
}

/// i.i.d. draw of ⌈2^{nR}⌉ codewords from the pruned distribution.
/// Errors with `TypicalSetEmpty` when T_δ(X̂) is empty at this blocklength.
pub fn sample_codebook(config: &SimConfig, trial: u64) -> Result<ClassicalCodebook> {
    config.validate()?;
    let spec = TypicalSpec::new(config.recon_dist.clone(), config.n, config.delta)?;
    let typical: Vec<Vec<u8>> = typicality::typical_set(&spec)?.collect();
    if typical.is_empty() {
        return Err(Error::TypicalSetEmpty);
    }
    let masses: Vec<f64> = typical
        .iter()
        .map(|s| seq_product(&config.recon_dist, s))
        .collect();
    let total: f64 = masses.iter().sum();
    let prune_mass = (1.0 - total).max(0.0);
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for m in &masses {
        acc += m / total;
        cdf.push(acc);
    }
    let m_count = config.codebook_size();
    let mut codewords = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let mut rng = stream_rng(config.seed, trial, m as u64);
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c < u).min(typical.len() - 1);
        codewords.push(typical[idx].clone());
    }
    Ok(ClassicalCodebook {
        codewords,
        n: config.n,
        rate: config.rate,
        delta: config.delta,
        eta: config.eta,
        prune_mass,
    })
}

/// The likelihood encoder built for one codebook. Rows are exact PMFs over
/// {0} ∪ [M] after the m = 0 completion.
pub struct LikelihoodEncoder {
    codebook: ClassicalCodebook,
    recon_dist: Vec<f64>,
    source_typical: Vec<Vec<u8>>,
    /// raw encoder rows over m ∈ [M] for each typical x^n (pre-branch)
    raw_rows: Vec<Vec<f64>>,
    pub subpmf_ok: bool,
    x_alphabet: usize,
}

impl LikelihoodEncoder {
    pub fn build(
        problem: &ClassicalProblem,
        config: &SimConfig,
        codebook: ClassicalCodebook,
    ) -> Result<Self> {
        let n = codebook.n;
        let x_alphabet = problem.source.len();
        let spec = TypicalSpec::new(problem.source.clone(), n, config.delta)?;
        let source_typical: Vec<Vec<u8>> = typicality::typical_set(&spec)?.collect();
        let m_count = codebook.size();
        let c0 = (1.0 - codebook.prune_mass) / ((1.0 + codebook.eta) * m_count as f64);
        let mut raw_rows = Vec::with_capacity(source_typical.len());
        let mut subpmf_ok = true;
        for x_n in &source_typical {
            let px = seq_product(&problem.source, x_n);
            let mut row = vec![0.0; m_count];
            for (m, cw) in codebook.codewords.iter().enumerate() {
                if typicality::is_conditionally_typical(x_n, cw, &problem.posterior, codebook.delta)
                {
                    let mut ratio = 1.0;
                    for (xi, ci) in x_n.iter().zip(cw.iter()) {
                        ratio *= problem.posterior[*ci as usize][*xi as usize];
                    }
                    row[m] = c0 * ratio / px;
                }
            }
            let total: f64 = row.iter().sum();
            if total > 1.0 + 1e-12 {
                subpmf_ok = false;
            }
            raw_rows.push(row);
        }
        Ok(Self {
            codebook,
            recon_dist: config.recon_dist.clone(),
            source_typical,
            raw_rows,
            subpmf_ok,
            x_alphabet,
        })
    }

    pub fn codebook(&self) -> &ClassicalCodebook {
        &self.codebook
    }

    pub fn source_typical(&self) -> &[Vec<u8>] {
        &self.source_typical
    }

    /// Raw encoder weights over m ∈ [M] for a typical x^n, before the
    /// sub-PMF branch and the m = 0 completion.
    pub fn raw_weights(&self, x_n: &[u8]) -> Option<&[f64]> {
        self.source_typical
            .iter()
            .position(|s| s == x_n)
            .map(|i| self.raw_rows[i].as_slice())
    }

    /// Full encoder row over {0} ∪ [M] for one source sequence: the m = 0
    /// entry absorbs the sub-PMF deficit; atypical x^n and the 1_{sPMF}=0
    /// branch put all mass on m = 0.
    pub fn row(&self, x_n: &[u8]) -> Vec<f64> {
        let m_count = self.codebook.size();
        let mut out = vec![0.0; m_count + 1];
        if !self.subpmf_ok {
            out[0] = 1.0;
            return out;
        }
        match self.source_typical.iter().position(|s| s == x_n) {
            None => out[0] = 1.0,
            Some(i) => {
                let row = &self.raw_rows[i];
                let total: f64 = row.iter().sum();
                out[0] = (1.0 - total).max(0.0);
                out[1..].copy_from_slice(row);
            }
        }
        out
    }

    fn typical_index(&self) -> std::collections::HashMap<&[u8], usize> {
        self.source_typical
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), i))
            .collect()
    }

    fn x_alphabet(&self) -> usize {
        self.x_alphabet
    }
}

/// System-induced joint distribution P_{X^n X̂^n}, stored column-wise over
/// the reconstruction sequences that actually occur (codewords and x̂₀).
pub struct InducedJoint {
    pub n: usize,
    pub x_alphabet: usize,
    /// distinct reconstruction sequences; last entry is x̂₀
    pub columns: Vec<(Vec<u8>, Vec<f64>)>,
    /// marginal P_{X̂^n} over the same columns
    pub recon_marginal: Vec<f64>,
    pub mass_m0: f64,
}

fn index_to_seq(mut idx: usize, alphabet: usize, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for i in (0..n).rev() {
        out[i] = (idx % alphabet) as u8;
        idx /= alphabet;
    }
    out
}

/// Lexicographically smallest sequence outside T_δ(X̂).
pub fn atypical_anchor(recon_dist: &[f64], n: usize, delta: f64) -> Result<Vec<u8>> {
    let alphabet = recon_dist.len();
    let total = alphabet.pow(n as u32);
    let spec = TypicalSpec::new(recon_dist.to_vec(), n, delta)?;
    for idx in 0..total {
        let seq = index_to_seq(idx, alphabet, n);
        let counts = {
            let mut c = vec![0usize; alphabet];
            for &s in &seq {
                c[s as usize] += 1;
            }
            c
        };
        if !typicality::counts_typical(&counts, n, &spec.base, delta) {
            return Ok(seq);
        }
    }
    Err(Error::NoAtypicalSequence)
}

/// P(x^n, x̂^n) = P̄_X^n(x^n) Σ_m P(m|x^n) 1{D(m)=x̂^n}, decoder
/// D(m) = X̂^n(m) for m ≥ 1 and the fixed atypical x̂₀ for m = 0.
pub fn induced_joint(
    problem: &ClassicalProblem,
    encoder: &LikelihoodEncoder,
) -> Result<InducedJoint> {
    let n = encoder.codebook().n;
    let x_alphabet = encoder.x_alphabet();
    let bits = n as f64 * (x_alphabet as f64).log2();
    if bits > typicality::MAX_ENUM_BITS {
        return Err(Error::EnumerationBound(format!(
            "|X|^n needs {bits:.1} bits"
        )));
    }
    let total_x = x_alphabet.pow(n as u32);
    let xhat0 = atypical_anchor(&encoder.recon_dist, n, encoder.codebook().delta)?;

    // merge codeword multiplicity: distinct value -> column slot
    let mut columns: Vec<(Vec<u8>, Vec<f64>)> = Vec::new();
    let mut slot_of_m: Vec<usize> = Vec::with_capacity(encoder.codebook().size());
    for cw in &encoder.codebook().codewords {
        let slot = match columns.iter().position(|(v, _)| v == cw) {
            Some(s) => s,
            None => {
                columns.push((cw.clone(), vec![0.0; total_x]));
                columns.len() - 1
            }
        };
        slot_of_m.push(slot);
    }
    let x0_slot = match columns.iter().position(|(v, _)| *v == xhat0) {
        Some(s) => s,
        None => {
            columns.push((xhat0.clone(), vec![0.0; total_x]));
            columns.len() - 1
        }
    };

    let typical_idx = encoder.typical_index();
    let mut mass_m0 = 0.0;
    for xi in 0..total_x {
        let x_n = index_to_seq(xi, x_alphabet, n);
        let px = seq_product(&problem.source, &x_n);
        if px == 0.0 {
            continue;
        }
        match typical_idx.get(x_n.as_slice()) {
            Some(&ti) if encoder.subpmf_ok => {
                let row = &encoder.raw_rows[ti];
                let mut used = 0.0;
                for (m, &w) in row.iter().enumerate() {
                    if w > 0.0 {
                        columns[slot_of_m[m]].1[xi] += px * w;
                        used += w;
                    }
                }
                let rem = (1.0 - used).max(0.0);
                columns[x0_slot].1[xi] += px * rem;
                mass_m0 += px * rem;
            }
            _ => {
                columns[x0_slot].1[xi] += px;
                mass_m0 += px;
            }
        }
    }
    let recon_marginal: Vec<f64> = columns
        .iter()
        .map(|(_, col)| col.iter().sum::<f64>())
        .collect();
    Ok(InducedJoint {
        n,
        x_alphabet,
        columns,
        recon_marginal,
        mass_m0,
    })
}

/// Exact total variation ½‖P_{X^nX̂^n} − P_{X̂^n} Π P̄(x_i|x̂_i)‖₁.
pub fn tv_error(problem: &ClassicalProblem, joint: &InducedJoint) -> f64 {
    let total_x = joint.x_alphabet.pow(joint.n as u32);
    let mut tv = 0.0;
    for (k, (xhat, col)) in joint.columns.iter().enumerate() {
        let pm = joint.recon_marginal[k];
        for xi in 0..total_x {
            let x_n = index_to_seq(xi, joint.x_alphabet, joint.n);
            let mut cond = 1.0;
            for (a, b) in x_n.iter().zip(xhat.iter()) {
                cond *= problem.posterior[*b as usize][*a as usize];
            }
            tv += (col[xi] - pm * cond).abs();
        }
    }
    0.5 * tv
}

/// Single-letter averaged marginal P_{X_Q X̂_Q} = (1/n) Σ_i P_{X_i X̂_i}.
pub fn single_letter_marginal(joint: &InducedJoint, recon_alphabet: usize) -> Vec<Vec<f64>> {
    let total_x = joint.x_alphabet.pow(joint.n as u32);
    let mut out = vec![vec![0.0; recon_alphabet]; joint.x_alphabet];
    for (xhat, col) in &joint.columns {
        for xi in 0..total_x {
            let p = col[xi];
            if p == 0.0 {
                continue;
            }
            let x_n = index_to_seq(xi, joint.x_alphabet, joint.n);
            for (a, b) in x_n.iter().zip(xhat.iter()) {
                out[*a as usize][*b as usize] += p / joint.n as f64;
            }
        }
    }
    out
}

/// Exact error of the degenerate all-m=0 protocol (used when the pruned
/// support is empty or the sub-PMF event fails): the induced joint is
/// P̄_X^n ⊗ δ_{x̂₀}, the approximating distribution is δ_{x̂₀} · P̄^n(·|x̂₀).
fn degenerate_tv(problem: &ClassicalProblem, n: usize, xhat0: &[u8]) -> f64 {
    let alphabet = problem.source.len();
    let total = alphabet.pow(n as u32);
    let mut tv = 0.0;
    for xi in 0..total {
        let x_n = index_to_seq(xi, alphabet, n);
        let px = seq_product(&problem.source, &x_n);
        let mut cond = 1.0;
        for (a, b) in x_n.iter().zip(xhat0.iter()) {
            cond *= problem.posterior[*b as usize][*a as usize];
        }
        tv += (px - cond).abs();
    }
    0.5 * tv
}

/// One full trial: sample a codebook, build the encoder, form the induced
/// joint, and measure the total-variation error.
pub fn run_trial(config: &SimConfig, trial: u64) -> Result<TrialRecord> {
    match sample_codebook(config, trial) {
        Ok(codebook) => {
            let encoder = LikelihoodEncoder::build(&config.problem, config, codebook)?;
            let subpmf_ok = encoder.subpmf_ok;
            let joint = induced_joint(&config.problem, &encoder)?;
            let tv = tv_error(&config.problem, &joint);
            Ok(TrialRecord {
                tv,
                subpmf_ok,
                mass_m0: joint.mass_m0,
                degenerate: false,
            })
        }
        Err(Error::TypicalSetEmpty) => {
            // no codebook exists at this blocklength: the protocol is the
            // all-m=0 one (encoder rows are the vacuous sub-PMF)
            let xhat0 = atypical_anchor(&config.recon_dist, config.n, config.delta)?;
            Ok(TrialRecord {
                tv: degenerate_tv(&config.problem, config.n, &xhat0),
                subpmf_ok: true,
                mass_m0: 1.0,
                degenerate: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Independent codebooks per trial; aggregates mean Ξ, sub-PMF success
/// fraction, and mean m=0 mass.
pub fn monte_carlo(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let records: Result<Vec<TrialRecord>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect();
    let per_trial = records?;
    let mean_tv = crate::stats::mean(&per_trial.iter().map(|r| r.tv).collect::<Vec<_>>());
    let subpmf_fraction =
        per_trial.iter().filter(|r| r.subpmf_ok).count() as f64 / per_trial.len() as f64;
    let mass_m0 = crate::stats::mean(&per_trial.iter().map(|r| r.mass_m0).collect::<Vec<_>>());
    let degenerate_trials = per_trial.iter().filter(|r| r.degenerate).count();
    Ok(SimResult {
        mean_tv,
        subpmf_fraction,
        mass_m0,
        degenerate_trials,
        per_trial,
    })
}
