//! Strong (letter-frequency) typical sets and their quantum counterparts:
//! typical, conditionally typical, and cut-off projectors.
//!
//! Typicality is absolute-slack per letter: x^n is δ-typical when
//! |N(a|x^n)/n − P(a)| ≤ δ for every letter a and N(a|x^n) = 0 whenever
//! P(a) = 0. Degenerate eigenvalues are grouped within 1e-10 and treated as
//! one type class so projectors stay stable under solver noise.

use crate::error::{Error, Result};
use crate::mat::{self, CMat};
use crate::state::{self, DensityOperator};

/// Enumeration guard: |alphabet|^n must stay enumerable.
pub const MAX_ENUM_BITS: f64 = 24.0;
/// Dense-operator guard: d^n ≤ 4096.
pub const MAX_PROJECTOR_DIM: usize = 4096;
/// Eigenvalues within this of each other share a type class.
pub const GROUP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TypicalSpec {
    pub base: Vec<f64>,
    pub n: usize,
    pub delta: f64,
}

impl TypicalSpec {
    pub fn new(base: Vec<f64>, n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("blocklength must be at least 1".into()));
        }
        if delta <= 0.0 {
            return Err(Error::Invalid("delta must be positive".into()));
        }
        let sum: f64 = base.iter().sum();
        if base.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistribution(sum));
        }
        Ok(Self { base, n, delta })
    }
}

fn check_enum_bound(alphabet: usize, n: usize) -> Result<()> {
    if alphabet > 16 {
        return Err(Error::EnumerationBound(format!(
            "alphabet size {alphabet} exceeds 16"
        )));
    }
    let bits = n as f64 * (alphabet as f64).log2();
    if bits > MAX_ENUM_BITS {
        return Err(Error::EnumerationBound(format!(
            "|X|^n needs {bits:.1} bits, limit {MAX_ENUM_BITS}"
        )));
    }
    Ok(())
}

/// Letter-frequency typicality for a count profile.
pub fn counts_typical(counts: &[usize], n: usize, base: &[f64], delta: f64) -> bool {
    counts.iter().zip(base.iter()).all(|(&c, &p)| {
        if p <= 0.0 {
            c == 0
        } else {
            (c as f64 / n as f64 - p).abs() <= delta + 1e-12
        }
    })
}

fn letter_counts(seq: &[u8], alphabet: usize) -> Vec<usize> {
    let mut counts = vec![0usize; alphabet];
    for &s in seq {
        counts[s as usize] += 1;
    }
    counts
}

/// Iterator over all sequences in the δ-typical set, lexicographic order.
pub struct SequenceIter {
    alphabet: usize,
    n: usize,
    current: Option<Vec<u8>>,
    filter: Box<dyn Fn(&[u8]) -> bool + Send>,
}

impl Iterator for SequenceIter {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        loop {
            let cur = self.current.as_mut()?;
            let out = if (self.filter)(cur) {
                Some(cur.clone())
            } else {
                None
            };
            // advance lexicographically
            let mut pos = self.n;
            loop {
                if pos == 0 {
                    self.current = None;
                    break;
                }
                pos -= 1;
                let cur = self.current.as_mut().unwrap();
                cur[pos] += 1;
                if (cur[pos] as usize) < self.alphabet {
                    break;
                }
                cur[pos] = 0;
            }
            if let Some(out) = out {
                return Some(out);
            }
        }
    }
}

/// All x^n with |N(a|x^n)/n − P(a)| ≤ δ for every a (and no forbidden
/// letters), in lexicographic order.
pub fn typical_set(spec: &TypicalSpec) -> Result<SequenceIter> {
    check_enum_bound(spec.base.len(), spec.n)?;
    let base = spec.base.clone();
    let n = spec.n;
    let delta = spec.delta;
    let alphabet = base.len();
    Ok(SequenceIter {
        alphabet,
        n,
        current: Some(vec![0u8; n]),
        filter: Box::new(move |seq| counts_typical(&letter_counts(seq, alphabet), n, &base, delta)),
    })
}

/// Pruning mass ε(δ,n) = Σ_{x^n ∉ T_δ} P^n(x^n), summed exactly over type
/// classes (multinomial masses), so it stays exact far beyond the direct
/// enumeration bound.
pub fn atypical_mass(spec: &TypicalSpec) -> f64 {
    let k = spec.base.len();
    let n = spec.n;
    // enumerate count vectors summing to n
    let mut typical_mass = 0.0;
    let mut counts = vec![0usize; k];
    fn rec(
        counts: &mut Vec<usize>,
        letter: usize,
        remaining: usize,
        spec: &TypicalSpec,
        acc: &mut f64,
    ) {
        if letter + 1 == counts.len() {
            counts[letter] = remaining;
            if counts_typical(counts, spec.n, &spec.base, spec.delta) {
                *acc += type_class_mass(counts, &spec.base);
            }
            return;
        }
        for c in 0..=remaining {
            counts[letter] = c;
            rec(counts, letter + 1, remaining - c, spec, acc);
        }
    }
    rec(&mut counts, 0, n, spec, &mut typical_mass);
    (1.0 - typical_mass).max(0.0)
}

/// Multinomial mass of a type class under an i.i.d. base distribution.
fn type_class_mass(counts: &[usize], base: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut log_mass = ln_factorial(n);
    for (&c, &p) in counts.iter().zip(base.iter()) {
        log_mass -= ln_factorial(c);
        if c > 0 {
            if p <= 0.0 {
                return 0.0;
            }
            log_mass += c as f64 * p.ln();
        }
    }
    log_mass.exp()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Conditional typicality of x^n against x̂^n: per-(x̂,x) joint frequencies
/// within δ of the conditional law applied to the empirical type of x̂^n,
/// with zero-probability transitions forbidden.
pub fn is_conditionally_typical(
    x_n: &[u8],
    xhat_n: &[u8],
    channel: &[Vec<f64>],
    delta: f64,
) -> bool {
    let n = x_n.len();
    if xhat_n.len() != n {
        return false;
    }
    let n_hat = channel.len();
    let n_x = channel[0].len();
    let mut joint = vec![vec![0usize; n_x]; n_hat];
    let mut marg = vec![0usize; n_hat];
    for (&x, &xh) in x_n.iter().zip(xhat_n.iter()) {
        joint[xh as usize][x as usize] += 1;
        marg[xh as usize] += 1;
    }
    for xh in 0..n_hat {
        for x in 0..n_x {
            let p = channel[xh][x];
            if p <= 0.0 {
                if joint[xh][x] > 0 {
                    return false;
                }
                continue;
            }
            let target = p * marg[xh] as f64 / n as f64;
            if (joint[xh][x] as f64 / n as f64 - target).abs() > delta + 1e-12 {
                return false;
            }
        }
    }
    true
}

/// All x^n conditionally typical for the given x̂^n, lexicographic order.
pub fn conditional_typical_set(
    xhat_n: &[u8],
    channel: &[Vec<f64>],
    delta: f64,
) -> Result<SequenceIter> {
    let n_x = channel[0].len();
    check_enum_bound(n_x, xhat_n.len())?;
    for (i, row) in channel.iter().enumerate() {
        let rs: f64 = row.iter().sum();
        if (rs - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic(i, rs));
        }
    }
    let xhat = xhat_n.to_vec();
    let chan = channel.to_vec();
    let n = xhat.len();
    Ok(SequenceIter {
        alphabet: n_x,
        n,
        current: Some(vec![0u8; n]),
        filter: Box::new(move |seq| is_conditionally_typical(seq, &xhat, &chan, delta)),
    })
}

/// Hermitian projector with cached rank.
#[derive(Debug, Clone)]
pub struct Projector {
    pub matrix: CMat,
    pub rank: usize,
}

impl Projector {
    fn from_matrix(matrix: CMat, rank: usize) -> Self {
        Self { matrix, rank }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Eigenvalue groups of a Hermitian operator: (group projector, total
/// probability), eigenvalues merged within `GROUP_TOL`.
fn eigen_groups(rho: &CMat) -> Vec<(CMat, f64)> {
    let (vals, vecs) = state::eigh(rho);
    let d = vals.len();
    let mut groups: Vec<(CMat, f64, f64)> = Vec::new(); // (projector, repr value, mass)
    for k in 0..d {
        let col = vecs.column(k);
        let proj = col * col.adjoint();
        match groups
            .iter_mut()
            .find(|(_, v, _)| (v - vals[k]).abs() < GROUP_TOL)
        {
            Some((p, _, mass)) => {
                *p += proj;
                *mass += vals[k];
            }
            None => groups.push((proj, vals[k], vals[k])),
        }
    }
    groups
        .into_iter()
        .map(|(p, _, m)| (p, m.max(0.0)))
        .collect()
}

/// Projector onto the span of eigenvector tensor products whose eigenvalue
/// type-class sequences are δ-typical for the eigenvalue distribution of ρ.
pub fn typical_projector(rho: &DensityOperator, n: usize, delta: f64) -> Result<Projector> {
    let d = rho.dim();
    let dim = d.checked_pow(n as u32).filter(|&x| x <= MAX_PROJECTOR_DIM);
    let Some(dim) = dim else {
        return Err(Error::EnumerationBound(format!(
            "d^n = {d}^{n} exceeds {MAX_PROJECTOR_DIM}"
        )));
    };
    let groups = eigen_groups(rho.matrix());
    let probs: Vec<f64> = groups.iter().map(|&(_, p)| p).collect();
    let g = groups.len();
    let mut proj = CMat::zeros(dim, dim);
    let mut rank = 0usize;
    let mut seq = vec![0u8; n];
    loop {
        let counts = letter_counts(&seq, g);
        if counts_typical(&counts, n, &probs, delta) {
            let term = mat::tensor_all(seq.iter().map(|&s| &groups[s as usize].0));
            // rank contribution = product of group multiplicities
            let mult: f64 = seq
                .iter()
                .map(|&s| mat::trace(&groups[s as usize].0).re)
                .product();
            rank += mult.round() as usize;
            proj += term;
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(Projector::from_matrix(proj, rank));
            }
            pos -= 1;
            seq[pos] += 1;
            if (seq[pos] as usize) < g {
                break;
            }
            seq[pos] = 0;
        }
    }
}

/// Conditionally typical projector for ⊗_i W_{x_i}: eigen-group sequences
/// whose per-source-letter joint frequencies are within δ of the conditional
/// eigenvalue law applied to the empirical type of x^n.
pub fn conditional_typical_projector(
    states: &[DensityOperator],
    x_n: &[u8],
    delta: f64,
) -> Result<Projector> {
    let n = x_n.len();
    let d = states[0].dim();
    let dim = d.checked_pow(n as u32).filter(|&x| x <= MAX_PROJECTOR_DIM);
    let Some(dim) = dim else {
        return Err(Error::EnumerationBound(format!(
            "d^n = {d}^{n} exceeds {MAX_PROJECTOR_DIM}"
        )));
    };
    for w in states {
        if w.dim() != d {
            return Err(Error::DimensionMismatch(w.dim(), d));
        }
    }
    let groups: Vec<Vec<(CMat, f64)>> = states.iter().map(|w| eigen_groups(w.matrix())).collect();
    let letters: Vec<u8> = {
        let mut l = x_n.to_vec();
        l.sort_unstable();
        l.dedup();
        l
    };
    let marg: Vec<usize> = letters
        .iter()
        .map(|&l| x_n.iter().filter(|&&x| x == l).count())
        .collect();

    let mut proj = CMat::zeros(dim, dim);
    let mut rank = 0usize;
    let mut seq = vec![0u8; n];
    'outer: loop {
        // per-letter conditional frequency check on eigen-group indices
        let mut ok = true;
        'check: for (li, &l) in letters.iter().enumerate() {
            let g = groups[l as usize].len();
            let mut counts = vec![0usize; g];
            for (i, &xi) in x_n.iter().enumerate() {
                if xi == l {
                    counts[seq[i] as usize] += 1;
                }
            }
            for (gi, &cnt) in counts.iter().enumerate() {
                let p = groups[l as usize][gi].1;
                if p <= 1e-14 {
                    if cnt > 0 {
                        ok = false;
                        break 'check;
                    }
                    continue;
                }
                let target = p * marg[li] as f64 / n as f64;
                if (cnt as f64 / n as f64 - target).abs() > delta + 1e-12 {
                    ok = false;
                    break 'check;
                }
            }
        }
        if ok {
            let term = mat::tensor_all(
                seq.iter()
                    .enumerate()
                    .map(|(i, &s)| &groups[x_n[i] as usize][s as usize].0)
                    .collect::<Vec<_>>(),
            );
            let mult: f64 = seq
                .iter()
                .enumerate()
                .map(|(i, &s)| mat::trace(&groups[x_n[i] as usize][s as usize].0).re)
                .product();
            rank += mult.round() as usize;
            proj += term;
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            seq[pos] += 1;
            if (seq[pos] as usize) < groups[x_n[pos] as usize].len() {
                break;
            }
            seq[pos] = 0;
        }
    }
    Ok(Projector::from_matrix(proj, rank))
}

/// Projector onto eigenvectors of ξ with eigenvalue strictly above the
/// threshold (the caller supplies ε·d with d = 2^{−n(H+δ₁)}).
pub fn cutoff_projector(xi: &CMat, threshold: f64) -> Result<Projector> {
    if xi.nrows() != xi.ncols() {
        return Err(Error::NotSquare(xi.nrows(), xi.ncols()));
    }
    let (vals, vecs) = state::eigh(xi);
    let d = vals.len();
    let mut proj = CMat::zeros(d, d);
    let mut rank = 0usize;
    for k in 0..d {
        if vals[k] > threshold {
            let col = vecs.column(k);
            proj += col * col.adjoint();
            rank += 1;
        }
    }
    Ok(Projector::from_matrix(proj, rank))
}
