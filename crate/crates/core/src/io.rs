//! JSON problem specifications and result serialization.
//!
//! Wire conventions: complex numbers are two-element arrays [re, im];
//! matrices are row-major nested arrays of those pairs; channels are
//! {"kraus": [matrix, ...]}; isometries are {"matrix": ..., "out_dims":
//! [dA, dE]}. Problem specs carry a "kind" of "quantum", "qc", or
//! "classical", a source, a posterior (explicit or a named family), and
//! optional solver/simulation options.
//!
//! Validation collects every violation with its field path rather than
//! stopping at the first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{Isometry, QuantumChannel};
use crate::error::Error;
use crate::mat::{self, CMat};
use crate::rates::{closed_form, Argmin, ClassicalProblem, QcProblem, QuantumProblem, RateResult};
use crate::state::DensityOperator;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat, Error> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    let c = rows[0].len();
    if c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Invalid("ragged matrix rows".into()));
    }
    let m = CMat::from_fn(r, c, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    if !mat::is_finite(&m) {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

pub fn channel_to_json(ch: &QuantumChannel) -> Value {
    serde_json::json!({ "kraus": ch.kraus().iter().map(matrix_to_json).collect::<Vec<_>>() })
}

pub fn isometry_to_json(v: &Isometry) -> Value {
    serde_json::json!({
        "matrix": matrix_to_json(v.matrix()),
        "out_dims": v.out_dims(),
    })
}

/// A parsed and validated problem, ready for dispatch.
#[derive(Debug, Clone)]
pub enum Problem {
    Quantum(QuantumProblem),
    Qc(QcProblem),
    Classical(ClassicalProblem),
}

/// Raw problem specification as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: String,
    pub source: Value,
    pub posterior: Value,
    #[serde(default)]
    pub options: Value,
}

/// All violations found while validating a spec, each tagged with the field
/// path that produced it.
#[derive(Debug)]
pub struct SpecErrors(pub Vec<String>);

impl std::fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecErrors {}

fn push_err(errs: &mut Vec<String>, path: &str, e: impl std::fmt::Display) {
    errs.push(format!("{path}: {e}"));
}

fn density_from_value(v: &Value, path: &str, errs: &mut Vec<String>) -> Option<DensityOperator> {
    let rows: MatrixJson = match serde_json::from_value(v.clone()) {
        Ok(r) => r,
        Err(e) => {
            push_err(errs, path, format!("expected a complex matrix: {e}"));
            return None;
        }
    };
    match matrix_from_json(&rows).and_then(DensityOperator::new) {
        Ok(d) => Some(d),
        Err(e) => {
            push_err(errs, path, e);
            None
        }
    }
}

fn f64_field(v: &Value, key: &str, path: &str, errs: &mut Vec<String>) -> Option<f64> {
    match v.get(key).and_then(Value::as_f64) {
        Some(x) => Some(x),
        None => {
            push_err(errs, &format!("{path}/{key}"), "missing or non-numeric");
            None
        }
    }
}

fn quantum_posterior(v: &Value, errs: &mut Vec<String>) -> Option<QuantumChannel> {
    if let Some(fam) = v.get("family").and_then(Value::as_str) {
        return match fam {
            "identity" => {
                let d = v.get("dim").and_then(Value::as_u64).unwrap_or(2) as usize;
                Some(QuantumChannel::identity(d))
            }
            "bit_flip" => {
                let p = f64_field(v, "p", "/posterior", errs)?;
                match QuantumChannel::bit_flip(p) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        push_err(errs, "/posterior/p", e);
                        None
                    }
                }
            }
            "depolarizing" => {
                let p = f64_field(v, "p", "/posterior", errs)?;
                match QuantumChannel::depolarizing(p) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        push_err(errs, "/posterior/p", e);
                        None
                    }
                }
            }
            other => {
                push_err(
                    errs,
                    "/posterior/family",
                    format!("unknown family '{other}'"),
                );
                None
            }
        };
    }
    let Some(kraus_val) = v.get("kraus") else {
        push_err(errs, "/posterior", "expected 'kraus' list or 'family'");
        return None;
    };
    let kraus_json: Vec<MatrixJson> = match serde_json::from_value(kraus_val.clone()) {
        Ok(k) => k,
        Err(e) => {
            push_err(errs, "/posterior/kraus", e);
            return None;
        }
    };
    let mut kraus = Vec::with_capacity(kraus_json.len());
    for (i, kj) in kraus_json.iter().enumerate() {
        match matrix_from_json(kj) {
            Ok(m) => kraus.push(m),
            Err(e) => {
                push_err(errs, &format!("/posterior/kraus/{i}"), e);
                return None;
            }
        }
    }
    match QuantumChannel::new(kraus) {
        Ok(c) => Some(c),
        Err(e) => {
            push_err(errs, "/posterior/kraus", e);
            None
        }
    }
}

/// Parse and validate a problem spec, reporting every violation found.
pub fn parse_problem(text: &str) -> Result<(Problem, ProblemSpec), SpecErrors> {
    let spec: ProblemSpec = serde_json::from_str(text)
        .map_err(|e| SpecErrors(vec![format!("/: malformed JSON: {e}")]))?;
    let mut errs = Vec::new();
    let problem = match spec.kind.as_str() {
        "quantum" => {
            let source = density_from_value(&spec.source, "/source", &mut errs);
            let posterior = quantum_posterior(&spec.posterior, &mut errs);
            match (source, posterior) {
                (Some(source), Some(posterior)) => {
                    let recon_dim = spec
                        .options
                        .get("recon_dim")
                        .and_then(Value::as_u64)
                        .map(|d| d as usize)
                        .unwrap_or(posterior.d_in());
                    match QuantumProblem::new(source, recon_dim, posterior) {
                        Ok(p) => Some(Problem::Quantum(p)),
                        Err(e) => {
                            push_err(&mut errs, "/posterior", e);
                            None
                        }
                    }
                }
                _ => None,
            }
        }
        "qc" => {
            let source = density_from_value(&spec.source, "/source", &mut errs);
            let posterior = if let Some(fam) = spec.posterior.get("family").and_then(Value::as_str)
            {
                if fam == "qc_bsc" {
                    f64_field(&spec.posterior, "q", "/posterior", &mut errs).and_then(|q| {
                        match closed_form::qc_bsc_states(q) {
                            Ok((w0, w1)) => {
                                Some((vec!["0".to_string(), "1".to_string()], vec![w0, w1]))
                            }
                            Err(e) => {
                                push_err(&mut errs, "/posterior/q", e);
                                None
                            }
                        }
                    })
                } else {
                    push_err(
                        &mut errs,
                        "/posterior/family",
                        format!("unknown family '{fam}'"),
                    );
                    None
                }
            } else {
                let states_val = spec.posterior.get("states").cloned().unwrap_or(Value::Null);
                let states_json: Option<Vec<MatrixJson>> = serde_json::from_value(states_val).ok();
                match states_json {
                    None => {
                        push_err(&mut errs, "/posterior/states", "expected list of matrices");
                        None
                    }
                    Some(sj) => {
                        let mut states = Vec::new();
                        let mut ok = true;
                        for (i, s) in sj.iter().enumerate() {
                            match matrix_from_json(s).and_then(DensityOperator::new) {
                                Ok(d) => states.push(d),
                                Err(e) => {
                                    push_err(&mut errs, &format!("/posterior/states/{i}"), e);
                                    ok = false;
                                }
                            }
                        }
                        let labels = spec
                            .posterior
                            .get("labels")
                            .and_then(|l| serde_json::from_value::<Vec<String>>(l.clone()).ok())
                            .unwrap_or_else(|| (0..states.len()).map(|i| i.to_string()).collect());
                        ok.then_some((labels, states))
                    }
                }
            };
            match (source, posterior) {
                (Some(source), Some((labels, states))) => {
                    match QcProblem::new(source, labels, states) {
                        Ok(p) => Some(Problem::Qc(p)),
                        Err(e) => {
                            push_err(&mut errs, "/posterior", e);
                            None
                        }
                    }
                }
                _ => None,
            }
        }
        "classical" => {
            let source: Option<Vec<f64>> = match serde_json::from_value(spec.source.clone()) {
                Ok(s) => Some(s),
                Err(e) => {
                    push_err(
                        &mut errs,
                        "/source",
                        format!("expected a distribution: {e}"),
                    );
                    None
                }
            };
            let posterior = if let Some(fam) = spec.posterior.get("family").and_then(Value::as_str)
            {
                match fam {
                    "bsc" => f64_field(&spec.posterior, "q", "/posterior", &mut errs)
                        .map(|q| vec![vec![1.0 - q, q], vec![q, 1.0 - q]]),
                    "identity" => source.as_ref().map(|s| {
                        (0..s.len())
                            .map(|i| {
                                (0..s.len())
                                    .map(|j| if i == j { 1.0 } else { 0.0 })
                                    .collect()
                            })
                            .collect()
                    }),
                    other => {
                        push_err(
                            &mut errs,
                            "/posterior/family",
                            format!("unknown family '{other}'"),
                        );
                        None
                    }
                }
            } else {
                match spec
                    .posterior
                    .get("rows")
                    .map(|r| serde_json::from_value::<Vec<Vec<f64>>>(r.clone()))
                {
                    Some(Ok(rows)) => Some(rows),
                    _ => {
                        push_err(
                            &mut errs,
                            "/posterior/rows",
                            "expected row-stochastic matrix",
                        );
                        None
                    }
                }
            };
            match (source, posterior) {
                (Some(source), Some(posterior)) => match ClassicalProblem::new(source, posterior) {
                    Ok(p) => Some(Problem::Classical(p)),
                    Err(e) => {
                        push_err(&mut errs, "/posterior", e);
                        None
                    }
                },
                _ => None,
            }
        }
        other => {
            push_err(
                &mut errs,
                "/kind",
                format!("expected quantum | qc | classical, got '{other}'"),
            );
            None
        }
    };
    match problem {
        Some(p) if errs.is_empty() => Ok((p, spec)),
        _ => Err(SpecErrors(errs)),
    }
}

pub fn rate_result_to_json(res: &RateResult) -> Value {
    let argmin = res.argmin.as_ref().map(|a| match a {
        Argmin::Density(d) => serde_json::json!({ "density": matrix_to_json(d.matrix()) }),
        Argmin::Distribution(p) => serde_json::json!({ "distribution": p }),
    });
    serde_json::json!({
        "feasible": res.feasible,
        "rate_bits": res.rate_bits,
        "argmin": argmin,
        "diagnostics": {
            "iterations": res.diagnostics.iterations,
            "restarts": res.diagnostics.restarts,
            "residual": res.diagnostics.residual,
            "converged": res.diagnostics.converged,
            "boundary_stall": res.diagnostics.boundary_stall,
            "path": res.diagnostics.path,
        },
    })
}
