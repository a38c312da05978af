//! Rate limits and finite-blocklength simulators for lossy source coding
//! against a fixed posterior channel, in quantum, quantum-classical, and
//! classical flavors.
//!
//! The crate is organized around the pipeline
//!
//! * [`mat`], [`state`] — dense complex linear algebra, density operators,
//!   entropies, fidelity and trace distance;
//! * [`channel`] — CPTP maps in Kraus form, Stinespring dilations,
//!   complementary channels, posterior reference maps, Uhlmann isometries,
//!   and Naimark extensions;
//! * [`rates`] — the three single-letter rate functionals and their
//!   minimizers, plus the coherent-information decomposition into covering
//!   and packing ensembles;
//! * [`typicality`] — classical and quantum (conditional) typical sets,
//!   projectors, and cut-off projectors;
//! * [`csim`], [`qcsim`] — exact small-blocklength simulators of the
//!   likelihood-encoder and POVM covering protocols, with Monte Carlo over
//!   random codebooks;
//! * [`io`] — JSON problem specifications and result serialization shared
//!   with the CLI.

pub mod channel;
pub mod csim;
pub mod error;
pub mod io;
pub mod mat;
pub mod qcsim;
pub mod random;
pub mod rates;
pub mod state;
pub mod stats;
pub mod typicality;

pub use error::{Error, Result};
pub use mat::{CMat, CVec};
pub use state::{DensityOperator, Ensemble, PureState};
