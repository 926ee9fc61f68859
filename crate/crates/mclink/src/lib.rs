//! Simulation and receiver design for a diffusive molecular-communication
//! link with Poisson signal-dependent noise and inter-symbol interference.
//!
//! The transmitter signals with on-off keying: bit 1 releases `A` molecules,
//! bit 0 stays silent. Molecules propagate by diffusion plus uniform flow to a
//! transparent spherical receiver that counts arrivals in `M` sampling
//! instants per symbol interval; counts are Poisson with a rate set by the
//! channel impulse response of the last `L` symbols plus a constant external
//! interference `eta`. On top of that model the crate provides:
//!
//! - [`channel`] — the channel impulse response on the fractional sampling
//!   grid and exact Poisson observation generation,
//! - [`equalize`] — second-order statistics of the received window and
//!   closed-form MMSE tap design for the linear fractionally-spaced
//!   equalizer, the decision-feedback equalizer, and two benchmark receivers,
//! - [`detect`] — threshold detection, exact maximum-likelihood sequence
//!   detection (Viterbi), reduced-state sequence detection with per-survivor
//!   feedback, and an exhaustive-search oracle,
//! - [`analysis`] — closed-form (Gaussian-approximation) bit error rate of
//!   the linear equalizer by enumeration of interfering sequences,
//! - [`montecarlo`] — a seeded, worker-count-independent Monte Carlo harness
//!   producing BER reports with Wilson confidence intervals,
//! - [`cli`] — the `mclink` command-line front end (`cir`, `design`, `ber`,
//!   `validate`).
//!
//! The `examples/` directory has one runnable example per capability; start
//! with `cargo run --example cir_table`.

use std::fmt;

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod detect;
pub mod equalize;
pub mod montecarlo;
pub mod numerics;

pub use channel::{build_cir_table, ChannelParams, CirTable, ObservationMatrix};
pub use detect::DecisionSequence;
pub use equalize::{DfeTaps, LinearTaps, SampleIndexMap, SecondOrderStats};
pub use montecarlo::{BerReport, ExperimentConfig, Scheme};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Error type shared by all modules.
///
/// The variants map onto the CLI exit codes: `Config` and `InvalidArgument`
/// are usage errors (exit 1), `Numerical` and `SearchFailure` are numerical
/// errors (exit 2), `Validation` is a failed validation check (exit 3).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Caller passed an argument outside an operation's domain.
    InvalidArgument(String),
    /// Configuration file or flag could not be parsed or is inconsistent.
    Config(String),
    /// A numerical procedure failed (ill-conditioned system, non-finite
    /// intermediate, ...). The message carries the diagnostic quantity.
    Numerical(String),
    /// An iterative search failed to locate its target (e.g. no CIR peak
    /// bracket inside the search interval).
    SearchFailure(String),
    /// A validation check failed.
    Validation(String),
    /// Output could not be written.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Numerical(m) => write!(f, "numerical error: {m}"),
            Error::SearchFailure(m) => write!(f, "search failure: {m}"),
            Error::Validation(m) => write!(f, "validation failure: {m}"),
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Process exit code for this error per the CLI contract:
    /// 1 usage/config, 2 numerical, 3 validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Io(_) => 1,
            Error::Numerical(_) | Error::SearchFailure(_) => 2,
            Error::Validation(_) => 3,
        }
    }
}
