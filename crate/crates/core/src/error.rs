use std::fmt;

use thiserror::Error;

use crate::transfer::AsymptoticKind;

/// Which field an evaluation failed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pump,
    Signal,
    Idler,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Pump => "pump",
            Mode::Signal => "signal",
            Mode::Idler => "idler",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a physical relation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural or numeric parameter violates its invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Zero denominator in the cavity amplitude solution (lossless pole).
    #[error("resonance singularity while solving the {kind:?} amplitudes")]
    ResonanceSingularity { kind: AsymptoticKind },

    /// M11 vanishes, the structure reflects perfectly.
    #[error("singular structure: transfer matrix element M11 is zero")]
    SingularStructure,

    /// A quasi-phase-matching period was requested for a vanishing mismatch.
    #[error("mismatch is already zero, poling is unnecessary")]
    AlreadyPhaseMatched,

    /// A numerical procedure could not produce a trustworthy value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Wraps an error with the mode and vacuum wavenumber it occurred at.
    #[error("{mode} at k = {k} rad/um: {source}")]
    AtPoint {
        mode: Mode,
        k: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, mode: Mode, k: f64) -> Self {
        Error::AtPoint {
            mode,
            k,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::AlreadyPhaseMatched => true,
            Error::AtPoint { source, .. } => source.is_config(),
            Error::ResonanceSingularity { .. } | Error::SingularStructure | Error::Numerical(_) => {
                false
            }
        }
    }

    /// True if the root cause is a pole of the cavity solution.
    pub fn is_singular(&self) -> bool {
        match self {
            Error::ResonanceSingularity { .. } | Error::SingularStructure => true,
            Error::AtPoint { source, .. } => source.is_singular(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
