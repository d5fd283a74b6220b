use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidInput {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("SNR {gamma:e} with {antennas} antennas overflows the capacity evaluation")]
    Overflow { antennas: u32, gamma: f64 },

    #[error(
        "rate {rate} not bracketed for M = {antennas}: C({lo:e}) = {c_lo}, C({hi:e}) = {c_hi} \
         (estimator error bound {error_bound:e})"
    )]
    Bracket {
        antennas: u32,
        rate: f64,
        lo: f64,
        hi: f64,
        c_lo: f64,
        c_hi: f64,
        error_bound: f64,
    },

    #[error("capacity inversion for M = {antennas}, R = {rate} stalled after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        antennas: u32,
        rate: f64,
        iterations: u32,
        residual: f64,
    },

    #[error("exact antenna search hit the cap M = {cap} while the objective was still decreasing")]
    SearchCap { cap: u32 },

    #[error("config: {0}")]
    Config(String),

    #[error("I/O failure on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV failure in {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for failures of the numerical routines, as opposed to bad input
    /// or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::Bracket { .. }
                | Error::NoConvergence { .. }
                | Error::SearchCap { .. }
        )
    }
}

pub(crate) fn ensure(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput {
            name,
            value,
            reason,
        })
    }
}
