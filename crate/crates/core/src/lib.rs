//! Numerical laboratory for unstructured quantum search when a single query
//! qubit is hit by depolarizing noise around each oracle call.
//!
//! Layers, bottom up: [`opalgebra`] (dense and sparse complex matrices),
//! [`channels`] (Kraus families and Choi fingerprints), [`oracle_kraus`]
//! (the noisy-oracle Kraus families and their verification), [`progress`]
//! (record-register progress measure and transition norms) and
//! [`search_sim`] (pure-state trajectory simulation of search strategies).

pub mod channels;
pub mod opalgebra;
pub mod oracle_kraus;
pub mod progress;
pub mod report;
pub mod search_sim;
pub mod suite;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("parameter outside its domain: {0}")]
    Domain(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degenerate parameter: {0}")]
    Degenerate(String),
    #[error("loop cap reached: {0}")]
    LoopCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_rate(name: &str, r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("{name} = {r} outside [0, 1]")));
    }
    Ok(())
}
