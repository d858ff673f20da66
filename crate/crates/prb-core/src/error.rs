use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime congruent to 3 mod 4")]
    InvalidPrime(u64),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("transcript contains no received pulses")]
    EmptyTranscript,
    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),
    #[error("QBER {0} is not achievable by the model (protocol abort regime)")]
    QberUnachievable(f64),
    #[error("q(gamma) is not monotone on the scan grid near gamma={0}")]
    NonMonotone(f64),
    #[error("pattern deviation dominates the period: 2^s W(s) = {0} >= L = {1}")]
    DeviationDominates(f64, u64),
    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
