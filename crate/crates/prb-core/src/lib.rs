//! Simulation and security analysis of a QKD protocol whose measurement
//! bases follow pseudorandom Legendre sequences instead of true coin flips.
//!
//! The crate covers the full pipeline: sequence generation and pattern
//! statistics ([`legendre`]), session simulation ([`protocol`]),
//! intercept-resend attack strategies ([`eavesdrop`]), closed-form key-rate
//! analytics ([`analytics`]), guessing bounds ([`bounds`]), a-posteriori
//! seed recovery ([`seedguess`]), and photon-number-splitting limits
//! ([`pns`]).

pub mod analytics;
pub mod bounds;
pub mod eavesdrop;
pub mod error;
pub mod legendre;
pub mod pns;
pub mod protocol;
pub mod rng;
pub mod seedguess;
pub mod simplex;

pub use analytics::{BoundSource, RateModel};
pub use error::{Error, Result};
pub use legendre::{LegendrePrime, RegisterKeySet};
pub use protocol::{AngleIndex, ProtocolParams, SessionTranscript};
