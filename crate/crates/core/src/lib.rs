//! Design and verification toolkit for LDPC-coded decode-and-forward
//! transmission over the Gaussian degraded relay channel.
//!
//! The crate is organised along the design flow:
//!
//! - [`channel`]: closed-form rates, the optimal power split and the three
//!   design SNRs.
//! - [`exit`]: probability-of-error EXIT charts, openness and thresholds.
//! - [`optimizer`]: linear-programming design of the relay code and of the
//!   two-level source code.
//! - [`codegen`]: finite-length Tanner graphs, encoders and bin indices.
//! - [`simulator`]: Monte Carlo execution of the block-Markov protocol.

pub mod channel;
pub mod codegen;
pub mod degree;
mod error;
pub mod exit;
pub mod lp;
pub mod optimizer;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};

/// Toolkit version recorded in every design and code file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
