//! Bures-Wasserstein geometry of positive semi-definite matrices.

pub mod cov;
pub mod error;
pub mod io;
pub mod kernel;
pub mod oracles;
pub mod spd;
pub mod stratum;

pub use error::{Error, Result};
pub use kernel::{Factor, SymMatrix, Tolerances};
