//! Randomised-measurement toolbox for finite-dimensional quantum states.
//!
//! The crate is organised bottom-up:
//!
//! - [`qstate`]: density matrices, Gell-Mann decomposition, partial operations, named states.
//! - [`designs`]: Haar sampling, spherical and state designs, frame potentials, twirls.
//! - [`moments`]: correlation functions, moments of their distribution, sector lengths, LU invariants.
//! - [`entdetect`]: moment and sector-length based entanglement criteria returning [`entdetect::Verdict`]s.
//! - [`ptmoments`]: partial-transpose moments and the p3-PPT / p3-OPPT tests.
//! - [`rmprotocols`]: simulated measurement records, purity and fidelity estimators, classical shadows.
//! - [`bell`]: CHSH, polytope membership by linear programming, probability of violation.

pub mod bell;
pub mod designs;
pub mod entdetect;
mod error;
pub mod linalg;
pub mod moments;
pub mod ptmoments;
pub mod qstate;
pub mod rmprotocols;

pub use error::{Error, Result};
