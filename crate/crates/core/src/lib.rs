//! One-shot source coding with a helper on finite alphabets.
//!
//! The crate computes smooth max Rényi divergence and conditional smooth max
//! Rényi entropy of order zero exactly, evaluates and searches the one-shot
//! achievable rate region for coding `X` when a helper observes `Y`,
//! simulates the random binning / covering code behind that region, and
//! tracks how the per-symbol smooth quantities of i.i.d. extensions approach
//! their Shannon limits.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`prob`] | pmfs, joints, channels, Markov composition, products, Shannon quantities |
//! | [`smooth`] | `H₀`, `D∞`, smooth variants, and brute-force oracles |
//! | [`region`] | ε-budgets, achievable rate pairs, Pareto frontier search |
//! | [`sim`] | the random code and its Monte-Carlo error estimate |
//! | [`asymptotics`] | convergence series and information-spectrum masses |
//!
//! All information quantities are in bits.

pub mod asymptotics;
pub mod error;
pub mod format;
pub mod prob;
pub mod region;
pub mod rng;
pub mod sim;
pub mod smooth;

pub use error::{Error, Result};
pub use prob::{Alphabet, Channel, JointPmf, Pmf, SubPmf};
