//! Design-based identification and testing of treatment-effect
//! monotonicity in completely randomized experiments with binary outcomes.
//!
//! The crate is organised bottom-up:
//!
//! - [`population`]: designs, type counts and the exact outcome pmfs.
//! - [`identification`]: moments of the outcome pmf and their inverse map.
//! - [`lp`]: a small dense simplex solver with dual certificates.
//! - [`freq`]: most powerful, support-based and unbiased tests, weighted
//!   average power and power bounds.
//! - [`bayes`]: exact posteriors and priors that never update about the null.
//! - [`oracle`]: brute-force enumeration over treatment assignments.
//! - [`cli`]: the `monotest` command-line front end.

pub mod bayes;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod freq;
pub mod identification;
pub mod lp;
pub mod oracle;
pub mod population;

pub use error::{Error, Result};
pub use exact::Rational;
pub use population::{
    enumerate_types, multinomial_pmf, pmf, superpop_pmf, support, Design, OutcomeCounts,
    OutcomePmf, TypeCounts, TypeShares, TypeSpace,
};
