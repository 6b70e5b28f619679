//! Implicit priors induced by Bayesian mixture models on the number of data
//! clusters and on partition functionals.
//!
//! A mixture model used for clustering specifies a prior on the number of
//! components `K` and a symmetric Dirichlet prior on the component weights.
//! Together these induce a prior on the partition of `N` observations, and in
//! particular on the number of *filled* components (data clusters) `K+`,
//! which is what one actually observes. This crate computes those induced
//! priors exactly, in log-domain arithmetic, for three model classes:
//!
//! * Dirichlet process mixtures (`K = ∞`, concentration `α`),
//! * static mixtures of finite mixtures (Dirichlet parameter `γ_K ≡ γ`),
//! * dynamic mixtures of finite mixtures (`γ_K = α/K`).
//!
//! Alongside the analytic machinery there is a seeded Monte Carlo simulator
//! ([`simulate`]) used as an independent oracle for everything else.
//!
//! The crate is `no_std` (it needs `alloc` only); IO, serialization and the
//! command line front end live in the companion `mixprior-cli` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod eppf;
pub mod functionals;
pub mod kplus;
pub mod logspace;
pub mod priors;
pub mod recursion;
pub mod simulate;

mod error;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Diagnostics attached to every quantity obtained by truncating an infinite
/// sum over the number of components `K`.
///
/// `prior_mass` is the total mass of the prior on `K` covered by the
/// truncation; comparing it to 1 is the standard check that the chosen
/// maximum was large enough. Computations that never truncate (point masses,
/// Dirichlet process paths) report full coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    /// Largest component count included in the sum; `None` when no
    /// truncation over `K` took place.
    pub k_max: Option<u32>,
    /// Prior mass on `K` covered by the truncated sum.
    pub prior_mass: f64,
    /// True when `prior_mass` fell below the policy's warn threshold.
    pub warned: bool,
}

impl Coverage {
    /// Coverage record for computations that do not truncate over `K`.
    pub fn exact() -> Self {
        Coverage {
            k_max: None,
            prior_mass: 1.0,
            warned: false,
        }
    }

    pub(crate) fn truncated(k_max: u32, prior_mass: f64, warn_below: f64) -> Self {
        Coverage {
            k_max: Some(k_max),
            prior_mass,
            warned: prior_mass < warn_below,
        }
    }
}

/// A value bundled with the [`Coverage`] diagnostics of the truncated sums
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated<T> {
    pub value: T,
    pub coverage: Coverage,
}

impl<T> Truncated<T> {
    pub fn exact(value: T) -> Self {
        Truncated {
            value,
            coverage: Coverage::exact(),
        }
    }

    pub fn new(value: T, coverage: Coverage) -> Self {
        Truncated { value, coverage }
    }
}
