//! Pareto front learning with data-driven preference sampling.
//!
//! A preference-conditioned network maps simplex weights to decision vectors.
//! Instead of drawing training preferences from a fixed distribution, the
//! trainer refits a Dirichlet mixture after each epoch to the normalized loss
//! vectors that survive non-dominated sorting, so sampling concentrates where
//! the front actually is. Disconnected fronts get several mixture components.
//!
//! ```
//! use ddps::problems::{ProblemKind, ProblemSpec};
//! use ddps::trainer::{train, TrainConfig};
//!
//! let problem = ProblemSpec::new(ProblemKind::Lzlzk);
//! let cfg = TrainConfig { epochs: 2, n_prefs: 8, hidden: vec![16], ..TrainConfig::default() };
//! let cfg = TrainConfig { mcmc: ddps::mcmc::McmcConfig { steps: 100, ..cfg.mcmc.clone() }, ..cfg };
//! let out = train(&cfg, &problem)?;
//! assert_eq!(out.record.epochs.len(), 2);
//! # Ok::<(), ddps::Error>(())
//! ```

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod mcmc;
pub mod metrics;
pub mod net;
pub mod pareto;
pub mod problems;
pub mod simplex;
pub mod trainer;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/mixture-fit.md")]
    mod mixture_fit {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
}
