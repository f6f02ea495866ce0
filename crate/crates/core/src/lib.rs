//! Non-asymptotic multinomial/Gaussian approximation machinery and convex
//! confidence intervals for functions of discrete-distribution weights.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`]: simplex points, count vectors, standardized deviations and
//!   the bulk / `P_tau` predicates.
//! * [`specfun`]: log-gamma, incomplete gamma, `erf` and the chi-square law.
//! * [`multinomial`]: pmf, support enumeration, sampling, central moments.
//! * [`gaussian`]: covariance structure, Gaussian density, Pearson statistic.
//! * [`approx`]: local expansion, total-variation / CDF-gap / `eps_n`
//!   bounds and quantile coupling.
//! * [`oracle`]: brute-force enumeration and quadrature counterparts.
//! * [`confopt`]: confidence sets and the min/max problems over them.

pub mod approx;
pub mod confopt;
pub mod domain;
pub mod error;
pub mod gaussian;
pub mod multinomial;
pub mod oracle;
pub mod specfun;

pub use approx::{CouplingContext, CouplingOutcome, ExpansionResult};
pub use confopt::{
    BoundResult, ConfidenceSpec, ConvexObjective, EpsilonMode, Objective, ObjectiveKind, Observed,
};
pub use domain::{CountVector, Deviation, ModelParams, SimplexPoint};
pub use error::{Error, Result};
pub use multinomial::RandomStream;
pub use oracle::{QuadratureConfig, StepCdf};
