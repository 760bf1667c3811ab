//! Rank-based estimation for the semiparametric linear transformation model
//! `H(Y) = X'beta + eps` with unknown increasing `H` and unknown error law.
//!
//! The crate provides
//!
//! * the pairwise rank likelihood estimator (profile over the error-difference
//!   c.d.f. by isotonic regression, multi-start Nelder-Mead on the unit sphere),
//! * the score-type estimator defined as a zero-crossing of the profiled score,
//! * PDR4 and Cox partial-likelihood baselines,
//! * nonparametric bootstrap percentile intervals,
//! * an inverse-probability-of-censoring weighted variant for right-censored data.
//!
//! Coefficients are identified only up to scale, so every estimator reports a
//! unit-norm vector.

pub mod baselines;
pub mod bootstrap;
pub mod censored;
pub mod data;
pub mod error;
pub mod estimator;
pub mod isotonic;
pub mod optim;
pub mod oracle;
pub mod pairs;
pub mod polar;
pub mod prl;
pub mod profile;
pub mod score;
pub mod seed;

pub use data::Dataset;
pub use error::{Error, Result};
pub use estimator::{EstimatorKind, FitSettings};
pub use isotonic::{pava, IsotonicFit, StepCdf};
pub use pairs::{build_pairs, PairSystem, TieMode, WeightMode};
pub use polar::{to_angles, to_beta, PolarAngles, UnitBeta};
pub use prl::{fit_prl, FitReport, PrlConfig};
pub use score::{find_zero_crossing, ScoreConfig, ZeroCrossReport};
