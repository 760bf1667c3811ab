//! Reference estimators: the quadruple-rank estimator and Cox regression.

pub mod cox;
pub mod pdr4;

pub use cox::{fit_cox, partial_loglik, CoxConfig, CoxFit};
pub use pdr4::{fit_pdr4, s4, s4_naive, Pdr4Config, DEFAULT_PDR4_CAP};
