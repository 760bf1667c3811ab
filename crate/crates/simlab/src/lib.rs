//! Monte Carlo laboratory for the pairrank estimators: simulation designs,
//! true error-difference laws, accuracy metrics and a reproducible study
//! runner with JSON and CSV reports.

pub mod design;
pub mod error;
pub mod metrics;
pub mod report;
pub mod study;
pub mod truth;

pub use design::{ErrorLaw, HLaw, SimDesign};
pub use error::{Result, SimError};
pub use metrics::{ise, moments, Moments};
pub use report::{MethodSummary, SimReport};
pub use study::{run_study, BootstrapConfig, Method, StudyConfig};
pub use truth::true_f0;

pub const TOOL_NAME: &str = "pairrank-simlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
