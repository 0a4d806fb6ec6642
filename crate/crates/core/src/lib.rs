//! Maximum-likelihood fitting, likelihood-ratio tests and Wald tests for the
//! β-model of undirected graphs and the Bradley–Terry paired-comparison model,
//! with a seeded Monte Carlo harness for checking their calibration.

pub mod betamodel;
pub mod btmodel;
pub mod error;
pub mod graphdata;
pub mod inference;
pub mod montecarlo;
pub mod numerics;
pub mod params;
mod solver;

pub use betamodel::{FitResult, BtFitResult};
pub use error::{Result, WilksError};
pub use graphdata::{ComparisonData, UndirectedGraph};
pub use inference::{Data, Regime, RegimeChoice, TestResult};
pub use montecarlo::{Runner, Schedule, SimReport, SimScenario};
pub use numerics::Tolerance;
pub use params::{Model, NullHypothesis, NullKind, ParamVector};
