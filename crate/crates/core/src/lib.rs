//! Partial-identification bounds on causal effects from categorical data
//! with proxies of unobserved confounders or mediators.
//!
//! The crate covers the whole pipeline: joint distributions over labelled
//! categorical axes ([`JointPmf`]), plug-in conditionals from data or from an
//! exact joint ([`FrequencyModel`]), hard and LogSumExp-smoothed bounds
//! ([`bounds`]), simulation with exact ground truth ([`dgp`], [`oracle`]),
//! bridge-function feasibility checks ([`bridge`]), bootstrap confidence
//! intervals ([`bootstrap`]) and a replicated study harness ([`study`]).

pub mod bootstrap;
pub mod bounds;
pub mod bridge;
pub mod codebook;
pub mod data;
pub mod dgp;
pub mod error;
pub mod freq;
pub mod lse;
pub mod oracle;
pub mod pmf;
pub mod rng;
pub mod study;

pub use bounds::{estimate, BoundsReport, Estimand, Interval, Method};
pub use codebook::{Codebook, Role, Variable};
pub use data::Dataset;
pub use error::{Error, Result};
pub use freq::FrequencyModel;
pub use pmf::JointPmf;
