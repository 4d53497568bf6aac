//! Workload characterization for group-chat message logs.
//!
//! A log is sessionized at two levels: per user (default inactivity bound
//! 15 minutes) and per group (default 81 minutes, or chosen from the
//! silence-gap histogram). On top of the sessions the crate computes
//! message, user and group layer metrics, Zipf rank-frequency fits and a
//! participation typology. [`generator`] produces synthetic ON/OFF traces
//! with known ground truth to validate every estimator.
//!
//! The statistical routines are generic over [`Scalar`]; the aliases below
//! fix the scalar for the common cases.

pub mod cli;
pub mod error;
pub mod generator;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod sessionizer;
pub mod statfit;
pub mod typology;

pub use error::{Error, Result};
pub use ingest::{ContentFlags, FormatConfig, Message, MessageLog, Minute, Roster};
pub use scalar::Scalar;
pub use sessionizer::{GapHistogram, GroupSession, Thresholds, UserSession};

pub type CdfSeries64 = statfit::CdfSeries<f64>;
pub type CdfSeries32 = statfit::CdfSeries<f32>;
pub type ZipfFit64 = statfit::ZipfFit<f64>;
pub type ZipfFit32 = statfit::ZipfFit<f32>;
pub type Summary64 = statfit::Summary<f64>;
pub type Summary32 = statfit::Summary<f32>;
