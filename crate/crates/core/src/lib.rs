//! Private distributed linear inference for edge computing.
//!
//! Users secret-share their data vectors with Shamir's scheme (Reed-Solomon
//! evaluation encoding), edge nodes multiply the shares they receive with
//! the partitions of a public matrix they store, and users decode `W x_i`
//! from any `k` distinct products per partition. Partitions and shares are
//! placed on nodes with a cyclic design so that any `z` nodes see at most
//! `k - 1` shares.
//!
//! The crate covers the functional pipeline ([`sharing`], [`assignment`],
//! [`protocol`]), a normalized latency model ([`latency`]) and a Monte Carlo
//! parameter search ([`optimizer`]) with a nonprivate reference
//! ([`baseline`]).
//!
//! The latency model is generic over the scalar type. [`Params`] and
//! [`Trace`] are the `f64` instantiations used for simulation;
//! [`ExactParams`] and [`ExactTrace`] use rationals for exact schedule
//! checks.

pub mod assignment;
pub mod baseline;
pub mod config;
pub mod error;
pub mod field;
pub mod latency;
pub mod matrix;
pub mod optimizer;
pub mod protocol;
pub mod sharing;

pub use error::{Error, Result};
pub use field::{FieldElement, PrimeField};

/// Exact scalar for schedule checks.
pub type Exact = num_rational::Ratio<i64>;

pub type Params = latency::SystemParams<f64>;
pub type Trace = latency::ScheduleTrace<f64>;
pub type Setup = latency::SetupTimes<f64>;

pub type ExactParams = latency::SystemParams<Exact>;
pub type ExactTrace = latency::ScheduleTrace<Exact>;
pub type ExactSetup = latency::SetupTimes<Exact>;
