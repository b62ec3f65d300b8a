//! Simulation and Monte Carlo verification for Palm calculus of point
//! processes on the real line.
//!
//! Patterns follow the convention `... < T_-1 < T_0 <= 0 < T_1 < ...` with
//! gaps `alpha_n = T_{n+1} - T_n`. Geometry is generic over [`Coord`]
//! (floats and exact rationals); samplers and estimators over [`Scalar`].
//! The aliases below fix the usual `f64` instantiation.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ams;
pub mod estimate;
pub mod events;
pub mod identities;
pub mod io;
pub mod models;
pub mod pattern;
pub mod scalar;
pub mod streams;

pub use events::{
    battery, ev_and, ev_count_eq, ev_example44, ev_first_point_le, ev_interval_gt, ev_not, ev_or,
    occupation, Eventuality, ParseError,
};
pub use models::{
    example44, example84_exact, poisson_ts, renewal_es, renewal_ts_from_es, tilted_ts,
    IntervalDistribution, LawTag, ModelConfig, ModelError, ProcessModel, Tilt, WeightedPattern,
    Window,
};
pub use pattern::{IndexedPoint, PatternError, PointPattern, View};
pub use scalar::{Coord, Scalar};
pub use streams::SeedStream;

/// Pattern with `f64` timestamps.
pub type Pattern = PointPattern<f64>;
/// Pattern with exact rational timestamps.
pub type ExactPattern = PointPattern<num_rational::Ratio<i64>>;
pub type Event = Eventuality<f64>;
pub type Model = ProcessModel<f64>;
