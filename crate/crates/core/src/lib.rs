//! Geometric complexity of classical stochastic maps and quantum channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`maps`] holds validated stochastic maps, rate matrices and reset errors.
//! * [`geometry`] evaluates the log-barrier metric, the closed-form length `ℓ`
//!   and every bound derived from it.
//! * [`scaling`] solves the two-sided scaling problem, builds constrained
//!   paths and estimates geodesic lengths from above.
//! * [`decomposition`] covers two-state primitive operations and a bounded
//!   search for products that approximate a target map.
//! * [`quantum`] lifts the classical machinery to channels given by Kraus
//!   operators.
//! * [`io`], [`random`] and [`report`] are shared by the command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod maps;
pub mod quantum;
pub mod random;
pub mod report;
pub mod scaling;

pub use error::{Error, Result};
pub use geometry::{
    alpha_length, complexity_bracket, ell, ell_with_floor, entropic_bound, metric_eval, protocol_lower_bound,
    shannon_entropy, tradeoff_margin, two_level_complexity, AlphaMetricParams, ComplexityBracket, MetricSample,
    TradeoffMargin, DEFAULT_FLOOR,
};
pub use maps::{
    apply_map, escape_rate, map_from_protocols, map_from_rates, reset_error, row_sums, validate_map,
    ProbabilityVector, Protocol, ProtocolSequence, RowSumVector, StochasticMap, TransitionRateMatrix, UndesiredSet,
};
pub use scaling::{
    constrained_path, geodesic_upper_estimate, interpolation_base, log_linear_schedule, path_length, sinkhorn_solve,
    GeodesicEstimate, MapPath, SinkhornSolution,
};
