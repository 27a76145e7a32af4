//! Exact computation on Laakso space `F = (I x K)/~`.
//!
//! Heights are exact rationals and Cantor coordinates are finite bit strings,
//! so distances, geodesics, one-sided wormhole gaps and the piecewise-linear
//! profiles of distance functions are computed without rounding. The
//! [`oracle`] module supplies an independent graph discretization used to
//! cross-check the closed-form metric, and [`verify`] bundles the checks
//! run by the acceptance suite and the `laakso verify` command.

pub mod address;
pub mod analysis;
pub mod calculus;
pub mod constructions;
pub mod error;
pub mod interval;
pub mod metric;
pub mod oracle;
pub mod par;
pub mod point;
pub mod rational;
pub mod sampling;
pub mod verify;
pub mod wormhole;

pub use address::CantorAddress;
pub use error::{LaaksoError, Result};
pub use interval::HeightInterval;
pub use metric::{
    distance, geodesic_endings, minimal_height_intervals, required_levels, synthesize_geodesic,
    GeodesicPath,
};
pub use par::Exec;
pub use point::LaaksoPoint;
pub use rational::{ExtRational, Rational};
pub use verify::{run_suite, Suite, SuiteReport, VerifyConfig};
pub use wormhole::{Direction, SVerdict};
