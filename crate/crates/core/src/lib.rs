//! Planning toolkit for sparse roadside wireless access-point deployments.
//!
//! The pipeline is: load a road network with candidate sites
//! ([`geometry`]), split its edges into coverage subsegments, build a set of
//! movement paths ([`paths`]), evaluate contact-opportunity and throughput
//! metrics ([`metrics`]) under traffic scenarios ([`scenario`]), and pick
//! deployments with the greedy covering planners in [`planner`]. The
//! [`simulator`] replays deployments against synthetic mobility traces.

pub mod cli;
pub mod deploy;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod ids;
pub mod metrics;
pub mod paths;
pub mod planner;
pub mod scenario;
pub mod simulator;
pub mod synth;

pub use error::{Error, ErrorCode, Result};
pub use ids::{EdgeId, NodeId, PathId, SiteId, SubsegmentId};
