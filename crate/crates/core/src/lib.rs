//! Radial-basis fusion of scattered, heterogeneous station observations into
//! a dense station × target matrix, and spatiotemporal graph convolutional
//! forecasting on the resulting complete graph.
//!
//! The pieces compose as
//! [`ingest`] → [`fusion`] → [`graph`] → [`stgcn`] → [`metrics`], and
//! [`pipeline`] wires them to the on-disk formats used by the `geofuse` tool.

pub mod config;
pub mod error;
pub mod fusion;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod stgcn;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
