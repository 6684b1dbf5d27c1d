//! Wildfire-risk assignment for power-line segments and budget-constrained
//! undergrounding selection.
//!
//! The pipeline is: read fire-potential rasters ([`raster`]) and a line
//! network ([`network`]), cut lines into segments and intersect them with
//! the grid ([`geometry`]), score each segment per scenario and aggregate
//! ([`risk`]), then choose segments to underground within a budget
//! ([`optimize`]).

pub mod geometry;
pub mod network;
pub mod optimize;
mod par;
pub mod raster;
pub mod risk;

pub use par::Parallelism;
