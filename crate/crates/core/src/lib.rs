//! Topo-semantic navigation graphs and sign-driven global localization.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs plus an explicitly seeded generator; file formats, clocks and the
//! command line live in the `waysign` companion crate.
//!
//! Layout:
//! - [`direction`], [`graph`], [`path`]: the graph model, 8-way direction
//!   discretization and deterministic shortest-path next hops.
//! - [`raster`], [`extract`]: floor-plan masks to per-floor graphs.
//! - [`geometry`], [`align`], [`osm`], [`stitch`]: registration to OSM
//!   footprints and assembly of one global graph.
//! - [`cue`]: sign cues and fuzzy label matching.
//! - [`mcl`], [`exact`]: the particle filter and its exact discrete oracle.
//! - [`sim`]: synthetic environments, episodes and the evaluation protocol.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod align;
pub mod cue;
pub mod direction;
pub mod error;
pub mod exact;
pub mod extract;
pub mod geometry;
pub mod graph;
pub mod math;
pub mod mcl;
pub mod osm;
pub mod path;
pub mod raster;
pub mod sim;
pub mod stitch;

pub use direction::DirectionCategory;
pub use error::{Error, Result};
pub use graph::{GraphMeta, NavEdge, NavGraph, NavNode, NodeKind, PortalKind};
