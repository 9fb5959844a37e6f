pub mod cli;
pub mod config;
pub mod demo;
pub mod episode;
pub mod error;
pub mod eval;
pub mod floorplan;
pub mod geojson;
pub mod graph_json;
pub mod report;
pub mod wire;

pub use error::{Error, Result};
