//! Raster topology: pixel grids, the topological hull, basin rendering,
//! the hull-based fast-escape oracle, spider's-web nesting, and the
//! level-set separation witness.

mod grid;
mod hull;
mod oracle;
mod render;
mod web;
mod witness;

pub use grid::RasterGrid;
pub use hull::{dilate_mask, hull_mask, topological_hull};
pub use oracle::{classify_a_hull_oracle, HullLabel, HullOracleParams};
pub use render::{render_classification, BasinPalette, CODE_ESCAPING, CODE_JULIA};
pub use web::{spiderweb_nesting, WebParams, WebReport};
pub use witness::{separation_witness, IslandReport, WitnessParams, CODE_B};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("forward images left representable range after {achieved} steps")]
    WindowOverflow { achieved: usize },
    #[error("radius {radius} never enclosed within the step budget")]
    NotFound { radius: f64 },
    #[error("query pixel is labeled B")]
    QueryInB,
    #[error("query point outside the raster window")]
    QueryOutsideWindow,
}
