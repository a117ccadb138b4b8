//! Lattice geometry: the window grid, cylinder domains, cell sets with
//! their exterior closure, morphology and region predicates.

mod cellset;
mod domain;
mod grid;
pub mod morphology;
pub mod raster;
mod region;

pub use cellset::{CellSet, Closure};
pub use domain::{CylinderDomain, ExteriorGraphData, HBox};
pub use grid::{Coord, GridDescriptor};
pub use morphology::{ball_offsets, radius_cells, subconvolve, supconvolve, translate};
pub use region::{region_cells, Region, RegionCells};
