//! Delaunay triangulation and piecewise-linear interpolation of scattered samples.

mod delaunay;
mod interp;
pub mod predicates;

pub use delaunay::{delaunay, Triangulation, DUPLICATE_TOL};
pub use interp::{axis_nodes, bounding_box, interp_linear, interp_row, interp_to_grid, InterpGrid, Location};
