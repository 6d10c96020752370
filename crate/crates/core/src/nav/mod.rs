//! Traversability refinement, costmaps and A* planning on a 2-D grid.

mod costmap;
mod grid;
mod pipeline;
mod planner;
mod project;

pub use costmap::{
    costmap_from_traversability, elevation_costmap, gaussian_weight, pixel_traversability, semantic_costmap,
    semantic_mask, Costmap, DistanceBlend, NavParams, Provenance, IMPASSABLE,
};
pub use grid::{Cell, Grid, GridSpec};
pub use pipeline::{field_lattice, full_costmap, planner_grid};
pub use planner::{a_star, replay_cost, Path};
pub use project::{ground_from_min_filter, merge_nearest, project_field_to_grids, ProjectedGrids};
