use super::costmap::{costmap_from_traversability, gaussian_weight, pixel_traversability, semantic_mask, Costmap, NavParams, Provenance};
use super::grid::{Cell, Grid, GridSpec};
use crate::error::{Error, Result};
use crate::field::GridSpec3;
use crate::scene::{Point3, SemanticTable};

/// Square planner grid of `2·half_extent` meters centered on `(x, y)`.
pub fn planner_grid(x: f64, y: f64, half_extent: f64, cell_size: f64) -> Result<GridSpec> {
    if !(half_extent > 0.0) {
        return Err(Error::input("planner grid extent must be positive"));
    }
    let n = (2.0 * half_extent / cell_size).round().max(1.0) as usize;
    let spec = GridSpec {
        origin: Point3::new(x - n as f64 * cell_size / 2.0, y - n as f64 * cell_size / 2.0, 0.0),
        cell_size,
        width: n,
        height: n,
    };
    spec.validate()?;
    Ok(spec)
}

/// Field lattice with one column per planner cell center and `levels`
/// heights spanning `[z0, z1]`.
pub fn field_lattice(spec: &GridSpec, z0: f64, z1: f64, levels: usize) -> GridSpec3 {
    let (x0, y0) = spec.center((0, 0));
    let (x1, y1) = spec.center((spec.height - 1, spec.width - 1));
    GridSpec3 { bounds: [x0, x1, y0, y1, z0, z1], resolution: [spec.width, spec.height, levels] }
}

/// Full-model costmap: semantic mask times the distance mask around the
/// robot, weighted by the model's traversability.
pub fn full_costmap(
    semantic: &Grid<Option<u16>>,
    t_model: f64,
    robot: Cell,
    table: &SemanticTable,
    params: &NavParams,
) -> Result<Costmap> {
    let mask = semantic_mask(semantic, table)?;
    let weight = gaussian_weight(&semantic.spec, robot, params.variance)?;
    let t = pixel_traversability(&mask, &weight, t_model.clamp(0.0, 1.0), params.blend)?;
    Ok(costmap_from_traversability(&t, params.k, params.tau, Provenance::Full))
}
