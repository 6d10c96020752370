use serde::{Deserialize, Serialize};

use super::grid::{Cell, Grid, GridSpec};
use crate::error::{Error, Result};
use crate::scene::SemanticTable;

/// Cost of a cell that the planner must not enter.
pub const IMPASSABLE: f64 = f64::INFINITY;

/// How the model's scalar traversability is spread over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceBlend {
    /// `D = 1 + W·(t − 1)`: the prediction near the robot, 1 far away.
    Interpolate,
    /// `D = W·t`.
    Product,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavParams {
    pub cell_size: f64,
    /// Cost slope over `1 − T`.
    pub k: f64,
    /// Traversability below which a cell is impassable.
    pub tau: f64,
    /// Cost per unit slope above `slope_free`.
    pub k_elevation: f64,
    pub slope_free: f64,
    /// Largest step or obstacle height, in meters.
    pub max_step: f64,
    /// Gaussian variance in m².
    pub variance: f64,
    pub blend: DistanceBlend,
}

impl Default for NavParams {
    fn default() -> Self {
        NavParams {
            cell_size: 0.1,
            k: 10.0,
            tau: 0.1,
            k_elevation: 20.0,
            slope_free: 0.3,
            max_step: 0.25,
            variance: 6.0,
            blend: DistanceBlend::Interpolate,
        }
    }
}

impl NavParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.cell_size, self.variance, self.max_step];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config("cell_size, variance and max_step must be positive"));
        }
        let nonneg = [self.k, self.tau, self.k_elevation, self.slope_free];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("k, tau, k_elevation and slope_free must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Full,
    SemanticOnly,
    ElevationOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Costmap {
    pub cost: Grid<f64>,
    pub provenance: Provenance,
}

impl Costmap {
    pub fn spec(&self) -> &GridSpec {
        &self.cost.spec
    }

    pub fn cost(&self, cell: Cell) -> f64 {
        *self.cost.get(cell)
    }

    pub fn passable(&self, cell: Cell) -> bool {
        self.cost(cell).is_finite()
    }

    /// Smallest finite cost, if any cell is passable.
    pub fn min_cost(&self) -> Option<f64> {
        self.cost.data.iter().copied().filter(|c| c.is_finite()).reduce(f64::min)
    }
}

/// Per-cell base traversability; NULL cells score 0.
pub fn semantic_mask(semantic: &Grid<Option<u16>>, table: &SemanticTable) -> Result<Grid<f64>> {
    let data = semantic
        .data
        .iter()
        .map(|id| match id {
            None => Ok(0.0),
            Some(c) => table
                .get(*c)
                .map(|class| class.base_traversability)
                .ok_or_else(|| Error::input(format!("semantic id {c} not in the class table"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid { spec: semantic.spec, data })
}

/// `exp(−d²/(2·variance))` with `d` in meters from the robot cell center.
pub fn gaussian_weight(spec: &GridSpec, robot: Cell, variance: f64) -> Result<Grid<f64>> {
    if !spec.contains(robot) {
        return Err(Error::input(format!("robot cell {robot:?} outside the {}×{} grid", spec.height, spec.width)));
    }
    if !(variance > 0.0) {
        return Err(Error::input("variance must be positive"));
    }
    let (rx, ry) = spec.center(robot);
    Ok(Grid::from_fn(*spec, |cell| {
        if cell == robot {
            return 1.0;
        }
        let (x, y) = spec.center(cell);
        let d2 = (x - rx).powi(2) + (y - ry).powi(2);
        (-d2 / (2.0 * variance)).exp()
    }))
}

/// Pixel-level traversability `sem · D(W, t)`.
pub fn pixel_traversability(sem: &Grid<f64>, weight: &Grid<f64>, t_model: f64, blend: DistanceBlend) -> Result<Grid<f64>> {
    if sem.spec != weight.spec {
        return Err(Error::input("semantic mask and distance weight use different grids"));
    }
    if !(0.0..=1.0).contains(&t_model) {
        return Err(Error::input(format!("model traversability {t_model} outside [0, 1]")));
    }
    let data = sem
        .data
        .iter()
        .zip(&weight.data)
        .map(|(&s, &w)| {
            let d = match blend {
                DistanceBlend::Interpolate => 1.0 + w * (t_model - 1.0),
                DistanceBlend::Product => w * t_model,
            };
            s * d
        })
        .collect();
    Ok(Grid { spec: sem.spec, data })
}

pub fn costmap_from_traversability(t: &Grid<f64>, k: f64, tau: f64, provenance: Provenance) -> Costmap {
    Costmap {
        cost: t.map(|&v| if v < tau { IMPASSABLE } else { 1.0 + k * (1.0 - v) }),
        provenance,
    }
}

pub fn semantic_costmap(semantic: &Grid<Option<u16>>, table: &SemanticTable, params: &NavParams) -> Result<Costmap> {
    let mask = semantic_mask(semantic, table)?;
    Ok(costmap_from_traversability(&mask, params.k, params.tau, Provenance::SemanticOnly))
}

/// Cost from surface heights. A cell is impassable when it stands more than
/// `max_step` above `ground` or differs from a neighbor by more than
/// `max_step`; otherwise it costs `1 + k_e·max(0, slope − slope_free)` with
/// the steepest neighbor slope.
pub fn elevation_costmap(height: &Grid<f64>, ground: &Grid<f64>, params: &NavParams) -> Result<Costmap> {
    if height.spec != ground.spec {
        return Err(Error::input("height and ground grids differ"));
    }
    let spec = height.spec;
    let cost = Grid::from_fn(spec, |cell| {
        let h = *height.get(cell);
        if h - ground.get(cell) > params.max_step {
            return IMPASSABLE;
        }
        let mut slope: f64 = 0.0;
        for (n, len) in spec.neighbors(cell) {
            let dh = (height.get(n) - h).abs();
            if dh > params.max_step {
                return IMPASSABLE;
            }
            slope = slope.max(dh / (len * spec.cell_size));
        }
        1.0 + params.k_elevation * (slope - params.slope_free).max(0.0)
    });
    Ok(Costmap { cost, provenance: Provenance::ElevationOnly })
}
