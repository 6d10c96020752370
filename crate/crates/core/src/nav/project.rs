use super::grid::{Grid, GridSpec};
use crate::error::{Error, Result};
use crate::field::GridPrediction;
use crate::scene::Point3;

/// Planner-grid views of a predicted field.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedGrids {
    pub semantic: Grid<Option<u16>>,
    pub elevation: Grid<f64>,
}

fn argmax_class(logits: &[f64], null_index: usize) -> Option<u16> {
    let mut best: Option<usize> = None;
    for (i, &v) in logits.iter().enumerate() {
        if i != null_index && best.is_none_or(|b| v > logits[b]) {
            best = Some(i);
        }
    }
    best.map(|b| b as u16)
}

/// Collapses field samples into per-cell semantics and surface height.
///
/// Per column: elevation is the highest sample with `sdf ≤ 0`; semantics
/// come from the highest sample with `|sdf| ≤ cell_size` (falling back to
/// the highest `sdf ≤ 0` sample), taking the most likely non-NULL class.
/// Columns without any `sdf ≤ 0` sample are NULL at `ground_level`.
pub fn project_field_to_grids(
    field: &GridPrediction,
    spec: &GridSpec,
    null_index: usize,
    ground_level: f64,
) -> Result<ProjectedGrids> {
    spec.validate()?;
    let mut surface: Vec<Option<usize>> = vec![None; spec.len()];
    let mut near: Vec<Option<usize>> = vec![None; spec.len()];
    let higher = |slot: Option<usize>, i: usize| slot.is_none_or(|j| field.points[i].z > field.points[j].z);
    for (i, (p, pred)) in field.points.iter().zip(&field.predictions).enumerate() {
        let Some(cell) = spec.cell_at(p.x, p.y) else { continue };
        let c = spec.index(cell);
        if pred.sdf <= 0.0 && higher(surface[c], i) {
            surface[c] = Some(i);
        }
        if pred.sdf.abs() <= spec.cell_size && higher(near[c], i) {
            near[c] = Some(i);
        }
    }
    let mut semantic = Grid::filled(*spec, None);
    let mut elevation = Grid::filled(*spec, ground_level);
    for c in 0..spec.len() {
        let Some(top) = surface[c] else { continue };
        let cell = spec.cell_of_index(c);
        elevation.set(cell, field.points[top].z);
        let pick = near[c].unwrap_or(top);
        semantic.set(cell, argmax_class(&field.predictions[pick].semantic_logits, null_index));
    }
    Ok(ProjectedGrids { semantic, elevation })
}

/// Per cell, takes the projection from the nearest sensor (in the plane)
/// that observed a surface there.
pub fn merge_nearest(parts: &[(ProjectedGrids, Point3)]) -> Result<ProjectedGrids> {
    let Some((first, _)) = parts.first() else {
        return Err(Error::input("nothing to merge"));
    };
    let spec = first.semantic.spec;
    if parts.iter().any(|(p, _)| p.semantic.spec != spec || p.elevation.spec != spec) {
        return Err(Error::input("projections use different grids"));
    }
    let mut out = first.clone();
    for c in 0..spec.len() {
        let cell = spec.cell_of_index(c);
        let (x, y) = spec.center(cell);
        let dist = |o: &Point3| (o.x - x).hypot(o.y - y);
        let best = parts
            .iter()
            .filter(|(p, _)| p.semantic.get(cell).is_some())
            .min_by(|a, b| dist(&a.1).total_cmp(&dist(&b.1)))
            .or_else(|| parts.iter().min_by(|a, b| dist(&a.1).total_cmp(&dist(&b.1))))
            .expect("nonempty");
        out.semantic.set(cell, *best.0.semantic.get(cell));
        out.elevation.set(cell, *best.0.elevation.get(cell));
    }
    Ok(out)
}

/// Local ground estimate: the minimum height within `radius` cells.
pub fn ground_from_min_filter(height: &Grid<f64>, radius: usize) -> Grid<f64> {
    let spec = height.spec;
    Grid::from_fn(spec, |(row, col)| {
        let mut m = f64::INFINITY;
        for r in row.saturating_sub(radius)..=(row + radius).min(spec.height - 1) {
            for c in col.saturating_sub(radius)..=(col + radius).min(spec.width - 1) {
                m = m.min(*height.get((r, c)));
            }
        }
        m
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec3;
    use crate::scene::FieldPrediction;

    fn pred(sdf: f64, class: usize) -> FieldPrediction {
        let mut logits = vec![0.0; 10];
        logits[class] = 5.0;
        FieldPrediction {
            sdf,
            confidence: 1.0,
            color_logits: [vec![0.0; 16], vec![0.0; 16], vec![0.0; 16]],
            semantic_logits: logits,
            traversability: 0.5,
        }
    }

    #[test]
    fn flat_ground_projection() {
        // Analytic flat ground at z = 0 sampled on a lattice aligned with cell centers.
        let spec = GridSpec { origin: Point3::new(0.0, 0.0, 0.0), cell_size: 0.1, width: 4, height: 3 };
        let lattice = GridSpec3 { bounds: [0.05, 0.35, 0.05, 0.25, -0.2, 0.5], resolution: [4, 3, 8] };
        let points = lattice.points();
        let predictions = points.iter().map(|p| pred(p.z, 0)).collect();
        let field = GridPrediction { spec: lattice, points, predictions };
        let out = project_field_to_grids(&field, &spec, 9, -1.0).unwrap();
        for (&e, &s) in out.elevation.data.iter().zip(&out.semantic.data) {
            assert!(e.abs() <= spec.cell_size + 1e-12);
            assert_eq!(s, Some(0));
        }
        assert_eq!(out, project_field_to_grids(&field, &spec, 9, -1.0).unwrap());
    }

    #[test]
    fn empty_column_is_null() {
        let spec = GridSpec { origin: Point3::ZERO, cell_size: 0.1, width: 1, height: 1 };
        let lattice = GridSpec3 { bounds: [0.05, 0.05, 0.05, 0.05, 0.0, 1.0], resolution: [1, 1, 5] };
        let points = lattice.points();
        let predictions = points.iter().map(|_| pred(0.3, 9)).collect();
        let field = GridPrediction { spec: lattice, points, predictions };
        let out = project_field_to_grids(&field, &spec, 9, 0.0).unwrap();
        assert_eq!(out.semantic.data, vec![None]);
        assert_eq!(out.elevation.data, vec![0.0]);
    }

    #[test]
    fn null_logits_are_skipped() {
        assert_eq!(argmax_class(&[0.0, 2.0, 9.0], 2), Some(1));
    }

    #[test]
    fn min_filter() {
        let spec = GridSpec { origin: Point3::ZERO, cell_size: 1.0, width: 5, height: 1 };
        let h = Grid { spec, data: vec![0.0, 1.0, 1.0, 1.0, 1.0] };
        assert_eq!(ground_from_min_filter(&h, 1).data, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    }
}
