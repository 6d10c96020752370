use std::fmt::Write as _;
use std::path::Path;

use super::binary::write_file;
use crate::error::{Error, Result};
use crate::field::{GridPrediction, LossBreakdown};
use crate::metrics::EvalReport;
use crate::nav::{Cell, Grid};
use crate::scene::{bins_to_normalized, denormalize_lab, lab_to_rgb, Point3};

/// Binary 8-bit PGM with `lo` as black and `hi` as white. The top image row
/// is the grid's last row so +y points up; non-finite values are black.
pub fn encode_pgm(grid: &Grid<f64>, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(hi > lo) {
        return Err(Error::input(format!("PGM range [{lo}, {hi}] is empty")));
    }
    let spec = grid.spec;
    let mut out = format!("P5\n{} {}\n255\n", spec.width, spec.height).into_bytes();
    for row in (0..spec.height).rev() {
        for col in 0..spec.width {
            let v = *grid.get((row, col));
            let px = if v.is_finite() { (255.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8 } else { 0 };
            out.push(px);
        }
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, grid: &Grid<f64>, lo: f64, hi: f64) -> Result<()> {
    write_file(path, &encode_pgm(grid, lo, hi)?)
}

/// ASCII PLY with one colored vertex per point.
pub fn encode_ply(points: &[(Point3, [u8; 3])]) -> String {
    let mut s = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        points.len()
    );
    for (p, [r, g, b]) in points {
        let _ = writeln!(s, "{} {} {} {r} {g} {b}", p.x as f32, p.y as f32, p.z as f32);
    }
    s
}

/// Occupied lattice points (`sdf ≤ 0`) colored by their predicted bin centers.
pub fn field_point_cloud(field: &GridPrediction) -> Vec<(Point3, [u8; 3])> {
    field
        .points
        .iter()
        .zip(&field.predictions)
        .filter(|(_, p)| p.sdf <= 0.0)
        .map(|(q, p)| {
            let lab = denormalize_lab(bins_to_normalized(p.color_bins())).clamped();
            let rgb = lab_to_rgb(lab).map_or([0; 3], |c| c.rgb);
            (*q, rgb)
        })
        .collect()
}

pub fn write_ply(path: &Path, points: &[(Point3, [u8; 3])]) -> Result<()> {
    write_file(path, encode_ply(points).as_bytes())
}

/// Horizontal slice `k` of a per-point field quantity.
pub fn field_slice(field: &GridPrediction, k: usize, value: impl Fn(usize) -> f64) -> Result<Vec<Vec<f64>>> {
    let [nx, ny, nz] = field.spec.resolution;
    if k >= nz {
        return Err(Error::input(format!("slice {k} outside {nz} levels")));
    }
    Ok((0..ny).map(|j| (0..nx).map(|i| value(field.index(i, j, k))).collect()).collect())
}

pub const LOSS_LOG_HEADER: &str = "step,sdf,eikonal,confidence,semantics,color,traversability,total";

pub fn loss_log_csv(steps: &[LossBreakdown]) -> String {
    let mut s = format!("{LOSS_LOG_HEADER}\n");
    for (i, l) in steps.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{}",
            l.sdf, l.eikonal, l.confidence, l.semantics, l.color, l.traversability, l.total
        );
    }
    s
}

pub fn traversability_csv(scores: &[(u32, f64)]) -> String {
    let mut s = String::from("frame_id,score\n");
    for (id, t) in scores {
        let _ = writeln!(s, "{id},{t}");
    }
    s
}

pub fn path_csv(cells: &[Cell], accumulated: &[f64]) -> String {
    let mut s = String::from("row,col,cost\n");
    for ((r, c), acc) in cells.iter().zip(accumulated) {
        let _ = writeln!(s, "{r},{c},{acc}");
    }
    s
}

/// Every cell as `row,col,cost`; impassable cells read `inf`.
pub fn costmap_csv(cost: &Grid<f64>) -> String {
    let mut s = String::from("row,col,cost\n");
    for (i, c) in cost.data.iter().enumerate() {
        let (r, col) = cost.spec.cell_of_index(i);
        let _ = writeln!(s, "{r},{col},{c}");
    }
    s
}

/// Parses [`path_csv`] output back into cells and accumulated costs.
pub fn parse_path_csv(text: &str) -> Result<(Vec<Cell>, Vec<f64>)> {
    let mut cells = Vec::new();
    let mut costs = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = || Error::input(format!("path CSV line {}: malformed row {line:?}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad());
        }
        cells.push((f[0].parse().map_err(|_| bad())?, f[1].parse().map_err(|_| bad())?));
        costs.push(f[2].parse().map_err(|_| bad())?);
    }
    Ok((cells, costs))
}

/// Flat `key = value` lines; metrics of disabled heads are omitted.
pub fn eval_report_text(report: &EvalReport) -> String {
    let mut rows: Vec<(&str, f64)> = vec![("samples_used", report.n_samples_used as f64)];
    if let Some(c) = &report.color {
        rows.extend([("color_mse", c.mse), ("color_mae", c.mae), ("color_psnr", c.psnr)]);
    }
    if let Some(g) = &report.geometry {
        rows.extend([("hausdorff", g.hausdorff), ("chamfer", g.chamfer)]);
    }
    if let Some(m) = &report.semantic {
        rows.extend([
            ("semantic_accuracy", m.accuracy),
            ("semantic_precision", m.precision),
            ("semantic_recall", m.recall),
            ("semantic_f1", m.f1),
            ("semantic_iou", m.iou),
        ]);
    }
    if let Some(e) = report.confidence_ece {
        rows.push(("confidence_ece", e));
    }
    let mut s = String::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

/// One row per evaluated frame; empty fields mark absent metrics.
pub fn eval_report_csv(report: &EvalReport, frame_ids: &[u32]) -> String {
    let mut s = String::from("frame_id,pool,valid,hausdorff,chamfer,semantic_accuracy\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for (f, id) in report.per_frame.iter().zip(frame_ids) {
        let _ = writeln!(
            s,
            "{id},{},{},{},{},{}",
            f.n_pool,
            f.n_valid,
            opt(f.geometry.map(|g| g.hausdorff)),
            opt(f.geometry.map(|g| g.chamfer)),
            opt(f.semantic_accuracy)
        );
    }
    s
}
