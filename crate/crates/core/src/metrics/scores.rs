use crate::label::SurfaceIndex;
use crate::scene::{bins_to_normalized, Point3};

pub const ECE_BINS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorMetrics {
    pub mse: f64,
    pub mae: f64,
    /// `+∞` when the MSE is zero.
    pub psnr: f64,
}

/// Errors between bin centers on normalized LAB, averaged over channels.
pub fn color_metrics(pred: &[[u8; 3]], gt: &[[u8; 3]]) -> Option<ColorMetrics> {
    if pred.is_empty() || pred.len() != gt.len() {
        return None;
    }
    let (mut se, mut ae) = (0.0, 0.0);
    for (p, g) in pred.iter().zip(gt) {
        let (p, g) = (bins_to_normalized(*p), bins_to_normalized(*g));
        for c in 0..3 {
            let d = p[c] - g[c];
            se += d * d;
            ae += d.abs();
        }
    }
    let n = 3.0 * pred.len() as f64;
    Some(color_from_errors(se / n, ae / n))
}

pub fn color_from_errors(mse: f64, mae: f64) -> ColorMetrics {
    let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() };
    ColorMetrics { mse, mae, psnr }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryMetrics {
    pub hausdorff: f64,
    pub chamfer: f64,
}

fn directed(from: &[Point3], to: &SurfaceIndex) -> (f64, f64) {
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for p in from {
        let d = to.nearest(*p).distance;
        max = max.max(d);
        sum += d;
    }
    (max, sum / from.len() as f64)
}

/// Symmetric Hausdorff and Chamfer (½ sum of directed means).
pub fn geometry_metrics(a: &[Point3], b: &[Point3]) -> Option<GeometryMetrics> {
    let ia = SurfaceIndex::build(a).ok()?;
    let ib = SurfaceIndex::build(b).ok()?;
    let (max_ab, mean_ab) = directed(a, &ib);
    let (max_ba, mean_ba) = directed(b, &ia);
    Some(GeometryMetrics { hausdorff: max_ab.max(max_ba), chamfer: 0.5 * (mean_ab + mean_ba) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub iou: f64,
}

/// Micro accuracy; macro precision, recall, F1 and IoU over classes that
/// occur in `gt`.
pub fn classification_metrics(pred: &[usize], gt: &[usize], n_classes: usize) -> Option<ClassificationMetrics> {
    if pred.is_empty() || pred.len() != gt.len() || pred.iter().chain(gt).any(|&c| c >= n_classes) {
        return None;
    }
    let mut tp = vec![0usize; n_classes];
    let mut pred_count = vec![0usize; n_classes];
    let mut gt_count = vec![0usize; n_classes];
    for (&p, &g) in pred.iter().zip(gt) {
        pred_count[p] += 1;
        gt_count[g] += 1;
        if p == g {
            tp[p] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let present: Vec<usize> = (0..n_classes).filter(|&c| gt_count[c] > 0).collect();
    let k = present.len() as f64;
    let (mut precision, mut recall, mut f1, mut iou) = (0.0, 0.0, 0.0, 0.0);
    for &c in &present {
        let p = ratio(tp[c], pred_count[c]);
        let r = ratio(tp[c], gt_count[c]);
        precision += p;
        recall += r;
        f1 += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        iou += ratio(tp[c], pred_count[c] + gt_count[c] - tp[c]);
    }
    Some(ClassificationMetrics {
        accuracy: ratio(tp.iter().sum(), pred.len()),
        precision: precision / k,
        recall: recall / k,
        f1: f1 / k,
        iou: iou / k,
    })
}

/// Expected calibration error for a continuous target: per equal-width bin
/// of predicted confidence, the gap between mean prediction and mean target,
/// weighted by bin occupancy.
pub fn ece(pred: &[f64], gt: &[f64], n_bins: usize) -> Option<f64> {
    if pred.is_empty() || pred.len() != gt.len() || n_bins == 0 {
        return None;
    }
    let mut count = vec![0usize; n_bins];
    let mut sum_pred = vec![0.0; n_bins];
    let mut sum_gt = vec![0.0; n_bins];
    for (&p, &g) in pred.iter().zip(gt) {
        let b = ((p.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        count[b] += 1;
        sum_pred[b] += p;
        sum_gt[b] += g;
    }
    let n = pred.len() as f64;
    Some(
        (0..n_bins)
            .filter(|&b| count[b] > 0)
            .map(|b| (count[b] as f64 / n) * ((sum_pred[b] - sum_gt[b]) / count[b] as f64).abs())
            .sum(),
    )
}
