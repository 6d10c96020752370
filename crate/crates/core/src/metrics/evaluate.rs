use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scores::{
    classification_metrics, color_from_errors, ece, geometry_metrics, ClassificationMetrics, ColorMetrics,
    GeometryMetrics, ECE_BINS,
};
use crate::error::{Error, Result};
use crate::field::{FieldModel, FrameFeatures, FrameInput, HeadEnable};
use crate::field::tape::Real;
use crate::scene::{bins_to_normalized, FieldPrediction, Point3, QuerySample, SampleKind};

/// Query points drawn per frame for evaluation.
pub const EVAL_POOL: usize = 30_000;

/// Indices whose prediction lies on or inside the surface and, when
/// `require_semantic` is set, has a non-NULL semantic argmax.
pub fn filter_valid(preds: &[FieldPrediction], null_index: usize, require_semantic: bool) -> Vec<usize> {
    preds
        .iter()
        .enumerate()
        .filter(|(_, p)| p.sdf <= 0.0 && (!require_semantic || p.semantic_class() != null_index))
        .map(|(i, _)| i)
        .collect()
}

/// Produces predictions aligned with a frame's samples.
pub trait FieldPredictor {
    fn predict(&self, frame: usize, samples: &[QuerySample]) -> Result<Vec<FieldPrediction>>;
}

/// A trained model with its per-frame encodings.
pub struct ModelPredictor<'a, T> {
    pub model: &'a FieldModel<T>,
    pub features: Vec<FrameFeatures<T>>,
}

impl<'a, T: Real> ModelPredictor<'a, T> {
    pub fn new(model: &'a FieldModel<T>, inputs: &[&FrameInput<T>]) -> Result<Self> {
        let features = inputs.iter().map(|i| model.encode_frame(i)).collect::<Result<Vec<_>>>()?;
        Ok(ModelPredictor { model, features })
    }
}

impl<T: Real> FieldPredictor for ModelPredictor<'_, T> {
    fn predict(&self, frame: usize, samples: &[QuerySample]) -> Result<Vec<FieldPrediction>> {
        let features = self
            .features
            .get(frame)
            .ok_or_else(|| Error::input(format!("no encoded features for frame {frame}")))?;
        let positions: Vec<Point3> = samples.iter().map(|s| s.position).collect();
        Ok(self.model.predict(features, &positions))
    }
}

/// Echoes the labels back as one-hot predictions.
pub struct GroundTruthPredictor {
    pub n_classes: usize,
    pub color_bins: usize,
    pub traversability: Vec<f64>,
}

impl FieldPredictor for GroundTruthPredictor {
    fn predict(&self, frame: usize, samples: &[QuerySample]) -> Result<Vec<FieldPrediction>> {
        let one_hot = |k: usize, n: usize| -> Vec<f64> { (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect() };
        let t = self.traversability.get(frame).copied().unwrap_or(0.0);
        Ok(samples
            .iter()
            .map(|s| FieldPrediction {
                sdf: s.sdf,
                confidence: s.confidence,
                color_logits: s.color_bins.unwrap_or([0; 3]).map(|b| one_hot(b as usize, self.color_bins)),
                semantic_logits: one_hot(s.semantic.map_or(self.n_classes, |c| c as usize), self.n_classes + 1),
                traversability: t,
            })
            .collect())
    }
}

/// Labeled samples of one evaluation frame.
#[derive(Clone, Debug)]
pub struct EvalFrame {
    pub samples: Vec<QuerySample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub pool: usize,
    pub seed: u64,
    pub n_classes: usize,
    /// Heads whose metrics are reported; disabled heads are absent.
    pub heads: HeadEnable,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { pool: EVAL_POOL, seed: 0, n_classes: 9, heads: HeadEnable::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub color: Option<ColorMetrics>,
    /// Mean over frames with a nonempty filtered set.
    pub geometry: Option<GeometryMetrics>,
    /// Classes include NULL as its own id.
    pub semantic: Option<ClassificationMetrics>,
    pub confidence_ece: Option<f64>,
    pub n_samples_used: usize,
    pub per_frame: Vec<FrameReport>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameReport {
    pub n_pool: usize,
    pub n_valid: usize,
    pub geometry: Option<GeometryMetrics>,
    pub semantic_accuracy: Option<f64>,
}

fn pool(samples: &[QuerySample], k: usize, rng: &mut ChaCha8Rng) -> Vec<QuerySample> {
    if samples.len() <= k {
        return samples.to_vec();
    }
    let mut idx = rand::seq::index::sample(rng, samples.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| samples[i].clone()).collect()
}

/// Runs the filtering protocol and every metric over `frames`.
pub fn evaluate(predictor: &dyn FieldPredictor, frames: &[EvalFrame], opts: &EvalOptions) -> Result<EvalReport> {
    let null = opts.n_classes;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut color_pred, mut color_gt) = (Vec::new(), Vec::new());
    let (mut sem_pred, mut sem_gt) = (Vec::new(), Vec::new());
    let (mut conf_pred, mut conf_gt) = (Vec::new(), Vec::new());
    let mut report = EvalReport::default();
    let mut geometry = Vec::new();
    for (f, frame) in frames.iter().enumerate() {
        let samples = pool(&frame.samples, opts.pool, &mut rng);
        let preds = predictor.predict(f, &samples)?;
        if preds.len() != samples.len() {
            return Err(Error::input("predictor returned a misaligned prediction list"));
        }
        let keep = filter_valid(&preds, null, opts.heads.semantics);
        let mut fr = FrameReport { n_pool: samples.len(), n_valid: keep.len(), ..FrameReport::default() };
        let mut frame_hits = 0;
        for &i in &keep {
            let (p, s) = (&preds[i], &samples[i]);
            if let Some(gt_bins) = s.color_bins {
                color_pred.push(p.color_bins());
                color_gt.push(gt_bins);
            }
            let gt_class = s.semantic.map_or(null, |c| c as usize);
            frame_hits += usize::from(p.semantic_class() == gt_class);
            sem_pred.push(p.semantic_class());
            sem_gt.push(gt_class);
            conf_pred.push(p.confidence);
            conf_gt.push(s.confidence);
        }
        if !keep.is_empty() {
            fr.semantic_accuracy = Some(frame_hits as f64 / keep.len() as f64);
        }
        let predicted: Vec<Point3> = keep.iter().map(|&i| samples[i].position).collect();
        let truth: Vec<Point3> =
            samples.iter().filter(|s| s.kind != SampleKind::Free).map(|s| s.position).collect();
        fr.geometry = geometry_metrics(&predicted, &truth);
        if let Some(g) = fr.geometry {
            geometry.push(g);
        }
        report.n_samples_used += keep.len();
        report.per_frame.push(fr);
    }
    if opts.heads.color && !color_pred.is_empty() {
        report.color = Some(color_means(&color_pred, &color_gt));
    }
    if opts.heads.sdf && !geometry.is_empty() {
        let n = geometry.len() as f64;
        report.geometry = Some(GeometryMetrics {
            hausdorff: geometry.iter().map(|g| g.hausdorff).sum::<f64>() / n,
            chamfer: geometry.iter().map(|g| g.chamfer).sum::<f64>() / n,
        });
    }
    if opts.heads.semantics {
        report.semantic = classification_metrics(&sem_pred, &sem_gt, null + 1);
    }
    if opts.heads.confidence {
        report.confidence_ece = ece(&conf_pred, &conf_gt, ECE_BINS);
    }
    Ok(report)
}

fn color_means(pred: &[[u8; 3]], gt: &[[u8; 3]]) -> ColorMetrics {
    let (mut se, mut ae) = (0.0, 0.0);
    for (p, g) in pred.iter().zip(gt) {
        let (p, g) = (bins_to_normalized(*p), bins_to_normalized(*g));
        for c in 0..3 {
            se += (p[c] - g[c]).powi(2);
            ae += (p[c] - g[c]).abs();
        }
    }
    let n = 3.0 * pred.len() as f64;
    color_from_errors(se / n, ae / n)
}
