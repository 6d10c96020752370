use ndarray::Array2;

use super::model::QueryVars;
use super::tape::{Real, Tape, Var};
use super::{ModelConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::scene::{FieldPrediction, QuerySample};

/// Unweighted loss components and their weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub sdf: f64,
    pub eikonal: f64,
    pub confidence: f64,
    pub semantics: f64,
    pub color: f64,
    pub traversability: f64,
}

impl LossBreakdown {
    /// Components in λ order.
    pub fn components(&self) -> [f64; 6] {
        [self.sdf, self.eikonal, self.confidence, self.semantics, self.color, self.traversability]
    }

    pub fn from_components(c: [f64; 6], cfg: &TrainConfig) -> Self {
        let enabled = enabled_terms(cfg);
        let total = (0..6).filter(|&i| enabled[i]).map(|i| cfg.lambda[i] * c[i]).sum();
        LossBreakdown {
            total,
            sdf: c[0],
            eikonal: c[1],
            confidence: c[2],
            semantics: c[3],
            color: c[4],
            traversability: c[5],
        }
    }

    /// Componentwise mean.
    pub fn mean(items: &[LossBreakdown]) -> LossBreakdown {
        let n = items.len().max(1) as f64;
        let mut acc = [0.0; 7];
        for it in items {
            let c = it.components();
            acc[0] += it.total;
            for i in 0..6 {
                acc[i + 1] += c[i];
            }
        }
        LossBreakdown {
            total: acc[0] / n,
            sdf: acc[1] / n,
            eikonal: acc[2] / n,
            confidence: acc[3] / n,
            semantics: acc[4] / n,
            color: acc[5] / n,
            traversability: acc[6] / n,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.components().iter().all(|c| c.is_finite())
    }
}

/// Which of the six loss terms are active.
pub(crate) fn enabled_terms(cfg: &TrainConfig) -> [bool; 6] {
    let h = cfg.heads;
    [h.sdf, h.sdf, h.confidence, h.semantics, h.color, h.traversability]
}

pub(crate) fn semantic_target(sample: &QuerySample, model: &ModelConfig) -> Result<usize> {
    match sample.semantic {
        None => Ok(model.n_classes),
        Some(c) if (c as usize) < model.n_classes => Ok(c as usize),
        Some(c) => Err(Error::input(format!("semantic id {c} outside the model's {} classes", model.n_classes))),
    }
}

fn confidence_weight(gt: f64, cfg: &TrainConfig) -> f64 {
    if gt == 1.0 {
        cfg.alpha
    } else {
        cfg.beta
    }
}

fn column<T: Real>(values: impl Iterator<Item = f64>) -> Array2<T> {
    let v: Vec<T> = values.map(T::lit).collect();
    let n = v.len();
    Array2::from_shape_vec((n, 1), v).expect("column")
}

/// Adds the loss terms to `tape`; returns the total node and the breakdown.
pub(crate) fn build_loss<T: Real>(
    tape: &mut Tape<T>,
    q: &QueryVars,
    traversability: Var,
    batch: &[QuerySample],
    traversability_gt: f64,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(Var, LossBreakdown)> {
    if batch.is_empty() {
        return Err(Error::input("loss needs a nonempty batch"));
    }
    let n = batch.len() as f64;
    let enabled = enabled_terms(cfg);
    let mut terms: [Option<Var>; 6] = [None; 6];
    if enabled[0] {
        let s = model.s_max;
        let target = column(batch.iter().map(|b| b.sdf.clamp(-s, s)));
        terms[0] = Some(tape.huber_mean(q.sdf.expect("sdf head"), target, T::lit(cfg.huber_delta)));
        let norm = q.gradient_norm.expect("gradient requested");
        let ones = Array2::ones((batch.len(), 1));
        let w = Array2::from_elem((batch.len(), 1), T::lit(1.0 / n));
        terms[1] = Some(tape.weighted_sq_err(norm, ones, w));
    }
    if enabled[2] {
        let target = column(batch.iter().map(|b| b.confidence));
        let w = column(batch.iter().map(|b| confidence_weight(b.confidence, cfg) / n));
        terms[2] = Some(tape.weighted_sq_err(q.confidence.expect("confidence head"), target, w));
    }
    if enabled[3] {
        let targets = batch.iter().map(|b| semantic_target(b, model)).collect::<Result<Vec<_>>>()?;
        let w = vec![T::lit(1.0 / n); batch.len()];
        terms[3] = Some(tape.softmax_ce(q.semantics.expect("semantic head"), targets, w));
    }
    if enabled[4] {
        let valid = batch.iter().filter(|b| b.color_bins.is_some()).count();
        let logits = q.color.expect("color head");
        let bins = model.color_bins;
        let mut sum: Option<Var> = None;
        for ch in 0..3 {
            let targets: Vec<usize> = batch.iter().map(|b| b.color_bins.map_or(0, |c| c[ch] as usize)).collect();
            if targets.iter().any(|&t| t >= bins) {
                return Err(Error::input("color bin outside the model's range"));
            }
            let w: Vec<T> = batch
                .iter()
                .map(|b| if b.color_bins.is_some() { T::lit(1.0 / valid as f64) } else { T::zero() })
                .collect();
            let slice = tape.slice_cols(logits, ch * bins, bins);
            let ce = tape.softmax_ce(slice, targets, w);
            sum = Some(match sum {
                Some(s) => tape.add(s, ce),
                None => ce,
            });
        }
        terms[4] = sum;
    }
    if enabled[5] {
        let target = Array2::from_elem((1, 1), T::lit(traversability_gt));
        terms[5] = Some(tape.weighted_sq_err(traversability, target, Array2::ones((1, 1))));
    }
    let mut components = [0.0; 6];
    let mut total: Option<Var> = None;
    for i in 0..6 {
        if let Some(v) = terms[i] {
            components[i] = tape.scalar(v).to_f64_lossy();
            let weighted = tape.scale(v, T::lit(cfg.lambda[i]));
            total = Some(match total {
                Some(t) => tape.add(t, weighted),
                None => weighted,
            });
        }
    }
    let total = total.unwrap_or_else(|| tape.leaf(Array2::zeros((1, 1))));
    let mut breakdown = LossBreakdown::from_components(components, cfg);
    breakdown.total = tape.scalar(total).to_f64_lossy();
    Ok((total, breakdown))
}

fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|&l| (l - m).exp()).sum();
    m + z.ln() - logits[target]
}

/// Loss from materialized predictions; `gradient_norms` holds `‖∇sdf‖`
/// per sample.
pub fn loss_from_predictions(
    preds: &[FieldPrediction],
    gradient_norms: &[f64],
    batch: &[QuerySample],
    traversability_gt: f64,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<LossBreakdown> {
    if batch.is_empty() || preds.len() != batch.len() || gradient_norms.len() != batch.len() {
        return Err(Error::input("predictions, gradient norms and batch must be nonempty and aligned"));
    }
    let n = batch.len() as f64;
    let (s, d) = (model.s_max, cfg.huber_delta);
    let mut c = [0.0; 6];
    let valid = batch.iter().filter(|b| b.color_bins.is_some()).count();
    for ((p, g), b) in preds.iter().zip(gradient_norms).zip(batch) {
        let r = (p.sdf - b.sdf.clamp(-s, s)).abs();
        c[0] += if r <= d { 0.5 * r * r } else { d * (r - 0.5 * d) } / n;
        c[1] += (g - 1.0).powi(2) / n;
        c[2] += confidence_weight(b.confidence, cfg) * (p.confidence - b.confidence).powi(2) / n;
        c[3] += cross_entropy(&p.semantic_logits, semantic_target(b, model)?) / n;
        if let Some(bins) = b.color_bins {
            for ch in 0..3 {
                c[4] += cross_entropy(&p.color_logits[ch], bins[ch] as usize) / valid as f64;
            }
        }
    }
    c[5] = (preds[0].traversability - traversability_gt).powi(2);
    Ok(LossBreakdown::from_components(c, cfg))
}
