use std::collections::HashMap;

use ndarray::{Array2, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{build_loss, LossBreakdown};
use super::model::{FieldModel, FrameInput, QueryHeads};
use super::tape::{Real, Tape};
use super::{ModelConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::audio::MelConfig;
use crate::label::LabeledFrame;
use crate::scene::{Frame, Point3, QuerySample};

/// One labeled frame prepared for training.
#[derive(Clone, Debug)]
pub struct TrainingFrame<T> {
    pub input: FrameInput<T>,
    pub samples: Vec<QuerySample>,
    pub traversability: f64,
}

impl<T: Real> TrainingFrame<T> {
    pub fn from_labeled(frame: &Frame, labels: &LabeledFrame, mel: &MelConfig) -> Result<Self> {
        if frame.id != labels.frame_id {
            return Err(Error::input(format!("labels for frame {} paired with frame {}", labels.frame_id, frame.id)));
        }
        Ok(TrainingFrame {
            input: FrameInput::from_frame(frame, mel)?,
            samples: labels.samples.clone(),
            traversability: labels.traversability,
        })
    }

    pub fn cast<U: Real>(&self) -> TrainingFrame<U> {
        TrainingFrame { input: self.input.cast(), samples: self.samples.clone(), traversability: self.traversability }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub steps: Vec<LossBreakdown>,
    /// Mean training loss per epoch.
    pub epochs: Vec<LossBreakdown>,
    /// Validation loss per epoch; empty without validation frames.
    pub validation: Vec<LossBreakdown>,
    /// Epoch whose parameters were returned, when validation selected them.
    pub best_epoch: Option<usize>,
}

/// Adam optimizer state.
pub struct Adam<T> {
    m: HashMap<usize, Array2<T>>,
    v: HashMap<usize, Array2<T>>,
    step: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl<T: Real> Adam<T> {
    pub fn new(cfg: &TrainConfig) -> Self {
        Adam {
            m: HashMap::new(),
            v: HashMap::new(),
            step: 0,
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    pub fn apply(&mut self, model: &mut FieldModel<T>, grads: &HashMap<usize, Array2<T>>) {
        self.step += 1;
        let lr_t = self.lr * (1.0 - self.beta2.powi(self.step)).sqrt() / (1.0 - self.beta1.powi(self.step));
        let (b1, b2, eps, lr_t) = (T::lit(self.beta1), T::lit(self.beta2), T::lit(self.eps), T::lit(lr_t));
        let mut ids: Vec<usize> = grads.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            let tensor = &mut model.params_mut().tensors_mut()[id];
            if !tensor.trainable {
                continue;
            }
            let g = &grads[&id];
            let m = self.m.entry(id).or_insert_with(|| Array2::zeros(g.raw_dim()));
            let v = self.v.entry(id).or_insert_with(|| Array2::zeros(g.raw_dim()));
            Zip::from(&mut tensor.value).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                *p = *p - lr_t * *m / (v.sqrt() + eps);
            });
        }
    }
}

fn positions(batch: &[QuerySample]) -> Vec<Point3> {
    batch.iter().map(|s| s.position).collect()
}

fn query_heads(cfg: &TrainConfig) -> QueryHeads {
    let h = cfg.heads;
    QueryHeads {
        sdf: h.sdf,
        confidence: h.confidence,
        color: h.color,
        semantics: h.semantics,
        gradient: h.sdf,
    }
}

/// Loss and parameter gradients for one frame and batch.
pub fn loss_and_gradients<T: Real>(
    model: &FieldModel<T>,
    frame: &TrainingFrame<T>,
    batch: &[QuerySample],
    cfg: &TrainConfig,
    dropout: Option<&mut ChaCha8Rng>,
) -> Result<(LossBreakdown, HashMap<usize, Array2<T>>)> {
    let mut tape = Tape::new();
    let fv = model.frame_graph(&mut tape, &frame.input)?;
    let q = model.query_graph(&mut tape, fv.trunk_offset, &positions(batch), query_heads(cfg), dropout);
    let (total, breakdown) =
        build_loss(&mut tape, &q, fv.traversability, batch, frame.traversability, model.config(), cfg)?;
    Ok((breakdown, tape.backward(total)))
}

/// Loss without gradients or dropout.
pub fn evaluate_loss<T: Real>(
    model: &FieldModel<T>,
    frame: &TrainingFrame<T>,
    batch: &[QuerySample],
    cfg: &TrainConfig,
) -> Result<LossBreakdown> {
    let mut tape = Tape::new();
    let fv = model.frame_graph(&mut tape, &frame.input)?;
    let q = model.query_graph(&mut tape, fv.trunk_offset, &positions(batch), query_heads(cfg), None);
    Ok(build_loss(&mut tape, &q, fv.traversability, batch, frame.traversability, model.config(), cfg)?.1)
}

fn draw_batch(samples: &[QuerySample], k: usize, rng: &mut ChaCha8Rng) -> Vec<QuerySample> {
    if samples.len() <= k {
        return samples.to_vec();
    }
    rand::seq::index::sample(rng, samples.len(), k).into_iter().map(|i| samples[i].clone()).collect()
}

/// Trains a freshly initialized model.
///
/// Each epoch visits every training frame once in a seeded order, one
/// optimizer step per frame. With validation frames, the parameters with the
/// lowest mean validation loss are returned; otherwise the final ones.
pub fn train<T: Real>(
    model_cfg: &ModelConfig,
    train_frames: &[TrainingFrame<T>],
    val_frames: &[TrainingFrame<T>],
    cfg: &TrainConfig,
) -> Result<(FieldModel<T>, TrainReport)> {
    cfg.validate()?;
    if train_frames.is_empty() {
        return Err(Error::input("training split is empty"));
    }
    if let Some(i) = train_frames.iter().chain(val_frames).position(|f| f.samples.is_empty()) {
        return Err(Error::input(format!("frame {i} has no labeled samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = FieldModel::<T>::new(model_cfg.clone(), rng.random())?;
    let mut adam = Adam::new(cfg);
    let val_batches: Vec<Vec<QuerySample>> =
        val_frames.iter().map(|f| draw_batch(&f.samples, cfg.batch_queries, &mut rng)).collect();
    let mut report = TrainReport::default();
    let mut best: Option<(f64, FieldModel<T>)> = None;
    let mut order: Vec<usize> = (0..train_frames.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let start = report.steps.len();
        for &f in &order {
            let frame = &train_frames[f];
            let batch = draw_batch(&frame.samples, cfg.batch_queries, &mut rng);
            let mut dropout_rng = ChaCha8Rng::seed_from_u64(rng.random());
            let (loss, grads) = loss_and_gradients(&model, frame, &batch, cfg, Some(&mut dropout_rng))?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "training diverged at epoch {epoch}, step {}, frame {f}: {loss:?}",
                    report.steps.len()
                )));
            }
            adam.apply(&mut model, &grads);
            report.steps.push(loss);
        }
        report.epochs.push(LossBreakdown::mean(&report.steps[start..]));
        if !val_frames.is_empty() {
            let losses = val_frames
                .iter()
                .zip(&val_batches)
                .map(|(f, b)| evaluate_loss(&model, f, b, cfg))
                .collect::<Result<Vec<_>>>()?;
            let val = LossBreakdown::mean(&losses);
            report.validation.push(val);
            if val.total.is_finite() && best.as_ref().is_none_or(|(b, _)| val.total < *b) {
                best = Some((val.total, model.clone()));
                report.best_epoch = Some(epoch);
            }
        }
    }
    if !model.params().is_finite() {
        return Err(Error::Numeric("training produced non-finite parameters".into()));
    }
    Ok((best.map_or(model, |(_, m)| m), report))
}
