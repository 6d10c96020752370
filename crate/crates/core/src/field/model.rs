use std::f64::consts::PI;

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{build_layout, Layout, Linear, ParamStore, TNetIds, Tensor};
use super::tape::{ConvGeom, Real, Tape, Var};
use super::ModelConfig;
use crate::audio::{MelConfig, MelStack};
use crate::error::{Error, Result};
use crate::scene::{normalize_lab, FieldPrediction, Frame, Point3, LEG_COUNT};

/// Rows of queries evaluated per tape in prediction mode.
pub const PREDICT_CHUNK: usize = 2048;

/// Per-frame network inputs, prepared once.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameInput<T> {
    /// `N × 6`: centered, unit-radius xyz followed by normalized LAB.
    pub points: Array2<T>,
    /// `(n_mels·T) × legs`: log-Mel values, rows ordered band-major.
    pub mel: Array2<T>,
    pub mel_bands: usize,
    pub mel_frames: usize,
}

impl<T: Real> FrameInput<T> {
    pub fn from_frame(frame: &Frame, mel: &MelConfig) -> Result<Self> {
        let cfg = MelConfig { sample_rate: frame.sample_rate, ..*mel };
        let stack = MelStack::from_waveforms(&frame.audio, &cfg)?;
        let xyz: Vec<Point3> = frame.cloud.points.iter().map(|p| p.position).collect();
        let lab: Vec<[f64; 3]> = frame.cloud.points.iter().map(|p| normalize_lab(p.color)).collect();
        Self::new(&xyz, &lab, &stack)
    }

    pub fn new(xyz: &[Point3], lab: &[[f64; 3]], stack: &MelStack) -> Result<Self> {
        if xyz.is_empty() {
            return Err(Error::input("cannot encode an empty point cloud"));
        }
        if xyz.len() != lab.len() {
            return Err(Error::input("point and color counts differ"));
        }
        let n = xyz.len() as f64;
        let centroid = xyz.iter().fold(Point3::ZERO, |acc, &p| acc + p) * (1.0 / n);
        let radius = xyz.iter().map(|p| p.distance(centroid)).fold(0.0, f64::max);
        let scale = if radius > 0.0 { 1.0 / radius } else { 1.0 };
        let mut points = Array2::zeros((xyz.len(), 6));
        for (i, (p, c)) in xyz.iter().zip(lab).enumerate() {
            let q = (*p - centroid) * scale;
            let row = [q.x, q.y, q.z, c[0], c[1], c[2]];
            for (j, v) in row.into_iter().enumerate() {
                points[[i, j]] = T::lit(v);
            }
        }
        let (legs, bands, frames) = stack.shape();
        if legs != LEG_COUNT {
            return Err(Error::input(format!("expected {LEG_COUNT} audio channels, got {legs}")));
        }
        let mut mel = Array2::zeros((bands * frames, legs));
        for leg in 0..legs {
            for b in 0..bands {
                for t in 0..frames {
                    mel[[b * frames + t, leg]] = T::lit(stack.0[[leg, b, t]] as f64);
                }
            }
        }
        Ok(FrameInput { points, mel, mel_bands: bands, mel_frames: frames })
    }

    pub fn cast<U: Real>(&self) -> FrameInput<U> {
        FrameInput {
            points: self.points.mapv(|v| U::lit(v.to_f64_lossy())),
            mel: self.mel.mapv(|v| U::lit(v.to_f64_lossy())),
            mel_bands: self.mel_bands,
            mel_frames: self.mel_frames,
        }
    }
}

/// Frame-level encoder outputs reused across queries.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameFeatures<T> {
    pub cloud: Array2<T>,
    pub audio: Array2<T>,
    /// Frame contribution to the first trunk layer, including its bias.
    pub trunk_offset: Array2<T>,
    pub traversability: f64,
}

/// Which query heads to build on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct QueryHeads {
    pub sdf: bool,
    pub confidence: bool,
    pub color: bool,
    pub semantics: bool,
    /// Propagate query tangents to get `∇sdf`.
    pub gradient: bool,
}

impl QueryHeads {
    pub const ALL: QueryHeads = QueryHeads { sdf: true, confidence: true, color: true, semantics: true, gradient: false };
}

pub(crate) struct FrameVars {
    pub cloud: Var,
    pub audio: Var,
    pub trunk_offset: Var,
    pub traversability: Var,
}

#[derive(Default)]
pub(crate) struct QueryVars {
    pub sdf: Option<Var>,
    pub confidence: Option<Var>,
    pub color: Option<Var>,
    pub semantics: Option<Var>,
    /// `∂sdf/∂x`, `∂sdf/∂y`, `∂sdf/∂z`, each `N × 1`.
    pub gradient: Option<[Var; 3]>,
    pub gradient_norm: Option<Var>,
}

const NORM_EPS: f64 = 1e-12;

/// The multimodal implicit field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldModel<T> {
    config: ModelConfig,
    layout: Layout,
    params: ParamStore<T>,
}

impl<T: Real> FieldModel<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (layout, tensors) = build_layout(&config, seed);
        Ok(FieldModel { config, layout, params: ParamStore::from_tensors(tensors).cast() })
    }

    /// Rebuilds a model from stored tensors, checking names and shapes.
    pub fn from_params(config: ModelConfig, params: ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let (layout, reference) = build_layout(&config, 0);
        if reference.len() != params.len() {
            return Err(Error::input(format!(
                "model expects {} tensors, got {}",
                reference.len(),
                params.len()
            )));
        }
        for (want, got) in reference.iter().zip(params.tensors()) {
            if want.name != got.name || want.value.dim() != got.value.dim() {
                return Err(Error::input(format!(
                    "tensor mismatch: expected {} {:?}, got {} {:?}",
                    want.name,
                    want.value.dim(),
                    got.name,
                    got.value.dim()
                )));
            }
        }
        if !params.is_finite() {
            return Err(Error::Numeric("model parameters contain non-finite values".into()));
        }
        Ok(FieldModel { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn cast<U: Real>(&self) -> FieldModel<U> {
        FieldModel { config: self.config.clone(), layout: self.layout, params: self.params.cast() }
    }

    /// Replaces the Fourier frequency matrix (`m × 3`).
    pub fn set_fourier_matrix(&mut self, b: Array2<T>) {
        let id = self.layout.fourier_b;
        assert_eq!(b.dim(), self.params.get(id).dim());
        self.params.tensors_mut()[id].value = b;
    }

    /// Multiplies the SDF output bound.
    pub fn with_s_max(mut self, s_max: f64) -> Self {
        self.config.s_max = s_max;
        self
    }

    fn linear(&self, tape: &mut Tape<T>, x: Var, layer: Linear) -> Var {
        let w = tape.param(layer.w, self.params.get(layer.w));
        let y = tape.matmul(x, w);
        match layer.b {
            Some(b) => {
                let b = tape.param(b, self.params.get(b));
                tape.add_row(y, b)
            }
            None => y,
        }
    }

    fn relu_linear(&self, tape: &mut Tape<T>, x: Var, layer: Linear) -> Var {
        let y = self.linear(tape, x, layer);
        tape.relu(y)
    }

    /// Predicts a `k × k` transform (identity plus learned offset).
    fn tnet(&self, tape: &mut Tape<T>, x: Var, ids: &TNetIds, k: usize) -> Var {
        let h = self.relu_linear(tape, x, ids.l1);
        let h = self.relu_linear(tape, h, ids.l2);
        let g = tape.max_rows(h);
        let g = self.relu_linear(tape, g, ids.fc1);
        let m = self.linear(tape, g, ids.fc2);
        let m = tape.reshape(m, k, k);
        let eye = tape.leaf(Array2::eye(k));
        tape.add(m, eye)
    }

    /// Per-point features before pooling (`N × point_widths[2]`).
    fn point_features(&self, tape: &mut Tape<T>, points: &Array2<T>, input_transform: Option<&Array2<T>>) -> Var {
        let l = &self.layout;
        let xyz = tape.leaf(points.slice(s![.., 0..3]).to_owned());
        let lab = tape.leaf(points.slice(s![.., 3..6]).to_owned());
        let m = match input_transform {
            Some(t) => tape.leaf(t.clone()),
            None => self.tnet(tape, xyz, &l.tnet_input, 3),
        };
        let xyz = tape.matmul(xyz, m);
        let x = tape.concat_cols(&[xyz, lab]);
        let h64 = self.relu_linear(tape, x, l.point1);
        let m2 = self.tnet(tape, h64, &l.tnet_feature, self.config.point_widths[0]);
        let h64 = tape.matmul(h64, m2);
        let h128 = self.relu_linear(tape, h64, l.point2);
        let h512 = self.linear(tape, h128, l.point3);
        let skip = self.linear(tape, h64, l.point_proj);
        let h = tape.add(h512, skip);
        tape.relu(h)
    }

    fn cloud_graph(&self, tape: &mut Tape<T>, points: &Array2<T>) -> Result<Var> {
        if points.nrows() == 0 {
            return Err(Error::input("cannot encode an empty point cloud"));
        }
        if points.ncols() != 6 {
            return Err(Error::input(format!("point input must have 6 columns, got {}", points.ncols())));
        }
        let h = self.point_features(tape, points, None);
        Ok(tape.max_rows(h))
    }

    fn audio_graph(&self, tape: &mut Tape<T>, input: &FrameInput<T>) -> Result<Var> {
        if input.mel.dim() != (input.mel_bands * input.mel_frames, LEG_COUNT) {
            return Err(Error::input(format!(
                "audio input shape {:?} does not match {} bands × {} frames × {LEG_COUNT} legs",
                input.mel.dim(),
                input.mel_bands,
                input.mel_frames
            )));
        }
        if input.mel_bands == 0 || input.mel_frames == 0 {
            return Err(Error::input("empty audio input"));
        }
        let x = tape.leaf(&input.mel * T::lit(self.config.audio_scale));
        let mut geom = ConvGeom { in_h: input.mel_bands, in_w: input.mel_frames, channels: LEG_COUNT };
        let mut h = x;
        for (layer, &channels) in self.layout.conv.iter().zip(&self.config.audio_channels) {
            let w = tape.param(layer.w, self.params.get(layer.w));
            let y = tape.conv(h, w, geom);
            let b = tape.param(layer.b.expect("conv bias"), self.params.get(layer.b.expect("conv bias")));
            let y = tape.add_row(y, b);
            h = tape.relu(y);
            geom = geom.next(channels);
        }
        let pooled = tape.mean_rows(h);
        Ok(self.linear(tape, pooled, self.layout.audio_fc))
    }

    pub(crate) fn frame_graph(&self, tape: &mut Tape<T>, input: &FrameInput<T>) -> Result<FrameVars> {
        let cloud = self.cloud_graph(tape, &input.points)?;
        let audio = self.audio_graph(tape, input)?;
        let joint = tape.concat_cols(&[cloud, audio]);
        let trunk_offset = self.linear(tape, joint, self.layout.trunk_frame);
        let t = self.relu_linear(tape, joint, self.layout.traversability[0]);
        let t = self.linear(tape, t, self.layout.traversability[1]);
        let traversability = tape.sigmoid(t);
        Ok(FrameVars { cloud, audio, trunk_offset, traversability })
    }

    /// Fourier features of `positions` (`N × encoding_dim`).
    pub fn encode_queries(&self, positions: &[Point3]) -> Array2<T> {
        let b = self.params.get(self.layout.fourier_b);
        let m = self.config.fourier_features;
        let off = if self.config.include_input { 3 } else { 0 };
        let mut out = Array2::zeros((positions.len(), self.config.encoding_dim()));
        let two_pi = T::lit(2.0 * PI);
        for (i, p) in positions.iter().enumerate() {
            let q = [T::lit(p.x), T::lit(p.y), T::lit(p.z)];
            if off == 3 {
                for (j, &v) in q.iter().enumerate() {
                    out[[i, j]] = v;
                }
            }
            for k in 0..m {
                let phase = two_pi * (b[[k, 0]] * q[0] + b[[k, 1]] * q[1] + b[[k, 2]] * q[2]);
                out[[i, off + k]] = phase.sin();
                out[[i, off + m + k]] = phase.cos();
            }
        }
        out
    }

    /// Derivatives of the encoding along x, y, z, stacked axis-major
    /// (`3N × encoding_dim`).
    fn encoding_tangents(&self, positions: &[Point3], encoded: &Array2<T>) -> Array2<T> {
        let b = self.params.get(self.layout.fourier_b);
        let m = self.config.fourier_features;
        let n = positions.len();
        let off = if self.config.include_input { 3 } else { 0 };
        let two_pi = T::lit(2.0 * PI);
        let mut out = Array2::zeros((3 * n, self.config.encoding_dim()));
        for axis in 0..3 {
            for i in 0..n {
                let row = axis * n + i;
                if off == 3 {
                    out[[row, axis]] = T::one();
                }
                for k in 0..m {
                    let w = two_pi * b[[k, axis]];
                    out[[row, off + k]] = w * encoded[[i, off + m + k]];
                    out[[row, off + m + k]] = -w * encoded[[i, off + k]];
                }
            }
        }
        out
    }

    /// Residual softplus block used by the SDF and confidence heads;
    /// returns the output logits and, when requested, their tangents.
    fn smooth_head(
        &self,
        tape: &mut Tape<T>,
        h: Var,
        tangent: Option<Var>,
        layers: &[Linear; 3],
    ) -> (Var, Option<Var>) {
        let beta = T::lit(self.config.softplus_beta);
        let za = self.linear(tape, h, layers[0]);
        let a = tape.softplus(za, beta);
        let zb = self.linear(tape, a, layers[1]);
        let b = tape.softplus(zb, beta);
        let b = tape.add(b, a);
        let out = self.linear(tape, b, layers[2]);
        let tangent = tangent.map(|t| {
            let ta = self.tangent_step(tape, t, layers[0], za, beta);
            let tb = self.tangent_step(tape, ta, layers[1], zb, beta);
            let tb = tape.add(tb, ta);
            let w = tape.param(layers[2].w, self.params.get(layers[2].w));
            tape.matmul(tb, w)
        });
        (out, tangent)
    }

    /// Tangent through `softplus(x W + b)` given the pre-activation `z`.
    fn tangent_step(&self, tape: &mut Tape<T>, t: Var, layer: Linear, z: Var, beta: T) -> Var {
        let w = tape.param(layer.w, self.params.get(layer.w));
        let tz = tape.matmul(t, w);
        let slope = tape.sigmoid_scaled(z, beta);
        let slope = tape.tile_rows(slope, 3);
        tape.mul(slope, tz)
    }

    fn plain_head(
        &self,
        tape: &mut Tape<T>,
        h: Var,
        layers: &[Linear; 3],
        dropout: &mut Option<&mut ChaCha8Rng>,
    ) -> Var {
        let mut x = h;
        for layer in &layers[..2] {
            x = self.relu_linear(tape, x, *layer);
            if let Some(rng) = dropout.as_deref_mut() {
                x = self.dropout(tape, x, rng);
            }
        }
        self.linear(tape, x, layers[2])
    }

    fn dropout(&self, tape: &mut Tape<T>, x: Var, rng: &mut ChaCha8Rng) -> Var {
        let p = self.config.dropout;
        if p == 0.0 {
            return x;
        }
        let keep = T::lit(1.0 / (1.0 - p));
        let mask = tape.value(x).mapv(|_| if rng.random::<f64>() < p { T::zero() } else { keep });
        let mask = tape.leaf(mask);
        tape.mul(x, mask)
    }

    pub(crate) fn query_graph(
        &self,
        tape: &mut Tape<T>,
        trunk_offset: Var,
        positions: &[Point3],
        heads: QueryHeads,
        mut dropout: Option<&mut ChaCha8Rng>,
    ) -> QueryVars {
        let n = positions.len();
        let beta = T::lit(self.config.softplus_beta);
        let l = &self.layout;
        let encoded = self.encode_queries(positions);
        let tangents = heads.gradient.then(|| self.encoding_tangents(positions, &encoded));
        let enc = tape.leaf(encoded);
        let zq = self.linear(tape, enc, l.trunk_query);
        let offset = tape.broadcast_rows(trunk_offset, n);
        let z1 = tape.add(zq, offset);
        let h1 = tape.softplus(z1, beta);
        let z2 = self.linear(tape, h1, l.trunk2);
        let h2 = tape.softplus(z2, beta);
        let h2 = tape.add(h2, h1);

        let trunk_tangent = tangents.map(|jac| {
            let jac = tape.leaf(jac);
            let w = tape.param(l.trunk_query.w, self.params.get(l.trunk_query.w));
            let t1 = tape.matmul(jac, w);
            let slope = tape.sigmoid_scaled(z1, beta);
            let slope = tape.tile_rows(slope, 3);
            let g1 = tape.mul(slope, t1);
            let g2 = self.tangent_step(tape, g1, l.trunk2, z2, beta);
            tape.add(g2, g1)
        });

        let mut out = QueryVars::default();
        if heads.sdf || heads.gradient {
            let (o, to) = self.smooth_head(tape, h2, trunk_tangent, &l.sdf);
            let th = tape.tanh(o);
            let s_max = T::lit(self.config.s_max);
            out.sdf = Some(tape.scale(th, s_max));
            if let Some(to) = to {
                let sq = tape.square(th);
                let neg = tape.scale(sq, -s_max);
                let slope = tape.add_scalar(neg, s_max);
                let slope = tape.tile_rows(slope, 3);
                let g = tape.mul(slope, to);
                let parts = [0, 1, 2].map(|axis| tape.slice_rows(g, axis * n, n));
                let squares = parts.map(|p| tape.square(p));
                let sum = tape.add(squares[0], squares[1]);
                let sum = tape.add(sum, squares[2]);
                out.gradient_norm = Some(tape.sqrt_eps(sum, T::lit(NORM_EPS)));
                out.gradient = Some(parts);
            }
        }
        if heads.confidence {
            let (o, _) = self.smooth_head(tape, h2, None, &l.confidence);
            out.confidence = Some(tape.sigmoid(o));
        }
        if heads.color {
            out.color = Some(self.plain_head(tape, h2, &l.color, &mut dropout));
        }
        if heads.semantics {
            out.semantics = Some(self.plain_head(tape, h2, &l.semantics, &mut dropout));
        }
        out
    }

    /// Runs the cloud and audio encoders once for a frame.
    pub fn encode_frame(&self, input: &FrameInput<T>) -> Result<FrameFeatures<T>> {
        let mut tape = Tape::new();
        let v = self.frame_graph(&mut tape, input)?;
        Ok(FrameFeatures {
            cloud: tape.value(v.cloud).clone(),
            audio: tape.value(v.audio).clone(),
            trunk_offset: tape.value(v.trunk_offset).clone(),
            traversability: tape.scalar(v.traversability).to_f64_lossy(),
        })
    }

    /// Global point-cloud feature (`1 × point_widths[2]`).
    pub fn encode_point_cloud(&self, points: &Array2<T>) -> Result<Array2<T>> {
        let mut tape = Tape::new();
        let v = self.cloud_graph(&mut tape, points)?;
        Ok(tape.value(v).clone())
    }

    /// Per-point features with the input transform replaced by `transform`.
    pub fn point_features_with_transform(&self, points: &Array2<T>, transform: &Array2<T>) -> Array2<T> {
        let mut tape = Tape::new();
        let v = self.point_features(&mut tape, points, Some(transform));
        tape.value(v).clone()
    }

    /// Audio feature (`1 × audio_dim`).
    pub fn encode_audio(&self, input: &FrameInput<T>) -> Result<Array2<T>> {
        let mut tape = Tape::new();
        let v = self.audio_graph(&mut tape, input)?;
        Ok(tape.value(v).clone())
    }

    /// Evaluates every head at `positions`.
    pub fn predict(&self, features: &FrameFeatures<T>, positions: &[Point3]) -> Vec<FieldPrediction> {
        let bins = self.config.color_bins;
        let mut out = Vec::with_capacity(positions.len());
        for chunk in positions.chunks(PREDICT_CHUNK) {
            let mut tape = Tape::new();
            let offset = tape.leaf(features.trunk_offset.clone());
            let q = self.query_graph(&mut tape, offset, chunk, QueryHeads::ALL, None);
            let sdf = tape.value(q.sdf.expect("sdf head"));
            let conf = tape.value(q.confidence.expect("confidence head"));
            let color = tape.value(q.color.expect("color head"));
            let sem = tape.value(q.semantics.expect("semantic head"));
            for i in 0..chunk.len() {
                let row = |c: usize| -> Vec<f64> {
                    color.slice(s![i, c * bins..(c + 1) * bins]).iter().map(|v| v.to_f64_lossy()).collect()
                };
                out.push(FieldPrediction {
                    sdf: sdf[[i, 0]].to_f64_lossy(),
                    confidence: conf[[i, 0]].to_f64_lossy(),
                    color_logits: [row(0), row(1), row(2)],
                    semantic_logits: sem.row(i).iter().map(|v| v.to_f64_lossy()).collect(),
                    traversability: features.traversability,
                });
            }
        }
        out
    }

    /// SDF values only.
    pub fn predict_sdf(&self, features: &FrameFeatures<T>, positions: &[Point3]) -> Vec<f64> {
        let heads = QueryHeads { sdf: true, confidence: false, color: false, semantics: false, gradient: false };
        let mut out = Vec::with_capacity(positions.len());
        for chunk in positions.chunks(PREDICT_CHUNK) {
            let mut tape = Tape::new();
            let offset = tape.leaf(features.trunk_offset.clone());
            let q = self.query_graph(&mut tape, offset, chunk, heads, None);
            out.extend(tape.value(q.sdf.expect("sdf head")).iter().map(|v| v.to_f64_lossy()));
        }
        out
    }

    /// Analytic `∇_query sdf` at each position.
    pub fn sdf_input_gradient(&self, features: &FrameFeatures<T>, positions: &[Point3]) -> Vec<[f64; 3]> {
        let heads = QueryHeads { sdf: true, confidence: false, color: false, semantics: false, gradient: true };
        let mut out = Vec::with_capacity(positions.len());
        for chunk in positions.chunks(PREDICT_CHUNK) {
            let mut tape = Tape::new();
            let offset = tape.leaf(features.trunk_offset.clone());
            let q = self.query_graph(&mut tape, offset, chunk, heads, None);
            let [gx, gy, gz] = q.gradient.expect("gradient requested").map(|v| tape.value(v).clone());
            for i in 0..chunk.len() {
                out.push([gx[[i, 0]], gy[[i, 0]], gz[[i, 0]]].map(|v| v.to_f64_lossy()));
            }
        }
        out
    }

    /// Fourier encoding of a single point as `f64`.
    pub fn fourier_encode(&self, p: Point3) -> Vec<f64> {
        self.encode_queries(&[p]).index_axis(Axis(0), 0).iter().map(|v| v.to_f64_lossy()).collect()
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.params.tensors().iter().map(|t: &Tensor<T>| t.name.as_str())
    }
}
