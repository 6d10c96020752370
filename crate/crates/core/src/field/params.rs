use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::tape::Real;
use super::ModelConfig;

/// A named tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub name: String,
    pub value: Array2<T>,
    pub trainable: bool,
}

/// Ordered collection of model tensors; ids are positions.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    tensors: Vec<Tensor<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn from_tensors(tensors: Vec<Tensor<T>>) -> Self {
        ParamStore { tensors }
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn get(&self, id: usize) -> &Array2<T> {
        &self.tensors[id].value
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.tensors.iter().position(|t| t.name == name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar entries in trainable tensors.
    pub fn trainable_count(&self) -> usize {
        self.tensors.iter().filter(|t| t.trainable).map(|t| t.value.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.value.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor {
                    name: t.name.clone(),
                    value: t.value.mapv(|v| U::lit(v.to_f64_lossy())),
                    trainable: t.trainable,
                })
                .collect(),
        }
    }
}

/// Weight and bias ids of a dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linear {
    pub w: usize,
    pub b: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TNetIds {
    pub l1: Linear,
    pub l2: Linear,
    pub fc1: Linear,
    pub fc2: Linear,
}

/// Ids of every tensor the forward pass reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub fourier_b: usize,
    pub tnet_input: TNetIds,
    pub point1: Linear,
    pub tnet_feature: TNetIds,
    pub point2: Linear,
    pub point3: Linear,
    pub point_proj: Linear,
    pub conv: [Linear; 3],
    pub audio_fc: Linear,
    pub trunk_query: Linear,
    pub trunk_frame: Linear,
    pub trunk2: Linear,
    pub sdf: [Linear; 3],
    pub confidence: [Linear; 3],
    pub color: [Linear; 3],
    pub semantics: [Linear; 3],
    pub traversability: [Linear; 2],
}

const SMALL_OUTPUT_SCALE: f64 = 0.01;

#[derive(Clone, Copy)]
enum Init {
    /// He normal, for layers followed by a rectifier.
    He,
    /// Normal with variance `1 / fan_in`, for output layers.
    Lecun,
    /// Lecun scaled by [`SMALL_OUTPUT_SCALE`], so bounded outputs start unsaturated.
    Small,
    Zero,
}

struct Builder<'a> {
    tensors: Vec<Tensor<f64>>,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn tensor(&mut self, name: String, rows: usize, cols: usize, std: f64, trainable: bool) -> usize {
        let value = if std == 0.0 {
            Array2::zeros((rows, cols))
        } else {
            let normal = Normal::new(0.0, std).expect("positive std");
            Array2::from_shape_simple_fn((rows, cols), || normal.sample(self.rng))
        };
        self.tensors.push(Tensor { name, value, trainable });
        self.tensors.len() - 1
    }

    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize, init: Init, bias: bool) -> Linear {
        let std = match init {
            Init::He => (2.0 / fan_in as f64).sqrt(),
            Init::Lecun => (1.0 / fan_in as f64).sqrt(),
            Init::Small => SMALL_OUTPUT_SCALE * (1.0 / fan_in as f64).sqrt(),
            Init::Zero => 0.0,
        };
        let w = self.tensor(format!("{name}.w"), fan_in, fan_out, std, true);
        let b = bias.then(|| self.tensor(format!("{name}.b"), 1, fan_out, 0.0, true));
        Linear { w, b }
    }

    fn tnet(&mut self, name: &str, input: usize, widths: [usize; 3], out: usize) -> TNetIds {
        TNetIds {
            l1: self.linear(&format!("{name}.l1"), input, widths[0], Init::He, true),
            l2: self.linear(&format!("{name}.l2"), widths[0], widths[1], Init::He, true),
            fc1: self.linear(&format!("{name}.fc1"), widths[1], widths[2], Init::He, true),
            fc2: self.linear(&format!("{name}.fc2"), widths[2], out, Init::Zero, true),
        }
    }

    fn head(&mut self, name: &str, input: usize, width: usize, out: usize, out_init: Init) -> [Linear; 3] {
        [
            self.linear(&format!("{name}.l1"), input, width, Init::He, true),
            self.linear(&format!("{name}.l2"), width, width, Init::He, true),
            self.linear(&format!("{name}.out"), width, out, out_init, true),
        ]
    }
}

/// Builds the tensor list for `cfg`, drawing initial values from `seed`.
/// Calling with the same arguments always yields the same ids.
pub(crate) fn build_layout(cfg: &ModelConfig, seed: u64) -> (Layout, Vec<Tensor<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder { tensors: Vec::new(), rng: &mut rng };
    let [p0, p1, p2] = cfg.point_widths;
    let [a0, a1, a2] = cfg.audio_channels;
    let (w, h) = (cfg.trunk_width, cfg.head_width);
    let fourier_b = b.tensor("fourier.b".into(), cfg.fourier_features, 3, cfg.fourier_sigma, false);
    let tnet_input = b.tnet("tnet_input", 3, cfg.tnet_widths, 9);
    let point1 = b.linear("point.l1", 6, p0, Init::He, true);
    let tnet_feature = b.tnet("tnet_feature", p0, cfg.tnet_widths, p0 * p0);
    let point2 = b.linear("point.l2", p0, p1, Init::He, true);
    let point3 = b.linear("point.l3", p1, p2, Init::He, true);
    let point_proj = b.linear("point.proj", p0, p2, Init::He, false);
    let conv = [
        b.linear("audio.conv1", 9 * crate::scene::LEG_COUNT, a0, Init::He, true),
        b.linear("audio.conv2", 9 * a0, a1, Init::He, true),
        b.linear("audio.conv3", 9 * a1, a2, Init::He, true),
    ];
    let audio_fc = b.linear("audio.fc", a2, cfg.audio_dim, Init::Lecun, true);
    let trunk_in = cfg.encoding_dim() + cfg.frame_dim();
    let std = (2.0 / trunk_in as f64).sqrt();
    let trunk_query = Linear { w: b.tensor("trunk.query.w".into(), cfg.encoding_dim(), w, std, true), b: None };
    let trunk_frame = Linear {
        w: b.tensor("trunk.frame.w".into(), cfg.frame_dim(), w, std, true),
        b: Some(b.tensor("trunk.frame.b".into(), 1, w, 0.0, true)),
    };
    let trunk2 = b.linear("trunk.l2", w, w, Init::He, true);
    let sdf = b.head("sdf", w, h, 1, Init::Small);
    let confidence = b.head("confidence", w, h, 1, Init::Small);
    let color = b.head("color", w, h, 3 * cfg.color_bins, Init::Lecun);
    let semantics = b.head("semantics", w, h, cfg.semantic_outputs(), Init::Lecun);
    let traversability = [
        b.linear("traversability.l1", cfg.frame_dim(), cfg.traversability_width, Init::He, true),
        b.linear("traversability.out", cfg.traversability_width, 1, Init::Lecun, true),
    ];
    let layout = Layout {
        fourier_b,
        tnet_input,
        point1,
        tnet_feature,
        point2,
        point3,
        point_proj,
        conv,
        audio_fc,
        trunk_query,
        trunk_frame,
        trunk2,
        sdf,
        confidence,
        color,
        semantics,
        traversability,
    };
    (layout, b.tensors)
}
