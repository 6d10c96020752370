use serde::{Deserialize, Serialize};

use super::color::Lab;
use super::geometry::{Point3, Pose};

/// Number of legs carrying contact microphones and force sensors.
pub const LEG_COUNT: usize = 4;

/// Default fusion window per frame, seconds.
pub const ACCUMULATION_WINDOW_S: f32 = 2.0;

/// SDF magnitude below which a sample counts as lying on the surface.
pub const SURFACE_EPSILON: f64 = 1e-4;

/// Ground material under the robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerrainClass {
    Grass,
    Gravel,
    Leaves,
    Vegetation,
    Concrete,
    Mud,
}

impl TerrainClass {
    pub const ALL: [TerrainClass; 6] = [
        TerrainClass::Grass,
        TerrainClass::Gravel,
        TerrainClass::Leaves,
        TerrainClass::Vegetation,
        TerrainClass::Concrete,
        TerrainClass::Mud,
    ];

    /// Semantic id of the class in [`SemanticTable::standard`].
    pub fn semantic_id(self) -> u16 {
        self as u16
    }

    pub fn from_semantic_id(id: u16) -> Option<TerrainClass> {
        TerrainClass::ALL.get(id as usize).copied()
    }

    /// Dimensionless roughness; concrete < grass < gravel < leaves < vegetation < mud.
    pub fn roughness(self) -> f64 {
        match self {
            TerrainClass::Concrete => 0.05,
            TerrainClass::Grass => 0.2,
            TerrainClass::Gravel => 0.35,
            TerrainClass::Leaves => 0.5,
            TerrainClass::Vegetation => 0.65,
            TerrainClass::Mud => 0.85,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TerrainClass::Grass => "grass",
            TerrainClass::Gravel => "gravel",
            TerrainClass::Leaves => "leaves",
            TerrainClass::Vegetation => "vegetation",
            TerrainClass::Concrete => "concrete",
            TerrainClass::Mud => "mud",
        }
    }

    pub fn from_name(name: &str) -> Option<TerrainClass> {
        TerrainClass::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Semantic id of tree trunks in the standard table.
pub const CLASS_TREE: u16 = 6;
/// Semantic id of rocks in the standard table.
pub const CLASS_ROCK: u16 = 7;
/// Semantic id of fallen logs in the standard table.
pub const CLASS_LOG: u16 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticClass {
    pub id: u16,
    pub name: String,
    pub base_traversability: f64,
    pub base_color: Lab,
}

/// Dense class list; the NULL id is `entries.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticTable {
    pub entries: Vec<SemanticClass>,
}

impl SemanticTable {
    /// Six terrain classes followed by trees, rocks and logs.
    pub fn standard() -> Self {
        let rows: [(&str, f64, Lab); 9] = [
            ("grass", 0.8, Lab::new(55.0, -40.0, 45.0)),
            ("gravel", 0.9, Lab::new(62.0, 2.0, 8.0)),
            ("leaves", 0.7, Lab::new(45.0, 22.0, 45.0)),
            ("vegetation", 0.6, Lab::new(40.0, -35.0, 30.0)),
            ("concrete", 1.0, Lab::new(75.0, 0.0, 2.0)),
            ("mud", 0.3, Lab::new(30.0, 10.0, 20.0)),
            ("tree", 0.0, Lab::new(28.0, 12.0, 25.0)),
            ("rock", 0.05, Lab::new(52.0, -2.0, -4.0)),
            ("log", 0.1, Lab::new(38.0, 18.0, 32.0)),
        ];
        SemanticTable {
            entries: rows
                .into_iter()
                .enumerate()
                .map(|(i, (name, t, c))| SemanticClass {
                    id: i as u16,
                    name: name.to_string(),
                    base_traversability: t,
                    base_color: c,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reserved class index standing for NULL (free space / unknown).
    pub fn null_index(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, id: u16) -> bool {
        (id as usize) < self.entries.len()
    }

    pub fn get(&self, id: u16) -> Option<&SemanticClass> {
        self.entries.get(id as usize)
    }

    /// Maps an optional id to a classifier index, NULL becoming [`Self::null_index`].
    pub fn class_index(&self, id: Option<u16>) -> usize {
        id.map_or(self.null_index(), |i| i as usize)
    }

    pub fn from_class_index(&self, idx: usize) -> Option<u16> {
        (idx < self.entries.len()).then_some(idx as u16)
    }

    /// Checks dense ids and traversability ranges.
    pub fn validate(&self) -> Result<(), String> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.id as usize != i {
                return Err(format!("semantic ids must be dense from 0; entry {i} has id {}", e.id));
            }
            if !(0.0..=1.0).contains(&e.base_traversability) {
                return Err(format!("class {} traversability outside [0,1]", e.name));
            }
        }
        Ok(())
    }
}

impl Default for SemanticTable {
    fn default() -> Self {
        SemanticTable::standard()
    }
}

/// One observed LiDAR return.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub position: Point3,
    pub color: Lab,
    pub semantic: Option<u16>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<SurfacePoint>,
    pub sensor_origin: Point3,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Point3> {
        self.points.iter().map(|p| p.position).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f32,
    /// Acceleration in m/s^2, body frame.
    pub accel: [f32; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TactileSample {
    pub t: f32,
    /// Foot forces in newtons, ordered FL, FR, RL, RR.
    pub forces: [f32; 4],
}

/// Everything recorded over one accumulation window.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub id: u32,
    pub cloud: PointCloud,
    /// One mono waveform per leg, ordered FL, FR, RL, RR.
    pub audio: Vec<Vec<f32>>,
    pub sample_rate: u32,
    pub imu: Vec<ImuSample>,
    pub tactile: Vec<TactileSample>,
    pub pose: Pose,
    pub accumulation_window: f32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrameViolation {
    EmptyCloud,
    AudioChannelCount(usize),
    EmptyAudio(usize),
    EmptyImu,
    EmptyTactile,
    NonFinite(&'static str),
    ColorOutOfRange(usize),
    UnknownSemantic { point: usize, id: u16 },
    BadWindow(f32),
}

/// Lists every broken frame invariant; empty when the frame is well formed.
pub fn validate_frame(frame: &Frame, table: &SemanticTable) -> Vec<FrameViolation> {
    let mut out = Vec::new();
    if frame.cloud.is_empty() {
        out.push(FrameViolation::EmptyCloud);
    }
    if frame.audio.len() != LEG_COUNT {
        out.push(FrameViolation::AudioChannelCount(frame.audio.len()));
    }
    for (leg, ch) in frame.audio.iter().enumerate() {
        if ch.is_empty() {
            out.push(FrameViolation::EmptyAudio(leg));
        } else if ch.iter().any(|v| !v.is_finite()) {
            out.push(FrameViolation::NonFinite("audio"));
        }
    }
    if frame.imu.is_empty() {
        out.push(FrameViolation::EmptyImu);
    }
    if frame.tactile.is_empty() {
        out.push(FrameViolation::EmptyTactile);
    }
    if !(frame.accumulation_window > 0.0 && frame.accumulation_window.is_finite()) {
        out.push(FrameViolation::BadWindow(frame.accumulation_window));
    }
    if !frame.cloud.sensor_origin.is_finite() || !frame.pose.position.is_finite() {
        out.push(FrameViolation::NonFinite("pose"));
    }
    for (i, p) in frame.cloud.points.iter().enumerate() {
        if !p.position.is_finite() {
            out.push(FrameViolation::NonFinite("point"));
        }
        if !p.color.in_range() {
            out.push(FrameViolation::ColorOutOfRange(i));
        }
        if let Some(id) = p.semantic {
            if !table.contains(id) {
                out.push(FrameViolation::UnknownSemantic { point: i, id });
            }
        }
    }
    if frame.imu.iter().any(|s| s.accel.iter().any(|v| !v.is_finite())) {
        out.push(FrameViolation::NonFinite("imu"));
    }
    if frame.tactile.iter().any(|s| s.forces.iter().any(|v| !v.is_finite())) {
        out.push(FrameViolation::NonFinite("tactile"));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleKind {
    Surface,
    Free,
    Negative,
}

/// A labeled training query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuerySample {
    pub position: Point3,
    pub sdf: f64,
    pub confidence: f64,
    pub color_bins: Option<[u8; 3]>,
    pub semantic: Option<u16>,
    pub kind: SampleKind,
}

impl QuerySample {
    /// Checks the kind-dependent label invariants.
    pub fn check(&self) -> Result<(), String> {
        if !self.position.is_finite() || !self.sdf.is_finite() {
            return Err("non-finite position or sdf".into());
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0,1]", self.confidence));
        }
        match self.kind {
            SampleKind::Free => {
                if self.sdf <= 0.0 {
                    return Err(format!("free sample with sdf {}", self.sdf));
                }
                if self.confidence != 1.0 {
                    return Err("free sample confidence must be 1".into());
                }
                if self.color_bins.is_some() || self.semantic.is_some() {
                    return Err("free sample must carry NULL color and semantics".into());
                }
            }
            SampleKind::Negative => {
                if self.sdf >= 0.0 {
                    return Err(format!("negative sample with sdf {}", self.sdf));
                }
                if self.confidence <= 0.0 {
                    return Err("negative sample confidence must be positive".into());
                }
            }
            SampleKind::Surface => {
                if self.sdf.abs() > SURFACE_EPSILON {
                    return Err(format!("surface sample with |sdf| {}", self.sdf.abs()));
                }
            }
        }
        Ok(())
    }
}

/// Five-head network output at one query.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPrediction {
    pub sdf: f64,
    pub confidence: f64,
    pub color_logits: [Vec<f64>; 3],
    pub semantic_logits: Vec<f64>,
    pub traversability: f64,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl FieldPrediction {
    pub fn semantic_class(&self) -> usize {
        argmax(&self.semantic_logits)
    }

    pub fn color_bins(&self) -> [u8; 3] {
        [0, 1, 2].map(|c| argmax(&self.color_logits[c]) as u8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> Frame {
        Frame {
            id: 0,
            cloud: PointCloud {
                points: vec![SurfacePoint {
                    position: Point3::new(1.0, 0.0, 0.0),
                    color: Lab::new(50.0, 0.0, 0.0),
                    semantic: Some(0),
                }],
                sensor_origin: Point3::ZERO,
            },
            audio: vec![vec![0.0; 8]; 4],
            sample_rate: 16384,
            imu: vec![ImuSample { t: 0.0, accel: [0.0, 0.0, 9.81] }],
            tactile: vec![TactileSample { t: 0.0, forces: [10.0; 4] }],
            pose: Pose::default(),
            accumulation_window: ACCUMULATION_WINDOW_S,
        }
    }

    #[test]
    fn well_formed_frame_has_no_violations() {
        assert!(validate_frame(&frame(), &SemanticTable::standard()).is_empty());
    }

    #[test]
    fn audio_channel_count() {
        let mut f = frame();
        f.audio.pop();
        assert_eq!(
            validate_frame(&f, &SemanticTable::standard()),
            vec![FrameViolation::AudioChannelCount(3)]
        );
    }

    #[test]
    fn empty_cloud() {
        let mut f = frame();
        f.cloud.points.clear();
        assert_eq!(validate_frame(&f, &SemanticTable::standard()), vec![FrameViolation::EmptyCloud]);
    }

    #[test]
    fn unknown_semantic_flagged() {
        let mut f = frame();
        f.cloud.points[0].semantic = Some(42);
        assert_eq!(
            validate_frame(&f, &SemanticTable::standard()),
            vec![FrameViolation::UnknownSemantic { point: 0, id: 42 }]
        );
    }

    #[test]
    fn standard_table_is_valid() {
        let t = SemanticTable::standard();
        t.validate().unwrap();
        assert_eq!(t.null_index(), 9);
        assert_eq!(t.class_index(None), 9);
        assert_eq!(t.from_class_index(9), None);
        for c in TerrainClass::ALL {
            assert_eq!(t.get(c.semantic_id()).unwrap().name, c.name());
        }
    }

    #[test]
    fn free_sample_invariants() {
        let mut s = QuerySample {
            position: Point3::ZERO,
            sdf: 0.5,
            confidence: 1.0,
            color_bins: None,
            semantic: None,
            kind: SampleKind::Free,
        };
        assert!(s.check().is_ok());
        s.semantic = Some(1);
        assert!(s.check().is_err());
    }
}
