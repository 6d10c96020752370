//! Frame sequences along a trajectory, with train/val/test splits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lidar::{simulate_lidar, LidarPattern};
use super::sensors::{synth_audio, synth_imu, synth_tactile, AUDIO_SAMPLE_RATE};
use super::world::Scene;
use crate::error::{Error, Result};
use crate::scene::{q32, Frame, Point3, PointCloud, Pose, SemanticTable, SurfacePoint, ACCUMULATION_WINDOW_S, LEG_COUNT};

/// Nominal walking speed, m/s.
pub const NOMINAL_SPEED: f64 = 0.4;
/// Sensor height above the ground under the robot, meters.
pub const SENSOR_HEIGHT: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Val,
    TestSeen,
    TestUnseen,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::TestSeen => "test-seen",
            Split::TestUnseen => "test-unseen",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub seed: u64,
    pub lidar: LidarPattern,
    pub gait_rate_hz: f64,
    /// Seconds of audio stored per leg.
    pub audio_duration_s: f64,
    pub train_ratio: f64,
    pub val_ratio: f64,
    /// Pose perturbation applied to held-out seen-viewpoint frames.
    pub view_jitter_m: f64,
    pub view_jitter_deg: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            seed: 0,
            lidar: LidarPattern::default(),
            gait_rate_hz: 2.0,
            audio_duration_s: ACCUMULATION_WINDOW_S as f64,
            train_ratio: 0.835,
            val_ratio: 0.09,
            view_jitter_m: 0.3,
            view_jitter_deg: 12.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub frames: Vec<Frame>,
    pub splits: Vec<Split>,
}

impl Dataset {
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.frames.len()).filter(|&i| self.splits[i] == split).collect()
    }
}

/// SplitMix64 finalizer; derives independent per-item seeds.
pub fn mix_seed(seed: u64, item: u64) -> u64 {
    let mut z = seed ^ item.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counts for (train, val, test): train and val are floored, test takes the
/// remainder.
pub fn split_counts(n: usize, train_ratio: f64, val_ratio: f64) -> (usize, usize, usize) {
    let train = ((n as f64 * train_ratio).floor() as usize).min(n);
    let val = ((n as f64 * val_ratio).floor() as usize).min(n - train);
    (train, val, n - train - val)
}

/// Places the robot on the ground at (x, y) with the given heading.
pub fn pose_on_ground(scene: &Scene, x: f64, y: f64, yaw: f64) -> Pose {
    Pose::new(Point3::new(x, y, scene.heightfield.height(x, y) + SENSOR_HEIGHT), yaw)
}

/// A meandering walk at nominal speed, one pose per accumulation window,
/// keeping clear of primitives and inside the scene bounds.
pub fn generate_trajectory(scene: &Scene, n_poses: usize, seed: u64) -> Vec<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = NOMINAL_SPEED * ACCUMULATION_WINDOW_S as f64;
    let margin = 1.0;
    let (mut x, mut y) = (0.0, 0.0);
    let mut yaw = rng.random_range(0.0..std::f64::consts::TAU);
    let clear = |x: f64, y: f64| {
        scene.contains_xy(x, y)
            && x > scene.bounds[0] + margin
            && x < scene.bounds[1] - margin
            && y > scene.bounds[2] + margin
            && y < scene.bounds[3] - margin
            && scene
                .primitives
                .iter()
                .all(|p| p.sdf(Point3::new(x, y, scene.heightfield.height(x, y) + SENSOR_HEIGHT)) > 0.6)
    };
    if !clear(x, y) {
        let (x0, x1) = (scene.bounds[0] + margin, scene.bounds[1] - margin);
        let (y0, y1) = (scene.bounds[2] + margin, scene.bounds[3] - margin);
        for _ in 0..1000 {
            let (cx, cy) = (rng.random_range(x0..x1), rng.random_range(y0..y1));
            if clear(cx, cy) {
                (x, y) = (cx, cy);
                break;
            }
        }
    }
    let mut poses = Vec::with_capacity(n_poses);
    for _ in 0..n_poses {
        poses.push(pose_on_ground(scene, x, y, yaw));
        let mut moved = false;
        for attempt in 0..64 {
            let turn = if attempt == 0 { rng.random_range(-0.4..0.4) } else { rng.random_range(-3.1..3.1) };
            let cand_yaw = yaw + turn;
            let (nx, ny) = (x + step * cand_yaw.cos(), y + step * cand_yaw.sin());
            if clear(nx, ny) {
                x = nx;
                y = ny;
                yaw = cand_yaw;
                moved = true;
                break;
            }
        }
        if !moved {
            yaw += std::f64::consts::PI / 2.0;
        }
    }
    poses
}

/// Fore-aft ground slope under a pose.
pub fn slope_along_heading(scene: &Scene, pose: &Pose) -> f64 {
    let (gx, gy) = scene.heightfield.gradient(pose.position.x, pose.position.y);
    gx * pose.yaw.cos() + gy * pose.yaw.sin()
}

fn quantize_cloud(cloud: PointCloud) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .into_iter()
            .map(|p| SurfacePoint {
                position: p.position.quantized(),
                color: crate::scene::Lab::new(q32(p.color.l), q32(p.color.a), q32(p.color.b)),
                semantic: p.semantic,
            })
            .collect(),
        sensor_origin: cloud.sensor_origin.quantized(),
    }
}

/// Records one frame at `pose`. All stored values are rounded to `f32`.
pub fn record_frame(scene: &Scene, pose: Pose, id: u32, config: &DatasetConfig, table: &SemanticTable) -> Result<Frame> {
    let seed = mix_seed(config.seed, id as u64);
    let pose = Pose::new(pose.position.quantized(), q32(pose.yaw));
    let cloud = quantize_cloud(simulate_lidar(scene, &pose, &config.lidar, table, seed));
    let class = scene.terrain_at(pose.position.x, pose.position.y);
    let audio = (0..LEG_COUNT)
        .map(|leg| synth_audio(class, config.audio_duration_s, config.gait_rate_hz, mix_seed(seed, 10 + leg as u64)))
        .collect::<Result<Vec<_>>>()?;
    let window = ACCUMULATION_WINDOW_S as f64;
    let imu = synth_imu(class, window, mix_seed(seed, 1))?;
    let tactile = synth_tactile(class, slope_along_heading(scene, &pose), window, mix_seed(seed, 2))?;
    Ok(Frame {
        id,
        cloud,
        audio,
        sample_rate: AUDIO_SAMPLE_RATE,
        imu,
        tactile,
        pose,
        accumulation_window: ACCUMULATION_WINDOW_S,
    })
}

/// One frame per trajectory pose. Held-out test frames are recorded from a
/// jittered viewpoint of their pose.
pub fn make_dataset(scene: &Scene, trajectory: &[Pose], config: &DatasetConfig) -> Result<Dataset> {
    if trajectory.is_empty() {
        return Err(Error::input("trajectory is empty"));
    }
    for p in trajectory {
        if !scene.contains_xy(p.position.x, p.position.y) {
            return Err(Error::input(format!("pose {:?} outside scene bounds", p.position)));
        }
    }
    let table = SemanticTable::standard();
    let n = trajectory.len();
    let (n_train, n_val, _) = split_counts(n, config.train_ratio, config.val_ratio);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, u64::MAX));
    order.shuffle(&mut rng);
    let mut splits = vec![Split::TestSeen; n];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::TestSeen
        };
    }
    let frames = trajectory
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            let mut pose = *pose;
            if splits[i] == Split::TestSeen {
                let mut jr = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 1_000_000 + i as u64));
                let dx = jr.random_range(-config.view_jitter_m..=config.view_jitter_m);
                let dy = jr.random_range(-config.view_jitter_m..=config.view_jitter_m);
                let dyaw = jr.random_range(-config.view_jitter_deg..=config.view_jitter_deg).to_radians();
                let (x, y) = (pose.position.x + dx, pose.position.y + dy);
                if scene.contains_xy(x, y) {
                    pose = pose_on_ground(scene, x, y, pose.yaw + dyaw);
                }
            }
            record_frame(scene, pose, i as u32, config, &table)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { frames, splits })
}
