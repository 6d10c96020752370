//! Analytic scenes: sinusoidal ground, solid primitives and terrain patches,
//! with an exact signed-distance oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Lab, Point3, SemanticTable, TerrainClass, CLASS_LOG, CLASS_ROCK, CLASS_TREE};

/// One ground sinusoid: `amplitude * sin(2*pi*(x cos d + y sin d)/wavelength + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub wavelength: f64,
    pub direction: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Heightfield {
    pub terms: Vec<Sinusoid>,
}

impl Heightfield {
    pub fn flat() -> Self {
        Heightfield { terms: Vec::new() }
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| {
                let (sd, cd) = s.direction.sin_cos();
                let u = x * cd + y * sd;
                s.amplitude * (std::f64::consts::TAU * u / s.wavelength + s.phase).sin()
            })
            .sum()
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let mut g = (0.0, 0.0);
        for s in &self.terms {
            let (sd, cd) = s.direction.sin_cos();
            let k = std::f64::consts::TAU / s.wavelength;
            let c = s.amplitude * k * (k * (x * cd + y * sd) + s.phase).cos();
            g.0 += c * cd;
            g.1 += c * sd;
        }
        g
    }

    /// Upper bound on the slope magnitude anywhere on the field.
    pub fn max_slope(&self) -> f64 {
        self.terms
            .iter()
            .map(|s| s.amplitude.abs() * std::f64::consts::TAU / s.wavelength)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    /// Capped vertical cylinder centered on the primitive center.
    Cylinder { radius: f64, height: f64 },
    Box { half_extents: [f64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub center: Point3,
    pub semantic: u16,
    pub color: Lab,
}

impl Primitive {
    pub fn sdf(&self, p: Point3) -> f64 {
        let d = p - self.center;
        match self.shape {
            Shape::Sphere { radius } => d.norm() - radius,
            Shape::Cylinder { radius, height } => {
                let dr = (d.x * d.x + d.y * d.y).sqrt() - radius;
                let dz = d.z.abs() - height / 2.0;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                dr.max(dz).min(0.0) + outside
            }
            Shape::Box { half_extents } => {
                let q = [d.x.abs() - half_extents[0], d.y.abs() - half_extents[1], d.z.abs() - half_extents[2]];
                let outside = q.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
                q[0].max(q[1]).max(q[2]).min(0.0) + outside
            }
        }
    }

    /// Height of the top surface above (x, y), if the footprint covers it.
    pub fn top_at(&self, x: f64, y: f64) -> Option<f64> {
        let dx = x - self.center.x;
        let dy = y - self.center.y;
        match self.shape {
            Shape::Sphere { radius } => {
                let r2 = radius * radius - dx * dx - dy * dy;
                (r2 >= 0.0).then(|| self.center.z + r2.sqrt())
            }
            Shape::Cylinder { radius, height } => {
                (dx * dx + dy * dy <= radius * radius).then(|| self.center.z + height / 2.0)
            }
            Shape::Box { half_extents } => (dx.abs() <= half_extents[0] && dy.abs() <= half_extents[1])
                .then(|| self.center.z + half_extents[2]),
        }
    }

    pub fn is_cylinder(&self) -> bool {
        matches!(self.shape, Shape::Cylinder { .. })
    }
}

/// Voronoi site of a terrain patch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerrainSite {
    pub x: f64,
    pub y: f64,
    pub class: TerrainClass,
}

/// Which part of the scene is closest to a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Ground,
    Primitive(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub heightfield: Heightfield,
    pub primitives: Vec<Primitive>,
    pub terrain: Vec<TerrainSite>,
    /// `[xmin, xmax, ymin, ymax]`.
    pub bounds: [f64; 4],
    pub seed: u64,
}

impl Scene {
    pub fn ground_sdf(&self, p: Point3) -> f64 {
        p.z - self.heightfield.height(p.x, p.y)
    }

    /// Signed distance to the nearest surface, negative inside solids or
    /// below ground.
    pub fn sdf(&self, p: Point3) -> f64 {
        self.closest(p).0
    }

    pub fn closest(&self, p: Point3) -> (f64, Component) {
        let mut best = (self.ground_sdf(p), Component::Ground);
        for (i, prim) in self.primitives.iter().enumerate() {
            let d = prim.sdf(p);
            if d < best.0 {
                best = (d, Component::Primitive(i));
            }
        }
        best
    }

    /// Terrain class of the patch containing (x, y).
    pub fn terrain_at(&self, x: f64, y: f64) -> TerrainClass {
        let mut best = (f64::INFINITY, TerrainClass::Concrete);
        for s in &self.terrain {
            let d = (s.x - x).powi(2) + (s.y - y).powi(2);
            if d < best.0 {
                best = (d, s.class);
            }
        }
        best.1
    }

    /// Color and semantic id of the surface nearest to `p`.
    pub fn surface_attributes(&self, p: Point3, table: &SemanticTable) -> (Lab, u16) {
        match self.closest(p).1 {
            Component::Ground => {
                let class = self.terrain_at(p.x, p.y);
                let id = class.semantic_id();
                let color = table.get(id).map(|c| c.base_color).unwrap_or_default();
                (color, id)
            }
            Component::Primitive(i) => (self.primitives[i].color, self.primitives[i].semantic),
        }
    }

    /// Height of the topmost surface above (x, y).
    pub fn elevation_at(&self, x: f64, y: f64) -> f64 {
        self.primitives
            .iter()
            .filter_map(|p| p.top_at(x, y))
            .fold(self.heightfield.height(x, y), f64::max)
    }

    /// Lipschitz bound of [`Scene::sdf`]; the ground term is a vertical
    /// distance and can exceed the true distance by this factor.
    pub fn lipschitz(&self) -> f64 {
        (1.0 + self.heightfield.max_slope().powi(2)).sqrt()
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.bounds[0] && x <= self.bounds[1] && y >= self.bounds[2] && y <= self.bounds[3]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Half side length of the square scene, meters.
    pub half_extent: f64,
    pub sinusoids: usize,
    /// Bound on the heightfield slope magnitude.
    pub max_slope: f64,
    pub max_amplitude: f64,
    pub terrain_patches: usize,
    pub trees: usize,
    pub rocks: usize,
    pub logs: usize,
    pub bushes: usize,
    /// Radius around the origin kept free of primitives.
    pub clear_radius: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            half_extent: 8.0,
            sinusoids: 3,
            max_slope: 0.3,
            max_amplitude: 0.15,
            terrain_patches: 8,
            trees: 6,
            rocks: 4,
            logs: 2,
            bushes: 3,
            clear_radius: 1.5,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_extent > 0.0 && self.half_extent.is_finite()) {
            return Err(Error::config("scene.half_extent must be positive"));
        }
        if self.terrain_patches == 0 {
            return Err(Error::config("scene.terrain_patches must be at least 1"));
        }
        if !(0.0..=0.3).contains(&self.max_slope) {
            return Err(Error::config("scene.max_slope must lie in [0, 0.3]"));
        }
        if self.max_amplitude < 0.0 {
            return Err(Error::config("scene.max_amplitude must be nonnegative"));
        }
        if self.clear_radius < 0.0 || self.clear_radius >= self.half_extent {
            return Err(Error::config("scene.clear_radius must lie in [0, half_extent)"));
        }
        Ok(())
    }
}

fn jitter_color(base: Lab, rng: &mut ChaCha8Rng) -> Lab {
    Lab::new(
        base.l + rng.random_range(-3.0..3.0),
        base.a + rng.random_range(-3.0..3.0),
        base.b + rng.random_range(-3.0..3.0),
    )
    .clamped()
}

/// Builds a scene deterministically from `seed`.
pub fn generate_scene(seed: u64, config: &SceneConfig) -> Result<Scene> {
    config.validate()?;
    let table = SemanticTable::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = config.half_extent;

    let mut terms: Vec<Sinusoid> = (0..config.sinusoids)
        .map(|_| Sinusoid {
            amplitude: rng.random_range(0.0..=config.max_amplitude),
            wavelength: rng.random_range(3.0..12.0),
            direction: rng.random_range(0.0..std::f64::consts::TAU),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    let mut heightfield = Heightfield { terms: terms.clone() };
    let slope = heightfield.max_slope();
    if slope > config.max_slope {
        let k = config.max_slope / slope;
        for t in &mut terms {
            t.amplitude *= k;
        }
        heightfield = Heightfield { terms };
    }

    let terrain = (0..config.terrain_patches)
        .map(|_| TerrainSite {
            x: rng.random_range(-e..e),
            y: rng.random_range(-e..e),
            class: TerrainClass::ALL[rng.random_range(0..TerrainClass::ALL.len())],
        })
        .collect();

    let mut primitives = Vec::new();
    let place = |rng: &mut ChaCha8Rng| loop {
        let x = rng.random_range(-e..e);
        let y = rng.random_range(-e..e);
        if x * x + y * y >= config.clear_radius * config.clear_radius {
            return (x, y);
        }
    };
    let base_color = |id: u16| table.get(id).map(|c| c.base_color).unwrap_or_default();
    for _ in 0..config.trees {
        let (x, y) = place(&mut rng);
        let radius = rng.random_range(0.15..0.4);
        let height = rng.random_range(2.5..4.0);
        let base = heightfield.height(x, y) - 0.2;
        primitives.push(Primitive {
            shape: Shape::Cylinder { radius, height },
            center: Point3::new(x, y, base + height / 2.0),
            semantic: CLASS_TREE,
            color: jitter_color(base_color(CLASS_TREE), &mut rng),
        });
    }
    for _ in 0..config.rocks {
        let (x, y) = place(&mut rng);
        let radius = rng.random_range(0.2..0.6);
        primitives.push(Primitive {
            shape: Shape::Sphere { radius },
            center: Point3::new(x, y, heightfield.height(x, y) + 0.3 * radius),
            semantic: CLASS_ROCK,
            color: jitter_color(base_color(CLASS_ROCK), &mut rng),
        });
    }
    for _ in 0..config.logs {
        let (x, y) = place(&mut rng);
        let along_x = rng.random_bool(0.5);
        let long = rng.random_range(1.0..2.5);
        let r = rng.random_range(0.12..0.25);
        let he = if along_x { [long, r, r] } else { [r, long, r] };
        primitives.push(Primitive {
            shape: Shape::Box { half_extents: he },
            center: Point3::new(x, y, heightfield.height(x, y) + r - 0.05),
            semantic: CLASS_LOG,
            color: jitter_color(base_color(CLASS_LOG), &mut rng),
        });
    }
    let vegetation = TerrainClass::Vegetation.semantic_id();
    for _ in 0..config.bushes {
        let (x, y) = place(&mut rng);
        let hx = rng.random_range(0.4..1.2);
        let hy = rng.random_range(0.4..1.2);
        let hz = rng.random_range(0.3..0.5);
        primitives.push(Primitive {
            shape: Shape::Box { half_extents: [hx, hy, hz] },
            center: Point3::new(x, y, heightfield.height(x, y) + hz - 0.1),
            semantic: vegetation,
            color: jitter_color(base_color(vegetation), &mut rng),
        });
    }

    Ok(Scene {
        heightfield,
        primitives,
        terrain,
        bounds: [-e, e, -e, e],
        seed,
    })
}

/// Fixed regression scene: a band of tall vegetation spanning the whole
/// width of the area at y in [-0.6, 0.6], flanked by trees, on flat ground.
/// Walking through the band is the only way from y < 0 to y > 0.
pub fn vegetation_corridor_scene() -> Scene {
    let table = SemanticTable::standard();
    let color = |id: u16| table.get(id).unwrap().base_color;
    let veg = TerrainClass::Vegetation.semantic_id();
    let mut primitives = vec![Primitive {
        shape: Shape::Box { half_extents: [6.0, 0.6, 0.35] },
        center: Point3::new(0.0, 0.0, 0.35),
        semantic: veg,
        color: color(veg),
    }];
    for (x, y) in [(-1.6, -2.2), (1.7, -2.0), (-1.8, 2.3), (1.5, 2.6), (-3.0, 0.0), (3.1, 0.2)] {
        primitives.push(Primitive {
            shape: Shape::Cylinder { radius: 0.3, height: 3.0 },
            center: Point3::new(x, y, 1.3),
            semantic: CLASS_TREE,
            color: color(CLASS_TREE),
        });
    }
    primitives.push(Primitive {
        shape: Shape::Sphere { radius: 0.45 },
        center: Point3::new(2.4, -3.2, 0.1),
        semantic: CLASS_ROCK,
        color: color(CLASS_ROCK),
    });
    let terrain = vec![
        TerrainSite { x: 0.0, y: -4.0, class: TerrainClass::Gravel },
        TerrainSite { x: -3.5, y: -3.5, class: TerrainClass::Grass },
        TerrainSite { x: 0.0, y: 0.0, class: TerrainClass::Vegetation },
        TerrainSite { x: 0.0, y: 4.0, class: TerrainClass::Leaves },
        TerrainSite { x: 3.5, y: 3.5, class: TerrainClass::Mud },
    ];
    Scene {
        heightfield: Heightfield::flat(),
        primitives,
        terrain,
        bounds: [-6.0, 6.0, -6.0, 6.0],
        seed: 0,
    }
}
