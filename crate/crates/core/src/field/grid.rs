use super::model::{FieldModel, FrameFeatures};
use super::tape::Real;
use crate::error::{Error, Result};
use crate::scene::{FieldPrediction, Point3};

/// Axis-aligned box `[x0, x1, y0, y1, z0, z1]` sampled at lattice points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec3 {
    pub bounds: [f64; 6],
    /// Points per axis; each axis includes both bounds when its count > 1.
    pub resolution: [usize; 3],
}

impl GridSpec3 {
    pub fn validate(&self) -> Result<()> {
        if self.resolution.iter().any(|&r| r == 0) {
            return Err(Error::input("grid resolution must be positive on every axis"));
        }
        for a in 0..3 {
            let (lo, hi) = (self.bounds[2 * a], self.bounds[2 * a + 1]);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::input(format!("invalid grid bounds on axis {a}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = (self.bounds[2 * axis], self.bounds[2 * axis + 1]);
        let n = self.resolution[axis];
        if n == 1 {
            return lo;
        }
        lo + (hi - lo) * (i as f64 / (n - 1) as f64)
    }

    /// Lattice points, x fastest, then y, then z.
    pub fn points(&self) -> Vec<Point3> {
        let [nx, ny, nz] = self.resolution;
        let mut out = Vec::with_capacity(self.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.push(Point3::new(self.coord(0, i), self.coord(1, j), self.coord(2, k)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPrediction {
    pub spec: GridSpec3,
    pub points: Vec<Point3>,
    pub predictions: Vec<FieldPrediction>,
}

impl GridPrediction {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.spec.resolution;
        (k * ny + j) * nx + i
    }

    pub fn traversability(&self) -> Option<f64> {
        self.predictions.first().map(|p| p.traversability)
    }
}

/// Evaluates every head on a lattice, reusing one frame encoding.
pub fn query_grid<T: Real>(model: &FieldModel<T>, features: &FrameFeatures<T>, spec: GridSpec3) -> Result<GridPrediction> {
    spec.validate()?;
    let points = spec.points();
    let predictions = model.predict(features, &points);
    Ok(GridPrediction { spec, points, predictions })
}
