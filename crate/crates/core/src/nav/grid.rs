use crate::error::{Error, Result};
use crate::scene::Point3;

/// Grid coordinates as `(row, col)`; rows advance along +y, columns along +x.
pub type Cell = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Corner of cell (0, 0).
    pub origin: Point3,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::input(format!("cell size must be positive, got {}", self.cell_size)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::input("grid must have at least one cell"));
        }
        if !self.origin.is_finite() {
            return Err(Error::input("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, (row, col): Cell) -> usize {
        row * self.width + col
    }

    pub fn cell_of_index(&self, i: usize) -> Cell {
        (i / self.width, i % self.width)
    }

    pub fn contains(&self, (row, col): Cell) -> bool {
        row < self.height && col < self.width
    }

    /// `(x, y)` of a cell center.
    pub fn center(&self, (row, col): Cell) -> (f64, f64) {
        (
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing `(x, y)`, if inside the grid.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        let c = ((x - self.origin.x) / self.cell_size).floor();
        let r = ((y - self.origin.y) / self.cell_size).floor();
        if c < 0.0 || r < 0.0 {
            return None;
        }
        let cell = (r as usize, c as usize);
        self.contains(cell).then_some(cell)
    }

    /// Up to eight neighbors with their step length in cells.
    pub fn neighbors(&self, (row, col): Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const STEPS: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
        STEPS.iter().filter_map(move |&(dr, dc)| {
            let r = row as i64 + dr;
            let c = col as i64 + dc;
            if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
                return None;
            }
            let len = if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            Some(((r as usize, c as usize), len))
        })
    }
}

/// Row-major values over a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub spec: GridSpec,
    pub data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(spec: GridSpec, value: T) -> Self {
        Grid { data: vec![value; spec.len()], spec }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Cell) -> T) -> Self {
        Grid { data: (0..spec.len()).map(|i| f(spec.cell_of_index(i))).collect(), spec }
    }

    pub fn get(&self, cell: Cell) -> &T {
        &self.data[self.spec.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, value: T) {
        let i = self.spec.index(cell);
        self.data[i] = value;
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid { spec: self.spec, data: self.data.iter().map(f).collect() }
    }
}
