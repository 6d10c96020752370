use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::costmap::Costmap;
use super::grid::Cell;
use crate::error::{Error, Result};

/// Shrinks the heuristic so rounding in accumulated costs cannot make it
/// overestimate.
const HEURISTIC_SLACK: f64 = 1.0 - 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub total_cost: f64,
}

impl Path {
    /// Metric length of the polyline through cell centers.
    pub fn length(&self, cell_size: f64) -> f64 {
        self.cells
            .windows(2)
            .map(|w| {
                let diag = w[0].0 != w[1].0 && w[0].1 != w[1].1;
                if diag {
                    std::f64::consts::SQRT_2 * cell_size
                } else {
                    cell_size
                }
            })
            .sum()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    index: usize,
    g: f64,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest (f, h, index).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn step_cost(len: f64, from: f64, to: f64) -> f64 {
    len * (from + to) / 2.0
}

/// Accumulated cost at each cell of `cells`, summed in path order.
pub fn replay_cost(costmap: &Costmap, cells: &[Cell]) -> Result<Vec<f64>> {
    let mut acc = Vec::with_capacity(cells.len());
    let mut total = 0.0;
    for (i, &cell) in cells.iter().enumerate() {
        if !costmap.spec().contains(cell) {
            return Err(Error::input(format!("path cell {cell:?} outside the grid")));
        }
        if i > 0 {
            let prev = cells[i - 1];
            let (dr, dc) = (prev.0.abs_diff(cell.0), prev.1.abs_diff(cell.1));
            let len = match (dr, dc) {
                (1, 1) => std::f64::consts::SQRT_2,
                (0, 1) | (1, 0) => 1.0,
                _ => return Err(Error::input(format!("path cells {prev:?} and {cell:?} are not adjacent"))),
            };
            total += step_cost(len, costmap.cost(prev), costmap.cost(cell));
        }
        acc.push(total);
    }
    Ok(acc)
}

/// 8-connected A* with step cost `len·(c_from + c_to)/2`.
/// Returns `Ok(None)` when the goal is unreachable.
pub fn a_star(costmap: &Costmap, start: Cell, goal: Cell) -> Result<Option<Path>> {
    let spec = *costmap.spec();
    for (name, cell) in [("start", start), ("goal", goal)] {
        if !spec.contains(cell) {
            return Err(Error::input(format!("{name} {cell:?} outside the grid")));
        }
        if !costmap.passable(cell) {
            return Err(Error::input(format!("{name} {cell:?} is impassable")));
        }
    }
    let min_cost = costmap.min_cost().expect("start is passable");
    let (gr, gc) = (goal.0 as f64, goal.1 as f64);
    let heuristic = |(r, c): Cell| ((r as f64 - gr).hypot(c as f64 - gc)) * min_cost * HEURISTIC_SLACK;

    let mut g = vec![f64::INFINITY; spec.len()];
    let mut parent = vec![usize::MAX; spec.len()];
    let mut heap = BinaryHeap::new();
    let s = spec.index(start);
    g[s] = 0.0;
    let h0 = heuristic(start);
    heap.push(Entry { f: h0, h: h0, index: s, g: 0.0 });
    let goal_index = spec.index(goal);
    while let Some(Entry { index, g: g_here, .. }) = heap.pop() {
        if g_here > g[index] {
            continue;
        }
        if index == goal_index {
            let mut cells = vec![goal];
            let mut at = index;
            while at != s {
                at = parent[at];
                cells.push(spec.cell_of_index(at));
            }
            cells.reverse();
            return Ok(Some(Path { cells, total_cost: g_here }));
        }
        let cell = spec.cell_of_index(index);
        let here = costmap.cost(cell);
        for (n, len) in spec.neighbors(cell) {
            let c = costmap.cost(n);
            if !c.is_finite() {
                continue;
            }
            let ni = spec.index(n);
            let cand = g_here + step_cost(len, here, c);
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = index;
                let h = heuristic(n);
                heap.push(Entry { f: cand + h, h, index: ni, g: cand });
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::{Grid, GridSpec, Provenance, IMPASSABLE};
    use crate::scene::Point3;

    fn uniform(n: usize) -> Costmap {
        let spec = GridSpec { origin: Point3::ZERO, cell_size: 0.1, width: n, height: n };
        Costmap { cost: Grid::filled(spec, 1.0), provenance: Provenance::Full }
    }

    #[test]
    fn diagonal_on_uniform_grid() {
        let p = a_star(&uniform(10), (0, 0), (9, 9)).unwrap().unwrap();
        assert!((p.total_cost - 9.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(p.cells.len(), 10);
        assert_eq!(p.cells[0], (0, 0));
    }

    #[test]
    fn replay_matches_total_cost() {
        let mut c = uniform(12);
        for r in 2..10 {
            c.cost.set((r, 6), 3.5);
        }
        let p = a_star(&c, (1, 1), (10, 10)).unwrap().unwrap();
        assert_eq!(*replay_cost(&c, &p.cells).unwrap().last().unwrap(), p.total_cost);
        assert!(replay_cost(&c, &[(0, 0), (2, 2)]).is_err());
    }

    #[test]
    fn enclosed_goal_has_no_path() {
        let mut map = uniform(9);
        for r in 3..=5 {
            for c in 3..=5 {
                if (r, c) != (4, 4) {
                    map.cost.set((r, c), IMPASSABLE);
                }
            }
        }
        assert_eq!(a_star(&map, (0, 0), (4, 4)).unwrap(), None);
    }

    #[test]
    fn invalid_endpoints_are_errors() {
        let mut map = uniform(4);
        map.cost.set((1, 1), IMPASSABLE);
        assert!(a_star(&map, (0, 0), (4, 0)).is_err());
        assert!(a_star(&map, (1, 1), (3, 3)).is_err());
    }
}
