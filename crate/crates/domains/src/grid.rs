//! Grid maps with obstacles and a discretized Gaussian over their free cells.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, 1),
            Direction::East => (1, 0),
            Direction::South => (0, -1),
            Direction::West => (-1, 0),
        }
    }
}

/// A rectangular grid whose free cells are numbered densely in row-major
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: i32,
    height: i32,
    /// Free-cell index per grid position, `None` for obstacles.
    index: Vec<Option<usize>>,
    cells: Vec<(i32, i32)>,
    /// Nearest free cell of every grid position (identity on free cells).
    nearest: Vec<usize>,
}

impl GridMap {
    pub fn new(width: i32, height: i32, blocked: impl Fn(i32, i32) -> bool) -> Self {
        let mut index = Vec::with_capacity((width * height) as usize);
        let mut cells = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if blocked(x, y) {
                    index.push(None);
                } else {
                    index.push(Some(cells.len()));
                    cells.push((x, y));
                }
            }
        }
        assert!(!cells.is_empty(), "grid has no free cells");
        let mut nearest = Vec::with_capacity(index.len());
        for y in 0..height {
            for x in 0..width {
                let here = index[(y * width + x) as usize];
                nearest.push(here.unwrap_or_else(|| {
                    let mut best = 0;
                    let mut best_d = i64::MAX;
                    for (i, &(cx, cy)) in cells.iter().enumerate() {
                        let d = ((cx - x) as i64).pow(2) + ((cy - y) as i64).pow(2);
                        if d < best_d {
                            best_d = d;
                            best = i;
                        }
                    }
                    best
                }));
            }
        }
        GridMap {
            width,
            height,
            index,
            cells,
            nearest,
        }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn free_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn coords(&self, cell: usize) -> (i32, i32) {
        self.cells[cell]
    }

    pub fn cell_at(&self, x: i32, y: i32) -> Option<usize> {
        if x < 0 || y < 0 || x >= self.width || y >= self.height {
            return None;
        }
        self.index[(y * self.width + x) as usize]
    }

    pub fn is_free(&self, x: i32, y: i32) -> bool {
        self.cell_at(x, y).is_some()
    }

    /// The cell reached by moving one step, or the same cell if blocked.
    pub fn moved(&self, cell: usize, dir: Direction) -> usize {
        let (x, y) = self.cells[cell];
        let (dx, dy) = dir.delta();
        self.cell_at(x + dx, y + dy).unwrap_or(cell)
    }

    pub fn manhattan(&self, a: usize, b: usize) -> i32 {
        let (ax, ay) = self.cells[a];
        let (bx, by) = self.cells[b];
        (ax - bx).abs() + (ay - by).abs()
    }

    /// True when every free cell is reachable from every other.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(c) = stack.pop() {
            for d in Direction::ALL {
                let n = self.moved(c, d);
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Samples from a Gaussian centred on `center` with isotropic standard
    /// deviation `sigma`, rounded to the nearest grid position, clamped to the
    /// map and snapped to the nearest free cell.
    pub fn sample_gaussian<R: Rng + ?Sized>(&self, center: usize, sigma: f64, rng: &mut R) -> usize {
        let (cx, cy) = self.cells[center];
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        let x = ((cx as f64 + sigma * zx).round() as i64).clamp(0, self.width as i64 - 1) as i32;
        let y = ((cy as f64 + sigma * zy).round() as i64).clamp(0, self.height as i64 - 1) as i32;
        self.nearest[(y * self.width + x) as usize]
    }

    /// Probability that [`GridMap::sample_gaussian`] returns `target`.
    pub fn gaussian_mass(&self, center: usize, sigma: f64, target: usize) -> f64 {
        let (cx, cy) = self.cells[center];
        let mx = folded_masses(cx as f64, sigma, self.width as usize);
        let my = folded_masses(cy as f64, sigma, self.height as usize);
        let mut mass = 0.0;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.nearest[(y * self.width + x) as usize] == target {
                    mass += mx[x as usize] * my[y as usize];
                }
            }
        }
        mass
    }
}

/// Mass of `N(center, sigma²)` rounded to each integer in `0..len`, with the
/// tails folded into the two end points.
pub fn folded_masses(center: f64, sigma: f64, len: usize) -> Vec<f64> {
    let cdf = |x: f64| normal_cdf((x - center) / sigma);
    (0..len)
        .map(|k| {
            let lo = if k == 0 { 0.0 } else { cdf(k as f64 - 0.5) };
            let hi = if k + 1 == len { 1.0 } else { cdf(k as f64 + 0.5) };
            (hi - lo).max(0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring() -> GridMap {
        GridMap::new(4, 3, |x, y| x == 1 && y == 1)
    }

    #[test]
    fn folded_masses_sum_to_one() {
        for &(c, s) in &[(0.0, 0.3), (2.0, 1.5), (5.7, 10.0), (1.0, 1e-3)] {
            let m = folded_masses(c, s, 7);
            assert_relative_eq!(m.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_mass_sums_to_one_over_free_cells() {
        let g = ring();
        for c in 0..g.free_cells() {
            let total: f64 = (0..g.free_cells()).map(|t| g.gaussian_mass(c, 1.3, t)).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn empirical_frequencies_match_mass() {
        let g = ring();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let center = g.cell_at(0, 1).unwrap();
        let n = 200_000;
        let mut counts = vec![0usize; g.free_cells()];
        for _ in 0..n {
            counts[g.sample_gaussian(center, 0.9, &mut rng)] += 1;
        }
        for (t, &c) in counts.iter().enumerate() {
            let p = g.gaussian_mass(center, 0.9, t);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() <= 5.0 * se + 1e-12, "cell {t}");
        }
    }

    #[test]
    fn moves_respect_obstacles() {
        let g = ring();
        let c = g.cell_at(0, 1).unwrap();
        assert_eq!(g.moved(c, Direction::East), c);
        assert_eq!(g.moved(c, Direction::West), c);
        assert_eq!(g.coords(g.moved(c, Direction::North)), (0, 2));
        assert!(g.is_connected());
    }
}
