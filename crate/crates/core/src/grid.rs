//! Uniform periodic grids in one or two dimensions.

use crate::error::{DowError, Result};

/// A uniform periodic grid with `n` points per axis over `[x_min, x_max)`.
///
/// Two-dimensional grids are square: both axes share `n` and the extent.
/// Cell `i` along an axis sits at `x_min + i * dx`; amplitudes are stored with
/// axis 0 contiguous, so the flat index of `(i0, i1)` is `i1 * n + i0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    x_min: f64,
    x_max: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(DowError::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(DowError::InvalidGrid(format!("n must be a power of two >= 8, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(DowError::InvalidGrid(format!(
                "need x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { dim, n, x_min, x_max })
    }

    pub fn line(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        Self::new(1, n, x_min, x_max)
    }

    pub fn square(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        Self::new(2, n, x_min, x_max)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    /// Volume element `dx^dim`.
    pub fn dv(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Total number of cells, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of cell `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Per-axis cell indices of a flat index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx % self.n, idx / self.n]
        }
    }

    pub fn flatten(&self, cell: [usize; 2]) -> usize {
        if self.dim == 1 {
            cell[0]
        } else {
            cell[1] * self.n + cell[0]
        }
    }

    pub fn position(&self, idx: usize) -> Position {
        let [i0, i1] = self.unflatten(idx);
        if self.dim == 1 {
            Position::at(self.coord(i0))
        } else {
            Position::at_xy(self.coord(i0), self.coord(i1))
        }
    }

    /// Nearest cell along one axis, clamped into the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.dx()).round();
        raw.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Flat index of the cell nearest to `pos`.
    pub fn nearest_cell(&self, pos: Position) -> usize {
        let i0 = self.nearest_index(pos.x());
        let i1 = if self.dim == 2 { self.nearest_index(pos.y()) } else { 0 };
        self.flatten([i0, i1])
    }

    pub fn contains(&self, pos: Position) -> bool {
        let inside = |v: f64| v >= self.x_min && v < self.x_max;
        inside(pos.x()) && (self.dim == 1 || inside(pos.y()))
    }
}

/// A point in a 1D or 2D domain. In 1D the second coordinate is unused.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position(pub [f64; 2]);

impl Position {
    pub fn at(x: f64) -> Self {
        Position([x, 0.0])
    }

    pub fn at_xy(x: f64, y: f64) -> Self {
        Position([x, y])
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            [x] => Ok(Self::at(*x)),
            [x, y] => Ok(Self::at_xy(*x, *y)),
            _ => Err(DowError::Config(format!(
                "a position needs 1 or 2 coordinates, got {}",
                v.len()
            ))),
        }
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn axis(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn distance_sq(&self, other: &Position, dim: usize) -> f64 {
        (0..dim).map(|i| (self.0[i] - other.0[i]).powi(2)).sum()
    }
}

/// A spatial subset of the grid, used for interaction windows and detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    All,
    /// Cells within `radius` of `center` (Euclidean over all axes).
    Disc {
        center: Position,
        radius: f64,
    },
    /// Cells whose coordinate along `axis` lies in `[lo, hi)`.
    Slab {
        axis: usize,
        lo: f64,
        hi: f64,
    },
}

impl Region {
    pub fn contains(&self, pos: Position, dim: usize) -> bool {
        match *self {
            Region::All => true,
            Region::Disc { center, radius } => pos.distance_sq(&center, dim) <= radius * radius,
            Region::Slab { axis, lo, hi } => {
                let v = pos.axis(axis);
                v >= lo && v < hi
            }
        }
    }

    /// Flat indices of the grid cells inside the region.
    pub fn cells(&self, grid: &GridSpec) -> Vec<usize> {
        (0..grid.len())
            .filter(|&idx| self.contains(grid.position(idx), grid.dim()))
            .collect()
    }
}
