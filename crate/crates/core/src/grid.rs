//! Periodic grids on the unit torus and the two field types that live on them.
//!
//! Cell `(i, j)` has its center at `((i + 0.5) hx, (j + 0.5) hy)`; `i` runs along x
//! (columns) and `j` along y (rows). Storage is row-major: `idx = j * nx + i`.

use crate::error::{invalid, Error, Result};

/// An `nx` by `ny` cell decomposition of the unit torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicGrid {
    nx: usize,
    ny: usize,
}

impl PeriodicGrid {
    /// Smallest admissible side length. Four cells is the smallest size on which the
    /// 16-neighbourhood stencil still has no self-loops.
    pub const MIN_SIDE: usize = 4;
    /// Largest admissible side length; keeps integer energies comfortably inside i64.
    pub const MAX_SIDE: usize = 4096;

    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < Self::MIN_SIDE || ny < Self::MIN_SIDE {
            return Err(Error::GridTooSmall { nx, ny, min: Self::MIN_SIDE });
        }
        if nx > Self::MAX_SIDE || ny > Self::MAX_SIDE {
            return Err(invalid(format!("grid {nx}x{ny} exceeds {} cells per side", Self::MAX_SIDE)));
        }
        Ok(Self { nx, ny })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of cells.
    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// Always false; present for clippy's `len_without_is_empty`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        1.0 / self.len() as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Index of the cell at signed offset `(di, dj)` from `idx`, wrapping periodically.
    #[inline]
    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> usize {
        let (i, j) = self.coords(idx);
        let ii = (i as isize + di).rem_euclid(self.nx as isize) as usize;
        let jj = (j as isize + dj).rem_euclid(self.ny as isize) as usize;
        jj * self.nx + ii
    }

    /// Cell center in torus coordinates.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub(crate) fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(self.nx, self.ny, other.nx, other.ny));
        }
        Ok(())
    }
}

/// Binary occupancy field: the discrete stand-in for a measurable subset of the torus.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusSet {
    grid: PeriodicGrid,
    cells: Vec<bool>,
}

impl TorusSet {
    pub fn empty(grid: PeriodicGrid) -> Self {
        Self { grid, cells: vec![false; grid.len()] }
    }

    pub fn full(grid: PeriodicGrid) -> Self {
        Self { grid, cells: vec![true; grid.len()] }
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                cells.push(f(i, j));
            }
        }
        Self { grid, cells }
    }

    pub fn from_cells(grid: PeriodicGrid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(invalid(format!("expected {} cells, got {}", grid.len(), cells.len())));
        }
        Ok(Self { grid, cells })
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    #[inline]
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.cells[idx]
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, value: bool) {
        self.cells[idx] = value;
    }

    /// Number of occupied cells.
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Measure of the set: occupied cells times the cell area.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_area()
    }

    pub fn is_proper(&self) -> bool {
        let c = self.count();
        c > 0 && c < self.grid.len()
    }

    pub(crate) fn require_proper(&self) -> Result<()> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(Error::ImproperSet)
        }
    }

    pub fn complement(&self) -> Self {
        Self { grid: self.grid, cells: self.cells.iter().map(|c| !c).collect() }
    }

    /// Translate by whole cells: the result contains `(i + di, j + dj)` iff `self` contains `(i, j)`.
    pub fn shifted(&self, di: isize, dj: isize) -> Self {
        let mut out = vec![false; self.grid.len()];
        for (idx, &c) in self.cells.iter().enumerate() {
            if c {
                out[self.grid.offset(idx, di, dj)] = true;
            }
        }
        Self { grid: self.grid, cells: out }
    }

    /// Number of cells in the symmetric difference.
    pub fn symmetric_difference_count(&self, other: &TorusSet) -> Result<usize> {
        self.grid.check_same(&other.grid)?;
        Ok(self.cells.iter().zip(&other.cells).filter(|(a, b)| a != b).count())
    }

    pub fn union(&self, other: &TorusSet) -> Result<TorusSet> {
        self.grid.check_same(&other.grid)?;
        let cells = self.cells.iter().zip(&other.cells).map(|(a, b)| *a || *b).collect();
        Ok(Self { grid: self.grid, cells })
    }

    pub fn iter_occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(|(k, _)| k)
    }

    /// Cells with at least one opposite-phase 4-neighbour. Both phases are included.
    pub fn boundary_cells(&self) -> TorusSet {
        let g = self.grid;
        let cells = (0..g.len())
            .map(|k| {
                let c = self.cells[k];
                [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|&(di, dj)| self.cells[g.offset(k, di, dj)] != c)
            })
            .collect();
        TorusSet { grid: g, cells }
    }

    /// Torus point given by the circular mean of the occupied cell centers, per axis.
    pub fn barycenter(&self) -> Result<(f64, f64)> {
        let (x, y) = self.barycenter_axes()?;
        match (x, y) {
            (Ok(x), Ok(y)) => Ok((x, y)),
            (Err(r), _) | (_, Err(r)) => Err(Error::DegenerateMean(r)),
        }
    }

    /// Per-axis circular means; an axis whose mean resultant length is below `1e-9`
    /// (e.g. the direction along a lamella) reports that length as its error.
    pub fn barycenter_axes(&self) -> Result<(std::result::Result<f64, f64>, std::result::Result<f64, f64>)> {
        let g = self.grid;
        let (mut cx, mut sx, mut cy, mut sy) = (0.0, 0.0, 0.0, 0.0);
        let mut n = 0usize;
        for k in self.iter_occupied() {
            let (i, j) = g.coords(k);
            let (x, y) = g.center(i, j);
            let (ax, ay) = (std::f64::consts::TAU * x, std::f64::consts::TAU * y);
            cx += ax.cos();
            sx += ax.sin();
            cy += ay.cos();
            sy += ay.sin();
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptySet);
        }
        let n = n as f64;
        let axis = |c: f64, s: f64| {
            let r = (c / n).hypot(s / n);
            if r < 1e-9 {
                return Err(r);
            }
            Ok((s.atan2(c) / std::f64::consts::TAU).rem_euclid(1.0))
        };
        Ok((axis(cx, sx), axis(cy, sy)))
    }
}

/// A real value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        let f = Self { grid, values };
        f.check_finite()?;
        Ok(f)
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut v = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                v.push(f(i, j));
            }
        }
        Self::new(grid, v)
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => {
                let (i, j) = self.grid.coords(k);
                Err(Error::NonFinite(i, j))
            }
            None => Ok(()),
        }
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
