//! Translation-minimised symmetric difference `α(E, F) = min_s |E △ (F + s)|`.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, TorusSet};

/// Result of an α-distance evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaDistance {
    /// Measure of the minimal symmetric difference.
    pub value: f64,
    /// Cells in the minimal symmetric difference.
    pub cells: usize,
    /// Minimising shift `(di, dj)` applied to `F`, in `[0, nx) × [0, ny)`.
    pub shift: (usize, usize),
}

/// Reusable 2-D FFT plans for one grid; holds the spectrum of a fixed reference set.
pub struct AlphaReference {
    grid: PeriodicGrid,
    count: usize,
    spectrum: Vec<Complex<f64>>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl AlphaReference {
    pub fn new(reference: &TorusSet) -> Self {
        let grid = reference.grid();
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(grid.nx());
        let row_inv = planner.plan_fft_inverse(grid.nx());
        let col_fwd = planner.plan_fft_forward(grid.ny());
        let col_inv = planner.plan_fft_inverse(grid.ny());
        let mut me = Self {
            grid,
            count: reference.count(),
            spectrum: Vec::new(),
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
        };
        me.spectrum = me.transform(reference, false);
        me
    }

    fn transform(&self, set: &TorusSet, inverse: bool) -> Vec<Complex<f64>> {
        let mut data: Vec<Complex<f64>> =
            set.cells().iter().map(|&c| Complex::new(if c { 1.0 } else { 0.0 }, 0.0)).collect();
        self.fft2(&mut data, inverse);
        data
    }

    fn fft2(&self, data: &mut [Complex<f64>], inverse: bool) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (row, col) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        for r in data.chunks_mut(nx) {
            row.process(r);
        }
        let mut column = vec![Complex::new(0.0, 0.0); ny];
        for i in 0..nx {
            for j in 0..ny {
                column[j] = data[j * nx + i];
            }
            col.process(&mut column);
            for j in 0..ny {
                data[j * nx + i] = column[j];
            }
        }
    }

    /// α-distance between the stored reference `E` and `other`, shifting `other`.
    pub fn distance(&self, other: &TorusSet) -> Result<AlphaDistance> {
        self.grid.check_same(&other.grid())?;
        let g = self.grid;
        let spec_f = self.transform(other, false);
        // overlap(s) = Σ_x E(x) F(x - s) has spectrum Ê · conj(F̂).
        let mut prod: Vec<Complex<f64>> =
            self.spectrum.iter().zip(&spec_f).map(|(a, b)| a * b.conj()).collect();
        self.fft2(&mut prod, true);
        let norm = g.len() as f64;
        let mut best: Option<(i64, usize)> = None;
        // Row-major scan over (dj, di); lexicographic order on (di, dj) is enforced below.
        for (k, v) in prod.iter().enumerate() {
            let x = v.re / norm;
            let r = x.round();
            if (x - r).abs() > 0.25 {
                return Err(Error::Internal(format!("correlation not integral: {x}")));
            }
            let r = r as i64;
            let (di, dj) = g.coords(k);
            best = match best {
                None => Some((r, k)),
                Some((bv, bk)) => {
                    let (bi, bj) = g.coords(bk);
                    if r > bv || (r == bv && (di, dj) < (bi, bj)) {
                        Some((r, k))
                    } else {
                        Some((bv, bk))
                    }
                }
            };
        }
        let (overlap, k) = best.expect("grid is nonempty");
        let cells = self.count + other.count() - 2 * overlap as usize;
        Ok(AlphaDistance { value: cells as f64 * g.cell_area(), cells, shift: g.coords(k) })
    }
}

/// α-distance of two sets on the same grid.
pub fn alpha_distance(e: &TorusSet, f: &TorusSet) -> Result<AlphaDistance> {
    e.grid().check_same(&f.grid())?;
    AlphaReference::new(e).distance(f)
}
