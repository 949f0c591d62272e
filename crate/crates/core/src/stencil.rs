//! Cauchy–Crofton perimeter on a 16-neighbourhood with integer weights.
//!
//! Every energy in the crate is carried in integer units of `1 / (nx * ny * 2^ENERGY_BITS)`.
//! The eight undirected stencil families get weights proportional to the classical
//! Cauchy–Crofton angular measure; the axis families are then solved for so that a
//! straight horizontal or vertical line of length one costs exactly `nx * ny * 2^ENERGY_BITS`
//! units. An axis-aligned lamella therefore has perimeter exactly 2.

use crate::grid::{PeriodicGrid, TorusSet};

/// Fractional bits of the integer energy scale.
pub const ENERGY_BITS: u32 = 20;

/// Offsets `(di, dj)` of the eight undirected neighbour families. The first two are the axes.
pub const OFFSETS: [(isize, isize); 8] =
    [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (2, -1), (1, 2), (1, -2)];

/// Stencil weights for one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    grid: PeriodicGrid,
    weights: [i64; 8],
    units_per_length: f64,
}

impl Stencil {
    pub fn new(grid: PeriodicGrid) -> Self {
        let (nx, ny) = (grid.nx() as f64, grid.ny() as f64);
        let (hx, hy) = (grid.hx(), grid.hy());
        let angle = |&(a, b): &(isize, isize)| (b as f64 * hy).atan2(a as f64 * hx).rem_euclid(std::f64::consts::PI);
        let mut order: Vec<usize> = (0..8).collect();
        order.sort_by(|&a, &b| angle(&OFFSETS[a]).total_cmp(&angle(&OFFSETS[b])));
        let mut raw = [0.0f64; 8];
        for (pos, &k) in order.iter().enumerate() {
            let prev = angle(&OFFSETS[order[(pos + 7) % 8]]);
            let next = angle(&OFFSETS[order[(pos + 1) % 8]]);
            let dphi = (next - prev).rem_euclid(std::f64::consts::PI) / 2.0;
            let (a, b) = OFFSETS[k];
            let len = (a as f64 * hx).hypot(b as f64 * hy);
            raw[k] = hx * hy * dphi / (2.0 * len);
        }
        // Horizontal interfaces are crossed by |b| pairs per column, vertical ones by |a| per row.
        let sum_b: f64 = (0..8).map(|k| raw[k] * OFFSETS[k].1.unsigned_abs() as f64).sum();
        let sum_a: f64 = (0..8).map(|k| raw[k] * OFFSETS[k].0.unsigned_abs() as f64).sum();
        let sigma = 0.5 * (1.0 / (nx * sum_b) + 1.0 / (ny * sum_a));

        let unit = (1i64 << ENERGY_BITS) as f64;
        let denom = nx * ny * unit;
        let mut weights = [0i64; 8];
        for k in 2..8 {
            weights[k] = (sigma * raw[k] * denom).round() as i64;
        }
        let rest_b: i64 = (2..8).map(|k| weights[k] * OFFSETS[k].1.abs() as i64).sum();
        let rest_a: i64 = (2..8).map(|k| weights[k] * OFFSETS[k].0.abs() as i64).sum();
        weights[1] = grid.ny() as i64 * (1i64 << ENERGY_BITS) - rest_b;
        weights[0] = grid.nx() as i64 * (1i64 << ENERGY_BITS) - rest_a;
        debug_assert!(weights.iter().all(|&w| w > 0), "{weights:?}");
        Self { grid, weights, units_per_length: denom }
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    /// Integer weight of each family in [`OFFSETS`].
    #[inline]
    pub fn weights(&self) -> &[i64; 8] {
        &self.weights
    }

    /// Integer energy units per unit of length (and per unit of area times 1/h potential).
    #[inline]
    pub fn units_per_length(&self) -> f64 {
        self.units_per_length
    }

    /// Upper bound on the pairwise energy attached to one cell (both directions of every family).
    pub fn cell_weight_sum(&self) -> i64 {
        2 * self.weights.iter().sum::<i64>()
    }

    /// Perimeter in integer units.
    pub fn perimeter_units(&self, set: &TorusSet) -> i64 {
        let g = self.grid;
        debug_assert_eq!(g, set.grid());
        let cells = set.cells();
        let (nx, ny) = (g.nx(), g.ny());
        let mut total = 0i64;
        for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
            let mut count = 0i64;
            for j in 0..ny {
                let jj = (j as isize + dj).rem_euclid(ny as isize) as usize;
                let row = &cells[j * nx..(j + 1) * nx];
                let nrow = &cells[jj * nx..(jj + 1) * nx];
                for i in 0..nx {
                    let ii = (i as isize + di).rem_euclid(nx as isize) as usize;
                    count += (row[i] != nrow[ii]) as i64;
                }
            }
            total += count * self.weights[k];
        }
        total
    }

    pub fn perimeter(&self, set: &TorusSet) -> f64 {
        self.perimeter_units(set) as f64 / self.units_per_length
    }
}

/// Convenience wrapper: perimeter of a set with a freshly built stencil.
pub fn perimeter(set: &TorusSet) -> f64 {
    Stencil::new(set.grid()).perimeter(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_lamellae_are_exact() {
        for (nx, ny) in [(8, 8), (64, 64), (40, 24), (256, 256)] {
            let g = PeriodicGrid::new(nx, ny).unwrap();
            let st = Stencil::new(g);
            let h = TorusSet::from_fn(g, |_, j| j >= 2 && j < ny / 2);
            let v = TorusSet::from_fn(g, |i, _| i >= 3 && i < nx / 2 + 1);
            assert_eq!(st.perimeter(&h), 2.0);
            assert_eq!(st.perimeter(&v), 2.0);
        }
    }

    #[test]
    fn trivial_sets_have_zero_perimeter() {
        let g = PeriodicGrid::square(16).unwrap();
        assert_eq!(perimeter(&TorusSet::empty(g)), 0.0);
        assert_eq!(perimeter(&TorusSet::full(g)), 0.0);
    }

    #[test]
    fn weights_are_positive_and_symmetric_on_square_grids() {
        let st = Stencil::new(PeriodicGrid::square(128).unwrap());
        let w = st.weights();
        assert!(w.iter().all(|&x| x > 0));
        assert_eq!(w[0], w[1]);
        assert_eq!(w[2], w[3]);
        assert_eq!(w[4], w[5]);
        assert_eq!(w[4], w[6]);
    }

    #[test]
    fn disc_perimeter_within_two_percent() {
        use rand::{Rng, SeedableRng};
        let g = PeriodicGrid::square(256).unwrap();
        let st = Stencil::new(g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let (cx, cy): (f64, f64) = (rng.gen(), rng.gen());
            let s = TorusSet::from_fn(g, |i, j| {
                let (x, y) = g.center(i, j);
                let dx = (x - cx + 0.5).rem_euclid(1.0) - 0.5;
                let dy = (y - cy + 0.5).rem_euclid(1.0) - 0.5;
                dx * dx + dy * dy <= 0.0625
            });
            let rel = (st.perimeter(&s) / std::f64::consts::FRAC_PI_2 - 1.0).abs();
            worst = worst.max(rel);
        }
        assert!(worst < 0.02, "worst relative error {worst}");
    }

    #[test]
    fn complement_has_equal_perimeter() {
        let g = PeriodicGrid::new(20, 12).unwrap();
        let st = Stencil::new(g);
        let s = TorusSet::from_fn(g, |i, j| (i * 7 + j * 3) % 5 < 2);
        assert_eq!(st.perimeter_units(&s), st.perimeter_units(&s.complement()));
    }
}
