//! Exact periodic Euclidean distances between cell centers.
//!
//! Squared distances are carried as integers: for a displacement of `(di, dj)` cells the
//! cost is `di² ny² + dj² nx²`, which equals the squared Euclidean length times `(nx ny)²`.
//! The row pass is the Felzenszwalb–Huttenlocher lower envelope evaluated on three
//! periodic copies of each row with exact rational breakpoints, so the transform returns
//! the true minimum over all periodic images.

use crate::error::Result;
use crate::grid::{PeriodicGrid, ScalarField, TorusSet};

/// Marker for "no feature anywhere".
pub const NO_FEATURE: i64 = i64::MAX;

/// Integer squared distance from every cell center to the nearest feature cell center.
pub fn squared_cost_transform(grid: PeriodicGrid, features: &[bool]) -> Vec<i64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    debug_assert_eq!(features.len(), nx * ny);
    // Column pass: periodic distance in rows to the nearest feature in the same column.
    let mut col = vec![NO_FEATURE; nx * ny];
    let mut buf = vec![usize::MAX; ny];
    for i in 0..nx {
        let Some(first) = (0..ny).find(|&j| features[j * nx + i]) else { continue };
        let mut last = first;
        for step in 1..=ny {
            let j = (first + step) % ny;
            if features[j * nx + i] {
                last = j;
            }
            buf[j] = (j + ny - last) % ny;
        }
        let mut last = first;
        for step in 1..=ny {
            let j = (first + ny - step) % ny;
            if features[j * nx + i] {
                last = j;
            }
            buf[j] = buf[j].min((last + ny - j) % ny);
        }
        let w = (nx as i64) * (nx as i64);
        for j in 0..ny {
            let d = buf[j] as i64;
            col[j * nx + i] = d * d * w;
        }
    }
    // Row pass.
    let c = (ny as i128) * (ny as i128);
    let mut out = vec![NO_FEATURE; nx * ny];
    let mut sites: Vec<(i128, i128)> = Vec::with_capacity(3 * nx);
    let mut z: Vec<(i128, i128)> = Vec::with_capacity(3 * nx + 1);
    for j in 0..ny {
        let row = &col[j * nx..(j + 1) * nx];
        if row.iter().all(|&v| v == NO_FEATURE) {
            continue;
        }
        sites.clear();
        z.clear();
        for rep in 0..3i128 {
            for (i, &v) in row.iter().enumerate() {
                if v != NO_FEATURE {
                    let pos = i as i128 + (rep - 1) * nx as i128;
                    let key = v as i128 + c * pos * pos;
                    // Push site, popping dominated parabolas.
                    loop {
                        let Some(&(pu, ku)) = sites.last() else { break };
                        let num = key - ku;
                        let den = 2 * c * (pos - pu);
                        if sites.len() > 1 {
                            let (zn, zd) = z[sites.len() - 1];
                            if num * zd <= zn * den {
                                sites.pop();
                                z.pop();
                                continue;
                            }
                        }
                        z.push((num, den));
                        break;
                    }
                    if sites.is_empty() {
                        z.push((0, 0)); // placeholder for minus infinity
                    }
                    sites.push((pos, key));
                }
            }
        }
        let mut k = 0usize;
        for x in 0..nx as i128 {
            while k + 1 < sites.len() {
                let (zn, zd) = z[k + 1];
                if zn < x * zd {
                    k += 1;
                } else {
                    break;
                }
            }
            let (pos, key) = sites[k];
            let v = key - c * pos * pos + c * (x - pos) * (x - pos);
            out[j * nx + x as usize] = v as i64;
        }
    }
    out
}

/// Converts an integer squared cost into a Euclidean distance.
#[inline]
pub fn cost_to_distance(grid: PeriodicGrid, cost: i64) -> f64 {
    (cost as f64).sqrt() / (grid.nx() as f64 * grid.ny() as f64)
}

/// Signed distance: distance to the occupied centers minus distance to the empty centers.
pub fn signed_distance(set: &TorusSet) -> Result<ScalarField> {
    set.require_proper()?;
    let g = set.grid();
    let inside = squared_cost_transform(g, set.cells());
    let comp: Vec<bool> = set.cells().iter().map(|c| !c).collect();
    let outside = squared_cost_transform(g, &comp);
    let values = (0..g.len())
        .map(|k| {
            if set.get(k) {
                -cost_to_distance(g, outside[k])
            } else {
                cost_to_distance(g, inside[k])
            }
        })
        .collect();
    Ok(ScalarField::from_raw(g, values))
}

/// Unsigned distance to the boundary, `|sd|`.
pub fn boundary_distance(set: &TorusSet) -> Result<ScalarField> {
    Ok(signed_distance(set)?.map(f64::abs))
}

/// `∫_{F△E} dist_{∂E}` on the grid.
pub fn dissipation(f: &TorusSet, e: &TorusSet) -> Result<f64> {
    e.grid().check_same(&f.grid())?;
    let bd = boundary_distance(e)?;
    Ok(dissipation_with(f, e, &bd))
}

pub(crate) fn dissipation_with(f: &TorusSet, e: &TorusSet, bd: &ScalarField) -> f64 {
    let mut sum = 0.0;
    for (k, (a, b)) in f.cells().iter().zip(e.cells()).enumerate() {
        if a != b {
            sum += bd.values()[k];
        }
    }
    sum * e.grid().cell_area()
}

/// Hausdorff distance between the boundary-cell centers of two proper sets.
///
/// Boundary cells of a set are the cells (of either phase) having an opposite-phase
/// 4-neighbour, so equal sets are at distance zero.
pub fn hausdorff_boundary(e: &TorusSet, f: &TorusSet) -> Result<f64> {
    e.grid().check_same(&f.grid())?;
    e.require_proper()?;
    f.require_proper()?;
    let g = e.grid();
    let be = e.boundary_cells();
    let bf = f.boundary_cells();
    let ce = squared_cost_transform(g, be.cells());
    let cf = squared_cost_transform(g, bf.cells());
    let a = be.iter_occupied().map(|k| cf[k]).max().unwrap_or(0);
    let b = bf.iter_occupied().map(|k| ce[k]).max().unwrap_or(0);
    Ok(cost_to_distance(g, a.max(b)))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Minimum over all periodic images by direct enumeration.
    pub(crate) fn brute_cost(grid: PeriodicGrid, features: &[bool]) -> Vec<i64> {
        let (nx, ny) = (grid.nx() as i64, grid.ny() as i64);
        (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                let mut best = NO_FEATURE;
                for (f, &on) in features.iter().enumerate() {
                    if !on {
                        continue;
                    }
                    let (fi, fj) = grid.coords(f);
                    for ti in -1..=1 {
                        for tj in -1..=1 {
                            let di = i as i64 - (fi as i64 + ti * nx);
                            let dj = j as i64 - (fj as i64 + tj * ny);
                            best = best.min(di * di * ny * ny + dj * dj * nx * nx);
                        }
                    }
                }
                best
            })
            .collect()
    }

    #[test]
    fn transform_matches_brute_force_on_small_grids() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for nx in 4..=8 {
            for ny in 4..=8 {
                let g = PeriodicGrid::new(nx, ny).unwrap();
                for density in [0.05, 0.2, 0.5, 0.9] {
                    for _ in 0..20 {
                        let feats: Vec<bool> = (0..g.len()).map(|_| rng.gen_bool(density)).collect();
                        assert_eq!(squared_cost_transform(g, &feats), brute_cost(g, &feats), "{nx}x{ny}");
                    }
                }
            }
        }
    }

    #[test]
    fn transform_matches_brute_force_on_rectangular_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let g = PeriodicGrid::new(23, 17).unwrap();
        for _ in 0..10 {
            let feats: Vec<bool> = (0..g.len()).map(|_| rng.gen_bool(0.03)).collect();
            assert_eq!(squared_cost_transform(g, &feats), brute_cost(g, &feats));
        }
    }

    #[test]
    fn single_cell_diagonal_distance() {
        let g = PeriodicGrid::square(4).unwrap();
        let mut s = TorusSet::empty(g);
        s.set(0, true);
        let sd = signed_distance(&s).unwrap();
        assert!((sd.get(2, 2) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((sd.get(0, 0) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn lamella_center_row_distance() {
        let g = PeriodicGrid::square(64).unwrap();
        let s = TorusSet::from_fn(g, |_, j| j < 8);
        let sd = signed_distance(&s).unwrap();
        // Rows 3 and 4 are four cells from the nearest empty row.
        assert_eq!(sd.get(10, 3), -4.0 / 64.0);
        assert_eq!(sd.get(10, 4), -4.0 / 64.0);
        assert_eq!(sd.get(10, 8), 1.0 / 64.0);
    }

    #[test]
    fn complement_negates_signed_distance() {
        let g = PeriodicGrid::new(30, 20).unwrap();
        let s = TorusSet::from_fn(g, |i, j| (i * i + 3 * j) % 7 < 3);
        let a = signed_distance(&s).unwrap();
        let b = signed_distance(&s.complement()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn checkerboard_boundary_distance_is_one_cell() {
        let g = PeriodicGrid::square(16).unwrap();
        let s = TorusSet::from_fn(g, |i, j| (i + j) % 2 == 0);
        let bd = boundary_distance(&s).unwrap();
        assert!(bd.values().iter().all(|&v| v == g.hx()));
    }

    #[test]
    fn improper_sets_rejected() {
        let g = PeriodicGrid::square(8).unwrap();
        assert!(signed_distance(&TorusSet::empty(g)).is_err());
        assert!(signed_distance(&TorusSet::full(g)).is_err());
    }

    #[test]
    fn dissipation_of_row_shift() {
        let g = PeriodicGrid::square(32).unwrap();
        let e = TorusSet::from_fn(g, |_, j| (4..12).contains(&j));
        let f = e.shifted(0, 1);
        // Row 4 leaves (one cell inside the boundary), row 12 enters (one cell outside).
        let expected = 2.0 * 32.0 * g.hy() * g.cell_area();
        assert!((dissipation(&f, &e).unwrap() - expected).abs() < 1e-15);
        assert_eq!(dissipation(&e, &e).unwrap(), 0.0);
    }

    #[test]
    fn hausdorff_of_nested_lamellae() {
        let g = PeriodicGrid::square(64).unwrap();
        let e = TorusSet::from_fn(g, |_, j| (20..30).contains(&j));
        let f = TorusSet::from_fn(g, |_, j| (19..31).contains(&j));
        assert_eq!(hausdorff_boundary(&e, &f).unwrap(), g.hy());
        assert_eq!(hausdorff_boundary(&e, &e).unwrap(), 0.0);
    }
}
