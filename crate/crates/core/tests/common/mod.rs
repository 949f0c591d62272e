//! Shared helpers for integration tests: exhaustive oracles and shape builders.
#![allow(dead_code)]

use vpflow::stencil::OFFSETS;
use vpflow::{PeriodicGrid, Stencil, TorusSet};

/// Direct evaluation of `P(F) + Σ_{x∈F} pot(x)` from cell occupancy, family by family.
pub fn direct_energy(stencil: &Stencil, pot: &[i64], mask: u64) -> i64 {
    let g = stencil.grid();
    let inside = |i: isize, j: isize| -> bool {
        let ii = i.rem_euclid(g.nx() as isize) as usize;
        let jj = j.rem_euclid(g.ny() as isize) as usize;
        mask >> (jj * g.nx() + ii) & 1 == 1
    };
    let mut e = 0i64;
    for j in 0..g.ny() as isize {
        for i in 0..g.nx() as isize {
            let a = inside(i, j);
            if a {
                e += pot[j as usize * g.nx() + i as usize];
            }
            for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
                if a != inside(i + di, j + dj) {
                    e += stencil.weights()[k];
                }
            }
        }
    }
    e
}

/// Exhaustive minima by cardinality: `best[m] = (energy, mask)` over all subsets with `m`
/// cells. Subsets are visited in Gray-code order; the energy is updated by the exact local
/// change of each toggle and re-verified by direct evaluation for every recorded optimum.
pub fn minima_by_count(stencil: &Stencil, pot: &[i64]) -> Vec<(i64, u64)> {
    let g = stencil.grid();
    let n = g.len();
    assert!(n <= 24);
    let mut nbr: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for k in 0..n {
        for (f, &(di, dj)) in OFFSETS.iter().enumerate() {
            let w = stencil.weights()[f];
            nbr[k].push((g.offset(k, di, dj), w));
            nbr[k].push((g.offset(k, -di, -dj), w));
        }
    }
    let mut best = vec![(i64::MAX, 0u64); n + 1];
    let mut mask = 0u64;
    let mut e = 0i64;
    let mut count = 0usize;
    best[0] = (0, 0);
    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        let on = mask >> k & 1 == 1;
        let mut d = if on { -pot[k] } else { pot[k] };
        for &(y, w) in &nbr[k] {
            let yin = mask >> y & 1 == 1;
            d += if yin == on { w } else { -w };
        }
        mask ^= 1 << k;
        e += d;
        count = if on { count - 1 } else { count + 1 };
        // Prefer lexicographically smaller masks among ties for determinism.
        if e < best[count].0 || (e == best[count].0 && mask < best[count].1) {
            best[count] = (e, mask);
        }
    }
    for (m, &(be, bm)) in best.iter().enumerate() {
        assert_eq!(direct_energy(stencil, pot, bm), be, "incremental energy drifted at m = {m}");
    }
    best
}

pub fn mask_of(set: &TorusSet) -> u64 {
    set.iter_occupied().fold(0u64, |m, k| m | 1 << k)
}

pub fn disc(g: PeriodicGrid, cx: f64, cy: f64, r: f64) -> TorusSet {
    TorusSet::from_fn(g, |i, j| {
        let (x, y) = g.center(i, j);
        let dx = (x - cx + 0.5).rem_euclid(1.0) - 0.5;
        let dy = (y - cy + 0.5).rem_euclid(1.0) - 0.5;
        dx * dx + dy * dy <= r * r
    })
}

/// Unconstrained minimum over all subsets, with the intersection and union of all minimizers.
pub fn unconstrained_minimum(stencil: &Stencil, pot: &[i64]) -> (i64, u64, u64) {
    let n = stencil.grid().len();
    assert!(n <= 24);
    let energies: Vec<i64> = (0..1u64 << n).map(|mask| direct_energy(stencil, pot, mask)).collect();
    let best = *energies.iter().min().unwrap();
    let (mut meet, mut join) = (u64::MAX >> (64 - n), 0u64);
    for (mask, &e) in energies.iter().enumerate() {
        if e == best {
            meet &= mask as u64;
            join |= mask as u64;
        }
    }
    (best, meet, join)
}

pub fn random_units(rng: &mut impl rand::Rng, n: usize, scale: f64) -> Vec<i64> {
    (0..n).map(|_| (rng.gen_range(-scale..scale) * 1048576.0).round() as i64).collect()
}

/// Step configuration with enough exact-search budget to certify every step on grids of
/// up to a few dozen cells.
pub fn certifying(h: f64) -> vpflow::StepConfig {
    let mut cfg = vpflow::StepConfig::new(h).unwrap();
    cfg.exact_budget = 1 << 20;
    cfg
}
