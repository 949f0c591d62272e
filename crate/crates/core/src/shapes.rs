//! Canonical sets on the grid: discs, unions of discs, lamellae, complements, random
//! tube perturbations and the dyadic-ball sequence around a lamella.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::signed_distance;
use crate::error::{invalid, Result};
use crate::grid::{PeriodicGrid, TorusSet};

#[derive(Clone, Debug, PartialEq)]
pub enum ShapeKind {
    Disc {
        center: (f64, f64),
        radius: f64,
    },
    UnionDiscs(Vec<((f64, f64), f64)>),
    /// `{ x : (p·x₁ + q·x₂ − offset) mod 1 < width }`; `(p, q)` is the normal direction, so
    /// `(0, 1)` gives full rows. The area is `width` and the perimeter `2|(p, q)|`.
    Lamella {
        slope: (i64, i64),
        offset: f64,
        width: f64,
    },
    Complement(Box<ShapeKind>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub grid: PeriodicGrid,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Periodic displacement in `[-1/2, 1/2)`.
#[inline]
fn wrap(d: f64) -> f64 {
    (d + 0.5).rem_euclid(1.0) - 0.5
}

fn torus_dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (wrap(a.0 - b.0), wrap(a.1 - b.1));
    dx * dx + dy * dy
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, grid: PeriodicGrid) -> Result<Self> {
        let spec = Self { kind, grid };
        spec.validate()?;
        Ok(spec)
    }

    pub fn disc(grid: PeriodicGrid, center: (f64, f64), radius: f64) -> Result<Self> {
        Self::new(ShapeKind::Disc { center, radius }, grid)
    }

    pub fn lamella(grid: PeriodicGrid, slope: (i64, i64), offset: f64, width: f64) -> Result<Self> {
        Self::new(ShapeKind::Lamella { slope, offset, width }, grid)
    }

    pub fn complement(self) -> Self {
        Self { kind: ShapeKind::Complement(Box::new(self.kind)), grid: self.grid }
    }

    pub fn validate(&self) -> Result<()> {
        validate_kind(&self.kind, self.grid.hx().max(self.grid.hy()))
    }

    /// Analytic area.
    pub fn area(&self) -> f64 {
        area_of(&self.kind)
    }

    /// Analytic perimeter.
    pub fn perimeter(&self) -> f64 {
        perimeter_of(&self.kind)
    }
}

fn validate_kind(kind: &ShapeKind, hx: f64) -> Result<()> {
    let check_disc = |c: (f64, f64), r: f64| -> Result<()> {
        if !(c.0.is_finite() && c.1.is_finite() && r.is_finite()) {
            return Err(invalid("disc parameters must be finite"));
        }
        if r <= 2.0 * hx {
            return Err(invalid(format!("disc radius {r} must exceed two cells ({})", 2.0 * hx)));
        }
        // The disc must also stay clear of its own periodic images.
        if 1.0 - 2.0 * r <= 2.0 * hx {
            return Err(invalid(format!("disc radius {r} overlaps its periodic images")));
        }
        Ok(())
    };
    match kind {
        ShapeKind::Disc { center, radius } => check_disc(*center, *radius),
        ShapeKind::UnionDiscs(discs) => {
            if discs.is_empty() {
                return Err(invalid("union of discs needs at least one disc"));
            }
            for &(c, r) in discs {
                check_disc(c, r)?;
            }
            for (a, &(ca, ra)) in discs.iter().enumerate() {
                for &(cb, rb) in &discs[a + 1..] {
                    let gap = torus_dist2(ca, cb).sqrt() - ra - rb;
                    if gap <= 2.0 * hx {
                        return Err(invalid(format!("discs at {ca:?} and {cb:?} are closer than two cells")));
                    }
                }
            }
            Ok(())
        }
        ShapeKind::Lamella { slope: (p, q), offset, width } => {
            if (*p, *q) == (0, 0) || gcd(*p, *q) != 1 {
                return Err(invalid(format!("lamella slope ({p},{q}) must be a coprime pair")));
            }
            if !offset.is_finite() {
                return Err(invalid("lamella offset must be finite"));
            }
            if !(*width > 2.0 * hx && *width < 1.0 - 2.0 * hx) {
                return Err(invalid(format!("lamella width {width} must lie in (2hx, 1 − 2hx)")));
            }
            Ok(())
        }
        ShapeKind::Complement(inner) => validate_kind(inner, hx),
    }
}

fn area_of(kind: &ShapeKind) -> f64 {
    match kind {
        ShapeKind::Disc { radius, .. } => PI * radius * radius,
        ShapeKind::UnionDiscs(d) => d.iter().map(|&(_, r)| PI * r * r).sum(),
        ShapeKind::Lamella { width, .. } => *width,
        ShapeKind::Complement(inner) => 1.0 - area_of(inner),
    }
}

fn perimeter_of(kind: &ShapeKind) -> f64 {
    match kind {
        ShapeKind::Disc { radius, .. } => TAU * radius,
        ShapeKind::UnionDiscs(d) => d.iter().map(|&(_, r)| TAU * r).sum(),
        ShapeKind::Lamella { slope: (p, q), .. } => 2.0 * ((p * p + q * q) as f64).sqrt(),
        ShapeKind::Complement(inner) => perimeter_of(inner),
    }
}

fn contains(kind: &ShapeKind, x: (f64, f64)) -> bool {
    match kind {
        ShapeKind::Disc { center, radius } => torus_dist2(x, *center) <= radius * radius,
        ShapeKind::UnionDiscs(d) => d.iter().any(|&(c, r)| torus_dist2(x, c) <= r * r),
        ShapeKind::Lamella { slope: (p, q), offset, width } => {
            let s = *p as f64 * x.0 + *q as f64 * x.1;
            (s - offset).rem_euclid(1.0) < *width
        }
        ShapeKind::Complement(inner) => !contains(inner, x),
    }
}

/// A cell is occupied iff its center lies in the analytic set.
pub fn rasterize(spec: &ShapeSpec) -> Result<TorusSet> {
    spec.validate()?;
    let g = spec.grid;
    Ok(TorusSet::from_fn(g, |i, j| contains(&spec.kind, g.center(i, j))))
}

/// Smooth random field with values in `[-1, 1]` built from a few low Fourier modes.
fn smooth_field(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const MODES: i32 = 4;
    let mut terms = Vec::new();
    for kx in -MODES..=MODES {
        for ky in 0..=MODES {
            if ky == 0 && kx <= 0 {
                continue;
            }
            let amp = rng.gen_range(-1.0..1.0) / (1.0 + (kx * kx + ky * ky) as f64);
            let phase = rng.gen_range(0.0..TAU);
            terms.push((kx as f64, ky as f64, amp, phase));
        }
    }
    let mut v: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            let (x, y) = grid.center(i, j);
            terms.iter().map(|&(kx, ky, a, ph)| a * (TAU * (kx * x + ky * y) + ph).cos()).sum()
        })
        .collect();
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
    v
}

/// Random smooth set holding exactly `round(fill · N)` cells: the superlevel set of a
/// low-mode random field, ties broken by index.
pub fn random_set(grid: PeriodicGrid, fill: f64, seed: u64) -> Result<TorusSet> {
    let count = (fill * grid.len() as f64).round() as usize;
    if !(fill.is_finite() && count > 0 && count < grid.len()) {
        return Err(invalid(format!("fill fraction {fill} gives an empty or full set")));
    }
    let field = smooth_field(grid, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| field[b].total_cmp(&field[a]).then(a.cmp(&b)));
    let mut out = TorusSet::empty(grid);
    for &k in &order[..count] {
        out.set(k, true);
    }
    Ok(out)
}

/// Random volume-preserving perturbation inside the `delta`-tube around `∂S`.
///
/// The boundary is pushed along its normal by `delta·g` for a smooth random field `g`
/// scaled to `max |g| = 1` on the tube: the result keeps the `|S|` cells with the smallest
/// `sd_S − delta·g`, and cells outside the tube never change phase.
pub fn perturb(set: &TorusSet, delta: f64, seed: u64) -> Result<TorusSet> {
    perturb_with_budget(set, delta, seed, usize::MAX)
}

/// As [`perturb`], flipping at most `budget` cells on each side.
pub fn perturb_with_budget(set: &TorusSet, delta: f64, seed: u64, budget: usize) -> Result<TorusSet> {
    set.require_proper()?;
    let g = set.grid();
    let hx = g.hx().max(g.hy());
    if !(delta.is_finite() && delta >= hx) {
        return Err(invalid(format!("perturbation size {delta} is below the cell size {hx}")));
    }
    let sd = signed_distance(set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = smooth_field(g, &mut rng);
    let tube = |k: usize| sd.values()[k].abs() <= delta;
    let scale = (0..g.len()).filter(|&k| tube(k)).map(|k| field[k].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(set.clone());
    }
    let key = |k: usize| sd.values()[k] - delta * field[k] / scale;
    // Outside cells by increasing key against inside cells by decreasing key; each swap
    // lowers the total key until the two orders cross.
    let mut grow: Vec<(f64, usize)> = (0..g.len()).filter(|&k| !set.get(k) && tube(k)).map(|k| (key(k), k)).collect();
    let mut shrink: Vec<(f64, usize)> = (0..g.len()).filter(|&k| set.get(k) && tube(k)).map(|k| (key(k), k)).collect();
    grow.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    shrink.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out = set.clone();
    let mut flips = 0;
    for (&(kg, a), &(ks, b)) in grow.iter().zip(&shrink) {
        // Leave at least one cell on each side.
        if kg >= ks || flips >= budget || flips + 1 >= set.count() || flips + 1 >= g.len() - set.count() {
            break;
        }
        out.set(a, true);
        out.set(b, false);
        flips += 1;
    }
    Ok(out)
}

/// The lamella with dyadic balls added outside and removed inside.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub set: TorusSet,
    pub lamella: TorusSet,
    /// Radius of the balls added outside the lamella.
    pub radius_out: f64,
    /// Radius of the balls removed inside, scaled to balance the added volume.
    pub radius_in: f64,
    /// Analytic total volume of all balls, added and removed.
    pub ball_volume: f64,
    /// Cells adjusted by the final volume trim.
    pub trimmed: usize,
}

/// Horizontal lamella `{ 0 ≤ y < 2^-s }` with a ball of radius `radius_rule·2^-n` at the
/// center of every dyadic cube of side `2^-n` outside it, and matching balls removed from
/// the cubes inside. Inside balls are enlarged so the analytic volumes agree; a final trim
/// makes the cell counts agree exactly.
pub fn counterexample_set(grid: PeriodicGrid, n: u32, s: u32, radius_rule: f64) -> Result<Counterexample> {
    if !(1..=20).contains(&n) || s == 0 || s > n {
        return Err(invalid(format!("need 1 ≤ s ≤ n ≤ 20, got n = {n}, s = {s}")));
    }
    let cubes = 1usize << n;
    if grid.nx().min(grid.ny()) < cubes << 3 {
        return Err(invalid(format!("grid {}x{} is too coarse for n = {n}; need at least {}", grid.nx(), grid.ny(), cubes << 3)));
    }
    if !(radius_rule > 0.0 && radius_rule < 0.5) {
        return Err(invalid(format!("radius_rule = {radius_rule} must lie in (0, 1/2)")));
    }
    let side = 1.0 / cubes as f64;
    let width = 1.0 / (1u64 << s) as f64;
    let inside_rows = cubes >> s;
    let (n_in, n_out) = (inside_rows * cubes, (cubes - inside_rows) * cubes);
    let radius_out = radius_rule * side;
    let radius_in = radius_out * (n_out as f64 / n_in as f64).sqrt();
    if radius_in >= 0.5 * side {
        return Err(invalid(format!("balancing radius {radius_in} does not fit in a cube of side {side}; lower radius_rule")));
    }
    let lamella = TorusSet::from_fn(grid, |_, j| grid.center(0, j).1 < width);
    // Nearest cube center and the squared distance to it.
    let nearest = |x: f64, y: f64| -> ((usize, usize), f64) {
        let a = ((x / side).floor() as usize).min(cubes - 1);
        let b = ((y / side).floor() as usize).min(cubes - 1);
        let c = ((a as f64 + 0.5) * side, (b as f64 + 0.5) * side);
        ((a, b), (x - c.0).powi(2) + (y - c.1).powi(2))
    };
    let mut set = lamella.clone();
    let mut dist = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        let (x, y) = grid.center(i, j);
        let ((_, b), d2) = nearest(x, y);
        dist[k] = d2.sqrt();
        let in_lamella = b < inside_rows;
        if in_lamella && d2 <= radius_in * radius_in {
            set.set(k, false);
        } else if !in_lamella && d2 <= radius_out * radius_out {
            set.set(k, true);
        }
    }
    let target = lamella.count();
    let mut trimmed = 0;
    if set.count() != target {
        let excess = set.count() > target;
        // Outermost ball cells first, then row-major.
        let mut cand: Vec<usize> = (0..grid.len()).filter(|&k| set.get(k) != lamella.get(k) && set.get(k) == excess).collect();
        cand.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
        let k = set.count().abs_diff(target);
        if cand.len() < k {
            return Err(invalid("ball volumes cannot be balanced on this grid"));
        }
        for &c in &cand[..k] {
            set.set(c, !excess);
        }
        trimmed = k;
    }
    let ball_volume = PI * (radius_out * radius_out * n_out as f64 + radius_in * radius_in * n_in as f64);
    Ok(Counterexample { set, lamella, radius_out, radius_in, ball_volume, trimmed })
}

/// Coprime `(p, q)` with `p, q ≥ 0` whose lamellae have perimeter `2|(p, q)| ≤ max_perimeter`,
/// sorted by norm and then lexicographically.
pub fn lamella_slopes(max_perimeter: f64) -> Vec<(i64, i64)> {
    if !(max_perimeter.is_finite() && max_perimeter > 0.0) {
        return Vec::new();
    }
    let r = (max_perimeter / 2.0).floor() as i64;
    let mut out = Vec::new();
    for p in 0..=r {
        for q in 0..=r {
            if (p, q) != (0, 0) && gcd(p, q) == 1 && 2.0 * ((p * p + q * q) as f64).sqrt() <= max_perimeter {
                out.push((p, q));
            }
        }
    }
    out.sort_by_key(|&(p, q)| (p * p + q * q, p, q));
    out
}
