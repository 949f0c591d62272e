//! Periodic connected components and their homology on the torus.
//!
//! Winding is detected by a breadth-first search that records, for each reached cell, the
//! integer translate of the fundamental domain it was reached in. An edge closing onto an
//! already-visited cell in a different translate exhibits a non-contractible loop whose
//! winding vector is the translate difference.

use std::collections::VecDeque;

use crate::grid::TorusSet;

/// Neighbourhood used for adjacency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Homology class of the loops a component carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Winding {
    /// Every loop is contractible (disc-like).
    None,
    /// All loops are multiples of one primitive winding vector `(wx, wy)` (lamella-like).
    Cyclic(i64, i64),
    /// Loops in two independent directions (complement-of-discs-like).
    Full,
}

impl Winding {
    /// Whether the component wraps horizontally and vertically.
    pub fn wraps(&self) -> (bool, bool) {
        match *self {
            Winding::None => (false, false),
            Winding::Cyclic(wx, wy) => (wx != 0, wy != 0),
            Winding::Full => (true, true),
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Occupied cells split into maximal periodic components, ordered by smallest cell index.
pub fn connected_components(set: &TorusSet, connectivity: Connectivity) -> Vec<TorusSet> {
    label(set, connectivity).into_iter().map(|c| c.set).collect()
}

pub(crate) struct Component {
    pub set: TorusSet,
    pub winding: Winding,
}

pub(crate) fn label(set: &TorusSet, connectivity: Connectivity) -> Vec<Component> {
    let g = set.grid();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let mut lift: Vec<Option<(i64, i64)>> = vec![None; g.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if !set.get(start) || lift[start].is_some() {
            continue;
        }
        let mut members = vec![false; g.len()];
        let mut gens: Vec<(i64, i64)> = Vec::new();
        lift[start] = Some((0, 0));
        members[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = g.coords(k);
            let (tx, ty) = lift[k].expect("queued cells are lifted");
            for &(di, dj) in connectivity.offsets() {
                let (ri, rj) = (i as isize + di, j as isize + dj);
                let (ii, jj) = (ri.rem_euclid(nx), rj.rem_euclid(ny));
                let n = jj as usize * g.nx() + ii as usize;
                if !set.get(n) {
                    continue;
                }
                let nl = (tx + ri.div_euclid(nx) as i64, ty + rj.div_euclid(ny) as i64);
                match lift[n] {
                    None => {
                        lift[n] = Some(nl);
                        members[n] = true;
                        queue.push_back(n);
                    }
                    Some(prev) if prev != nl => gens.push((nl.0 - prev.0, nl.1 - prev.1)),
                    _ => {}
                }
            }
        }
        let winding = classify_lattice(&gens);
        out.push(Component { set: TorusSet::from_cells(g, members).expect("sized to grid"), winding });
    }
    out
}

fn classify_lattice(gens: &[(i64, i64)]) -> Winding {
    let Some(&first) = gens.iter().find(|v| **v != (0, 0)) else { return Winding::None };
    for &(a, b) in gens {
        if first.0 * b - first.1 * a != 0 {
            return Winding::Full;
        }
    }
    // All generators are collinear with `first`; the lattice they span is generated by the
    // primitive direction scaled by the gcd of their coordinates along it.
    let d = gcd(first.0, first.1);
    let (px, py) = (first.0 / d, first.1 / d);
    let mut g = 0i64;
    for &(a, b) in gens {
        let t = if px != 0 { a / px } else { b / py };
        g = gcd(g, t);
    }
    let (mut wx, mut wy) = (px * g, py * g);
    if wx < 0 || (wx == 0 && wy < 0) {
        (wx, wy) = (-wx, -wy);
    }
    Winding::Cyclic(wx, wy)
}

/// Winding class of a (connected) set under 8-connectivity.
pub fn winding(component: &TorusSet) -> Winding {
    let comps = label(component, Connectivity::Eight);
    match comps.as_slice() {
        [] => Winding::None,
        [one] => one.winding,
        many => {
            // Not connected: report the richest class found.
            many.iter().map(|c| c.winding).fold(Winding::None, |acc, w| match (acc, w) {
                (Winding::Full, _) | (_, Winding::Full) => Winding::Full,
                (Winding::None, w) => w,
                (a, _) => a,
            })
        }
    }
}

/// Horizontal and vertical wrapping of a component.
pub fn wraps(component: &TorusSet) -> (bool, bool) {
    winding(component).wraps()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    fn disc(g: PeriodicGrid, cx: f64, cy: f64, r: f64) -> TorusSet {
        TorusSet::from_fn(g, |i, j| {
            let (x, y) = g.center(i, j);
            let dx = (x - cx + 0.5).rem_euclid(1.0) - 0.5;
            let dy = (y - cy + 0.5).rem_euclid(1.0) - 0.5;
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn two_discs_two_components() {
        let g = PeriodicGrid::square(64).unwrap();
        let s = disc(g, 0.25, 0.25, 0.1).union(&disc(g, 0.75, 0.7, 0.1)).unwrap();
        assert_eq!(connected_components(&s, Connectivity::Eight).len(), 2);
    }

    #[test]
    fn disc_across_seam_is_one_component_without_winding() {
        let g = PeriodicGrid::square(64).unwrap();
        let s = disc(g, 0.0, 0.0, 0.2);
        let comps = label(&s, Connectivity::Eight);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].winding, Winding::None);
        assert_eq!(wraps(&s), (false, false));
    }

    #[test]
    fn checkerboard_connectivity() {
        let g = PeriodicGrid::square(8).unwrap();
        let s = TorusSet::from_fn(g, |i, j| (i + j) % 2 == 0);
        assert_eq!(connected_components(&s, Connectivity::Four).len(), 32);
        assert_eq!(connected_components(&s, Connectivity::Eight).len(), 1);
    }

    #[test]
    fn lamella_windings() {
        let g = PeriodicGrid::square(64).unwrap();
        let horizontal = TorusSet::from_fn(g, |_, j| (10..30).contains(&j));
        assert_eq!(wraps(&horizontal), (true, false));
        assert_eq!(winding(&horizontal), Winding::Cyclic(1, 0));
        let diagonal = TorusSet::from_fn(g, |i, j| (i + j) % 64 < 20);
        assert_eq!(wraps(&diagonal), (true, true));
        assert_eq!(winding(&diagonal), Winding::Cyclic(1, -1));
        // Normal (1, 2): the band direction winds twice horizontally and once vertically.
        let steep = TorusSet::from_fn(g, |i, j| (i + 2 * j) % 64 < 20);
        assert_eq!(winding(&steep), Winding::Cyclic(2, -1));
    }

    #[test]
    fn complement_of_disc_winds_fully() {
        let g = PeriodicGrid::square(32).unwrap();
        let s = disc(g, 0.5, 0.5, 0.2).complement();
        assert_eq!(winding(&s), Winding::Full);
    }

    #[test]
    fn components_partition_the_set() {
        let g = PeriodicGrid::new(20, 16).unwrap();
        let s = TorusSet::from_fn(g, |i, j| (i * 3 + j * 5) % 7 < 2);
        let comps = connected_components(&s, Connectivity::Four);
        let mut seen = vec![0u8; g.len()];
        for c in &comps {
            for k in c.iter_occupied() {
                seen[k] += 1;
            }
        }
        for k in 0..g.len() {
            assert_eq!(seen[k], s.get(k) as u8);
        }
    }
}
