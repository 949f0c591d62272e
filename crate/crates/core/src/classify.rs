//! Which limit shape a converged set is: discs, complements of discs, or parallel lamellae.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::TorusSet;
use crate::shapes::lamella_slopes;
use crate::stencil::Stencil;
use crate::topology::{label, Connectivity, Winding};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierConfig {
    /// Minimum `4πA/P²` for a component to count as round.
    pub iso_threshold: f64,
    /// Largest accepted orientation mismatch of a lamella boundary, in radians.
    pub slope_tolerance: f64,
    /// `|l_formula − round(l_formula)|` above which a warning is attached.
    pub rounding_warning: f64,
}

impl ClassifierConfig {
    /// Defaults for a grid with cell size `hx`.
    pub fn for_cell_size(hx: f64) -> Self {
        Self { iso_threshold: 0.9, slope_tolerance: 2.0 * hx, rounding_warning: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LimitVariant {
    Discs(usize),
    ComplementDiscs(usize),
    /// `l` lamellae with common normal `(p, q)`, `p, q ≥ 0`.
    Lamellae(usize, (i64, i64)),
    Unclassified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitClass {
    pub variant: LimitVariant,
    /// `4πA/P²` of each round component (of the set or of its complement).
    pub iso_ratios: Vec<f64>,
    /// Area of every component of the classified phase.
    pub component_areas: Vec<f64>,
    /// Orientation mismatch of the lamella boundary, in radians.
    pub slope_residual: Option<f64>,
    /// Real-valued component count predicted from `P_∞` and `m`.
    pub l_formula: Option<f64>,
    /// Whether the counted `l` agrees with the prediction.
    pub formula_matches: bool,
    pub warnings: Vec<String>,
}

impl LimitClass {
    pub const CSV_HEADER: &'static str = "variant,l,p,q,l_formula,min_iso,slope_residual,formula_matches";

    pub fn l(&self) -> Option<usize> {
        match self.variant {
            LimitVariant::Discs(l) | LimitVariant::ComplementDiscs(l) | LimitVariant::Lamellae(l, _) => Some(l),
            LimitVariant::Unclassified => None,
        }
    }

    pub fn csv_line(&self) -> String {
        let (name, l, slope) = match self.variant {
            LimitVariant::Discs(l) => ("discs", l.to_string(), None),
            LimitVariant::ComplementDiscs(l) => ("complement_discs", l.to_string(), None),
            LimitVariant::Lamellae(l, s) => ("lamellae", l.to_string(), Some(s)),
            LimitVariant::Unclassified => ("unclassified", String::new(), None),
        };
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        let min_iso = self.iso_ratios.iter().copied().reduce(f64::min);
        format!(
            "{name},{l},{},{},{},{},{},{}",
            slope.map_or(String::new(), |s| s.0.to_string()),
            slope.map_or(String::new(), |s| s.1.to_string()),
            opt(self.l_formula),
            opt(min_iso),
            opt(self.slope_residual),
            self.formula_matches
        )
    }
}

/// Classifies with [`ClassifierConfig::for_cell_size`] defaults.
pub fn classify(set: &TorusSet, p_inf: f64, m: f64) -> Result<LimitClass> {
    let g = set.grid();
    classify_with(set, p_inf, m, &ClassifierConfig::for_cell_size(g.hx().max(g.hy())))
}

pub fn classify_with(set: &TorusSet, p_inf: f64, m: f64, cfg: &ClassifierConfig) -> Result<LimitClass> {
    set.require_proper()?;
    if !(p_inf.is_finite() && p_inf > 0.0) || !(m > 0.0 && m < 1.0) {
        return Err(invalid(format!("need P_inf > 0 and m in (0, 1), got {p_inf}, {m}")));
    }
    let stencil = Stencil::new(set.grid());
    let comps = label(set, Connectivity::Eight);
    let holes = label(&set.complement(), Connectivity::Four);
    let all = |v: &[crate::topology::Component], w: fn(&Winding) -> bool| v.iter().all(|c| w(&c.winding));
    let is_none = |w: &Winding| *w == Winding::None;
    let is_full = |w: &Winding| *w == Winding::Full;
    let is_cyclic = |w: &Winding| matches!(w, Winding::Cyclic(..));
    let areas = |v: &[crate::topology::Component]| v.iter().map(|c| c.set.volume()).collect::<Vec<_>>();
    let mut out = LimitClass {
        variant: LimitVariant::Unclassified,
        iso_ratios: Vec::new(),
        component_areas: areas(&comps),
        slope_residual: None,
        l_formula: None,
        formula_matches: false,
        warnings: Vec::new(),
    };

    let round_branch = |round: &[crate::topology::Component], mass: f64, out: &mut LimitClass| -> bool {
        out.iso_ratios = round
            .iter()
            .map(|c| {
                let p = stencil.perimeter(&c.set);
                4.0 * PI * c.set.volume() / (p * p)
            })
            .collect();
        out.component_areas = areas(round);
        let l_real = p_inf * p_inf / (4.0 * PI * mass);
        out.l_formula = Some(l_real);
        out.formula_matches = l_real.round() as usize == round.len();
        if (l_real - l_real.round()).abs() > cfg.rounding_warning {
            out.warnings.push(format!("P_inf²/(4πm) = {l_real:.3} is far from an integer; the flow may not have converged"));
        }
        out.iso_ratios.iter().all(|&r| r >= cfg.iso_threshold)
    };

    if all(&comps, is_none) && holes.len() == 1 && is_full(&holes[0].winding) {
        if round_branch(&comps, m, &mut out) {
            out.variant = LimitVariant::Discs(comps.len());
        } else {
            out.warnings.push("a component is not round enough for a disc".into());
        }
        return Ok(out);
    }
    if all(&holes, is_none) && comps.len() == 1 && is_full(&comps[0].winding) {
        if round_branch(&holes, 1.0 - m, &mut out) {
            out.variant = LimitVariant::ComplementDiscs(holes.len());
        } else {
            out.warnings.push("a complement component is not round enough for a disc".into());
        }
        return Ok(out);
    }
    if !comps.is_empty() && all(&comps, is_cyclic) && all(&holes, is_cyclic) {
        let normals: Vec<(i64, i64)> = comps
            .iter()
            .chain(&holes)
            .map(|c| match c.winding {
                Winding::Cyclic(wx, wy) => (wy.abs(), wx.abs()),
                _ => unreachable!(),
            })
            .collect();
        if normals.iter().any(|n| *n != normals[0]) {
            out.warnings.push("lamellae with different slopes".into());
            return Ok(out);
        }
        let (p, q) = normals[0];
        // Winding can be a multiple of the primitive direction only if a component wraps
        // several times, which a single band cannot do.
        let d = gcd(p, q);
        let slope = (p / d, q / d);
        let norm = ((slope.0 * slope.0 + slope.1 * slope.1) as f64).sqrt();
        let residual = orientation_residual(set, slope);
        out.slope_residual = Some(residual);
        if residual > cfg.slope_tolerance {
            out.warnings.push(format!("boundary orientation differs from the slope by {residual:.4} rad"));
        }
        // Nearest enumerated slope by orientation, allowing for grid perimeter error.
        let allowed = lamella_slopes(p_inf + 2.0 * cfg.slope_tolerance * p_inf);
        if !allowed.contains(&slope) {
            out.warnings.push(format!("slope {slope:?} is not admissible for P_inf = {p_inf:.4}"));
        }
        let l = comps.len();
        let l_real = p_inf / (2.0 * norm);
        out.l_formula = Some(l_real);
        out.formula_matches = l_real.round() as usize == l;
        if (l_real - l_real.round()).abs() > cfg.rounding_warning {
            out.warnings.push(format!("P_inf/(2|(p,q)|) = {l_real:.3} is far from an integer"));
        }
        out.variant = LimitVariant::Lamellae(l, slope);
        return Ok(out);
    }
    out.warnings.push("mixed or ambiguous morphology".into());
    Ok(out)
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Angle between the boundary orientation estimated from crossing counts and the normal
/// `(p, q)`, both folded into the first quadrant.
///
/// A boundary of length `ℓ` with unit normal `n` crosses `ℓ|n_x|/hy` horizontal and
/// `ℓ|n_y|/hx` vertical cell pairs.
fn orientation_residual(set: &TorusSet, slope: (i64, i64)) -> f64 {
    let g = set.grid();
    let (mut horiz, mut vert) = (0usize, 0usize);
    for k in 0..g.len() {
        let a = set.get(k);
        if a != set.get(g.offset(k, 1, 0)) {
            horiz += 1;
        }
        if a != set.get(g.offset(k, 0, 1)) {
            vert += 1;
        }
    }
    let est = (horiz as f64 * g.hy()).atan2(vert as f64 * g.hx());
    let want = (slope.0 as f64).atan2(slope.1 as f64);
    (est - want).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::shapes::{rasterize, ShapeKind, ShapeSpec};
    use crate::stencil::perimeter;

    #[test]
    fn two_discs() {
        let g = PeriodicGrid::square(256).unwrap();
        let r = (0.1 / PI).sqrt();
        let spec = ShapeSpec::new(ShapeKind::UnionDiscs(vec![((0.25, 0.25), r), ((0.75, 0.7), r)]), g).unwrap();
        let s = rasterize(&spec).unwrap();
        let c = classify(&s, perimeter(&s), s.volume()).unwrap();
        assert_eq!(c.variant, LimitVariant::Discs(2));
        assert!(c.formula_matches);
        let d = classify(&s.complement(), perimeter(&s), 1.0 - s.volume()).unwrap();
        assert_eq!(d.variant, LimitVariant::ComplementDiscs(2));
    }

    #[test]
    fn lamellae() {
        let g = PeriodicGrid::square(128).unwrap();
        for (slope, l_eq) in [((0, 1), true), ((1, 0), true), ((1, 1), false), ((1, 2), false)] {
            let s = rasterize(&ShapeSpec::lamella(g, slope, 0.1, 0.3).unwrap()).unwrap();
            let p = perimeter(&s);
            let c = classify(&s, p, s.volume()).unwrap();
            assert_eq!(c.variant, LimitVariant::Lamellae(1, slope), "{slope:?}");
            assert!(c.slope_residual.unwrap() < 2.0 / 128.0, "{c:?}");
            assert_eq!((1.0 - p / 2.0).abs() < 0.02, l_eq);
        }
    }

    #[test]
    fn mixed_is_unclassified() {
        let g = PeriodicGrid::square(128).unwrap();
        let lam = rasterize(&ShapeSpec::lamella(g, (0, 1), 0.0, 0.3).unwrap()).unwrap();
        let disc = rasterize(&ShapeSpec::disc(g, (0.5, 0.65), 0.1).unwrap()).unwrap();
        let s = lam.union(&disc).unwrap();
        let c = classify(&s, perimeter(&s), s.volume()).unwrap();
        assert_eq!(c.variant, LimitVariant::Unclassified);
    }
}
