//! Property-based checks of the structural invariants.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vpflow::deform::{
    admissibility, alexandrov_ratio, area_of, coercivity_constant, first_variation, h1_norm, perimeter_of,
    random_admissible, second_variation, CurveSet, NormalDeformation,
};
use vpflow::{
    alpha_distance, check_telescoping, classify, counterexample_set, dissipation, hausdorff_boundary,
    lamella_slopes, perimeter, perturb, prescribed_cut, prescribed_cut_with, rasterize, run, signed_distance,
    step, step_warm, LimitVariant, PeriodicGrid, ScalarField, Selection, ShapeSpec, StepConfig, TorusSet, WarmStart,
};

fn grid_and_cells(min: usize, max: usize) -> impl Strategy<Value = (PeriodicGrid, Vec<bool>)> {
    (min..=max, min..=max).prop_flat_map(|(nx, ny)| {
        (Just(PeriodicGrid::new(nx, ny).unwrap()), prop::collection::vec(any::<bool>(), nx * ny))
    })
}

fn pair_of_sets(min: usize, max: usize) -> impl Strategy<Value = (PeriodicGrid, Vec<bool>, Vec<bool>)> {
    (min..=max, min..=max).prop_flat_map(|(nx, ny)| {
        let cells = prop::collection::vec(any::<bool>(), nx * ny);
        (Just(PeriodicGrid::new(nx, ny).unwrap()), cells.clone(), cells)
    })
}

fn proper_set(min: usize, max: usize) -> impl Strategy<Value = TorusSet> {
    grid_and_cells(min, max)
        .prop_map(|(g, c)| TorusSet::from_cells(g, c).unwrap())
        .prop_filter("proper", |s| s.is_proper())
}

/// Blobby sets: a few random discs, so that steps do more than erase noise.
fn blob_set(n: usize) -> impl Strategy<Value = TorusSet> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.1..0.3f64), 1..4).prop_filter_map("proper", move |discs| {
        let g = PeriodicGrid::square(n).unwrap();
        let wrap = |v: f64| (v + 0.5).rem_euclid(1.0) - 0.5;
        let s = TorusSet::from_fn(g, |i, j| {
            let (x, y) = g.center(i, j);
            discs.iter().any(|&(cx, cy, r)| wrap(x - cx).hypot(wrap(y - cy)) < r)
        });
        s.is_proper().then_some(s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complement_keeps_perimeter_and_splits_volume(s in proper_set(4, 12)) {
        let c = s.complement();
        prop_assert_eq!(perimeter(&s), perimeter(&c));
        prop_assert_eq!(s.count() + c.count(), s.grid().len());
    }

    #[test]
    fn measures_are_translation_invariant((g, a, b) in pair_of_sets(4, 12), di in -20isize..20, dj in -20isize..20) {
        let s = TorusSet::from_cells(g, a).unwrap();
        let t = TorusSet::from_cells(g, b).unwrap();
        prop_assume!(s.is_proper() && t.is_proper());
        let (ss, ts) = (s.shifted(di, dj), t.shifted(di, dj));
        prop_assert_eq!(ss.volume(), s.volume());
        prop_assert!((perimeter(&ss) - perimeter(&s)).abs() <= 1e-12 * perimeter(&s));
        let (d0, d1) = (dissipation(&t, &s).unwrap(), dissipation(&ts, &ss).unwrap());
        prop_assert!((d0 - d1).abs() <= 1e-12 * d0);
    }

    #[test]
    fn alpha_and_hausdorff_axioms(s in proper_set(4, 10), di in 0isize..10, dj in 0isize..10, flip in any::<prop::sample::Index>()) {
        let shifted = s.shifted(di, dj);
        prop_assert_eq!(alpha_distance(&s, &shifted).unwrap().cells, 0);
        let mut other = shifted.clone();
        let k = flip.index(s.grid().len());
        other.set(k, !other.get(k));
        prop_assume!(other.is_proper());
        let a = alpha_distance(&s, &other).unwrap();
        prop_assert!(a.cells >= 1, "one flipped cell breaks translation equivalence by count");
        prop_assert_eq!(hausdorff_boundary(&s, &other).unwrap(), hausdorff_boundary(&other, &s).unwrap());
    }

    #[test]
    fn signed_distance_matches_tiled_brute_force(s in proper_set(4, 8)) {
        let g = s.grid();
        let (nx, ny) = (g.nx() as i64, g.ny() as i64);
        let sd = signed_distance(&s).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.coords(k);
            let mut best = i64::MAX;
            for m in 0..g.len() {
                if s.get(m) == s.get(k) {
                    continue;
                }
                let (a, b) = g.coords(m);
                for ti in -1..=1 {
                    for tj in -1..=1 {
                        let dx = a as i64 + ti * nx - i as i64;
                        let dy = b as i64 + tj * ny - j as i64;
                        best = best.min(dx * dx * ny * ny + dy * dy * nx * nx);
                    }
                }
            }
            let d = vpflow::distance::cost_to_distance(g, best);
            prop_assert_eq!(sd.values()[k], if s.get(k) { -d } else { d });
        }
    }

    #[test]
    fn dissipation_vanishes_only_on_equality((g, a, b) in pair_of_sets(4, 10)) {
        // Nested sets hit equality often enough to exercise both sides.
        let t = TorusSet::from_cells(g, b.iter().zip(&a).map(|(x, y)| x | y).collect()).unwrap();
        let s = TorusSet::from_cells(g, a).unwrap();
        prop_assume!(s.is_proper() && t.is_proper());
        let d = dissipation(&t, &s).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d == 0.0, s == t);
        prop_assert_eq!(dissipation(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn rasterize_commutes_with_complement(n in 32usize..96, cx in 0.0..1.0f64, cy in 0.0..1.0f64, r in 0.1..0.4f64) {
        let g = PeriodicGrid::square(n).unwrap();
        let spec = ShapeSpec::disc(g, (cx, cy), r).unwrap();
        prop_assert_eq!(rasterize(&spec.clone().complement()).unwrap(), rasterize(&spec).unwrap().complement());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn step_keeps_volume_and_never_raises_perimeter(s in blob_set(24), h in 0.002..0.05f64) {
        let (next, report) = step(&s, &StepConfig::new(h).unwrap()).unwrap();
        prop_assert_eq!(next.count(), s.count());
        prop_assert!(report.perimeter <= perimeter(&s));
        prop_assert_eq!(report.perimeter, perimeter(&next));
        prop_assert!(report.dissipation >= 0.0);
    }

    #[test]
    fn cut_volume_is_monotone_in_lambda(s in blob_set(16), h in 0.005..0.05f64, lambdas in prop::collection::vec(-50.0..50.0f64, 2..8)) {
        let pot = signed_distance(&s).unwrap().map(|v| v / h);
        let mut lambdas = lambdas;
        lambdas.sort_by(f64::total_cmp);
        let counts: Vec<usize> = lambdas.iter().map(|&l| prescribed_cut(&pot, l).unwrap().count()).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{:?}", counts);
    }

    #[test]
    fn cut_complement_duality(s in blob_set(16), lambda in -30.0..30.0f64) {
        let pot = signed_distance(&s).unwrap().map(|v| v / 0.01);
        let neg = ScalarField::new(pot.grid(), pot.values().iter().map(|v| -v).collect()).unwrap();
        let min = prescribed_cut(&pot, lambda).unwrap();
        let max_neg = prescribed_cut_with(&neg, -lambda, Selection::InclusionMaximal).unwrap();
        prop_assert_eq!(min.complement(), max_neg);
    }

    #[test]
    fn flow_is_reproducible_and_telescopes(s in blob_set(24), h in 0.002..0.02f64) {
        let cfg = StepConfig::new(h).unwrap();
        let (a, ea) = run(&s, &cfg, 8, None).unwrap();
        let (b, eb) = run(&s, &cfg, 8, None).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(ea, eb);
        prop_assert!(a.rows.iter().all(|r| r.volume == s.count()));
        prop_assert_eq!(check_telescoping(&a, 1e-9), None);
    }

    #[test]
    fn warm_steps_match_cold_steps(s in blob_set(24), h in 0.002..0.02f64) {
        let mut cfg = StepConfig::new(h).unwrap();
        let mut warm = WarmStart::new();
        let mut cur = s;
        for _ in 0..6 {
            let (cold, rc) = step(&cur, &cfg).unwrap();
            let (hot, rh) = step_warm(&cur, &cfg, &mut warm).unwrap();
            prop_assert_eq!(&cold, &hot);
            prop_assert_eq!(&rc, &rh);
            cfg.lambda_hint = Some(rc.lambda_star);
            cur = cold;
        }
    }

    #[test]
    fn perturb_stays_in_tube(cx in 0.3..0.7f64, r in 0.15..0.3f64, delta in 0.02..0.08f64, seed in any::<u64>()) {
        let g = PeriodicGrid::square(64).unwrap();
        let base = rasterize(&ShapeSpec::disc(g, (cx, 0.5), r).unwrap()).unwrap();
        let p = perturb(&base, delta, seed).unwrap();
        prop_assert_eq!(p.count(), base.count());
        let bd = signed_distance(&base).unwrap();
        for k in 0..g.len() {
            if p.get(k) != base.get(k) {
                prop_assert!(bd.values()[k].abs() <= delta);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn counterexample_bounds(n in 2u32..5, s_frac in 0.0..1.0f64, rule_frac in 0.2..0.95f64) {
        let s = 1 + ((n - 1) as f64 * s_frac) as u32;
        // Largest rule whose balancing inner radius still fits in a cube.
        let (inside, all) = ((1u64 << n) >> s, 1u64 << n);
        let max_rule = 0.5 * (inside as f64 / (all - inside) as f64).sqrt().min(1.0);
        let rule = rule_frac * max_rule;
        let g = PeriodicGrid::square(1 << (n + 5)).unwrap();
        let ce = counterexample_set(g, n, s, rule).unwrap();
        prop_assert_eq!(ce.set.count(), ce.lamella.count());
        // Cells that differ from the lamella all sit inside a ball around a dyadic cube center.
        let side = 0.5f64.powi(n as i32);
        let r = ce.radius_in.max(ce.radius_out);
        for k in 0..g.len() {
            if ce.set.get(k) != ce.lamella.get(k) {
                let (i, j) = g.coords(k);
                let (x, y) = g.center(i, j);
                let off = |v: f64| v - ((v / side).floor() + 0.5) * side;
                prop_assert!(off(x).hypot(off(y)) <= r + 1e-12);
            }
        }
        // Every point of the torus lies within √2·2⁻ⁿ of the boundary.
        let bd = signed_distance(&ce.set).unwrap();
        let bound = 2f64.sqrt() * 0.5f64.powi(n as i32);
        prop_assert!(bd.values().iter().all(|v| v.abs() <= bound + g.hx()));
    }
}

fn bases() -> [CurveSet; 2] {
    [CurveSet::disc((0.5, 0.5), 0.25).unwrap(), CurveSet::lamella((0, 1), 0.2, 0.3).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_quantities_converge(which in 0usize..2, a in -0.02..0.02f64, b in -0.02..0.02f64, k in 2u32..6) {
        let base = bases()[which].clone();
        let l = base.component_length();
        let f = |_: usize, s: f64| {
            let t = std::f64::consts::TAU * s / l;
            a * (k as f64 * t).cos() + b * (t.sin()).exp().sin() * 0.5
        };
        let d1 = NormalDeformation::from_fn(base.clone(), 256, f).unwrap();
        let d2 = NormalDeformation::from_fn(base, 512, f).unwrap();
        prop_assert!((perimeter_of(&d1) - perimeter_of(&d2)).abs() < 1e-10);
        prop_assert!((area_of(&d1) - area_of(&d2)).abs() < 1e-10);
    }

    #[test]
    fn first_variation_matches_finite_differences(which in 0usize..2, seed in any::<u64>()) {
        let base = bases()[which].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_admissible(&base, 128, 6, 0.03, &mut rng).unwrap();
        let phi = random_admissible(&base, 128, 6, 0.03, &mut rng).unwrap();
        let along = |t: f64| {
            let f = d.samples().iter().zip(phi.samples()).map(|(x, y)| x.iter().zip(y).map(|(a, b)| a + t * b).collect()).collect();
            perimeter_of(&NormalDeformation::new(base.clone(), f).unwrap())
        };
        let fd = |eps: f64| (along(eps) - along(-eps)) / (2.0 * eps);
        let exact = first_variation(&d, phi.samples()).unwrap();
        let scale = exact.abs().max(1e-6);
        prop_assert!((fd(1e-3) - exact).abs() <= 1e-5 * scale + 1e-12, "{} vs {}", fd(1e-3), exact);
    }

    #[test]
    fn second_variation_matches_constrained_finite_difference(which in 0usize..2, seed in any::<u64>()) {
        let base = bases()[which].clone();
        let kappa = base.curvature();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_admissible(&base, 128, 6, 0.03, &mut rng).unwrap();
        // Perimeter minus the multiplier times area: the Lagrangian whose Hessian at a
        // critical set is the second variation.
        let lag = |t: f64| {
            let f = phi.samples().iter().map(|c| c.iter().map(|v| t * v).collect()).collect();
            let d = NormalDeformation::new(base.clone(), f).unwrap();
            perimeter_of(&d) - kappa * area_of(&d)
        };
        let eps = 1e-2;
        let fd = (lag(eps) - 2.0 * lag(0.0) + lag(-eps)) / (eps * eps);
        let exact = second_variation(&base, phi.samples()).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-3 * exact.abs() + 1e-9, "{fd} vs {exact}");
    }

    #[test]
    fn coercivity_and_alexandrov_on_admissible_samples(which in 0usize..2, seed in any::<u64>(), c1 in 0.005..0.05f64) {
        let base = bases()[which].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_admissible(&base, 256, 8, c1, &mut rng).unwrap();
        prop_assert!(admissibility(&d, 0.05).admissible());
        let h1 = h1_norm(&d);
        let q = second_variation(&base, d.samples()).unwrap();
        prop_assert!(q >= coercivity_constant(&base) / 8.0 * h1 * h1);
        let k = if which == 0 { 2 } else { 1 };
        prop_assert!(alexandrov_ratio(&d).ratio <= 4.0 * vpflow::deform::linearized_ratio(&base, k));
    }

    #[test]
    fn volume_matched_deformations_have_quadratic_mean(which in 0usize..2, seed in any::<u64>()) {
        let base = bases()[which].clone();
        let kappa = base.curvature();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_admissible(&base, 256, 6, 0.04, &mut rng).unwrap();
        // Shift by the constant c that restores the area: ∫(f + c) + κ/2 ∫(f + c)² = 0.
        let ds = raw.ds();
        let len = raw.nodes() as f64 * ds * raw.samples().len() as f64;
        let s1: f64 = raw.samples().iter().flatten().sum::<f64>() * ds;
        let s2: f64 = raw.samples().iter().flatten().map(|v| v * v).sum::<f64>() * ds;
        let c = if kappa == 0.0 {
            -s1 / len
        } else {
            let (qa, qb, qc) = (kappa / 2.0 * len, len + kappa * s1, s1 + kappa / 2.0 * s2);
            (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
        };
        let f: Vec<Vec<f64>> = raw.samples().iter().map(|v| v.iter().map(|x| x + c).collect()).collect();
        let d = NormalDeformation::new(base.clone(), f).unwrap();
        prop_assert!((area_of(&d) - base.area()).abs() < 1e-12);
        let mean: f64 = d.samples().iter().flatten().sum::<f64>() * ds;
        let sq: f64 = d.samples().iter().flatten().map(|v| v * v).sum::<f64>() * ds;
        prop_assert!(mean.abs() <= kappa.abs() / 2.0 * sq * (1.0 + 1e-9) + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn classifier_duality_and_slope_consistency(cx in 0.3..0.7f64, r in 0.1..0.3f64, offset in 0.0..1.0f64, slope in 0usize..4) {
        let g = PeriodicGrid::square(128).unwrap();
        let disc = rasterize(&ShapeSpec::disc(g, (cx, 0.5), r).unwrap()).unwrap();
        let p = perimeter(&disc);
        let c = classify(&disc, p, disc.volume()).unwrap();
        prop_assert_eq!(&c.variant, &LimitVariant::Discs(1));
        let d = classify(&disc.complement(), p, 1.0 - disc.volume()).unwrap();
        prop_assert_eq!(d.variant, LimitVariant::ComplementDiscs(1));

        let slope = [(0, 1), (1, 0), (1, 1), (1, 2)][slope];
        let lam = rasterize(&ShapeSpec::lamella(g, slope, offset, 0.35).unwrap()).unwrap();
        let p = perimeter(&lam);
        let c = classify(&lam, p, lam.volume()).unwrap();
        match c.variant {
            LimitVariant::Lamellae(l, got) => {
                prop_assert_eq!(got, slope);
                prop_assert!(lamella_slopes(p + 2.0 * 2.0 * g.hx() * p).contains(&got));
                let axis = slope.0 == 0 || slope.1 == 0;
                prop_assert_eq!((l as f64 - p / 2.0).abs() < 0.02, axis);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn common_helpers_are_linked() {
    // Keeps the shared module compiled into this target.
    let _ = common::certifying(0.01);
}
