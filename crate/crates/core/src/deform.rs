//! Normal deformations `∂E_f = { x + f(x) ν_E(x) }` of discs and lamellae, evaluated
//! spectrally on uniform arclength nodes.
//!
//! Each boundary component is parametrized by arclength `s` with unit tangent `τ` and
//! outward normal `ν` such that `ν′ = κτ` and `τ′ = −κν`. Then
//! `Φ′ = aτ + bν` with `a = 1 + κf`, `b = f′`, so `JΦ = √(a² + b²)`, the outward normal of
//! `E_f` is proportional to `aν − bτ`, and its curvature is
//! `(κ(a² + b²) + a′b − ab′) / (a² + b²)^{3/2}`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::grid::{PeriodicGrid, TorusSet};

/// Smallest number of nodes per component.
pub const MIN_NODES: usize = 64;

/// A strictly stable set with explicitly parametrized boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveSet {
    Disc { center: (f64, f64), radius: f64 },
    /// Same convention as the grid lamella: `(p, q)` is the normal, `width` the area.
    Lamella { slope: (i64, i64), offset: f64, width: f64 },
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl CurveSet {
    pub fn disc(center: (f64, f64), radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.5) || !center.0.is_finite() || !center.1.is_finite() {
            return Err(invalid(format!("disc radius {radius} must lie in (0, 1/2)")));
        }
        Ok(CurveSet::Disc { center, radius })
    }

    pub fn lamella(slope: (i64, i64), offset: f64, width: f64) -> Result<Self> {
        if slope == (0, 0) || gcd(slope.0, slope.1) != 1 {
            return Err(invalid(format!("lamella slope {slope:?} must be a coprime pair")));
        }
        if !(width > 0.0 && width < 1.0) || !offset.is_finite() {
            return Err(invalid(format!("lamella width {width} must lie in (0, 1)")));
        }
        Ok(CurveSet::Lamella { slope, offset, width })
    }

    pub fn components(&self) -> usize {
        match self {
            CurveSet::Disc { .. } => 1,
            CurveSet::Lamella { .. } => 2,
        }
    }

    /// Length of each boundary component.
    pub fn component_length(&self) -> f64 {
        match self {
            CurveSet::Disc { radius, .. } => TAU * radius,
            CurveSet::Lamella { slope: (p, q), .. } => ((p * p + q * q) as f64).sqrt(),
        }
    }

    pub fn boundary_length(&self) -> f64 {
        self.components() as f64 * self.component_length()
    }

    /// Curvature `κ` (also the mean curvature `H_E`), constant on the boundary.
    pub fn curvature(&self) -> f64 {
        match self {
            CurveSet::Disc { radius, .. } => 1.0 / radius,
            CurveSet::Lamella { .. } => 0.0,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            CurveSet::Disc { radius, .. } => PI * radius * radius,
            CurveSet::Lamella { width, .. } => *width,
        }
    }

    /// Largest `‖f‖_∞` for which `x + fν` stays an embedding.
    pub fn embedding_bound(&self) -> f64 {
        match self {
            CurveSet::Disc { radius, .. } => 0.5 * radius,
            CurveSet::Lamella { width, .. } => 0.5 * width / self.component_length(),
        }
    }

    /// Unit normal `n̂` of a lamella and a Bezout vector `w` with `n̂·w·|(p,q)| = 1`.
    fn lamella_frame(&self) -> Option<((f64, f64), (f64, f64))> {
        let CurveSet::Lamella { slope: (p, q), .. } = *self else { return None };
        let l = self.component_length();
        // Extended Euclid for p·a + q·b = 1.
        let (mut r0, mut r1, mut s0, mut s1, mut t0, mut t1) = (p, q, 1i64, 0i64, 0i64, 1i64);
        while r1 != 0 {
            let k = r0.div_euclid(r1);
            (r0, r1) = (r1, r0 - k * r1);
            (s0, s1) = (s1, s0 - k * s1);
            (t0, t1) = (t1, t0 - k * t1);
        }
        let sign = r0.signum() as f64;
        Some(((p as f64 / l, q as f64 / l), (s0 as f64 * sign, t0 as f64 * sign)))
    }

    /// Boundary point and outward normal at arclength `s` on component `c`.
    pub fn frame(&self, c: usize, s: f64) -> ((f64, f64), (f64, f64)) {
        match *self {
            CurveSet::Disc { center, radius } => {
                let t = s / radius;
                ((center.0 + radius * t.cos(), center.1 + radius * t.sin()), (t.cos(), t.sin()))
            }
            CurveSet::Lamella { offset, width, .. } => {
                let (n, w) = self.lamella_frame().expect("lamella");
                let tau = (-n.1, n.0);
                if c == 0 {
                    let level = offset + width;
                    ((level * w.0 + s * tau.0, level * w.1 + s * tau.1), n)
                } else {
                    ((offset * w.0 - s * tau.0, offset * w.1 - s * tau.1), (-n.0, -n.1))
                }
            }
        }
    }
}

/// Height function on the boundary: `M` samples per component at `s_i = i·L/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalDeformation {
    base: CurveSet,
    f: Vec<Vec<f64>>,
}

impl NormalDeformation {
    pub fn new(base: CurveSet, f: Vec<Vec<f64>>) -> Result<Self> {
        if f.len() != base.components() {
            return Err(invalid(format!("expected {} components, got {}", base.components(), f.len())));
        }
        let m = f[0].len();
        if m < MIN_NODES || !m.is_power_of_two() || f.iter().any(|c| c.len() != m) {
            return Err(invalid(format!("sample count {m} must be a power of two, at least {MIN_NODES}, on every component")));
        }
        if f.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("deformation samples must be finite"));
        }
        let sup = f.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if sup >= base.embedding_bound() {
            return Err(Error::Embedding(format!("‖f‖∞ = {sup} exceeds the embedding bound {}", base.embedding_bound())));
        }
        Ok(Self { base, f })
    }

    pub fn zero(base: CurveSet, m: usize) -> Result<Self> {
        let c = base.components();
        Self::new(base, vec![vec![0.0; m]; c])
    }

    /// Samples `f(c, s)`; rejects functions that are not periodic in `s`.
    pub fn from_fn(base: CurveSet, m: usize, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let l = base.component_length();
        let mut samples = Vec::new();
        for c in 0..base.components() {
            let (a, b) = (f(c, 0.0), f(c, l));
            if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                return Err(invalid(format!("deformation on component {c} is not periodic: f(0) = {a}, f(L) = {b}")));
            }
            samples.push((0..m).map(|i| f(c, i as f64 * l / m as f64)).collect());
        }
        Self::new(base, samples)
    }

    pub fn base(&self) -> &CurveSet {
        &self.base
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.f
    }

    pub fn nodes(&self) -> usize {
        self.f[0].len()
    }

    /// Node spacing.
    pub fn ds(&self) -> f64 {
        self.base.component_length() / self.nodes() as f64
    }

    /// `(f′, f″)` per component.
    fn derivatives(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let l = self.base.component_length();
        self.f.iter().map(|c| spectral_derivatives(c, l)).collect()
    }
}

/// Spectral first and second derivatives of periodic samples over a period `len`.
pub fn spectral_derivatives(f: &[f64], len: f64) -> (Vec<f64>, Vec<f64>) {
    let m = f.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut spec: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut spec);
    let mut d1 = spec.clone();
    let mut d2 = spec;
    for k in 0..m {
        let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
        let w = TAU * kk / len;
        if 2 * k == m {
            d1[k] = Complex::new(0.0, 0.0);
            d2[k] = Complex::new(0.0, 0.0);
        } else {
            d1[k] *= Complex::new(0.0, w);
            d2[k] *= -w * w;
        }
    }
    inv.process(&mut d1);
    inv.process(&mut d2);
    let scale = 1.0 / m as f64;
    (d1.iter().map(|c| c.re * scale).collect(), d2.iter().map(|c| c.re * scale).collect())
}

/// Trigonometric interpolant of periodic samples, evaluated anywhere.
struct Interpolant {
    coef: Vec<(f64, f64, f64)>,
    len: f64,
}

impl Interpolant {
    fn new(f: &[f64], len: f64) -> Self {
        let m = f.len();
        let mut spec: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut spec);
        let mut coef = Vec::new();
        for (k, c) in spec.iter().enumerate().take(m / 2 + 1) {
            let weight = if k == 0 || 2 * k == m { 1.0 } else { 2.0 };
            let c = c * (weight / m as f64);
            // Keep only modes that carry energy.
            if c.norm() > 1e-300 {
                coef.push((k as f64, c.re, -c.im));
            }
        }
        Self { coef, len }
    }

    fn eval(&self, s: f64) -> f64 {
        let t = TAU * s / self.len;
        self.coef.iter().map(|&(k, a, b)| a * (k * t).cos() + b * (k * t).sin()).sum()
    }

    fn sup(&self) -> f64 {
        self.coef.iter().map(|&(_, a, b)| a.hypot(b)).sum()
    }
}

/// `JΦ` at the nodes.
pub fn jacobian(d: &NormalDeformation) -> Vec<Vec<f64>> {
    let kappa = d.base.curvature();
    d.f.iter()
        .zip(d.derivatives())
        .map(|(f, (f1, _))| f.iter().zip(&f1).map(|(&v, &b)| (1.0 + kappa * v).hypot(b)).collect())
        .collect()
}

/// Outward unit normal of `E_f` at the deformed nodes.
pub fn normal_of_deformation(d: &NormalDeformation) -> Vec<Vec<(f64, f64)>> {
    let kappa = d.base.curvature();
    let ds = d.ds();
    d.f.iter()
        .zip(d.derivatives())
        .enumerate()
        .map(|(c, (f, (f1, _)))| {
            f.iter()
                .zip(&f1)
                .enumerate()
                .map(|(i, (&v, &b))| {
                    let (_, nu) = d.base.frame(c, i as f64 * ds);
                    let tau = (-nu.1, nu.0);
                    let a = 1.0 + kappa * v;
                    let j = a.hypot(b);
                    ((a * nu.0 - b * tau.0) / j, (a * nu.1 - b * tau.1) / j)
                })
                .collect()
        })
        .collect()
}

/// `P(E_f) = ∫_{∂E} JΦ`.
pub fn perimeter_of(d: &NormalDeformation) -> f64 {
    jacobian(d).iter().flatten().sum::<f64>() * d.ds()
}

/// `|E_f| = |E| + ∫_{∂E} (f + κf²/2)`.
pub fn area_of(d: &NormalDeformation) -> f64 {
    let kappa = d.base.curvature();
    d.base.area() + d.f.iter().flatten().map(|&v| v + 0.5 * kappa * v * v).sum::<f64>() * d.ds()
}

/// Curvature of `∂E_f` at the deformed nodes, positive for convex boundaries.
pub fn curvature_of(d: &NormalDeformation) -> Vec<Vec<f64>> {
    let kappa = d.base.curvature();
    d.f.iter()
        .zip(d.derivatives())
        .map(|(f, (f1, f2))| {
            (0..f.len())
                .map(|i| {
                    let a = 1.0 + kappa * f[i];
                    let b = f1[i];
                    let da = kappa * f1[i];
                    let db = f2[i];
                    let j2 = a * a + b * b;
                    (kappa * j2 + da * b - a * db) / j2.powf(1.5)
                })
                .collect()
        })
        .collect()
}

fn check_like(d: &NormalDeformation, phi: &[Vec<f64>]) -> Result<()> {
    if phi.len() != d.f.len() || phi.iter().any(|c| c.len() != d.nodes()) {
        return Err(invalid("variation samples must match the deformation's nodes"));
    }
    Ok(())
}

/// `δP(E_f)[φ] = ∫_{∂E} H_{E_f} (ν_E·ν_{E_f}) φ JΦ`, which for curves is `∫ H_{E_f} a φ`.
pub fn first_variation(d: &NormalDeformation, phi: &[Vec<f64>]) -> Result<f64> {
    check_like(d, phi)?;
    let kappa = d.base.curvature();
    let h = curvature_of(d);
    let mut sum = 0.0;
    for c in 0..d.f.len() {
        for i in 0..d.nodes() {
            sum += h[c][i] * (1.0 + kappa * d.f[c][i]) * phi[c][i];
        }
    }
    Ok(sum * d.ds())
}

/// `δ²P(E)[φ] = ∫_{∂E} φ′² − κ²φ²`.
pub fn second_variation(base: &CurveSet, phi: &[Vec<f64>]) -> Result<f64> {
    let d = NormalDeformation::zero(base.clone(), phi.first().map_or(0, Vec::len))?;
    check_like(&d, phi)?;
    let kappa = base.curvature();
    let l = base.component_length();
    let mut sum = 0.0;
    for c in phi {
        let (d1, _) = spectral_derivatives(c, l);
        sum += c.iter().zip(&d1).map(|(&v, &g)| g * g - kappa * kappa * v * v).sum::<f64>();
    }
    Ok(sum * d.ds())
}

/// `‖f‖_{L²(∂E)}`.
pub fn l2_norm(d: &NormalDeformation) -> f64 {
    (d.f.iter().flatten().map(|v| v * v).sum::<f64>() * d.ds()).sqrt()
}

/// `‖f‖_{H¹(∂E)}`.
pub fn h1_norm(d: &NormalDeformation) -> f64 {
    let l = d.base.component_length();
    let mut sum = 0.0;
    for c in &d.f {
        let (d1, _) = spectral_derivatives(c, l);
        sum += c.iter().zip(&d1).map(|(&v, &g)| v * v + g * g).sum::<f64>();
    }
    (sum * d.ds()).sqrt()
}

/// `max(‖f‖_∞, ‖f′‖_∞)` at the nodes.
pub fn c1_norm(d: &NormalDeformation) -> f64 {
    d.f.iter()
        .zip(d.derivatives())
        .flat_map(|(f, (f1, _))| f.iter().chain(f1.iter()).map(|v| v.abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Admissibility {
    /// `|∫ f|`.
    pub mean: f64,
    /// `|∫ f ν_E|`.
    pub translation: f64,
    pub c1: f64,
    pub l2: f64,
    pub mean_ok: bool,
    pub translation_ok: bool,
    pub c1_ok: bool,
}

impl Admissibility {
    pub fn admissible(&self) -> bool {
        self.mean_ok && self.translation_ok && self.c1_ok
    }
}

/// Checks `|∫f| ≤ δ‖f‖`, `|∫fν| ≤ δ‖f‖` and `‖f‖_{C¹} ≤ δ`.
pub fn admissibility(d: &NormalDeformation, delta: f64) -> Admissibility {
    let ds = d.ds();
    let mut mean = 0.0;
    let (mut tx, mut ty) = (0.0, 0.0);
    for (c, f) in d.f.iter().enumerate() {
        for (i, &v) in f.iter().enumerate() {
            let (_, nu) = d.base.frame(c, i as f64 * ds);
            mean += v;
            tx += v * nu.0;
            ty += v * nu.1;
        }
    }
    let mean = (mean * ds).abs();
    let translation = (tx * ds).hypot(ty * ds);
    let c1 = c1_norm(d);
    let l2 = l2_norm(d);
    Admissibility {
        mean,
        translation,
        c1,
        l2,
        mean_ok: mean <= delta * l2,
        translation_ok: translation <= delta * l2,
        c1_ok: c1 <= delta,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlexandrovRatio {
    pub ratio: f64,
    pub h1: f64,
    /// `‖H_{E_f} − H̄_{E_f}‖_{L²(∂E)}`.
    pub deficit: f64,
    /// Nonzero `f` with vanishing deficit.
    pub degenerate: bool,
}

/// `‖f‖_{H¹} / ‖H_{E_f} − H̄_{E_f}‖_{L²(∂E)}`, with `H̄` the average over `∂E_f`.
pub fn alexandrov_ratio(d: &NormalDeformation) -> AlexandrovRatio {
    let h1 = h1_norm(d);
    let h = curvature_of(d);
    let j = jacobian(d);
    let num: f64 = h.iter().flatten().zip(j.iter().flatten()).map(|(a, b)| a * b).sum();
    let hbar = num / j.iter().flatten().sum::<f64>();
    let deficit = (h.iter().flatten().map(|v| (v - hbar).powi(2)).sum::<f64>() * d.ds()).sqrt();
    if h1 == 0.0 {
        return AlexandrovRatio { ratio: 0.0, h1, deficit, degenerate: false };
    }
    if deficit < 1e-14 {
        return AlexandrovRatio { ratio: f64::INFINITY, h1, deficit, degenerate: true };
    }
    AlexandrovRatio { ratio: h1 / deficit, h1, deficit, degenerate: false }
}

/// Linearized Alexandrov ratio of the single mode `k` (`k ≥ 1` for lamellae, `k ≥ 2`
/// for discs): `√(1 + ω²) / (ω² − κ²)` with `ω = 2πk/L`.
pub fn linearized_ratio(base: &CurveSet, k: u32) -> f64 {
    let w = TAU * k as f64 / base.component_length();
    let kappa = base.curvature();
    (1.0 + w * w).sqrt() / (w * w - kappa * kappa)
}

/// `m0 = inf δ²P(E)[φ] / ‖φ‖²_{H¹}` over deformations orthogonal to constants and
/// translations.
///
/// The quotient is diagonal in Fourier modes: mode `k` on a component of length `L` gives
/// `(ω² − κ²)/(1 + ω²)` with `ω = 2πk/L`. Discs exclude `k = 0, 1` (volume and
/// translations). On a lamella, the constant mode equal on both components changes the
/// volume and the opposite one is the normal translation, so both are excluded and the
/// infimum is attained by `k = 1` on one component.
pub fn coercivity_constant(base: &CurveSet) -> f64 {
    let kappa = base.curvature();
    let l = base.component_length();
    let first = match base {
        CurveSet::Disc { .. } => 2,
        CurveSet::Lamella { .. } => 1,
    };
    (first..first + 256)
        .map(|k| {
            let w = TAU * k as f64 / l;
            (w * w - kappa * kappa) / (1.0 + w * w)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `𝒟(E_{f1}, E_{f2}) ≈ ∫_{∂E} ∫_{f2}^{f1} |t − f2| (1 + κt) dt ds`, measuring the
/// distance to `∂E_{f2}` along the normal of `E`:
/// `∫ (1 + κf2) Δ²/2 + κΔ³/3` with `Δ = f1 − f2`.
pub fn dissipation_analytic(d1: &NormalDeformation, d2: &NormalDeformation, delta: f64) -> Result<f64> {
    if d1.base != d2.base || d1.nodes() != d2.nodes() {
        return Err(invalid("deformations must share base and nodes"));
    }
    for (name, d) in [("f1", d1), ("f2", d2)] {
        let c1 = c1_norm(d);
        if c1 > delta {
            return Err(invalid(format!("‖{name}‖_C¹ = {c1} exceeds the smallness bound {delta}")));
        }
    }
    let kappa = d1.base.curvature();
    let mut sum = 0.0;
    for (a, b) in d1.f.iter().flatten().zip(d2.f.iter().flatten()) {
        let delta = a - b;
        sum += (1.0 + kappa * b) * delta * delta / 2.0 + kappa * delta.powi(3) / 3.0;
    }
    Ok(sum * d1.ds())
}

/// Random band-limited `f` with the constant and translation modes removed and
/// `‖f‖_{C¹} = c1`. Mode amplitudes decay like `1/k`.
pub fn random_admissible(base: &CurveSet, m: usize, max_mode: usize, c1: f64, rng: &mut impl Rng) -> Result<NormalDeformation> {
    if max_mode == 0 || 2 * max_mode >= m {
        return Err(invalid(format!("max_mode = {max_mode} must lie in [1, {})", m / 2)));
    }
    let first = match base {
        CurveSet::Disc { .. } => 2,
        CurveSet::Lamella { .. } => 1,
    };
    if max_mode < first {
        return Err(invalid(format!("max_mode = {max_mode} leaves no admissible mode")));
    }
    let mut f = Vec::new();
    for _ in 0..base.components() {
        let modes: Vec<(f64, f64, f64)> =
            (first..=max_mode).map(|k| (k as f64, rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(-1.0..1.0) / k as f64)).collect();
        f.push(
            (0..m)
                .map(|i| {
                    let t = TAU * i as f64 / m as f64;
                    modes.iter().map(|&(k, a, b)| a * (k * t).cos() + b * (k * t).sin()).sum()
                })
                .collect::<Vec<f64>>(),
        );
    }
    let raw = NormalDeformation { base: base.clone(), f };
    let n = c1_norm(&raw);
    if n == 0.0 {
        return Err(Error::Internal("random deformation vanished".into()));
    }
    let f = raw.f.iter().map(|c| c.iter().map(|v| v * c1 / n).collect()).collect();
    NormalDeformation::new(base.clone(), f)
}

/// Cells whose centers lie in `E_f`: a radial graph over a disc, a normal graph over each
/// lamella boundary line.
pub fn rasterize_deformation(d: &NormalDeformation, grid: PeriodicGrid) -> TorusSet {
    let l = d.base.component_length();
    let interp: Vec<Interpolant> = d.f.iter().map(|c| Interpolant::new(c, l)).collect();
    let sup = interp.iter().map(Interpolant::sup).fold(0.0, f64::max);
    let wrap = |v: f64| (v + 0.5).rem_euclid(1.0) - 0.5;
    match d.base {
        CurveSet::Disc { center, radius } => TorusSet::from_fn(grid, |i, j| {
            let (x, y) = grid.center(i, j);
            let (dx, dy) = (wrap(x - center.0), wrap(y - center.1));
            let rho = dx.hypot(dy);
            if rho <= radius - sup {
                return true;
            }
            if rho > radius + sup {
                return false;
            }
            let s = (dy.atan2(dx).rem_euclid(TAU)) * radius;
            rho <= radius + interp[0].eval(s)
        }),
        CurveSet::Lamella { slope: (p, q), offset, width } => {
            let (n, w) = d.base.lamella_frame().expect("lamella");
            let tau = (-n.1, n.0);
            let half_gap = 0.5 * (1.0 - width);
            let v_up = (offset + width) * (w.0 * tau.0 + w.1 * tau.1);
            let v_low = offset * (w.0 * tau.0 + w.1 * tau.1);
            let band = l * sup;
            TorusSet::from_fn(grid, |i, j| {
                let (x, y) = grid.center(i, j);
                let u = p as f64 * x + q as f64 * y;
                let a = (u - offset + half_gap).rem_euclid(1.0) - half_gap;
                if a >= band && a <= width - band {
                    return true;
                }
                if a < -band || a > width + band {
                    return false;
                }
                // Lift to the copy whose normal coordinate is `offset + a`.
                let shift = (u - offset - a).round();
                let (lx, ly) = (x - shift * w.0, y - shift * w.1);
                let v = lx * tau.0 + ly * tau.1;
                let s_up = (v - v_up).rem_euclid(l);
                let s_low = (v_low - v).rem_euclid(l);
                a <= width + l * interp[0].eval(s_up) && a >= -l * interp[1].eval(s_low)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc() -> CurveSet {
        CurveSet::disc((0.5, 0.5), 0.25).unwrap()
    }

    fn lam() -> CurveSet {
        CurveSet::lamella((0, 1), 0.2, 0.3).unwrap()
    }

    #[test]
    fn identity_deformation() {
        for base in [disc(), lam()] {
            let d = NormalDeformation::zero(base.clone(), 64).unwrap();
            assert!(jacobian(&d).iter().flatten().all(|&j| (j - 1.0).abs() < 1e-15));
            assert!((perimeter_of(&d) - base.boundary_length()).abs() < 1e-12);
            assert!(curvature_of(&d).iter().flatten().all(|&h| (h - base.curvature()).abs() < 1e-12));
            let nu = normal_of_deformation(&d);
            for (i, n) in nu[0].iter().enumerate() {
                let (_, e) = base.frame(0, i as f64 * d.ds());
                assert!((n.0 - e.0).abs() < 1e-15 && (n.1 - e.1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn concentric_circle() {
        let c = 0.03;
        let d = NormalDeformation::from_fn(disc(), 128, |_, _| c).unwrap();
        assert!(jacobian(&d)[0].iter().all(|&j| (j - (1.0 + c / 0.25)).abs() < 1e-13));
        assert!((perimeter_of(&d) - TAU * 0.28).abs() < 1e-12);
        assert!((area_of(&d) - PI * 0.28 * 0.28).abs() < 1e-12);
        assert!(curvature_of(&d)[0].iter().all(|&h| (h - 1.0 / 0.28).abs() < 1e-10));
    }

    #[test]
    fn lamella_sine() {
        let a = 1e-3;
        let d = NormalDeformation::from_fn(lam(), 128, |c, s| if c == 0 { a * (TAU * s).sin() } else { 0.0 }).unwrap();
        for (i, &j) in jacobian(&d)[0].iter().enumerate() {
            let s = i as f64 / 128.0;
            assert!((j - (1.0 + (TAU * a * (TAU * s).cos()).powi(2)).sqrt()).abs() < 1e-13);
        }
        assert!((area_of(&d) - 0.3).abs() < 1e-15);
        for (i, &h) in curvature_of(&d)[0].iter().enumerate() {
            let s = i as f64 / 128.0;
            assert!((h - 4.0 * PI * PI * a * (TAU * s).sin()).abs() < 10.0 * a * a * 4.0 * PI * PI);
        }
    }

    #[test]
    fn tilt_is_rejected() {
        assert!(NormalDeformation::from_fn(lam(), 64, |_, s| 0.01 * s).is_err());
    }

    #[test]
    fn second_variation_modes() {
        let m = 128;
        let phi_l = vec![(0..m).map(|i| (TAU * i as f64 / m as f64).sin()).collect(), vec![0.0; m]];
        assert!((second_variation(&lam(), &phi_l).unwrap() - 2.0 * PI * PI).abs() < 1e-10);
        let phi_d = vec![(0..m).map(|i| (2.0 * TAU * i as f64 / m as f64).cos()).collect::<Vec<_>>()];
        assert!((second_variation(&disc(), &phi_d).unwrap() - 3.0 * PI / 0.25).abs() < 1e-10);
        let phi_t = vec![(0..m).map(|i| (TAU * i as f64 / m as f64).cos()).collect::<Vec<_>>()];
        assert!(second_variation(&disc(), &phi_t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn coercivity_values() {
        assert!((coercivity_constant(&lam()) - 4.0 * PI * PI / (1.0 + 4.0 * PI * PI)).abs() < 1e-14);
        assert!((coercivity_constant(&disc()) - 3.0 / (0.0625 + 4.0)).abs() < 1e-14);
    }

    #[test]
    fn dissipation_examples() {
        let c = 0.01;
        let z = NormalDeformation::zero(lam(), 64).unwrap();
        let k = NormalDeformation::from_fn(lam(), 64, |_, _| c).unwrap();
        assert!((dissipation_analytic(&z, &k, 0.05).unwrap() - c * c).abs() < 1e-16);
        assert_eq!(dissipation_analytic(&k, &k, 0.05).unwrap(), 0.0);
        let zd = NormalDeformation::zero(disc(), 64).unwrap();
        let kd = NormalDeformation::from_fn(disc(), 64, |_, _| c).unwrap();
        let want = TAU * 0.25 * (c * c / 2.0) * (1.0 + 2.0 / 3.0 * c / 0.25);
        assert!((dissipation_analytic(&kd, &zd, 0.05).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn undeformed_rasters_match_grid_shapes() {
        use crate::shapes::{rasterize, ShapeSpec};
        let g = PeriodicGrid::square(64).unwrap();
        for (p, q) in [(0, 1), (1, 0), (1, 1), (1, 2), (2, -1)] {
            let base = CurveSet::lamella((p, q), 0.21, 0.3).unwrap();
            let d = NormalDeformation::zero(base, 64).unwrap();
            let want = rasterize(&ShapeSpec::lamella(g, (p, q), 0.21, 0.3).unwrap()).unwrap();
            assert_eq!(rasterize_deformation(&d, g), want, "slope ({p},{q})");
        }
        let d = NormalDeformation::zero(CurveSet::disc((0.1, 0.8), 0.2).unwrap(), 64).unwrap();
        let want = rasterize(&ShapeSpec::disc(g, (0.1, 0.8), 0.2).unwrap()).unwrap();
        assert_eq!(rasterize_deformation(&d, g), want);
    }
}
