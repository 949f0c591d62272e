//! Iterating the step and recording convergence diagnostics.

use std::io::Write;

use crate::alpha::AlphaReference;
use crate::atw::{step_warm, StepConfig, StepReport, WarmStart};
use crate::distance::hausdorff_boundary;
use crate::error::{invalid, Error, Result};
use crate::grid::{PeriodicGrid, TorusSet};
use crate::stencil::perimeter;

/// Consecutive unchanged steps after which a run counts as stationary.
pub const STATIONARY_WINDOW: usize = 3;

/// Diagnostics after step `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub perimeter: f64,
    /// Occupied cell count.
    pub volume: usize,
    /// `𝒟(E_n, E_{n−1})` as minimized by the step.
    pub dissipation: f64,
    /// Circular mean per axis; NaN along an axis with no well-defined mean.
    pub barycenter: (f64, f64),
    /// α-distance to the reference in cell areas, when a reference is given.
    pub alpha: Option<f64>,
    pub hausdorff: Option<f64>,
    pub cells_changed: usize,
    pub lambda: f64,
    pub cells_trimmed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub h: f64,
    pub grid: PeriodicGrid,
    pub seed: Option<u64>,
    /// Perimeter of the initial set.
    pub p0: f64,
    pub volume0: usize,
    pub rows: Vec<TraceRow>,
}

impl FlowTrace {
    pub const CSV_HEADER: &'static str =
        "step,perimeter,volume,dissipation,bary_x,bary_y,alpha,hausdorff,cells_changed,lambda,cells_trimmed";

    pub fn perimeters(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.perimeter).collect()
    }

    pub fn dissipations(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.dissipation).collect()
    }

    pub fn alphas(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.alpha).collect()
    }

    pub fn final_perimeter(&self) -> f64 {
        self.rows.last().map_or(self.p0, |r| r.perimeter)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(w, "{}", Self::CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        for r in &self.rows {
            writeln!(
                w,
                "{},{:?},{},{:?},{:?},{:?},{},{},{},{:?},{}",
                r.step,
                r.perimeter,
                r.volume,
                r.dissipation,
                r.barycenter.0,
                r.barycenter.1,
                opt(r.alpha),
                opt(r.hausdorff),
                r.cells_changed,
                r.lambda,
                r.cells_trimmed
            )?;
        }
        Ok(())
    }

    /// Run metadata as `key=value` lines.
    pub fn write_meta<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "schema=1")?;
        writeln!(w, "nx={}", self.grid.nx())?;
        writeln!(w, "ny={}", self.grid.ny())?;
        writeln!(w, "h={:?}", self.h)?;
        writeln!(w, "seed={}", self.seed.map_or("none".to_string(), |s| s.to_string()))?;
        writeln!(w, "p0={:?}", self.p0)?;
        writeln!(w, "volume0={}", self.volume0)?;
        writeln!(w, "steps={}", self.rows.len())?;
        writeln!(w, "stationary={}", stationarity(self))?;
        Ok(())
    }
}

/// Runs up to `n_steps` steps, stopping early once [`STATIONARY_WINDOW`] consecutive
/// steps change no cell.
pub fn run(e0: &TorusSet, cfg: &StepConfig, n_steps: usize, reference: Option<&TorusSet>) -> Result<(FlowTrace, TorusSet)> {
    run_with(e0, cfg, n_steps, reference, |_, _, _| Ok(()))
}

/// As [`run`], calling `observe(n, E_n, report)` after every step.
pub fn run_with(
    e0: &TorusSet,
    cfg: &StepConfig,
    n_steps: usize,
    reference: Option<&TorusSet>,
    mut observe: impl FnMut(usize, &TorusSet, &StepReport) -> Result<()>,
) -> Result<(FlowTrace, TorusSet)> {
    e0.require_proper()?;
    cfg.validate()?;
    let alpha_ref = match reference {
        Some(r) => {
            r.grid().check_same(&e0.grid())?;
            r.require_proper()?;
            Some(AlphaReference::new(r))
        }
        None => None,
    };
    let mut trace = FlowTrace {
        h: cfg.h,
        grid: e0.grid(),
        seed: None,
        p0: perimeter(e0),
        volume0: e0.count(),
        rows: Vec::new(),
    };
    let mut cur = e0.clone();
    let mut quiet = 0;
    let mut step_cfg = cfg.clone();
    let mut warm = WarmStart::new();
    for n in 1..=n_steps {
        let (next, report) = step_warm(&cur, &step_cfg, &mut warm)?;
        // Consecutive multipliers are close; probing around the last one first shrinks the
        // bisection early without changing its outcome.
        if cfg.lambda_hint.is_none() {
            step_cfg.lambda_hint = Some(report.lambda_star);
        }
        let (bx, by) = next.barycenter_axes()?;
        let row = TraceRow {
            step: n,
            perimeter: report.perimeter,
            volume: next.count(),
            dissipation: report.dissipation,
            barycenter: (bx.unwrap_or(f64::NAN), by.unwrap_or(f64::NAN)),
            alpha: match &alpha_ref {
                Some(a) => Some(a.distance(&next)?.cells as f64),
                None => None,
            },
            hausdorff: match reference {
                Some(r) => Some(hausdorff_boundary(&next, r)?),
                None => None,
            },
            cells_changed: report.cells_changed,
            lambda: report.lambda_star,
            cells_trimmed: report.cells_trimmed,
        };
        if !row.perimeter.is_finite() || !row.dissipation.is_finite() {
            return Err(Error::Internal(format!("non-finite diagnostics at step {n}")));
        }
        observe(n, &next, &report)?;
        trace.rows.push(row);
        quiet = if report.cells_changed == 0 { quiet + 1 } else { 0 };
        cur = next;
        if quiet >= STATIONARY_WINDOW {
            break;
        }
    }
    Ok((trace, cur))
}

/// True iff the last [`STATIONARY_WINDOW`] steps changed no cell.
pub fn stationarity(trace: &FlowTrace) -> bool {
    trace.rows.len() >= STATIONARY_WINDOW && trace.rows.iter().rev().take(STATIONARY_WINDOW).all(|r| r.cells_changed == 0)
}

/// Exponential rate fitted to a decaying series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    /// Per-step factor `exp(slope)` of the log-linear fit.
    pub b: f64,
    pub r2: f64,
    /// Samples used.
    pub points: usize,
}

/// Values at or below this are treated as having hit the floor and are not fitted.
pub const RATE_FLOOR: f64 = 1e-14;

/// Least-squares fit of `ln a_n` against `n` over the last `tail_fraction` of the series,
/// using only samples above [`RATE_FLOOR`].
pub fn fit_rate(series: &[f64], tail_fraction: f64) -> Result<RateFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(invalid(format!("tail_fraction = {tail_fraction} must lie in (0, 1]")));
    }
    let keep = ((series.len() as f64) * tail_fraction).ceil() as usize;
    let start = series.len() - keep.min(series.len());
    let pts: Vec<(f64, f64)> =
        series.iter().enumerate().skip(start).filter(|(_, &v)| v > RATE_FLOOR).map(|(n, &v)| (n as f64, v.ln())).collect();
    if pts.len() < 4 {
        return Err(Error::TooFewSamples(pts.len()));
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / m, b + y / m));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    // A perfectly flat series is fitted exactly.
    let r2 = if syy <= 1e-300 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { b: slope.exp(), r2, points: pts.len() })
}

/// Outcome of [`check_sequence_lemma`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SequenceLemma {
    Holds,
    /// First index where `a_k` exceeds the bound.
    Violated { index: usize },
    /// First `k` where `Σ_{n≥k} a_n ≤ c Σ_{j=k}^{k+l−1} a_j` fails.
    HypothesisFail { index: usize },
}

/// Checks the decay bound `a_k ≤ (1 − 1/(c+1))^{⌊k/l⌋} Σ a` for a finite nonnegative
/// sequence (taken as zero beyond its end) satisfying the window hypothesis
/// `Σ_{n≥k} a_n ≤ c Σ_{j=k}^{k+l−1} a_j` for every `k`.
///
/// The exponent is `⌊k/l⌋`: the hypothesis gives `T_{k+l} ≤ (1 − 1/c) T_k` for the tails
/// `T_k`, which controls `a_k` only through whole windows.
pub fn check_sequence_lemma(a: &[f64], c: f64, l: usize) -> Result<SequenceLemma> {
    if !(c.is_finite() && c > 1.0) {
        return Err(invalid(format!("c = {c} must be finite and greater than 1")));
    }
    if l == 0 {
        return Err(invalid("window length l must be positive"));
    }
    if let Some(k) = a.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid(format!("a[{k}] = {} is not a finite nonnegative number", a[k])));
    }
    let n = a.len();
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + a[k];
    }
    let total = tail[0];
    let slack = 1e-12 * total;
    for k in 0..n {
        let window = tail[k] - tail[(k + l).min(n)];
        if tail[k] > c * window + slack {
            return Ok(SequenceLemma::HypothesisFail { index: k });
        }
    }
    let q = 1.0 - 1.0 / (c + 1.0);
    for (k, &v) in a.iter().enumerate() {
        let bound = q.powi((k / l) as i32) * total;
        if v > bound + slack {
            return Ok(SequenceLemma::Violated { index: k });
        }
    }
    Ok(SequenceLemma::Holds)
}

/// First `k` at which `Σ_{n>k} D_n / h ≤ P_k − P_last` fails (with `P_0` the initial
/// perimeter and relative slack `tol`), or `None`.
pub fn check_telescoping(trace: &FlowTrace, tol: f64) -> Option<usize> {
    let mut p = vec![trace.p0];
    p.extend(trace.rows.iter().map(|r| r.perimeter));
    let d: Vec<f64> = trace.rows.iter().map(|r| r.dissipation / trace.h).collect();
    let last = *p.last().expect("nonempty");
    let mut tail = 0.0;
    for k in (0..p.len()).rev() {
        if tail > p[k] - last + tol * trace.p0.max(1.0) {
            return Some(k);
        }
        if k > 0 {
            tail += d[k - 1];
        }
    }
    None
}
