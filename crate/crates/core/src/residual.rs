//! Euler–Lagrange residual `H + sd_prev / h − λ` along the interface of a step result.
//!
//! Interface points are the midpoints between 4-adjacent cells of opposite phase. At each
//! point the interface is fitted locally by a quadratic graph over its principal direction,
//! using all interface points within a window; curvature is read off the fit and signed
//! with respect to the outward normal.

use crate::distance::signed_distance;
use crate::error::{Error, Result};
use crate::grid::TorusSet;

/// Summary of the residual over all interface points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualStats {
    /// Estimated multiplier: mean of `H + sd/h` over the interface.
    pub lambda_est: f64,
    /// Mean of `|H + sd/h − λ_est|`.
    pub mean: f64,
    /// Max of `|H + sd/h − λ_est|`.
    pub max: f64,
    /// Mean estimated curvature.
    pub mean_curvature: f64,
    /// Interface points used.
    pub points: usize,
}

struct Point {
    x: f64,
    y: f64,
    /// Unit vector from the inside cell to the outside cell.
    ex: f64,
    ey: f64,
    sd: f64,
}

/// Default fitting window radius for a grid with cell size `hx`.
pub fn default_window(hx: f64) -> f64 {
    (5.0 * hx).max(0.06)
}

pub fn euler_lagrange_residual(next: &TorusSet, prev: &TorusSet, h: f64) -> Result<ResidualStats> {
    let hx = next.grid().hx().max(next.grid().hy());
    euler_lagrange_residual_with(next, prev, h, default_window(hx))
}

pub fn euler_lagrange_residual_with(next: &TorusSet, prev: &TorusSet, h: f64, window: f64) -> Result<ResidualStats> {
    next.grid().check_same(&prev.grid())?;
    next.require_proper()?;
    let g = next.grid();
    let sd = signed_distance(prev)?;
    let mut pts = Vec::new();
    let mut by_cell: Vec<Vec<usize>> = vec![Vec::new(); g.len()];
    for k in 0..g.len() {
        if !next.get(k) {
            continue;
        }
        let (i, j) = g.coords(k);
        let (cx, cy) = g.center(i, j);
        for (di, dj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
            let y = g.offset(k, di, dj);
            if next.get(y) {
                continue;
            }
            let p = Point {
                x: cx + 0.5 * di as f64 * g.hx(),
                y: cy + 0.5 * dj as f64 * g.hy(),
                ex: di as f64,
                ey: dj as f64,
                sd: 0.5 * (sd.values()[k] + sd.values()[y]),
            };
            by_cell[k].push(pts.len());
            pts.push(p);
        }
    }
    if pts.len() < 8 {
        return Err(Error::TooFewBoundaryCells(pts.len()));
    }
    let wi = (window / g.hx()).ceil() as isize + 1;
    let wj = (window / g.hy()).ceil() as isize + 1;
    let wrap = |d: f64| d - d.round();
    let mut r = Vec::with_capacity(pts.len());
    let mut curv = Vec::with_capacity(pts.len());
    let mut nb: Vec<(f64, f64)> = Vec::new();
    for (k, cells) in by_cell.iter().enumerate() {
        if cells.is_empty() {
            continue;
        }
        for &pi in cells {
            let p = &pts[pi];
            nb.clear();
            for dj in -wj..=wj {
                for di in -wi..=wi {
                    let c = g.offset(k, di, dj);
                    for &qi in &by_cell[c] {
                        let q = &pts[qi];
                        let (dx, dy) = (wrap(q.x - p.x), wrap(q.y - p.y));
                        if dx * dx + dy * dy <= window * window {
                            nb.push((dx, dy));
                        }
                    }
                }
            }
            if let Some(hk) = fit_curvature(&nb, p.ex, p.ey) {
                curv.push(hk);
                r.push(hk + p.sd / h);
            }
        }
    }
    if r.len() < 8 {
        return Err(Error::TooFewBoundaryCells(r.len()));
    }
    let n = r.len() as f64;
    let lambda_est = r.iter().sum::<f64>() / n;
    let dev: Vec<f64> = r.iter().map(|v| (v - lambda_est).abs()).collect();
    Ok(ResidualStats {
        lambda_est,
        mean: dev.iter().sum::<f64>() / n,
        max: dev.iter().fold(0.0, |a, &b| a.max(b)),
        mean_curvature: curv.iter().sum::<f64>() / n,
        points: r.len(),
    })
}

/// Curvature at the origin of the interface through the displacement cloud `nb`, signed
/// positive when the interface bends away from the outward direction `(ex, ey)`.
fn fit_curvature(nb: &[(f64, f64)], ex: f64, ey: f64) -> Option<f64> {
    if nb.len() < 5 {
        return None;
    }
    let m = nb.len() as f64;
    let (mx, my) = nb.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / m, b + y / m));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in nb {
        let (x, y) = (x - mx, y - my);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    // Principal direction of the 2x2 covariance.
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (tx, ty) = (theta.cos(), theta.sin());
    let (mut ux, mut uy) = (-ty, tx);
    if ux * ex + uy * ey < 0.0 {
        ux = -ux;
        uy = -uy;
    }
    // Least squares for v = a + b t + c t².
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(x, y) in nb {
        let t = x * tx + y * ty;
        let v = x * ux + y * uy;
        let row = [1.0, t, t * t];
        for a in 0..3 {
            for b in 0..3 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * v;
        }
    }
    let sol = solve3(ata, atb)?;
    let (b, c) = (sol[1], sol[2]);
    Some(-2.0 * c / (1.0 + b * b).powf(1.5))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for c in r + 1..3 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}
