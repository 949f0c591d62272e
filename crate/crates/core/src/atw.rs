//! One minimizing-movement step: `min { P(F) + (1/h) ∫_F sd_E : |F| = |E| }`.
//!
//! The energy is integer-scaled (see [`crate::stencil`]). For a multiplier `Λ` the
//! relaxed problem `min P(F) + Σ_{x∈F} (pot(x) − Λ)` is submodular and solved exactly by
//! max-flow. Minimal minimizers are nested in `Λ`, so each bisection probe fixes the
//! cells on which the current bracketing cuts agree. Probes share one residual graph and
//! only shift terminal capacities; [`WarmStart`] carries it from one step to the next.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::distance::signed_distance;
use crate::error::{invalid, Error, Result};
use crate::grid::{PeriodicGrid, ScalarField, TorusSet};
use crate::maxflow::MaxFlow;
use crate::residual::{euler_lagrange_residual, ResidualStats};
use crate::stencil::{Stencil, ENERGY_BITS, OFFSETS};

const UNIT: f64 = (1u64 << ENERGY_BITS) as f64;
/// Potentials beyond this many units are rejected to keep sums inside i64.
const MAX_POTENTIAL_UNITS: f64 = (1u64 << 38) as f64;

/// Default [`StepConfig::exact_budget`].
pub const DEFAULT_EXACT_BUDGET: u64 = 1 << 16;

/// Ordering applied to equal-priority cells when trimming.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum TieRule {
    /// Ties broken by `(row, column)`.
    #[default]
    RowMajor,
    /// Ties broken by `(column, row)`.
    ColumnMajor,
}

/// Which minimizer to return when the relaxed problem has several.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Selection {
    #[default]
    InclusionMinimal,
    InclusionMaximal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepConfig {
    /// Time step.
    pub h: f64,
    /// Multiplier to start the search from, typically the previous step's `λ*`. The
    /// search gallops outward from it; the result does not depend on it.
    pub lambda_hint: Option<f64>,
    /// Cap on bisection probes.
    pub max_bisection: u32,
    pub tie_rule: TieRule,
    /// Whether to evaluate the Euler–Lagrange residual after each step.
    pub residual: bool,
    /// Work allowance for the exact search that follows trimming, counted as grid cells
    /// summed over max-flow probes. Zero disables the search.
    pub exact_budget: u64,
}

impl StepConfig {
    pub fn new(h: f64) -> Result<Self> {
        let cfg = Self { h, lambda_hint: None, max_bisection: 64, tie_rule: TieRule::RowMajor, residual: false, exact_budget: DEFAULT_EXACT_BUDGET };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h >= 1e-7) {
            return Err(invalid(format!("time step h = {} must be finite and at least 1e-7", self.h)));
        }
        if let Some(l) = self.lambda_hint {
            if !(l.is_finite() && (l * UNIT).abs() < MAX_POTENTIAL_UNITS) {
                return Err(invalid(format!("lambda hint {l} must be finite and in range")));
            }
        }
        if self.max_bisection < 40 {
            return Err(invalid(format!("max_bisection = {} must be at least 40", self.max_bisection)));
        }
        Ok(())
    }
}

/// Diagnostics of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Resolved multiplier `λ*` (real units).
    pub lambda_star: f64,
    /// `P(F) + 𝒟(F, E)/h` of the returned set, evaluated in the integer model.
    pub cut_energy: f64,
    /// `P(F)` in the integer model.
    pub perimeter: f64,
    /// `𝒟(F, E)` in the integer model, so that `perimeter + dissipation / h = cut_energy`.
    pub dissipation: f64,
    /// Cells added or removed by volume trimming.
    pub cells_trimmed: usize,
    /// Cells in `F △ E_prev`.
    pub cells_changed: usize,
    /// Max-flow solves performed.
    pub solves: u32,
    /// True if the relaxed cut at `λ*` already had the target volume.
    pub exact_cut: bool,
    /// True if the step is certified to be a constrained minimizer.
    pub proven_optimal: bool,
    pub el_residual: Option<ResidualStats>,
}

impl StepReport {
    pub const CSV_HEADER: &'static str = "lambda_star,cut_energy,cells_trimmed,residual_mean,residual_max";

    pub fn csv_row(&self) -> String {
        let (mean, max) = self.el_residual.map_or((f64::NAN, f64::NAN), |r| (r.mean, r.max));
        format!("{:?},{:?},{},{:?},{:?}", self.lambda_star, self.cut_energy, self.cells_trimmed, mean, max)
    }
}

/// Integer binary energy `P(F) + Σ_{x∈F} pot(x)` on one grid.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    stencil: Stencil,
    potential: Vec<i64>,
    neighbors: Vec<(isize, isize, i64)>,
}

impl EnergyModel {
    /// Quantizes a real potential (per unit area) to integer units.
    pub fn from_potential(potential: &ScalarField) -> Result<Self> {
        potential.check_finite()?;
        let g = potential.grid();
        let mut units = Vec::with_capacity(g.len());
        for (k, &p) in potential.values().iter().enumerate() {
            let u = (p * UNIT).round();
            if u.abs() > MAX_POTENTIAL_UNITS {
                let (i, j) = g.coords(k);
                return Err(invalid(format!("potential {p} at ({i},{j}) exceeds the representable range")));
            }
            units.push(u as i64);
        }
        Ok(Self::from_units(Stencil::new(g), units))
    }

    /// Model for a step from `prev` with time step `h`; also returns `sd_prev`.
    pub fn for_step(prev: &TorusSet, h: f64) -> Result<(Self, ScalarField)> {
        let sd = signed_distance(prev)?;
        let mut model = Self::from_potential(&sd.map(|v| v / h))?;
        // Keep the sign of the potential strict so that every flipped cell costs dissipation.
        for (k, u) in model.potential.iter_mut().enumerate() {
            if *u == 0 {
                *u = if prev.get(k) { -1 } else { 1 };
            }
        }
        Ok((model, sd))
    }

    pub fn from_units(stencil: Stencil, potential: Vec<i64>) -> Self {
        assert_eq!(potential.len(), stencil.grid().len());
        let mut neighbors = Vec::with_capacity(16);
        for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
            let w = stencil.weights()[k];
            neighbors.push((di, dj, w));
            neighbors.push((-di, -dj, w));
        }
        Self { stencil, potential, neighbors }
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.stencil.grid()
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn potential_units(&self) -> &[i64] {
        &self.potential
    }

    /// `P(F) + Σ_{x∈F} (pot(x) − Λ)` in integer units.
    pub fn energy(&self, set: &TorusSet, lambda_units: i64) -> i64 {
        let unary: i64 = set.iter_occupied().map(|k| self.potential[k] - lambda_units).sum();
        self.stencil.perimeter_units(set) + unary
    }

    /// Integer units per real unit of energy.
    pub fn scale(&self) -> f64 {
        self.stencil.units_per_length()
    }

    fn neighbor_index(&self) -> Vec<[(usize, i64); 16]> {
        let g = self.grid();
        (0..g.len())
            .map(|k| {
                let mut row = [(0usize, 0i64); 16];
                for (slot, &(di, dj, w)) in row.iter_mut().zip(&self.neighbors) {
                    *slot = (g.offset(k, di, dj), w);
                }
                row
            })
            .collect()
    }

    /// Exact minimizer of the relaxed energy at multiplier `Λ` (integer units).
    pub fn cut(&self, lambda_units: i64, selection: Selection) -> TorusSet {
        let state = vec![CellState::Free; self.grid().len()];
        let cells = CutSolver::new(self).solve(lambda_units, &state, selection);
        TorusSet::from_cells(self.grid(), cells).expect("sized to grid")
    }
}

/// Residual flow left by one probe, with the net terminal capacities it was solved for.
#[derive(Clone, Debug)]
struct FlowState {
    lambda: i64,
    mf: MaxFlow,
    net: Vec<i64>,
}

/// Residual flows of one step's bracketing probes, kept to warm-start the next step on the
/// same grid. Only the work changes: every probe still returns the unique minimal cut, so
/// warm and cold steps give identical results.
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    grid: Option<PeriodicGrid>,
    states: Vec<FlowState>,
}

impl WarmStart {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Max-flow over every cell of a model, kept between probes. Each probe only shifts
/// terminal capacities, so the residual flow of an earlier probe is reused.
struct CutSolver<'a> {
    model: &'a EnergyModel,
    cur: Option<FlowState>,
    /// States carried over from the previous step. A probe at one of their multipliers
    /// resumes from it instead of from the current state.
    pool: Vec<FlowState>,
}

/// Terminal capacity that pins a cell to one side; it exceeds every unary term plus the
/// weights of all incident edges.
const PIN: i64 = 1 << 52;

impl<'a> CutSolver<'a> {
    fn new(model: &'a EnergyModel) -> Self {
        Self { model, cur: None, pool: Vec::new() }
    }

    fn resume(model: &'a EnergyModel, warm: &mut WarmStart) -> Self {
        let mut me = Self::new(model);
        if warm.grid == Some(model.grid()) {
            me.pool = std::mem::take(&mut warm.states);
        }
        me
    }

    fn cold(&self) -> FlowState {
        let g = self.model.grid();
        let n = g.len();
        let mut mf = MaxFlow::with_edge_capacity(n, n * 8);
        for k in 0..n {
            // Each undirected pair is added once, from its forward offset.
            for &(di, dj, w) in self.model.neighbors.iter().step_by(2) {
                mf.add_edge(k, g.offset(k, di, dj), w, w);
            }
        }
        FlowState { lambda: 0, mf, net: vec![0; n] }
    }

    fn snapshot(&self) -> Option<FlowState> {
        self.cur.clone()
    }

    fn solve(&mut self, lambda: i64, state: &[CellState], selection: Selection) -> Vec<bool> {
        if let Some(pos) = self.pool.iter().position(|s| s.lambda == lambda) {
            self.cur = Some(self.pool.swap_remove(pos));
        } else if self.cur.is_none() {
            let near = (0..self.pool.len()).min_by_key(|&i| self.pool[i].lambda.abs_diff(lambda));
            self.cur = Some(match near {
                Some(i) => self.pool.swap_remove(i),
                None => self.cold(),
            });
        }
        let potential = &self.model.potential;
        let st = self.cur.as_mut().expect("set above");
        for (k, s) in state.iter().enumerate() {
            let want = match s {
                CellState::Free => lambda - potential[k],
                CellState::In => PIN,
                CellState::Out => -PIN,
            };
            if want != st.net[k] {
                st.mf.shift_terminal(k, want - st.net[k]);
                st.net[k] = want;
            }
        }
        st.lambda = lambda;
        st.mf.solve();
        state
            .iter()
            .enumerate()
            .map(|(k, s)| match s {
                CellState::In => true,
                CellState::Out => false,
                CellState::Free => match selection {
                    Selection::InclusionMinimal => st.mf.in_minimal_source_set(k),
                    Selection::InclusionMaximal => st.mf.in_maximal_source_set(k),
                },
            })
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum CellState {
    Free,
    In,
    Out,
}

/// Unconstrained minimizer of `P(F) + ∫_F (potential − λ)`, inclusion-minimal among ties.
pub fn prescribed_cut(potential: &ScalarField, lambda: f64) -> Result<TorusSet> {
    prescribed_cut_with(potential, lambda, Selection::InclusionMinimal)
}

pub fn prescribed_cut_with(potential: &ScalarField, lambda: f64, selection: Selection) -> Result<TorusSet> {
    if !lambda.is_finite() {
        return Err(invalid("lambda must be finite"));
    }
    let shifted = potential.map(|p| p - lambda);
    let model = EnergyModel::from_potential(&shifted)?;
    Ok(model.cut(0, selection))
}

/// Result of the volume-constrained minimization.
#[derive(Clone, Debug)]
pub struct ConstrainedCut {
    pub set: TorusSet,
    /// Multiplier in integer units at which the bracketing cut first reached the target.
    pub lambda_units: i64,
    pub cells_trimmed: usize,
    pub solves: u32,
    pub exact_cut: bool,
    /// True when the returned set is certified to be a constrained minimizer.
    pub proven_optimal: bool,
}

/// Adjacent multipliers whose minimal cuts bracket the target volume.
struct Bracket {
    lo: i64,
    hi: i64,
    f_lo: Vec<bool>,
    f_hi: Vec<bool>,
    c_lo: usize,
    c_hi: usize,
    /// Residual flows of the probes that set `lo` and `hi`, when requested.
    kept: [Option<FlowState>; 2],
}

#[derive(Default)]
struct Work {
    solves: u32,
    cell_solves: u64,
}

fn count(cells: &[bool]) -> usize {
    cells.iter().filter(|&&x| x).count()
}

/// Bisection on the multiplier with the cells fixed by `base`. Requires
/// `#In(base) < target ≤ #not-Out(base)`. Returns `None` if a probe would push
/// `work.cell_solves` past `limit`. With `keep`, the bracket carries the residual flows of
/// its two end probes.
#[allow(clippy::too_many_arguments)]
fn bisect(
    solver: &mut CutSolver,
    target: usize,
    base: &[CellState],
    hint: Option<i64>,
    max_iter: u32,
    limit: u64,
    keep: bool,
    work: &mut Work,
) -> Option<Bracket> {
    let model = solver.model;
    let n = base.len();
    let w_cell = model.stencil.cell_weight_sum();
    let pmin = *model.potential.iter().min().expect("nonempty");
    let pmax = *model.potential.iter().max().expect("nonempty");
    let f_lo: Vec<bool> = base.iter().map(|s| *s == CellState::In).collect();
    let f_hi: Vec<bool> = base.iter().map(|s| *s != CellState::Out).collect();
    let mut br = Bracket { lo: pmin - w_cell - 1, hi: pmax + w_cell + 1, c_lo: count(&f_lo), c_hi: count(&f_hi), f_lo, f_hi, kept: [None, None] };

    let mut probe = |br: &mut Bracket, lambda: i64, work: &mut Work| {
        let state: Vec<CellState> = (0..n)
            .map(|k| {
                if br.f_lo[k] {
                    CellState::In
                } else if !br.f_hi[k] {
                    CellState::Out
                } else {
                    CellState::Free
                }
            })
            .collect();
        work.solves += 1;
        // Building and reading back a probe touches every cell.
        work.cell_solves += n as u64;
        let cut = solver.solve(lambda, &state, Selection::InclusionMinimal);
        let c = count(&cut);
        let side = usize::from(c >= target);
        if c >= target {
            (br.hi, br.f_hi, br.c_hi) = (lambda, cut, c);
        } else {
            (br.lo, br.f_lo, br.c_lo) = (lambda, cut, c);
        }
        if keep {
            br.kept[side] = solver.snapshot();
        }
    };
    // Gallop outward from the hint: offsets 0, 1, 2, 4, ... toward the side that is still
    // open. Minimal cuts are nested in λ, so the final adjacent bracket (or the cut that
    // hits the target) is the same whatever the probe sequence.
    let mut iters = 0;
    if let Some(c) = hint {
        let mut off = 0i64;
        while br.hi - br.lo > 1 && br.c_hi != target && iters < max_iter {
            let l = if br.hi <= c { c.saturating_sub(off) } else { c.saturating_add(off) };
            if l <= br.lo || l >= br.hi {
                break;
            }
            if work.cell_solves + n as u64 > limit {
                return None;
            }
            iters += 1;
            probe(&mut br, l, work);
            if br.lo >= c.saturating_sub(off) && br.hi <= c.saturating_add(off) {
                break;
            }
            off = if off == 0 { 1 } else { off.saturating_mul(2) };
        }
    }
    while br.hi - br.lo > 1 && br.c_hi != target && iters < max_iter {
        if work.cell_solves + n as u64 > limit {
            return None;
        }
        iters += 1;
        let mid = br.lo + (br.hi - br.lo) / 2;
        probe(&mut br, mid, work);
    }
    Some(br)
}

/// Lagrangian lower bound on the constrained optimum within the bracket's subproblem.
fn dual_bound(model: &EnergyModel, target: usize, br: &Bracket) -> i128 {
    let g = model.grid();
    let side = |lambda: i64, cells: &[bool], c: usize| -> i128 {
        let set = TorusSet::from_cells(g, cells.to_vec()).expect("sized");
        model.energy(&set, 0) as i128 - lambda as i128 * (c as i128 - target as i128)
    };
    side(br.lo, &br.f_lo, br.c_lo).max(side(br.hi, &br.f_hi, br.c_hi))
}

/// Minimizes `P(F) + Σ_{x∈F} pot(x)` subject to `#F = target` cells.
///
/// Bisection finds adjacent multipliers whose minimal cuts bracket the target volume. If
/// the upper cut hits the target it is an exact constrained minimizer. Otherwise two
/// candidates are built greedily (removing cells from the upper cut and adding cells to
/// the lower one, always inside their difference), each is improved by volume-preserving
/// swaps, and the cheaper one is kept. A branch-and-bound search with Lagrangian bounds
/// then tries to certify or improve it within `cfg.exact_budget`.
pub fn constrained_cut(model: &EnergyModel, target: usize, cfg: &StepConfig) -> Result<ConstrainedCut> {
    cut_with(CutSolver::new(model), target, cfg, None)
}

/// [`constrained_cut`] that resumes from the residual flows in `warm` and leaves this
/// cut's bracketing flows there for the next call.
pub fn constrained_cut_warm(model: &EnergyModel, target: usize, cfg: &StepConfig, warm: &mut WarmStart) -> Result<ConstrainedCut> {
    cut_with(CutSolver::resume(model, warm), target, cfg, Some(warm))
}

fn cut_with(mut solver: CutSolver, target: usize, cfg: &StepConfig, warm: Option<&mut WarmStart>) -> Result<ConstrainedCut> {
    let model = solver.model;
    cfg.validate()?;
    let g = model.grid();
    let n = g.len();
    if target == 0 || target >= n {
        return Err(Error::ImproperSet);
    }
    let hint = cfg.lambda_hint.map(|l| (l * UNIT).round() as i64);
    let mut work = Work::default();
    let keep = warm.is_some();
    let mut root = bisect(&mut solver, target, &vec![CellState::Free; n], hint, cfg.max_bisection, u64::MAX, keep, &mut work)
        .expect("unlimited");
    if let Some(warm) = warm {
        warm.grid = Some(g);
        warm.states = root.kept.iter_mut().filter_map(Option::take).collect();
    }
    let hi = root.hi;
    if root.c_hi == target {
        let set = TorusSet::from_cells(g, root.f_hi).expect("sized");
        return Ok(ConstrainedCut { set, lambda_units: hi, cells_trimmed: 0, solves: work.solves, exact_cut: true, proven_optimal: true });
    }
    debug_assert!(root.c_lo < target && root.c_hi > target);

    let nbrs = model.neighbor_index();
    let order_key = |k: usize| -> (i64, usize, usize) {
        let (i, j) = g.coords(k);
        let t = (model.potential[k] - hi).abs();
        match cfg.tie_rule {
            TieRule::RowMajor => (t, j, i),
            TieRule::ColumnMajor => (t, i, j),
        }
    };
    let gap: Vec<usize> = (0..n).filter(|&k| root.f_hi[k] && !root.f_lo[k]).collect();
    let mut removed = root.f_hi.clone();
    greedy_toggle(model, &nbrs, &mut removed, &gap, root.c_hi - target, &order_key);
    let mut added = root.f_lo.clone();
    greedy_toggle(model, &nbrs, &mut added, &gap, target - root.c_lo, &order_key);
    let mut best: Option<(i64, Vec<bool>)> = None;
    for mut cand in [removed, added] {
        polish_swaps(model, &nbrs, &mut cand, &gap, &order_key);
        let e = model.energy(&TorusSet::from_cells(g, cand.clone()).expect("sized"), 0);
        if best.as_ref().map_or(true, |(be, _)| e < *be) {
            best = Some((e, cand));
        }
    }
    let mut incumbent = best.expect("two candidates");
    let proven = branch_and_bound(&mut solver, target, &root, &mut incumbent, &nbrs, cfg, &mut work);
    let cells = incumbent.1;
    let trimmed = cells
        .iter()
        .zip(&root.f_hi)
        .filter(|(a, b)| a != b)
        .count()
        .min(cells.iter().zip(&root.f_lo).filter(|(a, b)| a != b).count());
    let set = TorusSet::from_cells(g, cells).expect("sized");
    debug_assert_eq!(set.count(), target);
    Ok(ConstrainedCut { set, lambda_units: hi, cells_trimmed: trimmed, solves: work.solves, exact_cut: false, proven_optimal: proven })
}

/// Depth-first branch-and-bound on single cells of the bracket gap. Each node re-runs the
/// restricted bisection, whose two bracketing cuts give a Lagrangian lower bound. Returns
/// whether the search completed, in which case `incumbent` is optimal.
fn branch_and_bound(
    solver: &mut CutSolver,
    target: usize,
    root: &Bracket,
    incumbent: &mut (i64, Vec<bool>),
    nbrs: &[[(usize, i64); 16]],
    cfg: &StepConfig,
    work: &mut Work,
) -> bool {
    let model = solver.model;
    let g = model.grid();
    let n = g.len();
    let energy = |cells: &[bool]| model.energy(&TorusSet::from_cells(g, cells.to_vec()).expect("sized"), 0);
    let consider = |cells: Vec<bool>, inc: &mut (i64, Vec<bool>)| {
        let e = energy(&cells);
        if e < inc.0 {
            *inc = (e, cells);
        }
    };
    let branch_cell = |br: &Bracket| -> usize {
        (0..n)
            .filter(|&k| br.f_hi[k] && !br.f_lo[k])
            .min_by_key(|&k| {
                let (i, j) = g.coords(k);
                ((model.potential[k] - br.hi).abs(), j, i)
            })
            .expect("nonempty gap")
    };
    if dual_bound(model, target, root) >= incumbent.0 as i128 {
        return true;
    }
    if cfg.exact_budget == 0 {
        return false;
    }
    let limit = work.cell_solves.saturating_add(cfg.exact_budget);
    let mut stack: Vec<Vec<CellState>> = Vec::new();
    let x = branch_cell(root);
    for s in [CellState::Out, CellState::In] {
        let mut st = vec![CellState::Free; n];
        st[x] = s;
        stack.push(st);
    }
    while let Some(state) = stack.pop() {
        let fixed_in = state.iter().filter(|s| **s == CellState::In).count();
        let open = n - state.iter().filter(|s| **s == CellState::Out).count();
        if fixed_in > target || open < target {
            continue;
        }
        if fixed_in == target || open == target {
            let take_open = open == target;
            consider(state.iter().map(|s| if take_open { *s != CellState::Out } else { *s == CellState::In }).collect(), incumbent);
            continue;
        }
        let Some(br) = bisect(solver, target, &state, None, cfg.max_bisection, limit, false, work) else {
            return false;
        };
        if br.c_hi == target {
            consider(br.f_hi, incumbent);
            continue;
        }
        if dual_bound(model, target, &br) >= incumbent.0 as i128 {
            continue;
        }
        let gap: Vec<usize> = (0..n).filter(|&k| br.f_hi[k] && !br.f_lo[k]).collect();
        let mut greedy = br.f_hi.clone();
        let key = |k: usize| {
            let (i, j) = g.coords(k);
            ((model.potential[k] - br.hi).abs(), j, i)
        };
        greedy_toggle(model, nbrs, &mut greedy, &gap, br.c_hi - target, &key);
        consider(greedy, incumbent);
        if dual_bound(model, target, &br) >= incumbent.0 as i128 {
            continue;
        }
        let x = branch_cell(&br);
        for s in [CellState::Out, CellState::In] {
            let mut st = state.clone();
            st[x] = s;
            stack.push(st);
        }
    }
    true
}

/// Energy change of toggling cell `k` in `member`.
#[inline]
fn toggle_delta(model: &EnergyModel, nbrs: &[[(usize, i64); 16]], member: &[bool], k: usize) -> i64 {
    let me = member[k];
    let mut d = if me { -model.potential[k] } else { model.potential[k] };
    for &(y, w) in &nbrs[k] {
        d += if member[y] == me { w } else { -w };
    }
    d
}

/// Toggles `count` cells of `candidates` (all currently of one phase) one at a time, each
/// time choosing the cheapest toggle, ties by `order_key`.
fn greedy_toggle(
    model: &EnergyModel,
    nbrs: &[[(usize, i64); 16]],
    member: &mut [bool],
    candidates: &[usize],
    count: usize,
    order_key: &dyn Fn(usize) -> (i64, usize, usize),
) {
    if count == 0 {
        return;
    }
    let phase = member[candidates[0]];
    let mut is_cand = vec![false; member.len()];
    let mut version = vec![0u32; member.len()];
    let mut heap = BinaryHeap::new();
    for &k in candidates {
        is_cand[k] = true;
        heap.push(Reverse((toggle_delta(model, nbrs, member, k), order_key(k), 0u32, k)));
    }
    let mut done = 0;
    while done < count {
        let Reverse((_, _, ver, k)) = heap.pop().expect("enough candidates");
        if member[k] != phase || ver != version[k] {
            continue;
        }
        member[k] = !phase;
        done += 1;
        for &(y, _) in &nbrs[k] {
            if is_cand[y] && member[y] == phase {
                version[y] += 1;
                heap.push(Reverse((toggle_delta(model, nbrs, member, y), order_key(y), version[y], y)));
            }
        }
    }
}

/// Best-improvement volume-preserving swaps (remove one cell, add one cell) restricted to
/// the band around the trimming region and the current interface.
fn polish_swaps(
    model: &EnergyModel,
    nbrs: &[[(usize, i64); 16]],
    member: &mut [bool],
    gap: &[usize],
    order_key: &dyn Fn(usize) -> (i64, usize, usize),
) {
    const TOP: usize = 24;
    let n = member.len();
    let mut in_band = vec![false; n];
    for &k in gap {
        in_band[k] = true;
    }
    for k in 0..n {
        if nbrs[k].iter().any(|&(y, _)| member[y] != member[k]) {
            in_band[k] = true;
        }
    }
    let band: Vec<usize> = (0..n).filter(|&k| in_band[k]).collect();
    let max_iter = 4 * gap.len() + 64;
    for _ in 0..max_iter {
        let mut rem: Vec<(i64, (i64, usize, usize), usize)> = Vec::new();
        let mut add: Vec<(i64, (i64, usize, usize), usize)> = Vec::new();
        for &k in &band {
            let d = toggle_delta(model, nbrs, member, k);
            if member[k] {
                rem.push((d, order_key(k), k));
            } else {
                add.push((d, order_key(k), k));
            }
        }
        if rem.is_empty() || add.is_empty() {
            return;
        }
        let top = |v: &mut Vec<(i64, (i64, usize, usize), usize)>| {
            let t = TOP.min(v.len());
            v.select_nth_unstable(t - 1);
            v.truncate(t);
            v.sort_unstable();
        };
        top(&mut rem);
        top(&mut add);
        let mut best: Option<(i64, usize, usize)> = None;
        for &(dr, _, x) in &rem {
            for &(da, _, y) in &add {
                let coupling: i64 = nbrs[x].iter().filter(|&&(z, _)| z == y).map(|&(_, w)| w).sum();
                let total = dr + da + 2 * coupling;
                if total < 0 && best.map_or(true, |(b, _, _)| total < b) {
                    best = Some((total, x, y));
                }
            }
        }
        match best {
            Some((_, x, y)) => {
                member[x] = false;
                member[y] = true;
            }
            None => return,
        }
    }
}

/// One volume-preserving minimizing-movement step from `prev`.
///
/// The returned set has exactly `prev.count()` cells and never has higher energy than
/// `prev` itself; if trimming would produce a worse set, `prev` is returned unchanged.
pub fn step(prev: &TorusSet, cfg: &StepConfig) -> Result<(TorusSet, StepReport)> {
    step_inner(prev, cfg, None)
}

/// [`step`] that reuses residual flows across calls. Results are identical to [`step`];
/// consecutive steps of one flow on one grid run faster.
pub fn step_warm(prev: &TorusSet, cfg: &StepConfig, warm: &mut WarmStart) -> Result<(TorusSet, StepReport)> {
    step_inner(prev, cfg, Some(warm))
}

fn step_inner(prev: &TorusSet, cfg: &StepConfig, warm: Option<&mut WarmStart>) -> Result<(TorusSet, StepReport)> {
    prev.require_proper()?;
    cfg.validate()?;
    let (model, _) = EnergyModel::for_step(prev, cfg.h)?;
    let target = prev.count();
    let cut = match warm {
        Some(warm) => constrained_cut_warm(&model, target, cfg, warm)?,
        None => constrained_cut(&model, target, cfg)?,
    };
    let e_prev = model.energy(prev, 0);
    let e_new = model.energy(&cut.set, 0);
    let (set, trimmed) = if e_new > e_prev { (prev.clone(), 0) } else { (cut.set, cut.cells_trimmed) };
    let baseline: i64 = prev.iter_occupied().map(|k| model.potential[k]).sum();
    let energy_units = model.energy(&set, 0) - baseline;
    let perimeter_units = model.stencil.perimeter_units(&set);
    let el_residual = if cfg.residual {
        euler_lagrange_residual(&set, prev, cfg.h).ok()
    } else {
        None
    };
    let report = StepReport {
        lambda_star: cut.lambda_units as f64 / UNIT,
        cut_energy: energy_units as f64 / model.scale(),
        perimeter: perimeter_units as f64 / model.scale(),
        dissipation: (energy_units - perimeter_units) as f64 / model.scale() * cfg.h,
        cells_trimmed: trimmed,
        cells_changed: set.symmetric_difference_count(prev)?,
        solves: cut.solves,
        exact_cut: cut.exact_cut,
        proven_optimal: cut.proven_optimal,
        el_residual,
    };
    Ok((set, report))
}
