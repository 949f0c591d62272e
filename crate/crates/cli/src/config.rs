//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vpflow::atw::TieRule;
use vpflow::deform::CurveSet;
use vpflow::{random_set, rasterize, ClassifierConfig, PeriodicGrid, ShapeKind, ShapeSpec, StepConfig, TorusSet};

use crate::error::{setup, CliError, CliResult};

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("grid", "128", "cells per side, or NXxNY"),
    ("h", "0.005", "time step"),
    ("n_steps", "200", "maximum number of steps; runs stop early once stationary"),
    ("seed", "0", "seed for perturbations, random sets and deformation samples"),
    ("shape", "disc", "initial shape: disc, discs, lamella or random"),
    ("complement", "false", "use the complement of the initial shape"),
    ("disc.center", "0.5,0.5", "center of the disc"),
    ("disc.radius", "0.25", "radius of the disc"),
    ("discs", "0.25,0.25,0.15;0.75,0.75,0.15", "union of discs as x,y,r;x,y,r;..."),
    ("lamella.slope", "0,1", "integer normal p,q of the lamella; 0,1 is a horizontal band"),
    ("lamella.offset", "0.25", "lower edge of the band along the normal"),
    ("lamella.width", "0.3", "width of the band along the normal"),
    ("random.fill", "0.5", "volume fraction of a random initial set"),
    ("perturb.delta", "0", "Hausdorff size of a random perturbation of the initial set; 0 disables"),
    ("reference", "none", "none, or shape to track the distance to the unperturbed initial shape"),
    ("output_dir", "vpflow-out", "directory for snapshots, traces and metadata"),
    ("snapshot_stride", "0", "write a snapshot every this many steps; 0 keeps only the first and last"),
    ("step.max_bisection", "64", "cap on multiplier bisection probes"),
    ("step.exact_budget", "65536", "work allowance of the exact constrained search; 0 disables it"),
    ("step.tie_rule", "row_major", "trim tie order: row_major or column_major"),
    ("step.residual", "false", "record the Euler-Lagrange residual of each step"),
    ("classify.iso_threshold", "0.9", "minimum 4piA/P^2 for a component to count as a disc"),
    ("classify.slope_tolerance", "auto", "largest lamella orientation mismatch in radians; auto is 2hx"),
    ("harness.delta", "0.05", "C1 bound and admissibility tolerance of deformations"),
    ("harness.samples", "200", "number of random deformations"),
    ("harness.nodes", "256", "samples per boundary component (power of two, at least 64)"),
    ("harness.max_mode", "8", "highest Fourier mode of a random deformation"),
    ("harness.ratio_factor", "4", "allowed multiple of the linearized Alexandrov ratio"),
    ("counterexample.n", "5", "dyadic level of the balls"),
    ("counterexample.s", "2", "lamella height exponent: the band is y < 2^-s"),
    ("counterexample.radius_rule", "0.1", "ball radius in units of 2^-n"),
];

#[derive(Clone, Debug)]
pub struct Config {
    values: BTreeMap<&'static str, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|&(k, v, _)| (k, v.to_string())).collect() }
    }
}

impl Config {
    /// Defaults, then `file`, then each `key=value` override.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            for (n, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
                cfg.set(k.trim(), v.trim())?;
            }
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let k = KEYS
            .iter()
            .map(|&(k, _, _)| k)
            .find(|&k| k == key)
            .ok_or_else(|| CliError::Config(format!("unknown key {key:?}")))?;
        self.values.insert(k, value.to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key {key} missing from table"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T> {
        let v = self.raw(key);
        v.parse().map_err(|_| CliError::Config(format!("bad value {v:?} for key {key:?}")))
    }

    fn list(&self, key: &str) -> CliResult<Vec<f64>> {
        list(self.raw(key)).ok_or_else(|| CliError::Config(format!("bad value {:?} for key {key:?}", self.raw(key))))
    }

    fn pair(&self, key: &str) -> CliResult<(f64, f64)> {
        match self.list(key)?.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(CliError::Config(format!("key {key:?} needs two comma-separated numbers"))),
        }
    }

    /// Resolved configuration as `key=value` lines.
    pub fn dump(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn grid(&self) -> CliResult<PeriodicGrid> {
        let v = self.raw("grid");
        let (nx, ny) = match v.split_once('x') {
            Some((a, b)) => (a.trim().parse(), b.trim().parse()),
            None => (v.parse(), v.parse()),
        };
        match (nx, ny) {
            (Ok(nx), Ok(ny)) => PeriodicGrid::new(nx, ny).map_err(setup),
            _ => Err(CliError::Config(format!("bad value {v:?} for key \"grid\""))),
        }
    }

    pub fn step_config(&self) -> CliResult<StepConfig> {
        let mut cfg = StepConfig::new(self.get("h")?).map_err(setup)?;
        cfg.max_bisection = self.get("step.max_bisection")?;
        cfg.exact_budget = self.get("step.exact_budget")?;
        cfg.residual = self.get("step.residual")?;
        cfg.tie_rule = match self.raw("step.tie_rule") {
            "row_major" => TieRule::RowMajor,
            "column_major" => TieRule::ColumnMajor,
            v => return Err(CliError::Config(format!("bad value {v:?} for key \"step.tie_rule\""))),
        };
        cfg.validate().map_err(setup)?;
        Ok(cfg)
    }

    pub fn classifier(&self, grid: PeriodicGrid) -> CliResult<ClassifierConfig> {
        let mut c = ClassifierConfig::for_cell_size(grid.hx().max(grid.hy()));
        c.iso_threshold = self.get("classify.iso_threshold")?;
        if self.raw("classify.slope_tolerance") != "auto" {
            c.slope_tolerance = self.get("classify.slope_tolerance")?;
        }
        Ok(c)
    }

    fn slope(&self) -> CliResult<(i64, i64)> {
        let v = self.raw("lamella.slope");
        let parts: Vec<Option<i64>> = v.split(',').map(|s| s.trim().parse().ok()).collect();
        match parts.as_slice() {
            [Some(p), Some(q)] => Ok((*p, *q)),
            _ => Err(CliError::Config(format!("bad value {v:?} for key \"lamella.slope\""))),
        }
    }

    /// Geometric description of the initial shape; `None` for random sets.
    pub fn shape_spec(&self, grid: PeriodicGrid) -> CliResult<Option<ShapeSpec>> {
        let kind = match self.raw("shape") {
            "disc" => ShapeKind::Disc { center: self.pair("disc.center")?, radius: self.get("disc.radius")? },
            "discs" => {
                let mut discs = Vec::new();
                for part in self.raw("discs").split(';').filter(|p| !p.trim().is_empty()) {
                    match list(part).as_deref() {
                        Some([x, y, r]) => discs.push(((*x, *y), *r)),
                        _ => return Err(CliError::Config(format!("bad disc {part:?} in key \"discs\""))),
                    }
                }
                ShapeKind::UnionDiscs(discs)
            }
            "lamella" => ShapeKind::Lamella {
                slope: self.slope()?,
                offset: self.get("lamella.offset")?,
                width: self.get("lamella.width")?,
            },
            "random" => return Ok(None),
            v => return Err(CliError::Config(format!("bad value {v:?} for key \"shape\""))),
        };
        let spec = ShapeSpec::new(kind, grid).map_err(setup)?;
        Ok(Some(if self.get("complement")? { spec.complement() } else { spec }))
    }

    /// Unperturbed initial set.
    pub fn base_set(&self, grid: PeriodicGrid) -> CliResult<TorusSet> {
        match self.shape_spec(grid)? {
            Some(spec) => rasterize(&spec).map_err(setup),
            None => {
                let s = random_set(grid, self.get("random.fill")?, self.get("seed")?).map_err(setup)?;
                Ok(if self.get("complement")? { s.complement() } else { s })
            }
        }
    }

    /// Continuous base curve of the deformation harness.
    pub fn curve_set(&self) -> CliResult<CurveSet> {
        match self.raw("shape") {
            "disc" => CurveSet::disc(self.pair("disc.center")?, self.get("disc.radius")?).map_err(setup),
            "lamella" => {
                CurveSet::lamella(self.slope()?, self.get("lamella.offset")?, self.get("lamella.width")?).map_err(setup)
            }
            v => Err(CliError::Config(format!("deformations need shape = disc or lamella, got {v:?}"))),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("output_dir"))
    }
}

fn list(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

/// Default configuration as a commented file.
pub fn defaults_file() -> String {
    KEYS.iter().map(|(k, v, doc)| format!("# {doc}\n{k} = {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_and_unknown_keys_fail() {
        let cfg = Config::load(None, &["h=0.01".into(), "h = 0.02".into()]).unwrap();
        assert_eq!(cfg.get::<f64>("h").unwrap(), 0.02);
        let err = Config::load(None, &["hh=1".into()]).unwrap_err();
        assert!(err.to_string().contains("\"hh\""));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn every_key_parses_at_its_default() {
        let cfg = Config::default();
        let g = cfg.grid().unwrap();
        cfg.step_config().unwrap();
        cfg.classifier(g).unwrap();
        cfg.base_set(g).unwrap();
        cfg.curve_set().unwrap();
        for shape in ["discs", "lamella", "random"] {
            let mut c = cfg.clone();
            c.set("shape", shape).unwrap();
            assert!(c.base_set(g).unwrap().is_proper());
        }
    }
}
