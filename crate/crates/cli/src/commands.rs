use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpflow::deform::{
    admissibility, alexandrov_ratio, coercivity_constant, h1_norm, linearized_ratio, random_admissible,
    second_variation, CurveSet, NormalDeformation,
};
use vpflow::io::{read_pbm, write_pbm};
use vpflow::{
    classify_with, counterexample_set, fit_rate, perimeter, perturb, run_with, step, LimitVariant, TorusSet,
};

use crate::config::Config;
use crate::error::{io, setup, CliError, CliResult};

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io(path, e))
}

fn save_pbm(set: &TorusSet, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    write_pbm(set, &mut w)?;
    w.flush().map_err(|e| io(path, e))
}

fn output_dir(cfg: &Config) -> CliResult<std::path::PathBuf> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    Ok(dir)
}

pub fn run(cfg: &Config) -> CliResult<()> {
    let grid = cfg.grid()?;
    let step_cfg = cfg.step_config()?;
    let n_steps: usize = cfg.get("n_steps")?;
    let seed: u64 = cfg.get("seed")?;
    let stride: usize = cfg.get("snapshot_stride")?;
    let base = cfg.base_set(grid)?;
    let delta: f64 = cfg.get("perturb.delta")?;
    let e0 = if delta > 0.0 { perturb(&base, delta, seed).map_err(setup)? } else { base.clone() };
    let reference = match cfg.raw("reference") {
        "none" => None,
        "shape" => Some(&base),
        v => return Err(CliError::Config(format!("bad value {v:?} for key \"reference\""))),
    };
    let dir = output_dir(cfg)?;
    let snap = |n: usize, set: &TorusSet| save_pbm(set, &dir.join(format!("step_{n:06}.pbm")));
    snap(0, &e0)?;
    let mut io_err = None;
    let result = run_with(&e0, &step_cfg, n_steps, reference, |n, set, _| {
        if stride > 0 && n % stride == 0 {
            if let Err(e) = snap(n, set) {
                io_err = Some(e);
                return Err(vpflow::Error::Internal("snapshot write failed".into()));
            }
        }
        Ok(())
    });
    if let Some(e) = io_err {
        return Err(e);
    }
    let (mut trace, last) = result?;
    trace.seed = Some(seed);
    let steps = trace.rows.len();
    if stride == 0 || steps % stride != 0 {
        snap(steps, &last)?;
    }
    let path = dir.join("trace.csv");
    let mut w = create(&path)?;
    trace.write_csv(&mut w)?;
    w.flush().map_err(|e| io(&path, e))?;
    let path = dir.join("run.meta");
    let mut w = create(&path)?;
    trace.write_meta(&mut w)?;
    write!(w, "{}", cfg.dump().lines().map(|l| format!("config.{l}\n")).collect::<String>()).map_err(|e| io(&path, e))?;
    w.flush().map_err(|e| io(&path, e))?;
    println!(
        "steps={steps} p0={:.6} final_perimeter={:.6} volume={} stationary={}",
        trace.p0,
        trace.final_perimeter(),
        last.count(),
        vpflow::stationarity(&trace)
    );
    Ok(())
}

pub fn classify(cfg: &Config, snapshot: &Path, p_inf: Option<f64>, m: Option<f64>) -> CliResult<()> {
    let file = File::open(snapshot).map_err(|e| io(snapshot, e))?;
    let set = read_pbm(BufReader::new(file)).map_err(|e| CliError::Input(format!("{}: {e}", snapshot.display())))?;
    if !set.is_proper() {
        return Err(CliError::Input(format!("{}: set is empty or full", snapshot.display())));
    }
    let p_inf = p_inf.unwrap_or_else(|| perimeter(&set));
    let m = m.unwrap_or_else(|| set.volume());
    let class = classify_with(&set, p_inf, m, &cfg.classifier(set.grid())?).map_err(setup)?;
    println!("{}", class.csv_line());
    for w in &class.warnings {
        eprintln!("warning: {w}");
    }
    if class.variant == LimitVariant::Unclassified {
        return Err(CliError::Unclassified);
    }
    Ok(())
}

/// Deformation that only translates the base set; it must be rejected as inadmissible.
fn translation_mode(base: &CurveSet, m: usize, amp: f64) -> CliResult<NormalDeformation> {
    let l = base.component_length();
    let d = match base {
        CurveSet::Disc { .. } => {
            NormalDeformation::from_fn(base.clone(), m, |_, s| amp * (std::f64::consts::TAU * s / l).cos())
        }
        CurveSet::Lamella { .. } => NormalDeformation::from_fn(base.clone(), m, |c, _| if c == 0 { amp } else { -amp }),
    };
    d.map_err(setup)
}

pub fn alexandrov(cfg: &Config) -> CliResult<()> {
    let base = cfg.curve_set()?;
    let delta: f64 = cfg.get("harness.delta")?;
    let samples: usize = cfg.get("harness.samples")?;
    let nodes: usize = cfg.get("harness.nodes")?;
    let max_mode: usize = cfg.get("harness.max_mode")?;
    let factor: f64 = cfg.get("harness.ratio_factor")?;
    let seed: u64 = cfg.get("seed")?;
    if !(delta > 0.0 && delta < base.embedding_bound()) {
        return Err(CliError::Config(format!(
            "harness.delta = {delta} must lie in (0, {})",
            base.embedding_bound()
        )));
    }
    let k = match base {
        CurveSet::Disc { .. } => 2,
        CurveSet::Lamella { .. } => 1,
    };
    let prediction = linearized_ratio(&base, k);
    let m0 = coercivity_constant(&base);
    let dir = output_dir(cfg)?;
    let path = dir.join("alexandrov.csv");
    let mut w = create(&path)?;
    let werr = |e| io(&path, e);
    writeln!(w, "# schema=1").map_err(werr)?;
    writeln!(w, "sample,seed,c1,h1,deficit,ratio,prediction,second_variation,coercivity_bound,admissible,pass")
        .map_err(werr)?;

    let mut failing = Vec::new();
    let mut rejected = 0;
    let mut max_ratio: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    let mut evaluate = |label: String, s: Option<u64>, d: &NormalDeformation, w: &mut BufWriter<File>| -> CliResult<()> {
        let adm = admissibility(d, delta);
        let a = alexandrov_ratio(d);
        let h1 = h1_norm(d);
        let q = second_variation(&base, d.samples())?;
        let bound = m0 / 8.0 * h1 * h1;
        let pass = if adm.admissible() {
            max_ratio = max_ratio.max(a.ratio);
            min_margin = min_margin.min(q - bound);
            let ok = !a.degenerate && a.ratio <= factor * prediction && q >= bound;
            if !ok {
                failing.push(s.map_or(label.clone(), |s| s.to_string()));
            }
            ok
        } else {
            rejected += 1;
            true
        };
        writeln!(
            w,
            "{label},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
            s.map_or(String::new(), |s| s.to_string()),
            adm.c1,
            h1,
            a.deficit,
            a.ratio,
            prediction,
            q,
            bound,
            adm.admissible(),
            pass
        )
        .map_err(werr)
    };

    for i in 0..samples {
        let s = seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let c1 = delta * rng.gen_range(0.2..=1.0);
        let d = random_admissible(&base, nodes, max_mode, c1, &mut rng).map_err(setup)?;
        evaluate(i.to_string(), Some(s), &d, &mut w)?;
    }
    // A pure translation has zero curvature deficit; the admissibility check must catch it.
    let t = translation_mode(&base, nodes, delta / 4.0)?;
    evaluate("translation".into(), None, &t, &mut w)?;
    w.flush().map_err(werr)?;
    let admitted = samples + 1 - rejected;
    println!(
        "admitted={admitted} rejected={rejected} max_ratio={max_ratio:.6} prediction={prediction:.6} m0={m0:.6} min_coercivity_margin={min_margin:.3e} failures={}",
        failing.len()
    );
    if !failing.is_empty() {
        return Err(CliError::Alexandrov { count: failing.len(), seeds: failing.join(",") });
    }
    Ok(())
}

pub fn counterexample(cfg: &Config) -> CliResult<()> {
    let grid = cfg.grid()?;
    let step_cfg = cfg.step_config()?;
    let ce = counterexample_set(grid, cfg.get("counterexample.n")?, cfg.get("counterexample.s")?, cfg.get("counterexample.radius_rule")?)
        .map_err(setup)?;
    let (after, _) = step(&ce.set, &step_cfg)?;
    let (clean, _) = step(&ce.lamella, &step_cfg)?;
    let cell = grid.cell_area();
    let before_gap = ce.set.symmetric_difference_count(&ce.lamella)? as f64 * cell;
    let escape = after.symmetric_difference_count(&ce.lamella)? as f64 * cell;
    let perimeter_gap = perimeter(&ce.set) - perimeter(&ce.lamella);
    let clean_changed = clean.symmetric_difference_count(&ce.lamella)?;
    let dir = output_dir(cfg)?;
    save_pbm(&ce.set, &dir.join("counterexample_before.pbm"))?;
    save_pbm(&after, &dir.join("counterexample_after.pbm"))?;
    let path = dir.join("counterexample.csv");
    let mut w = create(&path)?;
    let werr = |e| io(&path, e);
    writeln!(w, "# schema=1").map_err(werr)?;
    writeln!(w, "ball_volume,l1_gap_before,perimeter_gap,l1_gap_after,escape_ratio,clean_cells_changed,radius_out,radius_in")
        .map_err(werr)?;
    let line = format!(
        "{:?},{:?},{:?},{:?},{:?},{},{:?},{:?}",
        ce.ball_volume,
        before_gap,
        perimeter_gap,
        escape,
        escape / ce.ball_volume,
        clean_changed,
        ce.radius_out,
        ce.radius_in
    );
    writeln!(w, "{line}").map_err(werr)?;
    w.flush().map_err(werr)?;
    println!(
        "ball_volume={:.6e} l1_gap_before={before_gap:.6e} perimeter_gap={perimeter_gap:.6e} l1_gap_after={escape:.6e} escape_ratio={:.3} clean_cells_changed={clean_changed}",
        ce.ball_volume,
        escape / ce.ball_volume
    );
    Ok(())
}

pub fn rate(trace: &Path, column: &str, tail: f64) -> CliResult<()> {
    let text = fs::read_to_string(trace).map_err(|e| io(trace, e))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| CliError::Input(format!("{}: no header", trace.display())))?;
    let col = header
        .split(',')
        .position(|h| h.trim() == column)
        .ok_or_else(|| CliError::Input(format!("{}: no column {column:?}", trace.display())))?;
    let mut series = Vec::new();
    for (n, line) in lines.enumerate() {
        let v = line.split(',').nth(col).map(str::trim).unwrap_or("");
        series.push(if v.is_empty() {
            f64::NAN
        } else {
            v.parse().map_err(|_| CliError::Input(format!("{}: bad value {v:?} in row {}", trace.display(), n + 1)))?
        });
    }
    let fit = fit_rate(&series, tail)?;
    println!("b={:?} r2={:?} points={}", fit.b, fit.r2, fit.points);
    Ok(())
}
