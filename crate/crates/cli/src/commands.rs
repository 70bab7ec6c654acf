use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pressure_lab_core::cohomology::build_g;
use pressure_lab_core::combinatorics::{tec_exhaustive, tec_random};
use pressure_lab_core::keller::{decay_correlation, p_variation, var_alpha1, GridMeasure, P_VARIATION_LIMIT};
use pressure_lab_core::pressure::collocation::CollocationGrid;
use pressure_lab_core::pressure::stats::theta_stats;
use pressure_lab_core::pressure::{
    detect_phase_transition, hyperbolicity_check, leading_spectrum, pressure_curve, CurveConfig, PressureCurve,
};
use pressure_lab_core::{Error, IntervalMap, UPotential};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{MapSpec, PotentialSpec, RunConfig, TGrid};
use crate::report::{curve_svg, write_curve_csv, write_tec_csv};
use crate::{AnalyzeArgs, Command, CommonArgs, CurveArgs, EngineArgs, KellerArgs, TecArgs};

const DEFAULT_CURVE_GRID: &str = "-3:-0.05:60";
const DEFAULT_ANALYZE_GRID: &str = "-2:-0.5:2";

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
}

fn resolve(common: &CommonArgs, engine: Option<&EngineArgs>, t: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &common.map {
        cfg.map = Some(MapSpec::Named { name: m.clone() });
    }
    if let Some(p) = &common.potential {
        cfg.potential = Some(PotentialSpec::from_flag(p)?);
    }
    if let Some(s) = common.seed {
        cfg.engine.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.out = Some(o.clone());
    }
    if let Some(m) = &common.manifest {
        cfg.output.manifest = Some(m.clone());
    }
    if let Some(e) = engine {
        if let Some(d) = e.depth {
            cfg.engine.depth = d;
        }
        if let Some(n) = e.collocation_size {
            cfg.engine.collocation_size = n;
        }
        if let Some(p) = e.max_period {
            cfg.engine.max_period = p;
        }
        if e.base.is_some() {
            cfg.engine.base_point = e.base;
        }
    }
    if let Some(t) = t {
        cfg.t_grid = Some(TGrid::parse(t)?);
    }
    if cfg.potential.is_none() {
        cfg.potential = Some(PotentialSpec::Geometric);
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn to_json(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn manifest_value(command: &str, cfg: &RunConfig) -> Result<Value> {
    Ok(serde_json::to_value(Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
    })?)
}

/// Writes the manifest next to a file output, or to the explicit manifest path.
fn write_side_manifest(command: &str, cfg: &RunConfig) -> Result<()> {
    let path: Option<PathBuf> = cfg.output.manifest.clone().or_else(|| {
        cfg.output.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(p) = path {
        emit(Some(&p), &to_json(&manifest_value(command, cfg)?)?)?;
    }
    Ok(())
}

fn curve_config(cfg: &RunConfig) -> CurveConfig {
    CurveConfig {
        collocation_size: cfg.engine.collocation_size,
        tree_depth: cfg.engine.depth,
        base_point: cfg.engine.base_point,
        max_period: cfg.engine.max_period,
        seed: cfg.engine.seed,
    }
}

fn key(x: f64) -> String {
    format!("{x}")
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Analyze(a) => analyze(a),
        Command::Cohomology(c) => cohomology(c),
        Command::PressureCurve(c) => curve_command(c),
        Command::TecFuzz(t) => tec_fuzz(t),
        Command::Keller(k) => keller(k),
        Command::Transition(c) => transition(c),
    }
}

fn setup(cfg: &RunConfig) -> Result<(IntervalMap, UPotential)> {
    let map = cfg.map()?;
    let u = cfg.potential(&map)?;
    Ok((map, u))
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let cfg = resolve(&args.common, Some(&args.engine), Some(args.t.as_deref().unwrap_or(DEFAULT_ANALYZE_GRID)))?;
    let (map, u) = setup(&cfg)?;
    let stats = theta_stats(&map, &u, cfg.engine.max_period)?;
    let cohomology = match build_g(&map, &u) {
        Ok(d) => json!({"exceptional": d.exceptional, "sigma_max": d.sigma_max, "lambda_G": d.lambda_g}),
        Err(e) => json!({"error": e.to_string()}),
    };
    let ts = cfg.t_grid.expect("resolved").values();
    let curve = pressure_curve(&map, &u, &ts, &curve_config(&cfg))?;
    let mut estimates = Vec::new();
    for p in &curve.points {
        let h = hyperbolicity_check(&map, &u, p.t, cfg.engine.birkhoff_steps, cfg.engine.sup_grid, p.p)?;
        estimates.push(json!({
            "t": p.t,
            "p_tilde": p.p_tilde,
            "tree": p.tree_est,
            "tree_raw": p.tree_est_raw,
            "atomic": p.atomic,
            "p": p.p,
            "gap_ratio": p.gap_ratio,
            "sup_avg": h.sup_avg,
            "hyperbolic": h.hyperbolic,
        }));
    }
    let (lo, hi) = map.domain();
    let report = json!({
        "map": {
            "name": map.name().map(|n| n.to_string()),
            "domain": [lo, hi],
            "critical_points": map.critical_points(),
            "branches": map.monotone_branches(),
        },
        "theta": {
            "theta_max": stats.theta_max,
            "witness": stats.witness,
            "symbolic": stats.symbolic,
            "orbits": stats.orbits.len(),
        },
        "cohomology": cohomology,
        "estimates": estimates,
        "base_point": curve.base_point,
        "warnings": curve.warnings,
        "manifest": manifest_value("analyze", &cfg)?,
    });
    emit(cfg.output.out.as_deref(), &to_json(&report)?)
}

fn cohomology(args: &CommonArgs) -> Result<()> {
    let cfg = resolve(args, None, None)?;
    let (map, u) = setup(&cfg)?;
    let data = build_g(&map, &u)?;
    let alpha: serde_json::Map<String, Value> = data.alpha.iter().map(|&(x, a)| (key(x), json!(a))).collect();
    // b vanishes on the exceptional set itself; only the extra preimages are reported
    let b: serde_json::Map<String, Value> = data
        .b_coeffs
        .iter()
        .filter(|(x, _)| !data.sigma_max.contains(x))
        .map(|&(x, v)| (key(x), json!(v)))
        .collect();

    // report G as constant when it is flat to 1e-9 away from its special points
    let (lo, hi) = map.domain();
    let avoid: Vec<f64> = data
        .sigma_max
        .iter()
        .copied()
        .chain(data.b_coeffs.iter().map(|b| b.0))
        .chain(map.critical_points().iter().map(|c| c.location))
        .collect();
    let mut samples = Vec::new();
    for i in 0..=2000 {
        let x = lo + (hi - lo) * i as f64 / 2000.0;
        if avoid.iter().all(|p| (p - x).abs() >= 1e-3) {
            samples.push(data.g.eval(&map, x)?);
        }
    }
    let gmin = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let gmax = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g_constant = (gmax - gmin <= 1e-9).then_some(0.5 * (gmin + gmax));

    let report = json!({
        "sigma_max": data.sigma_max,
        "alpha": alpha,
        "b": b,
        "lambda_G": data.lambda_g,
        "exceptional": data.exceptional,
        "g_constant": g_constant,
        "warnings": data.warnings,
        "manifest": manifest_value("cohomology", &cfg)?,
    });
    emit(cfg.output.out.as_deref(), &to_json(&report)?)
}

fn curve_for(args: &CurveArgs) -> Result<(RunConfig, PressureCurve)> {
    let mut cfg = resolve(&args.common, Some(&args.engine), Some(args.t.as_deref().unwrap_or(DEFAULT_CURVE_GRID)))?;
    if let Some(w) = args.window {
        cfg.engine.window = w;
    }
    if let Some(s) = &args.svg {
        cfg.output.svg = Some(s.clone());
    }
    let (map, u) = setup(&cfg)?;
    let ts = cfg.t_grid.expect("resolved").values();
    let curve = pressure_curve(&map, &u, &ts, &curve_config(&cfg))?;
    for w in &curve.warnings {
        eprintln!("warning: {w}");
    }
    Ok((cfg, curve))
}

fn curve_command(args: &CurveArgs) -> Result<()> {
    let (cfg, curve) = curve_for(args)?;
    let mut buf = Vec::new();
    write_curve_csv(&curve, &mut buf)?;
    emit(cfg.output.out.as_deref(), &buf)?;
    if let Some(svg) = &cfg.output.svg {
        emit(Some(svg), curve_svg(&curve).as_bytes())?;
    }
    write_side_manifest("pressure-curve", &cfg)
}

fn transition(args: &CurveArgs) -> Result<()> {
    let (cfg, curve) = curve_for(args)?;
    let v = detect_phase_transition(&curve, cfg.engine.window)?;
    let verdict = match (v.criterion, v.theta_star) {
        (true, Some(s)) => format!("exceptional, theta_star = {s:.6} > {:.6}", v.slope_proxy),
        (false, _) if !v.exceptional => "non-exceptional, no transition expected".to_string(),
        (false, Some(s)) => format!("exceptional, theta_star = {s:.6} <= {:.6}", v.slope_proxy),
        _ => "exceptional, no periodic orbit in the exceptional set".to_string(),
    };
    let report = json!({
        "t_c": v.t_c,
        "window": v.window,
        "kinks": v.kinks,
        "criterion": v.criterion,
        "exceptional": v.exceptional,
        "theta_star": v.theta_star,
        "theta_max": curve.theta_max,
        "slope_proxy": v.slope_proxy,
        "verdict": verdict,
        "manifest": manifest_value("transition", &cfg)?,
    });
    emit(cfg.output.out.as_deref(), &to_json(&report)?)
}

fn tec_fuzz(args: &TecArgs) -> Result<()> {
    let rows = if args.exhaustive {
        tec_exhaustive(args.max_size)?
    } else {
        tec_random(args.max_size, args.samples, args.seed)?
    };
    let mut buf = Vec::new();
    write_tec_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)?;
    let instances: u64 = rows.iter().map(|r| r.instances).sum();
    let violations: u64 = rows.iter().map(|r| r.violations).sum();
    eprintln!("checked {instances} instances, {violations} violations (seed {})", args.seed);
    if violations > 0 {
        bail!(Error::Invariant(format!("{violations} counterexamples found")));
    }
    Ok(())
}

fn keller(args: &KellerArgs) -> Result<()> {
    let mut cfg = resolve(&args.common, None, None)?;
    if let Some(n) = args.collocation_size {
        cfg.engine.collocation_size = n;
    }
    let (map, u) = setup(&cfg)?;
    let grid = CollocationGrid::new(&map, cfg.engine.collocation_size)?;
    let matrix = grid.weights(&map, &u, args.t)?;
    let spectral = leading_spectrum(&matrix)?;
    spectral.require_gap()?;
    let mids: Vec<f64> = (0..grid.size()).map(|i| grid.midpoint(i)).collect();
    let reference = match args.reference.as_str() {
        "conformal" => GridMeasure::new(mids.clone(), spectral.left.clone())?,
        "uniform" => GridMeasure::new(mids.clone(), vec![1.0; mids.len()])?,
        other => bail!(Error::InvalidParameter(format!("unknown reference measure '{other}'"))),
    };
    // density of the equilibrium measure with respect to the reference
    let z: f64 = reference.integrate(&spectral.right);
    let density: Vec<f64> = spectral.right.iter().map(|v| v / z).collect();
    let norm = var_alpha1(&density, args.alpha, 1.0, &reference, None)?;
    let stride = mids.len().div_ceil(P_VARIATION_LIMIT);
    let samples: Vec<(f64, f64)> = mids.iter().zip(&density).step_by(stride).map(|(&x, &h)| (x, h)).collect();
    let pvar = p_variation(&samples, args.p)?;
    let decay = decay_correlation(&spectral, &matrix, &mids, &mids, args.n_max)?;
    let report = json!({
        "lambda": spectral.lambda,
        "pressure": spectral.lambda.ln(),
        "second_ratio": spectral.second_ratio,
        "reference": args.reference,
        "non_atomic": reference.is_non_atomic(),
        "keller_norm": norm,
        "p_variation": {"p": args.p, "value": pvar, "samples": samples.len()},
        "decay": {"rate": decay.rate, "vanished": decay.vanished, "series": decay.series},
        "manifest": manifest_value("keller", &cfg)?,
    });
    emit(cfg.output.out.as_deref(), &to_json(&report)?)
}
