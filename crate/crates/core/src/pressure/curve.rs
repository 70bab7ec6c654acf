//! Pressure curves `t -> P(t)` for `t < 0`, assembled as the larger of the hidden branch
//! (pressure of `-t G`) and the atomic line `-t theta_max`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::collocation::CollocationGrid;
use super::spectral::leading_spectrum;
use super::stats::{theta_star, theta_stats};
use super::tree::{check_base_point, choose_base_point, PreimageTree, MAX_DEPTH};
use crate::cohomology::build_g;
use crate::error::{Error, Result};
use crate::map::IntervalMap;
use crate::potential::{PotentialKind, UPotential};

pub const CONVEXITY_TOL: f64 = 1e-6;
pub const DEFAULT_WINDOW: f64 = 0.05;
pub const MIN_TRANSITION_POINTS: usize = 20;
/// Relative band in which the slope criterion is considered undecided.
pub const CRITERION_BAND: f64 = 0.1;
const MAX_TREE_LEAVES_LOG2: f64 = 22.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub collocation_size: usize,
    pub tree_depth: usize,
    /// Tree base point; drawn from `seed` when absent.
    pub base_point: Option<f64>,
    pub max_period: usize,
    pub seed: u64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            collocation_size: 1024,
            tree_depth: 16,
            base_point: None,
            max_period: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    /// Collocation pressure of `-t G`.
    pub p_tilde: f64,
    pub atomic: f64,
    pub p: f64,
    /// Tree pressure of `-t G`.
    pub tree_est: f64,
    /// Tree pressure of the untransformed `-t u`; carries no convergence guarantee.
    pub tree_est_raw: f64,
    pub engine_gap: f64,
    pub gap_ratio: f64,
    pub hidden_active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionVerdict {
    /// First branch switch, if any, found by linear interpolation.
    pub t_c: Option<f64>,
    pub window: f64,
    pub kinks: Vec<f64>,
    pub exceptional: bool,
    pub theta_star: Option<f64>,
    /// Estimate of the top exponent of measures avoiding the exceptional set.
    pub slope_proxy: f64,
    pub criterion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub points: Vec<CurvePoint>,
    pub theta_max: f64,
    pub theta_witness: Vec<f64>,
    pub theta_symbolic: bool,
    pub theta_star: Option<f64>,
    pub exceptional: bool,
    pub transition: Option<TransitionVerdict>,
    pub base_point: f64,
    pub tree_depth: usize,
    pub collocation_size: usize,
    pub convex_ok: bool,
    pub warnings: Vec<String>,
}

fn convex(ts: &[f64], ps: &[f64]) -> bool {
    let slopes: Vec<f64> = ts.windows(2).zip(ps.windows(2)).map(|(t, p)| (p[1] - p[0]) / (t[1] - t[0])).collect();
    slopes.windows(2).all(|s| s[1] - s[0] >= -CONVEXITY_TOL)
}

fn depth_cap(branches: usize) -> usize {
    if branches <= 1 {
        return MAX_DEPTH;
    }
    ((MAX_TREE_LEAVES_LOG2 / (branches as f64).log2()).floor() as usize).min(MAX_DEPTH)
}

/// Samples `P(t)` on `t_grid`, all entries negative.
pub fn pressure_curve(map: &IntervalMap, u: &UPotential, t_grid: &[f64], config: &CurveConfig) -> Result<PressureCurve> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t grid".into()));
    }
    if let Some(&t) = t_grid.iter().find(|t| !(**t < 0.0)) {
        return Err(Error::InvalidParameter(format!("pressure curves need t < 0, got {t}")));
    }
    if !u.lambda_set().is_empty() && u.kind() != PotentialKind::Geometric {
        return Err(Error::InvalidParameter(
            "the hidden branch is only built for the geometric potential or potentials without poles".into(),
        ));
    }
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let data = build_g(map, u)?;
    let g = &data.g;
    let mut warnings = data.warnings.clone();
    let stats = theta_stats(map, u, config.max_period)?;
    let star = theta_star(map, u, &data, config.max_period)?;
    if !stats.symbolic {
        warnings.push(format!("theta_max is a lower bound from periods up to {}", config.max_period));
    }

    let cap = depth_cap(map.monotone_branches().len());
    let depth = if config.tree_depth > cap {
        warnings.push(format!("tree depth reduced from {} to {cap} to bound the leaf count", config.tree_depth));
        cap
    } else {
        config.tree_depth
    };
    let base = match config.base_point {
        Some(b) => b,
        None => choose_base_point(map, u, config.seed)?,
    };
    check_base_point(map, g, base, depth)?;
    let tree_g = PreimageTree::build(map, g, base, depth)?;
    let tree_raw = PreimageTree::build(map, u, base, depth)?;
    let grid = CollocationGrid::new(map, config.collocation_size)?;

    let results: Vec<Result<CurvePoint>> = ts
        .par_iter()
        .map(|&t| {
            let spec = leading_spectrum(&grid.weights(map, g, t)?)?;
            let p_tilde = spec.lambda.ln();
            let tree_est = tree_g.estimate(t)?.value;
            let tree_est_raw = tree_raw.estimate(t)?.value;
            let atomic = -t * stats.theta_max;
            Ok(CurvePoint {
                t,
                p_tilde,
                atomic,
                p: p_tilde.max(atomic),
                tree_est,
                tree_est_raw,
                engine_gap: (p_tilde - tree_est).abs(),
                gap_ratio: spec.second_ratio,
                hidden_active: p_tilde >= atomic,
            })
        })
        .collect();
    let mut points = Vec::with_capacity(ts.len());
    let mut first_err = None;
    for (t, r) in ts.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(e) => {
                warnings.push(format!("t = {t}: {e}"));
                first_err.get_or_insert(e);
            }
        }
    }
    if points.is_empty() {
        return Err(first_err.expect("non-empty grid"));
    }

    let pt: Vec<f64> = points.iter().map(|p| p.t).collect();
    let pp: Vec<f64> = points.iter().map(|p| p.p).collect();
    let convex_ok = convex(&pt, &pp);
    if !convex_ok {
        warnings.push("sampled pressure is not convex within tolerance".into());
    }
    let mut curve = PressureCurve {
        points,
        theta_max: stats.theta_max,
        theta_witness: stats.witness,
        theta_symbolic: stats.symbolic,
        theta_star: star,
        exceptional: data.exceptional,
        transition: None,
        base_point: base,
        tree_depth: depth,
        collocation_size: grid.size(),
        convex_ok,
        warnings,
    };
    if curve.points.len() >= MIN_TRANSITION_POINTS {
        match detect_phase_transition(&curve, DEFAULT_WINDOW) {
            Ok(v) => curve.transition = Some(v),
            Err(e) => curve.warnings.push(format!("transition: {e}")),
        }
    }
    Ok(curve)
}

/// Locates switches between the hidden branch and the atomic line and checks them against
/// the exceptional-set criterion.
pub fn detect_phase_transition(curve: &PressureCurve, window: f64) -> Result<TransitionVerdict> {
    let pts = &curve.points;
    if pts.len() < MIN_TRANSITION_POINTS {
        return Err(Error::InvalidParameter(format!(
            "transition detection needs at least {MIN_TRANSITION_POINTS} points, got {}",
            pts.len()
        )));
    }
    let kinks: Vec<f64> = pts
        .windows(2)
        .filter_map(|w| {
            let d0 = w[0].p_tilde - w[0].atomic;
            let d1 = w[1].p_tilde - w[1].atomic;
            if (d0 < 0.0) != (d1 < 0.0) {
                Some(w[0].t + (w[1].t - w[0].t) * d0 / (d0 - d1))
            } else {
                None
            }
        })
        .collect();
    let slope_proxy = (pts[0].p_tilde - pts[1].p_tilde) / (pts[1].t - pts[0].t);
    let criterion = curve.exceptional && curve.theta_star.is_some_and(|s| s > slope_proxy);
    let undecided = curve
        .theta_star
        .is_some_and(|s| (s - slope_proxy).abs() <= CRITERION_BAND * slope_proxy.abs());
    if criterion != !kinks.is_empty() && !undecided {
        return Err(Error::InconsistentVerdict(format!(
            "criterion says {criterion} but {} branch switch(es) were found",
            kinks.len()
        )));
    }
    Ok(TransitionVerdict {
        t_c: kinks.first().copied(),
        window,
        kinks,
        exceptional: curve.exceptional,
        theta_star: curve.theta_star,
        slope_proxy,
        criterion,
    })
}

/// Counts kinks in a sampled curve from its second divided differences.
///
/// Differences above `10 * median + 0.5` are flagged and each run of adjacent flags counts
/// once. A smooth curve sampled finely produces no flags.
pub fn count_kinks(ts: &[f64], ps: &[f64]) -> usize {
    if ts.len() < 3 {
        return 0;
    }
    let d2: Vec<f64> = (1..ts.len() - 1)
        .map(|i| {
            let l = (ps[i] - ps[i - 1]) / (ts[i] - ts[i - 1]);
            let r = (ps[i + 1] - ps[i]) / (ts[i + 1] - ts[i]);
            ((r - l) / (0.5 * (ts[i + 1] - ts[i - 1]))).abs()
        })
        .collect();
    let mut sorted = d2.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = 10.0 * sorted[sorted.len() / 2] + 0.5;
    let flags: Vec<bool> = d2.iter().map(|&v| v > threshold).collect();
    flags.iter().enumerate().filter(|&(i, &f)| f && (i == 0 || !flags[i - 1])).count()
}
