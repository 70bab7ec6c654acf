//! Numeric bridge from an interval map to its finite postcritical model, and the
//! coboundary transform that removes log singularities attached to exceptional sets.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{exceptional_sets, FiniteDynamics, SearchPath};
use crate::error::{Error, Result};
use crate::map::{IntervalMap, NamedMap};
use crate::potential::{PotentialKind, SingularTerm, UPotential, COEFF_EPS};
use crate::pressure::collocation::CollocationGrid;
use crate::pressure::spectral::leading_spectrum;

/// Two orbit points closer than this count as a revisit.
pub const REVISIT_TOL: f64 = 1e-9;
/// A detected cycle must re-close under further iteration within this distance.
pub const RECLOSE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitVerdict {
    Preperiodic { preperiod: usize, period: usize },
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostcriticalModel {
    pub dynamics: FiniteDynamics,
    /// Real coordinate of each node.
    pub embedding: Vec<f64>,
    /// Steps until the node lands on a cycle.
    pub preperiod: Vec<usize>,
    /// Cycle index of periodic nodes.
    pub cycle_id: Vec<Option<usize>>,
    /// Nodes of the singular set that made it into the model.
    pub lambda_nodes: Vec<usize>,
    /// One verdict per point of the singular set of the potential.
    pub verdicts: Vec<(f64, OrbitVerdict)>,
    pub tolerance: f64,
    /// True when the model came from the registry instead of numeric iteration.
    pub exact: bool,
    pub warnings: Vec<String>,
}

impl PostcriticalModel {
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let tol = self.tolerance.max(1e-12);
        self.embedding.iter().position(|&e| (e - x).abs() <= tol)
    }
}

fn exact_model(which: NamedMap) -> Option<(Vec<f64>, Vec<usize>, Vec<usize>, Vec<bool>)> {
    match which {
        NamedMap::Chebyshev2 => Some((vec![0.0, -1.0, 1.0], vec![1, 2, 2], vec![0], vec![true, false, false])),
        NamedMap::Chebyshev3 => Some((
            vec![-0.5, 0.5, -1.0, 1.0],
            vec![3, 2, 2, 3],
            vec![0, 1],
            vec![true, true, false, false],
        )),
        NamedMap::Ulam => Some((vec![0.5, 1.0, 0.0], vec![1, 2, 2], vec![0], vec![true, false, false])),
        _ => None,
    }
}

fn critical_orbit(map: &IntervalMap, c: f64, max_iter: usize) -> Result<(Vec<f64>, OrbitVerdict)> {
    let mut orbit = vec![c];
    let mut x = c;
    for _ in 0..max_iter {
        x = map.eval(x)?;
        if let Some(j) = orbit.iter().position(|&o| (o - x).abs() <= REVISIT_TOL) {
            let period = orbit.len() - j;
            // the implied cycle has to survive more iteration
            let mut y = x;
            for _ in 0..period {
                y = map.eval(y)?;
            }
            if (y - x).abs() <= RECLOSE_TOL && (y - orbit[j]).abs() <= RECLOSE_TOL {
                return Ok((orbit, OrbitVerdict::Preperiodic { preperiod: j, period }));
            }
        }
        orbit.push(x);
    }
    Ok((orbit, OrbitVerdict::Undecided))
}

/// Finite model built from the forward orbits of the singular set of `u`.
pub fn postcritical_model(map: &IntervalMap, u: &UPotential, max_iter: usize, tol: f64) -> Result<PostcriticalModel> {
    if !map.is_polynomial() {
        return Err(Error::ClassA("postcritical models need smooth critical points".into()));
    }
    if max_iter == 0 || !(tol > 0.0) {
        return Err(Error::InvalidParameter("max_iter and tol must be positive".into()));
    }
    let lambda = u.lambda_set();
    let mut warnings = Vec::new();

    if let (Some(which), PotentialKind::Geometric) = (map.name(), u.kind()) {
        if let Some((embedding, forward, lambda_nodes, external)) = exact_model(which) {
            let dynamics = FiniteDynamics::new(forward, &lambda_nodes, external)?;
            let verdicts = lambda_nodes
                .iter()
                .map(|&i| {
                    let (pre, per) = orbit_shape(&dynamics, i);
                    (embedding[i], OrbitVerdict::Preperiodic { preperiod: pre, period: per })
                })
                .collect();
            return Ok(finish(dynamics, embedding, lambda_nodes, verdicts, tol, true, warnings));
        }
    }

    let mut embedding: Vec<f64> = Vec::new();
    let mut forward_pts: Vec<f64> = Vec::new();
    let mut lambda_coords: Vec<f64> = Vec::new();
    let mut verdicts = Vec::new();
    for &c in &lambda {
        let (orbit, verdict) = critical_orbit(map, c, max_iter)?;
        verdicts.push((c, verdict));
        match verdict {
            OrbitVerdict::Undecided => warnings.push(format!(
                "orbit of singular point {c} did not revisit itself within {max_iter} steps; \
                 treated as not exceptional at this resolution"
            )),
            OrbitVerdict::Preperiodic { .. } => {
                lambda_coords.push(c);
                for &p in &orbit {
                    if !embedding.iter().any(|&e| (e - p).abs() <= tol) {
                        embedding.push(p);
                        forward_pts.push(map.eval(p)?);
                    }
                }
            }
        }
    }

    let index_of = |x: f64, emb: &[f64]| emb.iter().position(|&e| (e - x).abs() <= tol.max(REVISIT_TOL));
    let mut forward = Vec::with_capacity(embedding.len());
    for (i, &fp) in forward_pts.iter().enumerate() {
        match index_of(fp, &embedding) {
            Some(j) => forward.push(j),
            None => {
                return Err(Error::InternalInvariant(format!(
                    "image {fp} of node {} is not a node",
                    embedding[i]
                )))
            }
        }
    }
    let lambda_nodes: Vec<usize> = lambda_coords
        .iter()
        .filter_map(|&c| index_of(c, &embedding))
        .collect();

    let match_tol = 1e-6 * map.width();
    let mut external = vec![false; embedding.len()];
    for (k, &xi) in embedding.iter().enumerate() {
        for p in map.preimages(xi, 1e-12)? {
            let node = embedding.iter().position(|&e| (e - p).abs() <= match_tol);
            match node {
                Some(j) if forward[j] == k => {}
                Some(j) => warnings.push(format!(
                    "numeric preimage {p} of node {xi} matches node {} whose recorded image differs",
                    embedding[j]
                )),
                None => {
                    if lambda.iter().any(|&c| (c - p).abs() <= match_tol) {
                        warnings.push(format!(
                            "preimage {p} of node {xi} is an undecided singular point; not counted as external"
                        ));
                    } else {
                        external[k] = true;
                    }
                }
            }
        }
        // every in-model preimage must also be found numerically
        for (j, &fj) in forward.iter().enumerate() {
            if fj == k && !map.preimages(xi, 1e-12)?.iter().any(|&p| (p - embedding[j]).abs() <= match_tol) {
                warnings.push(format!("node {} maps to {xi} but was not found as its preimage", embedding[j]));
            }
        }
    }
    let dynamics = FiniteDynamics::new(forward, &lambda_nodes, external)?;
    Ok(finish(dynamics, embedding, lambda_nodes, verdicts, tol, false, warnings))
}

fn orbit_shape(fd: &FiniteDynamics, start: usize) -> (usize, usize) {
    let mut seen = vec![usize::MAX; fd.len()];
    let mut x = start;
    let mut step = 0;
    while seen[x] == usize::MAX {
        seen[x] = step;
        x = fd.forward()[x];
        step += 1;
    }
    (seen[x], step - seen[x])
}

fn finish(
    dynamics: FiniteDynamics,
    embedding: Vec<f64>,
    lambda_nodes: Vec<usize>,
    verdicts: Vec<(f64, OrbitVerdict)>,
    tolerance: f64,
    exact: bool,
    warnings: Vec<String>,
) -> PostcriticalModel {
    let n = dynamics.len();
    let mut preperiod = vec![0; n];
    let mut cycle_id = vec![None; n];
    let mut cycles = 0;
    for i in 0..n {
        let (pre, _) = orbit_shape(&dynamics, i);
        preperiod[i] = pre;
    }
    for i in 0..n {
        if preperiod[i] == 0 && cycle_id[i].is_none() {
            let mut x = i;
            loop {
                cycle_id[x] = Some(cycles);
                x = dynamics.forward()[x];
                if x == i {
                    break;
                }
            }
            cycles += 1;
        }
    }
    PostcriticalModel {
        dynamics,
        embedding,
        preperiod,
        cycle_id,
        lambda_nodes,
        verdicts,
        tolerance,
        exact,
        warnings,
    }
}

/// Coordinates of the maximal exceptional set, sorted, and the node ids behind them.
pub fn sigma_max_real(model: &PostcriticalModel) -> Result<(Vec<f64>, Vec<usize>)> {
    let e = exceptional_sets(&model.dynamics, &model.lambda_nodes, SearchPath::Fast)?;
    let mut pairs: Vec<(f64, usize)> = e.sigma_max.iter().map(|&i| (model.embedding[i], i)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

fn local_order(map: &IntervalMap, x: f64, tol: f64) -> u32 {
    map.critical_points()
        .iter()
        .find(|c| (c.location - x).abs() <= tol)
        .map_or(1, |c| c.local_order)
}

/// Coefficients `alpha` on the nodes of the maximal exceptional set (zero elsewhere).
pub fn alpha_coefficients(map: &IntervalMap, model: &PostcriticalModel, sigma_nodes: &[usize]) -> Result<Vec<f64>> {
    let fd = &model.dynamics;
    let n = fd.len();
    let tol = model.tolerance.max(1e-12);
    let in_sigma: Vec<bool> = (0..n).map(|i| sigma_nodes.contains(&i)).collect();
    let order: Vec<f64> = model.embedding.iter().map(|&x| local_order(map, x, tol) as f64).collect();
    let mut alpha = vec![0.0; n];
    if sigma_nodes.is_empty() {
        return Ok(alpha);
    }
    for &s in sigma_nodes {
        if !in_sigma[fd.forward()[s]] {
            return Err(Error::Recursion(format!("node {} leaves the exceptional set", model.embedding[s])));
        }
    }

    // best approach factor per cycle, over entry points outside the set
    let mut best: std::collections::BTreeMap<usize, f64> = Default::default();
    for xi in 0..n {
        if in_sigma[xi] || !in_sigma[fd.forward()[xi]] {
            continue;
        }
        let mut factor = 1.0;
        let mut x = xi;
        let mut steps = 0;
        while model.cycle_id[x].is_none() || model.preperiod[x] > 0 {
            factor /= order[x];
            x = fd.forward()[x];
            steps += 1;
            if steps > n {
                return Err(Error::Recursion("approach path does not reach a cycle".into()));
            }
        }
        let cid = model.cycle_id[x].expect("loop ends on a cycle");
        let e = best.entry(cid).or_insert(0.0);
        *e = e.max(factor);
    }

    let mut known = vec![false; n];
    for &s in sigma_nodes {
        if model.preperiod[s] == 0 {
            let cid = model.cycle_id[s].expect("periodic node has a cycle id");
            let hat = best.get(&cid).copied().ok_or_else(|| {
                Error::Recursion(format!(
                    "cycle through {} has no approach from outside the exceptional set",
                    model.embedding[s]
                ))
            })?;
            alpha[s] = hat - 1.0;
            known[s] = true;
        }
    }
    // preperiodic points, nearest to their cycle first
    let mut pending: Vec<usize> = sigma_nodes.iter().copied().filter(|&s| !known[s]).collect();
    pending.sort_by_key(|&s| model.preperiod[s]);
    for s in pending {
        let image = fd.forward()[s];
        if !known[image] {
            return Err(Error::Recursion(format!("image of {} resolved out of order", model.embedding[s])));
        }
        alpha[s] = (alpha[image] + 1.0) * order[s] - 1.0;
        known[s] = true;
    }
    Ok(alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyData {
    pub sigma_max: Vec<f64>,
    /// `(xi, alpha(xi))` for every point of the maximal exceptional set.
    pub alpha: Vec<(f64, f64)>,
    /// Terms of `h(x) = sum alpha log|x - xi|`.
    pub h_terms: Vec<(f64, f64)>,
    /// The transformed potential.
    pub g: UPotential,
    /// `(xi, b(xi))` on the preimage of the maximal exceptional set.
    pub b_coeffs: Vec<(f64, f64)>,
    /// Singular set of the transformed potential.
    pub lambda_g: Vec<f64>,
    pub exceptional: bool,
    pub model: Option<PostcriticalModel>,
    pub warnings: Vec<String>,
}

/// Default iteration budget for critical orbits.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Runs the full transform for the geometric potential of `map`, using the singular set of `u`
/// to decide exceptionality.
pub fn build_g(map: &IntervalMap, u: &UPotential) -> Result<CohomologyData> {
    if u.lambda_set().is_empty() {
        return Ok(CohomologyData {
            sigma_max: Vec::new(),
            alpha: Vec::new(),
            h_terms: Vec::new(),
            g: u.clone(),
            b_coeffs: Vec::new(),
            lambda_g: Vec::new(),
            exceptional: false,
            model: None,
            warnings: Vec::new(),
        });
    }
    let model = postcritical_model(map, u, DEFAULT_MAX_ITER, REVISIT_TOL)?;
    build_g_from_model(map, model)
}

pub fn build_g_from_model(map: &IntervalMap, model: PostcriticalModel) -> Result<CohomologyData> {
    let mut warnings = model.warnings.clone();
    let (sigma_max, sigma_nodes) = sigma_max_real(&model)?;
    let geometric = UPotential::geometric(map);
    if sigma_nodes.is_empty() {
        let lambda_g = geometric.lambda_set();
        return Ok(CohomologyData {
            sigma_max,
            alpha: Vec::new(),
            h_terms: Vec::new(),
            g: geometric,
            b_coeffs: Vec::new(),
            lambda_g,
            exceptional: false,
            model: Some(model),
            warnings,
        });
    }
    let alpha = alpha_coefficients(map, &model, &sigma_nodes)?;
    let fd = &model.dynamics;
    let tol = model.tolerance.max(1e-12);

    for &s in &sigma_nodes {
        let a = alpha[s];
        if !(a > -1.0 && a <= 1e-12) {
            return Err(Error::Invariant(format!(
                "alpha({}) = {a} outside (-1, 0]",
                model.embedding[s]
            )));
        }
    }

    let mut b_coeffs = Vec::new();
    let mut singular = Vec::new();
    for i in 0..fd.len() {
        if !sigma_nodes.contains(&fd.forward()[i]) {
            continue;
        }
        let l = local_order(map, model.embedding[i], tol) as f64;
        let b = (l - 1.0) + alpha[fd.forward()[i]] * l - alpha[i];
        let on_sigma = sigma_nodes.contains(&i);
        if on_sigma && b.abs() > COEFF_EPS {
            return Err(Error::Invariant(format!("b({}) = {b} is not zero on the exceptional set", model.embedding[i])));
        }
        if !on_sigma && b < -COEFF_EPS {
            return Err(Error::Invariant(format!("b({}) = {b} is negative", model.embedding[i])));
        }
        b_coeffs.push((model.embedding[i], b));
        singular.push(SingularTerm {
            center: model.embedding[i],
            coeff: b,
        });
    }
    for c in map.critical_points() {
        if !b_coeffs.iter().any(|&(x, _)| (x - c.location).abs() <= tol) {
            singular.push(SingularTerm {
                center: c.location,
                coeff: (c.local_order - 1) as f64,
            });
        }
    }
    b_coeffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    singular.sort_by(|a, b| a.center.total_cmp(&b.center));

    let alpha_pairs: Vec<(f64, f64)> = sigma_nodes.iter().map(|&s| (model.embedding[s], alpha[s])).collect();
    let g = UPotential::cohomologous(map, alpha_pairs.clone(), singular)?;
    let lambda_g = g.lambda_set();

    // the transform must leave nothing exceptional behind
    let lambda_g_nodes: Vec<usize> = lambda_g.iter().filter_map(|&c| model.node_of(c)).collect();
    let residual = exceptional_sets(fd, &lambda_g_nodes, SearchPath::Fast)?;
    if !residual.all_sets.is_empty() {
        return Err(Error::Invariant("transformed potential still has an exceptional set".into()));
    }
    if lambda_g.len() >= map.critical_points().len() {
        warnings.push("singular set of the transformed potential is not smaller than the critical set".into());
    }

    Ok(CohomologyData {
        sigma_max,
        alpha: alpha_pairs.clone(),
        h_terms: alpha_pairs,
        g,
        b_coeffs,
        lambda_g,
        exceptional: true,
        model: Some(model),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenPressureRow {
    pub t: f64,
    pub from_transformed: f64,
    pub from_geometric: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenPressureReport {
    pub rows: Vec<HiddenPressureRow>,
    pub max_discrepancy: f64,
}

/// Cells (by index) whose midpoints are the `k` nearest to `x`.
fn hole_cells(grid: &CollocationGrid, x: f64, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grid.size()).collect();
    idx.sort_by(|&a, &b| (grid.midpoint(a) - x).abs().total_cmp(&(grid.midpoint(b) - x).abs()));
    idx.truncate(k);
    idx
}

/// Compares the pressure of `-t G` with the pressure of `-t log|Df|` restricted away from
/// the maximal exceptional set.
///
/// The restricted value is obtained by cutting holes of one and four cells around each
/// exceptional point and extrapolating linearly in the square root of the hole size.
pub fn verify_hidden_pressure_equivalence(
    map: &IntervalMap,
    data: &CohomologyData,
    t_samples: &[f64],
    grid_size: usize,
) -> Result<HiddenPressureReport> {
    let grid = CollocationGrid::new(map, grid_size)?;
    let geometric = UPotential::geometric(map);
    let holes: Vec<Vec<bool>> = [1usize, 4]
        .iter()
        .map(|&k| {
            let mut mask = vec![false; grid.size()];
            for &xi in &data.sigma_max {
                for c in hole_cells(&grid, xi, k) {
                    mask[c] = true;
                }
            }
            mask
        })
        .collect();
    let mut rows = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let g_matrix = grid.weights(map, &data.g, t)?;
        let from_transformed = leading_spectrum(&g_matrix)?.lambda.ln();
        let from_geometric = if data.sigma_max.is_empty() {
            from_transformed
        } else {
            let raw = grid.weights(map, &geometric, t)?;
            let v1 = leading_spectrum(&raw.without_cells(&holes[0]))?.lambda.ln();
            let v4 = leading_spectrum(&raw.without_cells(&holes[1]))?.lambda.ln();
            2.0 * v1 - v4
        };
        rows.push(HiddenPressureRow {
            t,
            from_transformed,
            from_geometric,
            discrepancy: (from_transformed - from_geometric).abs(),
        });
    }
    let max_discrepancy = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    Ok(HiddenPressureReport { rows, max_discrepancy })
}
