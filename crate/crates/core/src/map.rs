//! Interval maps: evaluation, monotone branches, preimages and periodic orbits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;
use crate::potential::UPotential;

/// Absolute slack (relative to the domain width) allowed when clamping points into the domain.
pub const DOMAIN_SLACK: f64 = 1e-12;
/// Highest period checked for attracting or neutral cycles during validation.
pub const VALIDATION_PERIOD: usize = 6;
/// Largest period accepted by [`IntervalMap::periodic_points`].
pub const MAX_PERIOD: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MapKind {
    Polynomial { coeffs: Vec<f64> },
    PiecewiseLinear { xs: Vec<f64>, ys: Vec<f64> },
}

/// Entries of the built-in map registry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NamedMap {
    Chebyshev2,
    Chebyshev3,
    Tent,
    Ulam,
    /// `x^2 - a` on its invariant interval.
    Quadratic(f64),
}

impl fmt::Display for NamedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedMap::Chebyshev2 => write!(f, "chebyshev2"),
            NamedMap::Chebyshev3 => write!(f, "chebyshev3"),
            NamedMap::Tent => write!(f, "tent"),
            NamedMap::Ulam => write!(f, "ulam"),
            NamedMap::Quadratic(a) => write!(f, "quadratic({a})"),
        }
    }
}

impl FromStr for NamedMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "chebyshev2" => return Ok(NamedMap::Chebyshev2),
            "chebyshev3" => return Ok(NamedMap::Chebyshev3),
            "tent" => return Ok(NamedMap::Tent),
            "ulam" => return Ok(NamedMap::Ulam),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("quadratic(").and_then(|r| r.strip_suffix(')')) {
            let a: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad quadratic parameter '{arg}'")))?;
            return Ok(NamedMap::Quadratic(a));
        }
        Err(Error::InvalidParameter(format!("unknown named map '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: f64,
    /// Multiplicity of the derivative zero plus one.
    pub local_order: u32,
    pub in_julia: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub interval: (f64, f64),
    pub direction: Direction,
    /// Sorted image endpoints.
    pub range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// Orbit points in dynamical order, starting at the smallest one.
    pub points: Vec<f64>,
    pub period: usize,
    pub multiplier: f64,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMap {
    domain: (f64, f64),
    kind: MapKind,
    name: Option<NamedMap>,
    dcoeffs: Vec<f64>,
    critical_points: Vec<CriticalPoint>,
    branches: Vec<Branch>,
    invariance_checked: bool,
}

impl IntervalMap {
    /// Polynomial map with ascending coefficients on `[lo, hi]`.
    pub fn polynomial(coeffs: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        Self::build(MapKind::Polynomial { coeffs }, domain, None)
    }

    /// Piecewise-linear interpolant through `(xs[i], ys[i])`; the domain is `[xs[0], xs[last]]`.
    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let domain = match (xs.first(), xs.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Validation("empty breakpoint list".into())),
        };
        Self::build(MapKind::PiecewiseLinear { xs, ys }, domain, None)
    }

    pub fn named(which: NamedMap) -> Result<Self> {
        let (kind, domain) = match which {
            NamedMap::Chebyshev2 => (MapKind::Polynomial { coeffs: vec![-1.0, 0.0, 2.0] }, (-1.0, 1.0)),
            NamedMap::Chebyshev3 => (
                MapKind::Polynomial { coeffs: vec![0.0, -3.0, 0.0, 4.0] },
                (-1.0, 1.0),
            ),
            NamedMap::Tent => (
                MapKind::PiecewiseLinear {
                    xs: vec![0.0, 0.5, 1.0],
                    ys: vec![0.0, 1.0, 0.0],
                },
                (0.0, 1.0),
            ),
            NamedMap::Ulam => (MapKind::Polynomial { coeffs: vec![0.0, 4.0, -4.0] }, (0.0, 1.0)),
            NamedMap::Quadratic(a) => {
                if !a.is_finite() || a <= -0.25 {
                    return Err(Error::InvalidParameter(format!("quadratic parameter {a} has no invariant interval")));
                }
                let beta = 0.5 * (1.0 + (1.0 + 4.0 * a).sqrt());
                (MapKind::Polynomial { coeffs: vec![-a, 0.0, 1.0] }, (-beta, beta))
            }
        };
        Self::build(kind, domain, Some(which))
    }

    fn build(kind: MapKind, domain: (f64, f64), name: Option<NamedMap>) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Validation(format!("degenerate domain [{lo}, {hi}]")));
        }
        let (dcoeffs, critical_points, turning) = match &kind {
            MapKind::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Validation("polynomial coefficients must be finite and nonempty".into()));
                }
                let d = poly::derivative(&poly::trim(coeffs));
                let mut crit = Vec::new();
                for r in poly::real_roots(&d, lo, hi) {
                    if r.multiplicity % 2 == 0 {
                        return Err(Error::Validation(format!(
                            "derivative zero at {} does not change sign (flat-like behaviour)",
                            r.location
                        )));
                    }
                    crit.push(CriticalPoint {
                        location: r.location,
                        local_order: r.multiplicity as u32 + 1,
                        in_julia: true,
                    });
                }
                let turning: Vec<f64> = crit.iter().map(|c| c.location).collect();
                (d, crit, turning)
            }
            MapKind::PiecewiseLinear { xs, ys } => {
                if xs.len() != ys.len() || xs.len() < 2 {
                    return Err(Error::Validation("breakpoint and value lists must match and have length >= 2".into()));
                }
                if xs.windows(2).any(|w| !(w[0] < w[1])) || ys.iter().any(|y| !y.is_finite()) {
                    return Err(Error::Validation("breakpoints must be strictly increasing and finite".into()));
                }
                let slopes: Vec<f64> = (0..xs.len() - 1)
                    .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
                    .collect();
                if slopes.contains(&0.0) {
                    return Err(Error::Validation("piecewise-linear map has a flat segment".into()));
                }
                let turning = (1..xs.len() - 1)
                    .filter(|&i| (slopes[i - 1] > 0.0) != (slopes[i] > 0.0))
                    .map(|i| xs[i])
                    .collect();
                (Vec::new(), Vec::new(), turning)
            }
        };

        let mut map = IntervalMap {
            domain,
            kind,
            name,
            dcoeffs,
            critical_points,
            branches: Vec::new(),
            invariance_checked: false,
        };
        let mut knots = vec![lo];
        knots.extend(turning);
        knots.push(hi);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (map.raw_eval(a), map.raw_eval(b));
            map.branches.push(Branch {
                interval: (a, b),
                direction: if fb > fa { Direction::Increasing } else { Direction::Decreasing },
                range: (fa.min(fb), fa.max(fb)),
            });
        }
        if map.branches.len() < 2 {
            return Err(Error::Validation("map is injective; at least two monotone branches are required".into()));
        }
        map.check_invariance()?;
        map.invariance_checked = true;
        map.check_repelling()?;
        Ok(map)
    }

    fn check_invariance(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        let slack = 1e-12 * self.width().max(1.0);
        let n = 10_000;
        let grid = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64);
        let extrema = self.branches.iter().flat_map(|b| [b.range.0, b.range.1]);
        for (x, y) in grid.map(|x| (x, self.raw_eval(x))).chain(extrema.map(|y| (f64::NAN, y))) {
            if !(y >= lo - slack && y <= hi + slack) {
                return Err(Error::Validation(format!(
                    "map leaves its domain: f({x}) = {y} not in [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn check_repelling(&self) -> Result<()> {
        for n in 1..=VALIDATION_PERIOD {
            for orbit in self.periodic_points(n, 1e-12)? {
                if orbit.period == n && orbit.multiplier <= 1.0 {
                    return Err(Error::Validation(format!(
                        "periodic orbit of period {n} through {} has multiplier {} <= 1",
                        orbit.points[0], orbit.multiplier
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn width(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn name(&self) -> Option<NamedMap> {
        self.name
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical_points
    }

    pub fn monotone_branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn invariance_checked(&self) -> bool {
        self.invariance_checked
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.kind, MapKind::Polynomial { .. })
    }

    /// Ascending polynomial coefficients, if this is a polynomial map.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.kind {
            MapKind::Polynomial { coeffs } => Some(coeffs),
            MapKind::PiecewiseLinear { .. } => None,
        }
    }

    /// Checks `x` against the domain, snapping points within the slack onto it.
    pub fn clamp_point(&self, x: f64) -> Result<f64> {
        self.clamp(x)
    }

    /// `|Df(x)|`, using the right-hand slope at piecewise-linear breakpoints.
    pub fn abs_slope(&self, x: f64) -> Result<f64> {
        Ok(self.raw_deriv(self.clamp(x)?).abs())
    }

    fn clamp(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain;
        let slack = DOMAIN_SLACK * self.width().max(1.0);
        if x >= lo && x <= hi {
            Ok(x)
        } else if x >= lo - slack && x <= hi + slack {
            Ok(x.clamp(lo, hi))
        } else {
            Err(Error::Domain { x, lo, hi })
        }
    }

    fn raw_eval(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Polynomial { coeffs } => poly::eval(coeffs, x),
            MapKind::PiecewiseLinear { xs, ys } => {
                let k = xs.partition_point(|&b| b <= x).clamp(1, xs.len() - 1);
                let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Slope of the segment containing `x` (right-continuous at breakpoints) or `Df(x)`.
    fn raw_deriv(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Polynomial { .. } => poly::eval(&self.dcoeffs, x),
            MapKind::PiecewiseLinear { xs, ys } => {
                let k = xs.partition_point(|&b| b <= x).clamp(1, xs.len() - 1);
                (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1])
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.raw_eval(self.clamp(x)?))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        let x = self.clamp(x)?;
        if let MapKind::PiecewiseLinear { xs, .. } = &self.kind {
            let eps = 1e-14 * self.width();
            if xs[1..xs.len() - 1].iter().any(|&b| (b - x).abs() <= eps) {
                return Err(Error::UndefinedDerivative { x });
            }
        }
        Ok(self.raw_deriv(x))
    }

    /// `f^n(x)`, with iterates clamped back into the domain.
    pub fn iterate(&self, x: f64, n: usize) -> Result<f64> {
        let mut y = self.clamp(x)?;
        for _ in 0..n {
            y = self.raw_eval(y).clamp(self.domain.0, self.domain.1);
        }
        Ok(y)
    }

    /// Solves `f(x) = y` on every branch whose range contains `y`.
    pub fn preimages(&self, y: f64, tol: f64) -> Result<Vec<f64>> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        let y = self.clamp(y)?;
        let slack = DOMAIN_SLACK * self.width().max(1.0);
        let mut out: Vec<f64> = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            if y < b.range.0 - slack || y > b.range.1 + slack {
                continue;
            }
            let x = self.solve_on_branch(b, y);
            let residual = (self.raw_eval(x) - y).abs();
            if residual > tol.max(4.0 * f64::EPSILON * y.abs().max(1.0)) {
                return Err(Error::Tolerance { y, tol, residual });
            }
            out.push(x);
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * tol);
        Ok(out)
    }

    fn solve_on_branch(&self, b: &Branch, y: f64) -> f64 {
        let (mut l, mut r) = b.interval;
        let inc = b.direction == Direction::Increasing;
        let (fl, fr) = (self.raw_eval(l), self.raw_eval(r));
        // outside the range (within slack) the nearest endpoint is the answer
        if (inc && y <= fl) || (!inc && y >= fl) {
            return l;
        }
        if (inc && y >= fr) || (!inc && y <= fr) {
            return r;
        }
        while r - l > 1e-13 * (1.0 + l.abs().max(r.abs())) {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            let below = self.raw_eval(m) < y;
            if below == inc {
                l = m;
            } else {
                r = m;
            }
        }
        let (lo_b, hi_b) = b.interval;
        let mut x = 0.5 * (l + r);
        let mut g = self.raw_eval(x) - y;
        // Newton polish, kept only while it stays inside the branch and improves the residual
        for _ in 0..3 {
            let d = self.raw_deriv(x);
            if g == 0.0 || d == 0.0 {
                break;
            }
            let cand = x - g / d;
            if !(cand >= lo_b && cand <= hi_b) {
                break;
            }
            let gc = self.raw_eval(cand) - y;
            if gc.abs() >= g.abs() {
                break;
            }
            x = cand;
            g = gc;
        }
        x
    }

    /// All periodic orbits whose least period divides `n`.
    pub fn periodic_points(&self, n: usize, tol: f64) -> Result<Vec<PeriodicOrbit>> {
        if n == 0 || n > MAX_PERIOD {
            return Err(Error::InvalidParameter(format!("period must be in 1..={MAX_PERIOD}, got {n}")));
        }
        let mut roots = Vec::new();
        let (lo, hi) = self.domain;
        self.refine_cylinder(lo, hi, 0, n, &mut roots);
        roots.sort_by(|a, b| a.total_cmp(b));
        let merge = (10.0 * tol).max(1e-11 * self.width());
        roots.dedup_by(|a, b| (*a - *b).abs() <= merge);

        let snap = 1e-7 * self.width();
        let nearest = |v: f64| -> Option<usize> {
            let k = roots.partition_point(|&r| r < v);
            [k.wrapping_sub(1), k]
                .into_iter()
                .filter(|&i| i < roots.len())
                .min_by(|&i, &j| (roots[i] - v).abs().total_cmp(&(roots[j] - v).abs()))
                .filter(|&i| (roots[i] - v).abs() <= snap)
        };

        let mut assigned = vec![false; roots.len()];
        let mut orbits = Vec::new();
        for start in 0..roots.len() {
            if assigned[start] {
                continue;
            }
            let mut idx = vec![start];
            let mut cur = start;
            loop {
                let image = self.raw_eval(roots[cur]);
                match nearest(image) {
                    Some(next) if next == start => break,
                    Some(next) if !idx.contains(&next) && idx.len() < n => {
                        idx.push(next);
                        cur = next;
                    }
                    _ => {
                        idx.clear();
                        break;
                    }
                }
            }
            if idx.is_empty() || !n.is_multiple_of(idx.len()) {
                // could not close the orbit within the computed roots; skip as numerical debris
                assigned[start] = true;
                continue;
            }
            for &i in &idx {
                assigned[i] = true;
            }
            let points: Vec<f64> = idx.iter().map(|&i| roots[i]).collect();
            let multiplier = points.iter().map(|&p| self.raw_deriv(p).abs()).product();
            orbits.push(PeriodicOrbit {
                period: points.len(),
                points,
                multiplier,
                theta: None,
            });
        }
        Ok(orbits)
    }

    /// `j` is the number of steps already taken; `f^j` is monotone on `[a, b]`.
    fn refine_cylinder(&self, a: f64, b: f64, j: usize, n: usize, out: &mut Vec<f64>) {
        if j == n {
            let g = |x: f64| self.iterate_raw(x, n) - x;
            let (ga, gb) = (g(a), g(b));
            if ga == 0.0 {
                out.push(a);
            }
            if gb == 0.0 {
                out.push(b);
            }
            if ga != 0.0 && gb != 0.0 && (ga < 0.0) != (gb < 0.0) {
                let (mut l, mut r, mut gl) = (a, b, ga);
                for _ in 0..200 {
                    let m = 0.5 * (l + r);
                    if m <= l || m >= r {
                        break;
                    }
                    let gm = g(m);
                    if gm == 0.0 {
                        l = m;
                        r = m;
                        break;
                    }
                    if (gm < 0.0) == (gl < 0.0) {
                        l = m;
                        gl = gm;
                    } else {
                        r = m;
                    }
                }
                out.push(0.5 * (l + r));
            }
            return;
        }
        let fa = self.iterate_raw(a, j);
        let fb = self.iterate_raw(b, j);
        let increasing = fb >= fa;
        let (ilo, ihi) = (fa.min(fb), fa.max(fb));
        for br in &self.branches {
            let (bl, bh) = br.interval;
            let (cl, ch) = (bl.max(ilo), bh.min(ihi));
            if cl >= ch {
                continue;
            }
            let pull = |target: f64| -> f64 {
                if target <= ilo {
                    return if increasing { a } else { b };
                }
                if target >= ihi {
                    return if increasing { b } else { a };
                }
                let (mut l, mut r) = (a, b);
                for _ in 0..200 {
                    let m = 0.5 * (l + r);
                    if m <= l || m >= r {
                        break;
                    }
                    if (self.iterate_raw(m, j) < target) == increasing {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                0.5 * (l + r)
            };
            let (p, q) = (pull(cl), pull(ch));
            let (sa, sb) = (p.min(q), p.max(q));
            if sb > sa || (sb == sa && n == j + 1) {
                self.refine_cylinder(sa, sb, j + 1, n, out);
            }
        }
    }

    fn iterate_raw(&self, x: f64, n: usize) -> f64 {
        let mut y = x;
        for _ in 0..n {
            y = self.raw_eval(y).clamp(self.domain.0, self.domain.1);
        }
        y
    }

    /// `sum_{j<n} phi(f^j x)`; returns `-inf` when the orbit lands on a pole.
    pub fn birkhoff_sum(&self, phi: &UPotential, x: f64, n: usize) -> Result<f64> {
        let mut y = self.clamp(x)?;
        let mut total = 0.0;
        for _ in 0..n {
            let v = phi.eval(self, y)?;
            if v == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += v;
            y = self.raw_eval(y).clamp(self.domain.0, self.domain.1);
        }
        Ok(total)
    }
}
