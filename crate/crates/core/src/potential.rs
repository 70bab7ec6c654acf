//! Potentials of the form `g(x) + sum_c b(c) log|x - c|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::map::IntervalMap;
use crate::poly;

/// Distance below which a point is treated as sitting on a log pole.
pub const POLE_GUARD: f64 = 1e-13;
/// Coefficients at most this large in magnitude count as zero.
pub const COEFF_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Geometric,
    Holder,
    Transformed,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularTerm {
    pub center: f64,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegularPart {
    Constant(f64),
    Expression(Expr),
}

impl RegularPart {
    fn eval(&self, x: f64) -> Result<f64> {
        match self {
            RegularPart::Constant(c) => Ok(*c),
            RegularPart::Expression(e) => Ok(e.eval(x)?),
        }
    }
}

/// Local expansion of `log|Df| + h o f - h` around one special point `s`.
///
/// With `d = x - s` the potential equals
/// `b log|d| + log|P(d)| + a_f log|Q(d)| + (remaining smooth h terms)`,
/// where `P` and `Q` are the derivative and the increment `f(s+d) - f(s)` with their
/// vanishing low-order coefficients divided out.
#[derive(Debug, Clone, PartialEq)]
struct Chart {
    center: f64,
    radius: f64,
    coeff: f64,
    deriv_reduced: Vec<f64>,
    incr_reduced: Vec<f64>,
    /// Index into `h_terms` of the term centred at `f(s)`, if any.
    image_term: Option<usize>,
    /// Index into `h_terms` of the term centred at `s`, if any.
    self_term: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum Form {
    Additive(RegularPart),
    LogDerivative,
    Cohomologous { h_terms: Vec<(f64, f64)>, charts: Vec<Chart> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UPotential {
    kind: PotentialKind,
    form: Form,
    singular_terms: Vec<SingularTerm>,
}

impl UPotential {
    /// `log|Df|`, with the critical points recorded as singular terms of weight `l - 1`.
    pub fn geometric(map: &IntervalMap) -> Self {
        let singular_terms = map
            .critical_points()
            .iter()
            .map(|c| SingularTerm {
                center: c.location,
                coeff: (c.local_order - 1) as f64,
            })
            .collect();
        UPotential {
            kind: PotentialKind::Geometric,
            form: Form::LogDerivative,
            singular_terms,
        }
    }

    pub fn constant(c: f64) -> Self {
        UPotential {
            kind: PotentialKind::Holder,
            form: Form::Additive(RegularPart::Constant(c)),
            singular_terms: Vec::new(),
        }
    }

    pub fn expression(expr: Expr) -> Self {
        UPotential {
            kind: PotentialKind::Holder,
            form: Form::Additive(RegularPart::Expression(expr)),
            singular_terms: Vec::new(),
        }
    }

    /// Regular part plus explicit log singularities.
    pub fn custom(regular: RegularPart, singular_terms: Vec<SingularTerm>) -> Self {
        let kind = if singular_terms.is_empty() {
            PotentialKind::Holder
        } else {
            PotentialKind::Custom
        };
        UPotential {
            kind,
            form: Form::Additive(regular),
            singular_terms,
        }
    }

    /// `log|Df| + h o f - h` with `h(x) = sum alpha log|x - xi|`.
    ///
    /// `singular_terms` is the already computed class decomposition; it is stored as
    /// metadata and is not used for evaluation.
    pub fn cohomologous(
        map: &IntervalMap,
        h_terms: Vec<(f64, f64)>,
        singular_terms: Vec<SingularTerm>,
    ) -> Result<Self> {
        let coeffs = map
            .coefficients()
            .ok_or_else(|| Error::ClassA("the transformed potential needs a polynomial map".into()))?
            .to_vec();
        let dcoeffs = poly::derivative(&coeffs);
        let width = map.width();
        let match_tol = 1e-9 * width.max(1.0);
        let find = |v: f64| h_terms.iter().position(|&(xi, _)| (xi - v).abs() <= match_tol);

        let mut specials: Vec<f64> = h_terms.iter().map(|t| t.0).collect();
        specials.extend(map.critical_points().iter().map(|c| c.location));
        for &(xi, _) in &h_terms {
            specials.extend(map.preimages(xi, 1e-13)?);
        }
        specials.sort_by(|a, b| a.total_cmp(b));
        specials.dedup_by(|a, b| (*a - *b).abs() <= match_tol);

        let mut charts = Vec::with_capacity(specials.len());
        for (k, &s) in specials.iter().enumerate() {
            let gap = specials
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &o)| (o - s).abs())
                .fold(f64::INFINITY, f64::min);
            let radius = (0.05 * width).min(0.5 * gap);
            let order = map
                .critical_points()
                .iter()
                .find(|c| (c.location - s).abs() <= match_tol)
                .map_or(1, |c| c.local_order as usize);
            let dshift = poly::taylor_shift(&dcoeffs, s);
            let fshift = poly::taylor_shift(&coeffs, s);
            let deriv_reduced: Vec<f64> = dshift.get(order - 1..).unwrap_or(&[]).to_vec();
            let incr_reduced: Vec<f64> = fshift.get(order..).unwrap_or(&[]).to_vec();
            let image_term = find(poly::eval(&coeffs, s));
            let self_term = find(s);
            let alpha_image = image_term.map_or(0.0, |i| h_terms[i].1);
            let alpha_self = self_term.map_or(0.0, |i| h_terms[i].1);
            let coeff = (order as f64 - 1.0) + alpha_image * order as f64 - alpha_self;
            charts.push(Chart {
                center: s,
                radius,
                coeff,
                deriv_reduced,
                incr_reduced,
                image_term,
                self_term,
            });
        }
        Ok(UPotential {
            kind: PotentialKind::Transformed,
            form: Form::Cohomologous { h_terms, charts },
            singular_terms,
        })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn singular_terms(&self) -> &[SingularTerm] {
        &self.singular_terms
    }

    /// Centres whose coefficient is strictly positive.
    pub fn lambda_set(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .singular_terms
            .iter()
            .filter(|t| t.coeff > COEFF_EPS)
            .map(|t| t.center)
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn is_class_u(&self) -> bool {
        self.singular_terms.iter().all(|t| t.coeff >= -COEFF_EPS)
    }

    pub fn has_poles(&self) -> bool {
        !self.lambda_set().is_empty()
    }

    /// Terms of the coboundary `h` (empty unless this is a transformed potential).
    pub fn h_terms(&self) -> &[(f64, f64)] {
        match &self.form {
            Form::Cohomologous { h_terms, .. } => h_terms,
            _ => &[],
        }
    }

    /// `h(x) = sum alpha log|x - xi|`.
    pub fn h(&self, x: f64) -> f64 {
        self.h_terms()
            .iter()
            .map(|&(xi, a)| if a == 0.0 { 0.0 } else { a * (x - xi).abs().ln() })
            .sum()
    }

    /// Constant value if the potential is a constant (used by the tree engine's fast path).
    pub fn as_constant(&self) -> Option<f64> {
        match &self.form {
            Form::Additive(RegularPart::Constant(c)) if self.singular_terms.iter().all(|t| t.coeff == 0.0) => Some(*c),
            _ => None,
        }
    }

    /// Point evaluation; `-inf` on a pole with positive coefficient.
    pub fn eval(&self, map: &IntervalMap, x: f64) -> Result<f64> {
        match &self.form {
            Form::Additive(g) => {
                let mut total = 0.0;
                for t in &self.singular_terms {
                    if t.coeff == 0.0 {
                        continue;
                    }
                    let d = (x - t.center).abs();
                    if d < POLE_GUARD {
                        return Ok(if t.coeff > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY });
                    }
                    total += t.coeff * d.ln();
                }
                Ok(g.eval(x)? + total)
            }
            Form::LogDerivative => {
                if self
                    .singular_terms
                    .iter()
                    .any(|t| t.coeff > 0.0 && (x - t.center).abs() < POLE_GUARD)
                {
                    return Ok(f64::NEG_INFINITY);
                }
                let d = map.abs_slope(x)?;
                Ok(if d == 0.0 { f64::NEG_INFINITY } else { d.ln() })
            }
            Form::Cohomologous { h_terms, charts } => {
                let x = map.clamp_point(x)?;
                if let Some(ch) = charts
                    .iter()
                    .find(|c| (x - c.center).abs() < c.radius)
                {
                    return Ok(eval_chart(map, h_terms, ch, x));
                }
                let fx = map.eval(x)?;
                let d = map.abs_slope(x)?;
                Ok(d.ln() + h_sum(h_terms, fx, None) - h_sum(h_terms, x, None))
            }
        }
    }
}

fn h_sum(h_terms: &[(f64, f64)], x: f64, skip: Option<usize>) -> f64 {
    h_terms
        .iter()
        .enumerate()
        .filter(|&(i, &(_, a))| Some(i) != skip && a != 0.0)
        .map(|(_, &(xi, a))| a * (x - xi).abs().ln())
        .sum()
}

fn eval_chart(map: &IntervalMap, h_terms: &[(f64, f64)], ch: &Chart, x: f64) -> f64 {
    let d = x - ch.center;
    let singular = if ch.coeff.abs() <= COEFF_EPS {
        0.0
    } else if d.abs() < POLE_GUARD {
        return if ch.coeff > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    } else {
        ch.coeff * d.abs().ln()
    };
    let deriv_part = poly::eval(&ch.deriv_reduced, d).abs().ln();
    let image_part = ch
        .image_term
        .map_or(0.0, |i| h_terms[i].1 * poly::eval(&ch.incr_reduced, d).abs().ln());
    // points near s map near f(s); the term centred at f(s) is already in `image_part`
    let fx = map.eval(x).unwrap_or(ch.center);
    singular + deriv_part + image_part + h_sum(h_terms, fx, ch.image_term) - h_sum(h_terms, x, ch.self_term)
}
