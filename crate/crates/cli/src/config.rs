//! Run configuration: a JSON document whose fields can be overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pressure_lab_core::expr::parse;
use pressure_lab_core::potential::{RegularPart, SingularTerm};
use pressure_lab_core::{IntervalMap, NamedMap, UPotential};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapSpec {
    Named { name: String },
    Polynomial { coeffs: Vec<f64>, domain: [f64; 2] },
    PiecewiseLinear { xs: Vec<f64>, ys: Vec<f64> },
}

impl MapSpec {
    pub fn build(&self) -> Result<IntervalMap> {
        Ok(match self {
            MapSpec::Named { name } => IntervalMap::named(name.parse::<NamedMap>()?)?,
            MapSpec::Polynomial { coeffs, domain } => IntervalMap::polynomial(coeffs.clone(), (domain[0], domain[1]))?,
            MapSpec::PiecewiseLinear { xs, ys } => IntervalMap::piecewise_linear(xs.clone(), ys.clone())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub center: f64,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    Geometric,
    Constant {
        value: f64,
    },
    Expression {
        src: String,
    },
    /// Regular expression part plus `coeff * log|x - center|` terms.
    UClass {
        #[serde(default)]
        regular: Option<String>,
        terms: Vec<Term>,
    },
}

impl PotentialSpec {
    /// `geometric`, `constant:<value>`, or an expression in `x`.
    pub fn from_flag(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "geometric" {
            return Ok(PotentialSpec::Geometric);
        }
        if let Some(v) = s.strip_prefix("constant:") {
            let value = v.trim().parse().with_context(|| format!("bad constant '{v}'"))?;
            return Ok(PotentialSpec::Constant { value });
        }
        Ok(PotentialSpec::Expression { src: s.to_string() })
    }

    pub fn build(&self, map: &IntervalMap) -> Result<UPotential> {
        Ok(match self {
            PotentialSpec::Geometric => UPotential::geometric(map),
            PotentialSpec::Constant { value } => UPotential::constant(*value),
            PotentialSpec::Expression { src } => UPotential::expression(parse(src).map_err(pressure_lab_core::Error::from)?),
            PotentialSpec::UClass { regular, terms } => {
                let regular = match regular {
                    Some(src) => RegularPart::Expression(parse(src).map_err(pressure_lab_core::Error::from)?),
                    None => RegularPart::Constant(0.0),
                };
                if let Some(t) = terms.iter().find(|t| !(t.coeff >= 0.0)) {
                    bail!(pressure_lab_core::Error::Validation(format!(
                        "singular coefficient at {} must be nonnegative",
                        t.center
                    )));
                }
                let terms = terms.iter().map(|t| SingularTerm { center: t.center, coeff: t.coeff }).collect();
                UPotential::custom(regular, terms)
            }
        })
    }
}

/// `start:stop:count`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TGrid {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!(pressure_lab_core::Error::InvalidParameter(format!("t grid must be start:stop:count, got '{s}'")));
        }
        let num = |p: &str| -> Result<f64> {
            p.trim()
                .parse::<f64>()
                .map_err(|_| pressure_lab_core::Error::InvalidParameter(format!("bad number '{p}' in t grid")).into())
        };
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| pressure_lab_core::Error::InvalidParameter(format!("bad count '{}' in t grid", parts[2])))?;
        if count == 0 {
            bail!(pressure_lab_core::Error::InvalidParameter("t grid count must be positive".into()));
        }
        Ok(TGrid {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    pub depth: usize,
    pub collocation_size: usize,
    pub max_period: usize,
    pub seed: u64,
    pub base_point: Option<f64>,
    pub window: f64,
    /// Birkhoff steps for hyperbolicity checks.
    pub birkhoff_steps: usize,
    /// Sample count for grid suprema.
    pub sup_grid: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            depth: 16,
            collocation_size: 1024,
            max_period: 10,
            seed: 0,
            base_point: None,
            window: 0.05,
            birkhoff_steps: 12,
            sup_grid: 4001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub map: Option<MapSpec>,
    pub potential: Option<PotentialSpec>,
    pub t_grid: Option<TGrid>,
    pub engine: EngineOptions,
    pub output: OutputOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn map(&self) -> Result<IntervalMap> {
        match &self.map {
            Some(m) => m.build(),
            None => bail!(pressure_lab_core::Error::InvalidParameter("no map given (use --map or a config file)".into())),
        }
    }

    pub fn potential(&self, map: &IntervalMap) -> Result<UPotential> {
        self.potential.clone().unwrap_or(PotentialSpec::Geometric).build(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_grid_syntax() {
        let g = TGrid::parse("-3:-0.05:60").unwrap();
        let v = g.values();
        assert_eq!(v.len(), 60);
        assert_eq!(v[0], -3.0);
        assert!((v[59] + 0.05).abs() < 1e-15);
        assert_eq!(TGrid::parse("-1:0:1").unwrap().values(), vec![-1.0]);
        assert!(TGrid::parse("-1:0").is_err());
        assert!(TGrid::parse("-1:0:0").is_err());
        assert!(TGrid::parse("a:0:3").is_err());
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{
            "map": {"type": "polynomial", "coeffs": [-1, 0, 2], "domain": [-1, 1]},
            "potential": {"type": "u_class", "regular": "0.1*x", "terms": [{"center": 0, "coeff": 1}]},
            "t_grid": {"start": -2, "stop": -0.5, "count": 4},
            "engine": {"seed": 9}
        }"#;
        let c: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.engine.seed, 9);
        assert_eq!(c.engine.depth, 16);
        let f = c.map().unwrap();
        assert_eq!(c.potential(&f).unwrap().lambda_set(), vec![0.0]);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn potential_flags() {
        assert_eq!(PotentialSpec::from_flag("geometric").unwrap(), PotentialSpec::Geometric);
        assert_eq!(PotentialSpec::from_flag("constant:0.5").unwrap(), PotentialSpec::Constant { value: 0.5 });
        assert_eq!(
            PotentialSpec::from_flag("log(abs(4*x))").unwrap(),
            PotentialSpec::Expression { src: "log(abs(4*x))".into() }
        );
    }
}
