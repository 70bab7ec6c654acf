//! Pressure engines, periodic-orbit statistics, curve assembly and the diagnostics built on them.
//!
//! Two engines estimate the pressure of `-t u`. The preimage tree sums `exp(-t S_n u)` over
//! `f^{-n}(x)`; the collocation engine takes the log of the leading eigenvalue of a
//! discretised transfer operator. Both are t-independent in their expensive part, so a curve
//! reuses one tree and one grid.

pub mod collocation;
pub mod conformal;
pub mod curve;
pub mod hyperbolic;
pub mod spectral;
pub mod stats;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use collocation::{collocation_operator, CollocationGrid, SparseMatrix};
pub use conformal::{conformal_and_equilibrium, ConformalResult};
pub use curve::{detect_phase_transition, pressure_curve, CurveConfig, CurvePoint, PressureCurve, TransitionVerdict};
pub use hyperbolic::{hyperbolicity_check, HyperbolicityVerdict};
pub use spectral::{leading_spectrum, SpectralData};
pub use stats::{theta_star, theta_stats, variational_sup_check, ThetaStats, VariationalReport};
pub use tree::{choose_base_point, tree_pressure, PreimageTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tree,
    Collocation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub method: Method,
    pub depth_or_size: usize,
    pub base_point: Option<f64>,
    /// Partial estimates; the last entry equals `value`.
    pub convergence_series: Vec<f64>,
}
