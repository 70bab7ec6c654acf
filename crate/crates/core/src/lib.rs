//! Thermodynamic formalism for smooth interval maps.
//!
//! The crate is organised bottom up: [`map`] holds the dynamics, [`potential`] the
//! potentials, [`combinatorics`] the finite models used to find exceptional sets,
//! [`cohomology`] the transform that removes removable log singularities,
//! [`pressure`] the pressure engines and curve assembly, and [`keller`] the
//! oscillation norms and correlation diagnostics.

pub mod cohomology;
pub mod combinatorics;
pub mod error;
pub mod expr;
pub mod keller;
pub mod map;
pub mod poly;
pub mod potential;
pub mod pressure;

pub use error::{Error, ErrorClass, Result};
pub use map::{IntervalMap, NamedMap};
pub use potential::UPotential;
