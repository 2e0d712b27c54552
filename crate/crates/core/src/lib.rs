//! Numerical quasiconformal geometry on the unit disc: Beltrami coefficients
//! and their integrals, the extended Beltrami solver, conformal and reduced
//! modules, and boundary-regularity diagnostics for circle maps.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod circle_map;
pub mod error;
pub mod field;
pub mod geometry;
pub mod modules;
pub mod quadrature;
pub mod reduced;
pub mod solver;

pub use boundary::{DerivativeEstimate, DerivativeMethod, RingExtremes};
pub use circle_map::{CircleMap, Interpolation};
pub use error::{QcError, Result};
pub use field::{BeltramiField, FieldFamily, PNormResult, Phase};
pub use geometry::{AnnulusSpec, CartesianGrid, DiscSpec, JordanCurve, Point, PolarAnnulusGrid};
pub use modules::{ModuleEstimate, ModuleResolution};
pub use reduced::{ReducedMethod, ReducedModuleResult};
pub use solver::QcSolution;
