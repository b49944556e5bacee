//! Numerical laboratory for nonlocal (fractional) minimal cones in `R^3`.
//!
//! The library is organized around cones over curves on the unit sphere:
//! a closed spherical curve traces the boundary of a cone, and the modules
//! here measure that cone with fractional-order tools.
//!
//! - [`specfun`]: Gamma function and the closed-form constants of the
//!   fractional Laplacian and the fractional Hardy inequality.
//! - [`quad`]: adaptive Gauss-Kronrod quadrature with deterministic
//!   panel ordering.
//! - [`curves`]: spherical curves, cone traces, resampling, normal fields,
//!   and the cylinder crossing measure.
//! - [`kernels`]: the sphere-to-sphere interaction kernel, ring integrals
//!   over product circles, and curve pair interactions.
//! - [`seminorms`]: fractional Sobolev and Holder seminorms of sampled
//!   functions, and the flatness diagnostic for normal fields.
//! - [`hardy`]: radial profiles, the weighted Hardy energy and its sharp
//!   constant, and near-optimizer families.
//! - [`stability`]: the second-variation quadratic form of a cone,
//!   its discretized eigenvalue problem, and stability verdicts.
//! - [`perimeter`]: fractional and classical perimeters of lattice sets,
//!   scaling scans, and density tables.
//! - [`catalog`]: named example traces and sets used throughout.
//! - [`scenarios`]: batch scenario driver producing JSON/CSV reports.

pub mod catalog;
pub mod curves;
pub mod error;
pub mod hardy;
pub mod kernels;
pub mod perimeter;
pub mod quad;
pub mod scenarios;
pub mod seminorms;
pub mod specfun;
pub mod stability;
pub mod util;

pub use error::{Error, Result};
