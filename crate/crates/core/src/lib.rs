//! Minimal geodesics, rays and horofunctions for Finsler metrics on the
//! Poincaré disc that are invariant under the deck group of a genus-2 surface.
//!
//! The crate is `no_std` (it needs `alloc`) and purely computational:
//!
//! - [`hyperbolic`]: the disc model of curvature −1, Möbius isometries,
//!   geodesics and Fermi charts along them.
//! - [`group`]: the regular-octagon Fuchsian group, reduced words, axes and
//!   fundamental-domain reduction.
//! - [`metric`]: invariant Gaussian fields and the Finsler families built on
//!   them (hyperbolic, conformal, exact Randers).
//! - [`engine`]: variational computation of minimal segments, rays, minimal
//!   geodesics and periodic minimizers.
//! - [`asymptotic`]: Morse deviations, asymptotic directions, bounding
//!   geodesics, horofunctions and widths.
//!
//! IO, configuration and the command line live in the companion `minrays-lab`
//! crate.

#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotic;
pub mod engine;
mod error;
pub mod group;
pub mod hyperbolic;
pub mod metric;
mod par;

pub use error::{Error, Result};
pub use group::{GeneratorSet, GroupWord, Letter};
pub use hyperbolic::{BoundaryPoint, DiscPoint, HyperbolicGeodesic, MobiusMap, R_MAX, TOL_ANGLE};
pub use metric::{FinslerMetric, InvariantField, MetricKind};
