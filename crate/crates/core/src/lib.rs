//! Numerical function theory on the unit disk.
//!
//! The crate covers Blaschke products and interpolating sequences, Carleson
//! measures on dyadic boxes, scalar and two-component model spaces, Riesz
//! diagnostics for finite systems of subspaces, Bourgain's Carleson-contour
//! construction and the contour/net pipeline that replaces determinants of
//! matrix inner functions by Blaschke products.

pub mod blaschke;
pub mod carleson;
pub mod construction;
pub mod contour;
pub mod disk;
pub mod error;
pub mod hardy;
pub mod linalg;
pub mod model_space;
pub mod riesz;
pub mod weighted;

pub use error::{Error, Result};
