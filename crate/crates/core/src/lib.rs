//! Certified isolation and counting of zero clusters of square polynomial
//! systems.
//!
//! Given a square polynomial system and an approximation to a cluster of
//! zeros, the crate constructs a nearby singular system, normalizes it to a
//! pre-inflatable form, inflates it so that every initial form reaches a
//! common degree, and applies a multivariate Rouché argument to produce a
//! pair of isolating regions `R- ⊆ R+` together with a certified count of
//! the zeros inside.
//!
//! The certification chain is carried entirely by complex ball arithmetic:
//! a certificate is emitted only when the required strict inequalities hold
//! on outward-rounded bounds.

pub mod ball;
pub mod bounds;
pub mod certify;
pub mod cmatrix;
pub mod error;
pub mod hilbert;
pub mod inflation;
pub mod io;
pub mod irregular;
pub mod oracle;
pub mod poly;
pub mod preinflate;
pub mod region;
pub mod spectral;

pub use ball::{BallC, RInt};
pub use error::{Error, Result};
pub use poly::{Exponent, PolySystem, Polynomial};
