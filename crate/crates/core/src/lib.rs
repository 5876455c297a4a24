//! Outer approximations of closed convex hulls of non-compact basic
//! semialgebraic sets by homogenized moment relaxations.

use openblas_src as _;

pub mod basis;
pub mod certify;
pub mod conic;
pub mod error;
pub mod oracle;
pub mod orthant;
pub mod poly;
pub mod relax;

pub use error::{Error, Result};
pub use poly::{parse_polynomial, Monomial, Polynomial, SemialgebraicSet};
