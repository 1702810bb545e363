//! Continued fractions on ordered abelian semigroups with an order-reversing
//! involution, together with three concrete instances: extended nonnegative
//! reals, planar convex bodies under Minkowski addition and polarity, and
//! nonnegative convex functions under addition and conjugation.

pub mod body2;
pub mod cli;
pub mod error;
pub mod fn1d;
pub mod geom;
pub mod scalar;
pub mod semigroup;
pub mod set_cf;

pub use error::{CfError, Result};
