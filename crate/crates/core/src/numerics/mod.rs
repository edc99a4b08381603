//! Numerical building blocks shared by the statistical modules.

pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod series;
pub mod special;
