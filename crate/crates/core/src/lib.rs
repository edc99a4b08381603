//! Block-based variance estimation for transformed long-memory Gaussian series.

pub mod asymptotics;
pub mod block_estimators;
pub mod block_selection;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod hermite;
pub mod lrd_sim;
pub mod numerics;
pub mod rank_test;

pub use error::{Error, Result};
pub use hermite::{HermiteSpec, Rank};
pub use lrd_sim::{CovarianceModel, GaussianSampler, TimeSeries, Transform};
