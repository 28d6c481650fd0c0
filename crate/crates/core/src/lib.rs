//! Triangle-network correlation bounds: hexagon-inflation linear programs,
//! exact Fourier-Motzkin elimination, closed-form inequality checks,
//! trilocal model construction and search, and region scans.

pub mod correlators;
pub mod error;
pub mod fme;
pub mod inequalities;
pub mod lpfeas;
pub mod scalar;
pub mod scan;
pub mod simplex;
pub mod trilocal;

pub use error::{Error, Result};
