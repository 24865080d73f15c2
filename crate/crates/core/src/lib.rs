//! Regularized compressible Navier-Stokes with inflow/outflow boundary data
//! on intervals and rectangles, together with term-by-term audits of the
//! balance laws the scheme is meant to respect.

pub mod audit;
pub mod config;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod momentum;
pub mod pipeline;
pub mod thermo;
pub mod tolerances;
pub mod trajectory;
pub mod transport;
pub mod ws;

pub use error::{Error, Result};
