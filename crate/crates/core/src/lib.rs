//! Bernoulli bond percolation on finite boxes of the hypercubic lattice:
//! exact and Monte Carlo two-point connectivity, correlation-length fits,
//! closed-form bounds and statistical monotonicity checks.

pub mod analysis;
pub mod dsu;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod oracle;
pub mod percolation;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{build_box, BoxSpec, LatticeGraph};
pub use percolation::{BondConfig, Event, EventKind};
pub use rng::RngStream;
