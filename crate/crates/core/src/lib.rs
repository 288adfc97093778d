//! Simulation of qubit dephasing under time-asymmetric dynamical decoupling,
//! for classical Ornstein–Uhlenbeck noise and exact spin baths, and of the
//! contrast between a control sequence and its time reverse.

pub mod classical;
pub mod control;
pub mod error;
pub mod protocols;
pub mod spin_bath;

pub use error::{Error, Result};
