//! Adiabatic (STIRAP-like) transfer of phonon-number fluctuations between two
//! membranes dividing an optical cavity into three coupled sub-cavities.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameter records, pulse envelopes, bath occupancy, validation.
//! * [`meanfield`]: classical cavity and membrane amplitudes.
//! * [`dynamics`]: the 5x5 fluctuation coupling matrix and propagation of the
//!   normal-ordered second moments.
//! * [`spectral`]: eigen-branches, dark mode, decay shift, three-level reference.
//! * [`pipeline`] and [`sweep`]: end-to-end runs and parameter grids.
//!
//! All rates are dimensionless multiples of a 1 MHz reference; times are in the
//! reciprocal unit. Modes are always ordered `(a_L, a_M, a_R, b_1, b_2)`.

pub mod dynamics;
pub mod error;
pub mod meanfield;
pub mod model;
pub mod ode;
pub mod pipeline;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Number of fluctuation modes.
pub const MODES: usize = 5;

/// Column labels for the five modes, in matrix order.
pub const MODE_LABELS: [&str; MODES] = ["aL", "aM", "aR", "b1", "b2"];

pub type Mat5 = nalgebra::Matrix5<C64>;
pub type Vec5 = nalgebra::Vector5<C64>;
