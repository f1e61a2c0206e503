//! Numerical laboratory for dark solitons of the one-dimensional
//! Gross-Pitaevskii equation
//!
//! ```text
//!     i dPsi/dt + d2Psi/dx2 + Psi (1 - |Psi|^2) = 0,   |Psi| -> 1 at infinity,
//! ```
//!
//! studied in the hydrodynamical variables `eta = 1 - |Psi|^2` (density dip)
//! and `v = -d/dx arg Psi` (phase gradient).  The crate provides
//!
//! * a Fourier pseudospectral grid with dealiased derivatives ([`grid`]),
//! * closed-form travelling dark-soliton profiles and their invariants
//!   ([`soliton`]),
//! * time integration of the hydrodynamical system and of the original
//!   equation, with maps between the two descriptions ([`hydro`]),
//! * orbital decomposition of a trajectory into a modulated soliton plus a
//!   remainder ([`modulation`]),
//! * the linearised energy operator around a soliton, its spectrum, and the
//!   quadratic forms that control stability ([`linops`]),
//! * localized momentum / virial / phase diagnostics ([`diagnostics`]),
//! * reproducible experiment drivers with CSV/JSON output ([`lab`]).
//!
//! Everything is deterministic: random perturbations are generated from a
//! caller-supplied seed and all file output is byte-stable for a fixed
//! configuration.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hydro;
pub mod lab;
pub mod linops;
pub mod modulation;
pub mod soliton;

pub use error::{Error, Result};
pub use grid::Grid;
pub use hydro::HydroState;
pub use soliton::Soliton;

/// Upper bound for admissible soliton speeds: `sqrt(2)`, the sound speed.
pub const SOUND_SPEED: f64 = std::f64::consts::SQRT_2;
