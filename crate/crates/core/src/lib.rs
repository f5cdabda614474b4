//! Driven, dissipative exciton dynamics of the Fenna-Matthews-Olson (FMO)
//! complex: a 7-site Lindblad model with an explicit sink level, laser driving
//! in the rotating-wave approximation, CRAB pulse shaping, derivative-free
//! pulse optimization, orientation-ensemble statistics, and orientation
//! thermodynamics in a far-detuned trapping field.
//!
//! Internal unit conventions, used everywhere without exception:
//! energies in cm^-1 (relative to the 12230 cm^-1 shift of the site basis),
//! times in ps, dipole moments in Debye, field amplitudes in D^-1 cm^-1,
//! so that `mu . e * E` is directly an energy in cm^-1, with
//! hbar = 5.3088 cm^-1 ps.
//!
//! The Hilbert space is 9-dimensional: level 0 is the electronic ground
//! state, levels 1..=7 are the site excitations (1-based, matching the
//! conventional site labels), and level 8 is the sink fed irreversibly from
//! site 3.

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod propagator;
pub mod pulse;
pub mod thermo;

pub use error::{Error, Result};
pub use model::{DensityMatrix, FmoModel, HBAR_CM_PS};
pub use propagator::{DriveSpec, Trajectory};
pub use pulse::PulseParams;
