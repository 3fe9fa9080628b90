//! Littlewood–Paley and Besov machinery on the periodic torus, with a
//! perturbation-form pseudo-spectral Navier–Stokes integrator and the
//! numerical checks that go with them.

pub mod criterion;
pub mod error;
pub mod field;
pub mod heat;
pub mod io;
pub mod lattice;
pub mod littlewood_paley;
pub mod paraproduct;
pub mod random;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use field::{ScalarField, VelocityField};
pub use lattice::{Axis, FrequencyLattice, LatticeSpec};
