//! The finite box: geometry, single-particle spectrum, densities and the
//! chemical-potential solver.

mod density;
mod geometry;
mod solver;
pub(crate) mod split;

pub use density::{
    density_slope, mode_density, mode_energy_beta, occupation_spectrum, pressure, total_density,
    total_density_cycles, total_density_direct, OccupationSpectrum,
};
pub(crate) use density::{lattice, mode_sum, split_sum};
pub use geometry::{Anisotropy, BoxGeometry, GasState, ModeIndex, ThermoPoint};
pub use solver::solve_chemical_potential;
