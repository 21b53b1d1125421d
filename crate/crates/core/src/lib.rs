//! Quantum transport in the lossy dimerized (Rudner-Levitov) lattice and its
//! nonlinear-hopping extensions.
//!
//! A particle starts on a neutral site and leaks out through the lossy sites;
//! the decay-weighted mean cell index at which it leaves, `<Delta m>`, is the
//! central observable. In the linear lattice it is quantized to the winding
//! number of the bulk Bloch Hamiltonian. The nonlinear models shift either
//! the intercell or the intracell hopping by Kerr-type terms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod integrator;
pub mod io;
pub mod lattice;
pub mod observables;
pub mod sweeps;

pub use error::{Error, Result};
pub use integrator::{convergence_probe, evolve, SimConfig, Trajectory};
pub use lattice::{
    effective_contrast, make_params, nonlinear_shift, rhs, winding_number, InitialStateSpec,
    LatticeState, ModelKind, ModelParams, StateDerivative, Sublattice,
};
pub use num_complex::Complex64;
pub use observables::{
    contrast_series, displacement_of_time, incoherent_reference, mean_displacement,
    mirror_asymmetry, norm_rate_residual, occupancy_grid, ContrastSeries, DisplacementSeries,
    MeanDisplacement, OccupancyGrid,
};
pub use sweeps::{heatmap_run, run_sweep, Heatmap, SweepResult, SweepSpec};
