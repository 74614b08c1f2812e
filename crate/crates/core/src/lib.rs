//! Numerical laboratory for one-dimensional quantum dynamics built around two
//! energy functionals: a corpuscular one assembled from operator mean values
//! and a wave one assembled from the phase of the wave function. Their first
//! variations coincide exactly when the state solves the Schrodinger
//! equation, so the pointwise difference of the two variations — the duality
//! residual — doubles as a solution detector.
//!
//! Module map:
//! - [`grid`]: uniform 1D lattice, spectral/FD4 differentiation, quadrature.
//! - [`wavefunction`]: normalized complex states, node-safe polar
//!   decomposition, trajectories and discrete time derivatives.
//! - [`observables`]: kinetic/potential/total energy densities on both the
//!   corpuscular and wave sides, local energy-momentum fields, and the
//!   kinetic-energy decomposition into flow and amplitude-gradient parts.
//! - [`functionals`]: spacetime action integrals, analytic first variations,
//!   a finite-difference variation oracle, the duality residual, and the
//!   Euler-Lagrange residual of the field Lagrangian.
//! - [`dynamics`]: potentials, initial-state factory, Crank-Nicolson and
//!   split-step propagators, and closed-form reference trajectories.

pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod observables;
pub mod wavefunction;

pub use error::{Error, Result};
pub use grid::{BoundaryKind, DerivativeScheme, Grid, QuadratureRule};
pub use observables::PhysicalConstants;
pub use wavefunction::{PolarForm, Trajectory, Wavefunction};
