//! Numerical construction of compact embedded convex lambda-hypersurfaces of
//! revolution, `H + <X, nu> = lambda`, by shooting on the profile-curve ODE.

pub mod cli;
pub mod dopri;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod linearization;
pub mod ode_core;
pub mod params;
pub mod shooting;
pub mod store;

pub use error::{Error, Result};
pub use params::Params;
