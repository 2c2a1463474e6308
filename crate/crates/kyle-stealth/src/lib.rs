//! Equilibrium computation for a Kyle-type market with an insider facing
//! detection and prosecution risk.
//!
//! The crate is organised bottom-up: [`numerics`] (special functions,
//! quadrature, root finding), [`model`] (hazard and penalty families),
//! [`market`] (pricing rule and first-order conditions), [`equilibrium`]
//! (finite-population and limiting solvers, ε-certification, convergence)
//! and [`calibration`] (moment matching against trading statistics).

pub mod calibration;
pub mod equilibrium;
pub mod error;
pub mod market;
pub mod model;
pub mod numerics;
pub mod par;

pub use equilibrium::{solve_finite, solve_limiting, EquilibriumSolution, LimitingSolution, SolverOptions};
pub use error::{Error, Result};
pub use model::{HazardModel, ModelParams, PenaltyModel, Strategy};
pub use par::Execution;
