//! Ground states of discrete Choquard equations
//!
//! `-Delta_p u + h(x) |u|^{p-2} u = (R_alpha * F(u)) f(u)` on `Z^N`,
//! truncated to the box `{-r..=r}^N` with zero extension.
//!
//! The crate is layered bottom-up: [`lattice`] (box, fields, discrete
//! calculus), [`kernel`] (the Riesz-type kernel `R_alpha` and convolution),
//! [`model`] (potentials, nonlinearities, hypothesis checks), [`energy`]
//! (norm, `J`, `J'`), [`nehari`] (fiber maps and the Nehari projection),
//! [`solver`] (ground-state search) and [`verify`] (check harness).

pub mod energy;
pub mod error;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod model;
pub mod nehari;
pub mod par;
pub mod rng;
pub mod solver;
pub mod sum;
pub mod verify;

pub use energy::EnergyContext;
pub use error::{Error, Result};
pub use kernel::{build_table, ConvolutionMethod, KernelTable};
pub use lattice::{Field, LatticeSpec};
pub use model::{ModelSpec, Nonlinearity, Potential, PowerTerm};
pub use solver::{minimize_ground_state, SolveReport, SolverConfig};
