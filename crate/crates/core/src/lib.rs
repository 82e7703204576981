//! Multi-implicit spectral deferred corrections for advection-diffusion-reaction
//! problems, with the stencils, banded solvers and stability analysis they need.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod sdc;
pub mod stencils;
pub mod testpde;

pub use error::{Error, Result};
pub use exec::Execution;
