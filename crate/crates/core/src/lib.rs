//! Jump-diffusions with killing: Euler simulation, pathwise densities of
//! absolutely continuous measure changes, and Monte Carlo checks of the
//! identities those densities satisfy.

pub mod cdc;
pub mod cirjump;
pub mod density;
pub mod error;
pub mod mccheck;
pub mod model;
pub mod numgen;
pub mod par;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod state;
pub mod stats;
pub mod testfn;

pub use error::{Error, Result};
pub use model::{transform_model, IdentityChange, InverseChange, JumpKernel, MeasureChange, Model};
pub use state::{State, StateSpace, Support};
pub use testfn::TestFunction;
