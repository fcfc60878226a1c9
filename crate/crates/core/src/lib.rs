//! Spectral analysis of a viscoelastic fluid-conveying tube whose boundary
//! conditions depend on the spectral parameter.

pub mod asymptotics;
pub mod charbasis;
pub mod detfun;
pub mod energy;
pub mod error;
pub mod model;
pub mod pencil;
pub mod roots;

pub use error::{Error, Result};
