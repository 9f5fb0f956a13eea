//! Finite-gap Jacobi matrices and the function theory of their spectra:
//! Green's function, harmonic measure, reflectionless resolvents, the
//! continued-fraction (divisor) evolution, the Abel map, and comb parameters.

pub mod abel;
pub mod comb;
pub mod config;
pub mod error;
pub mod herglotz;
pub mod io;
pub mod jacobi;
pub mod mp;
pub mod oracle;
pub mod quad;
pub mod spectral_set;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
