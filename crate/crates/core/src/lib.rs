//! Toroidal dimer models, Temperley's bijection and the Laplacian side of the story.

pub mod cli;
pub mod error;
pub mod lattice;
pub mod laurent;
pub mod height;
pub mod kasteleyn;
pub mod laplacian;
pub mod numeric;
pub mod phase;
pub mod sampler;
pub mod temperley;

pub use error::{Error, Result};
