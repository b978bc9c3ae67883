//! Cubical persistent homology, cellular sheaves and local branch numbers for
//! binary images.

pub mod branch;
pub mod checks;
pub mod cubical;
pub mod error;
pub mod fixtures;
pub mod imageio;
pub mod persistence;
pub mod pipeline;
pub mod sheaf;
pub mod z2;

pub use error::{Error, ErrorKind, Result};
