//! Generalized von Koch fractals: geometry, tube volumes, scaling
//! functional equations, complex dimensions and tube formulas.

pub mod error;
pub mod geometry;
pub mod io;
pub mod moran;
pub mod quad;
pub mod sfe;
pub mod tube;
pub mod tubeformula;
pub mod zeta;

pub use error::{Error, Result};
