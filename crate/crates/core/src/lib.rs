//! Explicit bases of multilinear forms built from locally decodable code
//! fixtures, together with numerical certificates for every inequality in the
//! construction chain: smooth decoding, norm brackets, the distortion
//! sandwich, dimension bounds, and the many-query reduction.

pub mod codes;
pub mod embedding;
pub mod error;
pub mod forms;
pub mod hypercube;
pub mod norms;
pub mod par;
pub mod reduction;
pub mod report;
pub mod smoothing;

pub use error::{Error, Result};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Report schema identifier.
pub const SCHEMA: &str = "ldc-l1-forge/1";
