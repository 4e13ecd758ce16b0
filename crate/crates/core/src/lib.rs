//! Structure-preserving parametric model reduction for linearized
//! power-network swing dynamics.
//!
//! The toolkit builds second-order models `M x'' + D x' + L(p) x = B u` from
//! network descriptions (generated, MATPOWER cases, or JSON files), reduces
//! them with interpolatory Galerkin projection driven by a structured
//! second-order IRKA iteration, and guarantees that the reduced model keeps
//! the simple pole at zero together with its parameter-dependent residue by
//! basis enrichment (null vectors or block indicators). A validation layer
//! certifies residue matching, interpolation, structure and stability, and
//! sweeps relative H-infinity / H2 errors over the parameter box.
//!
//! The numerical core is generic over the working precision (`f32`/`f64`);
//! the aliases below fix `f64`, which is what the CLI and the file formats
//! use.

pub mod error;
pub mod linalg;
pub mod mor;
pub mod netmodel;
pub mod scalar;
pub mod sysops;
pub mod validate;

pub use error::{Error, Result};
pub use scalar::Real;

/// Crate version string recorded in CSV headers and reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type NetworkModel64 = netmodel::NetworkModel<f64>;
pub type ParameterSpace64 = netmodel::ParameterSpace<f64>;
pub type SecondOrderModel64 = netmodel::SecondOrderModel<f64>;
pub type ReducedModel64 = mor::ReducedModel<f64>;
pub type ReductionBasis64 = mor::ReductionBasis<f64>;
