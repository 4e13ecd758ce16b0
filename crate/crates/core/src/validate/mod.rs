//! Batch verification: residue/stability/interpolation certificates and
//! parameter-sweep error surfaces.

mod certificate;
mod study;
mod sweep;

pub use certificate::{certify, CertTolerances, Certificate, InterpCheck};
pub use study::{convergence_study, StudyRow, StudyTable};
pub use sweep::{sweep, GridSpec, SweepOptions, SweepPoint, SweepReport};
