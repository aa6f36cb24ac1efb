//! covfield: numerical machinery for states on finite-dimensional
//! C*-algebras — GNS spaces, modular operators, operator monotone
//! functions, completely positive unital maps, and the monotone
//! covariance forms and Riemannian metrics they induce.
//!
//! The building blocks live in one module each:
//!
//! - [`algebra`]: block-sum algebras, elements, the normalized trace
//! - [`states`]: density operators, spectra, supports, state generators
//! - [`gns`]: the GNS construction (ideal, space, vectors, representation)
//! - [`modular`]: the modular operator in both pictures, modular flow
//! - [`monotone`]: operator monotone functions and Löwner certification
//! - [`covariance`]: covariance operators/forms and the induced metrics
//! - [`channels`]: CPU maps, Choi certification, contractions, split monos
//! - [`harness`]: the seeded property suite, continuity probe, metric table

pub mod algebra;
pub mod channels;
pub mod covariance;
pub mod error;
pub mod gns;
pub mod harness;
pub mod linalg;
pub mod modular;
pub mod monotone;
pub mod states;

pub use algebra::{AlgebraElement, AlgebraShape, CanonicalTrace};
pub use channels::{CpuMap, CpuReport, InducedContraction};
pub use covariance::{CovarianceOperator, CovarianceSpec, TangentVector};
pub use error::{CovError, Result};
pub use gns::{GnsOperator, GnsSpace, GnsVector};
pub use modular::ModularData;
pub use monotone::MonotoneFunction;
pub use states::{State, SupportProjection};
