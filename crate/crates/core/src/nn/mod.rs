//! Dense numerics: tensors, parameters with Adam state, lock-free shared
//! parameters, seeded RNG, finite-difference checking and the container
//! file format.

pub mod container;
pub mod gradcheck;
pub mod params;
pub mod rng;
pub mod shared;
pub mod tensor;

pub use container::Container;
pub use gradcheck::{grad_check, GradCheckReport, GRAD_TOLERANCE, RESOLVED_FLOOR};
pub use params::{AdamHyper, AdamMoments, GradSet, ParamGrad, ParamRead, ParamStore, ParamWrite};
pub use shared::{SharedParams, Snapshot};
pub use tensor::{log_softmax, sigmoid, Tensor};
