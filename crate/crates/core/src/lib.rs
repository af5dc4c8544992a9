//! Finite-strain viscoplasticity with combined isotropic–kinematic hardening,
//! weighted least-squares identification of the hardening parameters, and a
//! linearized Monte Carlo estimate of how measurement noise moves them.

pub mod constitutive;
pub mod error;
pub mod identification;
pub mod lm;
pub mod loading;
pub mod metric;
pub mod noise;
pub mod sensitivity;
pub mod tensor;

pub use constitutive::{HardeningParams, InternalState, MaterialParams};
pub use error::{Error, Result};
pub use tensor::Tensor2;
