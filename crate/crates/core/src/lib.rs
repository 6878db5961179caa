//! Small-sphere distribution families on (S^{p-1})^K.
//!
//! Implements the S1/S2 small-sphere families and their multivariate
//! extensions iMS1/iMS2/MS2: log-density evaluation with exact or
//! saddle-point normalizing constants, exact and Gibbs sampling, approximate
//! maximum-likelihood estimation (alternating and profile algorithms),
//! large-sample likelihood-ratio tests, and a reproducible simulation
//! harness with CSV/JSON reporting.

pub mod data;
pub mod density;
pub mod error;
pub mod fit;
pub mod lrt;
pub mod quadrature;
pub mod rng;
pub mod saddlepoint;
pub mod sample;
pub mod sim;
pub mod simplex;
pub mod special;
pub mod sphere;

pub use data::DirectionalSample;
pub use density::{BmParams, ModelParams, Ms2Params, MultiParams, SmallCircleParams, VmfParams};
pub use error::{Error, Result};
pub use fit::{FitOptions, FitResult};
pub use lrt::{Hypothesis, TestResult};
pub use rng::RngStream;
pub use sample::GibbsConfig;
pub use sphere::{SmallSphereSpec, UnitVec};
