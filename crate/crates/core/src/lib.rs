//! Deterministic spiking-encoder benchmark engine.
//!
//! A Gaussian-tuned Poisson population encoder feeds two local learners: a
//! delta-rule softmax readout and a winner-take-all prototype learner with
//! threshold homeostasis. Everything random flows from hierarchical
//! splitmix64 streams so every run is bit-identical given its seed path.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! benchmark protocol runs in [`Real`] (`f64`) and the aliases below name the
//! concrete types it uses.

#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod detrng;
pub mod encoding;
pub mod error;
pub mod learners;
pub mod matrix;
pub mod plasticity;
pub mod protocol;
pub mod report;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the benchmark protocol.
pub type Real = f64;

pub type Matrix = matrix::Matrix<Real>;
pub type EncoderConfig = encoding::EncoderConfig<Real>;
pub type Dataset = data::Dataset<Real>;
pub type ReadoutModel = learners::readout::ReadoutModel<Real>;
pub type ProxyModel = learners::proxy::ProxyModel<Real>;
pub type LifConfig = plasticity::LifConfig<Real>;
pub type LifState = plasticity::LifState<Real>;
pub type PlasticityState = plasticity::PlasticityState<Real>;
pub type Summary = stats::Summary<Real>;
pub type PairedResult = stats::PairedResult<Real>;
