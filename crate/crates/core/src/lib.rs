//! Proactive VNF auto-scaling from measured traffic.
//!
//! The pipeline turns a traffic trace into labeled decision instances
//! ([`labeling`]), trains classifiers that predict the VNF count needed until
//! the next decision ([`learners`]), and scores the resulting decisions for
//! accuracy ([`analysis`]), QoS degradation and energy ([`simulate`]), and
//! leasing cost ([`cost`]).
//!
//! Numeric types are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root pick a concrete precision.

pub mod analysis;
pub mod config;
pub mod cost;
pub mod error;
pub mod features;
pub mod labeling;
pub mod learners;
pub mod pipeline;
pub mod scalar;
pub mod simulate;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FeatureVectorF32 = features::FeatureVector<f32>;
pub type FeatureVectorF64 = features::FeatureVector<f64>;
pub type DatasetF32 = labeling::LabeledDataset<f32>;
pub type DatasetF64 = labeling::LabeledDataset<f64>;
pub type ModelF32 = learners::TrainedModel<f32>;
pub type ModelF64 = learners::TrainedModel<f64>;
pub type LeasingRatesF64 = cost::LeasingRates<f64>;
pub type ServerPowerF64 = simulate::ServerPowerParams<f64>;
