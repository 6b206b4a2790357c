//! Distance-based two-class discriminant analysis for high-dimension,
//! low-sample-size data whose covariance matrices carry a few strong spikes.
//!
//! Observations are the columns of `p × n` matrices. The crate provides
//! spectral estimation on the dual side ([`spectra`]), bias-corrected scores
//! ([`transform`]), the classification rules ([`classifiers`]) and synthetic
//! scenarios with population truth ([`simgen`]).

pub mod classifiers;
pub mod error;
pub mod simgen;
pub mod spectra;
pub mod transform;

pub use classifiers::{fit, Decision, FitOptions, FitWarning, KChoice, Method, TrainedModel};
pub use error::{Result, SpikeError};
pub use spectra::ClassSample;
