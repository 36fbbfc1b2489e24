//! Tail index estimation from block maxima.
//!
//! The central estimator is a Hill-type statistic computed on the upper
//! order statistics of block maxima, with an optional second-order bias
//! correction. A cursory scale-free pilot estimator, the classical Hill
//! estimator and a GEV maximum-likelihood baseline are included for
//! comparison, together with numerical checks of the limit theory and a
//! deterministic parallel Monte Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocks;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod gev_mle;
pub mod simulation;
pub mod theory;

pub use blocks::{block_maxima, BlockMaximaSample, RawSample};
pub use distributions::{DistributionSpec, SecondOrderForm, TailTruth};
pub use error::{EvtError, Result};
pub use estimators::{EstimateResult, Estimator, SecondOrderSpec};
pub use gev_mle::{fit_gev, GevFit, GevParams};
