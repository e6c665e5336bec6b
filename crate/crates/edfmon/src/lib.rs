//! Nonparametric open-end sequential monitoring for changes in the
//! contemporary distribution function of possibly multivariate streams.
//!
//! The pipeline: pick evaluation points from a learning sample
//! ([`points`]), estimate the long-run covariance of the indicator vectors
//! ([`lrcov`]), stream the retrospective-CUSUM detector against a calibrated
//! threshold ([`detector`], [`calibrate`]), and evaluate everything with the
//! scenario generators and Monte Carlo harness ([`genmodels`],
//! [`experiments`]).

pub mod calibrate;
pub mod detector;
pub mod error;
pub mod experiments;
pub mod genmodels;
pub mod lrcov;
pub mod matrix;
pub mod points;

pub use error::{Error, Result};
