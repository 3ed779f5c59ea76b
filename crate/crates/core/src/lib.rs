//! Regularized FIR identification with empirical-Bayes hyper-parameter
//! tuning, the closed-form high-order asymptotics of the resulting estimator,
//! and a seeded Monte Carlo harness to check them.

pub mod asymptotics;
pub mod dd;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod linalg;
pub mod montecarlo;
pub mod provenance;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
