//! Latent theme dictionary modeling for time-stamped categorical event logs.
//!
//! A record is a sequence of event sentences with time stamps. Sentences are
//! explained as ordered concatenations of distinct dictionary patterns drawn
//! per latent class, gap times as exponential with a class-specific rate.
//! This crate provides:
//!
//! - [`types`]: events, patterns, dictionaries, records, datasets, parameters;
//! - [`segmenter`]: enumeration and counting of pattern separations;
//! - [`model`]: exact log-likelihoods and the forward generator;
//! - [`inference`]: the nonparametric-Bayes fitting loop (dictionary search,
//!   split, sample, slice-Gibbs sweeps, trim);
//! - [`identifiability`]: executable checks of the uniqueness conditions;
//! - [`evaluation`]: recovery metrics and label alignment against a ground
//!   truth;
//! - [`ingestion`]: raw assessment-log preprocessing into the canonical
//!   dataset format;
//! - [`fixtures`]: the four built-in simulation settings.

pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod identifiability;
pub mod inference;
pub mod ingestion;
pub mod model;
pub mod rng;
pub mod segmenter;
pub mod types;

pub use error::{Error, Result};
