//! Coreset-based approximate sampling for k-determinantal point processes.
//!
//! A partition Π of the ground set and one core per part define a small
//! rescaled kernel L̃; sampling a k-DPP on L̃ and then one uniform member per
//! chosen part costs O(k²M) regardless of N. The crate also ships exact
//! samplers and enumeration oracles for the total-variation error, the
//! nonsingularity probability and the distortion factor, so every bound can
//! be checked on small instances.

pub mod baselines;
pub mod cli;
pub mod coreset;
pub mod datagen;
pub mod diagnostics;
pub mod dpp;
mod error;
pub mod linalg;
pub mod rng;
pub mod sampler;
pub mod subsets;

pub use coreset::{construct, ConstructConfig, CoreModel, Coreset, Init, Objective, Partition};
pub use dpp::{build_kdpp, KDppModel};
pub use error::{Error, Result};
pub use linalg::{FeatureKernel, Kernel, KernelKind, KernelMatrix, PointSet, Spectrum};
pub use sampler::{coredpp_prob, coredpp_sample, core_replace, CoreSample};
