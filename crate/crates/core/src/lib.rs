//! Models, tomography and information analysis for multiplexed
//! photon-counting detectors.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`models`] synthesize ground-truth POVMs for equal-split and
//!    logarithmic loop detectors, including dark counts and cross-talk.
//! 2. [`probe`] builds coherent-state probe sets, the Poissonian probe
//!    matrix `F`, and samples outcome statistics `P`.
//! 3. [`tomography`] reconstructs the POVM from `(P, F)` by constrained,
//!    smoothness-regularized least squares.
//! 4. [`analysis`] computes outcome purity, flat-prior posteriors, missing
//!    and extracted information, and fits figures of merit.
//!
//! [`povm`] holds the shared data model, [`io`] the file formats and
//! [`pipeline`] the automatic probe plan.

pub mod analysis;
pub mod error;
pub mod io;
pub mod models;
pub mod numeric;
pub mod pipeline;
pub mod povm;
pub mod probe;
pub mod tomography;

pub use error::{Error, Result};
pub use povm::{DiagonalPovm, PovmSet, Violation};
