//! facefit: spatio-temporally consistent 3D face mesh fitting for
//! multi-view landmark videos.
//!
//! The crate fits a linear parametric face model to per-frame, per-view 2D
//! landmark observations. Two drivers are provided:
//!
//! - [`optim::neuface_fit`] optimizes the weights of a small ReLU network
//!   that re-parameterizes the model and camera parameters, alternating
//!   between latent-target estimation (temporally smoothed head rotations,
//!   visibility-weighted cross-view consensus meshes) and gradient steps.
//! - [`optim::direct_fit`] optimizes the model parameters directly with the
//!   usual squared-norm regularizers, in two coarse-to-fine stages.
//!
//! Everything runs on a deterministic, tape-based reverse-mode
//! differentiation engine ([`diff`]) over `f64` dense arrays. The synthetic
//! asset generator ([`face_model::build_synthetic_assets`]) and sequence
//! generator ([`pipeline::gen_sequence`]) make every claim checkable against
//! ground truth at desk scale.

pub mod diff;
pub mod encoder;
pub mod error;
pub mod estep;
pub mod face_model;
pub mod geometry;
pub mod losses;
pub mod metrics;
pub mod optim;
pub mod pipeline;

pub(crate) mod par;

pub use error::{Error, Result};
