//! Unsupervised eye contact detection for front-facing device cameras.
//!
//! Landmarks give a head pose, the pose defines a normalized camera space,
//! and a gaze ray from the face centre is intersected with the camera plane.
//! Gaze points are clustered; the cluster nearest the camera becomes the
//! positive class for a linear SVM over appearance features. The
//! [`evaluation`] module runs leave-one-person-out experiments on datasets
//! produced by [`synthgen`] or read through [`io`].

pub mod geometry;
pub mod normalization;
pub mod pipeline;
pub mod classifier;
pub mod synthgen;
pub mod evaluation;
pub mod io;
pub mod cli;
