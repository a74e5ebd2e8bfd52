//! Reduced-order steady Stokes flow through thin curved pipes with star-shaped,
//! slowly varying cross-sections.
//!
//! The pipeline is: [`geometry`] (centerline, frame, radius law, scale factor β)
//! → [`section`] meshes → [`prandtl`] function Ψ and torsional rigidity G(s)
//! → [`reynolds`] pressure p⁰(s) → [`transverse`] correction v²‡ → [`fields`].
//! [`perturbation`] implements the small-curvature expansion used as an oracle.

// NaN-rejecting guards are written as !(x > 0.0); stencils index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod manufactured;
pub mod perturbation;
pub mod pipeline;
pub mod prandtl;
pub mod reynolds;
pub mod section;
pub mod sgrid;
pub mod spline;
pub mod stats;
pub mod transverse;
pub mod vec3;

pub use error::{PipeError, Result};
