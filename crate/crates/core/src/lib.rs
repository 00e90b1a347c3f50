//! Manifold scattering transform features for point clouds.
//!
//! A point cloud is turned into an affinity graph ([`graph`]), from which a
//! heat semigroup is approximated either spectrally or by a Markov random walk
//! ([`operators`]). Dyadic diffusion wavelets built on that semigroup give
//! scattering moments ([`scattering`]) that can be fed to the small learning
//! harness in [`learn`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod datasets;
pub mod error;
pub mod files;
pub mod graph;
pub mod operators;
pub mod pipeline;
pub mod learn;
pub mod scattering;

pub use error::{Error, Result};
