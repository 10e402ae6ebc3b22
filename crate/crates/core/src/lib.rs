//! Limiting spectral densities of heavy-tailed random matrix ensembles,
//! with seeded Monte Carlo samplers to check them against.
//!
//! - [`stable_dist`]: α-stable laws (density, tails, sampling, parameter algebra).
//! - [`wigner_levy`]: running-parameter solver and density of Wigner–Lévy matrices.
//! - [`free_levy`]: resolvents, R-transforms, free stable laws and free addition.
//! - [`matrix_mc`]: ensemble samplers, symmetric eigensolver, spectral statistics.
//! - [`deformed`]: scale-mixture deformations of Wigner and Wishart ensembles.
//! - [`io`]: ensemble configs, CSV/JSON emission and run manifests.

// `!(x > 0.0)` also rejects NaN; quadrature tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod deformed;
pub mod error;
pub mod free_levy;
pub mod grid;
pub mod io;
pub mod matrix_mc;
pub mod quad;
pub mod stable_dist;
pub mod stats;
pub mod wigner_levy;

pub use error::{Error, Result};
