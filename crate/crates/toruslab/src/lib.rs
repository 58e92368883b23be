//! Numerical laboratory for discrepancies of toral translations and linear
//! flows relative to strictly convex bodies, and for the limit laws those
//! discrepancies converge to on the space of unimodular lattices.
//!
//! The crate is organized around six building blocks:
//!
//! * [`convex_body`] — strictly convex bodies (balls, ellipsoids, support
//!   perturbations) with support function, curvature, volume, membership and
//!   Fourier-coefficient asymptotics.
//! * [`lattice`] — unimodular lattices, the shear/diagonal-flow matrices, the
//!   greedy short reduced basis, resonant-harmonic extraction and approximate
//!   Haar sampling.
//! * [`orbit`] — exact and Fourier-approximate discrepancy computations for
//!   discrete translations, continuous flows, slanted cylinders and geodesic
//!   occupation times, plus the Monte Carlo samplers producing empirical CDFs.
//! * [`limit_law`] — evaluation of the limit-law series over sampled points of
//!   the lattice-torus space, with tail-variance truncation diagnostics.
//! * [`stats`] — empirical CDFs, two-sample Kolmogorov–Smirnov distance,
//!   quantiles and a Cauchy fit for the one-dimensional experiment.
//! * [`numeric`] / [`linalg`] / [`rng`] — shared numerical kernels.
//!
//! All samplers take an explicit seed and split it into per-sample streams, so
//! results are bit-identical regardless of the number of worker threads.

pub mod convex_body;
pub mod error;
pub mod lattice;
pub mod limit_law;
pub mod linalg;
pub mod numeric;
pub mod orbit;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Version tag written into every JSON summary.
pub const SCHEMA_VERSION: u32 = 1;
