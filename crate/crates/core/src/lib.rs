//! Diffusion-driven resample-aggregate variable selection.
//!
//! A tabular denoising diffusion model is fitted to a dataset, `B` synthetic
//! replicates are drawn from it, an ℓ1 selector is applied to each, and the
//! selection indicators are aggregated into stability scores, averaged
//! p-values, or edge frequencies of a Gaussian graphical model.

pub mod aggregate;
pub mod data;
pub mod diffusion;
pub mod numerics;
pub mod selectors;
pub mod simbench;
