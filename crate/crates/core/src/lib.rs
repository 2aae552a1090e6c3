//! Kernel density estimation with superkernels.
//!
//! Kernels and densities carry their characteristic functions, so the mean
//! integrated squared error, the integrated squared error of a realised estimate
//! and the optimal bandwidth are all computed exactly on the Fourier side. Three
//! data-driven bandwidth selectors (an empirical-characteristic-function flat-region
//! rule, least-squares cross-validation and the Sheather–Jones plug-in) and a
//! seeded Monte Carlo harness sit on top.

pub mod densities;
pub mod error;
pub mod estimation;
pub mod fourier;
pub mod kernels;
pub mod numerics;
pub mod risk;
pub mod selectors;
pub mod sim;

pub use densities::{DensitySpec, Sample};
pub use error::{Error, Result};
pub use estimation::{ecf, ecf_abs2, EvalGrid, Estimate};
pub use kernels::{KernelClassification, KernelOrder, KernelSpec};
pub use numerics::{QuadratureSettings, RngStream};
pub use risk::{OptimalBandwidthResult, RiskReport};
pub use selectors::{PolitisSettings, SelectorResult};
pub use sim::{ExperimentConfig, ResultRow};
