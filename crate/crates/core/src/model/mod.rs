//! Domains, kernels, exact GP conditioning and the Fourier-feature surrogate.

mod domain;
mod features;
mod kernel;
mod posterior;

pub use domain::DomainGrid;
pub use features::{FeatureFit, FeatureModel, DEFAULT_KERNEL_AGREEMENT};
pub use kernel::{KernelFamily, KernelSpec};
pub use posterior::{GaussianPosterior, GpPrior, History, Observation, PriorCovariance};
