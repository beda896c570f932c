//! Simulation and statistics for one-step phase-retrieval (OSPR)
//! time-multiplexed holography.
//!
//! The crate generates binary-phase holograms from a target image, forms the
//! time-averaged replay intensity over `N` subframes, and compares the
//! measured error statistics (MSE and SSIM) against quadrature-based models.

pub mod error;
pub mod field;
pub mod harness;
pub mod image_io;
pub mod metrics;
pub mod montecarlo;
pub mod noise;
pub mod ospr;
pub mod quadrature;
pub mod special;
pub mod target;

pub use error::{OsprError, Result};
pub use field::{check_parseval, dft_forward, dft_inverse, ComplexField, EnergyReport, RealField};
pub use metrics::{mse, ssim, ssim_model, ssim_model_full, DynamicRange, SsimParams, SsimReport};
pub use noise::{
    bias_cs, bias_id, estimate_noise_params, fit_convergence, mse_decomposition, rician_pdf,
    AmplitudeDistribution, ConvergenceFit, NoiseModel, RicianConvention,
};
pub use ospr::{
    accumulate_subframe, backpropagate, quantize, randomize_phase, run_ospr, HologramFrame,
    QuantizationScheme, ReplayAccumulator, RngSpec,
};
pub use target::{induce_symmetry, load_target, EnergyPolicy, TargetImage};
