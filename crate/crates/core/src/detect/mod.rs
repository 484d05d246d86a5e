//! Fluorescence-detection model, synthetic histograms and spin-distribution fitting.

mod fit;
mod histogram;
mod model;

pub use fit::{
    fit_histogram, mc_error_bars, simplex_qp, FitResult, McErrorBars, McOptions, MAX_FAILURE_FRACTION, MIN_SHOTS,
};
pub use histogram::{synthesize_histogram, CountHistogram};
pub use model::{
    basis_functions, bright_dark_overlap, convolve, ion_components, overlap, single_ion_pmf, tune_bright_leak,
    BeamProfile, PhotonModel, EXPOSURE_BINS,
};
