//! Mutual information of discrete-input AWGN channels, optimization of
//! stepwise shaping profiles, and conversions between rate and SNR gaps.
//!
//! SNR is always `E[X^2] / sigma^2` with the energy of the distribution in
//! use, so shaping lowers the SNR at a fixed noise level.

mod curve;
mod mi;
mod optimize;

pub use curve::{
    distribution_curve, mi_gap_db, profile_curve, rate_loss_to_db, snr_grid, MiCurve,
    SLOPE_HALF_WIDTH_DB,
};
pub use mi::{
    awgn_capacity, capacity_snr_db, maxwell_boltzmann, mutual_information,
    mutual_information_with, noise_std_for_snr, snr_db, ChannelSpec, Quadrature,
};
pub use optimize::{
    optimize_profile, optimized_curve, profile_mi_at_snr, GridOptions, OptimizationResult,
    SearchMetadata, SearchStrategy,
};
