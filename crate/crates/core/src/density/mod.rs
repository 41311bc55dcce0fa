//! Quantized LLR-density arithmetic and bit-channel constructions.
//!
//! Densities live on a uniform grid with saturation bins at both ends
//! ([`DensityGrid`]). The two convolution primitives ([`check_convolve`],
//! [`var_convolve`]) feed the construction drivers: stationary density
//! evolution ([`de_construct`]), the exact erasure recursion
//! ([`bhattacharyya_construct`]), the Gaussian approximation
//! ([`ga_construct`]), and the nonstationary sweep ([`nde_sweep`]) that
//! consumes position-dependent empirical densities.

mod construct;
mod convolve;
mod ga;
mod grid;

pub use construct::{
    bhattacharyya_construct, channel_density, de_construct, nde_sweep, ChannelModel, ErrorProfile,
    LLR_CLAMP, MAX_DE_DEPTH,
};
pub use convolve::{boxplus, check_convolve, var_convolve};
pub use ga::{ga_construct, ga_means, q_function, PhiApproximation, PhiForm, PhiSegment};
pub use grid::{
    error_prob, DensityGrid, QuantizedDensity, DEFAULT_GRID_BINS, DEFAULT_GRID_MAX,
    DEFAULT_GRID_MIN, MASS_TOLERANCE,
};

use thiserror::Error;

#[derive(Error, Debug, PartialEq)]
pub enum DensityError {
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("mass sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("negative mass {value} in bin {bin}")]
    NegativeMass { bin: usize, value: f64 },
    #[error("mass vector has {got} bins, grid has {expected}")]
    MassLengthMismatch { got: usize, expected: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("profile entry {index} is {value}, outside [0, 1]")]
    InvalidProfileValue { index: usize, value: f64 },
    #[error("got {got} initial densities, expected {expected}")]
    WrongInitialCount { got: usize, expected: usize },
    #[error("polarization depth {got} exceeds supported maximum {max}")]
    DepthTooLarge { got: u32, max: u32 },
    #[error("the Gaussian approximation needs an AWGN channel model")]
    NotAwgn,
    #[error("phi approximation config: {0}")]
    PhiConfig(String),
}
