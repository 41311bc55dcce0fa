//! Uniform LLR grids and quantized densities.

use serde::{Deserialize, Serialize};

use super::DensityError;

/// Mass normalization slack accepted on construction.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A uniform LLR grid with bin centers at `min + i * step`.
///
/// `step = (max - min) / bins`, so the highest center sits one step below
/// `max`. The endpoint bins double as saturation bins: mass clipped at
/// either end accumulates there, and the check-node convolution treats
/// them as perfectly known (infinite) LLRs. Zero must land exactly on a
/// bin center; that keeps erasure masses and the half-mass-at-zero error
/// rule exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    min: f64,
    max: f64,
    bins: usize,
}

/// Default LLR clip used across the crate.
pub const DEFAULT_GRID_MIN: f64 = -40.0;
pub const DEFAULT_GRID_MAX: f64 = 40.0;
pub const DEFAULT_GRID_BINS: usize = 2048;

impl DensityGrid {
    pub fn new(min: f64, max: f64, bins: usize) -> Result<Self, DensityError> {
        if !(min < 0.0 && 0.0 < max) || !min.is_finite() || !max.is_finite() {
            return Err(DensityError::InvalidGrid(format!(
                "grid must straddle zero, got [{min}, {max}]"
            )));
        }
        if bins < 4 {
            return Err(DensityError::InvalidGrid(format!(
                "need at least 4 bins, got {bins}"
            )));
        }
        let grid = Self { min, max, bins };
        let zero = -min / grid.step();
        if (zero - zero.round()).abs() > 1e-9 || zero.round() as usize >= bins {
            return Err(DensityError::InvalidGrid(
                "zero must fall on a bin center".into(),
            ));
        }
        Ok(grid)
    }

    /// The default grid: [-40, 40) split into 2048 bins.
    pub fn default_grid() -> Self {
        Self::new(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_BINS)
            .expect("default grid is valid")
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }

    /// Center value of bin `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }

    /// Index of the bin holding zero (exactly on-center by construction).
    pub fn zero_bin(&self) -> usize {
        (-self.min / self.step()).round() as usize
    }

    /// Nearest bin to `x`, clamped into range.
    pub fn bin_of(&self, x: f64) -> usize {
        if x.is_nan() {
            return self.zero_bin();
        }
        let raw = ((x - self.min) / self.step()).round();
        if raw < 0.0 {
            0
        } else if raw >= self.bins as f64 {
            self.bins - 1
        } else {
            raw as usize
        }
    }

    /// Lowest saturation bin index (always 0; named for readability).
    pub fn neg_sat_bin(&self) -> usize {
        0
    }

    /// Highest saturation bin index.
    pub fn pos_sat_bin(&self) -> usize {
        self.bins - 1
    }
}

/// Serialized density layout: grid fields inline next to the mass vector.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityFile {
    grid_min: f64,
    grid_max: f64,
    bins: usize,
    mass: Vec<f64>,
}

/// A probability mass function over a [`DensityGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityFile", into = "DensityFile")]
pub struct QuantizedDensity {
    grid: DensityGrid,
    mass: Vec<f64>,
}

impl TryFrom<DensityFile> for QuantizedDensity {
    type Error = DensityError;

    fn try_from(file: DensityFile) -> Result<Self, DensityError> {
        let grid = DensityGrid::new(file.grid_min, file.grid_max, file.bins)?;
        QuantizedDensity::new(grid, file.mass)
    }
}

impl From<QuantizedDensity> for DensityFile {
    fn from(d: QuantizedDensity) -> Self {
        DensityFile {
            grid_min: d.grid.min,
            grid_max: d.grid.max,
            bins: d.grid.bins,
            mass: d.mass,
        }
    }
}

impl QuantizedDensity {
    pub fn new(grid: DensityGrid, mass: Vec<f64>) -> Result<Self, DensityError> {
        if mass.len() != grid.bins() {
            return Err(DensityError::MassLengthMismatch {
                got: mass.len(),
                expected: grid.bins(),
            });
        }
        let mut sum = 0.0;
        for (bin, &m) in mass.iter().enumerate() {
            if m.is_nan() || m < 0.0 {
                return Err(DensityError::NegativeMass { bin, value: m });
            }
            sum += m;
        }
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(DensityError::NotNormalized { sum });
        }
        Ok(Self { grid, mass })
    }

    /// All mass in the bin nearest to `x`.
    pub fn point_mass(grid: DensityGrid, x: f64) -> Self {
        let mut mass = vec![0.0; grid.bins()];
        mass[grid.bin_of(x)] = 1.0;
        Self { grid, mass }
    }

    /// Two-point erasure-style density: `erasure` at zero, the rest at the
    /// positive saturation bin.
    pub fn bec_style(grid: DensityGrid, erasure: f64) -> Result<Self, DensityError> {
        if !(0.0..=1.0).contains(&erasure) {
            return Err(DensityError::InvalidChannel(format!(
                "erasure probability {erasure} outside [0, 1]"
            )));
        }
        let mut mass = vec![0.0; grid.bins()];
        mass[grid.zero_bin()] = erasure;
        mass[grid.pos_sat_bin()] += 1.0 - erasure;
        Ok(Self { grid, mass })
    }

    pub fn grid(&self) -> DensityGrid {
        self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Internal constructor for convolution outputs that are normalized by
    /// construction (products of normalized masses).
    pub(crate) fn from_raw(grid: DensityGrid, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), grid.bins());
        Self { grid, mass }
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| self.grid.value(i) * m)
            .sum()
    }

    /// Hard-decision error probability: mass strictly below zero plus half
    /// the mass of the bin holding zero (the erasure convention).
    pub fn error_prob(&self) -> f64 {
        let zero = self.grid.zero_bin();
        let below: f64 = self.mass[..zero].iter().sum();
        below + 0.5 * self.mass[zero]
    }
}

/// Free-function form of [`QuantizedDensity::error_prob`].
pub fn error_prob(d: &QuantizedDensity) -> f64 {
    d.error_prob()
}
