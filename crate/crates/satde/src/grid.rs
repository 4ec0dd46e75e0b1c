//! Uniform LLR grid underlying every quantized density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bin width in LLR units.
pub const DEFAULT_SPACING: f64 = 1.0 / 16.0;

/// Headroom added above the variable-node saturation level when sizing a grid.
pub const DEFAULT_HEADROOM: f64 = 4.0;

/// A symmetric uniform grid on `[-half_range, half_range]` with an odd number
/// of bins so that LLR 0 is a bin center. Bin `i` is centered at
/// `(i - center) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    spacing: f64,
    half_bins: usize,
}

impl Grid {
    /// Builds a grid with the given spacing whose half range is at least
    /// `half_range` (rounded up to a whole number of bins).
    pub fn new(spacing: f64, half_range: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        if !(half_range > 0.0) || !half_range.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half_range {half_range} must be positive"
            )));
        }
        let half_bins = (half_range / spacing).ceil() as usize;
        if half_bins > 1 << 22 {
            return Err(Error::InvalidGrid(format!(
                "grid would have {} bins",
                2 * half_bins + 1
            )));
        }
        Ok(Grid { spacing, half_bins })
    }

    /// Default grid for a run saturating at `k_var`: spacing 1/16 and range
    /// `k_var + 4`.
    pub fn for_saturation(k_var: f64) -> Result<Self> {
        Grid::new(DEFAULT_SPACING, k_var + DEFAULT_HEADROOM)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bin_count(&self) -> usize {
        2 * self.half_bins + 1
    }

    /// Index of the bin centered at LLR 0.
    pub fn center(&self) -> usize {
        self.half_bins
    }

    pub fn half_range(&self) -> f64 {
        self.half_bins as f64 * self.spacing
    }

    /// LLR value at the center of bin `i`.
    pub fn value(&self, i: usize) -> f64 {
        (i as f64 - self.half_bins as f64) * self.spacing
    }

    /// Index of the bin whose center is nearest to `llr` (clamped to range).
    pub fn bin_of(&self, llr: f64) -> usize {
        let idx = (llr / self.spacing).round() + self.half_bins as f64;
        idx.clamp(0.0, (self.bin_count() - 1) as f64) as usize
    }

    /// Nearest representable grid value.
    pub fn snap(&self, llr: f64) -> f64 {
        self.value(self.bin_of(llr))
    }

    pub fn compatible(&self, other: &Grid) -> bool {
        self.half_bins == other.half_bins && self.spacing == other.spacing
    }
}
