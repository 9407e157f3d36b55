//! Fused-silica material index with relative index offsets.

use crate::error::{Error, Result};

/// Validity range of the material model, nm.
pub const MATERIAL_RANGE_NM: (f64, f64) = (1200.0, 1700.0);

// Three-term Sellmeier fit for fused silica (Malitson 1965), wavelengths in μm.
const SELLMEIER_B: [f64; 3] = [0.696_166_3, 0.407_942_6, 0.897_479_4];
const SELLMEIER_C: [f64; 3] = [0.068_404_3, 0.116_241_4, 9.896_161];

/// Pure-silica refractive index at `wavelength_nm`, without range checks.
pub fn silica_index(wavelength_nm: f64) -> f64 {
    let l2 = (wavelength_nm * 1e-3).powi(2);
    let sum: f64 = SELLMEIER_B
        .iter()
        .zip(SELLMEIER_C)
        .map(|(b, c)| b * l2 / (l2 - c * c))
        .sum();
    (1.0 + sum).sqrt()
}

/// Index of a layer whose relative offset from the cladding is `delta_pct`
/// (positive for up-doped cores, negative for depressed trenches).
pub fn material_index(delta_pct: f64, wavelength_nm: f64) -> Result<f64> {
    let (lo, hi) = MATERIAL_RANGE_NM;
    if !(lo..=hi).contains(&wavelength_nm) {
        return Err(Error::OutOfWindow {
            wavelength_nm,
            lo_nm: lo,
            hi_nm: hi,
        });
    }
    Ok(silica_index(wavelength_nm) * (1.0 + delta_pct / 100.0))
}
