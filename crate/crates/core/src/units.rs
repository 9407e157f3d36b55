//! Physical constants and the unit conversions shared across modules.
//!
//! Internal conventions: wavelengths in nm, transverse lengths in μm, bend
//! radii in mm, fiber lengths in km, delays in ps/km, dispersion in
//! ps/(km·nm), slope in ps/(km·nm²), RF frequencies in Hz.

/// Speed of light in vacuum, m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;

/// Converts a group index to a group delay per kilometre, in ps/km.
pub const PS_PER_KM_PER_GROUP_INDEX: f64 = 1.0e15 / C_M_PER_S;

pub const UM_PER_MM: f64 = 1.0e3;

pub const PS_PER_S: f64 = 1.0e12;

/// Total delay in seconds accumulated by `ps_per_km` over `length_km`.
pub fn delay_seconds(ps_per_km: f64, length_km: f64) -> f64 {
    ps_per_km * length_km / PS_PER_S
}
