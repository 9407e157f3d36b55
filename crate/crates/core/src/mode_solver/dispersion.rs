//! Group delay, dispersion and slope from the wavelength dependence of n_eff.

use crate::error::Result;
use crate::fiber_model::CoreProfile;
use crate::units::PS_PER_KM_PER_GROUP_INDEX;

use super::effective_index;

pub const DEFAULT_STENCIL_STEP_NM: f64 = 2.0;

/// First three derivatives of a sampled function at the stencil centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

/// Five-point central differences of `f` around `x` with spacing `h`.
/// First and second derivatives are fourth-order accurate, the third is
/// second-order accurate.
pub fn stencil_derivatives<F>(f: F, x: f64, h: f64) -> Result<Derivatives>
where
    F: Fn(f64) -> Result<f64>,
{
    let m2 = f(x - 2.0 * h)?;
    let m1 = f(x - h)?;
    let c = f(x)?;
    let p1 = f(x + h)?;
    let p2 = f(x + 2.0 * h)?;
    Ok(Derivatives {
        value: c,
        first: (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h),
        second: (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h),
        third: (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h),
    })
}

/// Taylor coefficients of one core at a centre wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionCoefficients {
    pub n_eff: f64,
    pub group_index: f64,
    /// ps/km
    pub tau_g: f64,
    /// ps/(km·nm)
    pub dispersion: f64,
    /// ps/(km·nm²)
    pub slope: f64,
}

/// Coefficients from an arbitrary effective-index curve `n_eff(λ[nm])`.
pub fn dispersion_from_index_fn<F>(f: F, center_nm: f64, step_nm: f64) -> Result<DispersionCoefficients>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = stencil_derivatives(f, center_nm, step_nm)?;
    let lambda = center_nm;
    let group_index = d.value - lambda * d.first;
    // dn_g/dλ = -λ n'' ; d²n_g/dλ² = -n'' - λ n'''
    Ok(DispersionCoefficients {
        n_eff: d.value,
        group_index,
        tau_g: group_index * PS_PER_KM_PER_GROUP_INDEX,
        dispersion: -lambda * d.second * PS_PER_KM_PER_GROUP_INDEX,
        slope: -(d.second + lambda * d.third) * PS_PER_KM_PER_GROUP_INDEX,
    })
}

/// Coefficients of the LP01 mode of `profile`, solving the mode at each of the
/// five stencil wavelengths.
pub fn dispersion_from_neff(
    profile: &CoreProfile,
    center_nm: f64,
    step_nm: f64,
) -> Result<DispersionCoefficients> {
    dispersion_from_index_fn(|l| effective_index(profile, l), center_nm, step_nm)
}
