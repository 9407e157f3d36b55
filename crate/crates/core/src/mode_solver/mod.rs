//! Scalar LP01 solver for trench-assisted step-index cores, finite-difference
//! dispersion extraction and the inverse core-design search.
//!
//! The profile is core / inner cladding / trench / outer cladding. Inside the
//! core the radial field is `J0`; every other layer carries a combination of
//! `I0` and `K0`. Field and derivative are carried outward through each
//! interface, and the guided-mode condition is that the growing `I0`
//! component vanishes in the outer cladding.

mod design;
mod dispersion;
mod material;

pub use design::{
    design_core, design_cores, designed_link, reachable_tau_range, DesignBounds, DesignOutcome,
    DesignTarget, LinkGeometry,
    MAX_DISPERSION_RESIDUAL, MAX_TAU_RESIDUAL_PS_PER_KM,
};
pub use dispersion::{
    dispersion_from_index_fn, dispersion_from_neff, stencil_derivatives, Derivatives,
    DispersionCoefficients, DEFAULT_STENCIL_STEP_NM,
};
pub use material::{material_index, silica_index, MATERIAL_RANGE_NM};

use puruspe::{In, Jn, Kn};

use crate::error::{Error, Result};
use crate::fiber_model::CoreProfile;
use crate::roots;

/// Sign-change scan resolution over the guided n_eff interval.
pub const BRACKET_SCAN_POINTS: usize = 200;

/// Required magnitude of the normalized characteristic function at the root.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Radial layers of a core at one wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredProfile {
    /// Outer radius of each finite layer, μm, strictly increasing. The last
    /// (outer cladding) layer extends to infinity and has no entry.
    pub boundaries: Vec<f64>,
    /// Index of each layer from the core outward; one more entry than
    /// `boundaries`.
    pub indices: Vec<f64>,
    pub wavelength_nm: f64,
}

impl LayeredProfile {
    /// Core, inner cladding, trench and outer cladding at `wavelength_nm`.
    /// Zero-thickness layers are dropped.
    pub fn from_core(profile: &CoreProfile, wavelength_nm: f64) -> Result<Self> {
        let core = material_index(profile.delta1, wavelength_nm)?;
        let clad = material_index(0.0, wavelength_nm)?;
        let trench = material_index(-profile.delta2, wavelength_nm)?;
        let r1 = profile.a1;
        let r2 = r1 + profile.a2;
        let r3 = r2 + profile.w;
        let mut boundaries = vec![r1];
        let mut indices = vec![core];
        if profile.a2 > 0.0 {
            boundaries.push(r2);
            indices.push(clad);
        }
        if profile.w > 0.0 {
            boundaries.push(r3);
            indices.push(trench);
        }
        indices.push(clad);
        Ok(Self {
            boundaries,
            indices,
            wavelength_nm,
        })
    }

    pub fn core_index(&self) -> f64 {
        self.indices[0]
    }

    pub fn cladding_index(&self) -> f64 {
        *self.indices.last().expect("at least two layers")
    }

    fn validate(&self) -> Result<()> {
        if self.indices.len() != self.boundaries.len() + 1 || self.boundaries.is_empty() {
            return Err(Error::Shape(format!(
                "{} layer indices for {} boundaries",
                self.indices.len(),
                self.boundaries.len()
            )));
        }
        if !(self.boundaries[0] > 0.0) || self.boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!(
                "layer radii must be positive and strictly increasing: {:?}",
                self.boundaries
            )));
        }
        let core = self.core_index();
        if self.indices[1..].iter().any(|&n| n >= core) {
            return Err(Error::Domain(
                "every cladding layer must sit below the core index".into(),
            ));
        }
        Ok(())
    }

    /// Normalized guided-mode characteristic function at trial index `n_eff`.
    ///
    /// Returns `F / hypot(F, G)` where `F` and `G` are the `I0` and `K0`
    /// amplitudes in the outer cladding; it lies in [-1, 1] and vanishes on a
    /// guided mode. Defined for `n_eff` strictly between the outer cladding
    /// and core indices.
    pub fn characteristic(&self, n_eff: f64) -> f64 {
        let k0 = 2.0 * std::f64::consts::PI / (self.wavelength_nm * 1e-3);
        let n1 = self.core_index();
        let u = k0 * ((n1 - n_eff) * (n1 + n_eff)).sqrt();
        let a = self.boundaries[0];
        let mut psi = Jn(0, u * a);
        let mut dpsi = -u * Jn(1, u * a);

        let mut r = a;
        let mut amplitudes = (0.0, 0.0);
        for (i, &n) in self.indices.iter().enumerate().skip(1) {
            let w = k0 * ((n_eff - n) * (n_eff + n)).sqrt();
            // Wronskian inversion: I0(x)K1(x) + I1(x)K0(x) = 1/x
            let x = w * r;
            let (i0, i1, k0v, k1v) = (In(0, x), In(1, x), Kn(0, x), Kn(1, x));
            let b = x * (psi * k1v + k0v * dpsi / w);
            let c = x * (i1 * psi - i0 * dpsi / w);
            amplitudes = (b, c);
            if let Some(&r_next) = self.boundaries.get(i) {
                let y = w * r_next;
                psi = b * In(0, y) + c * Kn(0, y);
                dpsi = w * (b * In(1, y) - c * Kn(1, y));
                r = r_next;
            }
        }
        let (f, g) = amplitudes;
        f / f.hypot(g)
    }
}

/// A converged guided mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub n_eff: f64,
    pub wavelength_nm: f64,
    /// |characteristic function| at the returned root.
    pub residual: f64,
}

/// Fundamental (highest-index) scalar LP01 mode of `profile`.
pub fn solve_lp01(profile: &LayeredProfile) -> Result<ModeSolution> {
    profile.validate()?;
    let hi = profile.core_index();
    let lo = profile.cladding_index();
    // keep the scan strictly inside the open interval
    let pad = (hi - lo) * 1e-9;
    let (s_lo, s_hi) = (lo + pad, hi - pad);
    let f = |n: f64| -> Result<f64> { Ok(profile.characteristic(n)) };
    let (b_lo, b_hi) = roots::scan_bracket_from_top(&f, s_lo, s_hi, BRACKET_SCAN_POINTS)?
        .ok_or(Error::Cutoff {
            wavelength_nm: profile.wavelength_nm,
            lo,
            hi,
        })?;
    let n_eff = if b_lo == b_hi {
        b_lo
    } else {
        roots::brent(&f, b_lo, b_hi, 0.0, 200)?
    };
    let residual = profile.characteristic(n_eff).abs();
    if residual > RESIDUAL_TOLERANCE && !localized_to_ulps(profile, n_eff) {
        return Err(Error::NoConvergence {
            lo: b_lo,
            hi: b_hi,
            iterations: 200,
            residual,
        });
    }
    Ok(ModeSolution {
        n_eff,
        wavelength_nm: profile.wavelength_nm,
        residual,
    })
}

/// True when the characteristic function changes sign within a few ulps of
/// `n`, i.e. the root is as resolved as f64 allows even if the function is
/// steep there.
fn localized_to_ulps(profile: &LayeredProfile, n: f64) -> bool {
    let eps = 4.0 * f64::EPSILON * n.abs();
    let below = profile.characteristic(n - eps);
    let above = profile.characteristic(n + eps);
    below.signum() != above.signum()
}

/// Effective index of `core` at `wavelength_nm`.
pub fn effective_index(core: &CoreProfile, wavelength_nm: f64) -> Result<f64> {
    let layered = LayeredProfile::from_core(core, wavelength_nm)?;
    solve_lp01(&layered).map(|m| m.n_eff)
}
