//! Human-readable fiber design files.
//!
//! A design is TOML with one `[link]` table and one `[[cores]]` entry per
//! core. Every numeric key carries its unit in its name. Unknown keys are
//! rejected so a misspelt field can never silently fall back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_model::{
    CoreProfile, DispersionModel, FiberCore, McfLink, Polar, WavelengthWindow,
    DEFAULT_ANCHOR_NM, DEFAULT_TAU_G0_PS_PER_KM,
};

/// The bundled 7-core design, digits kept exactly.
pub const TABLE1_TOML: &str = include_str!("../data/table1.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub length_km: f64,
    pub core_pitch_um: f64,
    pub cladding_diameter_um: f64,
    #[serde(default = "default_anchor")]
    pub anchor_wavelength_nm: f64,
    /// Shared group delay at the anchor; cores may override it.
    #[serde(default = "default_tau")]
    pub tau_g0_ps_per_km: f64,
    #[serde(default = "default_lo")]
    pub window_lo_nm: f64,
    #[serde(default = "default_hi")]
    pub window_hi_nm: f64,
    pub adjacency: Vec<[usize; 2]>,
}

fn default_anchor() -> f64 {
    DEFAULT_ANCHOR_NM
}
fn default_tau() -> f64 {
    DEFAULT_TAU_G0_PS_PER_KM
}
fn default_lo() -> f64 {
    WavelengthWindow::default().lo_nm
}
fn default_hi() -> f64 {
    WavelengthWindow::default().hi_nm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreSection {
    pub id: usize,
    pub a1_um: f64,
    pub a2_um: f64,
    pub w_um: f64,
    pub delta1_pct: f64,
    pub delta2_pct: f64,
    pub dispersion_ps_per_km_nm: f64,
    pub slope_ps_per_km_nm2: f64,
    pub n_eff: f64,
    pub r_um: f64,
    pub theta_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_g0_ps_per_km: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberDesign {
    pub link: LinkSection,
    pub cores: Vec<CoreSection>,
}

impl FiberDesign {
    pub fn table1() -> Self {
        Self::from_toml_str(TABLE1_TOML).expect("bundled design parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("design serializes")
    }

    /// Every invariant violation in the design, each naming its field.
    pub fn violations(&self) -> Vec<String> {
        match self.clone().into_link() {
            Ok(_) => Vec::new(),
            Err(Error::Invalid(v)) => v,
            Err(e) => vec![e.to_string()],
        }
    }

    pub fn into_link(self) -> Result<McfLink> {
        let l = &self.link;
        let window = WavelengthWindow {
            lo_nm: l.window_lo_nm,
            hi_nm: l.window_hi_nm,
        };
        let cores = self
            .cores
            .iter()
            .map(|c| FiberCore {
                id: c.id,
                profile: CoreProfile {
                    a1: c.a1_um,
                    a2: c.a2_um,
                    w: c.w_um,
                    delta1: c.delta1_pct,
                    delta2: c.delta2_pct,
                },
                model: DispersionModel {
                    anchor_nm: l.anchor_wavelength_nm,
                    tau_g0: c.tau_g0_ps_per_km.unwrap_or(l.tau_g0_ps_per_km),
                    dispersion: c.dispersion_ps_per_km_nm,
                    slope: c.slope_ps_per_km_nm2,
                    window,
                },
                n_eff: c.n_eff,
                position: Polar {
                    r: c.r_um,
                    theta: c.theta_deg.to_radians(),
                },
            })
            .collect();
        let adjacency = l.adjacency.iter().map(|p| (p[0], p[1])).collect();
        McfLink::new(
            cores,
            l.length_km,
            l.core_pitch_um,
            l.cladding_diameter_um,
            adjacency,
        )
    }

    /// Design file describing `link`. Per-core anchor delays are written only
    /// where they differ from the first core's.
    pub fn from_link(link: &McfLink) -> Self {
        let first = &link.cores()[0].model;
        let cores = link
            .cores()
            .iter()
            .map(|c| CoreSection {
                id: c.id,
                a1_um: c.profile.a1,
                a2_um: c.profile.a2,
                w_um: c.profile.w,
                delta1_pct: c.profile.delta1,
                delta2_pct: c.profile.delta2,
                dispersion_ps_per_km_nm: c.model.dispersion,
                slope_ps_per_km_nm2: c.model.slope,
                n_eff: c.n_eff,
                r_um: c.position.r,
                theta_deg: c.position.theta.to_degrees(),
                tau_g0_ps_per_km: (c.model.tau_g0 != first.tau_g0).then_some(c.model.tau_g0),
            })
            .collect();
        Self {
            link: LinkSection {
                length_km: link.length_km,
                core_pitch_um: link.core_pitch_um,
                cladding_diameter_um: link.cladding_diameter_um,
                anchor_wavelength_nm: first.anchor_nm,
                tau_g0_ps_per_km: first.tau_g0,
                window_lo_nm: first.window.lo_nm,
                window_hi_nm: first.window.hi_nm,
                adjacency: link.adjacency().iter().map(|&(a, b)| [a, b]).collect(),
            },
            cores,
        }
    }
}
