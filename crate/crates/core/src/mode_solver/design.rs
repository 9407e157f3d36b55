//! Inverse design: pick core geometry for a target dispersion and a target
//! group delay at the anchor wavelength.
//!
//! Inner level: the core radius is root-found so that D(a1) hits the target
//! at fixed trench geometry and core contrast. Outer level: the core contrast
//! is root-found so that the group delay hits its target. If no contrast in
//! bounds brackets the delay target, the core-to-trench distance and then
//! the trench width are stepped through their bounds.

use serde::{Deserialize, Serialize};

use crate::bend_twist::{optimize_arrangement, LayoutTemplate};
use crate::error::{Error, Result};
use crate::fiber_model::{CoreProfile, DispersionModel, FiberCore, McfLink, Polar};
use crate::roots::brent;

use super::dispersion::{dispersion_from_neff, DispersionCoefficients, DEFAULT_STENCIL_STEP_NM};

/// Grid points used to bracket each search level before refinement.
const SCAN_POINTS: usize = 9;

/// Residual limits every successful design honours.
pub const MAX_DISPERSION_RESIDUAL: f64 = 0.05;
pub const MAX_TAU_RESIDUAL_PS_PER_KM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignTarget {
    /// ps/(km·nm)
    pub dispersion: f64,
    /// ps/km
    pub tau_g0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignBounds {
    pub a1_um: (f64, f64),
    pub delta1_pct: (f64, f64),
    pub a2_um: (f64, f64),
    pub w_um: (f64, f64),
    /// Trench geometry tried first.
    pub a2_start_um: f64,
    pub w_start_um: f64,
    pub delta2_pct: f64,
    pub anchor_nm: f64,
    pub stencil_step_nm: f64,
}

impl Default for DesignBounds {
    fn default() -> Self {
        Self {
            a1_um: (2.3, 5.0),
            delta1_pct: (0.55, 0.9),
            a2_um: (2.0, 6.0),
            w_um: (2.0, 6.0),
            a2_start_um: 4.0,
            w_start_um: 4.0,
            delta2_pct: 1.0,
            anchor_nm: 1550.0,
            stencil_step_nm: DEFAULT_STENCIL_STEP_NM,
        }
    }
}

impl DesignBounds {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut range = |name: &str, (lo, hi): (f64, f64), min: f64| {
            if !(lo >= min && hi > lo) {
                v.push(format!("{name} bounds [{lo}, {hi}] must satisfy {min} <= lo < hi"));
            }
        };
        range("a1_um", self.a1_um, f64::MIN_POSITIVE);
        range("delta1_pct", self.delta1_pct, f64::MIN_POSITIVE);
        range("a2_um", self.a2_um, 0.0);
        range("w_um", self.w_um, 0.0);
        if !(self.delta2_pct > 0.0) {
            v.push(format!("delta2_pct must be > 0 (got {})", self.delta2_pct));
        }
        if !(self.stencil_step_nm > 0.0) {
            v.push(format!(
                "stencil_step_nm must be > 0 (got {})",
                self.stencil_step_nm
            ));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOutcome {
    pub profile: CoreProfile,
    pub achieved: DispersionCoefficients,
}

impl DesignOutcome {
    pub fn dispersion_residual(&self, target: &DesignTarget) -> f64 {
        self.achieved.dispersion - target.dispersion
    }

    pub fn tau_residual(&self, target: &DesignTarget) -> f64 {
        self.achieved.tau_g - target.tau_g0
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

struct Search<'a> {
    bounds: &'a DesignBounds,
}

impl Search<'_> {
    fn coefficients(&self, p: &CoreProfile) -> Result<DispersionCoefficients> {
        dispersion_from_neff(p, self.bounds.anchor_nm, self.bounds.stencil_step_nm)
    }

    /// Core radius hitting `target_d` with everything else in `base` fixed.
    /// Takes the largest-radius crossing. `Err` carries the D values seen.
    fn radius_for_dispersion(
        &self,
        base: CoreProfile,
        target_d: f64,
    ) -> Result<std::result::Result<DesignOutcome, (f64, f64)>> {
        let (lo, hi) = self.bounds.a1_um;
        let eval = |a1: f64| self.coefficients(&CoreProfile { a1, ..base }).map(|c| c.dispersion - target_d);
        let mut seen = (f64::INFINITY, f64::NEG_INFINITY);
        let mut prev: Option<(f64, f64)> = None;
        let mut bracket = None;
        for a1 in linspace(lo, hi, SCAN_POINTS) {
            let Ok(r) = eval(a1) else {
                prev = None;
                continue;
            };
            seen = (seen.0.min(r + target_d), seen.1.max(r + target_d));
            if let Some((pa, pr)) = prev {
                if pr.signum() != r.signum() || r == 0.0 {
                    bracket = Some((pa, a1));
                }
            }
            prev = Some((a1, r));
        }
        let Some((a, b)) = bracket else {
            return Ok(Err(seen));
        };
        let a1 = brent(&eval, a, b, 1e-12, 200)?;
        let profile = CoreProfile { a1, ..base };
        Ok(Ok(DesignOutcome {
            profile,
            achieved: self.coefficients(&profile)?,
        }))
    }

    /// Group delay reached at contrast `delta1` once the radius is fitted.
    fn tau_at(&self, base: CoreProfile, delta1: f64, target_d: f64) -> Result<Option<DesignOutcome>> {
        Ok(self
            .radius_for_dispersion(CoreProfile { delta1, ..base }, target_d)?
            .ok())
    }

    fn solve_with_geometry(&self, base: CoreProfile, target: &DesignTarget) -> Result<Option<DesignOutcome>> {
        let (lo, hi) = self.bounds.delta1_pct;
        let mut prev: Option<(f64, f64)> = None;
        let mut bracket = None;
        for d1 in linspace(lo, hi, SCAN_POINTS) {
            let Some(o) = self.tau_at(base, d1, target.dispersion)? else {
                prev = None;
                continue;
            };
            let r = o.achieved.tau_g - target.tau_g0;
            if let Some((pd, pr)) = prev {
                if pr.signum() != r.signum() || r == 0.0 {
                    bracket = Some((pd, d1));
                    break;
                }
            }
            prev = Some((d1, r));
        }
        let Some((a, b)) = bracket else {
            return Ok(None);
        };
        let g = |d1: f64| -> Result<f64> {
            self.tau_at(base, d1, target.dispersion)?
                .map(|o| o.achieved.tau_g - target.tau_g0)
                .ok_or_else(|| Error::Infeasible(format!("dispersion target lost at delta1 = {d1}")))
        };
        let d1 = brent(&g, a, b, 1e-13, 200)?;
        self.tau_at(base, d1, target.dispersion)
    }
}

/// Range of group delays reachable for `target_d` over the contrast bounds at
/// the starting trench geometry, ps/km.
pub fn reachable_tau_range(target_d: f64, bounds: &DesignBounds) -> Result<Option<(f64, f64)>> {
    let s = Search { bounds };
    let base = CoreProfile {
        a1: bounds.a1_um.0,
        a2: bounds.a2_start_um,
        w: bounds.w_start_um,
        delta1: bounds.delta1_pct.0,
        delta2: bounds.delta2_pct,
    };
    let mut range: Option<(f64, f64)> = None;
    for d1 in linspace(bounds.delta1_pct.0, bounds.delta1_pct.1, SCAN_POINTS) {
        if let Some(o) = s.tau_at(base, d1, target_d)? {
            let t = o.achieved.tau_g;
            range = Some(range.map_or((t, t), |(lo, hi)| (lo.min(t), hi.max(t))));
        }
    }
    Ok(range)
}

/// Core profile whose LP01 mode has dispersion `target.dispersion` and group
/// delay `target.tau_g0` at the anchor wavelength.
pub fn design_core(target: &DesignTarget, bounds: &DesignBounds) -> Result<DesignOutcome> {
    let v = bounds.violations();
    if !v.is_empty() {
        return Err(Error::Invalid(v));
    }
    let s = Search { bounds };
    let start = CoreProfile {
        a1: bounds.a1_um.0,
        a2: bounds.a2_start_um,
        w: bounds.w_start_um,
        delta1: bounds.delta1_pct.0,
        delta2: bounds.delta2_pct,
    };

    // probe the dispersion range first so an unreachable D is reported as such
    let mut d_seen = (f64::INFINITY, f64::NEG_INFINITY);
    let mut any_d = false;
    for d1 in [bounds.delta1_pct.0, bounds.delta1_pct.1] {
        match s.radius_for_dispersion(CoreProfile { delta1: d1, ..start }, target.dispersion)? {
            Ok(_) => any_d = true,
            Err((lo, hi)) => d_seen = (d_seen.0.min(lo), d_seen.1.max(hi)),
        }
    }
    if !any_d
        && s.tau_at(
            start,
            0.5 * (bounds.delta1_pct.0 + bounds.delta1_pct.1),
            target.dispersion,
        )?
        .is_none()
    {
        return Err(Error::Infeasible(format!(
            "D = {} ps/(km·nm) outside the reachable range [{:.3}, {:.3}] within bounds",
            target.dispersion, d_seen.0, d_seen.1
        )));
    }

    let mut geometries = vec![(bounds.a2_start_um, bounds.w_start_um)];
    geometries.extend(linspace(bounds.a2_um.0, bounds.a2_um.1, 5).map(|a2| (a2, bounds.w_start_um)));
    geometries.extend(linspace(bounds.w_um.0, bounds.w_um.1, 5).map(|w| (bounds.a2_start_um, w)));
    for (a2, w) in geometries {
        if let Some(outcome) = s.solve_with_geometry(CoreProfile { a2, w, ..start }, target)? {
            let dd = outcome.dispersion_residual(target).abs();
            let dt = outcome.tau_residual(target).abs();
            if dd < MAX_DISPERSION_RESIDUAL && dt < MAX_TAU_RESIDUAL_PS_PER_KM {
                return Ok(outcome);
            }
        }
    }
    let tau = reachable_tau_range(target.dispersion, bounds)?;
    Err(Error::Infeasible(match tau {
        Some((lo, hi)) => format!(
            "tau_g0 = {} ps/km not reachable for D = {}; start geometry spans [{lo:.3}, {hi:.3}] ps/km",
            target.tau_g0, target.dispersion
        ),
        None => format!("no geometry in bounds reaches D = {}", target.dispersion),
    }))
}

/// Designs one core per dispersion target, all sharing a group delay at the
/// anchor. Without an explicit delay, the midpoint of the delay range every
/// target can reach is used.
pub fn design_cores(
    dispersions: &[f64],
    tau_g0: Option<f64>,
    bounds: &DesignBounds,
) -> Result<(f64, Vec<DesignOutcome>)> {
    use rayon::prelude::*;
    let tau = match tau_g0 {
        Some(t) => t,
        None => {
            let ranges: Vec<Option<(f64, f64)>> = dispersions
                .par_iter()
                .map(|&d| reachable_tau_range(d, bounds))
                .collect::<Result<_>>()?;
            let mut common = (f64::NEG_INFINITY, f64::INFINITY);
            for (d, r) in dispersions.iter().zip(&ranges) {
                let (lo, hi) =
                    r.ok_or_else(|| Error::Infeasible(format!("no geometry in bounds reaches D = {d}")))?;
                common = (common.0.max(lo), common.1.min(hi));
            }
            if common.0 > common.1 {
                return Err(Error::Infeasible(format!(
                    "reachable group delays do not overlap (best window [{:.3}, {:.3}] ps/km is empty)",
                    common.0, common.1
                )));
            }
            0.5 * (common.0 + common.1)
        }
    };
    let outcomes = dispersions
        .par_iter()
        .map(|&d| {
            design_core(
                &DesignTarget {
                    dispersion: d,
                    tau_g0: tau,
                },
                bounds,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((tau, outcomes))
}

/// Geometry of the link a set of designed cores is assembled into.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    pub layout: LayoutTemplate,
    pub length_km: f64,
    pub core_pitch_um: f64,
    pub cladding_diameter_um: f64,
}

impl LinkGeometry {
    pub fn hexagonal7(length_km: f64, core_pitch_um: f64, cladding_diameter_um: f64) -> Self {
        Self {
            layout: LayoutTemplate::hexagonal7(core_pitch_um),
            length_km,
            core_pitch_um,
            cladding_diameter_um,
        }
    }
}

/// Link whose core `k + 1` carries `outcomes[k]`, placed on `geometry` by
/// the threshold-radius arrangement search.
pub fn designed_link(outcomes: &[DesignOutcome], geometry: &LinkGeometry, bounds: &DesignBounds) -> Result<McfLink> {
    let mut cores: Vec<FiberCore> = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| FiberCore {
            id: k + 1,
            profile: o.profile,
            model: DispersionModel::new(
                bounds.anchor_nm,
                o.achieved.tau_g,
                o.achieved.dispersion,
                o.achieved.slope,
            ),
            n_eff: o.achieved.n_eff,
            position: Polar { r: 0.0, theta: 0.0 },
        })
        .collect();
    let arrangement = optimize_arrangement(&cores, &geometry.layout, geometry.core_pitch_um)?;
    for (id, pos) in arrangement.positions(&geometry.layout) {
        cores[id - 1].position = pos;
    }
    McfLink::new(
        cores,
        geometry.length_km,
        geometry.core_pitch_um,
        geometry.cladding_diameter_um,
        arrangement.core_adjacency(&geometry.layout),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_recovers_outputs() {
        let bounds = DesignBounds::default();
        let source = CoreProfile {
            a1: 3.1,
            a2: 4.0,
            w: 4.0,
            delta1: 0.68,
            delta2: 1.0,
        };
        let c = dispersion_from_neff(&source, 1550.0, 2.0).unwrap();
        let target = DesignTarget {
            dispersion: c.dispersion,
            tau_g0: c.tau_g,
        };
        let out = design_core(&target, &bounds).unwrap();
        assert!(out.dispersion_residual(&target).abs() < 1e-3);
        assert!(out.tau_residual(&target).abs() < 1e-2);
        assert!((out.profile.a1 - source.a1).abs() < 1e-3);
    }

    #[test]
    fn unreachable_dispersion_is_infeasible() {
        let bounds = DesignBounds::default();
        let err = design_core(
            &DesignTarget {
                dispersion: 60.0,
                tau_g0: 4.91e6,
            },
            &bounds,
        )
        .unwrap_err();
        match err {
            Error::Infeasible(msg) => assert!(msg.contains("reachable range"), "{msg}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_bounds_are_reported() {
        let bounds = DesignBounds {
            a1_um: (5.0, 2.0),
            ..DesignBounds::default()
        };
        assert!(matches!(
            design_core(
                &DesignTarget {
                    dispersion: 17.0,
                    tau_g0: 4.91e6
                },
                &bounds
            ),
            Err(Error::Invalid(_))
        ));
    }
}
