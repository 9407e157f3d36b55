//! Fiber data model and the per-core Taylor group-delay model.
//!
//! Every core carries a second-order expansion of its group delay around a
//! shared anchor wavelength. Differential delays between adjacent cores
//! (spatial diversity) or adjacent sources in one core (wavelength diversity)
//! follow directly from those coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Group delay at the anchor wavelength shared by all cores when the design
/// does not state one, ps/km (group index ≈ 1.47).
pub const DEFAULT_TAU_G0_PS_PER_KM: f64 = 4.9e6;

pub const DEFAULT_ANCHOR_NM: f64 = 1550.0;

/// Trench-assisted step-index geometry of one core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreProfile {
    /// Core radius, μm.
    pub a1: f64,
    /// Core edge to trench distance, μm.
    pub a2: f64,
    /// Trench width, μm.
    pub w: f64,
    /// Core-to-cladding relative index difference, percent.
    pub delta1: f64,
    /// Cladding-to-trench relative index difference, percent.
    pub delta2: f64,
}

impl CoreProfile {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.a1 > 0.0) {
            v.push(format!("a1_um must be > 0 (got {})", self.a1));
        }
        if !(self.a2 >= 0.0) {
            v.push(format!("a2_um must be >= 0 (got {})", self.a2));
        }
        if !(self.w >= 0.0) {
            v.push(format!("w_um must be >= 0 (got {})", self.w));
        }
        if !(self.delta1 > 0.0) {
            v.push(format!("delta1_pct must be > 0 (got {})", self.delta1));
        }
        if !(self.delta2 > 0.0) {
            v.push(format!("delta2_pct must be > 0 (got {})", self.delta2));
        }
        v
    }
}

/// Closed wavelength interval over which a Taylor model may be evaluated, nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthWindow {
    pub lo_nm: f64,
    pub hi_nm: f64,
}

impl Default for WavelengthWindow {
    fn default() -> Self {
        Self {
            lo_nm: 1500.0,
            hi_nm: 1600.0,
        }
    }
}

impl WavelengthWindow {
    pub fn check(&self, wavelength_nm: f64) -> Result<()> {
        if (self.lo_nm..=self.hi_nm).contains(&wavelength_nm) {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                wavelength_nm,
                lo_nm: self.lo_nm,
                hi_nm: self.hi_nm,
            })
        }
    }
}

/// Second-order Taylor model of a core's group delay around `anchor_nm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub anchor_nm: f64,
    /// Group delay at the anchor, ps/km.
    pub tau_g0: f64,
    /// Chromatic dispersion D, ps/(km·nm).
    pub dispersion: f64,
    /// Dispersion slope S, ps/(km·nm²).
    pub slope: f64,
    pub window: WavelengthWindow,
}

impl DispersionModel {
    pub fn new(anchor_nm: f64, tau_g0: f64, dispersion: f64, slope: f64) -> Self {
        Self {
            anchor_nm,
            tau_g0,
            dispersion,
            slope,
            window: WavelengthWindow::default(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.anchor_nm > 0.0) {
            v.push(format!("anchor_wavelength_nm must be > 0 (got {})", self.anchor_nm));
        }
        if !self.tau_g0.is_finite() {
            v.push("tau_g0_ps_per_km must be finite".into());
        }
        if !self.dispersion.is_finite() {
            v.push("dispersion_ps_per_km_nm must be finite".into());
        }
        if !self.slope.is_finite() {
            v.push("slope_ps_per_km_nm2 must be finite".into());
        }
        if !(self.window.lo_nm < self.window.hi_nm) {
            v.push(format!(
                "validity window [{}, {}] is empty",
                self.window.lo_nm, self.window.hi_nm
            ));
        }
        v
    }

    /// Group delay at `wavelength_nm`, ps/km.
    pub fn group_delay(&self, wavelength_nm: f64) -> Result<f64> {
        self.window.check(wavelength_nm)?;
        Ok(self.eval_unchecked(wavelength_nm))
    }

    pub(crate) fn eval_unchecked(&self, wavelength_nm: f64) -> f64 {
        let dl = wavelength_nm - self.anchor_nm;
        self.tau_g0 + self.dispersion * dl + 0.5 * self.slope * dl * dl
    }
}

/// Position of a core centre in the fiber cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polar {
    /// Radial distance from the fiber axis, μm.
    pub r: f64,
    /// Azimuth, radians.
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCore {
    /// 1-based core number; sets the tap order.
    pub id: usize,
    pub profile: CoreProfile,
    pub model: DispersionModel,
    /// Effective index at the anchor wavelength.
    pub n_eff: f64,
    pub position: Polar,
}

impl FiberCore {
    pub fn group_delay(&self, wavelength_nm: f64) -> Result<f64> {
        self.model.group_delay(wavelength_nm)
    }

    /// Delay difference between sources `m` and `m + 1` of an `sources`-laser
    /// comb starting at `lambda1_nm` with spacing `delta_lambda_nm`, ps/km.
    pub fn wavelength_differential_delay(
        &self,
        lambda1_nm: f64,
        delta_lambda_nm: f64,
        m: usize,
        sources: usize,
    ) -> Result<f64> {
        if sources < 2 || m == 0 || m >= sources {
            return Err(Error::Index {
                what: "source",
                index: m,
                lo: 1,
                hi: sources.saturating_sub(1),
            });
        }
        if !(delta_lambda_nm > 0.0) {
            return Err(Error::Domain(format!(
                "source spacing must be > 0 nm (got {delta_lambda_nm})"
            )));
        }
        let window = &self.model.window;
        window.check(lambda1_nm)?;
        window.check(lambda1_nm + (sources - 1) as f64 * delta_lambda_nm)?;
        let DispersionModel {
            anchor_nm,
            dispersion,
            slope,
            ..
        } = self.model;
        let dl = delta_lambda_nm;
        Ok(dispersion * dl
            + slope * (lambda1_nm - anchor_nm) * dl
            + 0.5 * slope * (2 * m - 1) as f64 * dl * dl)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.profile.violations();
        v.extend(self.model.violations());
        if !(self.n_eff > 1.0 && self.n_eff < 2.0) {
            v.push(format!("n_eff must lie in (1, 2) (got {})", self.n_eff));
        }
        if !(self.position.r >= 0.0) {
            v.push(format!("r_um must be >= 0 (got {})", self.position.r));
        }
        if !self.position.theta.is_finite() {
            v.push("theta_deg must be finite".into());
        }
        v.into_iter()
            .map(|m| format!("core {}: {m}", self.id))
            .collect()
    }
}

/// A complete multicore fiber link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McfLink {
    cores: Vec<FiberCore>,
    /// km
    pub length_km: f64,
    /// Centre-to-centre spacing of adjacent cores, μm.
    pub core_pitch_um: f64,
    pub cladding_diameter_um: f64,
    adjacency: Vec<(usize, usize)>,
}

impl McfLink {
    /// Builds a link, sorting cores by id and normalizing adjacency pairs to
    /// `(low, high)` order. All invariant violations are reported together.
    pub fn new(
        mut cores: Vec<FiberCore>,
        length_km: f64,
        core_pitch_um: f64,
        cladding_diameter_um: f64,
        adjacency: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let mut v = Vec::new();
        if cores.is_empty() {
            v.push("link has no cores".to_string());
        }
        cores.sort_by_key(|c| c.id);
        for pair in cores.windows(2) {
            if pair[0].id == pair[1].id {
                v.push(format!("duplicate core id {}", pair[0].id));
            }
        }
        for c in &cores {
            v.extend(c.violations());
        }
        if !(length_km > 0.0) {
            v.push(format!("length_km must be > 0 (got {length_km})"));
        }
        if !(core_pitch_um > 0.0) {
            v.push(format!("core_pitch_um must be > 0 (got {core_pitch_um})"));
        }
        if !(cladding_diameter_um > 0.0) {
            v.push(format!(
                "cladding_diameter_um must be > 0 (got {cladding_diameter_um})"
            ));
        }
        let mut adj: Vec<(usize, usize)> = Vec::with_capacity(adjacency.len());
        for (a, b) in adjacency {
            if a == b {
                v.push(format!("adjacency pair ({a}, {b}) is a self-pair"));
                continue;
            }
            for id in [a, b] {
                if !cores.iter().any(|c| c.id == id) {
                    v.push(format!("adjacency references unknown core {id}"));
                }
            }
            adj.push((a.min(b), a.max(b)));
        }
        adj.sort_unstable();
        adj.dedup();
        if !v.is_empty() {
            return Err(Error::Invalid(v));
        }
        Ok(Self {
            cores,
            length_km,
            core_pitch_um,
            cladding_diameter_um,
            adjacency: adj,
        })
    }

    pub fn cores(&self) -> &[FiberCore] {
        &self.cores
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    /// Unordered adjacent pairs of core ids, each as `(low, high)`.
    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    pub fn core_by_id(&self, id: usize) -> Option<&FiberCore> {
        self.cores.iter().find(|c| c.id == id)
    }

    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        self.adjacency
            .iter()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Returns a copy with every core's dispersion model replaced by `f`.
    pub fn map_models<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&FiberCore) -> DispersionModel,
    {
        let mut out = self.clone();
        for c in &mut out.cores {
            c.model = f(c);
        }
        out
    }

    pub(crate) fn cores_mut(&mut self) -> &mut [FiberCore] {
        &mut self.cores
    }

    /// Group delay of every core at `wavelength_nm`, in core order, ps/km.
    pub fn delay_vector(&self, wavelength_nm: f64) -> Result<Vec<f64>> {
        self.cores
            .iter()
            .map(|c| c.group_delay(wavelength_nm))
            .collect()
    }

    /// Delay of core `n + 1` relative to core `n` (1-based position in core
    /// order), ps/km.
    pub fn spatial_differential_delay(&self, n: usize, wavelength_nm: f64) -> Result<f64> {
        let count = self.cores.len();
        if n == 0 || n >= count {
            return Err(Error::Index {
                what: "core",
                index: n,
                lo: 1,
                hi: count.saturating_sub(1),
            });
        }
        let (lo, hi) = (&self.cores[n - 1], &self.cores[n]);
        if lo.model.anchor_nm != hi.model.anchor_nm {
            return Err(Error::ModelConsistency(format!(
                "core {} anchors at {} nm, core {} at {} nm",
                lo.id, lo.model.anchor_nm, hi.id, hi.model.anchor_nm
            )));
        }
        lo.model.window.check(wavelength_nm)?;
        hi.model.window.check(wavelength_nm)?;
        // term by term, so the large common delay cancels exactly
        let dl = wavelength_nm - lo.model.anchor_nm;
        Ok((hi.model.tau_g0 - lo.model.tau_g0)
            + (hi.model.dispersion - lo.model.dispersion) * dl
            + 0.5 * (hi.model.slope - lo.model.slope) * dl * dl)
    }

    /// Consecutive delay differences across the whole core order, ps/km.
    pub fn increments(&self, wavelength_nm: f64) -> Result<Vec<f64>> {
        (1..self.cores.len())
            .map(|n| self.spatial_differential_delay(n, wavelength_nm))
            .collect()
    }

    /// Mean dispersion step between consecutive cores, ps/(km·nm).
    pub fn mean_dispersion_step(&self) -> f64 {
        let n = self.cores.len();
        if n < 2 {
            return 0.0;
        }
        (self.cores[n - 1].model.dispersion - self.cores[0].model.dispersion) / (n - 1) as f64
    }

    /// Mean tap-to-tap delay over the full link at `wavelength_nm`, seconds.
    pub fn mean_increment_seconds(&self, wavelength_nm: f64) -> Result<f64> {
        let d = self.delay_vector(wavelength_nm)?;
        let n = d.len();
        if n < 2 {
            return Err(Error::Shape("a single-core link has no delay increment".into()));
        }
        Ok(crate::units::delay_seconds(
            (d[n - 1] - d[0]) / (n - 1) as f64,
            self.length_km,
        ))
    }

    /// Largest deviation of the consecutive delay differences from the ideal
    /// linear increment `step·(λ − λ₀)`, ps/km.
    pub fn increment_deviation(&self, wavelength_nm: f64, step: f64) -> Result<f64> {
        let anchor = self.cores[0].model.anchor_nm;
        let ideal = step * (wavelength_nm - anchor);
        Ok(self
            .increments(wavelength_nm)?
            .into_iter()
            .map(|d| (d - ideal).abs())
            .fold(0.0, f64::max))
    }
}

/// The 7-core trench-assisted design with its reference core parameters,
/// 35 μm pitch, 125 μm cladding, 10 km length and hexagonal layout.
pub fn load_table1_link() -> McfLink {
    crate::config::FiberDesign::table1()
        .into_link()
        .expect("bundled design is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn core(d: f64, s: f64) -> FiberCore {
        FiberCore {
            id: 1,
            profile: CoreProfile {
                a1: 3.42,
                a2: 5.48,
                w: 3.02,
                delta1: 0.3864,
                delta2: 1.0,
            },
            model: DispersionModel::new(1550.0, 0.0, d, s),
            n_eff: 1.4534,
            position: Polar { r: 0.0, theta: 0.0 },
        }
    }

    #[test]
    fn anchor_returns_tau_g0() {
        let mut c = core(14.75, 0.065);
        c.model.tau_g0 = 1234.5;
        assert_eq!(c.group_delay(1550.0).unwrap(), 1234.5);
    }

    #[test]
    fn table1_core1_at_1560() {
        let c = core(14.75, 0.065);
        let v = c.group_delay(1560.0).unwrap();
        assert!((v - 150.75).abs() < 1e-12);
    }

    #[test]
    fn window_is_enforced() {
        let c = core(14.75, 0.065);
        let err = c.group_delay(1620.0).unwrap_err();
        assert!(err.to_string().contains("[1500, 1600]"));
    }

    #[test]
    fn wavelength_diversity_core1() {
        let c = core(14.75, 0.065);
        let v = c.wavelength_differential_delay(1550.0, 1.0, 1, 4).unwrap();
        assert!((v - 14.7825).abs() < 1e-12);
    }

    #[test]
    fn wavelength_diversity_zero_slope_ignores_m() {
        let c = core(17.0, 0.0);
        for m in 1..5 {
            let v = c.wavelength_differential_delay(1530.0, 0.8, m, 6).unwrap();
            assert!((v - 17.0 * 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn wavelength_diversity_index_errors() {
        let c = core(17.0, 0.06);
        assert!(matches!(
            c.wavelength_differential_delay(1550.0, 1.0, 0, 4),
            Err(Error::Index { .. })
        ));
        assert!(matches!(
            c.wavelength_differential_delay(1550.0, 1.0, 4, 4),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn wavelength_diversity_vanishes_with_spacing() {
        let c = core(17.0, 0.06);
        let v = c.wavelength_differential_delay(1550.0, 1e-9, 1, 2).unwrap();
        assert!(v.abs() < 1e-7);
    }

    #[test]
    fn table1_spatial_increment() {
        let link = load_table1_link();
        assert_eq!(link.spatial_differential_delay(1, 1550.0).unwrap(), 0.0);
        let v = link.spatial_differential_delay(1, 1560.0).unwrap();
        assert!((v - 9.95).abs() < 1e-6, "{v}");
        assert!(matches!(
            link.spatial_differential_delay(7, 1560.0),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn mismatched_anchor_is_rejected() {
        let link = load_table1_link();
        let mut bad = link.clone();
        bad.cores_mut()[1].model.anchor_nm = 1551.0;
        assert!(matches!(
            bad.spatial_differential_delay(1, 1560.0),
            Err(Error::ModelConsistency(_))
        ));
    }

    #[test]
    fn table1_link_contents() {
        let link = load_table1_link();
        assert_eq!(link.len(), 7);
        let c7 = link.core_by_id(7).unwrap();
        assert_eq!(c7.model.dispersion, 20.75);
        assert_eq!(c7.profile.a1, 4.98);
        assert_eq!(c7.n_eff, 1.4540);
        let ds: Vec<f64> = link.cores().iter().map(|c| c.model.dispersion).collect();
        assert_eq!(ds.first(), Some(&14.75));
        assert_eq!(ds.last(), Some(&20.75));
        for w in ds.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-12);
        }
        let center = link
            .cores()
            .iter()
            .find(|c| c.position.r == 0.0)
            .unwrap()
            .id;
        assert_eq!(link.neighbors(center).len(), 6);
        for c in link.cores().iter().filter(|c| c.id != center) {
            let nb = link.neighbors(c.id);
            assert_eq!(nb.len(), 3, "core {}", c.id);
            assert!(nb.contains(&center));
        }
    }

    #[test]
    fn delay_vector_at_anchor_is_flat() {
        let link = load_table1_link();
        let d = link.delay_vector(1550.0).unwrap();
        assert_eq!(d.len(), 7);
        assert!(d.iter().all(|&x| x == d[0]));
        let d = link.delay_vector(1560.0).unwrap();
        for w in d.windows(2) {
            assert!((w[1] - w[0] - 10.0).abs() <= 0.05 + 1e-9);
        }
    }

    #[test]
    fn single_core_delay_vector() {
        let link = McfLink::new(vec![core(17.0, 0.06)], 1.0, 35.0, 125.0, vec![]).unwrap();
        let d = link.delay_vector(1555.0).unwrap();
        assert_eq!(d, vec![link.cores()[0].group_delay(1555.0).unwrap()]);
    }

    #[test]
    fn link_reports_all_violations() {
        let mut a = core(17.0, 0.06);
        a.profile.a1 = -1.0;
        let b = core(18.0, 0.06);
        let err = McfLink::new(vec![a, b], -1.0, 35.0, 125.0, vec![(1, 1)]).unwrap_err();
        match err {
            Error::Invalid(v) => assert!(v.len() >= 4, "{v:?}"),
            e => panic!("{e}"),
        }
    }

    proptest! {
        #[test]
        fn taylor_consistency(lambda in 1500.0f64..1600.0, n in 1usize..7) {
            let link = load_table1_link();
            let d = link.spatial_differential_delay(n, lambda).unwrap();
            let c = link.cores();
            let (hi, lo) = (c[n].group_delay(lambda).unwrap(), c[n - 1].group_delay(lambda).unwrap());
            // the direct difference carries the rounding of the full delays
            prop_assert!((d - (hi - lo)).abs() <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()));
        }

        #[test]
        fn telescoping(l1 in 1500.0f64..1540.0, dl in 0.1f64..5.0, sources in 2usize..12) {
            let link = load_table1_link();
            for c in link.cores() {
                let sum: f64 = (1..sources)
                    .map(|m| c.wavelength_differential_delay(l1, dl, m, sources).unwrap())
                    .sum();
                let lm = l1 + (sources - 1) as f64 * dl;
                // zero the constant so the difference does not cancel 4.9e6 ps/km
                let model = DispersionModel { tau_g0: 0.0, ..c.model };
                let direct = model.eval_unchecked(lm) - model.eval_unchecked(l1);
                prop_assert!((sum - direct).abs() <= 1e-9 * direct.abs().max(1.0));
            }
        }

        #[test]
        fn linear_increment_bound(lambda in 1530.0f64..1570.0) {
            let link = load_table1_link();
            let dev = link.increment_deviation(lambda, 1.0).unwrap();
            let bound = 0.5 * 0.001 * (lambda - 1550.0).powi(2);
            prop_assert!(dev <= bound + 1e-8, "{} > {}", dev, bound);
        }
    }
}
