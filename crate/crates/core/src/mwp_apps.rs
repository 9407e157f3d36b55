//! Application kernels driven by the tap delays: the incoherent FIR
//! microwave photonic filter and the 1-D phased-array beamformer.
//!
//! Angles use the broadside convention, θ ∈ [−90°, 90°] measured from the
//! array normal. [`polar_angle_deg`] maps them to a polar-plot presentation
//! where broadside renders at 90°.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_model::{FiberCore, McfLink};
use crate::units::{delay_seconds, C_M_PER_S};

/// Default RF grid: 0–20 GHz at 10 MHz.
pub const DEFAULT_FREQ_STOP_HZ: f64 = 20e9;
pub const DEFAULT_FREQ_STEP_HZ: f64 = 10e6;
/// Default angle grid: −90°–90° at 0.1°.
pub const DEFAULT_ANGLE_STEP_DEG: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// One tap per core, delays set by the core dispersion at one wavelength.
    Spatial,
    /// One tap per laser of an equally spaced comb through a single core.
    Wavelength {
        lambda1_nm: f64,
        delta_lambda_nm: f64,
        sources: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapConfig {
    pub weights: Vec<Complex64>,
    pub regime: Regime,
    /// Antenna element spacing, m.
    pub element_spacing_m: Option<f64>,
    /// RF carrier driving the array, Hz.
    pub carrier_hz: Option<f64>,
}

impl TapConfig {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![Complex64::new(1.0, 0.0); n],
            regime: Regime::Spatial,
            element_spacing_m: None,
            carrier_hz: None,
        }
    }

    pub fn with_array(mut self, element_spacing_m: f64, carrier_hz: f64) -> Self {
        self.element_spacing_m = Some(element_spacing_m);
        self.carrier_hz = Some(carrier_hz);
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.weights.len() < 2 {
            v.push(format!("at least 2 taps required (got {})", self.weights.len()));
        }
        if self.weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            v.push("tap weights must be finite".into());
        } else if self.weights.iter().all(|w| w.norm() == 0.0) {
            v.push("tap weights are all zero".into());
        }
        if let Regime::Wavelength {
            delta_lambda_nm,
            sources,
            ..
        } = self.regime
        {
            if sources != self.weights.len() {
                v.push(format!(
                    "wavelength regime has {sources} sources but {} weights",
                    self.weights.len()
                ));
            }
            if !(delta_lambda_nm > 0.0) {
                v.push(format!("delta_lambda_nm must be > 0 (got {delta_lambda_nm})"));
            }
        }
        if let Some(d) = self.element_spacing_m {
            if !(d > 0.0) {
                v.push(format!("element_spacing_m must be > 0 (got {d})"));
            }
        }
        if let Some(f) = self.carrier_hz {
            if !(f > 0.0) {
                v.push(format!("carrier_hz must be > 0 (got {f})"));
            }
        }
        v
    }

    fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyResponse {
    pub frequencies_hz: Vec<f64>,
    /// |H(f)| before normalization.
    pub magnitude: Vec<f64>,
    /// |H(f)| relative to its largest value on the grid, dB.
    pub magnitude_db: Vec<f64>,
    /// Free spectral range, reported for uniform increments only.
    pub fsr_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiationPattern {
    pub angles_deg: Vec<f64>,
    /// |AF(θ)| before normalization.
    pub magnitude: Vec<f64>,
    pub af_db: Vec<f64>,
    pub main_lobe_deg: f64,
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + step * i as f64).collect()
}

pub fn default_frequency_grid() -> Vec<f64> {
    grid(0.0, DEFAULT_FREQ_STOP_HZ, DEFAULT_FREQ_STEP_HZ)
}

pub fn default_angle_grid() -> Vec<f64> {
    (0..=1800).map(|i| -90.0 + DEFAULT_ANGLE_STEP_DEG * i as f64).collect()
}

/// |Σₙ aₙ·e^(−j·2π·x·tₙ)| for every x in `xs`.
fn phasor_sum_magnitudes(weights: &[Complex64], times: &[f64], xs: &[f64]) -> Vec<f64> {
    xs.par_iter()
        .map(|&x| {
            weights
                .iter()
                .zip(times)
                .map(|(a, &t)| a * Complex64::from_polar(1.0, -2.0 * PI * x * t))
                .sum::<Complex64>()
                .norm()
        })
        .collect()
}

fn to_db(magnitude: &[f64]) -> Vec<f64> {
    let peak = magnitude.iter().cloned().fold(0.0, f64::max);
    magnitude.iter().map(|&m| 20.0 * (m / peak).log10()).collect()
}

/// Filter response for uniform tap spacing `delay_increment_s` (total per
/// tap, seconds).
pub fn filter_response(delay_increment_s: f64, taps: &TapConfig, f_grid: &[f64]) -> Result<FrequencyResponse> {
    taps.check()?;
    if !(delay_increment_s > 0.0) || !delay_increment_s.is_finite() {
        return Err(Error::Domain(format!(
            "delay increment must be > 0 s (got {delay_increment_s})"
        )));
    }
    let times: Vec<f64> = (0..taps.len()).map(|n| n as f64 * delay_increment_s).collect();
    let magnitude = phasor_sum_magnitudes(&taps.weights, &times, f_grid);
    Ok(FrequencyResponse {
        frequencies_hz: f_grid.to_vec(),
        magnitude_db: to_db(&magnitude),
        magnitude,
        fsr_hz: Some(1.0 / delay_increment_s),
    })
}

/// Filter response for arbitrary per-tap delays (seconds). No FSR is
/// reported.
pub fn filter_response_delays(tap_delays_s: &[f64], taps: &TapConfig, f_grid: &[f64]) -> Result<FrequencyResponse> {
    taps.check()?;
    if tap_delays_s.len() != taps.len() {
        return Err(Error::Shape(format!(
            "{} tap delays for {} weights",
            tap_delays_s.len(),
            taps.len()
        )));
    }
    let magnitude = phasor_sum_magnitudes(&taps.weights, tap_delays_s, f_grid);
    Ok(FrequencyResponse {
        frequencies_hz: f_grid.to_vec(),
        magnitude_db: to_db(&magnitude),
        magnitude,
        fsr_hz: None,
    })
}

/// Per-tap delays relative to the first core, ps/km, slope terms included.
pub fn spatial_tap_delays_ps_per_km(link: &McfLink, wavelength_nm: f64) -> Result<Vec<f64>> {
    let first = &link.cores()[0].model;
    first.window.check(wavelength_nm)?;
    link.cores()
        .iter()
        .map(|c| {
            let m = &c.model;
            m.window.check(wavelength_nm)?;
            if m.anchor_nm != first.anchor_nm {
                return Err(Error::ModelConsistency(format!(
                    "core {} anchors at {} nm, core {} at {} nm",
                    c.id,
                    m.anchor_nm,
                    link.cores()[0].id,
                    first.anchor_nm
                )));
            }
            let x = wavelength_nm - first.anchor_nm;
            Ok((m.tau_g0 - first.tau_g0)
                + (m.dispersion - first.dispersion) * x
                + 0.5 * (m.slope - first.slope) * x * x)
        })
        .collect()
}

/// Per-tap delays relative to the first core over the whole link, seconds.
pub fn spatial_tap_delays(link: &McfLink, wavelength_nm: f64) -> Result<Vec<f64>> {
    Ok(spatial_tap_delays_ps_per_km(link, wavelength_nm)?
        .into_iter()
        .map(|d| delay_seconds(d, link.length_km))
        .collect())
}

/// Per-tap delays of a laser comb through one core, relative to the first
/// laser, seconds.
pub fn wavelength_tap_delays(
    core: &FiberCore,
    length_km: f64,
    lambda1_nm: f64,
    delta_lambda_nm: f64,
    sources: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for m in 1..sources {
        acc += core.wavelength_differential_delay(lambda1_nm, delta_lambda_nm, m, sources)?;
        out.push(delay_seconds(acc, length_km));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResponse {
    pub response: FrequencyResponse,
    /// Ideal uniform-increment filter with the link's mean increment.
    pub ideal: Option<FrequencyResponse>,
    /// Per-tap delays used, seconds.
    pub tap_delays_s: Vec<f64>,
    /// Set when every increment is identical; the response is then the
    /// uniform-path result for this increment.
    pub uniform_increment_s: Option<f64>,
    /// Drop of the passband peak relative to the ideal filter, dB.
    pub peak_degradation_db: f64,
    /// Largest |ideal − exact| on the grid, relative to the ideal peak.
    pub max_deviation: f64,
}

/// Filter response of `link` at `wavelength_nm` from the full per-core
/// delays, compared against the ideal uniform filter.
pub fn filter_response_exact(
    link: &McfLink,
    wavelength_nm: f64,
    taps: &TapConfig,
    f_grid: &[f64],
) -> Result<ExactResponse> {
    taps.check()?;
    if taps.regime != Regime::Spatial {
        return Err(Error::Domain("the exact link response applies to the spatial regime".into()));
    }
    if taps.len() != link.len() {
        return Err(Error::Shape(format!("{} weights for {} cores", taps.len(), link.len())));
    }
    let rel = spatial_tap_delays_ps_per_km(link, wavelength_nm)?;
    let rel_step = rel[1] - rel[0];
    let uniform = rel_step > 0.0 && rel.windows(2).all(|w| w[1] - w[0] == rel_step);
    let step = delay_seconds(rel_step, link.length_km);
    let delays: Vec<f64> = rel.iter().map(|&d| delay_seconds(d, link.length_km)).collect();
    let response = if uniform {
        filter_response(step, taps, f_grid)?
    } else {
        filter_response_delays(&delays, taps, f_grid)?
    };
    let mean = (delays[delays.len() - 1] - delays[0]) / (delays.len() - 1) as f64;
    let ideal = if mean > 0.0 {
        Some(filter_response(mean, taps, f_grid)?)
    } else {
        None
    };
    let (peak_degradation_db, max_deviation) = match &ideal {
        Some(i) => {
            let pi = i.magnitude.iter().cloned().fold(0.0, f64::max);
            let pe = response.magnitude.iter().cloned().fold(0.0, f64::max);
            let dev = i
                .magnitude
                .iter()
                .zip(&response.magnitude)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (20.0 * (pi / pe).log10(), dev / pi)
        }
        None => (0.0, 0.0),
    };
    Ok(ExactResponse {
        response,
        ideal,
        tap_delays_s: delays,
        uniform_increment_s: uniform.then_some(step),
        peak_degradation_db,
        max_deviation,
    })
}

fn array_settings(taps: &TapConfig) -> Result<(f64, f64)> {
    taps.check()?;
    let d = taps
        .element_spacing_m
        .ok_or_else(|| Error::Invalid(vec!["element_spacing_m is required for beamforming".into()]))?;
    let nu = taps
        .carrier_hz
        .ok_or_else(|| Error::Invalid(vec!["carrier_hz is required for beamforming".into()]))?;
    Ok((d, nu))
}

/// Normalized array factor over `theta_grid_deg` for a uniform tap delay
/// increment (seconds), evaluated at the configured RF carrier.
pub fn array_factor(delay_increment_s: f64, taps: &TapConfig, theta_grid_deg: &[f64]) -> Result<RadiationPattern> {
    let (d, nu) = array_settings(taps)?;
    if !delay_increment_s.is_finite() {
        return Err(Error::Domain("delay increment must be finite".into()));
    }
    let magnitude: Vec<f64> = theta_grid_deg
        .par_iter()
        .map(|&th| {
            let t = delay_increment_s - d * th.to_radians().sin() / C_M_PER_S;
            taps.weights
                .iter()
                .enumerate()
                .map(|(n, a)| a * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * nu * t))
                .sum::<Complex64>()
                .norm()
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, (&m, &th)) in magnitude.iter().zip(theta_grid_deg).enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let (mb, tb) = (magnitude[b], theta_grid_deg[b]);
                let better = m > mb || (m == mb && (th.abs() < tb.abs() || (th.abs() == tb.abs() && th < tb)));
                Some(if better { i } else { b })
            }
        };
    }
    let main_lobe_deg = best.map_or(f64::NAN, |i| theta_grid_deg[i]);
    Ok(RadiationPattern {
        angles_deg: theta_grid_deg.to_vec(),
        af_db: to_db(&magnitude),
        magnitude,
        main_lobe_deg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Steering {
    /// The nominal lobe lies in the visible region.
    Direct { angle_deg: f64 },
    /// The nominal lobe is invisible; this grating lobe of order `k` is the
    /// one nearest to it.
    Aliased {
        angle_deg: f64,
        k: i64,
        nominal_sin: f64,
    },
}

impl Steering {
    pub fn angle_deg(&self) -> f64 {
        match *self {
            Steering::Direct { angle_deg } | Steering::Aliased { angle_deg, .. } => angle_deg,
        }
    }

    pub fn is_aliased(&self) -> bool {
        matches!(self, Steering::Aliased { .. })
    }
}

/// Beam direction for tap increment `delay_increment_s` and element spacing
/// `element_spacing_m`. An invisible nominal lobe needs `carrier_hz` to find
/// the grating lobe that takes its place.
pub fn steering_angle(delay_increment_s: f64, element_spacing_m: f64, carrier_hz: Option<f64>) -> Result<Steering> {
    if !(element_spacing_m > 0.0) {
        return Err(Error::Domain(format!(
            "element spacing must be > 0 m (got {element_spacing_m})"
        )));
    }
    let s = C_M_PER_S * delay_increment_s / element_spacing_m;
    if !s.is_finite() {
        return Err(Error::Domain("delay increment must be finite".into()));
    }
    if s.abs() <= 1.0 {
        return Ok(Steering::Direct {
            angle_deg: s.asin().to_degrees(),
        });
    }
    let Some(nu) = carrier_hz.filter(|&f| f > 0.0) else {
        return Err(Error::NoVisibleLobe { sin_theta: s });
    };
    let period = C_M_PER_S / (nu * element_spacing_m);
    let k = ((s.abs() - 1.0) / period).ceil() as i64;
    let aliased = s.abs() - k as f64 * period;
    if aliased < -1.0 {
        return Err(Error::NoVisibleLobe { sin_theta: s });
    }
    let sin = s.signum() * aliased;
    Ok(Steering::Aliased {
        angle_deg: sin.asin().to_degrees(),
        k: k * s.signum() as i64,
        nominal_sin: s,
    })
}

/// Polar-plot presentation of a broadside angle: broadside at 90°, the two
/// endfire directions at 0° and 180°.
pub fn polar_angle_deg(broadside_deg: f64) -> f64 {
    90.0 + broadside_deg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber_model::load_table1_link;
    use proptest::prelude::*;

    fn taps7() -> TapConfig {
        TapConfig::uniform(7)
    }

    #[test]
    fn dc_is_tap_sum() {
        let mut t = taps7();
        t.weights[2] = Complex64::new(0.5, 0.25);
        let r = filter_response(100e-12, &t, &[0.0]).unwrap();
        let sum: Complex64 = t.weights.iter().sum();
        assert!((r.magnitude[0] - sum.norm()).abs() < 1e-14);
        let u = filter_response(100e-12, &taps7(), &[0.0, 1e9]).unwrap();
        assert_eq!(u.magnitude[0], 7.0);
        assert_eq!(u.magnitude_db[0], 0.0);
    }

    #[test]
    fn fsr_from_link() {
        let link = load_table1_link();
        for (l, fsr) in [(1560.0, 10e9), (1575.0, 4e9)] {
            let dt = link.mean_increment_seconds(l).unwrap();
            let r = filter_response(dt, &taps7(), &[0.0]).unwrap();
            assert!((r.fsr_hz.unwrap() / fsr - 1.0).abs() < 0.005);
        }
    }

    #[test]
    fn nulls_at_fsr_sevenths() {
        let dt = 100e-12;
        let fsr = 1.0 / dt;
        let f: Vec<f64> = (1..14).filter(|k| k % 7 != 0).map(|k| k as f64 * fsr / 7.0).collect();
        let r = filter_response(dt, &taps7(), &f).unwrap();
        assert!(r.magnitude.iter().all(|&m| m < 1e-12), "{:?}", r.magnitude);
        let peaks = filter_response(dt, &taps7(), &[fsr, 2.0 * fsr]).unwrap();
        assert!(peaks.magnitude.iter().all(|&m| (m - 7.0).abs() < 1e-9));
    }

    #[test]
    fn non_positive_increment_is_domain_error() {
        assert!(matches!(
            filter_response(0.0, &taps7(), &[0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exact_response_close_to_ideal() {
        let link = load_table1_link();
        let e = filter_response_exact(&link, 1560.0, &taps7(), &default_frequency_grid()).unwrap();
        assert!(e.peak_degradation_db.abs() < 0.1, "{}", e.peak_degradation_db);
        assert!(e.uniform_increment_s.is_none());
        assert!(e.response.fsr_hz.is_none());
    }

    #[test]
    fn equal_slopes_restore_uniform_path() {
        let link = load_table1_link().map_models(|c| {
            let mut m = c.model;
            m.slope = 0.065;
            m
        });
        let grid = default_frequency_grid();
        let e = filter_response_exact(&link, 1560.0, &taps7(), &grid).unwrap();
        let dt = e.uniform_increment_s.expect("uniform");
        assert!((dt - 100e-12).abs() < 1e-20);
        assert_eq!(e.response, filter_response(dt, &taps7(), &grid).unwrap());
    }

    #[test]
    fn exact_response_at_anchor_is_flat() {
        let link = load_table1_link();
        let e = filter_response_exact(&link, 1550.0, &taps7(), &[0.0, 3e9, 7e9]).unwrap();
        assert!(e.response.magnitude.iter().all(|&m| m == 7.0));
        assert!(e.ideal.is_none());
    }

    #[test]
    fn broadside_without_delay() {
        let t = taps7().with_array(0.03, 5e9);
        let p = array_factor(0.0, &t, &default_angle_grid()).unwrap();
        assert_eq!(p.main_lobe_deg, 0.0);
        assert_eq!(steering_angle(0.0, 0.03, None).unwrap(), Steering::Direct { angle_deg: 0.0 });
    }

    #[test]
    fn hundred_ps_steers_near_endfire() {
        let s = steering_angle(100e-12, 0.03, Some(5e9)).unwrap();
        assert!(!s.is_aliased());
        // sinθ = c·Δτ/d = 0.99931 with the exact speed of light
        assert!((s.angle_deg() - 87.87).abs() < 0.01, "{s:?}");
        let t = taps7().with_array(0.03, 5e9);
        let p = array_factor(100e-12, &t, &default_angle_grid()).unwrap();
        // d is just over half an RF wavelength, so the mirrored grating lobe
        // near −90° is as strong as the steered one
        let i = p.angles_deg.iter().position(|&a| (a - 87.9).abs() < 1e-9).unwrap();
        let peak = p.magnitude.iter().cloned().fold(0.0, f64::max);
        assert!(p.magnitude[i] > peak * (1.0 - 1e-4));
        assert!(p.main_lobe_deg.abs() > 87.0);
    }

    #[test]
    fn aliased_lobe_at_250ps() {
        let s = steering_angle(250e-12, 0.03, Some(5e9)).unwrap();
        match s {
            Steering::Aliased { angle_deg, k, nominal_sin } => {
                assert_eq!(k, 1);
                assert!((nominal_sin - 2.5).abs() < 0.01);
                assert!((angle_deg - 30.0).abs() < 0.1, "{angle_deg}");
            }
            _ => panic!("{s:?}"),
        }
        let t = taps7().with_array(0.03, 5e9);
        let p = array_factor(250e-12, &t, &default_angle_grid()).unwrap();
        assert!((p.main_lobe_deg - s.angle_deg()).abs() <= 0.1);
        assert!(matches!(
            steering_angle(250e-12, 0.03, None),
            Err(Error::NoVisibleLobe { .. })
        ));
    }

    #[test]
    fn no_visible_grating_lobe() {
        // grating lobes 10 apart in sinθ: a nominal value of 6 has none in view
        let d = 0.03;
        let nu = 1e9;
        let period = C_M_PER_S / (nu * d);
        assert!(period > 2.0);
        let dt = 0.6 * period * d / C_M_PER_S;
        assert!(matches!(
            steering_angle(dt, d, Some(nu)),
            Err(Error::NoVisibleLobe { .. })
        ));
    }

    #[test]
    fn array_factor_needs_geometry() {
        assert!(matches!(
            array_factor(0.0, &taps7(), &[0.0]),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn polar_presentation() {
        assert_eq!(polar_angle_deg(0.0), 90.0);
        assert_eq!(polar_angle_deg(90.0), 180.0);
    }

    #[test]
    fn wavelength_regime_delays_telescoping() {
        let link = load_table1_link();
        let mut core = link.cores()[0].clone();
        core.model.tau_g0 = 0.0;
        let d = wavelength_tap_delays(&core, 10.0, 1545.0, 2.0, 5).unwrap();
        let total = delay_seconds(core.group_delay(1553.0).unwrap() - core.group_delay(1545.0).unwrap(), 10.0);
        assert!((d[4] - total).abs() < 1e-12 * total.abs());
    }

    proptest! {
        #[test]
        fn periodicity(f in 0.0f64..20e9, dt in 50e-12f64..300e-12) {
            let fsr = 1.0 / dt;
            let r = filter_response(dt, &taps7(), &[f, f + fsr]).unwrap();
            let (a, b) = (r.magnitude[0], r.magnitude[1]);
            prop_assert!((a - b).abs() <= 1e-9 * 7.0, "{} {}", a, b);
        }

        #[test]
        fn conjugate_symmetry(f in 0.0f64..20e9, w in proptest::collection::vec(-2.0f64..2.0, 7)) {
            let t = TapConfig { weights: w.iter().map(|&x| Complex64::new(x, 0.0)).collect(), ..taps7() };
            prop_assume!(t.violations().is_empty());
            let r = filter_response(100e-12, &t, &[f, -f]).unwrap();
            prop_assert!((r.magnitude[0] - r.magnitude[1]).abs() <= 1e-12 * w.iter().map(|x| x.abs()).sum::<f64>());
        }

        #[test]
        fn energy_bound(dt in -300e-12f64..300e-12, re in proptest::collection::vec(-1.0f64..1.0, 7), im in proptest::collection::vec(-1.0f64..1.0, 7)) {
            let weights: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let bound: f64 = weights.iter().map(|w| w.norm()).sum();
            let t = TapConfig { weights, ..taps7() }.with_array(0.03, 5e9);
            prop_assume!(t.violations().is_empty());
            let p = array_factor(dt, &t, &grid(-90.0, 90.0, 1.0)).unwrap();
            prop_assert!(p.magnitude.iter().all(|&m| m <= bound * (1.0 + 1e-12)));
            prop_assert!(p.af_db.iter().all(|&x| x <= 0.0));
        }

        #[test]
        fn power_of_two_scaling_is_bit_identical(e in -20i32..20, dt in 10e-12f64..300e-12) {
            let k = 2f64.powi(e);
            let a = taps7().with_array(0.03, 5e9);
            let b = TapConfig { weights: a.weights.iter().map(|w| w * k).collect(), ..a.clone() };
            let g = grid(0.0, 20e9, 0.5e9);
            prop_assert_eq!(filter_response(dt, &a, &g).unwrap().magnitude_db, filter_response(dt, &b, &g).unwrap().magnitude_db);
            let pa = array_factor(dt, &a, &default_angle_grid()).unwrap();
            let pb = array_factor(dt, &b, &default_angle_grid()).unwrap();
            prop_assert_eq!(pa.af_db, pb.af_db);
            prop_assert_eq!(pa.main_lobe_deg, pb.main_lobe_deg);
        }

        #[test]
        fn general_scaling_preserves_curves(k in 0.01f64..100.0, dt in 10e-12f64..300e-12) {
            let a = taps7().with_array(0.03, 5e9);
            let b = TapConfig { weights: a.weights.iter().map(|w| w * k).collect(), ..a.clone() };
            let pa = array_factor(dt, &a, &default_angle_grid()).unwrap();
            let pb = array_factor(dt, &b, &default_angle_grid()).unwrap();
            prop_assert_eq!(pa.main_lobe_deg, pb.main_lobe_deg);
            for (x, y) in pa.magnitude.iter().zip(&pb.magnitude) {
                prop_assert!((x * k - y).abs() <= 1e-12 * 7.0 * k);
            }
        }

        #[test]
        fn argmax_matches_steering(dt in -95e-12f64..95e-12) {
            let t = taps7().with_array(0.03, 5e9);
            let s = steering_angle(dt, 0.03, Some(5e9)).unwrap();
            prop_assume!(!s.is_aliased());
            let p = array_factor(dt, &t, &default_angle_grid()).unwrap();
            prop_assert!((p.main_lobe_deg - s.angle_deg()).abs() <= 0.1 + 1e-9, "{} vs {:?}", p.main_lobe_deg, s);
        }
    }
}
