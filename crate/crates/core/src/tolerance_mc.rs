//! Fabrication-tolerance Monte Carlo on core geometry, and external delay
//! compensation.
//!
//! Each trial draws uniform offsets for the perturbed profile parameters of
//! every core, maps them to changes of (τg₀, D, S, n_eff) through a
//! [`SensitivityModel`], and measures how far the consecutive core delay
//! differences drift from the ideal linear increment, before and after the
//! anchor delays are trimmed back to their common nominal value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_model::{CoreProfile, McfLink};
use crate::mode_solver::{dispersion_from_neff, DispersionCoefficients, DEFAULT_STENCIL_STEP_NM};

/// Central-difference step used for linear sensitivities.
pub const SENSITIVITY_STEP: f64 = 0.01;

/// Redraw limit for a single parameter whose offset leaves its valid range.
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    A1,
    A2,
    W,
    Delta1,
}

impl Parameter {
    pub fn get(self, p: &CoreProfile) -> f64 {
        match self {
            Parameter::A1 => p.a1,
            Parameter::A2 => p.a2,
            Parameter::W => p.w,
            Parameter::Delta1 => p.delta1,
        }
    }

    pub fn with(self, p: &CoreProfile, value: f64) -> CoreProfile {
        let mut out = *p;
        match self {
            Parameter::A1 => out.a1 = value,
            Parameter::A2 => out.a2 = value,
            Parameter::W => out.w = value,
            Parameter::Delta1 => out.delta1 = value,
        }
        out
    }

    fn admissible(self, value: f64) -> bool {
        match self {
            Parameter::A1 | Parameter::Delta1 => value > 0.0,
            Parameter::A2 | Parameter::W => value >= 0.0,
        }
    }
}

/// An additional perturbed parameter with its own uniform half-width (μm for
/// lengths, percent for the contrast).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraPerturbation {
    pub parameter: Parameter,
    pub halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Half-width of the uniform core-radius error, μm.
    #[serde(default = "default_halfwidth")]
    pub radius_halfwidth_um: f64,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub extra: Vec<ExtraPerturbation>,
}

fn default_halfwidth() -> f64 {
    0.1
}
fn default_trials() -> usize {
    1000
}

impl PerturbationSpec {
    pub fn new(radius_halfwidth_um: f64, seed: u64, trials: usize) -> Self {
        Self {
            radius_halfwidth_um,
            seed,
            trials,
            extra: Vec::new(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.radius_halfwidth_um >= 0.0) {
            v.push(format!(
                "radius_halfwidth_um must be >= 0 (got {})",
                self.radius_halfwidth_um
            ));
        }
        if self.trials == 0 {
            v.push("trials must be >= 1".into());
        }
        for e in &self.extra {
            if !(e.halfwidth >= 0.0) {
                v.push(format!("halfwidth for {:?} must be >= 0 (got {})", e.parameter, e.halfwidth));
            }
            if e.parameter == Parameter::A1 {
                v.push("a1 is set through radius_halfwidth_um".into());
            }
        }
        v
    }

    /// Perturbed parameters and their half-widths, radius first.
    pub fn parameters(&self) -> Vec<(Parameter, f64)> {
        let mut p = vec![(Parameter::A1, self.radius_halfwidth_um)];
        p.extend(self.extra.iter().map(|e| (e.parameter, e.halfwidth)));
        p
    }
}

/// Additive change of one core's dispersion model and effective index.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelDelta {
    pub tau_g0: f64,
    pub dispersion: f64,
    pub slope: f64,
    pub n_eff: f64,
}

impl ModelDelta {
    fn between(from: &DispersionCoefficients, to: &DispersionCoefficients) -> Self {
        Self {
            tau_g0: to.tau_g - from.tau_g,
            dispersion: to.dispersion - from.dispersion,
            slope: to.slope - from.slope,
            n_eff: to.n_eff - from.n_eff,
        }
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            tau_g0: self.tau_g0 * k,
            dispersion: self.dispersion * k,
            slope: self.slope * k,
            n_eff: self.n_eff * k,
        }
    }

    fn add(&self, o: &Self) -> Self {
        Self {
            tau_g0: self.tau_g0 + o.tau_g0,
            dispersion: self.dispersion + o.dispersion,
            slope: self.slope + o.slope,
            n_eff: self.n_eff + o.n_eff,
        }
    }
}

/// Derivatives of one core's model with respect to each perturbed parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSensitivity {
    pub id: usize,
    pub derivatives: Vec<(Parameter, ModelDelta)>,
}

/// How geometry offsets become model changes.
#[derive(Debug, Clone, PartialEq)]
pub enum SensitivityModel {
    /// Solver-derived derivatives, computed once per core.
    Linear(Vec<CoreSensitivity>),
    /// Every perturbed profile is re-solved; `nominal` holds the solver's
    /// coefficients for each unperturbed core.
    Resolve { nominal: Vec<DispersionCoefficients> },
}

fn anchor(link: &McfLink) -> f64 {
    link.cores()[0].model.anchor_nm
}

impl SensitivityModel {
    /// Central-difference derivatives of every core for `parameters`.
    pub fn linear(link: &McfLink, parameters: &[Parameter]) -> Result<Self> {
        let lambda = anchor(link);
        let per_core = link
            .cores()
            .par_iter()
            .map(|c| {
                let derivatives = parameters
                    .iter()
                    .map(|&p| {
                        let x = p.get(&c.profile);
                        let h = SENSITIVITY_STEP;
                        let lo = dispersion_from_neff(&p.with(&c.profile, x - h), lambda, DEFAULT_STENCIL_STEP_NM)?;
                        let hi = dispersion_from_neff(&p.with(&c.profile, x + h), lambda, DEFAULT_STENCIL_STEP_NM)?;
                        Ok((p, ModelDelta::between(&lo, &hi).scaled(0.5 / h)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(CoreSensitivity { id: c.id, derivatives })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Linear(per_core))
    }

    pub fn resolve(link: &McfLink) -> Result<Self> {
        let lambda = anchor(link);
        let nominal = link
            .cores()
            .par_iter()
            .map(|c| dispersion_from_neff(&c.profile, lambda, DEFAULT_STENCIL_STEP_NM))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Resolve { nominal })
    }

    fn delta(&self, link: &McfLink, k: usize, offsets: &[(Parameter, f64)]) -> Result<ModelDelta> {
        if offsets.iter().all(|&(_, o)| o == 0.0) {
            return Ok(ModelDelta::default());
        }
        match self {
            Self::Linear(per_core) => {
                let sens = &per_core[k];
                let mut total = ModelDelta::default();
                for &(p, off) in offsets {
                    let d = sens
                        .derivatives
                        .iter()
                        .find(|(q, _)| *q == p)
                        .map(|(_, d)| *d)
                        .ok_or_else(|| {
                            Error::Shape(format!("no sensitivity for {p:?} on core {}", sens.id))
                        })?;
                    total = total.add(&d.scaled(off));
                }
                Ok(total)
            }
            Self::Resolve { nominal } => {
                let core = &link.cores()[k];
                let mut profile = core.profile;
                for &(p, off) in offsets {
                    profile = p.with(&profile, p.get(&profile) + off);
                }
                let c = dispersion_from_neff(&profile, anchor(link), DEFAULT_STENCIL_STEP_NM)?;
                Ok(ModelDelta::between(&nominal[k], &c))
            }
        }
    }
}

/// One perturbed realization of a link.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedLink {
    pub link: McfLink,
    /// Offsets applied to each core, in core order.
    pub offsets: Vec<Vec<(Parameter, f64)>>,
    /// Draws rejected because they left a parameter's valid range.
    pub resampled: usize,
}

/// Trial `trial` of the Monte Carlo. Each trial has its own random stream,
/// so results do not depend on which trials run or in what order.
pub fn perturb_link(link: &McfLink, spec: &PerturbationSpec, model: &SensitivityModel, trial: u64) -> Result<PerturbedLink> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::Invalid(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial);
    let params = spec.parameters();
    let mut out = link.clone();
    let mut offsets = Vec::with_capacity(link.len());
    let mut resampled = 0;
    for k in 0..link.len() {
        let profile = link.cores()[k].profile;
        let mut core_offsets = Vec::with_capacity(params.len());
        for &(p, h) in &params {
            let x = p.get(&profile);
            let mut draws = 0;
            let off = loop {
                let off = rng.gen_range(-h..=h);
                if p.admissible(x + off) {
                    break off;
                }
                draws += 1;
                if draws >= MAX_REDRAWS {
                    return Err(Error::Domain(format!(
                        "{p:?} = {x} on core {} cannot stay valid under ±{h}",
                        link.cores()[k].id
                    )));
                }
            };
            resampled += draws;
            core_offsets.push((p, off));
        }
        let delta = model.delta(link, k, &core_offsets)?;
        let core = &mut out.cores_mut()[k];
        for &(p, off) in &core_offsets {
            if off != 0.0 {
                core.profile = p.with(&core.profile, p.get(&core.profile) + off);
            }
        }
        core.model.tau_g0 += delta.tau_g0;
        core.model.dispersion += delta.dispersion;
        core.model.slope += delta.slope;
        core.n_eff += delta.n_eff;
        offsets.push(core_offsets);
    }
    Ok(PerturbedLink {
        link: out,
        offsets,
        resampled,
    })
}

/// Resets every core's anchor delay to `tau_g0`, leaving D and S untouched.
pub fn compensate_delays(link: &McfLink, tau_g0: f64) -> McfLink {
    link.map_models(|c| {
        let mut m = c.model;
        m.tau_g0 = tau_g0;
        m
    })
}

/// Mean anchor delay of the cores; the trim target for compensation.
pub fn nominal_tau_g0(link: &McfLink) -> f64 {
    let cores = link.cores();
    if cores.iter().all(|c| c.model.tau_g0 == cores[0].model.tau_g0) {
        return cores[0].model.tau_g0;
    }
    cores.iter().map(|c| c.model.tau_g0).sum::<f64>() / cores.len() as f64
}

/// Per-trial outcome. Matrices are indexed `[wavelength][core]` and
/// `[wavelength][increment]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub resampled: usize,
    /// Perturbed minus nominal group delay, ps/km.
    pub pre_delay_err: Vec<Vec<f64>>,
    pub post_delay_err: Vec<Vec<f64>>,
    /// Consecutive delay difference minus ΔD·(λ − λ₀), ps/km.
    pub pre_increment_err: Vec<Vec<f64>>,
    pub post_increment_err: Vec<Vec<f64>>,
    pub pre_rms: f64,
    pub post_rms: f64,
    pub pre_max: f64,
    pub post_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceSummary {
    pub pre_rms: f64,
    pub post_rms: f64,
    pub pre_max: f64,
    pub post_max: f64,
    /// Fraction of trials whose pre-compensation RMS exceeds the post one.
    pub pre_exceeds_post_fraction: f64,
    pub resampled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceReport {
    pub wavelengths_nm: Vec<f64>,
    pub core_ids: Vec<usize>,
    /// Ideal dispersion step the increments are measured against.
    pub dispersion_step: f64,
    pub compensation_tau_g0: f64,
    pub trials: Vec<TrialRecord>,
    pub summary: ToleranceSummary,
}

fn rms_max(m: &[Vec<f64>]) -> (f64, f64) {
    let n = m.iter().map(Vec::len).sum::<usize>();
    if n == 0 {
        return (0.0, 0.0);
    }
    let ss: f64 = m.iter().flatten().map(|x| x * x).sum();
    let mx = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    ((ss / n as f64).sqrt(), mx)
}

fn increment_errors(link: &McfLink, wavelengths: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
    let a = anchor(link);
    wavelengths
        .iter()
        .map(|&l| {
            Ok(link
                .increments(l)?
                .into_iter()
                .map(|d| d - step * (l - a))
                .collect())
        })
        .collect()
}

fn delay_errors(link: &McfLink, nominal: &[Vec<f64>], wavelengths: &[f64]) -> Result<Vec<Vec<f64>>> {
    wavelengths
        .iter()
        .zip(nominal)
        .map(|(&l, nom)| {
            Ok(link
                .delay_vector(l)?
                .iter()
                .zip(nom)
                .map(|(p, n)| p - n)
                .collect())
        })
        .collect()
}

/// Runs `spec.trials` perturbed realizations of `link` and compares the
/// increment uniformity before and after delay compensation.
pub fn run_tolerance_study(
    link: &McfLink,
    spec: &PerturbationSpec,
    model: &SensitivityModel,
    wavelengths: &[f64],
) -> Result<ToleranceReport> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::Invalid(v));
    }
    if link.len() < 2 {
        return Err(Error::Shape("tolerance study needs at least two cores".into()));
    }
    for c in link.cores() {
        for &l in wavelengths {
            c.model.window.check(l)?;
        }
    }
    let step = link.mean_dispersion_step();
    let tau = nominal_tau_g0(link);
    let nominal_delays: Vec<Vec<f64>> = wavelengths
        .iter()
        .map(|&l| link.delay_vector(l))
        .collect::<Result<_>>()?;

    let trials = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let p = perturb_link(link, spec, model, t as u64)?;
            let post = compensate_delays(&p.link, tau);
            let pre_increment_err = increment_errors(&p.link, wavelengths, step)?;
            let post_increment_err = increment_errors(&post, wavelengths, step)?;
            let (pre_rms, pre_max) = rms_max(&pre_increment_err);
            let (post_rms, post_max) = rms_max(&post_increment_err);
            Ok(TrialRecord {
                trial: t,
                resampled: p.resampled,
                pre_delay_err: delay_errors(&p.link, &nominal_delays, wavelengths)?,
                post_delay_err: delay_errors(&post, &nominal_delays, wavelengths)?,
                pre_increment_err,
                post_increment_err,
                pre_rms,
                post_rms,
                pre_max,
                post_max,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = trials.len() as f64;
    let summary = ToleranceSummary {
        pre_rms: (trials.iter().map(|t| t.pre_rms * t.pre_rms).sum::<f64>() / n).sqrt(),
        post_rms: (trials.iter().map(|t| t.post_rms * t.post_rms).sum::<f64>() / n).sqrt(),
        pre_max: trials.iter().fold(0.0, |a, t| a.max(t.pre_max)),
        post_max: trials.iter().fold(0.0, |a, t| a.max(t.post_max)),
        pre_exceeds_post_fraction: trials.iter().filter(|t| t.pre_rms > t.post_rms).count() as f64 / n,
        resampled: trials.iter().map(|t| t.resampled).sum(),
    };
    Ok(ToleranceReport {
        wavelengths_nm: wavelengths.to_vec(),
        core_ids: link.cores().iter().map(|c| c.id).collect(),
        dispersion_step: step,
        compensation_tau_g0: tau,
        trials,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber_model::load_table1_link;
    use std::sync::OnceLock;

    fn linear_model() -> &'static SensitivityModel {
        static M: OnceLock<SensitivityModel> = OnceLock::new();
        M.get_or_init(|| SensitivityModel::linear(&load_table1_link(), &[Parameter::A1]).unwrap())
    }

    fn sweep() -> Vec<f64> {
        (0..9).map(|k| 1530.0 + 5.0 * k as f64).collect()
    }

    #[test]
    fn zero_halfwidth_leaves_link_unchanged() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(0.0, 7, 3);
        let p = perturb_link(&link, &spec, linear_model(), 0).unwrap();
        assert_eq!(p.link, link);
        let r = run_tolerance_study(&link, &spec, linear_model(), &sweep()).unwrap();
        for t in &r.trials {
            assert!(t.pre_delay_err.iter().flatten().all(|&e| e == 0.0));
            assert_eq!(t.pre_increment_err, t.post_increment_err);
        }
    }

    #[test]
    fn same_seed_same_link() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(0.1, 42, 1);
        let a = perturb_link(&link, &spec, linear_model(), 5).unwrap();
        let b = perturb_link(&link, &spec, linear_model(), 5).unwrap();
        assert_eq!(a, b);
        let c = perturb_link(&link, &spec, linear_model(), 6).unwrap();
        assert_ne!(a.link, c.link);
        let d = perturb_link(&link, &PerturbationSpec::new(0.1, 43, 1), linear_model(), 5).unwrap();
        assert_ne!(a.link, d.link);
    }

    #[test]
    fn linear_sensitivity_matches_resolve() {
        let link = load_table1_link();
        let lambda = 1550.0;
        let core = &link.cores()[0];
        let base = dispersion_from_neff(&core.profile, lambda, DEFAULT_STENCIL_STEP_NM).unwrap();
        let moved = dispersion_from_neff(
            &CoreProfile {
                a1: core.profile.a1 + 0.1,
                ..core.profile
            },
            lambda,
            DEFAULT_STENCIL_STEP_NM,
        )
        .unwrap();
        let exact = moved.dispersion - base.dispersion;
        let SensitivityModel::Linear(s) = linear_model() else {
            unreachable!()
        };
        let predicted = s[0].derivatives[0].1.dispersion * 0.1;
        assert!(((predicted - exact) / exact).abs() < 0.02, "{predicted} vs {exact}");
    }

    #[test]
    fn resolve_mode_is_consistent_with_linear() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(0.1, 3, 1);
        let resolve = SensitivityModel::resolve(&link).unwrap();
        let a = perturb_link(&link, &spec, linear_model(), 0).unwrap();
        let b = perturb_link(&link, &spec, &resolve, 0).unwrap();
        assert_eq!(a.offsets, b.offsets);
        for (x, y) in a.link.cores().iter().zip(b.link.cores()) {
            let dx = x.model.dispersion - link.core_by_id(x.id).unwrap().model.dispersion;
            let dy = y.model.dispersion - link.core_by_id(y.id).unwrap().model.dispersion;
            assert!((dx - dy).abs() <= 0.05 * dy.abs().max(0.05), "{dx} vs {dy}");
        }
    }

    #[test]
    fn compensation_equalizes_anchor_delays() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(0.1, 9, 1);
        let p = perturb_link(&link, &spec, linear_model(), 0).unwrap();
        let c = compensate_delays(&p.link, nominal_tau_g0(&link));
        let d = c.delay_vector(1550.0).unwrap();
        assert!(d.iter().all(|&x| x == d[0]));
        // λ-dependent increment terms are untouched
        for n in 1..7 {
            let before = p.link.spatial_differential_delay(n, 1565.0).unwrap()
                - p.link.spatial_differential_delay(n, 1550.0).unwrap();
            let after = c.spatial_differential_delay(n, 1565.0).unwrap();
            assert!((before - after).abs() < 1e-6);
        }
        assert_eq!(compensate_delays(&link, nominal_tau_g0(&link)), link);
    }

    #[test]
    fn post_residual_is_dispersion_scatter_only() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(0.1, 21, 1);
        let p = perturb_link(&link, &spec, linear_model(), 0).unwrap();
        let r = run_tolerance_study(&link, &spec, linear_model(), &[1570.0]).unwrap();
        let x = 20.0;
        let step = link.mean_dispersion_step();
        for n in 0..6 {
            let (a, b) = (&p.link.cores()[n].model, &p.link.cores()[n + 1].model);
            let oracle = (b.dispersion - a.dispersion - step) * x + 0.5 * (b.slope - a.slope) * x * x;
            let got = r.trials[0].post_increment_err[0][n];
            assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
        }
    }

    #[test]
    fn study_is_deterministic() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(0.1, 5, 50);
        let a = run_tolerance_study(&link, &spec, linear_model(), &sweep()).unwrap();
        let b = run_tolerance_study(&link, &spec, linear_model(), &sweep()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wider_perturbations_do_not_reduce_error() {
        let link = load_table1_link();
        let narrow = run_tolerance_study(&link, &PerturbationSpec::new(0.1, 17, 1000), linear_model(), &sweep()).unwrap();
        let wide = run_tolerance_study(&link, &PerturbationSpec::new(0.2, 17, 1000), linear_model(), &sweep()).unwrap();
        assert!(wide.summary.pre_rms >= narrow.summary.pre_rms);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(-0.1, 1, 0);
        match perturb_link(&link, &spec, linear_model(), 0) {
            Err(Error::Invalid(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_window_wavelength_is_rejected() {
        let link = load_table1_link();
        let spec = PerturbationSpec::new(0.1, 1, 1);
        assert!(matches!(
            run_tolerance_study(&link, &spec, linear_model(), &[1700.0]),
            Err(Error::OutOfWindow { .. })
        ));
    }

    #[test]
    fn extra_parameters_are_perturbed() {
        let link = load_table1_link();
        let mut spec = PerturbationSpec::new(0.0, 2, 1);
        spec.extra.push(ExtraPerturbation {
            parameter: Parameter::W,
            halfwidth: 0.1,
        });
        let model = SensitivityModel::linear(&link, &[Parameter::A1, Parameter::W]).unwrap();
        let p = perturb_link(&link, &spec, &model, 0).unwrap();
        assert!(p.link.cores().iter().zip(link.cores()).all(|(a, b)| a.profile.a1 == b.profile.a1));
        assert!(p.link.cores().iter().zip(link.cores()).any(|(a, b)| a.profile.w != b.profile.w));
        // a linear model without the W derivative cannot serve this spec
        assert!(perturb_link(&link, &spec, linear_model(), 0).is_err());
    }
}
