use std::path::Path;

use mcf_ttdl::bend_twist::{
    bend_delay_variation, crosstalk_curve_with, threshold_bend_radius, twist_averaged_delay, BendState, CouplingModel,
};
use mcf_ttdl::config::FiberDesign;
use mcf_ttdl::mode_solver::{design_cores, designed_link, DesignBounds, LinkGeometry};
use mcf_ttdl::mwp_apps::{
    array_factor, filter_response, filter_response_exact, grid, polar_angle_deg, steering_angle, Steering, TapConfig,
};
use mcf_ttdl::tolerance_mc::{run_tolerance_study, Parameter, PerturbationSpec, SensitivityModel};
use mcf_ttdl::McfLink;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::error::CliError;
use crate::output::{db, Csv, Plot, Sink};

pub type Results = Map<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsFile {
    pub dispersion_ps_per_km_nm: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_g0_ps_per_km: Option<f64>,
    #[serde(default = "default_length")]
    pub length_km: f64,
    #[serde(default = "default_pitch")]
    pub core_pitch_um: f64,
    #[serde(default = "default_cladding")]
    pub cladding_diameter_um: f64,
    #[serde(default)]
    pub bounds: DesignBounds,
}

fn default_length() -> f64 {
    10.0
}
fn default_pitch() -> f64 {
    35.0
}
fn default_cladding() -> f64 {
    125.0
}

impl Default for TargetsFile {
    fn default() -> Self {
        Self {
            dispersion_ps_per_km_nm: (0..7).map(|k| 14.75 + k as f64).collect(),
            tau_g0_ps_per_km: None,
            length_km: default_length(),
            core_pitch_um: default_pitch(),
            cladding_diameter_um: default_cladding(),
            bounds: DesignBounds::default(),
        }
    }
}

impl TargetsFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Everything a run needs, with file inputs already resolved.
pub struct Job {
    pub command: Command,
    pub design: FiberDesign,
    pub targets: Option<TargetsFile>,
}

fn link_of(design: &FiberDesign) -> Result<McfLink, CliError> {
    Ok(design.clone().into_link()?)
}

fn with_length(link: &McfLink, length_km: Option<f64>) -> Result<McfLink, CliError> {
    let mut l = link.clone();
    if let Some(km) = length_km {
        if !(km > 0.0) {
            return Err(CliError::Config(format!("length_km must be > 0 (got {km})")));
        }
        l.length_km = km;
    }
    Ok(l)
}

fn taps_for(link: &McfLink, weights: &Option<Vec<f64>>) -> Result<TapConfig, CliError> {
    let mut taps = TapConfig::uniform(link.len());
    if let Some(w) = weights {
        if w.len() != link.len() {
            return Err(CliError::Config(format!(
                "weights: {} values for {} cores",
                w.len(),
                link.len()
            )));
        }
        taps.weights = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    }
    Ok(taps)
}

fn positive_step(name: &str, start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(CliError::Config(format!(
            "{name}: need step > 0 and stop >= start (got {start}..{stop} step {step})"
        )));
    }
    Ok(grid(start, stop, step))
}

fn core_ids(link: &McfLink) -> Vec<usize> {
    link.cores().iter().map(|c| c.id).collect()
}

pub fn execute(job: &Job, sink: &mut Sink) -> Result<Results, CliError> {
    let mut results = Results::new();
    match &job.command {
        Command::Delays(a) => delays(&link_of(&job.design)?, a, sink, "", &mut results)?,
        Command::Filter(a) => filter(&link_of(&job.design)?, a, sink, "", &mut results)?,
        Command::Beamform(a) => beamform(&link_of(&job.design)?, a, sink, "", &mut results)?,
        Command::Bend(a) => bend(&link_of(&job.design)?, a, sink, "", &mut results)?,
        Command::Twist(a) => twist(&link_of(&job.design)?, a, sink, "", &mut results)?,
        Command::Xtalk(a) => xtalk(&link_of(&job.design)?, a, sink, "", &mut results)?,
        Command::Tolerance(a) => tolerance(&link_of(&job.design)?, a, sink, "", &mut results)?,
        Command::Design(_) => {
            let targets = job.targets.clone().unwrap_or_default();
            design(&targets, sink, &mut results)?
        }
        Command::Reproduce(a) => reproduce(&link_of(&job.design)?, a, sink, &mut results)?,
        Command::Validate(_) | Command::Rerun(_) => unreachable!("handled before execution"),
    }
    Ok(results)
}

fn delays(link: &McfLink, a: &DelaysArgs, sink: &mut Sink, prefix: &str, results: &mut Results) -> Result<(), CliError> {
    let mut csv = Csv::new("wavelength_nm,core_id,delay_ps_per_km");
    for &l in &a.wavelengths {
        for (c, d) in link.cores().iter().zip(link.delay_vector(l)?) {
            csv.row(&[&l, &c.id, &d]);
        }
    }
    let cores = core_ids(link);
    sink.csv(
        &format!("{prefix}delays.csv"),
        csv,
        Some(Plot::PerCore {
            xlabel: "wavelength (nm)",
            ylabel: "group delay (ps/km)",
            cores: &cores,
        }),
    )?;
    results.insert(format!("{prefix}delay_wavelengths_nm"), json!(a.wavelengths));
    Ok(())
}

fn filter(link: &McfLink, a: &FilterArgs, sink: &mut Sink, prefix: &str, results: &mut Results) -> Result<(), CliError> {
    let link = with_length(link, a.length_km)?;
    let taps = taps_for(&link, &a.weights)?;
    let f = positive_step("frequency grid", a.f_start_hz, a.f_stop_hz, a.f_step_hz)?;
    let mut summary = Csv::new("wavelength_nm,delay_increment_s,fsr_hz,peak_degradation_db");
    let mut fsrs = Vec::new();
    for &l in &a.wavelengths {
        let dt = link.mean_increment_seconds(l)?;
        let (resp, degradation) = if a.exact {
            let e = filter_response_exact(&link, l, &taps, &f)?;
            (e.response, e.peak_degradation_db)
        } else {
            (filter_response(dt, &taps, &f)?, 0.0)
        };
        let fsr = if dt > 0.0 { 1.0 / dt } else { f64::INFINITY };
        let mut csv = Csv::new("freq_hz,mag_db");
        for (x, m) in resp.frequencies_hz.iter().zip(&resp.magnitude_db) {
            csv.row(&[x, &db(*m)]);
        }
        sink.csv(
            &format!("{prefix}filter_{l}nm.csv"),
            csv,
            Some(Plot::Line {
                xlabel: "frequency (Hz)",
                ylabel: "|H| (dB)",
            }),
        )?;
        summary.row(&[&l, &dt, &fsr, &degradation]);
        fsrs.push(json!({ "wavelength_nm": l, "delay_increment_s": dt, "fsr_hz": fsr }));
    }
    sink.csv(&format!("{prefix}filter_summary.csv"), summary, None)?;
    results.insert(format!("{prefix}filter"), Value::Array(fsrs));
    Ok(())
}

fn beamform(link: &McfLink, a: &BeamformArgs, sink: &mut Sink, prefix: &str, results: &mut Results) -> Result<(), CliError> {
    let link = with_length(link, a.length_km)?;
    let taps = taps_for(&link, &a.weights)?.with_array(a.spacing_m, a.carrier_hz);
    if !(a.angle_step_deg > 0.0) {
        return Err(CliError::Config(format!(
            "angle_step_deg must be > 0 (got {})",
            a.angle_step_deg
        )));
    }
    let n = (180.0 / a.angle_step_deg).round() as usize;
    let angles: Vec<f64> = (0..=n).map(|i| -90.0 + 180.0 * i as f64 / n as f64).collect();
    let present = |x: f64| if a.polar { polar_angle_deg(x) } else { x };
    let mut summary = Csv::new("wavelength_nm,delay_increment_s,steering_deg,steering,main_lobe_deg");
    let mut out = Vec::new();
    for &l in &a.wavelengths {
        let dt = link.mean_increment_seconds(l)?;
        let pattern = array_factor(dt, &taps, &angles)?;
        let (steer, kind) = match steering_angle(dt, a.spacing_m, Some(a.carrier_hz)) {
            Ok(Steering::Direct { angle_deg }) => (present(angle_deg), "direct"),
            Ok(Steering::Aliased { angle_deg, .. }) => (present(angle_deg), "aliased"),
            Err(mcf_ttdl::Error::NoVisibleLobe { .. }) => (f64::NAN, "invisible"),
            Err(e) => return Err(e.into()),
        };
        let mut csv = Csv::new("angle_deg,af_db");
        for (x, m) in pattern.angles_deg.iter().zip(&pattern.af_db) {
            csv.row(&[&present(*x), &db(*m)]);
        }
        sink.csv(
            &format!("{prefix}beamform_{l}nm.csv"),
            csv,
            Some(Plot::Line {
                xlabel: "angle (deg)",
                ylabel: "|AF| (dB)",
            }),
        )?;
        let lobe = present(pattern.main_lobe_deg);
        summary.row(&[&l, &dt, &steer, &kind, &lobe]);
        out.push(json!({
            "wavelength_nm": l,
            "delay_increment_s": dt,
            "steering_deg": if steer.is_finite() { json!(steer) } else { Value::Null },
            "steering": kind,
            "main_lobe_deg": lobe,
        }));
    }
    sink.csv(&format!("{prefix}beamform_summary.csv"), summary, None)?;
    results.insert(format!("{prefix}beamform"), Value::Array(out));
    Ok(())
}

fn bend(link: &McfLink, a: &BendArgs, sink: &mut Sink, prefix: &str, results: &mut Results) -> Result<(), CliError> {
    let radii = positive_step("bend radii", a.r_start_mm, a.r_stop_mm, a.r_step_mm)?;
    let mut csv = Csv::new("radius_mm,core_id,delay_ps_per_km");
    let mut worst: f64 = 0.0;
    for &r in &radii {
        let state = BendState::new(r, a.theta_deg.to_radians())?;
        for c in link.cores() {
            let v = bend_delay_variation(c, a.wavelength, &state)?;
            worst = worst.max(v.abs());
            csv.row(&[&r, &c.id, &v]);
        }
    }
    let cores = core_ids(link);
    sink.csv(
        &format!("{prefix}bend.csv"),
        csv,
        Some(Plot::PerCore {
            xlabel: "bend radius (mm)",
            ylabel: "group delay variation (ps/km)",
            cores: &cores,
        }),
    )?;
    results.insert(format!("{prefix}bend_max_variation_ps_per_km"), json!(worst));
    Ok(())
}

fn twist(link: &McfLink, a: &TwistArgs, sink: &mut Sink, prefix: &str, results: &mut Results) -> Result<(), CliError> {
    let mut csv = Csv::new("core_id,straight_ps_per_km,twist_averaged_ps_per_km,difference_ps_per_km");
    let mut worst: f64 = 0.0;
    for c in link.cores() {
        let s = c.group_delay(a.wavelength)?;
        let t = twist_averaged_delay(c, a.wavelength, a.radius_mm, a.turns)?;
        worst = worst.max(((t - s) / s).abs());
        csv.row(&[&c.id, &s, &t, &(t - s)]);
    }
    sink.csv(&format!("{prefix}twist.csv"), csv, None)?;
    results.insert(format!("{prefix}twist_max_relative_difference"), json!(worst));
    Ok(())
}

fn xtalk(link: &McfLink, a: &XtalkArgs, sink: &mut Sink, prefix: &str, results: &mut Results) -> Result<(), CliError> {
    let radii = positive_step("bend radii", a.r_start_mm, a.r_stop_mm, a.r_step_mm)?;
    let model = CouplingModel::calibrated(link, a.floor_db)?;
    let curve = crosstalk_curve_with(link, &radii, &model)?;
    let th = threshold_bend_radius(link)?;
    let mut csv = Csv::new("radius_mm,xtalk_db");
    for (r, x) in curve.radii.iter().zip(&curve.xtalk_db) {
        csv.row(&[r, &db(*x)]);
    }
    sink.csv(
        &format!("{prefix}xtalk.csv"),
        csv,
        Some(Plot::Line {
            xlabel: "bend radius (mm)",
            ylabel: "worst-case crosstalk (dB)",
        }),
    )?;
    let mut s = Csv::new("peak_radius_mm,pair_a,pair_b,coupling_per_m");
    s.row(&[&curve.peak_radius, &th.pair.0, &th.pair.1, &model.coupling_per_m]);
    sink.csv(&format!("{prefix}xtalk_summary.csv"), s, None)?;
    results.insert(
        format!("{prefix}xtalk"),
        json!({ "peak_radius_mm": curve.peak_radius, "pair": [th.pair.0, th.pair.1] }),
    );
    Ok(())
}

fn tolerance(link: &McfLink, a: &ToleranceArgs, sink: &mut Sink, prefix: &str, results: &mut Results) -> Result<(), CliError> {
    let spec = PerturbationSpec::new(a.halfwidth_um, a.seed, a.trials);
    let model = if a.resolve {
        SensitivityModel::resolve(link)?
    } else {
        SensitivityModel::linear(link, &[Parameter::A1])?
    };
    let report = run_tolerance_study(link, &spec, &model, &a.wavelengths)?;
    let mut csv = Csv::new("trial,core_id,wavelength_nm,delay_err_ps_per_km,compensated");
    for t in &report.trials {
        for (compensated, errs) in [(false, &t.pre_delay_err), (true, &t.post_delay_err)] {
            for (c, id) in report.core_ids.iter().enumerate() {
                for (w, l) in report.wavelengths_nm.iter().enumerate() {
                    csv.row(&[&t.trial, id, l, &errs[w][c], &compensated]);
                }
            }
        }
    }
    sink.csv(&format!("{prefix}tolerance.csv"), csv, None)?;
    let mut s = Csv::new("trial,pre_rms_ps_per_km,post_rms_ps_per_km,pre_max_ps_per_km,post_max_ps_per_km,resampled");
    for t in &report.trials {
        s.row(&[&t.trial, &t.pre_rms, &t.post_rms, &t.pre_max, &t.post_max, &t.resampled]);
    }
    sink.csv(&format!("{prefix}tolerance_trials.csv"), s, None)?;
    results.insert(format!("{prefix}tolerance"), serde_json::to_value(&report.summary).expect("summary serializes"));
    Ok(())
}

fn design(t: &TargetsFile, sink: &mut Sink, results: &mut Results) -> Result<(), CliError> {
    let geometry = match t.dispersion_ps_per_km_nm.len() {
        7 => LinkGeometry::hexagonal7(t.length_km, t.core_pitch_um, t.cladding_diameter_um),
        2 => LinkGeometry {
            layout: mcf_ttdl::bend_twist::LayoutTemplate::pair(t.core_pitch_um),
            length_km: t.length_km,
            core_pitch_um: t.core_pitch_um,
            cladding_diameter_um: t.cladding_diameter_um,
        },
        n => {
            return Err(CliError::Config(format!(
                "dispersion_ps_per_km_nm: layouts exist for 2 or 7 cores (got {n})"
            )))
        }
    };
    let (tau, outcomes) = design_cores(&t.dispersion_ps_per_km_nm, t.tau_g0_ps_per_km, &t.bounds)?;
    let link = designed_link(&outcomes, &geometry, &t.bounds)?;
    let text = FiberDesign::from_link(&link).to_toml_string();
    sink.write("design.toml", text.as_bytes())?;
    let mut csv = Csv::new(
        "core_id,target_dispersion_ps_per_km_nm,dispersion_ps_per_km_nm,tau_g0_ps_per_km,slope_ps_per_km_nm2,n_eff,a1_um,a2_um,w_um,delta1_pct,delta2_pct",
    );
    for (k, (o, d)) in outcomes.iter().zip(&t.dispersion_ps_per_km_nm).enumerate() {
        let p = &o.profile;
        csv.row(&[
            &(k + 1),
            d,
            &o.achieved.dispersion,
            &o.achieved.tau_g,
            &o.achieved.slope,
            &o.achieved.n_eff,
            &p.a1,
            &p.a2,
            &p.w,
            &p.delta1,
            &p.delta2,
        ]);
    }
    sink.csv("design_report.csv", csv, None)?;
    let step = link.mean_dispersion_step();
    let worst = (0..9)
        .map(|k| link.increment_deviation(1530.0 + 5.0 * k as f64, step))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    results.insert(
        "design".into(),
        json!({ "common_tau_g0_ps_per_km": tau, "max_increment_deviation_ps_per_km": worst }),
    );
    Ok(())
}

fn reproduce(link: &McfLink, a: &ReproduceArgs, sink: &mut Sink, results: &mut Results) -> Result<(), CliError> {
    let sweep: Vec<f64> = (0..=45).map(|k| 1530.0 + k as f64).collect();
    delays(link, &DelaysArgs { wavelengths: sweep }, sink, "fig5b_", results)?;
    xtalk(
        link,
        &XtalkArgs {
            r_start_mm: 20.0,
            r_stop_mm: 500.0,
            r_step_mm: 1.0,
            floor_db: -90.0,
        },
        sink,
        "fig6_",
        results,
    )?;
    bend(
        link,
        &BendArgs {
            wavelength: 1550.0,
            r_start_mm: 50.0,
            r_stop_mm: 1000.0,
            r_step_mm: 10.0,
            theta_deg: 0.0,
        },
        sink,
        "fig7a_",
        results,
    )?;
    bend_dispersion(link, sink, results)?;
    theta_sweep(link, sink, results)?;
    twist(
        link,
        &TwistArgs {
            wavelength: 1550.0,
            radius_mm: 100.0,
            turns: 1,
        },
        sink,
        "sec32_",
        results,
    )?;
    tolerance(
        link,
        &ToleranceArgs {
            seed: a.seed,
            trials: a.trials,
            halfwidth_um: 0.1,
            wavelengths: (0..9).map(|k| 1530.0 + 5.0 * k as f64).collect(),
            resolve: false,
        },
        sink,
        "fig9_",
        results,
    )?;
    filter(
        link,
        &FilterArgs {
            wavelengths: vec![1560.0, 1575.0],
            length_km: None,
            weights: None,
            f_start_hz: 0.0,
            f_stop_hz: 20e9,
            f_step_hz: 10e6,
            exact: false,
        },
        sink,
        "fig10_",
        results,
    )?;
    beamform(
        link,
        &BeamformArgs {
            wavelengths: vec![1560.0, 1575.0],
            length_km: None,
            weights: None,
            spacing_m: 0.03,
            carrier_hz: 5e9,
            angle_step_deg: 0.1,
            polar: false,
        },
        sink,
        "fig11_",
        results,
    )
}

/// Bend-induced change of D, from the bent delay at λ₀ ± 1 nm.
fn bend_dispersion(link: &McfLink, sink: &mut Sink, results: &mut Results) -> Result<(), CliError> {
    let mut csv = Csv::new("radius_mm,core_id,dispersion_variation_ps_per_km_nm");
    let mut worst: f64 = 0.0;
    for r in grid(50.0, 1000.0, 10.0) {
        let state = BendState::new(r, 0.0)?;
        for c in link.cores() {
            let hi = bend_delay_variation(c, 1551.0, &state)?;
            let lo = bend_delay_variation(c, 1549.0, &state)?;
            let v = 0.5 * (hi - lo);
            worst = worst.max(v.abs());
            csv.row(&[&r, &c.id, &v]);
        }
    }
    let cores = core_ids(link);
    sink.csv(
        "fig7b_dispersion.csv",
        csv,
        Some(Plot::PerCore {
            xlabel: "bend radius (mm)",
            ylabel: "dispersion variation (ps/(km nm))",
            cores: &cores,
        }),
    )?;
    results.insert("fig7b_max_dispersion_variation".into(), json!(worst));
    Ok(())
}

/// Delay variation versus core angle from the bend direction at 50 mm.
fn theta_sweep(link: &McfLink, sink: &mut Sink, results: &mut Results) -> Result<(), CliError> {
    let mut csv = Csv::new("theta_deg,core_id,delay_ps_per_km");
    for k in 0..=360 {
        let theta = k as f64;
        let state = BendState::new(50.0, theta.to_radians())?;
        for c in link.cores() {
            csv.row(&[&theta, &c.id, &bend_delay_variation(c, 1550.0, &state)?]);
        }
    }
    let cores = core_ids(link);
    sink.csv(
        "fig8_theta.csv",
        csv,
        Some(Plot::PerCore {
            xlabel: "theta (deg)",
            ylabel: "group delay variation (ps/km)",
            cores: &cores,
        }),
    )?;
    results.insert("fig8_bend_radius_mm".into(), json!(50.0));
    Ok(())
}
