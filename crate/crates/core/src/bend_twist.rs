//! Bending and twisting of the multicore fiber.
//!
//! A bent fiber is treated as a straight one whose core indices are scaled by
//! `1 + r·cosθ/R_b`, with `θ` measured from the radial direction of the bend.
//! The same factor scales each core's group delay. Adjacent cores reach
//! phase matching once the bend is tight enough for that scaling to close
//! their index gap.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_model::{FiberCore, McfLink, Polar};
use crate::units::UM_PER_MM;

/// θ samples per full turn when looking for phase-matching crossings.
pub const PHASE_SWEEP_SAMPLES: usize = 720;

/// Trapezoid nodes per turn for twist averaging.
pub const TWIST_QUADRATURE_POINTS: usize = 1024;

/// Straight-fiber crosstalk floor the default coupling is calibrated to, dB.
pub const DEFAULT_FLOOR_DB: f64 = -90.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BendState {
    /// mm
    pub bend_radius_mm: f64,
    /// Angle of the core from the radial direction of the bend, radians.
    pub orientation: f64,
    /// rad/m
    pub twist_rate: f64,
}

impl BendState {
    pub fn new(bend_radius_mm: f64, orientation: f64) -> Result<Self> {
        check_radius(bend_radius_mm)?;
        Ok(Self {
            bend_radius_mm,
            orientation,
            twist_rate: 0.0,
        })
    }
}

fn check_radius(bend_radius_mm: f64) -> Result<()> {
    if bend_radius_mm > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "bend radius must be > 0 mm (got {bend_radius_mm})"
        )))
    }
}

/// `1 + r·cosθ/R_b` with `r` in μm and `R_b` in mm.
fn bend_factor(r_um: f64, theta: f64, bend_radius_mm: f64) -> f64 {
    1.0 + r_um * theta.cos() / (bend_radius_mm * UM_PER_MM)
}

/// Index of a straight-fiber core seen through a bend of radius `bend_radius_mm`.
pub fn equivalent_index(n_straight: f64, r_um: f64, theta: f64, bend_radius_mm: f64) -> Result<f64> {
    check_radius(bend_radius_mm)?;
    Ok(n_straight * bend_factor(r_um, theta, bend_radius_mm))
}

/// Largest bend radius at which an adjacent pair can phase-match, and the
/// pair that sets it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub radius_mm: f64,
    pub pair: (usize, usize),
}

/// Phase-matching radius of a single pair, mm; infinite for equal indices.
pub fn pair_threshold_mm(pitch_um: f64, n_a: f64, n_b: f64) -> f64 {
    pitch_um / UM_PER_MM * n_a.max(n_b) / (n_a - n_b).abs()
}

/// Fiber threshold radius: the maximum pair threshold over all adjacent pairs.
pub fn threshold_bend_radius(link: &McfLink) -> Result<Threshold> {
    let mut best: Option<Threshold> = None;
    for &(a, b) in link.adjacency() {
        let na = link.core_by_id(a).expect("validated adjacency").n_eff;
        let nb = link.core_by_id(b).expect("validated adjacency").n_eff;
        if na == nb {
            return Err(Error::DegeneratePair { a, b, n_eff: na });
        }
        let r = pair_threshold_mm(link.core_pitch_um, na, nb);
        if best.is_none_or(|t| r > t.radius_mm) {
            best = Some(Threshold {
                radius_mm: r,
                pair: (a, b),
            });
        }
    }
    best.ok_or_else(|| Error::Shape("link has no adjacent pairs".into()))
}

/// Core slots of a cross-section and which slots are adjacent.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutTemplate {
    pub slots: Vec<Polar>,
    /// Adjacent slot index pairs.
    pub adjacency: Vec<(usize, usize)>,
}

impl LayoutTemplate {
    /// Centre slot plus a hexagonal ring at radius `pitch_um`, ring slots at
    /// 0°, 60°, …, 300°. The centre touches all ring slots and each ring slot
    /// its two ring neighbours.
    pub fn hexagonal7(pitch_um: f64) -> Self {
        let mut slots = vec![Polar { r: 0.0, theta: 0.0 }];
        let mut adjacency = Vec::new();
        for k in 0..6 {
            slots.push(Polar {
                r: pitch_um,
                theta: (60.0 * k as f64).to_radians(),
            });
            adjacency.push((0, k + 1));
            adjacency.push((k + 1, (k + 1) % 6 + 1));
        }
        Self { slots, adjacency }
    }

    /// Two slots one pitch apart.
    pub fn pair(pitch_um: f64) -> Self {
        Self {
            slots: vec![
                Polar { r: 0.0, theta: 0.0 },
                Polar {
                    r: pitch_um,
                    theta: 0.0,
                },
            ],
            adjacency: vec![(0, 1)],
        }
    }
}

/// Result of the arrangement search.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    /// Core id placed in each template slot.
    pub slot_cores: Vec<usize>,
    /// Threshold radius of this arrangement, mm (infinite if some adjacent
    /// pair is index-degenerate, which only a two-slot template returns).
    pub threshold_mm: f64,
}

impl Arrangement {
    /// Core-id adjacency pairs implied by the template.
    pub fn core_adjacency(&self, layout: &LayoutTemplate) -> Vec<(usize, usize)> {
        layout
            .adjacency
            .iter()
            .map(|&(i, j)| (self.slot_cores[i], self.slot_cores[j]))
            .collect()
    }

    /// `(core id, position)` for every slot.
    pub fn positions(&self, layout: &LayoutTemplate) -> Vec<(usize, Polar)> {
        self.slot_cores
            .iter()
            .zip(&layout.slots)
            .map(|(&id, &p)| (id, p))
            .collect()
    }
}

fn arrangement_threshold(perm: &[usize], n_eff: &[f64], layout: &LayoutTemplate, pitch_um: f64) -> f64 {
    layout
        .adjacency
        .iter()
        .map(|&(i, j)| pair_threshold_mm(pitch_um, n_eff[perm[i]], n_eff[perm[j]]))
        .fold(0.0, f64::max)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Exhaustive search for the core placement with the smallest threshold bend
/// radius. Among equally good placements the lexicographically smallest
/// slot-to-core-id sequence wins.
pub fn optimize_arrangement(cores: &[FiberCore], layout: &LayoutTemplate, pitch_um: f64) -> Result<Arrangement> {
    if cores.len() != layout.slots.len() {
        return Err(Error::Shape(format!(
            "{} cores for {} layout slots",
            cores.len(),
            layout.slots.len()
        )));
    }
    if cores.len() > 9 {
        return Err(Error::Shape(format!(
            "exhaustive placement search is limited to 9 cores (got {})",
            cores.len()
        )));
    }
    let mut sorted: Vec<&FiberCore> = cores.iter().collect();
    sorted.sort_by_key(|c| c.id);
    let n_eff: Vec<f64> = sorted.iter().map(|c| c.n_eff).collect();
    let ids: Vec<usize> = sorted.iter().map(|c| c.id).collect();

    let mut perm: Vec<usize> = (0..cores.len()).collect();
    let mut best_perm = perm.clone();
    let mut best = arrangement_threshold(&perm, &n_eff, layout, pitch_um);
    while next_permutation(&mut perm) {
        let r = arrangement_threshold(&perm, &n_eff, layout, pitch_um);
        if r < best {
            best = r;
            best_perm.copy_from_slice(&perm);
        }
    }
    if !best.is_finite() && cores.len() > 2 {
        let (i, j) = layout
            .adjacency
            .iter()
            .copied()
            .find(|&(i, j)| n_eff[best_perm[i]] == n_eff[best_perm[j]])
            .expect("an infinite threshold has a degenerate pair");
        return Err(Error::DegeneratePair {
            a: ids[best_perm[i]],
            b: ids[best_perm[j]],
            n_eff: n_eff[best_perm[i]],
        });
    }
    Ok(Arrangement {
        slot_cores: best_perm.iter().map(|&k| ids[k]).collect(),
        threshold_mm: best,
    })
}

/// Group delay of a core under a bend, ps/km.
pub fn bent_group_delay(core: &FiberCore, wavelength_nm: f64, bend: &BendState) -> Result<f64> {
    check_radius(bend.bend_radius_mm)?;
    Ok(core.group_delay(wavelength_nm)?
        * bend_factor(core.position.r, bend.orientation, bend.bend_radius_mm))
}

/// Change of a core's group delay under a bend, ps/km.
pub fn bend_delay_variation(core: &FiberCore, wavelength_nm: f64, bend: &BendState) -> Result<f64> {
    check_radius(bend.bend_radius_mm)?;
    let tau = core.group_delay(wavelength_nm)?;
    Ok(tau * core.position.r * bend.orientation.cos() / (bend.bend_radius_mm * UM_PER_MM))
}

/// Mean bent delay while the cross-section rotates by `rotations` turns
/// starting at azimuth `start_theta`, by composite trapezoid quadrature.
pub fn rotation_averaged_delay(
    core: &FiberCore,
    wavelength_nm: f64,
    bend_radius_mm: f64,
    start_theta: f64,
    rotations: f64,
) -> Result<f64> {
    check_radius(bend_radius_mm)?;
    if !(rotations > 0.0) {
        return Err(Error::Domain(format!(
            "rotation span must be > 0 turns (got {rotations})"
        )));
    }
    let tau = core.group_delay(wavelength_nm)?;
    let nodes = (TWIST_QUADRATURE_POINTS as f64 * rotations).ceil().max(2.0) as usize;
    let span = 2.0 * PI * rotations;
    let h = span / nodes as f64;
    let f = |k: usize| bend_factor(core.position.r, start_theta + h * k as f64, bend_radius_mm);
    let interior: f64 = (1..nodes).map(f).sum();
    let integral = h * (0.5 * (f(0) + f(nodes)) + interior);
    Ok(tau * integral / span)
}

/// Bent delay averaged over `twist_turns` complete rotations of the core about
/// the fiber axis at constant bend radius. Starts from the core's own azimuth.
pub fn twist_averaged_delay(
    core: &FiberCore,
    wavelength_nm: f64,
    bend_radius_mm: f64,
    twist_turns: u32,
) -> Result<f64> {
    if twist_turns == 0 {
        return Err(Error::Domain("twist averaging needs at least one turn".into()));
    }
    rotation_averaged_delay(
        core,
        wavelength_nm,
        bend_radius_mm,
        core.position.theta,
        twist_turns as f64,
    )
}

/// Worst-case adjacent-pair crosstalk versus bend radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkCurve {
    pub radii: Vec<f64>,
    pub xtalk_db: Vec<f64>,
    pub peak_radius: f64,
}

/// Two-core coupled-power estimator. Power transfer between a pair is taken
/// as `κ² / (κ² + δ²)`, with `δ` half the propagation-constant mismatch, and
/// is unity whenever the bend sweeps the pair through phase matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    /// Coupling coefficient κ, 1/m.
    pub coupling_per_m: f64,
    pub wavelength_nm: f64,
}

impl CouplingModel {
    /// Picks κ so the least-mismatched adjacent pair of the straight fiber
    /// couples exactly `floor_db`.
    pub fn calibrated(link: &McfLink, floor_db: f64) -> Result<Self> {
        threshold_bend_radius(link)?;
        let wavelength_nm = link.cores()[0].model.anchor_nm;
        let min_gap = link
            .adjacency()
            .iter()
            .map(|&(a, b)| pair_indices(link, a, b))
            .map(|(na, nb)| (na - nb).abs())
            .fold(f64::INFINITY, f64::min);
        let delta = 0.5 * wavenumber_per_m(wavelength_nm) * min_gap;
        let p = 10f64.powf(floor_db / 10.0);
        Ok(Self {
            coupling_per_m: delta * (p / (1.0 - p)).sqrt(),
            wavelength_nm,
        })
    }

    /// Coupled power fraction of one pair at one bend radius, dB.
    pub fn pair_crosstalk_db(&self, pitch_um: f64, n_a: f64, n_b: f64, bend_radius_mm: f64) -> Result<f64> {
        check_radius(bend_radius_mm)?;
        let gap = n_a - n_b;
        let amplitude = n_a.max(n_b) * pitch_um / (bend_radius_mm * UM_PER_MM);
        let mut min_abs = f64::INFINITY;
        let mut first_sign = 0.0;
        let mut matched = false;
        for k in 0..PHASE_SWEEP_SAMPLES {
            let phi = 2.0 * PI * k as f64 / PHASE_SWEEP_SAMPLES as f64;
            let mismatch = gap + amplitude * phi.cos();
            if mismatch == 0.0 {
                matched = true;
                break;
            }
            if k == 0 {
                first_sign = mismatch.signum();
            } else if mismatch.signum() != first_sign {
                matched = true;
                break;
            }
            min_abs = min_abs.min(mismatch.abs());
        }
        if matched {
            return Ok(0.0);
        }
        let kappa2 = self.coupling_per_m.powi(2);
        let delta = 0.5 * wavenumber_per_m(self.wavelength_nm) * min_abs;
        Ok(10.0 * (kappa2 / (kappa2 + delta * delta)).log10())
    }
}

fn wavenumber_per_m(wavelength_nm: f64) -> f64 {
    2.0 * PI / (wavelength_nm * 1e-9)
}

fn pair_indices(link: &McfLink, a: usize, b: usize) -> (f64, f64) {
    (
        link.core_by_id(a).expect("validated adjacency").n_eff,
        link.core_by_id(b).expect("validated adjacency").n_eff,
    )
}

/// Worst adjacent-pair crosstalk at each radius, with the coupling calibrated
/// to the default straight-fiber floor.
pub fn crosstalk_curve(link: &McfLink, radii: &[f64]) -> Result<CrosstalkCurve> {
    let model = CouplingModel::calibrated(link, DEFAULT_FLOOR_DB)?;
    crosstalk_curve_with(link, radii, &model)
}

pub fn crosstalk_curve_with(link: &McfLink, radii: &[f64], model: &CouplingModel) -> Result<CrosstalkCurve> {
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("bend radii must be sorted ascending".into()));
    }
    let threshold = threshold_bend_radius(link)?;
    let mut xtalk_db = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut worst = f64::NEG_INFINITY;
        for &(a, b) in link.adjacency() {
            let (na, nb) = pair_indices(link, a, b);
            worst = worst.max(model.pair_crosstalk_db(link.core_pitch_um, na, nb, r)?);
        }
        xtalk_db.push(worst);
    }
    Ok(CrosstalkCurve {
        radii: radii.to_vec(),
        xtalk_db,
        peak_radius: threshold.radius_mm,
    })
}
