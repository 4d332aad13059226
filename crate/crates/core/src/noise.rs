//! Noise model and calibration against measured `χ` and `S`.
//!
//! Three knobs act on the exact pipeline:
//! - `ideal_fraction` mixes the prepared state with `I/16`;
//! - `phase` is a relative phase on the `|10⟩` component of each singlet;
//! - `visibility` is a depolarizing channel on Alice's qubits before her
//!   second and third measurements (consumed by [`Engine`]).
//!
//! `detection_efficiency` only thins sampled shots.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DensityOperator;
use crate::model::{hyperentangled_state, DIM};
use crate::sequential::{CorrelatorReport, Engine, SignMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Weight of the prepared pure state; the rest is maximally mixed.
    #[serde(alias = "state_white_noise")]
    pub ideal_fraction: f64,
    /// Relative preparation phase per singlet, radians.
    #[serde(alias = "prep_phase_error")]
    pub phase: f64,
    /// Strength kept by the between-measurement depolarizing channel.
    #[serde(alias = "per_measurement_visibility")]
    pub visibility: f64,
    pub detection_efficiency: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl NoiseModel {
    pub const IDEAL: NoiseModel = NoiseModel {
        ideal_fraction: 1.0,
        phase: 0.0,
        visibility: 1.0,
        detection_efficiency: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let check = |name, value: f64, ok: bool, range| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(Error::ParameterOutOfRange { name, value, range })
            }
        };
        check(
            "ideal_fraction",
            self.ideal_fraction,
            (0.0..=1.0).contains(&self.ideal_fraction),
            "[0, 1]",
        )?;
        check("phase", self.phase, self.phase.is_finite(), "finite reals")?;
        check(
            "visibility",
            self.visibility,
            (0.0..=1.0).contains(&self.visibility),
            "[0, 1]",
        )?;
        check(
            "detection_efficiency",
            self.detection_efficiency,
            self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0,
            "(0, 1]",
        )
    }

    pub fn engine(&self) -> Result<Engine> {
        self.validate()?;
        Engine::with_visibility(self.visibility)
    }

    /// State and engine for this model.
    pub fn prepare(&self) -> Result<(DensityOperator, Engine)> {
        Ok((apply_noise(self)?, self.engine()?))
    }

    pub fn evaluate(&self, mode: SignMode) -> Result<CorrelatorReport> {
        let (state, engine) = self.prepare()?;
        engine.evaluate_omega(&state, mode)
    }
}

/// Prepared state under white noise and preparation phase. Visibility and
/// detection efficiency are applied later in the pipeline.
pub fn apply_noise(model: &NoiseModel) -> Result<DensityOperator> {
    model.validate()?;
    let pure = hyperentangled_state(model.phase).density();
    if model.ideal_fraction == 1.0 {
        return Ok(pure);
    }
    Ok(pure.mix(&DensityOperator::maximally_mixed(DIM), model.ideal_fraction))
}

/// Second calibration axis (visibility is always the first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationAxis {
    /// Preparation phase on `[0, π/2]`, ideal fraction fixed at 1.
    #[default]
    Phase,
    /// Ideal fraction on `[0, 1]`, phase fixed at 0.
    WhiteNoise,
}

impl CalibrationAxis {
    fn range(self) -> (f64, f64) {
        match self {
            CalibrationAxis::Phase => (0.0, FRAC_PI_2),
            CalibrationAxis::WhiteNoise => (0.0, 1.0),
        }
    }

    fn model(self, visibility: f64, x: f64) -> NoiseModel {
        match self {
            CalibrationAxis::Phase => NoiseModel {
                phase: x,
                visibility,
                ..NoiseModel::IDEAL
            },
            CalibrationAxis::WhiteNoise => NoiseModel {
                ideal_fraction: x,
                visibility,
                ..NoiseModel::IDEAL
            },
        }
    }
}

impl FromStr for CalibrationAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(CalibrationAxis::Phase),
            "white-noise" => Ok(CalibrationAxis::WhiteNoise),
            other => Err(Error::Config(format!("unknown calibration axis `{other}`"))),
        }
    }
}

impl fmt::Display for CalibrationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CalibrationAxis::Phase => "phase",
            CalibrationAxis::WhiteNoise => "white-noise",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    pub chi: f64,
    pub s: f64,
}

impl CalibrationTargets {
    /// Measured values of the experiment.
    pub const MEASURED: CalibrationTargets = CalibrationTargets {
        chi: 5.817,
        s: 11.430,
    };
}

/// Per-target acceptance window of a calibration.
pub const CALIBRATION_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub axis: CalibrationAxis,
    pub targets: CalibrationTargets,
    pub model: NoiseModel,
    /// Values of the full engine at `model` (absolute-mode `S`).
    pub chi: f64,
    pub s: f64,
    pub omega: f64,
    pub chi_residual: f64,
    pub s_residual: f64,
    /// Both residuals within [`CALIBRATION_TOL`].
    pub converged: bool,
}

/// Exact response of χ and the twelve signed S-correlators over
/// (visibility, axis).
///
/// Every branch weight of the pipeline is a polynomial of degree ≤ 2 in the
/// visibility (the channel is affine and applied twice). The state is linear
/// in the ideal fraction, and its entries are trigonometric polynomials of
/// degree ≤ 2 in the preparation phase (two singlets, one `e^{iφ}` each).
/// Sampling the full pipeline on a tensor grid of nodes therefore pins the
/// surface down exactly.
struct ResponseSurface {
    axis: CalibrationAxis,
    /// `coeffs[q][j][m]`: quantity `q` (0 = χ, 1..=12 = S-terms), visibility
    /// power `j`, axis basis function `m`.
    coeffs: Vec<[Vec<f64>; 3]>,
}

const PHASE_NODES: usize = 5;

impl ResponseSurface {
    fn axis_nodes(axis: CalibrationAxis) -> Vec<f64> {
        match axis {
            CalibrationAxis::Phase => (0..PHASE_NODES)
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / PHASE_NODES as f64)
                .collect(),
            CalibrationAxis::WhiteNoise => vec![0.0, 1.0],
        }
    }

    fn basis(axis: CalibrationAxis, x: f64) -> Vec<f64> {
        match axis {
            CalibrationAxis::Phase => vec![
                1.0,
                x.cos(),
                x.sin(),
                (2.0 * x).cos(),
                (2.0 * x).sin(),
            ],
            CalibrationAxis::WhiteNoise => vec![1.0 - x, x],
        }
    }

    fn build(axis: CalibrationAxis) -> Result<Self> {
        let nodes = Self::axis_nodes(axis);
        // samples[node][eta][q]
        let mut samples = Vec::with_capacity(nodes.len());
        for &x in &nodes {
            let mut per_eta = Vec::with_capacity(3);
            for eta in [0.0, 0.5, 1.0] {
                let r = axis.model(eta, x).evaluate(SignMode::Absolute)?;
                let mut q = vec![r.chi.total];
                q.extend(r.s.terms.iter().map(|t| t.signed));
                per_eta.push(q);
            }
            samples.push(per_eta);
        }
        let coeffs = (0..13)
            .map(|q| {
                // Quadratic in η at each node: values at 0, 1/2, 1.
                let poly: Vec<[f64; 3]> = samples
                    .iter()
                    .map(|s| {
                        let (f0, fh, f1) = (s[0][q], s[1][q], s[2][q]);
                        let c2 = 2.0 * (f1 - 2.0 * fh + f0);
                        [f0, f1 - f0 - c2, c2]
                    })
                    .collect();
                std::array::from_fn(|j| {
                    let vals: Vec<f64> = poly.iter().map(|p| p[j]).collect();
                    Self::fit_axis(axis, &nodes, &vals)
                })
            })
            .collect();
        Ok(ResponseSurface { axis, coeffs })
    }

    fn fit_axis(axis: CalibrationAxis, nodes: &[f64], vals: &[f64]) -> Vec<f64> {
        match axis {
            CalibrationAxis::Phase => {
                let n = nodes.len() as f64;
                let dot = |f: &dyn Fn(f64) -> f64| -> f64 {
                    nodes.iter().zip(vals).map(|(&x, &v)| v * f(x)).sum::<f64>() * 2.0 / n
                };
                vec![
                    vals.iter().sum::<f64>() / n,
                    dot(&|x| x.cos()),
                    dot(&|x| x.sin()),
                    dot(&|x| (2.0 * x).cos()),
                    dot(&|x| (2.0 * x).sin()),
                ]
            }
            // Basis (1 − x, x) at nodes 0 and 1 is the identity.
            CalibrationAxis::WhiteNoise => vals.to_vec(),
        }
    }

    fn quantity(&self, q: usize, eta: f64, basis: &[f64]) -> f64 {
        let c = &self.coeffs[q];
        let at = |j: usize| c[j].iter().zip(basis).map(|(a, b)| a * b).sum::<f64>();
        at(0) + eta * (at(1) + eta * at(2))
    }

    /// `(χ, absolute-mode S)`.
    fn values(&self, eta: f64, x: f64) -> (f64, f64) {
        let basis = Self::basis(self.axis, x);
        let chi = self.quantity(0, eta, &basis);
        let s = (1..13).map(|q| self.quantity(q, eta, &basis).abs()).sum();
        (chi, s)
    }

    fn objective(&self, eta: f64, x: f64, t: &CalibrationTargets) -> f64 {
        let (chi, s) = self.values(eta, x);
        (chi - t.chi).powi(2) + (s - t.s).powi(2)
    }
}

const GRID: usize = 101;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_min(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Fits (visibility, `axis`) to the targets: a 101×101 grid, then
/// alternating golden-section refinement on each axis. Deterministic.
///
/// Returns the best model even when it misses the targets; check
/// [`CalibrationResult::converged`]. Targets above the quantum maxima are
/// rejected outright.
pub fn calibrate(targets: CalibrationTargets, axis: CalibrationAxis) -> Result<CalibrationResult> {
    if !(targets.chi.is_finite() && targets.s.is_finite()) {
        return Err(Error::InfeasibleTargets(format!(
            "χ = {} and S = {} must be finite",
            targets.chi, targets.s
        )));
    }
    let surface = ResponseSurface::build(axis)?;
    let (xlo, xhi) = axis.range();
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (GRID - 1) as f64;

    let mut best = (f64::INFINITY, 0.0, 0.0);
    for j in 0..GRID {
        let x = step(xlo, xhi, j);
        for i in 0..GRID {
            let eta = step(0.0, 1.0, i);
            let v = surface.objective(eta, x, &targets);
            if v < best.0 {
                best = (v, eta, x);
            }
        }
    }
    let (mut fbest, mut eta, mut x) = best;
    let half = [1.0 / (GRID - 1) as f64, (xhi - xlo) / (GRID - 1) as f64];

    // A candidate replaces the incumbent only if it strictly improves.
    for _ in 0..500 {
        if fbest <= 1e-26 {
            break;
        }
        let start = fbest;
        let (lo, hi) = ((eta - half[0]).max(0.0), (eta + half[0]).min(1.0));
        let (e, fe) = golden_min(lo, hi, |e| surface.objective(e, x, &targets));
        if fe < fbest {
            eta = e;
            fbest = fe;
        }
        let (lo, hi) = ((x - half[1]).max(xlo), (x + half[1]).min(xhi));
        let (nx, fx) = golden_min(lo, hi, |xx| surface.objective(eta, xx, &targets));
        if fx < fbest {
            x = nx;
            fbest = fx;
        }
        if start - fbest <= 1e-18 * start.max(1e-300) {
            break;
        }
    }

    let model = axis.model(eta, x);
    let report = model.evaluate(SignMode::Absolute)?;
    let chi_residual = report.chi.total - targets.chi;
    let s_residual = report.s.total - targets.s;
    Ok(CalibrationResult {
        axis,
        targets,
        model,
        chi: report.chi.total,
        s: report.s.total,
        omega: report.omega,
        chi_residual,
        s_residual,
        converged: chi_residual.abs() <= CALIBRATION_TOL && s_residual.abs() <= CALIBRATION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent closed form: single-qubit correlators are ±1, two-qubit
    /// X/Y correlators pick up cos φ per singlet, and each depolarization
    /// before a measurement scales its correlator by η.
    fn closed_form(v: f64, phi: f64, eta: f64) -> (f64, f64) {
        let c = phi.cos();
        let chi = 6.0 * eta * eta;
        let pos2 = 1.0 + c.abs() + c * c + 1.0 + c.abs() + c * c;
        let pos3 = 1.0 + c.abs() + c.abs() + c.abs() + 1.0 + 1.0;
        (chi, v * (eta * pos2 + eta * eta * pos3))
    }

    #[test]
    fn identity_model_is_ideal_state() {
        let s = apply_noise(&NoiseModel::IDEAL).unwrap();
        assert_eq!(s, crate::model::build_ideal_state().density());
    }

    #[test]
    fn zero_fraction_is_maximally_mixed() {
        let m = NoiseModel {
            ideal_fraction: 0.0,
            ..NoiseModel::IDEAL
        };
        let s = apply_noise(&m).unwrap();
        assert!(s
            .operator()
            .max_abs_diff(DensityOperator::maximally_mixed(16).operator())
            < 1e-15);
    }

    #[test]
    fn five_sixths_white_noise_hits_sixteen() {
        let m = NoiseModel {
            ideal_fraction: 5.0 / 6.0,
            ..NoiseModel::IDEAL
        };
        let r = m.evaluate(SignMode::Absolute).unwrap();
        assert!((r.chi.total - 6.0).abs() < 1e-9);
        assert!((r.s.total - 10.0).abs() < 1e-9);
        assert!((r.omega - 16.0).abs() < 1e-9);
    }

    #[test]
    fn range_checks() {
        for bad in [
            NoiseModel { ideal_fraction: 1.5, ..NoiseModel::IDEAL },
            NoiseModel { visibility: -0.1, ..NoiseModel::IDEAL },
            NoiseModel { detection_efficiency: 0.0, ..NoiseModel::IDEAL },
            NoiseModel { phase: f64::NAN, ..NoiseModel::IDEAL },
        ] {
            assert!(matches!(
                apply_noise(&bad),
                Err(Error::ParameterOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn engine_matches_closed_form() {
        for &(v, phi, eta) in &[
            (1.0, 0.0, 1.0),
            (0.9, 0.3, 0.95),
            (0.7, 1.2, 0.6),
            (1.0, 0.26, 0.9846),
            (0.5, 0.0, 0.3),
        ] {
            let m = NoiseModel {
                ideal_fraction: v,
                phase: phi,
                visibility: eta,
                ..NoiseModel::IDEAL
            };
            let r = m.evaluate(SignMode::Absolute).unwrap();
            let (chi, s) = closed_form(v, phi, eta);
            assert!((r.chi.total - chi).abs() < 1e-9, "{v} {phi} {eta}");
            assert!((r.s.total - s).abs() < 1e-9, "{v} {phi} {eta}");
        }
    }

    #[test]
    fn response_surface_is_exact() {
        for axis in [CalibrationAxis::Phase, CalibrationAxis::WhiteNoise] {
            let r = ResponseSurface::build(axis).unwrap();
            for (eta, x) in [(0.1, 0.4), (0.37, 0.9), (0.8, 0.05), (0.99, 0.77)] {
                let direct = axis.model(eta, x).evaluate(SignMode::Absolute).unwrap();
                let (chi, s) = r.values(eta, x);
                assert!((chi - direct.chi.total).abs() < 1e-10, "{axis} {eta} {x}");
                assert!((s - direct.s.total).abs() < 1e-10, "{axis} {eta} {x}");
            }
        }
    }

    #[test]
    fn noiseless_targets_give_identity_model() {
        let r = calibrate(CalibrationTargets { chi: 6.0, s: 12.0 }, CalibrationAxis::Phase).unwrap();
        assert_eq!(r.model.visibility, 1.0);
        assert_eq!(r.model.phase, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn phase_only_solution() {
        let r = calibrate(CalibrationTargets { chi: 6.0, s: 10.0 }, CalibrationAxis::Phase).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.chi_residual.abs() < 0.02 && r.s_residual.abs() < 0.02);
        // 1-D oracle: with η = 1, S(φ) = 5 + 5c + 2c², so c solves 2c² + 5c − 5 = 0.
        let c = (-5.0 + 65f64.sqrt()) / 4.0;
        assert!((r.model.phase.cos() - c).abs() < 1e-3);
        assert!((r.model.visibility - 1.0).abs() < 1e-6);
    }

    #[test]
    fn measured_targets() {
        let r = calibrate(CalibrationTargets::MEASURED, CalibrationAxis::Phase).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.omega - 17.247).abs() < 0.03);
        // Frozen after the first successful run.
        assert!((r.model.visibility - 0.984_631_911).abs() < 1e-8, "{}", r.model.visibility);
        assert!((r.model.phase - 0.260_313_493).abs() < 1e-7, "{}", r.model.phase);
        // Closed form: χ = 6η².
        assert!((r.model.visibility - (5.817f64 / 6.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn white_noise_axis() {
        let r = calibrate(CalibrationTargets::MEASURED, CalibrationAxis::WhiteNoise).unwrap();
        assert!(r.converged, "{r:?}");
        assert_eq!(r.model.phase, 0.0);
        // Closed form: S = v·(6η + 6η²) at φ = 0.
        let eta = r.model.visibility;
        let v = 11.430 / (6.0 * eta + 6.0 * eta * eta);
        assert!((r.model.ideal_fraction - v).abs() < 1e-9);
    }

    #[test]
    fn infeasible_targets() {
        // Out of physical range: best achievable fit with residuals.
        let r = calibrate(CalibrationTargets { chi: 6.5, s: 12.0 }, CalibrationAxis::Phase).unwrap();
        assert!(!r.converged);
        assert!((r.chi_residual + 0.5).abs() < 1e-9, "{}", r.chi_residual);
        assert!(r.s_residual.abs() < 1e-9);
        assert!(matches!(
            calibrate(CalibrationTargets { chi: f64::NAN, s: 12.0 }, CalibrationAxis::Phase),
            Err(Error::InfeasibleTargets(_))
        ));
        // Reachable in range but not simultaneously: χ = 6 forces η = 1, S = 2 needs a
        // larger phase than π/2 allows together with it.
        let r = calibrate(CalibrationTargets { chi: 6.0, s: 1.0 }, CalibrationAxis::Phase).unwrap();
        assert!(!r.converged);
    }
}
