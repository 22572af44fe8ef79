//! Birefringent phase matching for degenerate-pump SFWM.
//!
//! The pump travels on the slow axis and the pair on the fast axis, so the
//! birefringence enters only the pump term of the mismatch:
//!
//! `Δk = 2[n(ω_p) + Δn] ω_p / c − n(ω_s) ω_s / c − n(ω_i) ω_i / c`
//!
//! Energy conservation `ω_s + ω_i = 2 ω_p` is built into the parametrisation
//! `ω_s = ω_p + Ω`, `ω_i = ω_p − Ω`; only the detuning Ω is solved for.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dispersion::SellmeierModel;
use crate::units::{omega_to_wavelength, wavelength_to_omega, wavelength_width_to_omega, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Residual |Δk| accepted from the root finder, 1/m.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Spectrometer resolution used as the default consistency tolerance when
/// inverting measured wavelengths.
pub const SPECTROMETER_RESOLUTION: f64 = 0.2e-9;

/// Physical parameters of one source waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideSpec {
    /// Birefringence between slow (pump) and fast (pair) axes.
    pub delta_n: f64,
    /// Interaction length, m.
    pub length: f64,
    /// Pump vacuum wavelength, m.
    pub pump_wavelength: f64,
    pub label: String,
    /// Informational only; never read by the models.
    pub fabrication_meta: BTreeMap<String, String>,
}

impl Default for WaveguideSpec {
    fn default() -> Self {
        let fabrication_meta = [
            ("pulse_energy_nj", "260"),
            ("writing_velocity_mm_per_s", "1.268"),
            ("writing_wavelength_nm", "513"),
            ("writing_rep_rate_mhz", "1"),
            ("depth_um", "75"),
            ("objective", "100x 0.70 NA"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Self {
            delta_n: 6e-5,
            length: 20e-3,
            pump_wavelength: 780e-9,
            label: "wg-000".into(),
            fabrication_meta,
        }
    }
}

impl WaveguideSpec {
    pub fn with_delta_n(&self, delta_n: f64) -> Self {
        Self {
            delta_n,
            ..self.clone()
        }
    }

    pub fn pump_omega(&self) -> f64 {
        wavelength_to_omega(self.pump_wavelength)
    }

    pub fn validate(&self, model: &SellmeierModel) -> Result<()> {
        if !(self.delta_n >= 0.0) || !self.delta_n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta_n must be >= 0 (got {})",
                self.delta_n
            )));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "waveguide length must be > 0 (got {})",
                self.length
            )));
        }
        if !model.contains_um(self.pump_wavelength * 1e6) {
            return Err(Error::Domain(format!(
                "pump wavelength {} nm outside dispersion range",
                self.pump_wavelength * 1e9
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMatchSolution {
    pub omega_s: f64,
    pub omega_i: f64,
    pub lambda_s: f64,
    pub lambda_i: f64,
    /// Ω with ω_s = ω_p + Ω and ω_i = ω_p − Ω.
    pub detuning: f64,
    /// Δk at the returned root, 1/m.
    pub residual_k: f64,
}

impl PhaseMatchSolution {
    fn from_detuning(omega_p: f64, detuning: f64, residual_k: f64) -> Self {
        let omega_s = omega_p + detuning;
        let omega_i = omega_p - detuning;
        Self {
            omega_s,
            omega_i,
            lambda_s: omega_to_wavelength(omega_s),
            lambda_i: omega_to_wavelength(omega_i),
            detuning,
            residual_k,
        }
    }
}

fn mismatch(model: &SellmeierModel, delta_n: f64, omega_p: f64, omega_s: f64, omega_i: f64) -> Result<f64> {
    let n_p = model.index_at_angular_frequency(omega_p)?;
    let n_s = model.index_at_angular_frequency(omega_s)?;
    let n_i = model.index_at_angular_frequency(omega_i)?;
    Ok((2.0 * (n_p + delta_n) * omega_p - n_s * omega_s - n_i * omega_i) / SPEED_OF_LIGHT)
}

/// Δk (1/m) at pump-symmetric detuning Ω (rad/s).
pub fn phase_mismatch(model: &SellmeierModel, spec: &WaveguideSpec, detuning: f64) -> Result<f64> {
    let omega_p = spec.pump_omega();
    mismatch(model, spec.delta_n, omega_p, omega_p + detuning, omega_p - detuning)
}

/// Δk (1/m) for independent signal and idler frequencies.
///
/// The two pump photons are taken at the mean frequency `(ω_s + ω_i)/2`, so
/// on the energy-conserving line this coincides with [`phase_mismatch`].
pub fn phase_mismatch_pair(model: &SellmeierModel, spec: &WaveguideSpec, omega_s: f64, omega_i: f64) -> Result<f64> {
    mismatch(model, spec.delta_n, 0.5 * (omega_s + omega_i), omega_s, omega_i)
}

/// Solve Δk(Ω) = 0 for the nondegenerate root Ω > 0.
///
/// Ω is scanned upward from zero in 1 nm-equivalent steps until Δk changes
/// sign, then refined with Brent's method.
pub fn solve_phase_matching(model: &SellmeierModel, spec: &WaveguideSpec) -> Result<PhaseMatchSolution> {
    spec.validate(model)?;
    if spec.delta_n == 0.0 {
        return Err(Error::DegenerateOnly);
    }
    let omega_p = spec.pump_omega();
    let step = wavelength_width_to_omega(spec.pump_wavelength, 1e-9);
    let f = |omega: f64| phase_mismatch(model, spec, omega);

    let mut lo = 0.0;
    let mut f_lo = f(0.0)?;
    let mut k = 1u32;
    let (hi, f_hi) = loop {
        let hi = step * f64::from(k);
        let f_hi = if hi < omega_p { f(hi).ok() } else { None };
        match f_hi {
            Some(v) if v.signum() != f_lo.signum() || v == 0.0 => break (hi, v),
            Some(v) => {
                lo = hi;
                f_lo = v;
                k += 1;
            }
            None => {
                return Err(Error::NoSolution {
                    lower: 0.0,
                    upper: lo,
                    dk_lower: f(0.0)?,
                    dk_upper: f_lo,
                })
            }
        }
    };

    let root = brent(f, lo, hi, f_lo, f_hi)?;
    let residual = f(root)?;
    if residual.abs() > RESIDUAL_TOLERANCE {
        return Err(Error::Numerical(format!(
            "root refinement stalled at residual {residual:.3e} 1/m"
        )));
    }
    Ok(PhaseMatchSolution::from_detuning(omega_p, root, residual))
}

fn brent(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, fa: f64, fb: f64) -> Result<f64> {
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..200 {
        if fb == 0.0 || fb.abs() < 0.01 * RESIDUAL_TOLERANCE {
            return Ok(b);
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * b.abs() {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let between = (s > lo.min(b)) && (s < lo.max(b));
        let tol = 2.0 * f64::EPSILON * b.abs();
        if !between
            || (bisected && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!bisected && (s - b).abs() >= (c - d).abs() / 2.0)
            || (bisected && (b - c).abs() < tol)
            || (!bisected && (c - d).abs() < tol)
        {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s)?;
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Err(Error::Numerical("Brent iteration did not converge".into()))
}

/// One row of a birefringence perturbation scan. Each side carries its own
/// solver outcome so failed points stay on the η axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPoint {
    pub eta: f64,
    /// Solution at Δn·(1 + η).
    pub plus: Result<PhaseMatchSolution>,
    /// Solution at Δn·(1 − η).
    pub minus: Result<PhaseMatchSolution>,
}

impl PerturbationPoint {
    /// Largest |λ − λ_0| over both arms and both signs of η, m.
    pub fn max_fluctuation(&self, base: &PhaseMatchSolution) -> Option<f64> {
        let plus = self.plus.as_ref().ok()?;
        let minus = self.minus.as_ref().ok()?;
        [
            plus.lambda_s - base.lambda_s,
            minus.lambda_s - base.lambda_s,
            plus.lambda_i - base.lambda_i,
            minus.lambda_i - base.lambda_i,
        ]
        .into_iter()
        .map(f64::abs)
        .reduce(f64::max)
    }

    /// Largest signal-arm shift over both signs of η, m.
    pub fn max_signal_shift(&self, base: &PhaseMatchSolution) -> Option<f64> {
        let plus = self.plus.as_ref().ok()?;
        let minus = self.minus.as_ref().ok()?;
        Some((plus.lambda_s - base.lambda_s).abs().max((minus.lambda_s - base.lambda_s).abs()))
    }
}

/// Solve phase matching at Δn(1 ± η) for every η in `etas`.
pub fn perturbation_scan(model: &SellmeierModel, spec: &WaveguideSpec, etas: &[f64]) -> Result<Vec<PerturbationPoint>> {
    spec.validate(model)?;
    if let Some(bad) = etas.iter().find(|e| !(**e >= 0.0 && **e < 0.5)) {
        return Err(Error::InvalidParameter(format!(
            "perturbation eta must lie in [0, 0.5) (got {bad})"
        )));
    }
    Ok(etas
        .par_iter()
        .map(|&eta| PerturbationPoint {
            eta,
            plus: solve_phase_matching(model, &spec.with_delta_n(spec.delta_n * (1.0 + eta))),
            minus: solve_phase_matching(model, &spec.with_delta_n(spec.delta_n * (1.0 - eta))),
        })
        .collect())
}

/// Uniform η grid `[0, max]` with `points` entries.
pub fn eta_grid(max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| max * k as f64 / (points - 1) as f64).collect(),
    }
}

/// Birefringence implied by measured pump, signal and idler wavelengths.
///
/// The triple is accepted if energy conservation can be restored by moving
/// each wavelength by at most `resolution`. The signal and idler are then
/// projected symmetrically onto `ω_s + ω_i = 2ω_p` (keeping ω_s − ω_i) and
/// the mismatch equation is inverted in closed form.
pub fn infer_birefringence(
    model: &SellmeierModel,
    lambda_p: f64,
    lambda_s: f64,
    lambda_i: f64,
    resolution: f64,
) -> Result<f64> {
    if !(lambda_s <= lambda_p && lambda_p <= lambda_i) {
        return Err(Error::InconsistentInput(format!(
            "expected signal < pump < idler, got {:.4}/{:.4}/{:.4} nm",
            lambda_s * 1e9,
            lambda_p * 1e9,
            lambda_i * 1e9
        )));
    }
    let violation = (2.0 / lambda_p - 1.0 / lambda_s - 1.0 / lambda_i).abs();
    let allowance = resolution * (2.0 / (lambda_p * lambda_p) + 1.0 / (lambda_s * lambda_s) + 1.0 / (lambda_i * lambda_i));
    if violation > allowance {
        let pump_equiv = violation * lambda_p * lambda_p / 2.0;
        return Err(Error::InconsistentInput(format!(
            "energy conservation violated by {:.3} nm (pump-equivalent), beyond {:.3} nm resolution",
            pump_equiv * 1e9,
            resolution * 1e9
        )));
    }
    let omega_p = wavelength_to_omega(lambda_p);
    let detuning = 0.5 * (wavelength_to_omega(lambda_s) - wavelength_to_omega(lambda_i));
    let omega_s = omega_p + detuning;
    let omega_i = omega_p - detuning;
    let n_p = model.index_at_angular_frequency(omega_p)?;
    let n_s = model.index_at_angular_frequency(omega_s)?;
    let n_i = model.index_at_angular_frequency(omega_i)?;
    Ok((n_s * omega_s + n_i * omega_i - 2.0 * n_p * omega_p) / (2.0 * omega_p))
}
