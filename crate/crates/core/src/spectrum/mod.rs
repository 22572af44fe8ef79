//! Joint spectral amplitude of one source and the analyses built on it.
//!
//! `f(ω_s, ω_i) = α(ω_s + ω_i) · sinc(Δk(ω_s, ω_i) L / 2)` on uniform
//! angular-frequency grids, normalised so that `Σ |f|² Δω_s Δω_i = 1`.
//! The pump term α is the self-convolution of a Gaussian pump amplitude,
//! i.e. a Gaussian in the sum frequency.

mod filter;
pub mod io;
mod schmidt;

pub use filter::{
    FilterKind, FilterSet, SpectralFilter, BANDPASS_ORDER, COLLECTION_BANDWIDTH, EDGE_ORDER, EDGE_WIDTH,
    HOM_BANDWIDTH,
};
pub use schmidt::{reduced_density_matrix, schmidt_decompose, SchmidtResult};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::SellmeierModel;
use crate::phasematch::{phase_mismatch_pair, solve_phase_matching, WaveguideSpec};
use crate::units::{omega_to_wavelength, wavelength_to_omega, wavelength_width_to_omega};
use crate::{Error, Result};

pub const MIN_GRID_POINTS: usize = 64;

/// Gaussian pump pulse spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpEnvelope {
    pub center_wavelength: f64,
    /// Intensity FWHM in wavelength, m.
    pub bandwidth_fwhm: f64,
}

impl Default for PumpEnvelope {
    fn default() -> Self {
        Self {
            center_wavelength: 780e-9,
            bandwidth_fwhm: 2e-9,
        }
    }
}

impl PumpEnvelope {
    pub fn new(center_wavelength: f64, bandwidth_fwhm: f64) -> Result<Self> {
        if !(bandwidth_fwhm > 0.0) || !(center_wavelength > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pump needs positive center and bandwidth (got {center_wavelength}, {bandwidth_fwhm})"
            )));
        }
        Ok(Self {
            center_wavelength,
            bandwidth_fwhm,
        })
    }

    /// Intensity FWHM in angular frequency.
    pub fn omega_fwhm(&self) -> f64 {
        wavelength_width_to_omega(self.center_wavelength, self.bandwidth_fwhm)
    }

    /// Pair amplitude from two pump photons summing to `omega_sum`.
    pub fn sum_frequency_amplitude(&self, omega_sum: f64) -> f64 {
        // pump intensity ∝ exp(−δ²/s²); its amplitude self-convolution ∝ exp(−δ²/4s²)
        let s = self.omega_fwhm() / (2.0 * std::f64::consts::LN_2.sqrt());
        let d = omega_sum - 2.0 * wavelength_to_omega(self.center_wavelength);
        (-d * d / (4.0 * s * s)).exp()
    }
}

/// Uniform angular-frequency axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, len: usize) -> Result<Self> {
        if len < 2 || !(stop > start) || !(start > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid frequency grid [{start}, {stop}] with {len} points"
            )));
        }
        Ok(Self {
            start,
            step: (stop - start) / (len - 1) as f64,
            len,
        })
    }

    pub fn centered(center: f64, half_span: f64, len: usize) -> Result<Self> {
        Self::new(center - half_span, center + half_span, len)
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn stop(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.value(k)).collect()
    }
}

/// Grid layout for [`build_jsa`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub points_s: usize,
    pub points_i: usize,
    /// Half-width of each axis in units of the pump intensity FWHM.
    pub half_span_pump_widths: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points_s: 256,
            points_i: 256,
            half_span_pump_widths: 6.0,
        }
    }
}

impl GridConfig {
    pub fn square(points: usize) -> Self {
        Self {
            points_s: points,
            points_i: points,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        }
    }
}

/// Discretised complex JSA indexed `(signal, idler)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    pub signal: FrequencyGrid,
    pub idler: FrequencyGrid,
    pub amplitude: DMatrix<Complex64>,
    /// Probability that a pair survived every filter applied so far.
    pub survival: f64,
}

impl JointSpectrum {
    /// Sample `f` on the grids and normalise.
    pub fn from_fn(
        signal: FrequencyGrid,
        idler: FrequencyGrid,
        f: impl Fn(f64, f64) -> Complex64 + Sync,
    ) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = (0..signal.len)
            .into_par_iter()
            .map(|s| {
                let ws = signal.value(s);
                (0..idler.len).map(|i| f(ws, idler.value(i))).collect()
            })
            .collect();
        let amplitude = DMatrix::from_fn(signal.len, idler.len, |s, i| rows[s][i]);
        Self::from_parts(signal, idler, amplitude, 1.0)
    }

    pub fn from_parts(
        signal: FrequencyGrid,
        idler: FrequencyGrid,
        amplitude: DMatrix<Complex64>,
        survival: f64,
    ) -> Result<Self> {
        if amplitude.nrows() != signal.len || amplitude.ncols() != idler.len {
            return Err(Error::InvalidParameter(format!(
                "amplitude shape {}x{} does not match grids {}x{}",
                amplitude.nrows(),
                amplitude.ncols(),
                signal.len,
                idler.len
            )));
        }
        let mut js = Self {
            signal,
            idler,
            amplitude,
            survival,
        };
        let norm = js.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical(format!("joint spectrum has norm {norm}")));
        }
        js.amplitude /= Complex64::from(norm.sqrt());
        Ok(js)
    }

    pub fn cell_area(&self) -> f64 {
        self.signal.step * self.idler.step
    }

    /// `Σ |f|² Δω_s Δω_i`.
    pub fn norm(&self) -> f64 {
        self.amplitude.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    /// Grid position (signal, idler) of the largest |f|.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for i in 0..self.idler.len {
            for s in 0..self.signal.len {
                let v = self.amplitude[(s, i)].norm_sqr();
                if v > best.2 {
                    best = (s, i, v);
                }
            }
        }
        (best.0, best.1)
    }
}

/// Build the JSA of `spec` pumped by `pump`, on grids centred at the
/// phase-matched frequencies.
pub fn build_jsa(
    model: &SellmeierModel,
    spec: &WaveguideSpec,
    pump: &PumpEnvelope,
    grid: &GridConfig,
) -> Result<JointSpectrum> {
    let nominal = solve_phase_matching(model, spec)?;
    build_jsa_centered(model, spec, pump, grid, nominal.omega_s, nominal.omega_i)
}

/// As [`build_jsa`], with explicit grid centres. Sources of a chip share the
/// grid of their nominal design this way.
pub fn build_jsa_centered(
    model: &SellmeierModel,
    spec: &WaveguideSpec,
    pump: &PumpEnvelope,
    grid: &GridConfig,
    center_s: f64,
    center_i: f64,
) -> Result<JointSpectrum> {
    spec.validate(model)?;
    if grid.points_s < MIN_GRID_POINTS || grid.points_i < MIN_GRID_POINTS {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least {MIN_GRID_POINTS} points per axis"
        )));
    }
    if !(grid.half_span_pump_widths > 0.0) {
        return Err(Error::InvalidParameter("grid half span must be > 0".into()));
    }
    let half = grid.half_span_pump_widths * pump.omega_fwhm();
    let signal = FrequencyGrid::centered(center_s, half, grid.points_s)?;
    let idler = FrequencyGrid::centered(center_i, half, grid.points_i)?;
    let half_length = 0.5 * spec.length;

    let rows: Vec<Vec<Complex64>> = (0..signal.len)
        .into_par_iter()
        .map(|s| {
            let ws = signal.value(s);
            (0..idler.len)
                .map(|i| {
                    let wi = idler.value(i);
                    let dk = phase_mismatch_pair(model, spec, ws, wi)?;
                    Ok(Complex64::from(pump.sum_frequency_amplitude(ws + wi) * sinc(dk * half_length)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let amplitude = DMatrix::from_fn(signal.len, idler.len, |s, i| rows[s][i]);
    let js = JointSpectrum::from_parts(signal, idler, amplitude, 1.0)?;

    let (ps, pi) = js.argmax();
    if ps == 0 || pi == 0 || ps + 1 == signal.len || pi + 1 == idler.len {
        return Err(Error::GridTooSmall(format!(
            "|f| peaks on the grid boundary at ({:.4} nm, {:.4} nm)",
            omega_to_wavelength(signal.value(ps)) * 1e9,
            omega_to_wavelength(idler.value(pi)) * 1e9
        )));
    }
    Ok(js)
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Multiply by the amplitude transmission of each filter on its own axis and
/// renormalise. The surviving fraction is folded into `survival`.
pub fn apply_filters(
    js: &JointSpectrum,
    signal_chain: &[SpectralFilter],
    idler_chain: &[SpectralFilter],
) -> Result<JointSpectrum> {
    let axis = |grid: &FrequencyGrid, chain: &[SpectralFilter]| -> Vec<f64> {
        (0..grid.len)
            .map(|k| {
                let l = omega_to_wavelength(grid.value(k));
                chain.iter().map(|f| f.amplitude(l)).product()
            })
            .collect()
    };
    let ts = axis(&js.signal, signal_chain);
    let ti = axis(&js.idler, idler_chain);
    let pre = js.norm();
    let amplitude = DMatrix::from_fn(js.signal.len, js.idler.len, |s, i| js.amplitude[(s, i)] * (ts[s] * ti[i]));
    let post = amplitude.iter().map(|c| c.norm_sqr()).sum::<f64>() * js.cell_area();
    let kept = post / pre;
    if !(kept >= 1e-9) {
        return Err(Error::FilteredToNothing {
            survival: kept * js.survival,
        });
    }
    JointSpectrum::from_parts(js.signal, js.idler, amplitude, js.survival * kept)
}

pub fn apply_filter_set(js: &JointSpectrum, set: &FilterSet) -> Result<JointSpectrum> {
    apply_filters(js, &set.signal, &set.idler)
}

/// Sampled spectrum, ascending wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Wavelengths, m.
    pub wavelength: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelength: Vec<f64>, intensity: Vec<f64>) -> Result<Self> {
        if wavelength.len() != intensity.len() || wavelength.len() < 2 {
            return Err(Error::InvalidParameter("spectrum needs matching samples (>= 2)".into()));
        }
        if wavelength.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("spectrum wavelengths must ascend".into()));
        }
        Ok(Self {
            wavelength,
            intensity,
        })
    }

    /// Peak wavelength (largest sample).
    pub fn peak(&self) -> f64 {
        let k = self
            .intensity
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (k, &v)| if v > b.1 { (k, v) } else { b })
            .0;
        self.wavelength[k]
    }

    /// Full width at half maximum from linear interpolation of the crossings.
    pub fn fwhm(&self) -> f64 {
        let max = self.intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let half = 0.5 * max;
        let first = self.intensity.iter().position(|&v| v >= half).unwrap_or(0);
        let last = self.intensity.iter().rposition(|&v| v >= half).unwrap_or(0);
        let cross = |a: usize, b: usize| {
            let (ia, ib) = (self.intensity[a], self.intensity[b]);
            let t = if ib != ia { (half - ia) / (ib - ia) } else { 0.0 };
            self.wavelength[a] + t * (self.wavelength[b] - self.wavelength[a])
        };
        let lo = if first > 0 { cross(first - 1, first) } else { self.wavelength[0] };
        let hi = if last + 1 < self.len() { cross(last, last + 1) } else { self.wavelength[last] };
        hi - lo
    }

    pub fn len(&self) -> usize {
        self.wavelength.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelength.is_empty()
    }
}

/// Marginal intensity versus wavelength, normalised to its maximum.
///
/// `|f|²` is integrated over the other arm and converted to a per-wavelength
/// density (`dω/dλ ∝ ω²`), which is what a spectrometer records.
pub fn marginal_spectrum(js: &JointSpectrum, which: Arm) -> Spectrum {
    let (grid, density): (FrequencyGrid, Vec<f64>) = match which {
        Arm::Signal => (
            js.signal,
            (0..js.signal.len)
                .map(|s| js.amplitude.row(s).iter().map(|c| c.norm_sqr()).sum::<f64>() * js.idler.step)
                .collect(),
        ),
        Arm::Idler => (
            js.idler,
            (0..js.idler.len)
                .map(|i| js.amplitude.column(i).iter().map(|c| c.norm_sqr()).sum::<f64>() * js.signal.step)
                .collect(),
        ),
    };
    let mut samples: Vec<(f64, f64)> = density
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let w = grid.value(k);
            (omega_to_wavelength(w), d * w * w)
        })
        .collect();
    samples.reverse();
    let max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    Spectrum {
        wavelength: samples.iter().map(|s| s.0).collect(),
        intensity: samples.iter().map(|s| s.1 * scale).collect(),
    }
}

/// Intensity-weighted centroid over the samples at or above half maximum.
///
/// Samples are weighted by their local wavelength spacing so that
/// non-uniform sampling does not bias the result.
pub fn central_wavelength(spectrum: &Spectrum) -> Result<f64> {
    let n = spectrum.len();
    if n < 2 {
        return Err(Error::InvalidParameter("spectrum needs at least 2 samples".into()));
    }
    let max = spectrum.intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::InvalidParameter("spectrum has no positive intensity".into()));
    }
    let above: Vec<bool> = spectrum.intensity.iter().map(|&v| v >= 0.5 * max).collect();
    let regions = above
        .iter()
        .enumerate()
        .filter(|&(k, &a)| a && (k == 0 || !above[k - 1]))
        .count();
    if regions > 1 {
        return Err(Error::AmbiguousPeak { regions });
    }
    let l = &spectrum.wavelength;
    let (mut num, mut den) = (0.0, 0.0);
    for k in (0..n).filter(|&k| above[k]) {
        let width = match k {
            0 => l[1] - l[0],
            k if k + 1 == n => l[k] - l[k - 1],
            k => 0.5 * (l[k + 1] - l[k - 1]),
        };
        let w = spectrum.intensity[k] * width;
        num += w * l[k];
        den += w;
    }
    Ok(num / den)
}
