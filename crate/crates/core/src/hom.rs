//! Heralded two-source Hong-Ou-Mandel interference.
//!
//! The idler photons of two sources meet on a beam splitter while their
//! signal partners herald. The spectral factor is the overlap
//! `M(τ) = Tr(ρ_A U_τ ρ_B U_τ†)` of the two heralded idler states, with
//! `U_τ = diag(e^{iωτ})` the relative delay.
//!
//! Multi-photon terms follow Fock bookkeeping at the splitter: with `k_a`
//! and `k_b` photons entering, the photons of port b are split into `j ~
//! Bin(k_b, M)` sharing the mode of port a and `k_b − j` distinguishable
//! ones. All photons leave through one output port with probability
//! `C(k_a + j, k_a) T_a^{k_a} T_b^{k_b}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::montecarlo::engine::{self, PairSampler};
use crate::montecarlo::{binomial, check_ratio, DetectionConfig};
use crate::spectrum::{FrequencyGrid, JointSpectrum};
use crate::tmsv::TmsvState;
use crate::units::path_to_delay;
use crate::{Error, Result};

/// Mean pair numbers at or above this leave the first-order regime.
pub const MAX_MEAN_PAIRS: f64 = 0.2;
/// Translation-stage step.
pub const STAGE_STEP: f64 = 0.02e-3;

const SOURCE_A_CHANNEL: u8 = 2;
const SOURCE_B_CHANNEL: u8 = 3;
const DETECTION_CHANNEL: u8 = 4;
const FOURFOLD: u8 = 0b1111;

/// A source seen by the interferometer: its pair statistics and the
/// heralded idler state.
#[derive(Debug, Clone, PartialEq)]
pub struct HomSource {
    pub state: TmsvState,
    pub grid: FrequencyGrid,
    /// Unit-trace idler density matrix on `grid`.
    pub rho: DMatrix<Complex64>,
}

impl HomSource {
    pub fn new(state: TmsvState, js: &JointSpectrum) -> Self {
        Self {
            state,
            grid: js.idler,
            rho: idler_density_matrix(js),
        }
    }

    pub fn mean_pairs(&self) -> f64 {
        self.state.mean_pair_number()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }
}

/// `ρ_jk = Σ_m a_mj a*_mk Δω_s Δω_i`, skipping signal rows with no weight.
pub fn idler_density_matrix(js: &JointSpectrum) -> DMatrix<Complex64> {
    let peak = js.amplitude.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let rows: Vec<usize> = (0..js.signal.len)
        .filter(|&s| js.amplitude.row(s).iter().any(|c| c.norm() > 1e-12 * peak))
        .collect();
    let scale = Complex64::from(js.cell_area().sqrt());
    let a = DMatrix::from_fn(rows.len(), js.idler.len, |r, i| js.amplitude[(rows[r], i)] * scale);
    a.transpose() * a.conjugate()
}

fn same_grid(a: &FrequencyGrid, b: &FrequencyGrid) -> bool {
    a.len == b.len
        && (a.start - b.start).abs() <= 1e-12 * a.start
        && (a.step - b.step).abs() <= 1e-9 * a.step
}

/// Express both states on one grid. Identical grids are used as is;
/// otherwise both are bilinearly resampled onto the overlap of their ranges
/// at the finer step.
pub fn common_frame(a: &HomSource, b: &HomSource) -> Result<(FrequencyGrid, DMatrix<Complex64>, DMatrix<Complex64>)> {
    if same_grid(&a.grid, &b.grid) {
        return Ok((a.grid, a.rho.clone(), b.rho.clone()));
    }
    let lo = a.grid.start.max(b.grid.start);
    let hi = a.grid.stop().min(b.grid.stop());
    if !(hi > lo) {
        return Err(Error::InconsistentInput(format!(
            "idler grids do not intersect ([{:.6e}, {:.6e}] vs [{:.6e}, {:.6e}] rad/s)",
            a.grid.start,
            a.grid.stop(),
            b.grid.start,
            b.grid.stop()
        )));
    }
    let step = a.grid.step.min(b.grid.step);
    let len = ((hi - lo) / step).floor() as usize + 1;
    if len < 2 {
        return Err(Error::InconsistentInput("idler grids overlap on less than two points".into()));
    }
    let grid = FrequencyGrid::new(lo, lo + step * (len - 1) as f64, len)?;
    Ok((grid, resample(&a.rho, &a.grid, &grid), resample(&b.rho, &b.grid, &grid)))
}

fn resample(rho: &DMatrix<Complex64>, from: &FrequencyGrid, to: &FrequencyGrid) -> DMatrix<Complex64> {
    let locate = |w: f64| -> Option<(usize, f64)> {
        let x = (w - from.start) / from.step;
        if x < 0.0 || x > (from.len - 1) as f64 {
            return None;
        }
        let k = (x.floor() as usize).min(from.len - 2);
        Some((k, x - k as f64))
    };
    let pos: Vec<Option<(usize, f64)>> = (0..to.len).map(|k| locate(to.value(k))).collect();
    let scale = to.step / from.step;
    DMatrix::from_fn(to.len, to.len, |r, c| match (pos[r], pos[c]) {
        (Some((j, u)), Some((k, v))) => {
            let f = rho[(j, k)] * ((1.0 - u) * (1.0 - v))
                + rho[(j + 1, k)] * (u * (1.0 - v))
                + rho[(j, k + 1)] * ((1.0 - u) * v)
                + rho[(j + 1, k + 1)] * (u * v);
            f * scale
        }
        _ => Complex64::new(0.0, 0.0),
    })
}

/// `M(τ)` for each delay.
pub fn delayed_overlap(a: &HomSource, b: &HomSource, delays: &[f64]) -> Result<Vec<f64>> {
    let (grid, ra, rb) = common_frame(a, b)?;
    let n = grid.len;
    // Σ_jk A_jk B_kj e^{i(ω_k − ω_j)τ} grouped by the index offset k − j
    let mut by_offset = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for j in 0..n {
        for k in 0..n {
            by_offset[k + n - 1 - j] += ra[(j, k)] * rb[(k, j)];
        }
    }
    Ok(delays
        .iter()
        .map(|&tau| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, s) in by_offset.iter().enumerate() {
                let d = idx as f64 - (n - 1) as f64;
                acc += s * Complex64::from_polar(1.0, d * grid.step * tau);
            }
            acc.re.clamp(0.0, 1.0)
        })
        .collect())
}

pub fn spectral_overlap(a: &HomSource, b: &HomSource) -> Result<f64> {
    Ok(delayed_overlap(a, b, &[0.0])?[0])
}

fn first_order_visibility(overlap: f64, mu_a: f64, mu_b: f64) -> Result<f64> {
    for mu in [mu_a, mu_b] {
        if !(mu >= 0.0) || mu >= MAX_MEAN_PAIRS {
            return Err(Error::OutOfValidity(format!(
                "mean pair number {mu} is outside the first-order regime (< {MAX_MEAN_PAIRS})"
            )));
        }
    }
    // P(2)/P(1) = μ/(1 + μ) for thermal statistics
    let x = mu_a / (1.0 + mu_a) + mu_b / (1.0 + mu_b);
    Ok(overlap * (1.0 + x) / (1.0 + 1.5 * x))
}

/// Visibility with the first-order multi-photon correction
/// `V = M (1 + x)/(1 + 3x/2)`, `x = Σ μ/(1 + μ)`.
pub fn hom_visibility_analytic(js_a: &JointSpectrum, js_b: &JointSpectrum, mu_a: f64, mu_b: f64) -> Result<f64> {
    let a = HomSource::new(TmsvState::from_mean_pairs(mu_a.max(0.0))?, js_a);
    let b = HomSource::new(TmsvState::from_mean_pairs(mu_b.max(0.0))?, js_b);
    first_order_visibility(spectral_overlap(&a, &b)?, mu_a, mu_b)
}

pub fn source_visibility(a: &HomSource, b: &HomSource) -> Result<f64> {
    first_order_visibility(spectral_overlap(a, b)?, a.mean_pairs(), b.mean_pairs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairVisibility {
    pub a: usize,
    pub b: usize,
    pub overlap: f64,
    pub visibility: f64,
}

/// Analytic visibility for each requested pair, or for every `i ≤ j` when
/// `pairs` is `None`.
pub fn pairwise_visibility_matrix(sources: &[HomSource], pairs: Option<&[(usize, usize)]>) -> Result<Vec<PairVisibility>> {
    if sources.len() < 2 {
        return Err(Error::InvalidParameter("pairwise visibilities need at least two sources".into()));
    }
    let all: Vec<(usize, usize)> = match pairs {
        Some(p) => p.to_vec(),
        None => (0..sources.len()).flat_map(|i| (i..sources.len()).map(move |j| (i, j))).collect(),
    };
    if let Some(&(i, j)) = all.iter().find(|&&(i, j)| i >= sources.len() || j >= sources.len()) {
        return Err(Error::InvalidParameter(format!(
            "source pair ({i}, {j}) out of range for {} sources",
            sources.len()
        )));
    }
    all.par_iter()
        .map(|&(i, j)| {
            let overlap = spectral_overlap(&sources[i], &sources[j])?;
            let visibility = first_order_visibility(overlap, sources[i].mean_pairs(), sources[j].mean_pairs())?;
            Ok(PairVisibility { a: i, b: j, overlap, visibility })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomScanConfig {
    /// Relative delays, seconds, symmetric about zero.
    pub delay_grid: Vec<f64>,
    pub n_pulses_per_point: u64,
    /// Probability that a photon keeps its spatial mode at the splitter.
    pub splitter_ratio: f64,
}

impl Default for HomScanConfig {
    fn default() -> Self {
        Self::stage_scan(STAGE_STEP, 50, 1, 100_000_000)
    }
}

impl HomScanConfig {
    /// `2·half_points + 1` stage positions spaced `stride` steps of `step_path` (m).
    pub fn stage_scan(step_path: f64, half_points: usize, stride: usize, n_pulses_per_point: u64) -> Self {
        let h = half_points as i64;
        Self {
            delay_grid: (-h..=h).map(|k| path_to_delay(step_path * (k * stride as i64) as f64)).collect(),
            n_pulses_per_point,
            splitter_ratio: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.delay_grid;
        if d.len() < 3 {
            return Err(Error::InvalidParameter("delay grid needs at least three points".into()));
        }
        if d.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("delay grid must be strictly increasing".into()));
        }
        let span = d[d.len() - 1].abs().max(d[0].abs());
        if d.iter().zip(d.iter().rev()).any(|(x, y)| (x + y).abs() > 1e-9 * span) {
            return Err(Error::InvalidParameter("delay grid must be symmetric about zero".into()));
        }
        if self.n_pulses_per_point == 0 {
            return Err(Error::InvalidParameter("at least one pulse per delay is required".into()));
        }
        check_ratio(self.splitter_ratio)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomResult {
    pub delays: Vec<f64>,
    pub fourfold_counts: Vec<u64>,
    /// Counts per second.
    pub fourfold_rates: Vec<f64>,
    /// Spectral overlap `M(τ)` used as the dip template.
    pub template: Vec<f64>,
    /// Fitted counts at each delay.
    pub fit: Vec<f64>,
    /// Fitted `P(τ → ∞)`, counts per point.
    pub baseline: f64,
    /// Fitted `P(0)`, counts per point.
    pub minimum: f64,
    /// `(P(τ) − P(0))/P(τ)` from the fitted baseline and minimum.
    pub visibility: f64,
    pub visibility_err: f64,
    /// FWHM of a Gaussian fitted to the dip, seconds.
    pub dip_width: f64,
    /// Visibility of the Gaussian fit.
    pub gaussian_visibility: f64,
    pub negative: bool,
    pub n_pulses_per_point: u64,
}

/// FWHM of the template `M(τ)`, by bisection on a coarse scan.
fn template_fwhm(a: &HomSource, b: &HomSource) -> Result<Option<f64>> {
    let m0 = spectral_overlap(a, b)?;
    if !(m0 > 0.0) {
        return Ok(None);
    }
    let (grid, _, _) = common_frame(a, b)?;
    // M(τ) is periodic with period 2π/Δω on the discrete grid
    let mut hi = std::f64::consts::PI / grid.step;
    let mut lo = 0.0;
    let f = |t: f64| -> Result<f64> { Ok(delayed_overlap(a, b, &[t])?[0] - 0.5 * m0) };
    if f(hi)? > 0.0 {
        return Ok(None);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo + hi))
}

/// Fourfold-coincidence Monte Carlo over the delay grid. Detectors:
/// bit 0/1 trigger A/B, bit 2/3 the splitter outputs. Delay point p uses
/// PRNG point p with `det.seed`.
pub fn hom_scan_mc(a: &HomSource, b: &HomSource, cfg: &HomScanConfig, det: &DetectionConfig) -> Result<HomResult> {
    cfg.validate()?;
    det.validate()?;
    let template = delayed_overlap(a, b, &cfg.delay_grid)?;
    if let Some(width) = template_fwhm(a, b)? {
        let span = cfg.delay_grid[cfg.delay_grid.len() - 1] - cfg.delay_grid[0];
        if span < 3.0 * width {
            return Err(Error::InvalidParameter(format!(
                "delay span {span:.3e} s covers fewer than three dip widths ({width:.3e} s)"
            )));
        }
    }
    let sa = PairSampler::new(&a.state.pair_distribution())?;
    let sb = PairSampler::new(&b.state.pair_distribution())?;
    let darks = [det.dark_prob; 4];
    let counts: Vec<u64> = template
        .par_iter()
        .enumerate()
        .map(|(p, &m)| {
            let h = engine::simulate(cfg.n_pulses_per_point, det.seed, p as u64, &darks, |streams, len, events| {
                let mut pulses_a = Vec::new();
                let mut pulses_b = Vec::new();
                sa.for_each_pulse(&mut streams.rng(SOURCE_A_CHANNEL), len, |_, pos, n| pulses_a.push((pos, n)));
                sb.for_each_pulse(&mut streams.rng(SOURCE_B_CHANNEL), len, |_, pos, n| pulses_b.push((pos, n)));
                let mut rng = streams.rng(DETECTION_CHANNEL);
                let (mut ia, mut ib) = (0, 0);
                while ia < pulses_a.len() || ib < pulses_b.len() {
                    let pa = pulses_a.get(ia).map_or(u64::MAX, |e| e.0);
                    let pb = pulses_b.get(ib).map_or(u64::MAX, |e| e.0);
                    let pos = pa.min(pb);
                    let na = if pa == pos { ia += 1; pulses_a[ia - 1].1 } else { 0 };
                    let nb = if pb == pos { ib += 1; pulses_b[ib - 1].1 } else { 0 };
                    let mask = detect_pulse(&mut rng, na, nb, m, det, cfg.splitter_ratio);
                    if mask != 0 {
                        events.push((pos, mask));
                    }
                }
            });
            h[FOURFOLD as usize]
        })
        .collect();
    analyse_scan(&cfg.delay_grid, counts, template, cfg.n_pulses_per_point, det.rep_rate)
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probabilities that output c, respectively d, receives nothing.
fn empty_outputs(ka: u64, kb: u64, j: u64, ratio: f64) -> (f64, f64) {
    let c = choose(ka + j, ka);
    (
        c * (1.0 - ratio).powi(ka as i32) * ratio.powi(kb as i32),
        c * ratio.powi(ka as i32) * (1.0 - ratio).powi(kb as i32),
    )
}

fn detect_pulse(rng: &mut impl Rng, na: u64, nb: u64, overlap: f64, det: &DetectionConfig, ratio: f64) -> u8 {
    let mut mask = 0;
    if binomial(rng, na, det.eta_signal) > 0 {
        mask |= 0b0001;
    }
    if binomial(rng, nb, det.eta_signal) > 0 {
        mask |= 0b0010;
    }
    let ka = binomial(rng, na, det.eta_idler);
    let kb = binomial(rng, nb, det.eta_idler);
    if ka + kb > 0 {
        let j = binomial(rng, kb, overlap);
        let (c_empty, d_empty) = empty_outputs(ka, kb, j, ratio);
        let u: f64 = rng.random();
        mask |= if u < c_empty {
            0b1000
        } else if u < c_empty + d_empty {
            0b0100
        } else {
            0b1100
        };
    }
    mask
}

/// Exact per-pulse fourfold probability of the model simulated by
/// [`hom_scan_mc`], for oracle use.
pub fn fourfold_probability(pmf_a: &[f64], pmf_b: &[f64], det: &DetectionConfig, ratio: f64, overlap: f64) -> f64 {
    let d = det.dark_prob;
    let bin = |n: u64, k: u64, p: f64| choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
    let trig = |n: u64| 1.0 - (1.0 - d) * (1.0 - det.eta_signal).powi(n as i32);
    let norm_a: f64 = pmf_a.iter().sum();
    let norm_b: f64 = pmf_b.iter().sum();
    let mut total = 0.0;
    for (na, pa) in pmf_a.iter().enumerate() {
        for (nb, pb) in pmf_b.iter().enumerate() {
            let (na, nb) = (na as u64, nb as u64);
            let w = pa * pb * trig(na) * trig(nb) / (norm_a * norm_b);
            if w < 1e-300 {
                continue;
            }
            let mut outputs = 0.0;
            for ka in 0..=na {
                for kb in 0..=nb {
                    let pk = bin(na, ka, det.eta_idler) * bin(nb, kb, det.eta_idler);
                    for j in 0..=kb {
                        let pj = bin(kb, j, overlap);
                        let (ce, de) = if ka + kb == 0 { (1.0, 1.0) } else { empty_outputs(ka, kb, j, ratio) };
                        let both_empty = if ka + kb == 0 { 1.0 } else { 0.0 };
                        // both outputs click, including dark counts
                        let none_c = (1.0 - d) * ce;
                        let none_d = (1.0 - d) * de;
                        let none_both = (1.0 - d) * (1.0 - d) * both_empty;
                        outputs += pk * pj * (1.0 - none_c - none_d + none_both);
                    }
                }
            }
            total += w * outputs;
        }
    }
    total
}

struct LinearFit {
    baseline: f64,
    depth: f64,
    cov: [[f64; 2]; 2],
    ssr: f64,
}

/// Weighted least squares of `y ≈ B − D·t`.
fn fit_dip(t: &[f64], y: &[f64], w: &[f64]) -> Option<LinearFit> {
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..t.len() {
        let (x0, x1) = (1.0, -t[k]);
        s00 += w[k] * x0 * x0;
        s01 += w[k] * x0 * x1;
        s11 += w[k] * x1 * x1;
        r0 += w[k] * x0 * y[k];
        r1 += w[k] * x1 * y[k];
    }
    let det = s00 * s11 - s01 * s01;
    if !(det.abs() > 1e-300) {
        return None;
    }
    let inv = [[s11 / det, -s01 / det], [-s01 / det, s00 / det]];
    let baseline = inv[0][0] * r0 + inv[0][1] * r1;
    let depth = inv[1][0] * r0 + inv[1][1] * r1;
    let ssr = (0..t.len()).map(|k| w[k] * (y[k] - baseline + depth * t[k]).powi(2)).sum();
    Some(LinearFit { baseline, depth, cov: inv, ssr })
}

/// Iteratively reweighted least squares with weights 1/max(model, 1):
/// the Poisson maximum-likelihood fit of a linear mean.
fn poisson_fit(t: &[f64], y: &[f64]) -> Option<LinearFit> {
    let mut fit = fit_dip(t, y, &vec![1.0; t.len()])?;
    for _ in 0..100 {
        let w: Vec<f64> = t.iter().map(|&tk| 1.0 / (fit.baseline - fit.depth * tk).max(1.0)).collect();
        let next = fit_dip(t, y, &w)?;
        let scale = next.baseline.abs().max(1e-300);
        let converged = (next.baseline - fit.baseline).abs() <= 1e-13 * scale
            && (next.depth - fit.depth).abs() <= 1e-13 * scale;
        fit = next;
        if converged {
            break;
        }
    }
    Some(fit)
}

/// Gaussian dip `B − D exp(−τ²/2w²)`: scan w on a log grid, then golden-section refinement.
fn gaussian_fit(delays: &[f64], y: &[f64]) -> Option<(f64, LinearFit)> {
    let span = delays[delays.len() - 1] - delays[0];
    let step = delays[1] - delays[0];
    let shape = |w: f64| -> Vec<f64> { delays.iter().map(|&d| (-d * d / (2.0 * w * w)).exp()).collect() };
    let ssr = |lw: f64| poisson_fit(&shape(lw.exp()), y).map_or(f64::INFINITY, |f| f.ssr);
    let (lo, hi) = ((0.25 * step).ln(), span.ln());
    let n = 200;
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let best = (0..=n).min_by(|&i, &j| ssr(grid[i]).total_cmp(&ssr(grid[j])))?;
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if ssr(c) < ssr(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let w = (0.5 * (a + b)).exp();
    poisson_fit(&shape(w), y).map(|f| (w, f))
}

fn analyse_scan(delays: &[f64], counts: Vec<u64>, template: Vec<f64>, n_pulses: u64, rep_rate: f64) -> Result<HomResult> {
    let y: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EstimatorUndefined("no fourfold coincidences at any delay; baseline is zero".into()));
    }
    let fit = poisson_fit(&template, &y).ok_or_else(|| Error::Numerical("dip template fit is singular".into()))?;
    if !(fit.baseline > 0.0) {
        return Err(Error::EstimatorUndefined(format!("fitted baseline {} is not positive", fit.baseline)));
    }
    let m0 = template[delays.iter().position(|d| d.abs() < 1e-30).unwrap_or(delays.len() / 2)];
    let minimum = fit.baseline - fit.depth * m0;
    let visibility = (fit.baseline - minimum) / fit.baseline;
    let (gv, gb) = (m0 / fit.baseline, -fit.depth * m0 / (fit.baseline * fit.baseline));
    let var = gb * gb * fit.cov[0][0] + gv * gv * fit.cov[1][1] + 2.0 * gb * gv * fit.cov[0][1];
    let (width, gfit) = gaussian_fit(delays, &y).ok_or_else(|| Error::Numerical("Gaussian dip fit failed".into()))?;
    Ok(HomResult {
        delays: delays.to_vec(),
        fourfold_rates: counts.iter().map(|&c| c as f64 * rep_rate / n_pulses as f64).collect(),
        fit: template.iter().map(|t| fit.baseline - fit.depth * t).collect(),
        fourfold_counts: counts,
        template,
        baseline: fit.baseline,
        minimum,
        visibility,
        visibility_err: var.max(0.0).sqrt(),
        dip_width: 2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * width,
        gaussian_visibility: gfit.depth / gfit.baseline,
        negative: visibility < 0.0,
        n_pulses_per_point: n_pulses,
    })
}
