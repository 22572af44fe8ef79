//! CSV and summary writers.
//!
//! Every file starts with `#` comment lines carrying the run metadata; the
//! first is always `# config_hash: <sha256>`. Failed points are written as
//! `nan`. Formatting is fixed so identical inputs give identical bytes.

use std::io::{self, Write};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::array::ArrayStatistics;
use crate::hom::{HomResult, PairVisibility};
use crate::montecarlo::PowerScanRow;
use crate::phasematch::PerturbationPoint;
use crate::spectrum::Spectrum;
use crate::tmsv::AnalyticPowerRow;

/// Lower-case hex SHA-256 of the canonical configuration text.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunHeader {
    pub config_hash: String,
    pub seed: u64,
    pub command: String,
    pub extra: Vec<(String, String)>,
}

impl RunHeader {
    pub fn new(config_hash: impl Into<String>, seed: u64, command: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
            command: command.into(),
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.extra.push((key.into(), value.into()));
        self
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# config_hash: {}", self.config_hash)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# command: {}", self.command)?;
        for (k, v) in &self.extra {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// Fixed-point with `prec` decimals, `nan` when missing or non-finite.
pub fn fixed(v: Option<f64>, prec: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.prec$}"),
        _ => "nan".into(),
    }
}

/// Scientific with `prec` decimals, `nan` when missing or non-finite.
pub fn sci(v: Option<f64>, prec: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.prec$e}"),
        _ => "nan".into(),
    }
}

pub fn write_perturbation_csv<W: Write>(w: &mut W, header: &RunHeader, points: &[PerturbationPoint]) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "eta,lambda_s_plus_nm,lambda_s_minus_nm,lambda_i_plus_nm,lambda_i_minus_nm")?;
    for p in points {
        let plus = p.plus.as_ref().ok();
        let minus = p.minus.as_ref().ok();
        writeln!(
            w,
            "{},{},{},{},{}",
            fixed(Some(p.eta), 4),
            fixed(plus.map(|s| s.lambda_s * 1e9), 4),
            fixed(minus.map(|s| s.lambda_s * 1e9), 4),
            fixed(plus.map(|s| s.lambda_i * 1e9), 4),
            fixed(minus.map(|s| s.lambda_i * 1e9), 4),
        )?;
    }
    Ok(())
}

pub fn write_analytic_power_csv<W: Write>(w: &mut W, header: &RunHeader, rows: &[AnalyticPowerRow]) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "power_mw,r,mu,g2si,heralded_g2")?;
    for row in rows {
        let p = row.point.as_ref().ok();
        writeln!(
            w,
            "{},{},{},{},{}",
            fixed(Some(row.power_mw), 3),
            fixed(p.map(|p| p.r), 8),
            sci(p.map(|p| p.mu), 8),
            fixed(p.and_then(|p| p.g2si), 6),
            fixed(p.map(|p| p.heralded_g2), 8),
        )?;
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(w: &mut W, header: &RunHeader, spectrum: &Spectrum) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "wavelength_nm,intensity_normalized")?;
    for (l, i) in spectrum.wavelength.iter().zip(&spectrum.intensity) {
        writeln!(w, "{},{}", fixed(Some(l * 1e9), 4), sci(Some(*i), 6))?;
    }
    Ok(())
}

pub fn write_power_scan_csv<W: Write>(w: &mut W, header: &RunHeader, rows: &[PowerScanRow]) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "power_mw,r,rate_cc_per_s,g2si,g2h,stat_err_g2h")?;
    for row in rows {
        let p = row.point.as_ref().ok();
        let g2si = p.and_then(|p| p.g2si.as_ref().ok());
        let g2h = p.and_then(|p| p.g2h.as_ref().ok());
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fixed(Some(row.power_mw), 3),
            fixed(p.map(|p| p.r), 8),
            fixed(p.map(|p| p.rate_cc), 3),
            fixed(g2si.map(|e| e.value), 6),
            fixed(g2h.map(|e| e.value), 6),
            fixed(g2h.map(|e| e.stat_err), 6),
        )?;
    }
    Ok(())
}

pub fn write_hom_scan_csv<W: Write>(w: &mut W, header: &RunHeader, result: &HomResult) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "delay_fs,fourfold_counts,fourfold_rate,fit_value")?;
    for k in 0..result.delays.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fixed(Some(result.delays[k] * 1e15), 3),
            result.fourfold_counts[k],
            fixed(Some(result.fourfold_rates[k]), 6),
            fixed(Some(result.fit[k]), 3),
        )?;
    }
    Ok(())
}

pub fn write_chip_csv<W: Write>(w: &mut W, header: &RunHeader, stats: &ArrayStatistics) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "source_id,delta_n,eta,lambda_s_nm,lambda_i_nm")?;
    for e in &stats.entries {
        let s = e.solution.as_ref().ok();
        writeln!(
            w,
            "{},{},{},{},{}",
            e.id,
            sci(Some(e.delta_n), 8),
            fixed(Some(e.eta), 8),
            fixed(s.map(|s| s.lambda_s * 1e9), 4),
            fixed(s.map(|s| s.lambda_i * 1e9), 4),
        )?;
    }
    Ok(())
}

pub fn write_visibility_csv<W: Write>(w: &mut W, header: &RunHeader, rows: &[PairVisibility]) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "source_a,source_b,overlap,visibility")?;
    for v in rows {
        writeln!(w, "{},{},{},{}", v.a, v.b, fixed(Some(v.overlap), 6), fixed(Some(v.visibility), 6))?;
    }
    Ok(())
}

/// Headline numbers of one HOM scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomSummary {
    pub config_hash: String,
    pub seed: u64,
    pub visibility: f64,
    pub visibility_err: f64,
    pub analytic_visibility: f64,
    pub baseline_counts: f64,
    pub minimum_counts: f64,
    pub dip_width_fs: f64,
    pub gaussian_visibility: f64,
    pub negative_visibility: bool,
    pub n_pulses_per_point: u64,
}

impl HomSummary {
    pub fn new(header: &RunHeader, result: &HomResult, analytic_visibility: f64) -> Self {
        Self {
            config_hash: header.config_hash.clone(),
            seed: header.seed,
            visibility: result.visibility,
            visibility_err: result.visibility_err,
            analytic_visibility,
            baseline_counts: result.baseline,
            minimum_counts: result.minimum,
            dip_width_fs: result.dip_width * 1e15,
            gaussian_visibility: result.gaussian_visibility,
            negative_visibility: result.negative,
            n_pulses_per_point: result.n_pulses_per_point,
        }
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        writeln!(w)
    }
}

/// `key: value` summary text with the run header.
pub fn write_summary<W: Write>(w: &mut W, header: &RunHeader, lines: &[(String, String)]) -> io::Result<()> {
    header.write(w)?;
    for (k, v) in lines {
        writeln!(w, "{k}: {v}")?;
    }
    Ok(())
}
