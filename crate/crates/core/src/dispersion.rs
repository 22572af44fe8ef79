//! Sellmeier dispersion of the substrate.
//!
//! The model is `n(λ)² = 1 + Σ_k B_k λ² / (λ² − C_k²)` with λ and the
//! resonance wavelengths `C_k` in micrometers.
//!
//! Coefficients can be read from a plain-text key-value file with the keys
//! `B1,B2,B3,C1,C2,C3,lambda_min,lambda_max`:
//!
//! ```text
//! # fused silica
//! B1 = 0.6961663
//! C1 = 0.0684043
//! ...
//! lambda_min = 0.21
//! lambda_max = 3.71
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::units::omega_to_wavelength_um;
use crate::{Error, Result};

const FUSED_SILICA: &str = include_str!("../data/fused_silica_sellmeier.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellmeierTerm {
    /// Dimensionless oscillator strength.
    pub strength: f64,
    /// Resonance wavelength in micrometers.
    pub resonance_um: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierModel {
    terms: Vec<SellmeierTerm>,
    /// Open interval (λ_min, λ_max) in micrometers.
    valid_range_um: (f64, f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierFile {
    #[serde(rename = "B1")]
    b1: f64,
    #[serde(rename = "B2")]
    b2: f64,
    #[serde(rename = "B3")]
    b3: f64,
    #[serde(rename = "C1")]
    c1: f64,
    #[serde(rename = "C2")]
    c2: f64,
    #[serde(rename = "C3")]
    c3: f64,
    lambda_min: f64,
    lambda_max: f64,
}

impl SellmeierModel {
    pub fn new(terms: Vec<SellmeierTerm>, valid_range_um: (f64, f64)) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("Sellmeier model needs at least one term".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if !(t.strength > 0.0) || !(t.resonance_um > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Sellmeier term {} must have B > 0 and C > 0 (got B = {}, C = {})",
                    k + 1,
                    t.strength,
                    t.resonance_um
                )));
            }
        }
        let (lo, hi) = valid_range_um;
        if !(lo > 0.0 && hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid Sellmeier valid range ({lo}, {hi}) um"
            )));
        }
        Ok(Self {
            terms,
            valid_range_um,
        })
    }

    /// Fused silica, Corning 7980 class, valid 0.21-3.71 µm.
    pub fn fused_silica() -> Self {
        Self::from_key_value_str(FUSED_SILICA).expect("bundled Sellmeier file is valid")
    }

    pub fn from_key_value_str(text: &str) -> Result<Self> {
        let file: SellmeierFile =
            toml::from_str(text).map_err(|e| Error::Parse(format!("Sellmeier file: {e}")))?;
        let terms = [(file.b1, file.c1), (file.b2, file.c2), (file.b3, file.c3)]
            .into_iter()
            .map(|(strength, resonance_um)| SellmeierTerm {
                strength,
                resonance_um,
            })
            .collect();
        Self::new(terms, (file.lambda_min, file.lambda_max))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_key_value_str(&text)
    }

    pub fn terms(&self) -> &[SellmeierTerm] {
        &self.terms
    }

    pub fn valid_range_um(&self) -> (f64, f64) {
        self.valid_range_um
    }

    pub fn contains_um(&self, lambda_um: f64) -> bool {
        lambda_um > self.valid_range_um.0 && lambda_um < self.valid_range_um.1
    }

    /// Refractive index at vacuum wavelength `lambda_um` (micrometers).
    pub fn refractive_index(&self, lambda_um: f64) -> Result<f64> {
        if !self.contains_um(lambda_um) {
            return Err(Error::Domain(format!(
                "wavelength {lambda_um} um outside Sellmeier range ({}, {}) um",
                self.valid_range_um.0, self.valid_range_um.1
            )));
        }
        let l2 = lambda_um * lambda_um;
        let mut n2 = 1.0;
        for (k, t) in self.terms.iter().enumerate() {
            let c2 = t.resonance_um * t.resonance_um;
            let denom = l2 - c2;
            if denom == 0.0 || denom.abs() <= 1e-12 * c2 {
                return Err(Error::Singularity {
                    wavelength_um: lambda_um,
                    term: k + 1,
                    resonance_um: t.resonance_um,
                });
            }
            n2 += t.strength * l2 / denom;
        }
        if !(n2 > 1.0) {
            return Err(Error::Domain(format!(
                "n^2 = {n2} at {lambda_um} um is not above unity"
            )));
        }
        Ok(n2.sqrt())
    }

    /// Refractive index at angular frequency `omega` (rad/s).
    pub fn index_at_angular_frequency(&self, omega: f64) -> Result<f64> {
        self.refractive_index(omega_to_wavelength_um(omega))
    }
}
