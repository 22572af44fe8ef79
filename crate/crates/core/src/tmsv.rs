//! Two-mode squeezed vacuum `Σ c_n |n⟩_s |n⟩_i` with `c_n = tanhⁿ(r)/cosh(r)`.
//!
//! Photon-number statistics are computed by explicit summation over the
//! truncated Fock expansion; closed forms (μ = sinh²r, g_si = 2 + 1/μ) are
//! only used in tests as oracles.

use crate::{Error, Result};

/// Upper bound on the neglected Fock tail probability.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TmsvState {
    r: f64,
    truncation: usize,
}

fn tail_probability(r: f64, truncation: usize) -> f64 {
    // Σ_{n>N} (1 − t) tⁿ = t^{N+1}
    let t = r.tanh().powi(2);
    t.powi(truncation as i32 + 1)
}

impl TmsvState {
    /// State with the default truncation `ceil(20 + 40 r)`, grown until the
    /// tail bound holds.
    pub fn new(r: f64) -> Result<Self> {
        Self::check_r(r)?;
        let mut truncation = (20.0 + 40.0 * r).ceil() as usize;
        while tail_probability(r, truncation) >= TAIL_TOLERANCE {
            truncation += 10;
            if truncation > 100_000 {
                return Err(Error::InvalidParameter(format!(
                    "squeezing r = {r} needs an impractical Fock truncation"
                )));
            }
        }
        Ok(Self { r, truncation })
    }

    pub fn with_truncation(r: f64, truncation: usize) -> Result<Self> {
        Self::check_r(r)?;
        let tail = tail_probability(r, truncation);
        if tail >= TAIL_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "truncation {truncation} leaves tail probability {tail:.3e} at r = {r}"
            )));
        }
        Ok(Self { r, truncation })
    }

    /// State whose mean pair number is `mu` (r = asinh √μ).
    pub fn from_mean_pairs(mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mean pair number must be >= 0 (got {mu})")));
        }
        Self::new(mu.sqrt().asinh())
    }

    fn check_r(r: f64) -> Result<()> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("squeezing r must be >= 0 (got {r})")));
        }
        Ok(())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `c_n` for n = 0..=N_max.
    pub fn fock_coefficients(&self) -> Vec<f64> {
        let t = self.r.tanh();
        let c0 = 1.0 / self.r.cosh();
        let mut out = Vec::with_capacity(self.truncation + 1);
        let mut c = c0;
        for _ in 0..=self.truncation {
            out.push(c);
            c *= t;
        }
        out
    }

    /// Pair-number distribution `P(n) = c_n²`.
    pub fn pair_distribution(&self) -> Vec<f64> {
        self.fock_coefficients().into_iter().map(|c| c * c).collect()
    }

    pub fn mean_pair_number(&self) -> f64 {
        self.pair_distribution()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `⟨n_s n_i⟩ / (⟨n_s⟩⟨n_i⟩)`; photon numbers are perfectly correlated so
    /// this is `⟨n²⟩/⟨n⟩²`.
    pub fn cross_correlation_g2si(&self) -> Result<f64> {
        if self.r == 0.0 {
            return Err(Error::EstimatorUndefined(
                "cross-correlation of the vacuum (zero mean photon number)".into(),
            ));
        }
        let p = self.pair_distribution();
        let (m1, m2) = p.iter().enumerate().fold((0.0, 0.0), |(a, b), (n, pn)| {
            let n = n as f64;
            (a + n * pn, b + n * n * pn)
        });
        Ok(m2 / (m1 * m1))
    }

    /// Heralded `g²(0)` of the signal conditioned on a bucket-detector click
    /// on the idler with efficiency `herald_efficiency`.
    pub fn heralded_g2(&self, herald_efficiency: f64) -> Result<f64> {
        if !(herald_efficiency > 0.0 && herald_efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "herald efficiency must lie in (0, 1] (got {herald_efficiency})"
            )));
        }
        let miss = 1.0 - herald_efficiency;
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (n, pn) in self.pair_distribution().into_iter().enumerate() {
            let w = pn * (1.0 - miss.powi(n as i32));
            let nf = n as f64;
            z += w;
            m1 += nf * w;
            m2 += nf * (nf - 1.0) * w;
        }
        if z == 0.0 {
            // No herald is ever produced; the single-pair limit of the formula.
            return Ok(0.0);
        }
        let m1 = m1 / z;
        Ok((m2 / z) / (m1 * m1))
    }
}

/// Mean pair number implied by an ideal-TMSV cross-correlation,
/// `μ = 1/(g_si − 2)`.
pub fn mu_from_g2si(g2si: f64) -> Result<f64> {
    if !(g2si > 2.0) || !g2si.is_finite() {
        return Err(Error::Domain(format!(
            "ideal TMSV requires g_si > 2 (got {g2si})"
        )));
    }
    Ok(1.0 / (g2si - 2.0))
}

/// Linear pump-power to squeezing map `r = κ P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpCalibration {
    /// Squeezing per unit pump power, 1/mW.
    pub kappa: f64,
    /// Inclusive power range in mW.
    pub valid_power_range: (f64, f64),
}

/// Named calibration presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationPreset {
    /// r(150 mW) = 0.545, the top of the power scan.
    SqueezingAnchor,
    /// μ(10 mW) from the measured g_si = 160.49.
    CrossCorrelationAnchor,
}

impl CalibrationPreset {
    pub fn name(self) -> &'static str {
        match self {
            Self::SqueezingAnchor => "squeezing-anchor",
            Self::CrossCorrelationAnchor => "gsi-anchor",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "squeezing-anchor" => Ok(Self::SqueezingAnchor),
            "gsi-anchor" => Ok(Self::CrossCorrelationAnchor),
            other => Err(Error::Parse(format!("unknown calibration preset `{other}`"))),
        }
    }
}

pub const DEFAULT_POWER_RANGE_MW: (f64, f64) = (0.0, 150.0);

impl PumpCalibration {
    pub fn new(kappa: f64, valid_power_range: (f64, f64)) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be > 0 (got {kappa})")));
        }
        let (lo, hi) = valid_power_range;
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(format!("invalid power range ({lo}, {hi}) mW")));
        }
        Ok(Self {
            kappa,
            valid_power_range,
        })
    }

    /// Calibration through a single (power, r) anchor.
    pub fn from_anchor(power_mw: f64, r: f64, valid_power_range: (f64, f64)) -> Result<Self> {
        if !(power_mw > 0.0) {
            return Err(Error::InvalidParameter("anchor power must be > 0".into()));
        }
        Self::new(r / power_mw, valid_power_range)
    }

    pub fn preset(preset: CalibrationPreset) -> Self {
        let cal = match preset {
            CalibrationPreset::SqueezingAnchor => Self::from_anchor(150.0, 0.545, DEFAULT_POWER_RANGE_MW),
            CalibrationPreset::CrossCorrelationAnchor => {
                let mu = mu_from_g2si(160.49).expect("anchor g_si > 2");
                Self::from_anchor(10.0, mu.sqrt().asinh(), DEFAULT_POWER_RANGE_MW)
            }
        };
        cal.expect("preset calibrations are valid")
    }

    pub fn power_to_squeezing(&self, power_mw: f64) -> Result<TmsvState> {
        let (lo, hi) = self.valid_power_range;
        if !(power_mw >= lo && power_mw <= hi) {
            return Err(Error::Domain(format!(
                "pump power {power_mw} mW outside calibrated range [{lo}, {hi}] mW"
            )));
        }
        TmsvState::new(self.kappa * power_mw)
    }
}

/// Analytic values at one pump power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPowerPoint {
    pub r: f64,
    pub mu: f64,
    /// `None` at zero power, where g_si is undefined.
    pub g2si: Option<f64>,
    pub heralded_g2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPowerRow {
    pub power_mw: f64,
    pub point: Result<AnalyticPowerPoint>,
}

/// Analytic scan; powers outside the calibrated range give failed rows.
pub fn analytic_power_scan(
    calib: &PumpCalibration,
    powers_mw: &[f64],
    herald_efficiency: f64,
) -> Result<Vec<AnalyticPowerRow>> {
    if !(herald_efficiency > 0.0 && herald_efficiency <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "herald efficiency must lie in (0, 1] (got {herald_efficiency})"
        )));
    }
    Ok(powers_mw
        .iter()
        .map(|&power_mw| {
            let point = calib.power_to_squeezing(power_mw).and_then(|state| {
                Ok(AnalyticPowerPoint {
                    r: state.r(),
                    mu: state.mean_pair_number(),
                    g2si: state.cross_correlation_g2si().ok(),
                    heralded_g2: state.heralded_g2(herald_efficiency)?,
                })
            });
            AnalyticPowerRow { power_mw, point }
        })
        .collect())
}
