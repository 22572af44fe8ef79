use crate::phasematch::PhaseMatchSolution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Bandpass,
    /// Transmits wavelengths above `center`.
    Longpass,
    /// Transmits wavelengths below `center`.
    Shortpass,
}

/// Intensity transmission filter on a wavelength axis.
///
/// Bandpass: super-Gaussian `exp(−ln2 · (2|λ − c|/W)^(2·order))`, whose FWHM
/// is exactly `W` for any order. Edge filters: logistic
/// `1/(1 + exp(∓order·(λ − c)/W))` with `W` the transition scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    pub center: f64,
    pub fwhm: f64,
    pub kind: FilterKind,
    pub order: u32,
}

pub const BANDPASS_ORDER: u32 = 4;
pub const EDGE_ORDER: u32 = 8;
/// Edge-filter transition scale.
pub const EDGE_WIDTH: f64 = 2e-9;
/// Tunable bandpass width used for pair collection.
pub const COLLECTION_BANDWIDTH: f64 = 12e-9;
/// Narrow bandpass used in the HOM measurements.
pub const HOM_BANDWIDTH: f64 = 1e-9;

impl SpectralFilter {
    pub fn new(center: f64, fwhm: f64, kind: FilterKind, order: u32) -> Result<Self> {
        if !(fwhm > 0.0) || !(center > 0.0) || order == 0 {
            return Err(Error::InvalidParameter(format!(
                "filter needs center > 0, width > 0, order >= 1 (got {center}, {fwhm}, {order})"
            )));
        }
        Ok(Self {
            center,
            fwhm,
            kind,
            order,
        })
    }

    pub fn bandpass(center: f64, fwhm: f64) -> Result<Self> {
        Self::new(center, fwhm, FilterKind::Bandpass, BANDPASS_ORDER)
    }

    pub fn longpass(edge: f64) -> Result<Self> {
        Self::new(edge, EDGE_WIDTH, FilterKind::Longpass, EDGE_ORDER)
    }

    pub fn shortpass(edge: f64) -> Result<Self> {
        Self::new(edge, EDGE_WIDTH, FilterKind::Shortpass, EDGE_ORDER)
    }

    /// Intensity transmission at wavelength `lambda` (m), in [0, 1].
    pub fn transmission(&self, lambda: f64) -> f64 {
        let x = (lambda - self.center) / self.fwhm;
        match self.kind {
            FilterKind::Bandpass => {
                let u = (2.0 * x.abs()).powi(2 * self.order as i32);
                (-std::f64::consts::LN_2 * u).exp()
            }
            FilterKind::Longpass => 1.0 / (1.0 + (-(self.order as f64) * x).exp()),
            FilterKind::Shortpass => 1.0 / (1.0 + ((self.order as f64) * x).exp()),
        }
    }

    /// Amplitude transmission √T.
    pub fn amplitude(&self, lambda: f64) -> f64 {
        self.transmission(lambda).sqrt()
    }
}

/// Signal and idler filter chains.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterSet {
    pub signal: Vec<SpectralFilter>,
    pub idler: Vec<SpectralFilter>,
}

impl FilterSet {
    /// Collection chain: a short pass (signal) or long pass (idler) edge
    /// halfway to the pump, then a 12 nm tunable bandpass centred on the
    /// nominal pair wavelength.
    pub fn collection(pump_wavelength: f64, nominal: &PhaseMatchSolution) -> Result<Self> {
        Ok(Self {
            signal: vec![
                SpectralFilter::shortpass(0.5 * (pump_wavelength + nominal.lambda_s))?,
                SpectralFilter::bandpass(nominal.lambda_s, COLLECTION_BANDWIDTH)?,
            ],
            idler: vec![
                SpectralFilter::longpass(0.5 * (pump_wavelength + nominal.lambda_i))?,
                SpectralFilter::bandpass(nominal.lambda_i, COLLECTION_BANDWIDTH)?,
            ],
        })
    }

    /// Collection chain plus 1 nm bandpass filters on both arms.
    pub fn hom(pump_wavelength: f64, nominal: &PhaseMatchSolution) -> Result<Self> {
        let mut set = Self::collection(pump_wavelength, nominal)?;
        set.signal.push(SpectralFilter::bandpass(nominal.lambda_s, HOM_BANDWIDTH)?);
        set.idler.push(SpectralFilter::bandpass(nominal.lambda_i, HOM_BANDWIDTH)?);
        Ok(set)
    }
}
