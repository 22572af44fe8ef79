//! A chip of nominally identical waveguides with random birefringence errors.
//!
//! Source k carries `Δn_k = Δn (1 + η_k)` with `η_k = σ z_k` and `z_k` a
//! standard normal draw fixed by the seed, so changing σ rescales the same
//! fabrication pattern.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dispersion::SellmeierModel;
use crate::hom::{pairwise_visibility_matrix, HomSource, PairVisibility};
use crate::phasematch::{solve_phase_matching, PhaseMatchSolution, WaveguideSpec};
use crate::spectrum::{apply_filter_set, build_jsa_centered, Arm, FilterSet, GridConfig, PumpEnvelope};
use crate::tmsv::TmsvState;
use crate::{Error, Result};

pub const DEFAULT_SOURCE_COUNT: usize = 128;
pub const MAX_ETA_SIGMA: f64 = 0.2;
pub const DEFAULT_GROUPS: usize = 10;
/// Target standard deviation of the signal central wavelength.
pub const TARGET_SIGNAL_STD: f64 = 0.4e-9;

const CHIP_STREAM: u64 = 0xC41B;
const GROUP_STREAM: u64 = 0x6E0B;

/// A draw that had to be repeated because it made Δn non-positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Redraw {
    pub source: usize,
    pub rejected_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipModel {
    pub base: WaveguideSpec,
    pub sources: Vec<WaveguideSpec>,
    /// Fractional perturbation η_k per source.
    pub etas: Vec<f64>,
    pub eta_sigma: f64,
    pub seed: u64,
    pub redraws: Vec<Redraw>,
}

impl ChipModel {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Replace the perturbation of one source.
    pub fn set_eta(&mut self, source: usize, eta: f64) -> Result<()> {
        if source >= self.len() {
            return Err(Error::InvalidParameter(format!("source {source} out of range for {} sources", self.len())));
        }
        if !(1.0 + eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta = {eta} makes the birefringence non-positive")));
        }
        self.etas[source] = eta;
        self.sources[source] = self.base.with_delta_n(self.base.delta_n * (1.0 + eta));
        self.sources[source].label = format!("{}-{source:03}", self.base.label);
        Ok(())
    }
}

pub fn build_chip(base: &WaveguideSpec, count: usize, eta_sigma: f64, seed: u64) -> Result<ChipModel> {
    if count == 0 {
        return Err(Error::InvalidParameter("a chip needs at least one source".into()));
    }
    if !(0.0..=MAX_ETA_SIGMA).contains(&eta_sigma) {
        return Err(Error::InvalidParameter(format!("eta_sigma must lie in [0, {MAX_ETA_SIGMA}] (got {eta_sigma})")));
    }
    if !(base.delta_n > 0.0) {
        return Err(Error::InvalidParameter(format!("base birefringence must be > 0 (got {})", base.delta_n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CHIP_STREAM);
    let mut chip = ChipModel {
        base: base.clone(),
        sources: Vec::with_capacity(count),
        etas: Vec::with_capacity(count),
        eta_sigma,
        seed,
        redraws: Vec::new(),
    };
    for k in 0..count {
        let mut rejected = Vec::new();
        let eta = loop {
            let z: f64 = rng.sample(StandardNormal);
            let eta = eta_sigma * z;
            if 1.0 + eta > 0.0 {
                break eta;
            }
            rejected.push(z);
        };
        if !rejected.is_empty() {
            chip.redraws.push(Redraw { source: k, rejected_z: rejected });
        }
        let mut spec = base.with_delta_n(base.delta_n * (1.0 + eta));
        spec.label = format!("{}-{k:03}", base.label);
        chip.sources.push(spec);
        chip.etas.push(eta);
    }
    Ok(chip)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceEntry {
    pub id: usize,
    pub delta_n: f64,
    pub eta: f64,
    pub solution: Result<PhaseMatchSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmStatistics {
    pub mean: f64,
    /// Sample standard deviation (n − 1).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl ArmStatistics {
    fn from_values(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        // shifted by the first value so that identical entries give exactly zero spread
        let shift = v[0];
        let offset = v.iter().map(|x| x - shift).sum::<f64>() / n;
        let mean = shift + offset;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - shift - offset).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std,
            min: v.iter().cloned().fold(f64::INFINITY, f64::min),
            max: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayStatistics {
    pub entries: Vec<SourceEntry>,
    pub signal: ArmStatistics,
    pub idler: ArmStatistics,
    /// Sources whose phase matching failed.
    pub failures: Vec<usize>,
}

impl ArrayStatistics {
    pub fn wavelengths(&self, arm: Arm) -> Vec<f64> {
        self.entries
            .iter()
            .filter_map(|e| e.solution.as_ref().ok())
            .map(|s| match arm {
                Arm::Signal => s.lambda_s,
                Arm::Idler => s.lambda_i,
            })
            .collect()
    }

    /// Counts in bins of `width` starting at the minimum; returns (lower edges, counts).
    pub fn histogram(&self, arm: Arm, width: f64) -> (Vec<f64>, Vec<usize>) {
        let v = self.wavelengths(arm);
        let stats = match arm {
            Arm::Signal => self.signal,
            Arm::Idler => self.idler,
        };
        let bins = ((stats.spread() / width).floor() as usize + 1).max(1);
        let mut counts = vec![0; bins];
        for x in v {
            counts[(((x - stats.min) / width).floor() as usize).min(bins - 1)] += 1;
        }
        ((0..bins).map(|k| stats.min + k as f64 * width).collect(), counts)
    }

    pub fn std_ratio(&self) -> f64 {
        self.idler.std / self.signal.std
    }
}

pub fn chip_statistics(chip: &ChipModel, model: &SellmeierModel) -> Result<ArrayStatistics> {
    let entries: Vec<SourceEntry> = chip
        .sources
        .par_iter()
        .enumerate()
        .map(|(id, spec)| SourceEntry {
            id,
            delta_n: spec.delta_n,
            eta: chip.etas[id],
            solution: solve_phase_matching(model, spec),
        })
        .collect();
    let failures: Vec<usize> = entries.iter().filter(|e| e.solution.is_err()).map(|e| e.id).collect();
    let ok: Vec<&PhaseMatchSolution> = entries.iter().filter_map(|e| e.solution.as_ref().ok()).collect();
    let signal: Vec<f64> = ok.iter().map(|s| s.lambda_s).collect();
    let idler: Vec<f64> = ok.iter().map(|s| s.lambda_i).collect();
    let none = || Error::InconsistentInput(format!("phase matching failed for all {} sources", chip.len()));
    Ok(ArrayStatistics {
        signal: ArmStatistics::from_values(&signal).ok_or_else(none)?,
        idler: ArmStatistics::from_values(&idler).ok_or_else(none)?,
        entries,
        failures,
    })
}

/// σ_η for which the signal central-wavelength std of the seeded chip
/// equals `target_std`, by bisection on [0, 0.2].
pub fn calibrate_eta_sigma(
    model: &SellmeierModel,
    base: &WaveguideSpec,
    count: usize,
    seed: u64,
    target_std: f64,
) -> Result<f64> {
    if count < 2 {
        return Err(Error::InvalidParameter("calibration needs at least two sources".into()));
    }
    let std_at = |s: f64| -> Result<f64> { Ok(chip_statistics(&build_chip(base, count, s, seed)?, model)?.signal.std) };
    let (mut lo, mut hi) = (0.0, MAX_ETA_SIGMA);
    if std_at(hi)? < target_std {
        return Err(Error::InvalidParameter(format!(
            "signal std {target_std:.3e} m is out of reach for eta_sigma <= {MAX_ETA_SIGMA}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if std_at(mid)? < target_std {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Index range of block g when `count` sources are cut into `groups` contiguous blocks.
pub fn group_range(count: usize, groups: usize, g: usize) -> std::ops::Range<usize> {
    g * count / groups..(g + 1) * count / groups
}

/// Test t pairs a random member of block t with a random member of block
/// t + 1 (mod `n_groups`).
pub fn sample_hom_groups(chip: &ChipModel, n_groups: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n_groups < 2 {
        return Err(Error::InvalidParameter("at least two groups are required".into()));
    }
    if chip.len() < n_groups {
        return Err(Error::InvalidParameter(format!("{} sources cannot form {n_groups} groups", chip.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GROUP_STREAM);
    Ok((0..n_groups)
        .map(|t| {
            let a = rng.random_range(group_range(chip.len(), n_groups, t));
            let b = rng.random_range(group_range(chip.len(), n_groups, (t + 1) % n_groups));
            (a, b)
        })
        .collect())
}

/// How chip sources are turned into interferometer inputs: all JSAs share
/// the grid and filter set of the nominal design.
#[derive(Debug, Clone, PartialEq)]
pub struct HomSetup {
    pub pump: PumpEnvelope,
    pub grid: GridConfig,
    pub state: TmsvState,
}

pub fn hom_sources(chip: &ChipModel, model: &SellmeierModel, setup: &HomSetup, ids: &[usize]) -> Result<Vec<HomSource>> {
    let nominal = solve_phase_matching(model, &chip.base)?;
    let filters = FilterSet::hom(chip.base.pump_wavelength, &nominal)?;
    ids.par_iter()
        .map(|&k| {
            let spec = chip
                .sources
                .get(k)
                .ok_or_else(|| Error::InvalidParameter(format!("source {k} out of range for {} sources", chip.len())))?;
            let js = build_jsa_centered(model, spec, &setup.pump, &setup.grid, nominal.omega_s, nominal.omega_i)?;
            Ok(HomSource::new(setup.state.clone(), &apply_filter_set(&js, &filters)?))
        })
        .collect()
}

/// Analytic visibilities for the given source pairs.
pub fn group_visibilities(
    chip: &ChipModel,
    model: &SellmeierModel,
    setup: &HomSetup,
    pairs: &[(usize, usize)],
) -> Result<Vec<PairVisibility>> {
    let mut ids: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let sources = hom_sources(chip, model, setup, &ids)?;
    let local = |k: usize| ids.binary_search(&k).expect("id collected above");
    let local_pairs: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (local(a), local(b))).collect();
    let mut out = pairwise_visibility_matrix(&sources, Some(&local_pairs))?;
    for (v, &(a, b)) in out.iter_mut().zip(pairs) {
        v.a = a;
        v.b = b;
    }
    Ok(out)
}
