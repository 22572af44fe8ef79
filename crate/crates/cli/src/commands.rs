//! Experiment runners. Each returns its output files in memory; nothing
//! touches the disk until the whole computation has succeeded.

use std::io::Write;

use sfwm_core::array::{
    build_chip, calibrate_eta_sigma, chip_statistics, group_visibilities, hom_sources, sample_hom_groups,
    ArrayStatistics, ChipModel, HomSetup,
};
use sfwm_core::dispersion::SellmeierModel;
use sfwm_core::hom::{hom_scan_mc, source_visibility, HomScanConfig, HomSource, STAGE_STEP};
use sfwm_core::montecarlo::{log_log_slope, power_scan, PowerScanRow};
use sfwm_core::phasematch::{eta_grid, perturbation_scan, solve_phase_matching, PhaseMatchSolution};
use sfwm_core::report::{
    fixed, sci, write_analytic_power_csv, write_chip_csv, write_hom_scan_csv, write_perturbation_csv,
    write_power_scan_csv, write_spectrum_csv, write_summary, write_visibility_csv, HomSummary, RunHeader,
};
use sfwm_core::spectrum::io::write_jsa;
use sfwm_core::spectrum::{
    apply_filter_set, build_jsa, central_wavelength, marginal_spectrum, schmidt_decompose, Arm, FilterSet,
    JointSpectrum,
};
use sfwm_core::tmsv::{analytic_power_scan, PumpCalibration};

use crate::config::{HbtSection, HomSection, PowerScanSection, RunConfig};
use crate::error::CliError;

/// Upper bound on heralded g2 across the HBT power grid.
pub const G2H_BOUND: f64 = 0.12;
/// Lower bound on chip HOM visibilities.
pub const VISIBILITY_BOUND: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FilterChoice {
    None,
    Collection,
    Hom,
}

#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    /// Printed to stdout after the files are written.
    pub report: String,
}

impl Outputs {
    fn file(&mut self, name: impl Into<String>, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) {
        let mut buf = Vec::new();
        write(&mut buf).expect("writing to memory cannot fail");
        self.files.push((name.into(), buf));
    }

    fn summary(&mut self, name: &str, header: &RunHeader, lines: Vec<(String, String)>) {
        for (k, v) in &lines {
            self.report.push_str(&format!("{k}: {v}\n"));
        }
        self.file(name, |w| write_summary(w, header, &lines));
    }

    pub fn extend(&mut self, other: Outputs) {
        self.files.extend(other.files);
        self.report.push_str(&other.report);
    }
}

/// Resolved configuration plus everything derived from it once.
pub struct Context {
    pub cfg: RunConfig,
    pub model: SellmeierModel,
    pub hash: String,
}

fn kv(k: &str, v: impl Into<String>) -> (String, String) {
    (k.to_string(), v.into())
}

fn nm(v: f64) -> String {
    fixed(Some(v * 1e9), 4)
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let model = cfg.dispersion_model()?;
        let hash = cfg.hash(&model)?;
        Ok(Self { cfg, model, hash })
    }

    fn header(&self, command: &str) -> RunHeader {
        RunHeader::new(&self.hash, self.cfg.seed, format!("sfwm {command}"))
    }

    fn nominal(&self) -> Result<PhaseMatchSolution, CliError> {
        Ok(solve_phase_matching(&self.model, &self.cfg.waveguide_spec())?)
    }

    fn filtered_jsa(&self, filters: FilterChoice) -> Result<JointSpectrum, CliError> {
        let spec = self.cfg.waveguide_spec();
        let js = build_jsa(&self.model, &spec, &self.cfg.pump_envelope()?, &self.cfg.grid_config())?;
        let nominal = self.nominal()?;
        let set = match filters {
            FilterChoice::None => return Ok(js),
            FilterChoice::Collection => FilterSet::collection(spec.pump_wavelength, &nominal)?,
            FilterChoice::Hom => FilterSet::hom(spec.pump_wavelength, &nominal)?,
        };
        Ok(apply_filter_set(&js, &set)?)
    }

    pub fn phasematch(&self) -> Result<Outputs, CliError> {
        let spec = self.cfg.waveguide_spec();
        let sol = self.nominal()?;
        let mut out = Outputs::default();
        out.summary(
            "phasematch.txt",
            &self.header("phasematch"),
            vec![
                kv("pump_nm", nm(spec.pump_wavelength)),
                kv("delta_n", sci(Some(spec.delta_n), 6)),
                kv("lambda_s_nm", nm(sol.lambda_s)),
                kv("lambda_i_nm", nm(sol.lambda_i)),
                kv("omega_s_rad_per_s", sci(Some(sol.omega_s), 9)),
                kv("omega_i_rad_per_s", sci(Some(sol.omega_i), 9)),
                kv("detuning_rad_per_s", sci(Some(sol.detuning), 9)),
                kv("residual_dk_per_m", sci(Some(sol.residual_k), 3)),
            ],
        );
        Ok(out)
    }

    pub fn perturb_scan(&self, prefix: &str) -> Result<Outputs, CliError> {
        let spec = self.cfg.waveguide_spec();
        let p = &self.cfg.perturbation;
        let base = self.nominal()?;
        let points = perturbation_scan(&self.model, &spec, &eta_grid(p.eta_max, p.points))?;
        let probes = perturbation_scan(&self.model, &spec, &[0.05, 0.2])?;
        let header = self.header("perturb-scan");
        let mut out = Outputs::default();
        out.file(format!("{prefix}perturbation_scan.csv"), |w| write_perturbation_csv(w, &header, &points));
        let failed = points.iter().filter(|q| q.plus.is_err() || q.minus.is_err()).count();
        out.summary(
            &format!("{prefix}perturbation_summary.txt"),
            &header,
            vec![
                kv("lambda_s_nm", nm(base.lambda_s)),
                kv("lambda_i_nm", nm(base.lambda_i)),
                kv("eta_points", points.len().to_string()),
                kv("failed_points", failed.to_string()),
                kv("signal_shift_nm_at_eta_0.05", fixed(probes[0].max_signal_shift(&base).map(|v| v * 1e9), 4)),
                kv("max_fluctuation_nm_at_eta_0.20", fixed(probes[1].max_fluctuation(&base).map(|v| v * 1e9), 4)),
            ],
        );
        Ok(out)
    }

    pub fn spectra(&self, filters: FilterChoice, prefix: &str) -> Result<Outputs, CliError> {
        let js = self.filtered_jsa(filters)?;
        let header = self.header("spectra");
        let mut out = Outputs::default();
        let mut lines = vec![kv("survival", fixed(Some(js.survival), 6))];
        for arm in [Arm::Signal, Arm::Idler] {
            let s = marginal_spectrum(&js, arm);
            let centre = central_wavelength(&s)?;
            out.file(format!("{prefix}spectrum_{}.csv", arm.name()), |w| write_spectrum_csv(w, &header, &s));
            lines.push(kv(&format!("{}_central_nm", arm.name()), nm(centre)));
            lines.push(kv(&format!("{}_fwhm_nm", arm.name()), nm(s.fwhm())));
        }
        lines.push(kv("purity", fixed(Some(schmidt_decompose(&js)?.purity), 6)));
        out.summary(&format!("{prefix}spectra_summary.txt"), &header, lines);
        Ok(out)
    }

    pub fn jsa(&self, filters: FilterChoice) -> Result<Outputs, CliError> {
        let js = self.filtered_jsa(filters)?;
        let schmidt = schmidt_decompose(&js)?;
        let mut out = Outputs::default();
        out.file("jsa.bin", |w| write_jsa(w, &js));
        out.summary(
            "jsa_summary.txt",
            &self.header("jsa"),
            vec![
                kv("points_s", js.signal.len.to_string()),
                kv("points_i", js.idler.len.to_string()),
                kv("survival", fixed(Some(js.survival), 6)),
                kv("purity", fixed(Some(schmidt.purity), 6)),
                kv("schmidt_number", fixed(Some(schmidt.schmidt_number), 6)),
            ],
        );
        Ok(out)
    }

    fn scan(
        &self,
        command: &str,
        stem: &str,
        calib: &PumpCalibration,
        powers: &[f64],
        n_pulses: u64,
    ) -> Result<(Outputs, Vec<PowerScanRow>, RunHeader), CliError> {
        let det = self.cfg.detection(n_pulses);
        let rows = power_scan(calib, powers, &det)?;
        let analytic = analytic_power_scan(calib, powers, det.eta_idler)?;
        let header = self
            .header(command)
            .with("kappa_per_mw", sci(Some(calib.kappa), 9))
            .with("n_pulses", n_pulses.to_string());
        let mut out = Outputs::default();
        out.file(format!("{stem}.csv"), |w| write_power_scan_csv(w, &header, &rows));
        out.file(format!("{stem}_analytic.csv"), |w| write_analytic_power_csv(w, &header, &analytic));
        Ok((out, rows, header))
    }

    pub fn power_scan(&self, prefix: &str) -> Result<Outputs, CliError> {
        let s = &self.cfg.power_scan;
        let calib = s.calibration.resolve(PowerScanSection::PRESET)?;
        let stem = format!("{prefix}power_scan");
        let (mut out, rows, header) = self.scan("power-scan", &stem, &calib, &s.powers_mw, s.n_pulses)?;
        let ok: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter_map(|r| r.point.as_ref().ok().map(|p| (r.power_mw, p.r, p.rate_cc)))
            .filter(|(_, _, rate)| *rate > 0.0)
            .collect();
        let x: Vec<f64> = ok.iter().map(|v| v.0).collect();
        let y: Vec<f64> = ok.iter().map(|v| v.2).collect();
        let top = ok.last();
        out.summary(
            &format!("{stem}_summary.txt"),
            &header,
            vec![
                kv("points", rows.len().to_string()),
                kv("failed_points", (rows.len() - ok.len()).to_string()),
                kv("rate_log_log_slope", fixed(log_log_slope(&x, &y).ok(), 4)),
                kv("max_power_mw", fixed(top.map(|v| v.0), 3)),
                kv("r_at_max_power", fixed(top.map(|v| v.1), 6)),
                kv("rate_cc_per_s_at_max_power", fixed(top.map(|v| v.2), 1)),
            ],
        );
        Ok(out)
    }

    pub fn hbt(&self, prefix: &str) -> Result<Outputs, CliError> {
        let s: &HbtSection = &self.cfg.hbt;
        let calib = s.calibration.resolve(HbtSection::PRESET)?;
        let stem = format!("{prefix}hbt_scan");
        let (mut out, rows, header) = self.scan("hbt", &stem, &calib, &s.powers_mw, s.n_pulses)?;
        let g2h: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.point.as_ref().ok().and_then(|p| p.g2h.as_ref().ok()).map(|e| e.value))
            .collect();
        let max = g2h.iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        out.summary(
            &format!("{stem}_summary.txt"),
            &header,
            vec![
                kv("points", rows.len().to_string()),
                kv("defined_g2h_points", g2h.len().to_string()),
                kv("max_g2h", fixed(max, 6)),
                kv(
                    &format!("all_g2h_below_{G2H_BOUND}"),
                    (g2h.len() == rows.len() && g2h.iter().all(|v| *v < G2H_BOUND)).to_string(),
                ),
            ],
        );
        Ok(out)
    }

    fn chip(&self) -> Result<(ChipModel, ArrayStatistics), CliError> {
        let c = &self.cfg.chip;
        let base = self.cfg.waveguide_spec();
        let sigma = match c.eta_sigma {
            Some(s) => s,
            None => calibrate_eta_sigma(&self.model, &base, c.sources, self.cfg.seed, c.target_signal_std_nm * 1e-9)?,
        };
        let chip = build_chip(&base, c.sources, sigma, self.cfg.seed)?;
        let stats = chip_statistics(&chip, &self.model)?;
        Ok((chip, stats))
    }

    fn hom_setup(&self) -> Result<HomSetup, CliError> {
        let h: &HomSection = &self.cfg.hom;
        Ok(HomSetup {
            pump: self.cfg.pump_envelope()?,
            grid: self.cfg.grid_config(),
            state: h.calibration.resolve(HomSection::PRESET)?.power_to_squeezing(h.pump_power_mw)?,
        })
    }

    fn chip_statistics_outputs(&self, chip: &ChipModel, stats: &ArrayStatistics, prefix: &str) -> Outputs {
        let header = self.header("chip").with("eta_sigma", sci(Some(chip.eta_sigma), 9));
        let mut out = Outputs::default();
        out.file(format!("{prefix}chip_sources.csv"), |w| write_chip_csv(w, &header, stats));
        let nominal = self.nominal().ok();
        let mut lines = vec![
            kv("sources", chip.len().to_string()),
            kv("eta_sigma", sci(Some(chip.eta_sigma), 6)),
            kv("redraws", chip.redraws.len().to_string()),
            kv("failures", stats.failures.len().to_string()),
        ];
        for (arm, a) in [(Arm::Signal, &stats.signal), (Arm::Idler, &stats.idler)] {
            let n = arm.name();
            lines.push(kv(&format!("{n}_mean_nm"), nm(a.mean)));
            lines.push(kv(&format!("{n}_std_nm"), nm(a.std)));
            lines.push(kv(&format!("{n}_min_nm"), nm(a.min)));
            lines.push(kv(&format!("{n}_max_nm"), nm(a.max)));
        }
        lines.push(kv("std_ratio_idler_over_signal", fixed(Some(stats.std_ratio()), 4)));
        lines.push(kv(
            "model_std_ratio",
            fixed(nominal.map(|s| (s.lambda_i / s.lambda_s).powi(2)), 4),
        ));
        out.summary(&format!("{prefix}chip_summary.txt"), &header, lines);
        out
    }

    fn visibility_outputs(&self, chip: &ChipModel, prefix: &str) -> Result<(Outputs, Vec<(usize, usize)>), CliError> {
        let pairs = sample_hom_groups(chip, self.cfg.chip.groups, self.cfg.seed)?;
        let vis = group_visibilities(chip, &self.model, &self.hom_setup()?, &pairs)?;
        let header = self.header("chip");
        let mut out = Outputs::default();
        out.file(format!("{prefix}chip_visibilities.csv"), |w| write_visibility_csv(w, &header, &vis));
        let min = vis.iter().map(|v| v.visibility).fold(f64::INFINITY, f64::min);
        out.summary(
            &format!("{prefix}chip_visibility_summary.txt"),
            &header,
            vec![
                kv("pairs", vis.len().to_string()),
                kv("min_visibility", fixed(Some(min), 6)),
                kv(
                    &format!("all_visibilities_above_{VISIBILITY_BOUND}"),
                    vis.iter().all(|v| v.visibility > VISIBILITY_BOUND).to_string(),
                ),
            ],
        );
        Ok((out, pairs))
    }

    pub fn chip_command(&self, prefix: &str, with_visibilities: bool) -> Result<Outputs, CliError> {
        let (chip, stats) = self.chip()?;
        let mut out = self.chip_statistics_outputs(&chip, &stats, prefix);
        if with_visibilities {
            out.extend(self.visibility_outputs(&chip, prefix)?.0);
        }
        Ok(out)
    }

    fn hom_run(&self, a: &HomSource, b: &HomSource, label: String, prefix: &str) -> Result<Outputs, CliError> {
        let h = &self.cfg.hom;
        let mut scan = HomScanConfig::stage_scan(STAGE_STEP, h.half_points, h.stride, h.n_pulses_per_point);
        scan.splitter_ratio = h.splitter_ratio;
        let result = hom_scan_mc(a, b, &scan, &self.cfg.detection(h.n_pulses_per_point))?;
        let analytic = source_visibility(a, b)?;
        let header = self.header("hom").with("sources", label);
        let summary = HomSummary::new(&header, &result, analytic);
        let mut out = Outputs::default();
        out.file(format!("{prefix}hom_scan.csv"), |w| write_hom_scan_csv(w, &header, &result));
        out.file(format!("{prefix}hom_summary.json"), |w| summary.write(w));
        out.report.push_str(&format!(
            "visibility: {} +- {}\nanalytic_visibility: {}\ndip_width_fs: {}\n",
            fixed(Some(result.visibility), 5),
            fixed(Some(result.visibility_err), 5),
            fixed(Some(analytic), 5),
            fixed(Some(result.dip_width * 1e15), 1),
        ));
        Ok(out)
    }

    pub fn hom(&self, prefix: &str) -> Result<Outputs, CliError> {
        let h = &self.cfg.hom;
        match (h.source_a, h.source_b) {
            (None, None) => {
                let js = self.filtered_jsa(FilterChoice::Hom)?;
                let src = HomSource::new(self.hom_setup()?.state, &js);
                self.hom_run(&src, &src, "nominal,nominal".into(), prefix)
            }
            (Some(a), Some(b)) => {
                let (chip, _) = self.chip()?;
                let s = hom_sources(&chip, &self.model, &self.hom_setup()?, &[a, b])?;
                self.hom_run(&s[0], &s[1], format!("{a},{b}"), prefix)
            }
            _ => Err(CliError::Usage("give both --source-a and --source-b, or neither".into())),
        }
    }

    /// Chip visibilities for the sampled groups plus a Monte Carlo scan of the first group.
    pub fn fig4(&self) -> Result<Outputs, CliError> {
        let (chip, _) = self.chip()?;
        let (mut out, pairs) = self.visibility_outputs(&chip, "fig4_")?;
        let (a, b) = pairs[0];
        let s = hom_sources(&chip, &self.model, &self.hom_setup()?, &[a, b])?;
        out.extend(self.hom_run(&s[0], &s[1], format!("{a},{b}"), "fig4_")?);
        Ok(out)
    }
}

/// Write every output under `dir`; on failure delete what was written.
pub fn commit(dir: &std::path::Path, outputs: &Outputs) -> Result<(), CliError> {
    let io = |path: std::path::PathBuf| move |source| CliError::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    let mut written = Vec::new();
    for (name, bytes) in &outputs.files {
        let path = dir.join(name);
        let res = std::fs::File::create(&path).and_then(|mut f| f.write_all(bytes));
        written.push(path.clone());
        if let Err(e) = res {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(io(path)(e));
        }
    }
    Ok(())
}
