//! `sfwm`: command-line front end for the photon-pair source simulations.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{commit, Context, FilterChoice, Outputs};
use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sfwm", version, about = "Birefringence phase-matched SFWM photon-pair source simulations")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for all random streams.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct WaveguideArgs {
    /// Birefringence of the waveguide.
    #[arg(long, allow_negative_numbers = true)]
    delta_n: Option<f64>,
    /// Pump centre wavelength in nm.
    #[arg(long)]
    pump_nm: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve phase matching for one waveguide.
    Phasematch(WaveguideArgs),
    /// Pair wavelengths under birefringence perturbation ±η.
    PerturbScan {
        #[command(flatten)]
        waveguide: WaveguideArgs,
        /// Largest fractional perturbation.
        #[arg(long)]
        eta_max: Option<f64>,
        /// Number of η values from 0 to eta_max.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Marginal signal and idler spectra.
    Spectra {
        #[command(flatten)]
        waveguide: WaveguideArgs,
        #[arg(long, value_enum, default_value_t = FilterChoice::Collection)]
        filters: FilterChoice,
    },
    /// Binary joint spectral amplitude dump with purity.
    Jsa {
        #[command(flatten)]
        waveguide: WaveguideArgs,
        #[arg(long, value_enum, default_value_t = FilterChoice::Hom)]
        filters: FilterChoice,
        /// Grid points per axis.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Coincidence rate and correlations versus pump power.
    PowerScan {
        /// Pulses simulated per power.
        #[arg(long)]
        pulses: Option<u64>,
    },
    /// Heralded autocorrelation versus pump power.
    Hbt {
        /// Pulses simulated per power.
        #[arg(long)]
        pulses: Option<u64>,
    },
    /// Two-source Hong-Ou-Mandel delay scan.
    Hom {
        /// Pulses simulated per delay.
        #[arg(long)]
        pulses_per_point: Option<u64>,
        /// Chip source feeding input A.
        #[arg(long)]
        source_a: Option<usize>,
        /// Chip source feeding input B.
        #[arg(long)]
        source_b: Option<usize>,
    },
    /// Chip uniformity statistics and cross-group visibilities.
    Chip {
        /// Spread of the fractional birefringence; calibrated when absent.
        #[arg(long)]
        eta_sigma: Option<f64>,
        /// Number of sources on the chip.
        #[arg(long)]
        sources: Option<usize>,
    },
    /// Datasets behind each figure.
    Figures {
        #[arg(value_enum)]
        which: Figure,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig2a,
    Fig2bc,
    Fig2de,
    Fig3a,
    Fig3b,
    Fig4,
    All,
}

impl WaveguideArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.delta_n {
            cfg.waveguide.delta_n = v;
        }
        if let Some(v) = self.pump_nm {
            cfg.waveguide.pump_nm = v;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.out_dir, cli.out.clone());
    match &cli.command {
        Command::Phasematch(w) | Command::Spectra { waveguide: w, .. } => w.apply(&mut cfg),
        Command::PerturbScan { waveguide, eta_max, points } => {
            waveguide.apply(&mut cfg);
            set(&mut cfg.perturbation.eta_max, *eta_max);
            set(&mut cfg.perturbation.points, *points);
        }
        Command::Jsa { waveguide, points, .. } => {
            waveguide.apply(&mut cfg);
            set(&mut cfg.grid.points, *points);
        }
        Command::PowerScan { pulses } => set(&mut cfg.power_scan.n_pulses, *pulses),
        Command::Hbt { pulses } => set(&mut cfg.hbt.n_pulses, *pulses),
        Command::Hom { pulses_per_point, source_a, source_b } => {
            set(&mut cfg.hom.n_pulses_per_point, *pulses_per_point);
            if source_a.is_some() || source_b.is_some() {
                cfg.hom.source_a = *source_a;
                cfg.hom.source_b = *source_b;
            }
        }
        Command::Chip { eta_sigma, sources } => {
            if eta_sigma.is_some() {
                cfg.chip.eta_sigma = *eta_sigma;
            }
            set(&mut cfg.chip.sources, *sources);
        }
        Command::Figures { .. } => {}
    }
    Ok(cfg)
}

fn figure(ctx: &Context, which: Figure) -> Result<Outputs, CliError> {
    Ok(match which {
        Figure::Fig2a => ctx.chip_command("fig2a_", false)?,
        Figure::Fig2bc => ctx.perturb_scan("fig2bc_")?,
        Figure::Fig2de => ctx.spectra(FilterChoice::Collection, "fig2de_")?,
        Figure::Fig3a => ctx.hbt("fig3a_")?,
        Figure::Fig3b => ctx.power_scan("fig3b_")?,
        Figure::Fig4 => ctx.fig4()?,
        Figure::All => {
            let mut out = Outputs::default();
            for f in [Figure::Fig2a, Figure::Fig2bc, Figure::Fig2de, Figure::Fig3a, Figure::Fig3b, Figure::Fig4] {
                out.extend(figure(ctx, f)?);
            }
            out
        }
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::new(resolve(&cli)?)?;
    let outputs = match &cli.command {
        Command::Phasematch(_) => ctx.phasematch()?,
        Command::PerturbScan { .. } => ctx.perturb_scan("")?,
        Command::Spectra { filters, .. } => ctx.spectra(*filters, "")?,
        Command::Jsa { filters, .. } => ctx.jsa(*filters)?,
        Command::PowerScan { .. } => ctx.power_scan("")?,
        Command::Hbt { .. } => ctx.hbt("")?,
        Command::Hom { .. } => ctx.hom("")?,
        Command::Chip { .. } => ctx.chip_command("", true)?,
        Command::Figures { which } => figure(&ctx, *which)?,
    };
    commit(&ctx.cfg.out_dir, &outputs)?;
    print!("{}", outputs.report);
    for (name, _) in &outputs.files {
        eprintln!("wrote {}", ctx.cfg.out_dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
