//! Command-line surface and the merged run context.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Format, GridSpec, MethodChoice, ParamSpec, PhysicalLength, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{emit, Table};

#[derive(Debug, Parser)]
#[command(
    name = "qcavity",
    version,
    about = "Single atom between atomic Bragg mirrors: dynamics, spectra and reflectance"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Also write an SVG plot.
    #[arg(long, global = true, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    /// Seed for disorder sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Omit the timestamp so identical inputs give identical bytes.
    #[arg(long, global = true)]
    pub reproducible: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Central-atom amplitude c0(t) from one solver.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// auto, dde, full-chain, series, spectral, spectral-main, approx or detuned.
        #[arg(long)]
        method: Option<MethodChoice>,
    },
    /// Reflectance spectrum of one atomic mirror.
    Reflectance(ReflectanceArgs),
    /// Macroscopic-limit poles and residue weights.
    Poles {
        #[command(flatten)]
        params: ParamArgs,
        /// Poles per sign of Im s.
        #[arg(long, default_value_t = qcavity_core::spectral::DEFAULT_POLE_COUNT)]
        count: usize,
    },
    /// Figures of merit for a configuration.
    Fom {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Sweep one parameter and report fitted decay rates and frequencies.
    Sweep(SweepArgs),
    /// Run several solvers on a shared grid and compare them.
    Compare {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "dde,series,approx,spectral-main"
        )]
        methods: Vec<MethodChoice>,
    },
    /// Table of laboratory presets.
    Presets,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// cesium, quantum_dot or superconducting (also cs, qd, sc).
    #[arg(long)]
    pub preset: Option<String>,
    /// Atoms per mirror.
    #[arg(long)]
    pub n_atoms: Option<u32>,
    /// Delay γd/v_g.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Phase offset φ from the Bragg condition.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Environment decay rate γ₀/γ.
    #[arg(long)]
    pub env_rate: Option<f64>,
    /// Waveguide decay rate γ in 1/s (with --distance and --group-velocity instead of --tau).
    #[arg(long)]
    pub gamma_rate: Option<f64>,
    /// Mirror separation d in metres.
    #[arg(long)]
    pub distance: Option<f64>,
    /// Group velocity in m/s.
    #[arg(long)]
    pub group_velocity: Option<f64>,
}

impl ParamArgs {
    pub fn spec(&self) -> Result<ParamSpec> {
        let physical = match (self.gamma_rate, self.distance, self.group_velocity) {
            (None, None, None) => None,
            (Some(gamma_rate), Some(distance), Some(group_velocity)) => Some(PhysicalLength {
                gamma_rate,
                distance,
                group_velocity,
            }),
            _ => {
                return Err(CliError::config(
                    "--gamma-rate, --distance and --group-velocity go together",
                ))
            }
        };
        Ok(ParamSpec {
            preset: self.preset.clone(),
            n_atoms: self.n_atoms,
            delay_tau: self.tau,
            physical,
            phase_offset: self.phi,
            env_rate: self.env_rate,
        })
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// End of the time window in units of 1/γ [default: 3].
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of output times [default: 601].
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReflectanceArgs {
    #[arg(long)]
    pub n_atoms: Option<u32>,
    /// Detuning window `lo:hi` in units of γ [default: -3N:3N].
    #[arg(long, allow_hyphen_values = true)]
    pub delta_range: Option<String>,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Spacing in units of half the resonant wavelength.
    #[arg(long, default_value_t = 1)]
    pub bragg_order: u32,
    /// RMS position disorder as a fraction of the spacing.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Disorder realizations.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    NAtoms,
    DelayTau,
    PhaseOffset,
    EnvRate,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::NAtoms => "n_atoms",
            Axis::DelayTau => "delay_tau",
            Axis::PhaseOffset => "phase_offset",
            Axis::EnvRate => "env_rate",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub method: Option<MethodChoice>,
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    /// Number of points; 0 gives an empty table.
    #[arg(long)]
    pub count: usize,
    /// Geometric instead of arithmetic spacing.
    #[arg(long)]
    pub log: bool,
}

/// Configuration file and flags merged.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub svg: Option<PathBuf>,
    pub seed: u64,
    pub reproducible: bool,
}

impl Context {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let config = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(Context {
            out: cli.out.clone().or(config.outputs.out.clone()),
            format: cli.format.or(config.outputs.format).unwrap_or_default(),
            svg: cli.svg.clone().or(config.outputs.svg.clone()),
            seed: cli.seed.or(config.seed).unwrap_or(0),
            reproducible: cli.reproducible,
            config,
        })
    }

    pub fn params(&self, args: &ParamArgs) -> Result<ParamSpec> {
        let mut spec = self.config.params.clone();
        let flags = args.spec()?;
        if flags.delay_tau.is_some() {
            spec.physical = None;
        }
        if flags.physical.is_some() {
            spec.delay_tau = None;
        }
        spec.merge(&flags);
        Ok(spec)
    }

    pub fn grid(&self, args: &GridArgs) -> Result<GridSpec> {
        let mut g = self.config.grid.unwrap_or_default();
        if let Some(t) = args.t_max {
            g.t_max = t;
        }
        if let Some(n) = args.points {
            g.n_points = n;
        }
        g.validate()?;
        Ok(g)
    }

    pub fn method(&self, flag: Option<MethodChoice>) -> MethodChoice {
        flag.or(self.config.method).unwrap_or(MethodChoice::Auto)
    }

    /// Leading metadata common to every table.
    pub fn header(&self, table: &mut Table, command: &str) {
        table
            .meta("tool", concat!("qcavity ", env!("CARGO_PKG_VERSION")))
            .meta("command", command);
        if !self.reproducible {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            table.meta("generated_unix", secs);
        }
    }

    pub fn write(&self, table: &Table) -> Result<()> {
        emit(&table.render(self.format)?, self.out.as_deref())
    }

    pub fn write_svg(&self, svg: &str) -> Result<()> {
        match &self.svg {
            Some(p) => std::fs::write(p, svg)
                .map_err(|e| CliError::io(format!("writing {}", p.display()), e)),
            None => Ok(()),
        }
    }
}
