//! `kerr-keldysh`: sweeps, scans, oracle validation and residual checks.
//!
//! Exit status: 0 on success, 1 when a computation fails (or a validation
//! report contains failures), 2 on usage errors. Nothing is written unless
//! the whole run succeeds.

mod manifest;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kerr_keldysh::{Execution, ModelParams};
use serde_json::{Map, Value};

use manifest::{Command, Format, Grid, Options, RunManifest};

/// Bad input: flags, manifests, parameter values or grids.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(UsageError),
    Compute(String),
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e)
    }
}

impl From<kerr_keldysh::Error> for CliError {
    fn from(e: kerr_keldysh::Error) -> Self {
        match e {
            kerr_keldysh::Error::InvalidParams(msg) => CliError::Usage(UsageError(msg)),
            other => CliError::Compute(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "kerr-keldysh",
    version,
    about = "Exact steady states of driven Kerr resonators"
)]
struct Cli {
    /// Evaluate grid points on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Gamma,
    Chi,
}

impl Unit {
    fn key(self) -> &'static str {
        match self {
            Unit::Gamma => "gamma",
            Unit::Chi => "chi",
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file.
    #[arg(short, long)]
    output: PathBuf,

    /// Output format; defaults to JSON for `.json` paths and CSV otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        self.format
            .unwrap_or_else(|| Format::from_path(&self.output))
    }
}

#[derive(Args)]
struct DriveSweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    delta_c: f64,
    #[arg(long, allow_negative_numbers = true)]
    chi: f64,
    /// May be omitted with `--unit gamma`.
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega_from: f64,
    #[arg(long, allow_negative_numbers = true)]
    omega_to: f64,
    #[arg(long, allow_negative_numbers = true)]
    omega_step: f64,
    /// Read every frequency, including the drive axis, in units of this rate.
    #[arg(long, value_enum)]
    unit: Option<Unit>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand)]
enum Sub {
    /// Mean-field branches and their stability along a drive sweep.
    MeanfieldSweep(DriveSweepArgs),

    /// Exact photon number, amplitude and g2 along a drive sweep.
    ExactSweep {
        #[command(flatten)]
        sweep: DriveSweepArgs,
        /// Extra moment <a†^l a^k> (both default to 1 once either is given).
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },

    /// Photon number against detuning Δc/χ with the two-photon drive.
    ResonanceScan {
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        omega: f64,
        /// Real part of the two-photon drive Λ.
        #[arg(long, allow_negative_numbers = true)]
        lambda2: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        lambda2_im: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        kappa: f64,
        /// May be omitted with `--unit chi`.
        #[arg(long, allow_negative_numbers = true)]
        chi: Option<f64>,
        /// May be omitted with `--unit gamma`.
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_from: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta_to: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta_step: f64,
        #[arg(long, value_enum)]
        unit: Option<Unit>,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Compare exact moments with the Lindblad solver over a list of points.
    Validate {
        /// JSON list of flat parameter objects.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// How well the generator annihilates the exact steady state.
    Residual {
        #[arg(long, allow_negative_numbers = true)]
        delta_c: f64,
        #[arg(long, allow_negative_numbers = true)]
        chi: f64,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        lambda2: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        lambda2_im: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        kappa: f64,
        #[arg(long, value_enum)]
        unit: Option<Unit>,
        #[arg(long)]
        cutoff_cl: usize,
        #[arg(long)]
        cutoff_q: usize,
        #[arg(long)]
        interior: usize,
        /// Report file (JSON); the report is also printed.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },

    /// Re-run a manifest, or the manifest embedded in a JSON output.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Override the manifest's output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

/// Absolute-unit parameter object from flag values, honouring `--unit`.
fn params_map(
    values: &[(&str, Option<f64>)],
    unit: Option<Unit>,
) -> Result<Map<String, Value>, CliError> {
    let mut map = Map::new();
    for &(key, value) in values {
        let Some(v) = value else { continue };
        let name = match unit {
            Some(u) if u.key() != key => format!("{key}_over_{}", u.key()),
            _ => key.to_string(),
        };
        map.insert(name, Value::from(v));
    }
    Ok(ModelParams::from_json_map(&map, &[])?.to_json_map())
}

fn anchor_scale(params: &Map<String, Value>, unit: Option<Unit>) -> f64 {
    unit.and_then(|u| params.get(u.key()).and_then(Value::as_f64))
        .unwrap_or(1.0)
}

fn drive_manifest(
    command: Command,
    a: &DriveSweepArgs,
    options: Options,
) -> Result<RunManifest, CliError> {
    let mut params = params_map(
        &[
            ("delta_c", Some(a.delta_c)),
            ("chi", Some(a.chi)),
            ("gamma", a.gamma),
        ],
        a.unit,
    )?;
    // the grid supplies the drive
    params.remove("omega");
    let s = anchor_scale(&params, a.unit);
    let grid = Grid::Range {
        start: a.omega_from,
        stop: a.omega_to,
        step: a.omega_step,
    };
    let values: Vec<f64> = grid.points()?.into_iter().map(|x| x * s).collect();
    Ok(RunManifest {
        command,
        params: Some(params),
        grid: Some(Grid::Values { values }),
        output_path: a.out.output.clone(),
        format: a.out.format(),
        options,
    })
}

fn build_manifest(sub: Sub) -> Result<RunManifest, CliError> {
    Ok(match sub {
        Sub::MeanfieldSweep(a) => drive_manifest(Command::MeanfieldSweep, &a, Options::default())?,
        Sub::ExactSweep { sweep, l, k } => drive_manifest(
            Command::ExactSweep,
            &sweep,
            Options {
                l,
                k,
                ..Options::default()
            },
        )?,
        Sub::ResonanceScan {
            omega,
            lambda2,
            lambda2_im,
            kappa,
            chi,
            gamma,
            delta_from,
            delta_to,
            delta_step,
            unit,
            out,
        } => {
            let mut params = params_map(
                &[
                    ("chi", chi),
                    ("gamma", gamma),
                    ("omega", Some(omega)),
                    ("lambda_re", Some(lambda2)),
                    ("lambda_im", Some(lambda2_im)),
                    ("kappa", Some(kappa)),
                    ("delta_c", Some(0.0)),
                ],
                unit,
            )?;
            // the scan axis supplies the detuning
            params.remove("delta_c");
            RunManifest {
                command: Command::ResonanceScan,
                params: Some(params),
                grid: Some(Grid::Range {
                    start: delta_from,
                    stop: delta_to,
                    step: delta_step,
                }),
                format: out.format(),
                output_path: out.output,
                options: Options::default(),
            }
        }
        Sub::Validate { manifest, tol, out } => {
            let text = std::fs::read_to_string(&manifest)
                .map_err(|e| UsageError(format!("{}: {e}", manifest.display())))?;
            let points: Vec<Map<String, Value>> = serde_json::from_str(&text).map_err(|e| {
                UsageError(format!(
                    "{}: expected a JSON list of objects: {e}",
                    manifest.display()
                ))
            })?;
            RunManifest {
                command: Command::Validate,
                params: None,
                grid: None,
                format: out.format(),
                output_path: out.output,
                options: Options {
                    tol: Some(tol),
                    points: Some(points),
                    ..Options::default()
                },
            }
        }
        Sub::Residual {
            delta_c,
            chi,
            omega,
            gamma,
            lambda2,
            lambda2_im,
            kappa,
            unit,
            cutoff_cl,
            cutoff_q,
            interior,
            output,
        } => RunManifest {
            command: Command::Residual,
            params: Some(params_map(
                &[
                    ("delta_c", Some(delta_c)),
                    ("chi", Some(chi)),
                    ("omega", Some(omega)),
                    ("gamma", gamma),
                    ("lambda_re", Some(lambda2)),
                    ("lambda_im", Some(lambda2_im)),
                    ("kappa", Some(kappa)),
                ],
                unit,
            )?),
            grid: None,
            output_path: output.unwrap_or_default(),
            format: Format::Json,
            options: Options {
                cutoff_cl: Some(cutoff_cl),
                cutoff_q: Some(cutoff_q),
                interior: Some(interior),
                ..Options::default()
            },
        },
        Sub::Run {
            manifest,
            output,
            format,
        } => {
            let text = std::fs::read_to_string(&manifest)
                .map_err(|e| UsageError(format!("{}: {e}", manifest.display())))?;
            let mut m = RunManifest::from_json_str(&text)?;
            if let Some(o) = output {
                m.format = format.unwrap_or_else(|| Format::from_path(&o));
                m.output_path = o;
            } else if let Some(f) = format {
                m.format = f;
            }
            m
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match build_manifest(cli.command).and_then(|m| go(&m, exec)) {
        Ok(code) => code,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn go(manifest: &RunManifest, exec: Execution) -> Result<ExitCode, CliError> {
    let artifact = run::execute(manifest, exec)?;
    if let Some(s) = &artifact.stdout {
        println!("{s}");
    }
    if !manifest.output_path.as_os_str().is_empty() {
        std::fs::write(&manifest.output_path, &artifact.text)
            .map_err(|e| CliError::Compute(format!("{}: {e}", manifest.output_path.display())))?;
        log::info!("wrote {}", manifest.output_path.display());
    }
    if artifact.failures > 0 {
        eprintln!("{} comparison(s) exceeded the tolerance", artifact.failures);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
