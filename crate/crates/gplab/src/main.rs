//! Command-line driver for the laboratory: profile export, simulation
//! runs, modulation tracking, spectral reports, monotonicity and virial
//! diagnostics, amplitude sweeps, and the verification battery.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gplab::diagnostics::{self, Weight};
use gplab::error::{Error, Result};
use gplab::grid::Grid;
use gplab::lab::{self, RunConfig, VerificationLevel};
use gplab::linops;
use gplab::soliton::Soliton;

#[derive(Parser)]
#[command(
    name = "gplab",
    about = "Stability laboratory for dark solitons of the one-dimensional defocusing nonlinear Schrodinger equation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridArgs {
    /// Domain half-length L (the grid covers [-L, L)).
    #[arg(long, default_value_t = 60.0)]
    half_length: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 1024)]
    points: usize,
}

impl GridArgs {
    fn build(&self) -> Result<Grid> {
        Grid::new(self.half_length, self.points)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a travelling-wave profile and print its closed-form
    /// invariants and sampled residuals.
    Soliton {
        /// Soliton speed c (0 < |c| < sqrt(2)).
        #[arg(long)]
        speed: f64,
        /// Soliton center a.
        #[arg(long, default_value_t = 0.0)]
        center: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Directory for soliton.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configured simulation with tracked diagnostics.
    Simulate {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured perturbation seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a configured simulation and report the modulation track.
    Modulate {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Directory for track.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured perturbation seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Eigenvalue report for the second variation at a given speed.
    Spectrum {
        #[arg(long)]
        speed: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Directory for spectrum.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also report the reduced (single-field) operator.
        #[arg(long)]
        reduced: bool,
    },
    /// Constrained coercivity constant at a given speed.
    Coercivity {
        #[arg(long)]
        speed: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Directory for coercivity.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configured simulation and check localized-momentum
    /// monotonicity along it.
    Monotonicity {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Directory for the run outputs (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured perturbation seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Space-time virial identity check for free and forced evolutions.
    Virial {
        #[arg(long, default_value_t = 30.0)]
        half_length: f64,
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Time horizon of the identity window.
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Integrator step.
        #[arg(long, default_value_t = 2e-3)]
        dt: f64,
        /// Weight rate.
        #[arg(long, default_value_t = 0.3)]
        nu: f64,
        /// Directory for virial.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amplitude-scaling sweep around a configured run.
    Sweep {
        /// JSON run configuration (the sweep varies its amplitude).
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated perturbation amplitudes (at least three).
        #[arg(long, value_delimiter = ',', default_values_t = [0.04, 0.02, 0.01])]
        amplitudes: Vec<f64>,
        /// Directory for sweep.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance battery and print one verdict per criterion.
    Verify {
        /// Battery scale.
        #[arg(long, default_value = "fast")]
        level: String,
        /// Directory for verification.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_json<T: serde::Serialize>(dir: &PathBuf, name: &str, value: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn load_config(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_json_file(path)?;
    if out.is_some() {
        cfg.outdir = out;
    }
    if let Some(seed) = seed {
        cfg.perturbation.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Soliton {
            speed,
            center,
            grid,
            out,
        } => {
            let g = grid.build()?;
            let s = Soliton::new(speed, center)?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                let hash = lab::config_hash(&serde_json::json!({
                    "speed": speed,
                    "center": center,
                    "half_length": g.half_length(),
                    "points": g.len(),
                }))?;
                lab::write_soliton_csv(&dir.join("soliton.csv"), &hash, &g, &s)?;
            }
            print_json(&serde_json::json!({
                "speed": speed,
                "center": center,
                "invariants": s.invariants(),
                "residuals": s.profile_residual(&g)?,
            }))
        }
        Command::Simulate { config, out, seed } => {
            let cfg = load_config(&config, out, seed)?;
            let summary = lab::run_simulation(&cfg)?;
            print_json(&summary)
        }
        Command::Modulate { config, out, seed } => {
            let cfg = load_config(&config, out, seed)?;
            let artifacts = lab::run_experiment(&cfg)?;
            let track = artifacts.track.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "run produced no modulation track ({})",
                    artifacts.summary.exit
                ))
            })?;
            if let Some(dir) = &artifacts.config.outdir {
                fs::create_dir_all(dir)?;
                lab::write_track_csv(&dir.join("track.csv"), &artifacts.config_hash, track)?;
            }
            print_json(&serde_json::json!({
                "config_hash": artifacts.config_hash,
                "exit": artifacts.summary.exit,
                "sup_eps_norm_x": artifacts.summary.sup_eps_norm_x,
                "sup_c_prime": artifacts.summary.sup_c_prime,
                "sup_a_prime_minus_c": artifacts.summary.sup_a_prime_minus_c,
                "c_final": artifacts.summary.c_final,
            }))
        }
        Command::Spectrum {
            speed,
            grid,
            out,
            reduced,
        } => {
            let g = grid.build()?;
            let s = Soliton::new(speed, 0.0)?;
            let report = linops::spectrum(&g, &s)?;
            let reduced_report = if reduced {
                Some(linops::reduced_spectrum(&g, &s)?)
            } else {
                None
            };
            let value = serde_json::json!({
                "second_variation": report,
                "reduced": reduced_report,
            });
            if let Some(dir) = out {
                write_json(&dir, "spectrum.json", &value)?;
            }
            print_json(&value)
        }
        Command::Coercivity { speed, grid, out } => {
            let g = grid.build()?;
            let s = Soliton::new(speed, 0.0)?;
            let report = linops::coercivity(&g, &s)?;
            if let Some(dir) = out {
                write_json(&dir, "coercivity.json", &report)?;
            }
            print_json(&report)
        }
        Command::Monotonicity { config, out, seed } => {
            let cfg = load_config(&config, out, seed)?;
            let artifacts = lab::run_experiment(&cfg)?;
            let report = artifacts.monotonicity.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "run produced no monotonicity report ({})",
                    artifacts.summary.exit
                ))
            })?;
            if let Some(dir) = &artifacts.config.outdir {
                fs::create_dir_all(dir)?;
                write_json(dir, "monotonicity.json", report)?;
            }
            print_json(report)
        }
        Command::Virial {
            half_length,
            points,
            horizon,
            dt,
            nu,
            out,
        } => {
            let g = Grid::new(half_length, points)?;
            let w = Weight { nu };
            let u0: Vec<rustfft::num_complex::Complex<f64>> = g
                .nodes()
                .iter()
                .map(|&x| {
                    rustfft::num_complex::Complex::new(
                        (-0.5 * (x - 2.0) * (x - 2.0)).exp(),
                        0.3 * (-0.25 * (x + 1.0) * (x + 1.0)).exp(),
                    )
                })
                .collect();
            let n = g.len();
            let free = diagnostics::virial_identity_check(
                &g,
                &u0,
                |_| vec![rustfft::num_complex::Complex::new(0.0, 0.0); n],
                horizon,
                dt,
                &w,
                diagnostics::sine_window(0.0, horizon),
            )?;
            let nodes = g.nodes().to_vec();
            let forced = diagnostics::virial_identity_check(
                &g,
                &u0,
                move |t: f64| {
                    nodes
                        .iter()
                        .map(|&x| {
                            rustfft::num_complex::Complex::new(
                                0.4 * (-0.5 * x * x).exp() * t.cos(),
                                -0.2 * (-0.5 * x * x).exp() * t.sin(),
                            )
                        })
                        .collect()
                },
                horizon,
                dt,
                &w,
                diagnostics::sine_window(0.0, horizon),
            )?;
            let value = serde_json::json!({ "free": free, "forced": forced });
            if let Some(dir) = out {
                write_json(&dir, "virial.json", &value)?;
            }
            print_json(&value)
        }
        Command::Sweep {
            config,
            amplitudes,
            out,
        } => {
            let cfg = load_config(&config, None, None)?;
            let report = lab::run_scaling_sweep(&cfg, &amplitudes)?;
            if let Some(dir) = out {
                write_json(&dir, "sweep.json", &report)?;
            }
            print_json(&report)
        }
        Command::Verify { level, out } => {
            let level: VerificationLevel = level.parse()?;
            let report = lab::run_verification_suite(level);
            for v in &report.verdicts {
                println!(
                    "criterion {:>2} {:<24} {}: {}",
                    v.id,
                    v.name,
                    if v.passed { "PASS" } else { "FAIL" },
                    v.details
                );
            }
            println!(
                "verification {} in {:.1}s: {}",
                report.level,
                report.elapsed_seconds,
                if report.all_passed { "ALL PASSED" } else { "FAILURES PRESENT" }
            );
            if let Some(dir) = out {
                write_json(&dir, "verification.json", &report)?;
            }
            if report.all_passed {
                Ok(())
            } else {
                Err(Error::Config("verification reported failures".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
