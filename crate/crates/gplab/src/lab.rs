//! Reproducible experiment drivers: configuration ingestion with recorded
//! defaults, perturbation generators, simulation runs with tracked
//! diagnostics, amplitude-scaling sweeps, the verification battery, and
//! byte-stable CSV/JSON serialization.
//!
//! Determinism contract: a fixed configuration (including the seed)
//! reproduces every output file byte for byte — all reductions run in
//! fixed order, random draws come from a seeded stream cipher, and floats
//! are printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, MonotonicityConfig, MonotonicityReport, Weight};
use crate::error::{Error, Result};
use crate::grid::{Grid, PairField};
use crate::hydro::{self, HydroState, IntegrateOptions, Trajectory};
use crate::linops;
use crate::modulation::{self, ModulationOptions, ModulationTrack};
use crate::soliton::{validate_speed, Soliton};

/// Half-width of the moving window for the settling norm
/// `‖ε‖_{X(|x-a| ≤ 20)}`.
pub const SETTLE_WINDOW_HALFWIDTH: f64 = 20.0;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_length: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_length: 60.0,
            points: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Gaussian bump added to the density dip.
    GaussianEta,
    /// Gaussian bump added to the phase gradient.
    GaussianV,
    /// A second travelling-wave profile added componentwise, scaled by
    /// `amplitude` (set it to 1 for a genuine two-soliton composition).
    SecondSoliton,
    /// Seeded band-limited noise under a Gaussian envelope, added to both
    /// fields, each component rescaled to peak `amplitude`.
    RandomLocalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub kind: PerturbationKind,
    /// Perturbation scale α₀: bump height, noise peak, or the multiplier
    /// on the secondary profile. Zero disables the perturbation.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Width of the bump / noise envelope.
    #[serde(default = "default_width")]
    pub width: f64,
    /// Perturbation center relative to the soliton center; `null` selects
    /// the kind default (0 for local perturbations, -25 for the second
    /// soliton).
    #[serde(default)]
    pub offset: Option<f64>,
    /// Seed for `random_localized`; recorded for every kind.
    #[serde(default)]
    pub seed: u64,
    /// Speed of the secondary profile; `null` selects 1.35.
    #[serde(default)]
    pub speed2: Option<f64>,
}

fn default_amplitude() -> f64 {
    0.02
}
fn default_width() -> f64 {
    3.0
}
fn default_horizon() -> f64 {
    40.0
}
fn default_cadence() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base soliton speed c₀.
    pub speed: f64,
    /// Base soliton center a₀.
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub grid: GridConfig,
    /// Time horizon; must be an integer multiple of `cadence`.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Integrator step override; `null` selects the CFL step rounded down
    /// to an exact divisor of `cadence` so the retained samples stay
    /// uniformly spaced.
    #[serde(default)]
    pub dt: Option<f64>,
    pub perturbation: PerturbationConfig,
    /// Output sample cadence.
    #[serde(default = "default_cadence")]
    pub cadence: f64,
    /// Output directory; `null` keeps the run in memory. Excluded from
    /// the configuration hash, which covers physics content only.
    #[serde(default)]
    pub outdir: Option<PathBuf>,
    /// Write every retained sample to trajectory.csv instead of only the
    /// first and last (the full history is large).
    #[serde(default)]
    pub full_trajectory: bool,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    /// Expands kind-dependent defaults and validates every range. Every
    /// run records this resolved form (not the raw input) next to its
    /// outputs.
    pub fn resolved(&self) -> Result<Self> {
        let mut cfg = self.clone();
        validate_speed(cfg.speed)?;
        if !cfg.center.is_finite() {
            return Err(Error::Config(format!(
                "center must be finite, got {}",
                cfg.center
            )));
        }
        if !(cfg.horizon.is_finite() && cfg.horizon > 0.0) {
            return Err(Error::Config(format!(
                "horizon must be finite and > 0, got {}",
                cfg.horizon
            )));
        }
        if !(cfg.cadence.is_finite() && cfg.cadence > 0.0) {
            return Err(Error::Config(format!(
                "cadence must be finite and > 0, got {}",
                cfg.cadence
            )));
        }
        let ratio = cfg.horizon / cfg.cadence;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "horizon {} is not an integer multiple of cadence {}",
                cfg.horizon, cfg.cadence
            )));
        }
        if let Some(dt) = cfg.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::BadTimeStep(dt));
            }
            let per = cfg.cadence / dt;
            if (per - per.round()).abs() > 1e-9 * per.max(1.0) {
                return Err(Error::Config(format!(
                    "dt {dt} does not divide the cadence {}",
                    cfg.cadence
                )));
            }
        }
        let p = &mut cfg.perturbation;
        if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
            return Err(Error::Config(format!(
                "perturbation amplitude must be finite and >= 0, got {}",
                p.amplitude
            )));
        }
        if !(p.width.is_finite() && p.width > 0.0) {
            return Err(Error::Config(format!(
                "perturbation width must be finite and > 0, got {}",
                p.width
            )));
        }
        let default_offset = match p.kind {
            PerturbationKind::SecondSoliton => -25.0,
            _ => 0.0,
        };
        let offset = p.offset.unwrap_or(default_offset);
        if !offset.is_finite() {
            return Err(Error::Config(format!(
                "perturbation offset must be finite, got {offset}"
            )));
        }
        p.offset = Some(offset);
        let speed2 = p.speed2.unwrap_or(1.35);
        if p.kind == PerturbationKind::SecondSoliton {
            validate_speed(speed2)?;
        }
        p.speed2 = Some(speed2);
        Ok(cfg)
    }
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hash of a serializable configuration, as 16 lowercase hex digits;
/// embedded in every output file the configuration produces.
pub fn config_hash<T: Serialize>(cfg: &T) -> Result<String> {
    let text = serde_json::to_string(cfg)?;
    Ok(format!("{:016x}", fnv1a64(text.as_bytes())))
}

/// Hash of a run configuration's physics content: the output directory
/// is excluded, so the same experiment written to two locations carries
/// the same hash and produces byte-identical CSV files.
pub fn run_config_hash(cfg: &RunConfig) -> Result<String> {
    let mut physics = cfg.clone();
    physics.outdir = None;
    config_hash(&physics)
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

fn gaussian_bump(g: &Grid, center: f64, width: f64, amplitude: f64) -> Vec<f64> {
    g.nodes()
        .iter()
        .map(|&x| {
            let d = g.wrap_displacement(x, center);
            amplitude * (-d * d / (2.0 * width * width)).exp()
        })
        .collect()
}

fn localized_noise(
    g: &Grid,
    rng: &mut ChaCha8Rng,
    center: f64,
    width: f64,
    amplitude: f64,
) -> Vec<f64> {
    let raw: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // Zero the top spectral third and roll the rest off smoothly: noise
    // that stays flat up to the cutoff leaves O(alpha) content at the band
    // edge, whose quadratic products alias back in and destabilize the
    // solver within a unit of time at moderate resolutions.
    let mut spec: Vec<rustfft::num_complex::Complex<f64>> = raw
        .iter()
        .map(|&v| rustfft::num_complex::Complex::new(v, 0.0))
        .collect();
    g.fft_complex(&mut spec);
    let k_band = g.band_limit() as f64 * g.k_fundamental();
    for (c, &k) in spec.iter_mut().zip(g.wavenumbers()) {
        if k.abs() > k_band {
            *c = rustfft::num_complex::Complex::new(0.0, 0.0);
        } else {
            *c *= (-18.0 * (k / k_band) * (k / k_band)).exp();
        }
    }
    g.ifft_complex(&mut spec);
    let mut field: Vec<f64> = g
        .nodes()
        .iter()
        .zip(&spec)
        .map(|(&x, s)| {
            let d = g.wrap_displacement(x, center);
            s.re * (-d * d / (2.0 * width * width)).exp()
        })
        .collect();
    let peak = field.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = amplitude / peak;
        for v in field.iter_mut() {
            *v *= scale;
        }
    }
    field
}

/// Base soliton plus the configured perturbation, with the admissibility
/// guard `max η < 1` enforced after composition. Expects a resolved
/// configuration.
pub fn build_initial_state(g: &Grid, cfg: &RunConfig) -> Result<HydroState> {
    let base = Soliton::new(cfg.speed, cfg.center)?;
    let prof = base.eval_hydro(g);
    let mut eta = prof.eta;
    let mut v = prof.v;
    let p = &cfg.perturbation;
    let center = cfg.center + p.offset.unwrap_or(0.0);
    if p.amplitude > 0.0 {
        match p.kind {
            PerturbationKind::GaussianEta => {
                for (e, b) in eta.iter_mut().zip(gaussian_bump(g, center, p.width, p.amplitude)) {
                    *e += b;
                }
            }
            PerturbationKind::GaussianV => {
                for (w, b) in v.iter_mut().zip(gaussian_bump(g, center, p.width, p.amplitude)) {
                    *w += b;
                }
            }
            PerturbationKind::SecondSoliton => {
                let second = Soliton::new(p.speed2.unwrap_or(1.35), center)?;
                let prof2 = second.eval_hydro(g);
                for j in 0..g.len() {
                    eta[j] += p.amplitude * prof2.eta[j];
                    v[j] += p.amplitude * prof2.v[j];
                }
            }
            PerturbationKind::RandomLocalized => {
                let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
                let noise_eta = localized_noise(g, &mut rng, center, p.width, p.amplitude);
                let noise_v = localized_noise(g, &mut rng, center, p.width, p.amplitude);
                for j in 0..g.len() {
                    eta[j] += noise_eta[j];
                    v[j] += noise_v[j];
                }
            }
        }
    }
    let max_eta = eta.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e));
    if max_eta >= 1.0 {
        return Err(Error::DensityFloor {
            t: 0.0,
            min: 1.0 - max_eta,
            floor: 0.0,
        });
    }
    HydroState::new(eta, v, 0.0)
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct WindowedTrend {
    /// Max of `‖ε‖_{X(|x-a| ≤ 20)}` over `t ≥ horizon/4`.
    pub post_transient_max: f64,
    /// The same norm at the final sample.
    pub final_norm: f64,
    /// `final_norm / post_transient_max` (0 when the max vanishes).
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// Fully resolved configuration (defaults expanded).
    pub config: RunConfig,
    pub config_hash: String,
    /// "completed", or a description of the abort / analysis failure.
    pub exit: String,
    /// Max relative energy drift over the retained samples.
    pub energy_drift: f64,
    /// Max relative momentum drift over the retained samples.
    pub momentum_drift: f64,
    pub sup_eps_norm_x: f64,
    pub sup_c_prime: f64,
    pub sup_a_prime_minus_c: f64,
    pub c_final: f64,
    /// Mean of c(t) over the last quarter of the run.
    pub c_last_quarter_mean: f64,
    /// Standard deviation of c(t) over the last quarter.
    pub c_last_quarter_std: f64,
    /// Mean of a'(t) over the last quarter.
    pub a_prime_last_quarter_mean: f64,
    /// Two-time almost-monotonicity violations.
    pub monotonicity_violations: usize,
    /// Differential almost-monotonicity violations.
    pub differential_violations: usize,
    pub windowed_trend: WindowedTrend,
}

/// Everything a run produces, kept in memory.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: RunConfig,
    pub config_hash: String,
    pub trajectory: Trajectory,
    pub track: Option<ModulationTrack>,
    pub monotonicity: Option<MonotonicityReport>,
    pub summary: RunSummary,
}

fn nan_summary(config: RunConfig, hash: String, exit: String) -> RunSummary {
    RunSummary {
        config,
        config_hash: hash,
        exit,
        energy_drift: f64::NAN,
        momentum_drift: f64::NAN,
        sup_eps_norm_x: f64::NAN,
        sup_c_prime: f64::NAN,
        sup_a_prime_minus_c: f64::NAN,
        c_final: f64::NAN,
        c_last_quarter_mean: f64::NAN,
        c_last_quarter_std: f64::NAN,
        a_prime_last_quarter_mean: f64::NAN,
        monotonicity_violations: 0,
        differential_violations: 0,
        windowed_trend: WindowedTrend {
            post_transient_max: f64::NAN,
            final_norm: f64::NAN,
            ratio: f64::NAN,
        },
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Integrates the configured run and computes every in-memory analysis:
/// modulation track, almost-monotonicity report, and the summary. Aborts
/// and analysis failures are recorded in `summary.exit` rather than
/// returned as errors; only configuration, initial-data, and setup
/// problems error out.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunArtifacts> {
    let cfg = cfg.resolved()?;
    let hash = run_config_hash(&cfg)?;
    let g = Grid::new(cfg.grid.half_length, cfg.grid.points)?;
    let s0 = build_initial_state(&g, &cfg)?;
    let dt = match cfg.dt {
        Some(dt) => dt,
        None => {
            // Round the CFL step down to an exact divisor of the cadence so
            // the retained samples are uniformly spaced.
            let cfl = hydro::cfl_dt(&g, 0.5);
            let per = (cfg.cadence / cfl).ceil().max(1.0);
            cfg.cadence / per
        }
    };
    let opts = IntegrateOptions {
        dt: Some(dt),
        sample_dt: cfg.cadence,
        ..Default::default()
    };
    let trajectory = hydro::integrate(&g, &s0, cfg.horizon, &opts)?;

    let mut exit = match &trajectory.abort {
        Some(rec) => format!("aborted at t={:.6}: {}", rec.t, rec.reason),
        None => "completed".to_string(),
    };

    let track = match modulation::track(&g, &trajectory, &ModulationOptions::default()) {
        Ok(track) => Some(track),
        Err(e) => {
            exit = format!("{exit}; modulation track failed: {e}");
            None
        }
    };

    let monotonicity = match &track {
        Some(track) => {
            let mcfg = MonotonicityConfig::for_speed(cfg.speed)?;
            match diagnostics::monotonicity_check(&g, &trajectory, track, &mcfg) {
                Ok(report) => Some(report),
                Err(e) => {
                    exit = format!("{exit}; monotonicity check failed: {e}");
                    None
                }
            }
        }
        None => None,
    };

    let mut summary = nan_summary(cfg.clone(), hash.clone(), exit);
    let (e_drift, p_drift) = trajectory.drifts();
    summary.energy_drift = e_drift;
    summary.momentum_drift = p_drift;
    if let Some(track) = &track {
        summary.sup_eps_norm_x = track.sup_eps_norm();
        summary.sup_c_prime = track.sup_c_prime();
        summary.sup_a_prime_minus_c = track.sup_a_prime_minus_c();
        let t_final = track.points.last().map_or(0.0, |p| p.t);
        let last_quarter: Vec<usize> = (0..track.points.len())
            .filter(|&i| track.points[i].t >= 0.75 * t_final)
            .collect();
        let cs: Vec<f64> = last_quarter.iter().map(|&i| track.points[i].c).collect();
        let aps: Vec<f64> = last_quarter.iter().map(|&i| track.a_prime[i]).collect();
        let (c_mean, c_std) = mean_std(&cs);
        let (ap_mean, _) = mean_std(&aps);
        summary.c_final = track.points.last().map_or(f64::NAN, |p| p.c);
        summary.c_last_quarter_mean = c_mean;
        summary.c_last_quarter_std = c_std;
        summary.a_prime_last_quarter_mean = ap_mean;

        let windowed: Vec<f64> = track
            .points
            .iter()
            .map(|p| g.norm_x_window(&p.eps, 0.0, SETTLE_WINDOW_HALFWIDTH))
            .collect();
        let post: Vec<f64> = track
            .points
            .iter()
            .zip(&windowed)
            .filter(|(p, _)| p.t >= 0.25 * t_final)
            .map(|(_, &w)| w)
            .collect();
        let post_max = post.iter().fold(0.0_f64, |m, &v| m.max(v));
        let final_norm = *windowed.last().unwrap_or(&f64::NAN);
        summary.windowed_trend = WindowedTrend {
            post_transient_max: post_max,
            final_norm,
            ratio: if post_max > 0.0 { final_norm / post_max } else { 0.0 },
        };
    }
    if let Some(report) = &monotonicity {
        summary.monotonicity_violations = report.violations.len();
        summary.differential_violations = report.differential_violations.len();
    }

    Ok(RunArtifacts {
        config: cfg,
        config_hash: hash,
        trajectory,
        track,
        monotonicity,
        summary,
    })
}

/// Runs the experiment and writes its artifact files (trajectory, track,
/// localized momentum, monotonicity report, summary) to the configured
/// output directory. Partial results are still written when the run
/// aborts or an analysis stage fails; the summary's `exit` field records
/// what happened.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunSummary> {
    let artifacts = run_experiment(cfg)?;
    if let Some(outdir) = artifacts.config.outdir.clone() {
        write_run_outputs(&outdir, &artifacts)?;
    }
    Ok(artifacts.summary)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn format_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

/// Writes a CSV file with the config-hash comment line, a header, and
/// rows printed with 17 significant digits.
pub fn write_csv<I>(path: &Path, hash: &str, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash: {hash}");
    let _ = writeln!(out, "{header}");
    for row in rows {
        format_row(&mut out, row.as_ref());
    }
    fs::write(path, out)?;
    Ok(())
}

/// trajectory.csv: columns `t,x,eta,v`, one row per node per retained
/// sample (first and last sample only unless the run asks for the full
/// history).
pub fn write_trajectory_csv(
    path: &Path,
    hash: &str,
    g: &Grid,
    traj: &Trajectory,
    full: bool,
) -> Result<()> {
    let picks: Vec<usize> = if full || traj.states.len() <= 2 {
        (0..traj.states.len()).collect()
    } else {
        vec![0, traj.states.len() - 1]
    };
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash: {hash}");
    let _ = writeln!(out, "t,x,eta,v");
    for &i in &picks {
        let s = &traj.states[i];
        for (j, &x) in g.nodes().iter().enumerate() {
            format_row(&mut out, &[s.t, x, s.eta[j], s.v[j]]);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// track.csv: columns `t,a,c,a_prime,c_prime,eps_norm_X,r1,r2`.
pub fn write_track_csv(path: &Path, hash: &str, track: &ModulationTrack) -> Result<()> {
    let rows = track.points.iter().enumerate().map(|(i, p)| {
        [
            p.t,
            p.a,
            p.c,
            track.a_prime[i],
            track.c_prime[i],
            p.eps_norm_x,
            p.residual.0,
            p.residual.1,
        ]
    });
    write_csv(path, hash, "t,a,c,a_prime,c_prime,eps_norm_X,r1,r2", rows)
}

/// momentum.csv: columns `t,R,I_R`, offsets in the given order within
/// each sample time.
pub fn write_momentum_csv(
    path: &Path,
    hash: &str,
    g: &Grid,
    traj: &Trajectory,
    track: &ModulationTrack,
    offsets: &[f64],
    nu: f64,
) -> Result<()> {
    let mut rows = Vec::with_capacity(traj.states.len() * offsets.len());
    for (s, p) in traj.states.iter().zip(&track.points) {
        for &r in offsets {
            rows.push([s.t, r, diagnostics::localized_momentum(g, s, p.a, r, nu)?]);
        }
    }
    write_csv(path, hash, "t,R,I_R", rows)
}

/// soliton.csv: columns `x,eta,v,d_eta,mu` for a sampled profile.
pub fn write_soliton_csv(path: &Path, hash: &str, g: &Grid, s: &Soliton) -> Result<()> {
    let prof = s.eval_hydro(g);
    let rows = (0..g.len()).map(|j| {
        [
            g.nodes()[j],
            prof.eta[j],
            prof.v[j],
            prof.d_eta[j],
            prof.mu[j],
        ]
    });
    write_csv(path, hash, "x,eta,v,d_eta,mu", rows)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes a run's artifact files (trajectory, track, localized momentum,
/// monotonicity report, summary) into a directory, creating it if needed.
pub fn write_run_outputs(outdir: &Path, artifacts: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(outdir)?;
    let g = Grid::new(
        artifacts.config.grid.half_length,
        artifacts.config.grid.points,
    )?;
    let hash = &artifacts.config_hash;
    write_trajectory_csv(
        &outdir.join("trajectory.csv"),
        hash,
        &g,
        &artifacts.trajectory,
        artifacts.config.full_trajectory,
    )?;
    if let Some(track) = &artifacts.track {
        write_track_csv(&outdir.join("track.csv"), hash, track)?;
        let mcfg = MonotonicityConfig::for_speed(artifacts.config.speed)?;
        write_momentum_csv(
            &outdir.join("momentum.csv"),
            hash,
            &g,
            &artifacts.trajectory,
            track,
            &mcfg.r_list,
            mcfg.nu,
        )?;
    }
    if let Some(report) = &artifacts.monotonicity {
        write_json(&outdir.join("monotonicity.json"), report)?;
    }
    write_json(&outdir.join("summary.json"), &artifacts.summary)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Scaling sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub sup_eps_norm_x: f64,
    pub sup_c_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Log-log slope of `sup‖ε‖_X` against α₀ (linear response ≈ 1).
    pub eps_slope: f64,
    /// Log-log slope of `sup|c'|` against α₀ (quadratic response ≈ 2).
    pub c_prime_slope: f64,
    pub config_hash: String,
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Runs the base configuration at each amplitude (members run on their
/// own threads; each member is internally sequential) and fits log-log
/// slopes of the response against α₀.
pub fn run_scaling_sweep(base: &RunConfig, amplitudes: &[f64]) -> Result<SweepReport> {
    if amplitudes.len() < 3 {
        return Err(Error::Config(format!(
            "scaling sweep needs at least 3 amplitudes, got {}",
            amplitudes.len()
        )));
    }
    for &a in amplitudes {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Config(format!(
                "amplitude {a} rejected: every sweep member needs α₀ > 0 (a zero member is a degenerate fit point)"
            )));
        }
    }
    let base = base.resolved()?;
    let members: Vec<RunConfig> = amplitudes
        .iter()
        .map(|&a| {
            let mut cfg = base.clone();
            cfg.perturbation.amplitude = a;
            cfg.outdir = None;
            cfg
        })
        .collect();

    let results: Vec<Result<RunArtifacts>> = std::thread::scope(|scope| {
        let handles: Vec<_> = members
            .iter()
            .map(|cfg| scope.spawn(move || run_experiment(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Config("sweep member panicked".into())))
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(amplitudes.len());
    for (&a, result) in amplitudes.iter().zip(results) {
        let artifacts =
            result.map_err(|e| Error::Config(format!("sweep member amplitude {a}: {e}")))?;
        if artifacts.summary.exit != "completed" {
            return Err(Error::Config(format!(
                "sweep member amplitude {a}: {}",
                artifacts.summary.exit
            )));
        }
        rows.push(SweepRow {
            amplitude: a,
            sup_eps_norm_x: artifacts.summary.sup_eps_norm_x,
            sup_c_prime: artifacts.summary.sup_c_prime,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.amplitude.ln()).collect();
    let le: Vec<f64> = rows.iter().map(|r| r.sup_eps_norm_x.ln()).collect();
    let lc: Vec<f64> = rows.iter().map(|r| r.sup_c_prime.ln()).collect();
    Ok(SweepReport {
        rows,
        eps_slope: least_squares_slope(&lx, &le),
        c_prime_slope: least_squares_slope(&lx, &lc),
        config_hash: run_config_hash(&base)?,
    })
}

// ---------------------------------------------------------------------------
// Verification battery
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationLevel {
    /// Smoke scale: reduced grids and horizons, thresholds adjusted where
    /// the criterion quantity needs the full horizon; completes in well
    /// under two minutes.
    Fast,
    /// Criterion scale: the grids, horizons, and thresholds of the
    /// acceptance battery.
    Full,
}

impl std::str::FromStr for VerificationLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "full" => Ok(Self::Full),
            other => Err(Error::Config(format!(
                "unknown verification level {other:?} (expected \"fast\" or \"full\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionVerdict {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub level: String,
    pub all_passed: bool,
    pub elapsed_seconds: f64,
    pub verdicts: Vec<CriterionVerdict>,
}

struct Scale {
    canonical_half_length: f64,
    canonical_points: usize,
    canonical_horizon: f64,
    transport_points: usize,
    transport_horizon: f64,
    dual_horizon: f64,
    sweep_points: usize,
    sweep_horizon: f64,
    include_slow_speed: bool,
    settle_std_tol: f64,
    settle_ratio_tol: f64,
    trend_tol: f64,
}

impl Scale {
    fn for_level(level: VerificationLevel) -> Self {
        match level {
            VerificationLevel::Fast => Self {
                canonical_half_length: 60.0,
                canonical_points: 512,
                canonical_horizon: 10.0,
                transport_points: 512,
                transport_horizon: 2.0,
                dual_horizon: 1.0,
                sweep_points: 512,
                sweep_horizon: 5.0,
                include_slow_speed: false,
                settle_std_tol: 5e-3,
                settle_ratio_tol: 1.0,
                trend_tol: 5e-3,
            },
            // The canonical run needs room and time at full scale: around a
            // unit-speed soliton the radiated sound separates at only
            // sqrt(2) - c(t) ~ 0.43, so clearing the half-width-20
            // settling window takes ~46 time units, and the slow end of
            // the radiation needs tens more to disperse below half of the
            // post-transient peak; by then the fast radiation has
            // travelled ~113, so a half-length of 120 keeps it from
            // wrapping into the window before the horizon.
            VerificationLevel::Full => Self {
                canonical_half_length: 120.0,
                canonical_points: 2048,
                canonical_horizon: 80.0,
                transport_points: 1024,
                transport_horizon: 10.0,
                dual_horizon: 5.0,
                sweep_points: 1024,
                sweep_horizon: 20.0,
                include_slow_speed: true,
                settle_std_tol: 5e-4,
                settle_ratio_tol: 0.5,
                trend_tol: 1e-3,
            },
        }
    }
}

struct Battery {
    scale: Scale,
    canonical: Option<RunArtifacts>,
}

fn pass_fail(passed: bool, details: String) -> (bool, String) {
    (passed, details)
}

impl Battery {
    fn canonical_config(&self) -> RunConfig {
        RunConfig {
            speed: 1.0,
            center: 0.0,
            grid: GridConfig {
                half_length: self.scale.canonical_half_length,
                points: self.scale.canonical_points,
            },
            horizon: self.scale.canonical_horizon,
            dt: None,
            perturbation: PerturbationConfig {
                kind: PerturbationKind::GaussianEta,
                amplitude: 0.02,
                width: 3.0,
                offset: None,
                seed: 0,
                speed2: None,
            },
            cadence: 0.1,
            outdir: None,
            full_trajectory: false,
        }
    }

    fn canonical(&mut self) -> Result<&RunArtifacts> {
        if self.canonical.is_none() {
            let artifacts = run_experiment(&self.canonical_config())?;
            if artifacts.summary.exit != "completed" {
                return Err(Error::Config(format!(
                    "canonical perturbed run did not complete: {}",
                    artifacts.summary.exit
                )));
            }
            self.canonical = Some(artifacts);
        }
        Ok(self.canonical.as_ref().unwrap())
    }

    // 1: closed-form anchors.
    fn closed_form_anchors(&mut self) -> Result<(bool, String)> {
        let g = Grid::new(60.0, 1024)?;
        let s = Soliton::new(1.0, 0.0)?;
        let state = HydroState::from_soliton(&g, &s);
        let energy = hydro::conserved(&g, &state)?.energy;
        let e_err = (energy - 1.0 / 3.0).abs();
        let pairing = linops::family_pairing(&g, &s);
        let p_err = (pairing + 2.0).abs();
        let edge_closed = linops::essential_edge(1.0);
        let edge_symbol = linops::essential_edge_from_symbol(1.0, 64.0, 400_000);
        let target = 1.0 / (3.0 + 5.0_f64.sqrt());
        let edge_err = (edge_symbol - target).abs().max((edge_closed - target).abs());
        let passed = e_err < 1e-10 && p_err < 1e-8 && edge_err < 1e-12;
        Ok(pass_fail(
            passed,
            format!(
                "|E-1/3|={e_err:.3e} (<1e-10); |pairing+2|={p_err:.3e} (<1e-8); |edge-1/(3+sqrt5)|={edge_err:.3e} (<1e-12)"
            ),
        ))
    }

    // 2: profile residuals.
    fn profile_residuals(&mut self) -> Result<(bool, String)> {
        let g = Grid::new(60.0, 1024)?;
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for &c in &[0.5, 1.0, 1.3] {
            let s = Soliton::new(c, 0.0)?;
            let r = s.profile_residual(&g)?;
            let m = r
                .ode
                .max(r.first_integral)
                .max(r.travelling_wave.0)
                .max(r.travelling_wave.1);
            worst = worst.max(m);
            parts.push(format!("c={c}: max={m:.3e} (resolved={})", r.resolved));
        }
        Ok(pass_fail(
            worst < 1e-8,
            format!("{} (<1e-8)", parts.join("; ")),
        ))
    }

    // 3: conservation drift on the perturbed run.
    fn conservation_drift(&mut self) -> Result<(bool, String)> {
        let horizon = self.scale.canonical_horizon;
        let s = &self.canonical()?.summary;
        let passed = s.energy_drift < 1e-8 && s.momentum_drift < 1e-8;
        Ok(pass_fail(
            passed,
            format!(
                "relative drifts over T={horizon}: energy {:.3e}, momentum {:.3e} (<1e-8)",
                s.energy_drift, s.momentum_drift
            ),
        ))
    }

    // 4: soliton transport, both solvers.
    fn soliton_transport(&mut self) -> Result<(bool, String)> {
        let c = 1.0;
        // Hydrodynamical transport against the translated closed form.
        let g = Grid::new(60.0, self.scale.transport_points)?;
        let s = Soliton::new(c, 0.0)?;
        let state = HydroState::from_soliton(&g, &s);
        let horizon = self.scale.transport_horizon;
        let traj = hydro::integrate(&g, &state, horizon, &IntegrateOptions::default())?;
        if traj.abort.is_some() {
            return Ok(pass_fail(false, "transport run aborted".into()));
        }
        let end = traj.final_state();
        let moved = HydroState::from_soliton(&g, &s.with_center(c * horizon));
        let diff = PairField::new(
            end.eta.iter().zip(&moved.eta).map(|(a, b)| a - b).collect(),
            end.v.iter().zip(&moved.v).map(|(a, b)| a - b).collect(),
        )?;
        let x_err = g.norm_x(&diff);

        // Dual-solver interior agreement on a shared initial state.
        let g2 = Grid::new(60.0, 512)?;
        let s2 = HydroState::from_soliton(&g2, &Soliton::new(c, 0.0)?);
        let dual_t = self.scale.dual_horizon;
        let htraj = hydro::integrate(&g2, &s2, dual_t, &IntegrateOptions::default())?;
        let emb = hydro::embed_counter_soliton(&g2, &s2, hydro::SIGMA_GUARD_DEFAULT)?;
        let wtraj = hydro::gp_integrate(
            &g2,
            &emb.wave,
            dual_t,
            &hydro::GpOptions {
                dt: 2e-3,
                sample_dt: dual_t,
            },
        )?;
        if htraj.abort.is_some() || wtraj.abort.is_some() {
            return Ok(pass_fail(false, "dual-solver run aborted".into()));
        }
        let back = hydro::wave_to_madelung(&g2, wtraj.final_state(), hydro::SIGMA_GUARD_DEFAULT)?;
        let hend = htraj.final_state();
        let dual_diff = PairField::new(
            hend.eta.iter().zip(&back.eta).map(|(a, b)| a - b).collect(),
            hend.v.iter().zip(&back.v).map(|(a, b)| a - b).collect(),
        )?;
        // Interior window around the travelled soliton, away from the
        // counter soliton at the seam.
        let interior = g2.norm_x_window(&dual_diff, c * dual_t, g2.half_length() / 2.0);
        let passed = x_err < 1e-6 && interior < 1e-5;
        Ok(pass_fail(
            passed,
            format!(
                "X-norm transport error at T={horizon}: {x_err:.3e} (<1e-6); dual-solver interior gap at T={dual_t}: {interior:.3e} (<1e-5)"
            ),
        ))
    }

    // 5: modulation recovery and scaling slopes.
    fn modulation_and_scaling(&mut self) -> Result<(bool, String)> {
        let g = Grid::new(60.0, 512)?;
        let opts = ModulationOptions::default();
        let mut worst_param: f64 = 0.0;
        let mut worst_res: f64 = 0.0;
        for &c0 in &[0.5, 0.7, 0.9, 1.1, 1.3] {
            for &a0 in &[-10.0, -5.0, 0.0, 5.0, 10.0] {
                let state = HydroState::from_soliton(&g, &Soliton::new(c0, a0)?);
                let point = modulation::solve_auto(&g, &state, &opts)?;
                worst_param = worst_param
                    .max((point.a - a0).abs())
                    .max((point.c - c0).abs());
                worst_res = worst_res
                    .max(point.residual.0.abs())
                    .max(point.residual.1.abs());
            }
        }

        let base = RunConfig {
            speed: 1.0,
            center: 0.0,
            grid: GridConfig {
                half_length: 60.0,
                points: self.scale.sweep_points,
            },
            horizon: self.scale.sweep_horizon,
            dt: None,
            perturbation: PerturbationConfig {
                kind: PerturbationKind::GaussianEta,
                amplitude: 0.02,
                width: 3.0,
                offset: None,
                seed: 0,
                speed2: None,
            },
            cadence: 0.1,
            outdir: None,
            full_trajectory: false,
        };
        let sweep = run_scaling_sweep(&base, &[0.04, 0.02, 0.01])?;
        let zero_rejected = run_scaling_sweep(&base, &[0.04, 0.02, 0.0]).is_err();
        let slopes_ok = (0.8..=1.2).contains(&sweep.eps_slope)
            && (1.7..=2.3).contains(&sweep.c_prime_slope);
        let passed = worst_param <= 1e-10 && worst_res <= 1e-12 && slopes_ok && zero_rejected;
        Ok(pass_fail(
            passed,
            format!(
                "5x5 recovery: max parameter error {worst_param:.3e} (<=1e-10), max residual {worst_res:.3e} (<=1e-12); slopes eps {:.3} (in [0.8,1.2]), c' {:.3} (in [1.7,2.3]); zero-amplitude member rejected: {zero_rejected}",
                sweep.eps_slope, sweep.c_prime_slope
            ),
        ))
    }

    // 6: spectrum and coercivity of the second variation.
    fn spectrum_and_coercivity(&mut self) -> Result<(bool, String)> {
        // Per speed: (spectrum grid, coercivity grid). The eigensolve's
        // kernel fidelity is floored by the coefficient sampling of the
        // flux-form compression, which decays like exp(-d k_band) in the
        // coefficients' complex pole distance d; slow solitons have small
        // d and need denser bands (c=0.3 at 1024 points measures a kernel
        // sine of 8e-3, at 2048 points 1e-5). The coercivity constant is
        // a minimum over a deflated subspace and is far less sensitive.
        let mut speeds: Vec<(f64, (f64, usize), (f64, usize))> = vec![
            (0.7, (45.0, 1024), (60.0, 512)),
            (1.0, (60.0, 512), (60.0, 512)),
            (1.3, (60.0, 512), (60.0, 512)),
        ];
        if self.scale.include_slow_speed {
            speeds.insert(0, (0.3, (45.0, 2048), (45.0, 1024)));
        }
        let mut parts = Vec::new();
        let mut passed = true;
        for &(c, (sl, sn), (cl, cn)) in &speeds {
            let g = Grid::new(sl, sn)?;
            let s = Soliton::new(c, 0.0)?;
            let spec = linops::spectrum(&g, &s)?;
            // Family derivative identity, matrix-free.
            let op = linops::SecondVariation::new(&g, &s);
            let image = op.apply(&g, &s.d_dc_profile(&g))?;
            let prof = s.eval_hydro(&g);
            let mut id_res: f64 = 0.0;
            for j in 0..g.len() {
                id_res = id_res
                    .max((image.first[j] - 0.5 * prof.v[j]).abs())
                    .max((image.second[j] - 0.5 * prof.eta[j]).abs());
            }
            let gc = Grid::new(cl, cn)?;
            let co = linops::coercivity(&gc, &Soliton::new(c, 0.0)?)?;
            let ok = spec.negative_count == 1
                && spec.kernel_residual < 1e-4
                && id_res < 1e-6
                && co.lambda > 0.0;
            passed = passed && ok;
            parts.push(format!(
                "c={c}: negatives={}, kernel sine={:.2e}, family identity={:.2e}, Lambda={:.6}",
                spec.negative_count, spec.kernel_residual, id_res, co.lambda
            ));
        }
        Ok(pass_fail(
            passed,
            format!(
                "{} (need exactly 1 negative, sine<1e-4, identity<1e-6, Lambda>0)",
                parts.join("; ")
            ),
        ))
    }

    // 7: localized virial form identity.
    fn virial_form_identity(&mut self) -> Result<(bool, String)> {
        let g = Grid::new(45.0, 512)?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst_rel: f64 = 0.0;
        let mut worst_q: f64 = 0.0;
        for &c in &[0.7, 1.0] {
            let s = Soliton::new(c, 0.0)?;
            for _ in 0..20 {
                let u = random_decaying_pair(&g, &mut rng);
                let form = linops::virial_form(&g, &s, &u)?;
                let denom = form.bilinear.abs().max(form.explicit.abs()).max(1e-300);
                worst_rel = worst_rel.max((form.bilinear - form.explicit).abs() / denom);
            }
            let q = s.pair_on(&g);
            let form_q = linops::virial_form(&g, &s, &q)?;
            worst_q = worst_q.max(form_q.bilinear.abs()).max(form_q.explicit.abs());
        }
        let passed = worst_rel <= 1e-10 && worst_q <= 1e-8;
        Ok(pass_fail(
            passed,
            format!(
                "20 random pairs x c in {{0.7, 1.0}}: max relative gap {worst_rel:.3e} (<=1e-10); G(profile) {worst_q:.3e} (<=1e-8)"
            ),
        ))
    }

    // 8: reduced operator kernel and gap.
    fn reduced_operator_gap(&mut self) -> Result<(bool, String)> {
        let g = Grid::new(60.0, 512)?;
        let s = Soliton::new(1.0, 0.0)?;
        let report = linops::reduced_spectrum(&g, &s)?;
        let tau = linops::reduced_edge(1.0);
        let gap = tau - report.smallest_nonzero;
        let isolated = report.kernel_eigenvalue.abs() < 0.1 * report.smallest_nonzero;
        let passed = report.kernel_residual < 1e-5 && gap > 0.0 && isolated;
        Ok(pass_fail(
            passed,
            format!(
                "kernel residual {:.3e} (<1e-5); tau_1={tau:.5} vs smallest nonzero {:.5}: gap {gap:+.5} (>0); zero mode isolated: {isolated} (|{:.2e}| << {:.3})",
                report.kernel_residual, report.smallest_nonzero, report.kernel_eigenvalue, report.smallest_nonzero
            ),
        ))
    }

    // 9: momentum monotonicity on the perturbed run.
    fn momentum_monotonicity(&mut self) -> Result<(bool, String)> {
        let cfg = self.canonical_config();
        let artifacts = self.canonical()?;
        let report = artifacts
            .monotonicity
            .as_ref()
            .ok_or_else(|| Error::Config("canonical run has no monotonicity report".into()))?;
        let two_time = report.violations.len();
        let differential = report.differential_violations.len();
        let pairs = report.pairs_checked;

        let g = Grid::new(cfg.grid.half_length, cfg.grid.points)?;
        let track = artifacts
            .track
            .as_ref()
            .ok_or_else(|| Error::Config("canonical run has no modulation track".into()))?;
        let w = Weight::for_speed(cfg.speed)?;
        let didt = diagnostics::didt_identity_check(
            &g,
            &artifacts.trajectory,
            track,
            5.0,
            0.0,
            w.nu,
        )?;
        let passed = two_time == 0 && differential == 0 && didt.max_defect < 1e-4;
        Ok(pass_fail(
            passed,
            format!(
                "two-time violations {two_time}/{pairs} pairs, differential violations {differential} (need 0); derivative identity defect {:.3e} at cadence 0.1 (<1e-4)",
                didt.max_defect
            ),
        ))
    }

    // 10: virial identity for the forced free equation.
    fn virial_identity(&mut self) -> Result<(bool, String)> {
        let g = Grid::new(30.0, 256)?;
        let w = Weight { nu: 0.3 };
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
            1.0,
            2.5e-3,
            &w,
            diagnostics::sine_window(0.0, 1.0),
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
            1.0,
            2e-3,
            &w,
            diagnostics::sine_window(0.0, 1.0),
        )?;
        let passed = free.defect < 1e-6 && forced.defect < 1e-6;
        Ok(pass_fail(
            passed,
            format!(
                "free defect {:.3e}, forced defect {:.3e} (<1e-6; lhs magnitudes {:.2e}/{:.2e})",
                free.defect, forced.defect, free.lhs, forced.lhs
            ),
        ))
    }

    // 11: settling of the perturbed run.
    fn asymptotic_settling(&mut self) -> Result<(bool, String)> {
        let std_tol = self.scale.settle_std_tol;
        let ratio_tol = self.scale.settle_ratio_tol;
        let trend_tol = self.scale.trend_tol;
        let s = &self.canonical()?.summary;
        let trend_gap = (s.a_prime_last_quarter_mean - s.c_last_quarter_mean).abs();
        let passed = s.c_last_quarter_std < std_tol
            && s.windowed_trend.ratio <= ratio_tol
            && trend_gap < trend_tol;
        Ok(pass_fail(
            passed,
            format!(
                "c last-quarter std {:.3e} (<{std_tol:.0e}); windowed-norm final/max {:.3} (<= {ratio_tol}); |mean a' - mean c| {:.3e} (<{trend_tol:.0e}); settled c = {:.6}",
                s.c_last_quarter_std, s.windowed_trend.ratio, trend_gap, s.c_last_quarter_mean
            ),
        ))
    }

    // 12: byte-stable reproducibility.
    fn reproducibility(&mut self) -> Result<(bool, String)> {
        let tmp = std::env::temp_dir().join(format!("gplab-verify-{}", std::process::id()));
        let result = self.reproducibility_in(&tmp);
        let _ = fs::remove_dir_all(&tmp);
        result
    }

    fn reproducibility_in(&mut self, tmp: &Path) -> Result<(bool, String)> {
        let mut cfg = RunConfig {
            speed: 1.0,
            center: 0.0,
            grid: GridConfig {
                half_length: 60.0,
                points: 512,
            },
            horizon: 2.0,
            dt: None,
            perturbation: PerturbationConfig {
                kind: PerturbationKind::RandomLocalized,
                amplitude: 0.02,
                width: 4.0,
                offset: Some(3.0),
                seed: 12345,
                speed2: None,
            },
            cadence: 0.1,
            outdir: Some(tmp.join("a")),
            full_trajectory: false,
        };
        run_simulation(&cfg)?;
        cfg.outdir = Some(tmp.join("b"));
        run_simulation(&cfg)?;
        let mut parts = Vec::new();
        let mut passed = true;
        for name in [
            "trajectory.csv",
            "track.csv",
            "momentum.csv",
            "monotonicity.json",
            "summary.json",
        ] {
            let a = fs::read(tmp.join("a").join(name))?;
            let b = fs::read(tmp.join("b").join(name))?;
            // summary.json differs only in the recorded outdir, by design.
            let equal = if name == "summary.json" {
                let ja: serde_json::Value = serde_json::from_slice(&a)?;
                let jb: serde_json::Value = serde_json::from_slice(&b)?;
                let strip = |mut v: serde_json::Value| {
                    if let Some(cfg) = v.get_mut("config") {
                        if let Some(obj) = cfg.as_object_mut() {
                            obj.remove("outdir");
                        }
                    }
                    v
                };
                strip(ja) == strip(jb)
            } else {
                a == b
            };
            passed = passed && equal;
            parts.push(format!("{name}: {}", if equal { "identical" } else { "DIFFERS" }));
        }
        Ok(pass_fail(passed, parts.join("; ")))
    }
}

/// Band-limited random pair with a Gaussian envelope, for identity spot
/// checks.
fn random_decaying_pair(g: &Grid, rng: &mut ChaCha8Rng) -> PairField {
    let mut first = vec![0.0; g.len()];
    let mut second = vec![0.0; g.len()];
    for m in 0..6 {
        let k = 0.35 * (m + 1) as f64;
        let (a1, p1) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let (a2, p2) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        for (j, &x) in g.nodes().iter().enumerate() {
            let env = (-x * x / 100.0).exp();
            first[j] += a1 * (k * x + p1).cos() * env;
            second[j] += a2 * (k * x + p2).cos() * env;
        }
    }
    PairField::new(first, second).expect("matched lengths")
}

/// Executes the acceptance battery at the requested level. Failures are
/// data: every criterion yields a verdict (errors become failed verdicts),
/// and the function itself does not fail.
pub fn run_verification_suite(level: VerificationLevel) -> VerificationReport {
    let start = std::time::Instant::now();
    let mut battery = Battery {
        scale: Scale::for_level(level),
        canonical: None,
    };
    let mut verdicts = Vec::with_capacity(12);
    let mut run = |id: usize,
                   name: &str,
                   verdicts: &mut Vec<CriterionVerdict>,
                   f: &mut dyn FnMut(&mut Battery) -> Result<(bool, String)>| {
        let (passed, details) = match f(&mut battery) {
            Ok((passed, details)) => (passed, details),
            Err(e) => (false, format!("error: {e}")),
        };
        verdicts.push(CriterionVerdict {
            id,
            name: name.to_string(),
            passed,
            details,
        });
    };

    run(1, "closed_form_anchors", &mut verdicts, &mut |b| b.closed_form_anchors());
    run(2, "profile_residuals", &mut verdicts, &mut |b| b.profile_residuals());
    run(3, "conservation_drift", &mut verdicts, &mut |b| b.conservation_drift());
    run(4, "soliton_transport", &mut verdicts, &mut |b| b.soliton_transport());
    run(5, "modulation_and_scaling", &mut verdicts, &mut |b| {
        b.modulation_and_scaling()
    });
    run(6, "spectrum_and_coercivity", &mut verdicts, &mut |b| {
        b.spectrum_and_coercivity()
    });
    run(7, "virial_form_identity", &mut verdicts, &mut |b| b.virial_form_identity());
    run(8, "reduced_operator_gap", &mut verdicts, &mut |b| b.reduced_operator_gap());
    run(9, "momentum_monotonicity", &mut verdicts, &mut |b| {
        b.momentum_monotonicity()
    });
    run(10, "virial_identity", &mut verdicts, &mut |b| b.virial_identity());
    run(11, "asymptotic_settling", &mut verdicts, &mut |b| b.asymptotic_settling());
    run(12, "reproducibility", &mut verdicts, &mut |b| b.reproducibility());

    let all_passed = verdicts.iter().all(|v| v.passed);
    VerificationReport {
        level: match level {
            VerificationLevel::Fast => "fast".to_string(),
            VerificationLevel::Full => "full".to_string(),
        },
        all_passed,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        verdicts,
    }
}
