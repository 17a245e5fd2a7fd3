//! The seven experiments behind the CLI subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;

use fbbm_core::energy::{modified_energy, partial_energy};
use fbbm_core::grid::{FracParams, GridSpec};
use fbbm_core::normal_form::BilinearOperator;
use fbbm_core::quartic::quartic_report;
use fbbm_core::solver::{integrate, ProbeConfig, SolverConfig};
use fbbm_core::sweep::{energy_rate_sweep, lifespan_sweep, named_profile, RateWindow};
use fbbm_core::symbol::{verify_growth_bounds, SymbolGrid};
use fbbm_core::testutil::random_mean_zero_field;

use crate::output::{self, fmt};

/// Default period `32 pi`: long enough that lattice frequencies probe the
/// sub-unit range of the symbol.
pub fn default_domain_length() -> f64 {
    32.0 * std::f64::consts::PI
}

/// Options shared by every experiment.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Fractional dispersion order, strictly inside (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Collocation points (even)
    #[arg(long, default_value_t = 256)]
    pub n_modes: usize,
    /// Domain period L
    #[arg(long, default_value_t = default_domain_length())]
    pub domain_length: f64,
}

impl Common {
    pub fn grid(&self) -> anyhow::Result<GridSpec> {
        Ok(GridSpec::new(self.n_modes, self.domain_length)?)
    }

    pub fn operator(&self) -> anyhow::Result<BilinearOperator> {
        Ok(BilinearOperator::new(SymbolGrid::new(
            self.grid()?,
            self.alpha,
        )?))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Initial amplitude in the `H^{N + alpha/2}` norm
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Initial profile: `three-mode` or `cosine`
    #[arg(long, default_value = "three-mode")]
    pub profile: String,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value_t = 10)]
    pub record_stride: usize,
    /// Sobolev level N of the modified energy
    #[arg(long, default_value_t = 2)]
    pub sobolev_n: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RateSweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Comma-separated amplitudes
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.4])]
    pub eps: Vec<f64>,
    #[arg(long, default_value = "three-mode")]
    pub profile: String,
    #[arg(long, default_value_t = 2)]
    pub sobolev_n: u32,
    /// Observation window length
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 5)]
    pub sample_stride: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LifespanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.4])]
    pub eps: Vec<f64>,
    #[arg(long, default_value = "three-mode")]
    pub profile: String,
    #[arg(long, default_value_t = 2)]
    pub sobolev_n: u32,
    /// Norm-growth threshold ending a probe
    #[arg(long, default_value_t = 2.0)]
    pub growth_factor: f64,
    /// Time cap is `cap_multiplier / eps^2`
    #[arg(long, default_value_t = 5.0)]
    pub cap_multiplier: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SymbolArgs {
    /// Fractional dispersion order, strictly inside (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Polar samples for the envelope sweep
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CancellationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-1, 1e-2, 1e-3])]
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IdentityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Derivative level k of the partial energy
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Band limit of the random test field; frequencies reach
    /// `2 pi band / L`, so the default straddles the unit-frequency split
    /// between the regions
    #[arg(long, default_value_t = 32)]
    pub band: i64,
    /// Near-diagonal samples for the kernel bound
    #[arg(long, default_value_t = 10_000)]
    pub kernel_samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnergyReportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    #[arg(long, default_value = "three-mode")]
    pub profile: String,
    #[arg(long, default_value_t = 3)]
    pub sobolev_n: u32,
}

/// One experiment with its arguments.
#[derive(Debug, Clone)]
pub enum LabCommand {
    Simulate(SimulateArgs),
    SweepEnergyRate(RateSweepArgs),
    SweepLifespan(LifespanArgs),
    VerifySymbol(SymbolArgs),
    VerifyCancellation(CancellationArgs),
    VerifyIdentities(IdentityArgs),
    EnergyReport(EnergyReportArgs),
}

impl LabCommand {
    pub fn name(&self) -> &'static str {
        match self {
            LabCommand::Simulate(_) => "simulate",
            LabCommand::SweepEnergyRate(_) => "sweep-energy-rate",
            LabCommand::SweepLifespan(_) => "sweep-lifespan",
            LabCommand::VerifySymbol(_) => "verify-symbol",
            LabCommand::VerifyCancellation(_) => "verify-cancellation",
            LabCommand::VerifyIdentities(_) => "verify-identities",
            LabCommand::EnergyReport(_) => "energy-report",
        }
    }

    fn args_json(&self) -> serde_json::Value {
        match self {
            LabCommand::Simulate(a) => serde_json::to_value(a),
            LabCommand::SweepEnergyRate(a) => serde_json::to_value(a),
            LabCommand::SweepLifespan(a) => serde_json::to_value(a),
            LabCommand::VerifySymbol(a) => serde_json::to_value(a),
            LabCommand::VerifyCancellation(a) => serde_json::to_value(a),
            LabCommand::VerifyIdentities(a) => serde_json::to_value(a),
            LabCommand::EnergyReport(a) => serde_json::to_value(a),
        }
        .expect("experiment arguments serialize")
    }
}

/// Reproducibility record written next to every result file.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub arguments: serde_json::Value,
    pub outputs: Vec<String>,
}

/// Run one experiment, writing its artifacts under `out_dir`.
pub fn execute(cmd: &LabCommand, out_dir: &Path, seed: u64) -> anyhow::Result<Manifest> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let outputs = match cmd {
        LabCommand::Simulate(args) => run_simulate(args, out_dir)?,
        LabCommand::SweepEnergyRate(args) => run_rate_sweep(args, out_dir)?,
        LabCommand::SweepLifespan(args) => run_lifespan(args, out_dir)?,
        LabCommand::VerifySymbol(args) => run_symbol(args, out_dir, seed)?,
        LabCommand::VerifyCancellation(args) => run_cancellation(args, out_dir)?,
        LabCommand::VerifyIdentities(args) => run_identities(args, out_dir, seed)?,
        LabCommand::EnergyReport(args) => run_energy_report(args, out_dir)?,
    };
    let manifest = Manifest {
        experiment: cmd.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        arguments: cmd.args_json(),
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
    };
    output::write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn run_simulate(args: &SimulateArgs, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let op = args.common.operator()?;
    let grid = op.symbol().grid();
    let params = FracParams::new(args.common.alpha, args.sobolev_n, args.sobolev_n)?;
    let s_high = params.energy_index();
    let s_mid = 2.0 + 0.5 * args.common.alpha;

    let profile = named_profile(&args.profile, grid)?;
    let u0 = profile.scaled(args.eps / profile.sobolev_norm(s_high));
    let cfg = SolverConfig::new(args.dt, args.t_end)?.with_record_stride(args.record_stride);
    let record = integrate(&op, &u0, &cfg, &params, &[0.0, s_mid, s_high])?;

    let mut rows = Vec::with_capacity(record.times.len());
    for (i, &t) in record.times.iter().enumerate() {
        rows.push(vec![
            fmt(t),
            fmt(record.sobolev_norms[i][0]),
            fmt(record.sobolev_norms[i][1]),
            fmt(record.sobolev_norms[i][2]),
            fmt(record.energy_breakdowns[i].total),
            fmt(record.conserved_values[i]),
        ]);
    }
    let csv = out_dir.join("trajectory.csv");
    output::write_csv(
        &csv,
        &["t", "hs_0", "hs_mid", "hs_energy", "e_modified", "conserved"],
        &rows,
    )?;

    #[derive(Serialize)]
    struct SimulateSummary {
        status: fbbm_core::solver::TrajectoryStatus,
        sobolev_indices: Vec<f64>,
        final_conserved_drift: f64,
    }
    let drift = if record.conserved_values[0] > 0.0 {
        (record.conserved_values.last().unwrap() - record.conserved_values[0]).abs()
            / record.conserved_values[0]
    } else {
        0.0
    };
    let summary = out_dir.join("trajectory.json");
    output::write_json(
        &summary,
        &SimulateSummary {
            status: record.status,
            sobolev_indices: record.sobolev_indices.clone(),
            final_conserved_drift: drift,
        },
    )?;
    Ok(vec![csv, summary])
}

fn run_rate_sweep(args: &RateSweepArgs, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let op = args.common.operator()?;
    let params = FracParams::new(args.common.alpha, args.sobolev_n, args.sobolev_n)?;
    let profile = named_profile(&args.profile, op.symbol().grid())?;
    let window = RateWindow::new(args.window, args.dt, args.sample_stride);
    let sweep = energy_rate_sweep(&op, &profile, &args.eps, &params, &window)?;

    let mut rows = Vec::new();
    for i in 0..sweep.modified.eps_list.len() {
        rows.push(vec![
            fmt(sweep.modified.eps_list[i]),
            fmt(sweep.modified.measured[i]),
            fmt(sweep.standard.measured[i]),
            format!("{:?}", sweep.modified.flags[i]),
        ]);
    }
    let csv = out_dir.join("energy_rates.csv");
    output::write_csv(
        &csv,
        &["eps", "modified_rate", "standard_rate", "flag"],
        &rows,
    )?;
    let json = out_dir.join("energy_rates.json");
    output::write_json(&json, &sweep)?;
    let dat = out_dir.join("energy_rates.dat");
    output::write_table(
        &dat,
        &["eps", "modified_rate", "standard_rate"],
        &sweep
            .modified
            .eps_list
            .iter()
            .enumerate()
            .map(|(i, &e)| vec![e, sweep.modified.measured[i], sweep.standard.measured[i]])
            .collect::<Vec<_>>(),
    )?;
    Ok(vec![csv, json, dat])
}

fn run_lifespan(args: &LifespanArgs, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let grid = args.common.grid()?;
    fbbm_core::grid::check_alpha(args.common.alpha)?;
    let params = FracParams::new(args.common.alpha, args.sobolev_n, args.sobolev_n)?;
    let profile = named_profile(&args.profile, grid)?;
    let cfg = ProbeConfig::new(
        args.dt,
        args.growth_factor,
        args.cap_multiplier,
        params.energy_index(),
    );
    let sweep = lifespan_sweep(&profile, &args.eps, args.common.alpha, &cfg)?;

    let mut rows = Vec::new();
    for i in 0..sweep.sweep.eps_list.len() {
        rows.push(vec![
            fmt(sweep.sweep.eps_list[i]),
            fmt(sweep.sweep.measured[i]),
            fmt(sweep.products[i]),
            format!("{:?}", sweep.sweep.flags[i]),
        ]);
    }
    let csv = out_dir.join("lifespan.csv");
    output::write_csv(&csv, &["eps", "t_measured", "t_times_eps_sq", "flag"], &rows)?;
    let json = out_dir.join("lifespan.json");
    output::write_json(&json, &sweep)?;
    let dat = out_dir.join("lifespan.dat");
    output::write_table(
        &dat,
        &["eps", "t_measured", "t_times_eps_sq"],
        &sweep
            .sweep
            .eps_list
            .iter()
            .enumerate()
            .map(|(i, &e)| vec![e, sweep.sweep.measured[i], sweep.products[i]])
            .collect::<Vec<_>>(),
    )?;
    Ok(vec![csv, json, dat])
}

fn run_symbol(args: &SymbolArgs, out_dir: &Path, seed: u64) -> anyhow::Result<Vec<PathBuf>> {
    let report = verify_growth_bounds(args.alpha, args.samples, seed)?;
    let json = out_dir.join("symbol_report.json");
    output::write_json(&json, &report)?;
    Ok(vec![json])
}

fn run_cancellation(args: &CancellationArgs, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let op = args.common.operator()?;
    let grid = op.symbol().grid();
    if args.eps.is_empty() {
        bail!("verify-cancellation needs at least one amplitude");
    }
    // band-limited two-line data well inside the dealias band
    let guard = grid.dealias_cutoff() / 2;
    let profile = fbbm_core::sweep::named_profile("three-mode", grid)
        .ok()
        .filter(|p| p.band_limit() <= guard);
    let mut rows = Vec::new();
    for &eps in &args.eps {
        let u = match &profile {
            Some(p) => p.scaled(eps / p.sobolev_norm(0.0)),
            None => {
                let base = random_mean_zero_field(grid, guard.min(4), 1, 1.0);
                base.scaled(eps / base.sobolev_norm(0.0))
            }
        };
        let (residual, scale) = op.quadratic_cancellation_residual(&u)?;
        let relative = if scale > 0.0 { residual / scale } else { 0.0 };
        rows.push(vec![
            fmt(args.common.alpha),
            fmt(eps),
            fmt(residual),
            fmt(scale),
            fmt(relative),
        ]);
    }
    let csv = out_dir.join("cancellation.csv");
    output::write_csv(&csv, &["alpha", "eps", "residual", "scale", "relative"], &rows)?;
    Ok(vec![csv])
}

fn run_identities(args: &IdentityArgs, out_dir: &Path, seed: u64) -> anyhow::Result<Vec<PathBuf>> {
    let op = args.common.operator()?;
    let grid = op.symbol().grid();
    let band = args.band.min(grid.max_wavenumber() / 2);
    let u = random_mean_zero_field(grid, band, seed, 0.5);
    let report = quartic_report(&op, &u, args.k, args.kernel_samples, seed)?;
    let json = out_dir.join("identities.json");
    output::write_json(&json, &report)?;
    Ok(vec![json])
}

fn run_energy_report(args: &EnergyReportArgs, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let op = args.common.operator()?;
    let grid = op.symbol().grid();
    let params = FracParams::new(args.common.alpha, args.sobolev_n, args.sobolev_n)?;
    let profile = named_profile(&args.profile, grid)?;
    let u = profile.scaled(args.eps / profile.sobolev_norm(params.energy_index()));
    let breakdown = modified_energy(&op, &u, args.sobolev_n)?;

    let mut rows = Vec::new();
    for (i, &k) in breakdown.k_values.iter().enumerate() {
        let (q, c) = (breakdown.quadratic_part_k[i], breakdown.cross_part_k[i]);
        debug_assert_eq!((q, c), partial_energy(&op, &u, k)?);
        rows.push(vec![
            format!("{k}"),
            fmt(q),
            fmt(c),
            fmt(q + c),
        ]);
    }
    let csv = out_dir.join("energy_report.csv");
    output::write_csv(&csv, &["k", "quadratic", "cross", "e_k"], &rows)?;
    Ok(vec![csv])
}
