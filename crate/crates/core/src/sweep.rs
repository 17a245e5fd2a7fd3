//! Scaling experiments: amplitude sweeps measuring the modified-energy rate
//! (quartic in the data size), the standard-energy rate (cubic), and the
//! lifespan consistency of the `1/eps^2` existence-time bound.
//!
//! Every sweep point is an independent trajectory; points are dispatched to
//! the worker pool and gathered by index, so results do not depend on the
//! thread count.

use serde::Serialize;

use crate::energy::hs_rate;
use crate::error::{Error, Result};
use crate::exec::ordered_map;
use crate::grid::{FracParams, GridSpec, SpectralField};
use crate::normal_form::BilinearOperator;
use crate::quartic::QuarticForms;
use crate::solver::{lifespan_probe, rhs, rk4_step, stability_limit, ProbeConfig, ProbeStatus};
use num_complex::Complex64;

/// Least-squares exponent of `y ~ x^p` through log-log regression.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub stderr: f64,
}

/// Fit `ln y = p ln x + c`. Needs at least three strictly positive samples.
pub fn fit_log_exponent(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit("mismatched sample lengths".into()));
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 samples, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|&v| !v.is_finite() || v <= 0.0) {
        return Err(Error::DegenerateFit(
            "samples must be positive and finite".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let dof = (lx.len() as f64 - 2.0).max(1.0);
    Ok(FitResult {
        exponent: slope,
        stderr: (ss_res / dof / sxx).sqrt(),
    })
}

/// Status of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepFlag {
    Ok,
    Capped,
    ResolutionLoss,
}

/// One measured quantity per amplitude, with the log-log fit over the
/// usable points. The exponent is always reported with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub eps_list: Vec<f64>,
    pub measured: Vec<f64>,
    pub flags: Vec<SweepFlag>,
    pub fit: Option<FitResult>,
}

impl SweepResult {
    fn fit_over_ok(eps: &[f64], measured: &[f64], flags: &[SweepFlag]) -> Option<FitResult> {
        let xs: Vec<f64> = eps
            .iter()
            .zip(flags)
            .filter(|(_, &f)| f == SweepFlag::Ok)
            .map(|(&e, _)| e)
            .collect();
        let ys: Vec<f64> = measured
            .iter()
            .zip(flags)
            .filter(|(_, &f)| f == SweepFlag::Ok)
            .map(|(&m, _)| m)
            .collect();
        fit_log_exponent(&xs, &ys).ok()
    }
}

/// The documented default experiment profile: three low modes with fixed
/// amplitudes and phases at physical frequencies near 0.5, 1.0 and 1.5,
/// normalized later per sweep. Mean-zero by construction.
pub fn default_profile(grid: GridSpec) -> Result<SpectralField> {
    profile_from_lines(
        grid,
        &[(0.5, 1.0, 0.0), (1.0, 0.7, 0.4), (1.5, 0.4, 1.1)],
    )
}

/// A single cosine at physical frequency near 1.
pub fn cosine_profile(grid: GridSpec) -> Result<SpectralField> {
    profile_from_lines(grid, &[(1.0, 1.0, 0.0)])
}

/// Look up a profile by its CLI name.
pub fn named_profile(name: &str, grid: GridSpec) -> Result<SpectralField> {
    match name {
        "three-mode" => default_profile(grid),
        "cosine" => cosine_profile(grid),
        other => Err(Error::InvalidParameter(format!(
            "unknown profile '{other}' (expected 'three-mode' or 'cosine')"
        ))),
    }
}

fn profile_from_lines(grid: GridSpec, lines: &[(f64, f64, f64)]) -> Result<SpectralField> {
    let mut modes = Vec::with_capacity(lines.len());
    for &(freq, amplitude, phase) in lines {
        let j = (freq * grid.domain_length() / (2.0 * std::f64::consts::PI)).round() as i64;
        if j < 1 || j > grid.dealias_cutoff() {
            return Err(Error::InvalidParameter(format!(
                "profile frequency {freq} maps to mode {j}, outside this grid's band"
            )));
        }
        if modes.iter().any(|&(m, _)| m == j) {
            return Err(Error::InvalidParameter(format!(
                "profile frequencies collide at mode {j}; use a longer domain"
            )));
        }
        modes.push((j, Complex64::from_polar(0.5 * amplitude, phase)));
    }
    SpectralField::from_modes(grid, &modes)
}

/// Measured growth rates of the modified and standard energies for one
/// amplitude sweep. The modified rate is reconstructed from the quartic
/// forms; the standard rate is the instantaneous `d/dt ||u||_{H^s}^2`.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyRateSweep {
    pub modified: SweepResult,
    pub standard: SweepResult,
}

/// Settings for `energy_rate_sweep`: the observation window and sampling.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateWindow {
    pub t_end: f64,
    pub dt: f64,
    pub sample_stride: usize,
}

impl RateWindow {
    pub fn new(t_end: f64, dt: f64, sample_stride: usize) -> Self {
        Self {
            t_end,
            dt,
            sample_stride: sample_stride.max(1),
        }
    }
}

/// For each amplitude, evolve `eps * profile / ||profile||` over the window
/// and record the largest modified-energy rate `|d E^(N) / dt|` (via the
/// quartic-form reconstruction) and the largest standard rate
/// `|d/dt ||u||^2_{H^{N + a/2}}|`; then fit both against the amplitude.
/// The expected exponents are 4 and 3.
pub fn energy_rate_sweep(
    op: &BilinearOperator,
    profile: &SpectralField,
    eps_list: &[f64],
    params: &FracParams,
    window: &RateWindow,
) -> Result<EnergyRateSweep> {
    check_eps_list(eps_list)?;
    let grid = op.symbol().grid();
    if profile.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if window.dt > stability_limit(grid, params.alpha()) {
        return Err(Error::InvalidParameter(
            "window dt exceeds the RK4 stability limit".into(),
        ));
    }
    let s = params.energy_index();
    let norm0 = profile.sobolev_norm(s);
    if norm0 == 0.0 {
        return Err(Error::InvalidParameter("profile is identically zero".into()));
    }

    let per_eps: Vec<Result<(f64, f64, SweepFlag)>> = ordered_map(eps_list.len(), |i| {
        let eps = eps_list[i];
        let forms = QuarticForms::flow_consistent(op);
        let alpha = params.alpha();
        let mut u = profile.scaled(eps / norm0).dealias();
        let steps = (window.t_end / window.dt).round().max(1.0) as usize;
        let mut max_modified: f64 = 0.0;
        let mut max_standard: f64 = 0.0;
        let mut sample = |u: &SpectralField| -> Result<()> {
            let mut rate = 0.0;
            for k in 1..=params.sobolev_n() {
                rate += forms.dek_dt(u, k)?;
            }
            max_modified = max_modified.max(rate.abs());
            max_standard = max_standard.max(hs_rate(u, &rhs(u, alpha, true)?, s).abs());
            Ok(())
        };
        sample(&u)?;
        for step in 1..=steps {
            u = rk4_step(&u, window.dt, alpha, true)?;
            if !u.max_abs_coeff().is_finite() {
                return Ok((f64::NAN, f64::NAN, SweepFlag::ResolutionLoss));
            }
            if step % window.sample_stride == 0 || step == steps {
                sample(&u)?;
            }
        }
        Ok((max_modified, max_standard, SweepFlag::Ok))
    });

    let mut modified = Vec::new();
    let mut standard = Vec::new();
    let mut flags = Vec::new();
    for entry in per_eps {
        let (m, s, flag) = entry?;
        modified.push(m);
        standard.push(s);
        flags.push(flag);
    }
    if flags.iter().all(|&f| f != SweepFlag::Ok) {
        return Err(Error::DegenerateFit("every sweep point was flagged".into()));
    }
    let fit_modified = SweepResult::fit_over_ok(eps_list, &modified, &flags);
    let fit_standard = SweepResult::fit_over_ok(eps_list, &standard, &flags);
    Ok(EnergyRateSweep {
        modified: SweepResult {
            eps_list: eps_list.to_vec(),
            measured: modified,
            flags: flags.clone(),
            fit: fit_modified,
        },
        standard: SweepResult {
            eps_list: eps_list.to_vec(),
            measured: standard,
            flags,
            fit: fit_standard,
        },
    })
}

/// Lifespan sweep result. `products` holds `T(eps) * eps^2`; consistency
/// with the `1/eps^2` lifespan bound means it does not decrease as `eps`
/// decreases.
#[derive(Debug, Clone, Serialize)]
pub struct LifespanSweep {
    pub sweep: SweepResult,
    pub products: Vec<f64>,
    pub all_capped: bool,
    /// `T eps^2` non-decreasing with decreasing eps (capped probes sit at
    /// the cap product by construction).
    pub products_non_decreasing: bool,
    /// every non-capped probe satisfies `T(eps) >= T(2 eps) / 4` against its
    /// predecessor in the sweep.
    pub pairwise_floor_ok: bool,
}

/// Run `lifespan_probe` per amplitude (largest first) and check the
/// `1/eps^2` consistency of the measured first-crossing times.
pub fn lifespan_sweep(
    profile: &SpectralField,
    eps_list: &[f64],
    alpha: f64,
    cfg: &ProbeConfig,
) -> Result<LifespanSweep> {
    check_eps_list(eps_list)?;
    let mut order: Vec<usize> = (0..eps_list.len()).collect();
    order.sort_by(|&a, &b| eps_list[b].total_cmp(&eps_list[a]));
    let sorted_eps: Vec<f64> = order.iter().map(|&i| eps_list[i]).collect();

    let probes: Vec<Result<crate::solver::ProbeResult>> =
        ordered_map(sorted_eps.len(), |i| lifespan_probe(profile, sorted_eps[i], alpha, cfg));

    let mut measured = Vec::new();
    let mut flags = Vec::new();
    for p in probes {
        let p = p?;
        measured.push(p.t);
        flags.push(match p.status {
            ProbeStatus::Crossed => SweepFlag::Ok,
            ProbeStatus::Capped => SweepFlag::Capped,
            ProbeStatus::ResolutionLoss => SweepFlag::ResolutionLoss,
        });
    }

    let products: Vec<f64> = sorted_eps
        .iter()
        .zip(&measured)
        .map(|(&e, &t)| t * e * e)
        .collect();
    let usable: Vec<usize> = (0..flags.len())
        .filter(|&i| flags[i] != SweepFlag::ResolutionLoss)
        .collect();
    let products_non_decreasing = usable
        .windows(2)
        .all(|w| products[w[1]] >= products[w[0]] * (1.0 - 1e-9));
    let pairwise_floor_ok = usable.windows(2).all(|w| {
        flags[w[1]] != SweepFlag::Ok || measured[w[1]] >= measured[w[0]] / 4.0
    });
    let all_capped = flags.iter().all(|&f| f == SweepFlag::Capped);
    let fit = SweepResult::fit_over_ok(&sorted_eps, &measured, &flags);

    Ok(LifespanSweep {
        sweep: SweepResult {
            eps_list: sorted_eps,
            measured,
            flags,
            fit,
        },
        products,
        all_capped,
        products_non_decreasing,
        pairwise_floor_ok,
    })
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 4 {
        return Err(Error::InsufficientSamples {
            needed: 4,
            got: eps_list.len(),
        });
    }
    if eps_list.iter().any(|&e| !e.is_finite() || e <= 0.0) {
        return Err(Error::InvalidParameter("amplitudes must be positive".into()));
    }
    let max = eps_list.iter().cloned().fold(f64::MIN, f64::max);
    let min = eps_list.iter().cloned().fold(f64::MAX, f64::min);
    if max / min < 4.0 {
        return Err(Error::InvalidParameter(
            "amplitude sweep must span at least a factor of 4".into(),
        ));
    }
    Ok(())
}
