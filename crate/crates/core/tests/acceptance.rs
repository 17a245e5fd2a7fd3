//! Acceptance suite: one test per criterion, each printing a summary line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! The criteria pin every tolerance in code: exact lattice identities at
//! 1e-10/1e-12 relative, envelope constants finite and positive, RK4
//! conservation and convergence orders, the quartic/cubic scaling exponents,
//! and the 1/eps^2 lifespan consistency.

use num_complex::Complex64;

use fbbm_core::energy::modified_energy;
use fbbm_core::grid::{FracParams, GridSpec, SpectralField};
use fbbm_core::normal_form::BilinearOperator;
use fbbm_core::quartic::{kernel_bound_sweep, verify_dek_dt, QuarticForms};
use fbbm_core::solver::{integrate, rk4_step, ProbeConfig, SolverConfig};
use fbbm_core::sweep::{default_profile, energy_rate_sweep, lifespan_sweep, RateWindow, SweepFlag};
use fbbm_core::symbol::{
    classify_region, eval_m, functional_relation_relative, verify_growth_bounds, RegionKind,
    SymbolGrid,
};
use fbbm_core::testutil::{random_mean_zero_field, rng, TWO_PI};
use rand::Rng;

fn operator(n: usize, length: f64, alpha: f64) -> BilinearOperator {
    let grid = GridSpec::new(n, length).unwrap();
    BilinearOperator::new(SymbolGrid::new(grid, alpha).unwrap())
}

#[test]
fn criterion_01_symbol_identities() {
    let alpha = 0.5;

    // 10^4 random off-line pairs
    let mut r = rng(101);
    let mut worst_random: f64 = 0.0;
    let mut produced = 0;
    while produced < 10_000 {
        let xi: f64 = r.random_range(-4.0..4.0_f64).exp()
            * if r.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
        let eta: f64 = r.random_range(-4.0..4.0_f64).exp()
            * if r.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
        if xi == 0.0 || eta == 0.0 || xi == eta {
            continue;
        }
        produced += 1;
        worst_random = worst_random.max(functional_relation_relative(xi, eta, alpha).unwrap());
    }
    assert!(
        worst_random <= 1e-10,
        "random-pair relation residual {worst_random}"
    );

    // every off-line pair of a 128-mode lattice, plus symmetry
    let grid = GridSpec::new(128, 32.0 * std::f64::consts::PI).unwrap();
    let mut worst_lattice: f64 = 0.0;
    let mut worst_symmetry: f64 = 0.0;
    for a in -64..=64_i64 {
        for b in -64..=64_i64 {
            let (fa, fb) = (grid.frequency(a), grid.frequency(b));
            let mab = eval_m(fa, fb, alpha).unwrap();
            let mba = eval_m(fb, fa, alpha).unwrap();
            let scale = mab.abs().max(mba.abs()).max(f64::MIN_POSITIVE);
            worst_symmetry = worst_symmetry.max((mab - mba).abs() / scale);
            if a != 0 && b != 0 && a != b {
                worst_lattice =
                    worst_lattice.max(functional_relation_relative(fa, fb, alpha).unwrap());
            }
        }
    }
    assert!(
        worst_lattice <= 1e-10,
        "lattice relation residual {worst_lattice}"
    );
    assert!(worst_symmetry <= 1e-12, "symmetry defect {worst_symmetry}");

    println!(
        "criterion 01 PASS: relation residual {worst_random:.2e} (random) / \
         {worst_lattice:.2e} (lattice), symmetry {worst_symmetry:.2e}"
    );
}

#[test]
fn criterion_02_growth_envelopes() {
    for alpha in [0.25, 0.5, 0.75] {
        let report = verify_growth_bounds(alpha, 10_000, 202).unwrap();
        for (name, regime) in [
            ("small", report.small_regime.unwrap()),
            ("large", report.large_regime.unwrap()),
        ] {
            assert!(
                regime.c_lower > 0.0 && regime.c_lower.is_finite(),
                "alpha {alpha} {name}: lower constant {}",
                regime.c_lower
            );
            assert!(
                regime.c_upper.is_finite() && regime.c_upper > 0.0,
                "alpha {alpha} {name}: upper constant {}",
                regime.c_upper
            );
        }
        println!(
            "criterion 02 PASS (alpha {alpha}): c in [{:.3}, {:.3}] (small), [{:.3}, {:.3}] (large)",
            report.small_regime.unwrap().c_lower,
            report.small_regime.unwrap().c_upper,
            report.large_regime.unwrap().c_lower,
            report.large_regime.unwrap().c_upper,
        );
    }
}

#[test]
fn criterion_03_quadratic_cancellation() {
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let op = operator(128, 16.0 * std::f64::consts::PI, alpha);
        let profile = default_profile(op.symbol().grid()).unwrap();
        for eps in [1e-1, 1e-2, 1e-3] {
            let u = profile.scaled(eps / profile.sobolev_norm(0.0));
            let (residual, scale) = op.quadratic_cancellation_residual(&u).unwrap();
            let relative = residual / scale;
            worst = worst.max(relative);
            assert!(
                relative <= 1e-10,
                "alpha {alpha}, eps {eps}: cancellation residual {relative}"
            );
        }
    }
    println!("criterion 03 PASS: worst cancellation residual {worst:.2e}");
}

#[test]
fn criterion_04_exact_lattice_identities() {
    let op = operator(64, TWO_PI, 0.5);
    let grid = op.symbol().grid();
    let forms = QuarticForms::exact(&op);
    let mut worst_g0: f64 = 0.0;
    let mut worst_g1: f64 = 0.0;
    let mut worst_gk: f64 = 0.0;
    for k in 1..=3_u32 {
        for draw in 0..20_u64 {
            let u = random_mean_zero_field(grid, 14, 4000 + 100 * k as u64 + draw, 0.5);
            worst_g0 = worst_g0.max(forms.verify_g0_plus_f0(&u, k).unwrap());
            let id = forms.g1_identity(&u, k).unwrap();
            let scale = id.residual.abs().max(id.correction.abs()).max(f64::MIN_POSITIVE);
            worst_g1 = worst_g1.max((id.residual - id.correction).abs() / scale);
            worst_gk = worst_gk.max(forms.gk_reduced(&u, k).unwrap().1);
        }
    }
    assert!(worst_g0 <= 1e-10, "G0 + F0 residual {worst_g0}");
    assert!(worst_g1 <= 1e-10, "G1 - 2F1 - correction residual {worst_g1}");
    assert!(worst_gk <= 1e-10, "G_k reduction residual {worst_gk}");
    println!(
        "criterion 04 PASS: residuals G0+F0 {worst_g0:.2e}, \
         G1 identity {worst_g1:.2e}, G_k reduction {worst_gk:.2e}"
    );
}

#[test]
fn criterion_05_region_partition() {
    // frequencies j/4 give a genuine mix of all three regions
    let op = operator(64, 8.0 * std::f64::consts::PI, 0.5);
    let grid = op.symbol().grid();
    let forms = QuarticForms::exact(&op);
    let mut worst_partition: f64 = 0.0;
    for draw in 0..3_u64 {
        let u = random_mean_zero_field(grid, 16, 5000 + draw, 0.5);
        for k in [2, 3] {
            let (f_all, g_all) = forms.f10_g10(&u, k, None).unwrap();
            let mut f_sum = 0.0;
            let mut g_sum = 0.0;
            for kind in [RegionKind::A1, RegionKind::A2, RegionKind::A2Complement] {
                let (f, g) = forms.f10_g10(&u, k, Some(kind)).unwrap();
                f_sum += f;
                g_sum += g;
            }
            worst_partition = worst_partition
                .max((f_all - f_sum).abs() / f_all.abs().max(f64::MIN_POSITIVE))
                .max((g_all - g_sum).abs() / g_all.abs().max(f64::MIN_POSITIVE));
        }
    }
    assert!(worst_partition <= 1e-12, "partition defect {worst_partition}");

    // sign uniformity over every lattice triple labeled A2c
    let mut a2c_count = 0;
    for a in -16..=16_i64 {
        for b in -16..=16_i64 {
            for c in -16..=16_i64 {
                let label = classify_region(grid.frequency(a), grid.frequency(b), grid.frequency(c));
                if label.kind == RegionKind::A2Complement {
                    a2c_count += 1;
                    assert!(
                        label.sign_uniform,
                        "A2c triple ({a}, {b}, {c}) not sign uniform"
                    );
                }
            }
        }
    }
    assert!(a2c_count > 0, "no near-diagonal triples on the test lattice");
    println!(
        "criterion 05 PASS: partition defect {worst_partition:.2e}, \
         {a2c_count} sign-uniform near-diagonal triples"
    );
}

#[test]
fn criterion_06_kernel_bound() {
    for alpha in [0.25, 0.5, 0.75] {
        let report = kernel_bound_sweep(alpha, 10_000, 606).unwrap();
        assert!(
            report.max_bound_ratio.is_finite() && report.max_bound_ratio > 0.0,
            "alpha {alpha}: kernel bound ratio {}",
            report.max_bound_ratio
        );
        assert!(
            report.diagonal_value <= 1e-12,
            "alpha {alpha}: kernel does not vanish on the diagonal: {}",
            report.diagonal_value
        );
        println!(
            "criterion 06 PASS (alpha {alpha}): |N|/envelope <= {:.3}, \
             Taylor ratio <= {:.3}, diagonal {:.1e}",
            report.max_bound_ratio, report.max_taylor_ratio, report.diagonal_value
        );
    }
}

#[test]
fn criterion_07_energy_derivative_reconstruction() {
    let op = operator(64, TWO_PI, 0.5);
    let u0 = random_mean_zero_field(op.symbol().grid(), 9, 707, 0.4);
    for k in [1_u32, 2] {
        let mismatches: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&dt| verify_dek_dt(&op, &u0, k, dt).unwrap())
            .collect();
        let mut ratios = Vec::new();
        for pair in mismatches.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(
                ratio >= 3.8,
                "k = {k}: convergence ratio {ratio} < 3.8 (mismatches {mismatches:?})"
            );
            ratios.push(ratio);
        }
        println!("criterion 07 PASS (k = {k}): halving ratios {ratios:.3?}");
    }
}

#[test]
fn criterion_08_conservation_and_rk4_order() {
    let alpha = 0.5;
    let op = operator(64, TWO_PI, alpha);
    let grid = op.symbol().grid();
    let eps = 1e-2;
    let u0 = SpectralField::from_modes(grid, &[(1, Complex64::new(0.5 * eps, 0.0))]).unwrap();
    let params = FracParams::new(alpha, 2, 2).unwrap();
    let cfg = SolverConfig::new(1e-3, 10.0).unwrap().with_record_stride(500);
    let record = integrate(&op, &u0, &cfg, &params, &[0.0]).unwrap();
    assert!(record.completed());
    let c0 = record.conserved_values[0];
    let drift = record
        .conserved_values
        .iter()
        .fold(0.0_f64, |m, &c| m.max((c - c0).abs()))
        / c0;
    assert!(drift <= 1e-10, "conserved drift {drift}");

    // RK4 self-convergence on a richer state
    let u0 = random_mean_zero_field(grid, 6, 808, 0.2);
    let t_end = 0.5;
    let solve = |dt: f64| {
        let mut u = u0.dealias();
        for _ in 0..(t_end / dt).round() as usize {
            u = rk4_step(&u, dt, alpha, true).unwrap();
        }
        u
    };
    let reference = solve(1.0 / 1024.0);
    let errors: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&dt| solve(dt).sub(&reference).sobolev_norm(0.0))
        .collect();
    let mut ratios = Vec::new();
    for pair in errors.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(ratio >= 15.0, "self-convergence ratio {ratio} < 15");
        ratios.push(ratio);
    }
    println!(
        "criterion 08 PASS: conserved drift {drift:.2e} over T=10, halving ratios {ratios:.2?}"
    );
}

#[test]
fn criterion_09_scaling_exponents() {
    let alpha = 0.5;
    let op = operator(128, 32.0 * std::f64::consts::PI, alpha);
    let params = FracParams::new(alpha, 2, 2).unwrap();
    let profile = default_profile(op.symbol().grid()).unwrap();
    let window = RateWindow::new(1.0, 0.05, 4);
    let eps = [0.05, 0.1, 0.2, 0.4];
    let sweep = energy_rate_sweep(&op, &profile, &eps, &params, &window).unwrap();
    let modified = sweep.modified.fit.expect("modified-energy fit");
    let standard = sweep.standard.fit.expect("standard-energy fit");
    assert!(
        (modified.exponent - 4.0).abs() <= 0.3,
        "modified-energy exponent {} +- {}",
        modified.exponent,
        modified.stderr
    );
    assert!(
        (standard.exponent - 3.0).abs() <= 0.3,
        "standard-energy exponent {} +- {}",
        standard.exponent,
        standard.stderr
    );
    println!(
        "criterion 09 PASS: modified rate ~ eps^{:.3} (+-{:.3}), \
         standard rate ~ eps^{:.3} (+-{:.3})",
        modified.exponent, modified.stderr, standard.exponent, standard.stderr
    );
}

#[test]
fn criterion_10_lifespan_consistency() {
    let alpha = 0.5;
    let grid = GridSpec::new(128, 32.0 * std::f64::consts::PI).unwrap();
    let profile = default_profile(grid).unwrap();
    let cfg = ProbeConfig::new(0.1, 2.0, 5.0, 2.25);
    let sweep = lifespan_sweep(&profile, &[0.05, 0.1, 0.2, 0.4], alpha, &cfg).unwrap();

    assert!(
        sweep.products_non_decreasing,
        "T eps^2 decreased along the sweep: {:?}",
        sweep.products
    );
    assert!(
        sweep.pairwise_floor_ok,
        "a non-capped probe fell below a quarter of its predecessor"
    );
    for (i, flag) in sweep.sweep.flags.iter().enumerate() {
        assert!(
            *flag != SweepFlag::ResolutionLoss,
            "probe {i} lost resolution"
        );
    }
    let label = if sweep.all_capped {
        "all probes capped: consistent with the lifespan bound at the cap"
    } else {
        "crossings observed, scaling consistent"
    };
    println!(
        "criterion 10 PASS: {label}; T*eps^2 = {:?}",
        sweep.products
    );
}

#[test]
fn criterion_11_equivalence_band() {
    let alpha = 0.5;
    let op = operator(128, 16.0 * std::f64::consts::PI, alpha);
    let profile = default_profile(op.symbol().grid()).unwrap();
    let mut fitted_c: f64 = 0.0;
    let mut cross_c: f64 = 0.0;
    for big_n in [2_u32, 3] {
        let s = big_n as f64 + 0.5 * alpha;
        for eps in [1e-2, 3e-3, 1e-3] {
            let u = profile.scaled(eps / profile.sobolev_norm(s));
            let b = modified_energy(&op, &u, big_n).unwrap();
            let norm_sq = u.sobolev_norm(s).powi(2);
            let ratio = b.total / norm_sq;
            assert!(
                (0.5..=2.0).contains(&ratio),
                "N = {big_n}, eps = {eps}: equivalence ratio {ratio} outside [0.5, 2]"
            );
            fitted_c = fitted_c.max((ratio - 1.0).abs() / eps);
            // the eps-linear part of the band: the cubic cross terms against
            // the quadratic norm
            let cross: f64 = b.cross_part_k.iter().map(|c| c.abs()).sum();
            cross_c = cross_c.max(cross / (eps * norm_sq));
        }
    }
    println!(
        "criterion 11 PASS: ratios within [0.5, 2]; fitted band constant C = {fitted_c:.3} \
         (dominated by the eps-independent norm-equivalence constant), \
         cross-term constant {cross_c:.3} (the eps-linear part)"
    );
}
