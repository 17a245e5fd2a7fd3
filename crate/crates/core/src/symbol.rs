//! The normal-form symbol `m`, its exact functional relation, growth
//! envelopes, and the frequency-region decomposition used by the quartic
//! forms.
//!
//! With `a` and `b` the two symbol arguments and `s = a + b`,
//!
//! ```text
//! m(a, b) = s (1+|a|^alpha)(1+|b|^alpha)
//!           / (2 [ s (1+|b|^alpha)(|a|^alpha - |s|^alpha)
//!                  - b (1+|s|^alpha)(|a|^alpha - |b|^alpha) ]).
//! ```
//!
//! Conventions on the structural lines:
//! * `a = 0` or `b = 0`: the symbol is genuinely singular there; it is set to
//!   zero, and mean-zero data guarantees those lines are never weighted.
//! * `s = 0`: the formula is 0/0 but the limit is finite; the closed form
//!   `(1+|b|^alpha)^2 / (2 |b|^alpha (1 + |b|^alpha + alpha))` is used. It is
//!   validated against a numerical limit in the tests.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::ordered_map;
use crate::grid::GridSpec;
use crate::testutil::rng;

/// Symbol value at `(a, b)`, applying the line conventions above.
///
/// An exactly vanishing denominator off the three structural lines cannot
/// occur for this symbol; it is treated as a bug sentinel and reported.
pub fn eval_m(a: f64, b: f64, alpha: f64) -> Result<f64> {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    if a == 0.0 || b == 0.0 {
        return Ok(0.0);
    }
    let s = a + b;
    let pb = b.abs().powf(alpha);
    if s == 0.0 {
        return Ok(zero_sum_limit_from_pow(pb, alpha));
    }
    let pa = a.abs().powf(alpha);
    let ps = s.abs().powf(alpha);
    let num = s * (1.0 + pa) * (1.0 + pb);
    let den = 2.0 * (s * (1.0 + pb) * (pa - ps) - b * (1.0 + ps) * (pa - pb));
    if den == 0.0 {
        return Err(Error::DegenerateDenominator { a, b });
    }
    Ok(num / den)
}

/// Finite limit of `m(a, b)` along the line `a + b = 0`.
pub fn zero_sum_limit(b: f64, alpha: f64) -> f64 {
    zero_sum_limit_from_pow(b.abs().powf(alpha), alpha)
}

fn zero_sum_limit_from_pow(pb: f64, alpha: f64) -> f64 {
    (1.0 + pb) * (1.0 + pb) / (2.0 * pb * (1.0 + pb + alpha))
}

/// `m(xi-eta, eta) eta (1+|xi|^alpha) + m(eta-xi, xi) xi (1+|eta|^alpha)`,
/// which vanishes identically off the structural lines.
pub fn functional_relation_residual(xi: f64, eta: f64, alpha: f64) -> Result<f64> {
    let (t1, t2) = relation_terms(xi, eta, alpha)?;
    Ok(t1 + t2)
}

/// Residual of the functional relation scaled by the larger summand.
pub fn functional_relation_relative(xi: f64, eta: f64, alpha: f64) -> Result<f64> {
    let (t1, t2) = relation_terms(xi, eta, alpha)?;
    let scale = t1.abs().max(t2.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((t1 + t2).abs() / scale)
}

fn relation_terms(xi: f64, eta: f64, alpha: f64) -> Result<(f64, f64)> {
    if xi == 0.0 || eta == 0.0 || xi == eta {
        return Err(Error::SingularInput(format!(
            "functional relation needs xi, eta, xi - eta all nonzero, got ({xi}, {eta})"
        )));
    }
    let t1 = eval_m(xi - eta, eta, alpha)? * eta * (1.0 + xi.abs().powf(alpha));
    let t2 = eval_m(eta - xi, xi, alpha)? * xi * (1.0 + eta.abs().powf(alpha));
    Ok((t1, t2))
}

/// The two-sided envelope shapes for `|m(a, b)|`.
///
/// For `a^2 + b^2 <= 1` the lower shape is `|a|/|b| + |b|/|a|` and the upper
/// shape is `|a|^{1-alpha}/|b| + |b|^{1-alpha}/|a|`; for `a^2 + b^2 >= 1`
/// the two swap roles.
pub fn growth_envelope(a: f64, b: f64, alpha: f64) -> Result<(f64, f64)> {
    if a == 0.0 || b == 0.0 {
        return Err(Error::SingularInput(
            "growth envelope needs both arguments nonzero".into(),
        ));
    }
    let ratio = a.abs() / b.abs() + b.abs() / a.abs();
    let frac = a.abs().powf(1.0 - alpha) / b.abs() + b.abs().powf(1.0 - alpha) / a.abs();
    if a * a + b * b <= 1.0 {
        Ok((ratio, frac))
    } else {
        Ok((frac, ratio))
    }
}

/// Sampling window for `verify_growth_bounds`: radius range and the angular
/// margin kept around the three zero lines of the denominator factorization.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub angular_margin: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            r_min: 1e-4,
            r_max: 1e4,
            angular_margin: 1e-2,
        }
    }
}

/// Measured implied constants for one radius regime: the minimum of
/// `|m| / lower-shape` and the maximum of `|m| / upper-shape`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeBounds {
    pub c_lower: f64,
    pub c_upper: f64,
    pub samples: usize,
}

/// Report of a polar sweep over the symbol: measured envelope constants per
/// regime plus the worst functional-relation residual seen.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub alpha: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub config: GrowthConfig,
    pub small_regime: Option<RegimeBounds>,
    pub large_regime: Option<RegimeBounds>,
    pub max_relation_residual: f64,
}

struct RegimeAccumulator {
    c_lower: f64,
    c_upper: f64,
    samples: usize,
}

impl RegimeAccumulator {
    fn new() -> Self {
        Self {
            c_lower: f64::INFINITY,
            c_upper: 0.0,
            samples: 0,
        }
    }

    fn push(&mut self, m_abs: f64, lower: f64, upper: f64) {
        self.c_lower = self.c_lower.min(m_abs / lower);
        self.c_upper = self.c_upper.max(m_abs / upper);
        self.samples += 1;
    }

    fn finish(self) -> Option<RegimeBounds> {
        (self.samples > 0).then_some(RegimeBounds {
            c_lower: self.c_lower,
            c_upper: self.c_upper,
            samples: self.samples,
        })
    }
}

/// Log-uniform polar sweep validating the two-sided growth envelopes.
///
/// Angles are kept `angular_margin` away from the zeros of
/// `cos`, `sin` and `cos + sin`, where the symbol degenerates.
pub fn verify_growth_bounds(alpha: f64, n_samples: usize, seed: u64) -> Result<GrowthReport> {
    verify_growth_bounds_with(alpha, n_samples, seed, GrowthConfig::default())
}

pub fn verify_growth_bounds_with(
    alpha: f64,
    n_samples: usize,
    seed: u64,
    config: GrowthConfig,
) -> Result<GrowthReport> {
    crate::grid::check_alpha(alpha)?;
    if n_samples < 1000 {
        return Err(Error::InsufficientSamples {
            needed: 1000,
            got: n_samples,
        });
    }
    let mut r = rng(seed);
    let mut small = RegimeAccumulator::new();
    let mut large = RegimeAccumulator::new();
    let mut max_residual: f64 = 0.0;
    let ln_min = config.r_min.ln();
    let ln_max = config.r_max.ln();
    for _ in 0..n_samples {
        let radius = if ln_max > ln_min {
            r.random_range(ln_min..ln_max).exp()
        } else {
            config.r_min
        };
        let theta = sample_angle(&mut r, config.angular_margin);
        let a = radius * theta.cos();
        let b = radius * theta.sin();
        let m_abs = eval_m(a, b, alpha)?.abs();
        let (lower, upper) = growth_envelope(a, b, alpha)?;
        if radius <= 1.0 {
            small.push(m_abs, lower, upper);
        } else {
            large.push(m_abs, lower, upper);
        }
        if a + b != 0.0 {
            // (a, b) = (xi - eta, eta)
            let residual = functional_relation_relative(a + b, b, alpha)?;
            max_residual = max_residual.max(residual);
        }
    }
    Ok(GrowthReport {
        alpha,
        n_samples,
        seed,
        config,
        small_regime: small.finish(),
        large_regime: large.finish(),
        max_relation_residual: max_residual,
    })
}

fn sample_angle(r: &mut impl Rng, margin: f64) -> f64 {
    use std::f64::consts::PI;
    // zeros of cos, sin and cos + sin on [0, 2 pi)
    const LINES: [f64; 6] = [0.0, 0.5 * PI, PI, 1.5 * PI, 0.75 * PI, 1.75 * PI];
    loop {
        let theta = r.random_range(0.0..2.0 * PI);
        let clear = LINES.iter().all(|&line| {
            let mut d = (theta - line).abs();
            d = d.min(2.0 * PI - d);
            d >= margin
        });
        if clear {
            return theta;
        }
    }
}

/// Frequency-triple regions driving the quartic-form estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionKind {
    /// Some frequency has modulus below one.
    A1,
    /// Derivative factors can be transferred: some middle element `z2` has
    /// `|z2|/10 < |z1 - z2| + |z2 - z3|`.
    A2,
    /// Near-diagonal complement, where the commutator structure is needed.
    A2Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionLabel {
    pub kind: RegionKind,
    /// All three frequencies share a sign (always true on `A2Complement`).
    pub sign_uniform: bool,
    /// Member of the positive near-diagonal branch: `A2Complement` with
    /// `xi, eta, sigma >= 1`.
    pub in_positive_branch: bool,
}

/// Classify a frequency triple into `A1`, `A2` or the near-diagonal
/// complement. The three labels are mutually exclusive and exhaustive.
pub fn classify_region(xi: f64, eta: f64, sigma: f64) -> RegionLabel {
    let sign_uniform =
        (xi > 0.0 && eta > 0.0 && sigma > 0.0) || (xi < 0.0 && eta < 0.0 && sigma < 0.0);
    let min_abs = xi.abs().min(eta.abs()).min(sigma.abs());
    let kind = if min_abs < 1.0 {
        RegionKind::A1
    } else if transferable(xi, eta, sigma)
        || transferable(eta, xi, sigma)
        || transferable(xi, sigma, eta)
    {
        RegionKind::A2
    } else {
        RegionKind::A2Complement
    };
    let in_positive_branch =
        kind == RegionKind::A2Complement && xi >= 1.0 && eta >= 1.0 && sigma >= 1.0;
    RegionLabel {
        kind,
        sign_uniform,
        in_positive_branch,
    }
}

/// The defining inequality of `A2` with `mid` playing the role of `z2`.
fn transferable(z1: f64, mid: f64, z3: f64) -> bool {
    0.1 * mid.abs() < (z1 - mid).abs() + (mid - z3).abs()
}

/// Near-diagonal coordinates `xi = (1+mu) eta`, `sigma = (1+nu) eta`.
///
/// Only defined on the positive near-diagonal branch, where membership
/// guarantees `|mu|, |nu| <= 1/10`.
pub fn mu_nu_coordinates(xi: f64, eta: f64, sigma: f64) -> Result<(f64, f64)> {
    let label = classify_region(xi, eta, sigma);
    if !label.in_positive_branch {
        return Err(Error::OutsideNearDiagonal { xi, eta, sigma });
    }
    Ok((xi / eta - 1.0, sigma / eta - 1.0))
}

/// Conventions baked into a precomputed symbol table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConventionFlags {
    /// `m = 0` on the lines where either argument vanishes.
    pub singular_lines_zero: bool,
    /// The line `a + b = 0` carries the closed-form Taylor limit.
    pub zero_sum_closed_form: bool,
}

/// Precomputed symbol values over lattice frequency pairs.
///
/// The table covers wavenumber indices `-n..=n` in both arguments (sums and
/// differences of representable wavenumbers), is exactly symmetric by
/// construction, and is immutable after it is built.
#[derive(Debug, Clone)]
pub struct SymbolGrid {
    alpha: f64,
    grid: GridSpec,
    extent: i64,
    values: Vec<f64>,
    conventions: ConventionFlags,
}

impl SymbolGrid {
    pub fn new(grid: GridSpec, alpha: f64) -> Result<Self> {
        crate::grid::check_alpha(alpha)?;
        let extent = grid.n_modes() as i64;
        let width = (2 * extent + 1) as usize;

        // |xi_i|^alpha for 0 <= i <= 2n; index differences reuse it exactly.
        let pow: Vec<f64> = (0..=(2 * extent))
            .map(|i| grid.frequency(i).abs().powf(alpha))
            .collect();

        // Rows a = -n..=n; each row fills b >= a and the transpose entry, so
        // the table is exactly symmetric. Rows are independent.
        let rows: Vec<Result<Vec<(usize, f64)>>> = ordered_map(width, |row| {
            let a = row as i64 - extent;
            let mut entries = Vec::with_capacity((extent - a + 1) as usize);
            for b in a..=extent {
                let value = Self::entry(grid, alpha, &pow, a, b)?;
                entries.push(((b + extent) as usize, value));
            }
            Ok(entries)
        });

        let mut values = vec![0.0; width * width];
        for (row, entries) in rows.into_iter().enumerate() {
            for (col, value) in entries? {
                values[row * width + col] = value;
                values[col * width + row] = value;
            }
        }
        Ok(Self {
            alpha,
            grid,
            extent,
            values,
            conventions: ConventionFlags {
                singular_lines_zero: true,
                zero_sum_closed_form: true,
            },
        })
    }

    fn entry(grid: GridSpec, alpha: f64, pow: &[f64], a: i64, b: i64) -> Result<f64> {
        if a == 0 || b == 0 {
            return Ok(0.0);
        }
        let s = a + b;
        let pb = pow[b.unsigned_abs() as usize];
        if s == 0 {
            return Ok(zero_sum_limit_from_pow(pb, alpha));
        }
        let pa = pow[a.unsigned_abs() as usize];
        let ps = pow[s.unsigned_abs() as usize];
        let xi_s = grid.frequency(s);
        let xi_b = grid.frequency(b);
        let num = xi_s * (1.0 + pa) * (1.0 + pb);
        let den = 2.0 * (xi_s * (1.0 + pb) * (pa - ps) - xi_b * (1.0 + ps) * (pa - pb));
        if den == 0.0 {
            return Err(Error::DegenerateDenominator {
                a: grid.frequency(a),
                b: xi_b,
            });
        }
        Ok(num / den)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn conventions(&self) -> ConventionFlags {
        self.conventions
    }

    /// Symbol value at wavenumber-index arguments `(a, b)`.
    #[inline]
    pub fn value(&self, a: i64, b: i64) -> f64 {
        debug_assert!(a.abs() <= self.extent && b.abs() <= self.extent);
        let width = (2 * self.extent + 1) as usize;
        self.values[((a + self.extent) as usize) * width + (b + self.extent) as usize]
    }
}

/// Convenience wrapper: symbol value as a complex scalar.
#[inline]
pub fn m_c64(table: &SymbolGrid, a: i64, b: i64) -> Complex64 {
    Complex64::new(table.value(a, b), 0.0)
}
