//! Periodic grid, discrete Fourier transforms, Fourier multipliers and norms.
//!
//! A real field on the torus of length `L` is stored through its Fourier
//! coefficients `c_j` with
//!
//! ```text
//! f(x) = sum_j c_j exp(i xi_j x),    xi_j = 2 pi j / L,
//! ```
//!
//! for `j = -n/2+1, ..., n/2`. With this convention a constant field has
//! `c_0` equal to its mean, `cos(xi_j x)` has `c_{+-j} = 1/2`, and the `L^2`
//! integral over one period is `L * sum_j |c_j|^2` (Parseval for the rectangle
//! rule, which is exact for trigonometric polynomials). All multipliers and
//! norms below are stated in terms of the physical frequencies `xi_j`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], forward: bool) {
    let fft = PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if forward {
            planner.plan_fft_forward(buf.len())
        } else {
            planner.plan_fft_inverse(buf.len())
        }
    });
    fft.process(buf);
}

/// Uniform periodic grid: collocation size, period and dealiasing fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    n_modes: usize,
    domain_length: f64,
    dealias_fraction: f64,
}

impl GridSpec {
    pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

    /// Grid with the default 2/3 dealiasing fraction.
    pub fn new(n_modes: usize, domain_length: f64) -> Result<Self> {
        Self::with_dealias_fraction(n_modes, domain_length, Self::DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias_fraction(
        n_modes: usize,
        domain_length: f64,
        dealias_fraction: f64,
    ) -> Result<Self> {
        if n_modes < 8 || !n_modes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_modes must be even and >= 8, got {n_modes}"
            )));
        }
        if !domain_length.is_finite() || domain_length <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "domain_length must be positive, got {domain_length}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(Self {
            n_modes,
            domain_length,
            dealias_fraction,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Largest representable wavenumber index, `n/2`.
    pub fn max_wavenumber(&self) -> i64 {
        (self.n_modes / 2) as i64
    }

    /// Physical frequency of lattice index `j`.
    pub fn frequency(&self, j: i64) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.domain_length
    }

    /// Largest wavenumber index kept by `dealias`: `floor(frac * n/2)`.
    ///
    /// With the default fraction (2/3 rounded down in binary) quadratic
    /// products of kept modes cannot alias back onto kept modes.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.dealias_fraction * self.max_wavenumber() as f64).floor() as i64
    }

    /// Collocation nodes `x_p = p L / n`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.domain_length / self.n_modes as f64;
        (0..self.n_modes).map(|p| p as f64 * h).collect()
    }

    /// Wavenumber indices in storage order is `0, 1, ..., n/2, -n/2+1, ..., -1`;
    /// this iterator visits them in ascending order `-n/2+1 ..= n/2`.
    pub fn wavenumbers(&self) -> impl Iterator<Item = i64> {
        let half = self.max_wavenumber();
        (-half + 1)..=half
    }

    fn storage_index(&self, j: i64) -> usize {
        debug_assert!(j.unsigned_abs() as usize <= self.n_modes / 2);
        if j >= 0 {
            j as usize
        } else {
            (j + self.n_modes as i64) as usize
        }
    }
}

/// Fractional order and Sobolev bookkeeping for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParams {
    alpha: f64,
    sobolev_n: u32,
    max_k: u32,
}

impl FracParams {
    pub fn new(alpha: f64, sobolev_n: u32, max_k: u32) -> Result<Self> {
        check_alpha(alpha)?;
        if sobolev_n < 2 {
            return Err(Error::InvalidParameter(format!(
                "sobolev_n must be >= 2, got {sobolev_n}"
            )));
        }
        if max_k < 1 {
            return Err(Error::InvalidParameter("max_k must be >= 1".into()));
        }
        Ok(Self {
            alpha,
            sobolev_n,
            max_k,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sobolev_n(&self) -> u32 {
        self.sobolev_n
    }

    pub fn max_k(&self) -> u32 {
        self.max_k
    }

    /// Sobolev index `N + alpha/2` tracked by the experiments.
    pub fn energy_index(&self) -> f64 {
        self.sobolev_n as f64 + 0.5 * self.alpha
    }
}

/// Fractional dispersion order must lie strictly inside (0, 1).
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Fourier coefficients of a real periodic field.
///
/// Coefficients are stored in FFT order; `coeff(j)` addresses them by
/// wavenumber and returns zero outside the representable range, so lattice
/// sums can be written over all of `Z` without wraparound.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::ZERO; grid.n_modes()],
        }
    }

    /// Forward transform of `n` equispaced real samples.
    pub fn from_samples(grid: GridSpec, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.n_modes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes(),
                got: samples.len(),
            });
        }
        let mut coeffs: Vec<Complex64> =
            samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        fft_in_place(&mut coeffs, true);
        let scale = 1.0 / grid.n_modes() as f64;
        for c in &mut coeffs {
            *c *= scale;
        }
        Ok(Self { grid, coeffs })
    }

    /// Build a field from `(wavenumber, coefficient)` pairs, filling the
    /// mirror coefficient so the result is Hermitian (real-valued).
    pub fn from_modes(grid: GridSpec, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut field = Self::zero(grid);
        for &(j, c) in modes {
            if j.abs() >= grid.max_wavenumber() {
                return Err(Error::InvalidParameter(format!(
                    "mode {j} has no Hermitian partner on an n = {} grid",
                    grid.n_modes()
                )));
            }
            field.coeffs[grid.storage_index(j)] = c;
            if j != 0 {
                field.coeffs[grid.storage_index(-j)] = c.conj();
            }
        }
        Ok(field)
    }

    /// Real samples at the collocation nodes (inverse transform).
    pub fn to_physical(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft_in_place(&mut buf, false);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Coefficient at wavenumber `j`; zero outside the representable range.
    #[inline]
    pub fn coeff(&self, j: i64) -> Complex64 {
        let half = self.grid.max_wavenumber();
        if j > half || j < -half + 1 {
            Complex64::ZERO
        } else {
            self.coeffs[self.grid.storage_index(j)]
        }
    }

    pub fn set_coeff(&mut self, j: i64, value: Complex64) {
        let idx = self.grid.storage_index(j);
        self.coeffs[idx] = value;
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn map_multiplier(&self, mult: impl Fn(f64) -> Complex64) -> Self {
        let mut out = self.clone();
        let half = self.grid.max_wavenumber();
        for j in (-half + 1)..=half {
            let idx = self.grid.storage_index(j);
            out.coeffs[idx] = self.coeffs[idx] * mult(self.grid.frequency(j));
        }
        out
    }

    /// `|D|^alpha`: multiply coefficient `j` by `|xi_j|^alpha`.
    pub fn fractional_derivative(&self, alpha: f64) -> Self {
        assert!(alpha >= 0.0, "fractional order must be nonnegative");
        self.map_multiplier(|xi| Complex64::new(xi.abs().powf(alpha), 0.0))
    }

    /// `(1 + |D|^alpha)^{-1}`.
    pub fn resolvent(&self, alpha: f64) -> Self {
        self.map_multiplier(|xi| Complex64::new(1.0 / (1.0 + xi.abs().powf(alpha)), 0.0))
    }

    /// `(1 + |D|^alpha)`.
    pub fn resolvent_inverse(&self, alpha: f64) -> Self {
        self.map_multiplier(|xi| Complex64::new(1.0 + xi.abs().powf(alpha), 0.0))
    }

    /// `(1 + |D|^alpha)^{1/2}`, the weight carried by the partial energies.
    pub fn energy_weight(&self, alpha: f64) -> Self {
        self.map_multiplier(|xi| Complex64::new((1.0 + xi.abs().powf(alpha)).sqrt(), 0.0))
    }

    /// `d^k/dx^k`: multiply coefficient `j` by `(i xi_j)^k`.
    pub fn spatial_derivative(&self, order: u32) -> Self {
        self.map_multiplier(|xi| Complex64::new(0.0, xi).powu(order))
    }

    /// Zero every coefficient above the grid's dealias cutoff.
    pub fn dealias(&self) -> Self {
        let cutoff = self.grid.dealias_cutoff();
        let mut out = self.clone();
        let half = self.grid.max_wavenumber();
        for j in (-half + 1)..=half {
            if j.abs() > cutoff {
                out.coeffs[self.grid.storage_index(j)] = Complex64::ZERO;
            }
        }
        out
    }

    /// Inhomogeneous Sobolev norm `(L sum_j (1 + xi_j^2)^s |c_j|^2)^{1/2}`.
    ///
    /// `s = 0` reproduces the `L^2` integral norm over one period.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut terms: Vec<f64> = Vec::with_capacity(self.grid.n_modes());
        for j in self.grid.wavenumbers() {
            let xi = self.grid.frequency(j);
            let w = (1.0 + xi * xi).powf(s);
            terms.push(w * self.coeff(j).norm_sqr());
        }
        (self.grid.domain_length() * pairwise_sum(&terms)).sqrt()
    }

    /// `|| d^k/dx^k (1 + |D|^alpha)^{1/2} f ||_{L^2}` with the plain weight
    /// `1 + |xi|^alpha`, not the Japanese bracket.
    pub fn weighted_energy_norm(&self, alpha: f64, k: u32) -> f64 {
        let mut terms: Vec<f64> = Vec::with_capacity(self.grid.n_modes());
        for j in self.grid.wavenumbers() {
            let xi = self.grid.frequency(j);
            let w = xi.powi(2 * k as i32) * (1.0 + xi.abs().powf(alpha));
            terms.push(w * self.coeff(j).norm_sqr());
        }
        (self.grid.domain_length() * pairwise_sum(&terms)).sqrt()
    }

    /// Real `L^2` inner product `int f g dx = L sum_j c_j conj(d_j)`.
    pub fn l2_inner(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product across grids");
        let terms: Vec<f64> = self
            .grid
            .wavenumbers()
            .map(|j| (self.coeff(j) * other.coeff(j).conj()).re)
            .collect();
        self.grid.domain_length() * pairwise_sum(&terms)
    }

    pub fn mean_coeff(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Checks `|coeff(0)|` against `tol * max_j |coeff(j)|`.
    pub fn is_mean_zero(&self, tol: f64) -> bool {
        let scale = self.max_abs_coeff();
        self.coeffs[0].norm() <= tol * scale.max(f64::MIN_POSITIVE)
    }

    pub fn require_mean_zero(&self) -> Result<()> {
        if self.is_mean_zero(1e-12) {
            Ok(())
        } else {
            Err(Error::NonZeroMean(self.coeffs[0].norm()))
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|j|` carrying a nonzero coefficient.
    pub fn band_limit(&self) -> i64 {
        let half = self.grid.max_wavenumber();
        let mut band = 0;
        for j in (-half + 1)..=half {
            if self.coeff(j) != Complex64::ZERO {
                band = band.max(j.abs());
            }
        }
        band
    }

    /// Departure from Hermitian symmetry, `max_j |c_{-j} - conj(c_j)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let half = self.grid.max_wavenumber();
        let mut worst: f64 = 0.0;
        for j in 1..half {
            worst = worst.max((self.coeff(-j) - self.coeff(j).conj()).norm());
        }
        worst.max(self.coeff(0).im.abs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= factor;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_grid(other).expect("field addition across grids");
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += d;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.same_grid(other)
            .expect("field subtraction across grids");
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c -= d;
        }
        out
    }

    /// `self + factor * other` in one pass.
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Self {
        self.same_grid(other).expect("field update across grids");
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += factor * d;
        }
        out
    }

    /// Pointwise product formed in physical space, transformed back and
    /// dealiased. Exact on the kept modes for inputs inside the dealias band.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(Self::from_samples(self.grid, &prod)?.dealias())
    }

    /// Pointwise product without the dealias pass. Upper-spectrum content
    /// aliases; only meaningful when the caller accepts that.
    pub fn product_raw(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_samples(self.grid, &prod)
    }

    /// Exact coefficient convolution `(f g)_j = sum_l f_{j-l} g_l`, without
    /// dealiasing. The caller is responsible for keeping the supports small
    /// enough that the true product fits on the grid.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let half = self.grid.max_wavenumber();
        let mut out = Self::zero(self.grid);
        for j in (-half + 1)..=half {
            let mut terms: Vec<Complex64> = Vec::new();
            for l in (-half + 1)..=half {
                let f = self.coeff(j - l);
                if f != Complex64::ZERO {
                    terms.push(f * other.coeff(l));
                }
            }
            out.set_coeff(j, pairwise_sum_complex(&terms));
        }
        Ok(out)
    }
}

/// Pairwise (cascade) summation: deterministic for a fixed input order and
/// more accurate than a running sum on long arrays.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}
