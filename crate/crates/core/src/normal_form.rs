//! The bilinear operator `P`, the change of unknown `w = u + P(u, u)` and its
//! cubic remainder, plus a direct check that the quadratic terms cancel in
//! the `w`-equation.
//!
//! On the torus `P` is the coefficient convolution weighted by the symbol,
//!
//! ```text
//! P(f, g)^(j) = sum_l m(xi_{j-l}, xi_l) f^(j-l) g^(l),
//! ```
//!
//! i.e. the same convolution weight as a plain product of fields. With this
//! normalization the symbol cancels the quadratic terms identically on the
//! lattice, which is what `quadratic_cancellation_residual` verifies down to
//! rounding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{ordered_map, ordered_map_seq};
use crate::grid::{pairwise_sum_complex, SpectralField};
use crate::symbol::SymbolGrid;

/// The symbol-weighted convolution `P` over a fixed grid and alpha.
#[derive(Debug, Clone)]
pub struct BilinearOperator {
    symbol: SymbolGrid,
}

impl BilinearOperator {
    pub fn new(symbol: SymbolGrid) -> Self {
        Self { symbol }
    }

    pub fn symbol(&self) -> &SymbolGrid {
        &self.symbol
    }

    pub fn alpha(&self) -> f64 {
        self.symbol.alpha()
    }

    fn check_inputs(&self, f: &SpectralField, g: &SpectralField) -> Result<()> {
        if f.grid() != self.symbol.grid() || g.grid() != self.symbol.grid() {
            return Err(Error::GridMismatch);
        }
        f.require_mean_zero()?;
        g.require_mean_zero()?;
        Ok(())
    }

    fn row(&self, f: &SpectralField, g: &SpectralField, j: i64) -> Complex64 {
        let half = self.symbol.grid().max_wavenumber();
        let lo = (-half + 1).max(j - half);
        let hi = half.min(j + half - 1);
        if lo > hi {
            return Complex64::ZERO;
        }
        let mut terms = Vec::with_capacity((hi - lo + 1) as usize);
        for l in lo..=hi {
            let fv = f.coeff(j - l);
            if fv == Complex64::ZERO {
                continue;
            }
            let gv = g.coeff(l);
            if gv == Complex64::ZERO {
                continue;
            }
            terms.push(self.symbol.value(j - l, l) * fv * gv);
        }
        pairwise_sum_complex(&terms)
    }

    fn convolve(&self, f: &SpectralField, g: &SpectralField, sequential: bool) -> SpectralField {
        let grid = self.symbol.grid();
        let n = grid.n_modes();
        let to_wavenumber = |i: usize| -> i64 {
            if i <= n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let rows = if sequential {
            ordered_map_seq(n, |i| self.row(f, g, to_wavenumber(i)))
        } else {
            ordered_map(n, |i| self.row(f, g, to_wavenumber(i)))
        };
        let mut out = SpectralField::zero(grid);
        for (i, value) in rows.into_iter().enumerate() {
            out.set_coeff(to_wavenumber(i), value);
        }
        out
    }

    /// `P(f, g)`, dealiased. Inputs must share the symbol's grid and be
    /// mean-zero; the symbol's singular lines are then never weighted.
    pub fn apply(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        self.check_inputs(f, g)?;
        Ok(self.convolve(f, g, false).dealias())
    }

    /// `P(f, g)` without the output truncation. Used by the identity checks,
    /// which work with band-limited data so every product is exact on the grid.
    pub fn apply_raw(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        self.check_inputs(f, g)?;
        Ok(self.convolve(f, g, false))
    }

    /// Single-threaded `apply`, bit-identical to the parallel path; kept
    /// public for the benchmark suite and reproducibility tests.
    pub fn apply_seq(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        self.check_inputs(f, g)?;
        Ok(self.convolve(f, g, true).dealias())
    }

    /// Normal-form transform `w = u + P(u, u)`.
    pub fn transform(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(u.add(&self.apply(u, u)?))
    }

    /// The dealiased quadratic flux `u du/dx = (1/2) d/dx (u^2)`.
    fn advection(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(u.product(u)?.spatial_derivative(1).scaled(0.5))
    }

    /// Cubic remainder of the `w`-equation, as displayed term by term:
    /// `R(u) = -(1+|D|^a)[P((1+|D|^a)^{-1}(u u_x), u) + P(u, (1+|D|^a)^{-1}(u u_x))]`.
    pub fn remainder(&self, u: &SpectralField) -> Result<SpectralField> {
        let alpha = self.alpha();
        let flux = self.advection(u)?.resolvent(alpha);
        let sum = self.apply(&flux, u)?.add(&self.apply(u, &flux)?);
        Ok(sum.resolvent_inverse(alpha).scaled(-1.0))
    }

    /// Same remainder folded through the symmetry of `P`; agrees with
    /// `remainder` to rounding and serves as its internal oracle.
    pub fn remainder_symmetrized(&self, u: &SpectralField) -> Result<SpectralField> {
        let alpha = self.alpha();
        let flux = self.advection(u)?.resolvent(alpha);
        Ok(self.apply(&flux, u)?.resolvent_inverse(alpha).scaled(-2.0))
    }

    /// L2 norm of `w_t + w_x + |D|^a w_t - R(u)` with `u_t` substituted from
    /// the evolution law, together with the size of the quadratic flux it is
    /// measured against. Exact cancellation makes this pure rounding noise.
    ///
    /// Requires the data to live well inside the dealias band (half the
    /// cutoff), so that no nonlinear product is ever truncated inconsistently.
    pub fn quadratic_cancellation_residual(&self, u: &SpectralField) -> Result<(f64, f64)> {
        let grid = self.symbol.grid();
        if u.grid() != grid {
            return Err(Error::GridMismatch);
        }
        u.require_mean_zero()?;
        let required = grid.dealias_cutoff() / 2;
        let band = u.band_limit();
        if band > required {
            return Err(Error::BandLimitExceeded {
                required,
                got: band,
            });
        }
        let alpha = self.alpha();

        let flux = self.advection(u)?;
        let u_t = u
            .spatial_derivative(1)
            .add(&flux)
            .resolvent(alpha)
            .scaled(-1.0);

        let w = self.transform(u)?;
        let w_t = u_t.add(&self.apply(&u_t, u)?.add(&self.apply(u, &u_t)?));

        let lhs = w_t
            .resolvent_inverse(alpha)
            .add(&w.spatial_derivative(1))
            .sub(&self.remainder(u)?);

        Ok((lhs.sobolev_norm(0.0), flux.sobolev_norm(0.0)))
    }
}
