//! Partial energies `E_k`, the modified energy `E^(N)`, and the conserved
//! quadratic functional.
//!
//! The k-th partial energy combines the weighted quadratic term with a cross
//! term against `P(u, u)`:
//!
//! ```text
//! E_k = || d^k (1+|D|^a)^{1/2} u ||^2
//!       + 2 < d^k (1+|D|^a)^{1/2} u , d^k (1+|D|^a)^{1/2} P(u,u) >,
//! ```
//!
//! and `E^(N) = sum_{k=1..N} E_k + ||(1+|D|^a)^{1/2} u||^2`. The pure
//! `P(u,u)` square from the binomial expansion is deliberately left out of
//! `E_k` (it is not comparable to the `H^{k+a/2}` norm); `discarded_term`
//! computes it for diagnostics only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, SpectralField};
use crate::normal_form::BilinearOperator;

/// Per-k decomposition of the modified energy.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyBreakdown {
    pub k_values: Vec<u32>,
    pub quadratic_part_k: Vec<f64>,
    pub cross_part_k: Vec<f64>,
    /// `||(1+|D|^a)^{1/2} u||^2`, the conserved functional.
    pub zero_level: f64,
    /// `zero_level + sum_k (quadratic_k + cross_k)`, summed in index order.
    pub total: f64,
}

/// `< d^k (1+|D|^a)^{1/2} f , d^k (1+|D|^a)^{1/2} g >` as a spectral sum
/// with fixed summation order.
pub fn weighted_inner(f: &SpectralField, g: &SpectralField, alpha: f64, k: u32) -> f64 {
    assert_eq!(f.grid(), g.grid(), "weighted inner product across grids");
    let grid = f.grid();
    let terms: Vec<f64> = grid
        .wavenumbers()
        .map(|j| {
            let xi = grid.frequency(j);
            let w = xi.powi(2 * k as i32) * (1.0 + xi.abs().powf(alpha));
            w * (f.coeff(j) * g.coeff(j).conj()).re
        })
        .collect();
    grid.domain_length() * pairwise_sum(&terms)
}

/// The pair `(quadratic, cross)` making up `E_k = quadratic + cross`.
pub fn partial_energy(op: &BilinearOperator, u: &SpectralField, k: u32) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::InvalidParameter(
            "partial energy needs k >= 1".into(),
        ));
    }
    let alpha = op.alpha();
    let quadratic = u.weighted_energy_norm(alpha, k).powi(2);
    let cross = 2.0 * weighted_inner(u, &op.apply(u, u)?, alpha, k);
    Ok((quadratic, cross))
}

/// Assemble `E^(N)` with its per-k breakdown.
pub fn modified_energy(
    op: &BilinearOperator,
    u: &SpectralField,
    big_n: u32,
) -> Result<EnergyBreakdown> {
    if big_n < 2 {
        return Err(Error::InvalidParameter(format!(
            "modified energy needs N >= 2, got {big_n}"
        )));
    }
    let p_uu = op.apply(u, u)?;
    let alpha = op.alpha();
    let mut k_values = Vec::with_capacity(big_n as usize);
    let mut quadratic_part_k = Vec::with_capacity(big_n as usize);
    let mut cross_part_k = Vec::with_capacity(big_n as usize);
    let zero_level = conserved_functional(u, alpha);
    let mut total = zero_level;
    for k in 1..=big_n {
        let quadratic = u.weighted_energy_norm(alpha, k).powi(2);
        let cross = 2.0 * weighted_inner(u, &p_uu, alpha, k);
        total += quadratic + cross;
        k_values.push(k);
        quadratic_part_k.push(quadratic);
        cross_part_k.push(cross);
    }
    Ok(EnergyBreakdown {
        k_values,
        quadratic_part_k,
        cross_part_k,
        zero_level,
        total,
    })
}

/// `||(1+|D|^a)^{1/2} u||^2`, conserved along solutions of the evolution law.
pub fn conserved_functional(u: &SpectralField, alpha: f64) -> f64 {
    let grid = u.grid();
    let terms: Vec<f64> = grid
        .wavenumbers()
        .map(|j| {
            let xi = grid.frequency(j);
            (1.0 + xi.abs().powf(alpha)) * u.coeff(j).norm_sqr()
        })
        .collect();
    grid.domain_length() * pairwise_sum(&terms)
}

/// `|| d^k (1+|D|^a)^{1/2} P(u,u) ||^2`: the term dropped from `E_k`,
/// computed only as a diagnostic and never added to the energy.
pub fn discarded_term(op: &BilinearOperator, u: &SpectralField, k: u32) -> Result<f64> {
    let p_uu = op.apply(u, u)?;
    Ok(p_uu.weighted_energy_norm(op.alpha(), k).powi(2))
}

/// Instantaneous `d/dt ||u||_{H^s}^2 = 2 <u_t, u>_{H^s}` given the time
/// derivative of the state.
pub fn hs_rate(u: &SpectralField, u_t: &SpectralField, s: f64) -> f64 {
    assert_eq!(u.grid(), u_t.grid());
    let grid = u.grid();
    let terms: Vec<f64> = grid
        .wavenumbers()
        .map(|j| {
            let xi = grid.frequency(j);
            let w = (1.0 + xi * xi).powf(s);
            2.0 * w * (u_t.coeff(j) * u.coeff(j).conj()).re
        })
        .collect();
    grid.domain_length() * pairwise_sum(&terms)
}
