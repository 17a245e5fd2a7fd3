//! Seeded helpers shared by the test suites: reproducible random fields.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridSpec, SpectralField};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real mean-zero field supported on wavenumbers `1..=band`, with a
/// mild spectral decay so the profiles look like smooth data.
pub fn random_mean_zero_field(grid: GridSpec, band: i64, seed: u64, amplitude: f64) -> SpectralField {
    assert!(band >= 1 && band < grid.max_wavenumber());
    let mut r = rng(seed);
    let mut modes = Vec::with_capacity(band as usize);
    for j in 1..=band {
        let decay = 1.0 / (1.0 + (j as f64 / 4.0).powi(2));
        let c = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        modes.push((j, amplitude * decay * c));
    }
    SpectralField::from_modes(grid, &modes).expect("band fits on grid")
}
