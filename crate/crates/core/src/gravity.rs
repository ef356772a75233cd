//! Periodic Poisson solve through the discrete Green's function.
//!
//! Transforms use the QFT sign convention,
//! `ρ̃_k = N^{-1/2} Σ_j ρ_j e^{+2πijk/N}` and
//! `φ_j = N^{-1/2} Σ_k φ̃_k e^{-2πijk/N}`. The Green's function is the exact
//! inverse of the central-difference Laplacian, and the zero mode is dropped.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::advection::ForceField;
use crate::error::{Error, Result};
use crate::extraction::FourierDensity;
use crate::grid::GridConfig;

/// `-πG / sin²(πk/N)`.
pub fn greens_1d(k: i64, n: usize, g: f64) -> Result<f64> {
    if k.rem_euclid(n as i64) == 0 {
        return Err(Error::ZeroMode);
    }
    let s = (PI * k as f64 / n as f64).sin();
    Ok(-PI * g / (s * s))
}

/// `-πG / (sin²(πk_x/N) + sin²(πk_y/N) + sin²(πk_z/N))`.
pub fn greens_3d(kx: i64, ky: i64, kz: i64, n: usize, g: f64) -> Result<f64> {
    let n_i = n as i64;
    if kx.rem_euclid(n_i) == 0 && ky.rem_euclid(n_i) == 0 && kz.rem_euclid(n_i) == 0 {
        return Err(Error::ZeroMode);
    }
    let s2 = |k: i64| (PI * k as f64 / n as f64).sin().powi(2);
    Ok(-PI * g / (s2(kx) + s2(ky) + s2(kz)))
}

/// Gravitational potential with zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    phi: Vec<f64>,
}

impl PotentialField {
    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    /// `F_j = -(φ_{j+1} - φ_{j-1}) / (2Δx)`, periodic.
    pub fn force(&self, grid: &GridConfig) -> ForceField {
        let n = self.phi.len();
        let dx = grid.delta_x();
        let f = (0..n)
            .map(|j| -(self.phi[(j + 1) % n] - self.phi[(j + n - 1) % n]) / (2.0 * dx))
            .collect();
        ForceField::new(f).expect("finite potential gives finite force")
    }
}

/// Forward transform with the `e^{+2πijk/N}` kernel.
pub fn forward_dft(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let norm = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            values
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    v * Complex64::from_polar(norm, 2.0 * PI * ((j * k) % n) as f64 / n as f64)
                })
                .sum()
        })
        .collect()
}

/// Real part of the inverse transform with the `e^{-2πijk/N}` kernel.
fn inverse_dft_real(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    let norm = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|j| {
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm_sqr() > 0.0)
                .map(|(k, c)| {
                    (c * Complex64::from_polar(norm, -2.0 * PI * ((j * k) % n) as f64 / n as f64))
                        .re
                })
                .sum()
        })
        .collect()
}

/// Potential from a sparse set of signed density modes. A mode whose
/// conjugate partner `-m` is absent contributes its partner too, so the
/// potential is real.
pub fn potential_from_mode_map(
    modes: &BTreeMap<i64, Complex64>,
    grid: &GridConfig,
) -> Result<PotentialField> {
    let n = grid.nx_cells();
    let g = grid.gravitational_constant();
    let mut phi_hat = vec![Complex64::new(0.0, 0.0); n];
    for (&m, &rho) in modes {
        let idx = m.rem_euclid(n as i64);
        if idx == 0 {
            continue;
        }
        let green = greens_1d(m, n, g)?;
        phi_hat[idx as usize] = green * rho;
        let partner = (-m).rem_euclid(n as i64);
        if partner != idx && !modes.keys().any(|&p| p.rem_euclid(n as i64) == partner) {
            phi_hat[partner as usize] = green * rho.conj();
        }
    }
    Ok(PotentialField {
        phi: inverse_dft_real(&phi_hat),
    })
}

/// Force from the extracted window `m ∈ {-S/2, …, S/2-1}`, zero mode dropped.
pub fn force_from_modes(modes: &FourierDensity, grid: &GridConfig) -> Result<ForceField> {
    let map: BTreeMap<i64, Complex64> = modes.modes().iter().map(|&(m, v)| (m, v)).collect();
    Ok(potential_from_mode_map(&map, grid)?.force(grid))
}

/// Potential from the full density (all modes `1..N-1`).
pub fn potential_full_density(rho: &[f64], grid: &GridConfig) -> Result<PotentialField> {
    let n = grid.nx_cells();
    if rho.len() != n {
        return Err(Error::InvalidParameter(format!(
            "density has {} cells, grid has {n}",
            rho.len()
        )));
    }
    let rho_hat = forward_dft(rho);
    let map: BTreeMap<i64, Complex64> = (1..n as i64).map(|k| (k, rho_hat[k as usize])).collect();
    potential_from_mode_map(&map, grid)
}

pub fn force_full_density(rho: &[f64], grid: &GridConfig) -> Result<ForceField> {
    Ok(potential_full_density(rho, grid)?.force(grid))
}
