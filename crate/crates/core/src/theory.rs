//! Linear theory of the self-gravitating Maxwellian: Jeans wavenumber,
//! plasma dispersion function, and growth or Landau-damping rates of a
//! single Fourier mode.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DistributionFunction, GridConfig};

/// `√(4πGρ_ref) / σ`.
pub fn jeans_wavenumber(rho_ref: f64, sigma: f64, g: f64) -> Result<f64> {
    if !(rho_ref > 0.0 && sigma > 0.0 && g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Jeans wavenumber needs positive ρ_ref, σ, G (got {rho_ref}, {sigma}, {g})"
        )));
    }
    Ok((4.0 * PI * g * rho_ref).sqrt() / sigma)
}

/// `G` that places wavenumber `k` at the ratio `k / k_J`.
pub fn gravitational_constant_for(k: f64, k_over_kj: f64, rho_ref: f64, sigma: f64) -> Result<f64> {
    if !(k > 0.0 && k_over_kj > 0.0 && rho_ref > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParameter(
            "G needs positive k, k/k_J, ρ_ref, σ".into(),
        ));
    }
    let kj = k / k_over_kj;
    Ok((kj * sigma).powi(2) / (4.0 * PI * rho_ref))
}

const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for l in 2..=n {
                    let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Plasma dispersion function `Z(w) = π^{-1/2} ∫ e^{-s²} / (s - w) ds`,
/// analytically continued below the real axis.
///
/// Evaluated through `Z(w) = i ∫₀^∞ exp(iwt - t²/4) dt`, which is entire and
/// equals the Landau continuation for `Im w < 0`. The integral is cut where
/// the integrand has fallen `e^{-40}` below its peak.
pub fn plasma_z(w: Complex64) -> Result<Complex64> {
    if w.im == 0.0 || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::RealAxis(w.re));
    }
    let b = w.im;
    let peak = (-b).max(0.0) * 2.0;
    let length = 2.0 * (-b + (b * b + 40.0 + (b.min(0.0)).powi(2)).sqrt()).max(peak);
    let panels = ((length * (1.0 + w.norm()) * 2.0).ceil() as usize).max(8);
    let h = length / panels as f64;
    let rule = gauss_legendre();
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for &(x, wt) in rule {
            let t = mid + 0.5 * h * x;
            sum += wt * (Complex64::i() * w * t - t * t / 4.0).exp();
        }
    }
    Ok(Complex64::i() * sum * (0.5 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Growing,
    Damped,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Growing => "growing",
            Regime::Damped => "damped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionSolution {
    pub k_over_kj: f64,
    /// Growth rate for `Growing`, damping rate for `Damped`; always positive.
    pub gamma: f64,
    pub regime: Regime,
    /// `|(k/k_J)² - 1 - wZ(w)|` at the root.
    pub residual: f64,
    #[serde(skip)]
    pub w: Complex64,
}

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// `(k/k_J)² - 1 - wZ(w)` on `w = ±iy`.
fn dispersion_residual(ratio: f64, w: Complex64) -> Result<Complex64> {
    Ok(Complex64::new(ratio * ratio - 1.0, 0.0) - w * plasma_z(w)?)
}

/// Root of the dispersion relation on the imaginary `w` axis: `w = +iy` for
/// `k < k_J`, `w = -iy` on the continued sheet for `k > k_J`. The rate is
/// `γ = y √(8πGρ_ref) (k/k_J)`.
pub fn solve_dispersion(k_over_kj: f64, rho_ref: f64, g: f64) -> Result<DispersionSolution> {
    if k_over_kj <= 0.0 || k_over_kj == 1.0 || !k_over_kj.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "k/k_J must be positive and not 1, got {k_over_kj}"
        )));
    }
    if !(rho_ref > 0.0 && g > 0.0) {
        return Err(Error::InvalidParameter(
            "dispersion needs positive ρ_ref and G".into(),
        ));
    }
    let regime = if k_over_kj < 1.0 {
        Regime::Growing
    } else {
        Regime::Damped
    };
    let sign = if regime == Regime::Growing { 1.0 } else { -1.0 };
    let at = |y: f64| Complex64::new(0.0, sign * y);
    let real_residual = |y: f64| dispersion_residual(k_over_kj, at(y)).map(|r| r.re);

    // Damped-side values grow like e^{y²}; y ≤ 5 keeps them well conditioned.
    let y_max = if regime == Regime::Growing { 50.0 } else { 5.0 };
    let mut scan = Vec::new();
    let mut lo = 1e-9;
    let mut r_lo = real_residual(lo)?;
    scan.push((lo, r_lo));
    let mut bracket = None;
    while lo < y_max {
        let hi = (lo * 1.25).min(y_max);
        let r_hi = real_residual(hi)?;
        scan.push((hi, r_hi));
        if r_lo.signum() != r_hi.signum() {
            bracket = Some((lo, hi, r_lo));
            break;
        }
        lo = hi;
        r_lo = r_hi;
    }
    let (mut a, mut b, r_a) = bracket.ok_or(Error::NoRoot {
        ratio: k_over_kj,
        scan,
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if real_residual(mid)?.signum() == r_a.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (ra, rb) = (
        dispersion_residual(k_over_kj, at(a))?,
        dispersion_residual(k_over_kj, at(b))?,
    );
    let (y, residual) = if ra.norm() <= rb.norm() {
        (a, ra.norm())
    } else {
        (b, rb.norm())
    };
    if residual > RESIDUAL_TOLERANCE {
        return Err(Error::Physics(format!(
            "dispersion residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e} at k/k_J = {k_over_kj}"
        )));
    }
    Ok(DispersionSolution {
        k_over_kj,
        gamma: y * (8.0 * PI * g * rho_ref).sqrt() * k_over_kj,
        regime,
        residual,
        w: at(y),
    })
}

/// `k_over_kJ,gamma,regime`.
pub fn write_rates_csv<W: Write>(solutions: &[DispersionSolution], mut out: W) -> Result<()> {
    writeln!(out, "k_over_kJ,gamma,regime")?;
    for s in solutions {
        writeln!(out, "{},{},{}", s.k_over_kj, s.gamma, s.regime.label())?;
    }
    Ok(())
}

/// Perturbed Maxwellian `f_M(v)(1 + A cos kx)` with `k = 2πm/N_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumSpec {
    pub rho_ref: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub mode: usize,
}

impl EquilibriumSpec {
    pub fn new(rho_ref: f64, sigma: f64, amplitude: f64, mode: usize) -> Result<Self> {
        if !(rho_ref > 0.0 && sigma > 0.0 && amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "equilibrium needs ρ_ref > 0, σ > 0, A ≥ 0 (got {rho_ref}, {sigma}, {amplitude})"
            )));
        }
        Ok(Self {
            rho_ref,
            sigma,
            amplitude,
            mode,
        })
    }

    /// Physical wavenumber on a grid of `n` cells with `Δx = 1`.
    pub fn wavenumber(&self, nx_cells: usize) -> f64 {
        2.0 * PI * self.mode as f64 / nx_cells as f64
    }

    /// `ρ_ref / √(2πσ²) exp(-v² / 2σ²)`.
    pub fn maxwellian(&self, v: f64) -> f64 {
        self.rho_ref / (2.0 * PI * self.sigma * self.sigma).sqrt()
            * (-v * v / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Fraction of the Maxwellian's mass that the velocity grid misses, from the
/// midpoint sum over the cells.
pub fn truncation_loss(spec: &EquilibriumSpec, grid: &GridConfig) -> f64 {
    let dv = grid.delta_v_f64();
    let captured: f64 = (0..grid.nv_cells())
        .map(|k| spec.maxwellian(grid.velocity_f64(k)) * dv)
        .sum();
    1.0 - captured / spec.rho_ref
}

/// Samples the perturbed Maxwellian at cell centers.
pub fn build_initial_condition(
    spec: &EquilibriumSpec,
    grid: &GridConfig,
) -> Result<DistributionFunction> {
    let n = grid.nx_cells();
    if spec.mode > n / 2 {
        return Err(Error::InvalidParameter(format!(
            "mode {} is above the Nyquist mode {} of the grid",
            spec.mode,
            n / 2
        )));
    }
    let loss = truncation_loss(spec, grid);
    if loss > 0.01 {
        log::warn!(
            "velocity grid |v| < {} truncates {:.2}% of the Maxwellian mass (σ = {})",
            grid.v_max(),
            100.0 * loss,
            spec.sigma
        );
    }
    let k = spec.wavenumber(n);
    DistributionFunction::from_fn(grid.clone(), |j, kv| {
        spec.maxwellian(grid.velocity_f64(kv)) * (1.0 + spec.amplitude * (k * j as f64).cos())
    })
}
