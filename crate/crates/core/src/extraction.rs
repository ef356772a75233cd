//! Recovery of the lowest `S` Fourier modes of the density.
//!
//! The extraction circuit is `H^{⊗n_v}` on `R_v`, the QFT on `R_x` and an
//! increment of `R_x` by `S/2`. Post-selecting `R_v = 0` leaves the
//! amplitude-encoded density, and post-selecting the leading `n_x - s`
//! qubits of `R_x` to zero leaves wavenumbers `-S/2 … S/2-1` in the last
//! `s` qubits. Undoing the amplitude prefactor `1/(Δv √N_v M)` and the two
//! renormalizations gives physically scaled modes.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridConfig, Normalization};
use crate::statevector::{GateCounter, QuantumState, RegisterSlice, Section};
use crate::tomography::{self, TomographyPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Shots,
    /// Transform of a classical density.
    Classical,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::Shots => "shots",
            Provenance::Classical => "classical",
        })
    }
}

/// Density modes `ρ̃_m` for `m ∈ {-S/2, …, S/2-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDensity {
    window: usize,
    modes: Vec<(i64, Complex64)>,
    provenance: Provenance,
    p_v: f64,
    p_x: f64,
}

impl FourierDensity {
    /// Builds a window from modes listed in ascending wavenumber order.
    pub fn new(
        window: usize,
        modes: Vec<Complex64>,
        provenance: Provenance,
        p_v: f64,
        p_x: f64,
    ) -> Result<Self> {
        if modes.len() != window {
            return Err(Error::InvalidModeWindow(format!(
                "{} modes for S = {window}",
                modes.len()
            )));
        }
        let half = (window / 2) as i64;
        let modes = modes
            .into_iter()
            .enumerate()
            .map(|(t, v)| (t as i64 - half, v))
            .collect();
        Ok(Self {
            window,
            modes,
            provenance,
            p_v,
            p_x,
        })
    }

    /// `S`.
    pub fn window(&self) -> usize {
        self.window
    }

    /// `(m, ρ̃_m)` in ascending `m`.
    pub fn modes(&self) -> &[(i64, Complex64)] {
        &self.modes
    }

    pub fn mode(&self, m: i64) -> Option<Complex64> {
        let half = (self.window / 2) as i64;
        if m < -half || m >= half {
            return None;
        }
        Some(self.modes[(m + half) as usize].1)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Probability of `R_v = 0`.
    pub fn p_v(&self) -> f64 {
        self.p_v
    }

    /// Probability of the leading `n_x - s` qubits of `R_x` being zero given
    /// `R_v = 0`.
    pub fn p_x(&self) -> f64 {
        self.p_x
    }

    /// `|ρ̃_m − conj(ρ̃_{-m})|` over pairs present in the window.
    pub fn reality_defect(&self) -> f64 {
        let half = (self.window / 2) as i64;
        (1..half)
            .map(|m| (self.mode(m).unwrap() - self.mode(-m).unwrap().conj()).norm())
            .fold(0.0, f64::max)
    }
}

fn window_bits(grid: &GridConfig, window: usize) -> Result<u32> {
    if !window.is_power_of_two() || window < 2 || window > grid.nx_cells() {
        return Err(Error::InvalidModeWindow(format!(
            "S = {window} must be a power of two in [2, {}]",
            grid.nx_cells()
        )));
    }
    Ok(window.trailing_zeros())
}

/// Applies the extraction circuit (before any measurement) to a copy whose
/// gate counter starts empty.
fn extraction_circuit(
    state: &QuantumState,
    grid: &GridConfig,
    window: usize,
) -> Result<QuantumState> {
    let n_x = grid.n_x() as usize;
    let rx = RegisterSlice::position(n_x);
    let rv = RegisterSlice::velocity(n_x, grid.n_v() as usize);
    let mut s = state.clone();
    s.take_counter();
    s.set_section(Section::Extraction);
    for q in rv.qubits() {
        s.apply_h(q)?;
    }
    s.apply_qft(&rx)?;
    s.apply_increment(&rx, (window / 2) as i64)?;
    Ok(s)
}

struct Postselected {
    state: QuantumState,
    p_v: f64,
    p_x: f64,
}

fn postselect_window(mut s: QuantumState, grid: &GridConfig, s_bits: u32) -> Result<Postselected> {
    let n_x = grid.n_x() as usize;
    let rv = RegisterSlice::velocity(n_x, grid.n_v() as usize);
    let rv_qubits: Vec<usize> = rv.qubits().collect();
    let p_v = s.postselect(&rv_qubits, &vec![false; rv_qubits.len()])?;
    let lead: Vec<usize> = (0..n_x - s_bits as usize).collect();
    let p_x = if lead.is_empty() {
        1.0
    } else {
        s.postselect(&lead, &vec![false; lead.len()])?
    };
    Ok(Postselected { state: s, p_v, p_x })
}

fn amplitude_scale(grid: &GridConfig, norm: Normalization) -> f64 {
    grid.delta_v_f64() * (grid.nv_cells() as f64).sqrt() * norm.value()
}

/// Exact modes read from the post-selected amplitudes.
pub fn extract_modes_exact(
    state: &QuantumState,
    grid: &GridConfig,
    window: usize,
    norm: Normalization,
) -> Result<FourierDensity> {
    Ok(extract_modes_exact_counted(state, grid, window, norm)?.0)
}

/// [`extract_modes_exact`] plus the gates of the extraction circuit.
pub fn extract_modes_exact_counted(
    state: &QuantumState,
    grid: &GridConfig,
    window: usize,
    norm: Normalization,
) -> Result<(FourierDensity, GateCounter)> {
    let s_bits = window_bits(grid, window)?;
    let mut post = postselect_window(extraction_circuit(state, grid, window)?, grid, s_bits)?;
    let scale = amplitude_scale(grid, norm) * (post.p_v * post.p_x).sqrt();
    let modes = (0..window)
        .map(|t| post.state.amplitude(grid.basis_index(t, 0)) * scale)
        .collect();
    let modes = FourierDensity::new(window, modes, Provenance::Exact, post.p_v, post.p_x)?;
    Ok((modes, post.state.take_counter()))
}

/// Exact success probabilities `(p_v, p_x)` of the two post-selections.
pub fn postselection_probabilities(
    state: &QuantumState,
    grid: &GridConfig,
    window: usize,
) -> Result<(f64, f64)> {
    let s_bits = window_bits(grid, window)?;
    let post = postselect_window(extraction_circuit(state, grid, window)?, grid, s_bits)?;
    Ok((post.p_v, post.p_x))
}

/// Settings for measurement-based extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotSettings {
    /// Raw shots for the acceptance-rate estimate, and accepted shots per
    /// tomography basis.
    pub shots: u64,
    pub seed: u64,
    /// Conserved total mass `Σ_j ρ_j Δx`, which fixes `ρ̃_0 = mass / √N_x`.
    pub total_mass: f64,
}

/// Modes estimated from simulated measurements. The post-selection
/// probabilities come from the acceptance rate of `shots` raw runs; the
/// surviving `s`-qubit state is reconstructed by tomography with `shots`
/// accepted runs per basis; the global phase and scale are fixed by the known
/// zero mode.
pub fn extract_modes_shots(
    state: &QuantumState,
    grid: &GridConfig,
    window: usize,
    settings: ShotSettings,
) -> Result<FourierDensity> {
    Ok(extract_modes_shots_counted(state, grid, window, settings)?.0)
}

/// [`extract_modes_shots`] plus the gates of the extraction circuit.
pub fn extract_modes_shots_counted(
    state: &QuantumState,
    grid: &GridConfig,
    window: usize,
    settings: ShotSettings,
) -> Result<(FourierDensity, GateCounter)> {
    if settings.shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let s_bits = window_bits(grid, window)?;
    let circuit = extraction_circuit(state, grid, window)?;
    let gates = circuit.counter().clone();

    let n_v = grid.n_v() as usize;
    let lead_mask = ((1usize << (grid.n_x() - s_bits)) - 1) << (s_bits as usize + n_v);
    let rv_mask = (1usize << n_v) - 1;
    let raw = circuit.sample_counts(settings.shots, settings.seed);
    let (mut rv_zero, mut accepted) = (0u64, 0u64);
    for (&outcome, &count) in &raw {
        if outcome & rv_mask == 0 {
            rv_zero += count;
            if outcome & lead_mask == 0 {
                accepted += count;
            }
        }
    }
    if accepted == 0 {
        return Err(Error::NoAcceptedShots);
    }
    let p_v = rv_zero as f64 / settings.shots as f64;
    let p_x = accepted as f64 / rv_zero as f64;

    let post = postselect_window(circuit, grid, s_bits)?;
    let conditional: Vec<Complex64> = (0..window)
        .map(|t| post.state.amplitude(grid.basis_index(t, 0)))
        .collect();
    let reduced = QuantumState::from_amplitudes(conditional)?;
    let plan = TomographyPlan::new(s_bits as usize, settings.shots)?;
    let counts = tomography::collect(&reduced, &plan, settings.seed.wrapping_add(1))?;
    let estimate = tomography::reconstruct(&counts, &plan)?;

    let zero = estimate.amplitudes()[window / 2];
    if zero.norm() == 0.0 {
        return Err(Error::Physics(
            "reconstructed zero mode vanishes; cannot fix the scale".into(),
        ));
    }
    let anchor = Complex64::new(settings.total_mass / (grid.nx_cells() as f64).sqrt(), 0.0) / zero;
    let modes = estimate.amplitudes().iter().map(|a| a * anchor).collect();
    Ok((
        FourierDensity::new(window, modes, Provenance::Shots, p_v, p_x)?,
        gates,
    ))
}
