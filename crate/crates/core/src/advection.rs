//! Reservoir-method advection on the amplitude-encoded state.
//!
//! Configuration advection moves row `k` one cell along `x` at each of its
//! schedule events. Velocity advection accumulates the CFL counter `D_j` once
//! per characteristic time and moves column `j` by the integer part of `D_j`.
//! Both are permutations of amplitudes.

use log::warn;

use crate::error::{Error, Result};
use crate::grid::{to_f64, GridConfig};
use crate::schedule::Event;
use crate::statevector::{QuantumState, RegisterSlice, Section};

/// Amplitudes at or below this magnitude may wrap across the velocity boundary.
pub const WRAP_TOLERANCE: f64 = 1e-12;

/// Velocity-space CFL counters `D_j`, one per position cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CflVelocityCounters {
    d: Vec<f64>,
}

impl CflVelocityCounters {
    pub fn new(grid: &GridConfig) -> Self {
        Self {
            d: vec![0.0; grid.nx_cells()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    /// Adds `F_j Δx / (max|v| Δv)` to each counter and returns the integer
    /// shift of every column (`floor` for positive, `ceil` for negative
    /// counters), leaving the fractional remainder behind.
    pub fn accumulate(&mut self, force: &ForceField, grid: &GridConfig) -> Result<Vec<i64>> {
        if force.len() != self.d.len() {
            return Err(Error::InvalidParameter(format!(
                "force has {} cells, grid has {}",
                force.len(),
                self.d.len()
            )));
        }
        let gain = velocity_gain(grid);
        let mut shifts = Vec::with_capacity(self.d.len());
        for (j, (d, f)) in self.d.iter_mut().zip(force.values()).enumerate() {
            *d += f * gain;
            let shift = if *d > 0.0 { d.floor() } else { d.ceil() };
            *d -= shift;
            // also rejects NaN
            if d.abs() >= 1.0 || d.is_nan() {
                return Err(Error::CflViolation {
                    column: j,
                    value: *d,
                });
            }
            shifts.push(shift as i64);
        }
        Ok(shifts)
    }
}

/// `Δx / (max|v_k| Δv)`: counter gain per unit force per velocity step.
pub fn velocity_gain(grid: &GridConfig) -> f64 {
    grid.delta_x() / (to_f64(grid.max_speed()) * grid.delta_v_f64())
}

/// Acceleration per unit mass at each position cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    f: Vec<f64>,
}

impl ForceField {
    pub fn zeros(grid: &GridConfig) -> Self {
        Self {
            f: vec![0.0; grid.nx_cells()],
        }
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Physics(format!("non-finite force value {bad}")));
        }
        Ok(Self { f: values })
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `F_s = max_j |F_j|`.
    pub fn max_abs(&self) -> f64 {
        self.f.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Velocity resolution demanded by a force of strength `F_s`:
/// `V² / (F_s Δx)`. Infinite for a vanishing force.
pub fn required_velocity_cells(grid: &GridConfig, force: &ForceField) -> f64 {
    let v = to_f64(grid.v_max());
    v * v / (force.max_abs() * grid.delta_x())
}

/// True when `N_v` meets the resolution requirement for `force`; logs a
/// warning otherwise.
pub fn check_resolution(grid: &GridConfig, force: &ForceField) -> bool {
    let required = required_velocity_cells(grid, force);
    let ok = force.max_abs() == 0.0 || grid.nv_cells() as f64 >= required;
    if !ok {
        warn!(
            "velocity grid under-resolved: N_v = {} but V^2/(F_s dx) = {required:.1}",
            grid.nv_cells()
        );
    }
    ok
}

/// Options shared by the advection steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdvectionOptions {
    /// Abort on velocity shifts that would wrap non-negligible amplitude.
    pub strict_wrap: bool,
}

impl Default for AdvectionOptions {
    fn default() -> Self {
        Self { strict_wrap: true }
    }
}

/// Finds content that a shift of column `j` by `shift` would push across
/// `k = 0` or `k = N_v - 1`.
pub(crate) fn wrap_check(
    column: usize,
    shift: i64,
    nv: usize,
    mut magnitude_at: impl FnMut(usize) -> f64,
) -> Result<()> {
    let crossing: Box<dyn Iterator<Item = usize>> = if shift > 0 {
        Box::new(nv.saturating_sub(shift as usize)..nv)
    } else {
        Box::new(0..(shift.unsigned_abs() as usize).min(nv))
    };
    for k in crossing {
        let m = magnitude_at(k);
        if m > WRAP_TOLERANCE {
            return Err(Error::WrapViolation {
                column,
                shift,
                magnitude: m,
            });
        }
    }
    Ok(())
}

/// Velocity advection: updates `D` with `force` and shifts each column
/// `|j⟩` of `R_v` by its integer part. Returns the applied shifts.
pub fn velocity_advection_step(
    state: &mut QuantumState,
    counters: &mut CflVelocityCounters,
    force: &ForceField,
    grid: &GridConfig,
    options: AdvectionOptions,
) -> Result<Vec<i64>> {
    let shifts = counters.accumulate(force, grid)?;
    apply_velocity_shifts(state, &shifts, grid, options)?;
    Ok(shifts)
}

/// Applies precomputed column shifts to `R_v`, controlled on `R_x = |j⟩`.
pub fn apply_velocity_shifts(
    state: &mut QuantumState,
    shifts: &[i64],
    grid: &GridConfig,
    options: AdvectionOptions,
) -> Result<()> {
    let rx = RegisterSlice::position(grid.n_x() as usize);
    let rv = RegisterSlice::velocity(grid.n_x() as usize, grid.n_v() as usize);
    let nv = grid.nv_cells();
    state.set_section(Section::VelocityAdvection);
    for (j, &shift) in shifts.iter().enumerate() {
        if shift == 0 {
            continue;
        }
        if options.strict_wrap {
            wrap_check(j, shift, nv, |k| {
                state.amplitude(grid.basis_index(j, k)).norm()
            })?;
        }
        state.apply_controlled_increment(&rx, j, &rv, shift)?;
    }
    Ok(())
}

/// Configuration advection for one event: each listed row moves one cell in
/// the direction of its velocity, periodically in `x`.
pub fn configuration_advection_step(
    state: &mut QuantumState,
    event: &Event,
    grid: &GridConfig,
) -> Result<()> {
    let rx = RegisterSlice::position(grid.n_x() as usize);
    let rv = RegisterSlice::velocity(grid.n_x() as usize, grid.n_v() as usize);
    state.set_section(Section::ConfigurationAdvection);
    for &k in &event.rows {
        let direction = if grid.velocity_of(k)? > 0.into() {
            1
        } else {
            -1
        };
        state.apply_controlled_increment(&rv, k, &rx, direction)?;
    }
    Ok(())
}

/// Runs a contiguous block of events with a fixed force: velocity advection
/// first at velocity-step events, then configuration advection.
pub fn run_events(
    state: &mut QuantumState,
    events: &[Event],
    counters: &mut CflVelocityCounters,
    force: &ForceField,
    grid: &GridConfig,
    options: AdvectionOptions,
) -> Result<()> {
    for event in events {
        if event.velocity_step {
            velocity_advection_step(state, counters, force, grid, options)?;
        }
        configuration_advection_step(state, event, grid)?;
    }
    Ok(())
}
