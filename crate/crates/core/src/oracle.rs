//! Classical reservoir method on the sampled distribution, sharing the event
//! schedule with the quantum pipeline. Every step is a permutation of cells.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::advection::{wrap_check, CflVelocityCounters, ForceField};
use crate::error::{Error, Result};
use crate::extraction::{FourierDensity, Provenance};
use crate::gravity::{force_from_modes, force_full_density, forward_dft};
use crate::grid::{DistributionFunction, GridConfig};
use crate::schedule::{Event, EventSchedule};

/// Rotates each listed row one cell in the direction of its velocity.
pub fn oracle_config_shift(f: &mut DistributionFunction, rows: &[usize]) -> Result<()> {
    let grid = f.grid().clone();
    let nx = grid.nx_cells();
    for &k in rows {
        let positive = grid.velocity_of(k)? > 0.into();
        let row = &mut f.values_mut()[k * nx..(k + 1) * nx];
        if positive {
            row.rotate_right(1);
        } else {
            row.rotate_left(1);
        }
    }
    Ok(())
}

/// Moves column `j` from `k` to `k + shifts[j]`. In strict mode content may
/// not cross the velocity boundary unless `|f| / norm` is negligible, and
/// whatever crosses is dropped; otherwise the shift is modular, like the
/// circuit.
pub fn oracle_velocity_shift(
    f: &mut DistributionFunction,
    shifts: &[i64],
    strict: bool,
    norm: f64,
) -> Result<()> {
    let grid = f.grid().clone();
    let (nx, nv) = (grid.nx_cells(), grid.nv_cells());
    if shifts.len() != nx {
        return Err(Error::InvalidParameter(format!(
            "{} shifts for {nx} columns",
            shifts.len()
        )));
    }
    let values = f.values_mut();
    let mut column = vec![0.0; nv];
    for (j, &shift) in shifts.iter().enumerate() {
        if shift == 0 {
            continue;
        }
        for (k, c) in column.iter_mut().enumerate() {
            *c = values[k * nx + j];
        }
        if strict {
            wrap_check(j, shift, nv, |k| column[k].abs() / norm)?;
        }
        for (k, &c) in column.iter().enumerate() {
            let target = k as i64 + shift;
            let dest = if strict {
                if !(0..nv as i64).contains(&target) {
                    continue;
                }
                target as usize
            } else {
                target.rem_euclid(nv as i64) as usize
            };
            values[dest * nx + j] = c;
        }
        if strict {
            // cells vacated by the shift
            let vacated: Box<dyn Iterator<Item = usize>> = if shift > 0 {
                Box::new(0..(shift as usize).min(nv))
            } else {
                Box::new(nv.saturating_sub(shift.unsigned_abs() as usize)..nv)
            };
            for k in vacated {
                values[k * nx + j] = 0.0;
            }
        }
    }
    Ok(())
}

/// `A_m = (2/N) Σ_j (ρ_j − ρ̄) e^{−2πimj/N}`, the one-sided Fourier amplitude
/// of the density fluctuation.
pub fn fourier_amplitude(density: &[f64], m: i64) -> Complex64 {
    let n = density.len();
    let mean = density.iter().sum::<f64>() / n as f64;
    density
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let phase = -2.0 * PI * ((m * j as i64).rem_euclid(n as i64)) as f64 / n as f64;
            (r - mean) * Complex64::from_polar(2.0 / n as f64, phase)
        })
        .sum()
}

/// Exact window `m ∈ {-S/2, …, S/2-1}` of a classical density.
pub fn classical_modes(density: &[f64], window: usize) -> Result<FourierDensity> {
    let n = density.len();
    if !window.is_power_of_two() || window < 2 || window > n {
        return Err(Error::InvalidModeWindow(format!(
            "S = {window} for {n} cells"
        )));
    }
    let hat = forward_dft(density);
    let half = (window / 2) as i64;
    let modes = (-half..half)
        .map(|m| hat[m.rem_euclid(n as i64) as usize])
        .collect();
    FourierDensity::new(window, modes, Provenance::Classical, 1.0, 1.0)
}

/// Source of the force during velocity advection.
#[derive(Debug, Clone, PartialEq)]
pub enum GravityModel {
    None,
    Fixed(ForceField),
    /// One force per epoch; the last entry repeats.
    Prescribed(Vec<ForceField>),
    /// Self-gravity of the truncated density window `S`, or of the full
    /// density when `None`.
    SelfGravity {
        window: Option<usize>,
    },
}

/// Classical reservoir state stepped one characteristic time at a time.
/// The force for epoch `n > 0` is computed from the state after epoch
/// `n - 1`; epoch 0 uses the initial distribution.
#[derive(Debug, Clone)]
pub struct Reservoir {
    f: DistributionFunction,
    counters: CflVelocityCounters,
    gravity: GravityModel,
    force: ForceField,
    strict: bool,
    norm: f64,
    next_epoch: usize,
}

impl Reservoir {
    pub fn new(f0: DistributionFunction, gravity: GravityModel, strict: bool) -> Result<Self> {
        let norm = f0.normalization()?.value();
        let counters = CflVelocityCounters::new(f0.grid());
        let mut r = Self {
            force: ForceField::zeros(f0.grid()),
            f: f0,
            counters,
            gravity,
            strict,
            norm,
            next_epoch: 0,
        };
        r.force = r.force_for(0)?;
        Ok(r)
    }

    fn force_for(&self, epoch: usize) -> Result<ForceField> {
        let grid = self.f.grid();
        match &self.gravity {
            GravityModel::None => Ok(ForceField::zeros(grid)),
            GravityModel::Fixed(f) => Ok(f.clone()),
            GravityModel::Prescribed(list) => list
                .get(epoch)
                .or(list.last())
                .cloned()
                .ok_or_else(|| Error::InvalidParameter("empty prescribed force list".into())),
            GravityModel::SelfGravity { window: None } => {
                force_full_density(&self.f.density(), grid)
            }
            GravityModel::SelfGravity { window: Some(s) } => {
                force_from_modes(&classical_modes(&self.f.density(), *s)?, grid)
            }
        }
    }

    pub fn distribution(&self) -> &DistributionFunction {
        &self.f
    }

    pub fn grid(&self) -> &GridConfig {
        self.f.grid()
    }

    /// Force that the next epoch will apply.
    pub fn force(&self) -> &ForceField {
        &self.force
    }

    pub fn counters(&self) -> &CflVelocityCounters {
        &self.counters
    }

    /// Index of the epoch that [`step_epoch`](Self::step_epoch) runs next.
    pub fn next_epoch(&self) -> usize {
        self.next_epoch
    }

    /// Velocity then configuration advection for one event.
    pub fn apply_event(&mut self, event: &Event) -> Result<()> {
        if event.velocity_step {
            let grid = self.f.grid().clone();
            let shifts = self.counters.accumulate(&self.force, &grid)?;
            oracle_velocity_shift(&mut self.f, &shifts, self.strict, self.norm)?;
        }
        oracle_config_shift(&mut self.f, &event.rows)
    }

    /// Runs the events of the next epoch, then refreshes the force.
    pub fn step_epoch(&mut self, schedule: &EventSchedule) -> Result<()> {
        let n = self.next_epoch;
        if n > schedule.num_epochs() {
            return Err(Error::InvalidParameter(format!(
                "epoch {n} lies beyond the schedule horizon"
            )));
        }
        for event in schedule.epoch(n) {
            self.apply_event(event)?;
        }
        self.next_epoch += 1;
        self.force = self.force_for(self.next_epoch)?;
        Ok(())
    }
}

/// Per-epoch record of a classical run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub epoch: usize,
    pub density: Vec<f64>,
    /// `A_m` for `m = 0 … N_x/2`.
    pub amplitudes: Vec<Complex64>,
}

/// Runs epochs `0 … last_epoch` and records the density and `A_m` after each.
pub fn oracle_run(
    f0: DistributionFunction,
    schedule: &EventSchedule,
    gravity: GravityModel,
    last_epoch: usize,
) -> Result<Vec<OracleSample>> {
    let mut r = Reservoir::new(f0, gravity, true)?;
    let mut out = Vec::with_capacity(last_epoch + 1);
    for _ in 0..=last_epoch {
        let epoch = r.next_epoch();
        r.step_epoch(schedule)?;
        let density = r.distribution().density();
        let amplitudes = (0..=(density.len() / 2) as i64)
            .map(|m| fourier_amplitude(&density, m))
            .collect();
        out.push(OracleSample {
            epoch,
            density,
            amplitudes,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rational;
    use crate::schedule::build_schedule;

    fn grid(n_x: u32, n_v: u32) -> GridConfig {
        GridConfig::new(n_x, n_v, Rational::new(1, 1), 1.0).unwrap()
    }

    fn sorted(f: &DistributionFunction) -> Vec<f64> {
        let mut v = f.values().to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn empty_row_set_is_identity() {
        let g = grid(3, 2);
        let mut f = DistributionFunction::from_fn(g, |j, k| (j + 10 * k) as f64).unwrap();
        let before = f.clone();
        oracle_config_shift(&mut f, &[]).unwrap();
        assert_eq!(f, before);
    }

    #[test]
    fn config_shift_direction_and_full_rotation() {
        let g = grid(3, 2);
        let mut f = DistributionFunction::from_fn(g, |j, k| (j + 10 * k) as f64).unwrap();
        let before = f.clone();
        oracle_config_shift(&mut f, &[0, 3]).unwrap();
        // v_3 > 0: cell j now holds what was at j - 1
        assert_eq!(f.get(1, 3), before.get(0, 3));
        assert_eq!(f.get(0, 0), before.get(1, 0));
        assert_eq!(f.row(1), before.row(1));
        for _ in 0..7 {
            oracle_config_shift(&mut f, &[0, 3]).unwrap();
        }
        assert_eq!(f, before);
    }

    #[test]
    fn velocity_shift_single_column() {
        let g = grid(2, 3);
        let mut f = DistributionFunction::zeros(g);
        f.set(1, 2, 5.0);
        f.set(1, 3, 6.0);
        oracle_velocity_shift(&mut f, &[0, 2, 0, 0], true, 1.0).unwrap();
        assert_eq!(f.get(1, 4), 5.0);
        assert_eq!(f.get(1, 5), 6.0);
        assert_eq!(f.get(1, 2), 0.0);
        assert_eq!(f.get(1, 3), 0.0);
        let err = oracle_velocity_shift(&mut f, &[0, 3, 0, 0], true, 1.0).unwrap_err();
        assert!(matches!(
            err,
            Error::WrapViolation {
                column: 1,
                shift: 3,
                ..
            }
        ));
    }

    #[test]
    fn lax_velocity_shift_wraps() {
        let g = grid(2, 2);
        let mut f = DistributionFunction::zeros(g);
        f.set(0, 3, 1.0);
        oracle_velocity_shift(&mut f, &[1, 0, 0, 0], false, 1.0).unwrap();
        assert_eq!(f.get(0, 0), 1.0);
    }

    #[test]
    fn zero_force_run_conserves_mass_and_values() {
        let g = grid(4, 3);
        let f0 = DistributionFunction::from_fn(g.clone(), |j, k| ((j * 3 + k) % 5) as f64).unwrap();
        let sched = build_schedule(&g, 2).unwrap();
        let mut r = Reservoir::new(f0.clone(), GravityModel::None, true).unwrap();
        for _ in 0..=sched.num_epochs() {
            r.step_epoch(&sched).unwrap();
            assert_eq!(r.distribution().total_mass(), f0.total_mass());
            assert_eq!(sorted(r.distribution()), sorted(&f0));
        }
        assert!(r.step_epoch(&sched).is_err());
    }

    #[test]
    fn fourier_amplitude_of_a_cosine() {
        let n = 32;
        let density: Vec<f64> = (0..n)
            .map(|j| 2.0 * (1.0 + 0.1 * (2.0 * PI * 2.0 * j as f64 / n as f64 + 0.3).cos()))
            .collect();
        let a2 = fourier_amplitude(&density, 2);
        assert!((a2.norm() - 0.2).abs() < 1e-12);
        assert!((a2.arg() - 0.3).abs() < 1e-12);
        assert!(fourier_amplitude(&density, 3).norm() < 1e-12);
        assert!(fourier_amplitude(&density, 0).norm() < 1e-12);
        // |A_m| = 2 |ρ̃_m| / √N
        let modes = classical_modes(&density, 8).unwrap();
        assert!((modes.mode(2).unwrap().norm() * 2.0 / (n as f64).sqrt() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn self_gravity_pulls_mass_together() {
        let g = GridConfig::new(5, 5, Rational::new(6, 1), 0.005).unwrap();
        let f0 = DistributionFunction::from_fn(g.clone(), |j, k| {
            let v = g.velocity_f64(k);
            (-v * v / 0.5).exp() * (1.0 + 0.2 * (2.0 * PI * j as f64 / 32.0).cos())
        })
        .unwrap();
        let sched = build_schedule(&g, 1).unwrap();
        let samples = oracle_run(
            f0,
            &sched,
            GravityModel::SelfGravity { window: None },
            sched.num_epochs(),
        )
        .unwrap();
        let first = samples.first().unwrap().amplitudes[1].norm();
        let last = samples.last().unwrap().amplitudes[1].norm();
        assert!(last > first, "{first} -> {last}");
    }
}
