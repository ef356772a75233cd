//! The measurement loop: for each epoch `n`, evolve `|f⁰⟩` to `t = nT`,
//! extract the lowest `S` density modes, and store the force computed from
//! them for the next epoch.
//!
//! The force applied at the velocity step of epoch `l` is the one computed
//! after epoch `l - 1`; epoch 0 uses the force of the initial distribution.
//! `Restart` rebuilds the state from `|f⁰⟩` and replays the stored force
//! history every epoch, as a device without persistent memory would;
//! `Continue` keeps the state between epochs. Both yield the same amplitudes.

use num_complex::Complex64;

use crate::advection::{
    check_resolution, run_events, AdvectionOptions, CflVelocityCounters, ForceField,
};
use crate::error::{Error, Result};
use crate::extraction::{
    extract_modes_exact_counted, extract_modes_shots_counted, FourierDensity, ShotSettings,
};
use crate::gravity::force_from_modes;
use crate::grid::{DistributionFunction, GridConfig, Normalization, Rational};
use crate::schedule::EventSchedule;
use crate::statevector::{GateCounter, QuantumState};

/// Loads `|f⟩ = f / M` directly into the amplitudes.
pub fn amplitude_encode(f: &DistributionFunction) -> Result<(QuantumState, Normalization)> {
    let g = f.grid();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << g.num_qubits()];
    for k in 0..g.nv_cells() {
        for (j, &v) in f.row(k).iter().enumerate() {
            amps[g.basis_index(j, k)] = Complex64::new(v, 0.0);
        }
    }
    Ok((QuantumState::from_amplitudes(amps)?, f.normalization()?))
}

/// `M · Re(amplitude)` on every cell.
pub fn decode_distribution(
    state: &QuantumState,
    grid: &GridConfig,
    norm: Normalization,
) -> Result<DistributionFunction> {
    let m = norm.value();
    DistributionFunction::from_fn(grid.clone(), |j, k| {
        (state.amplitude(grid.basis_index(j, k)).re * m).max(0.0)
    })
}

/// `ρ_j = M Δv Σ_k Re(amplitude)`.
pub fn decode_density(state: &QuantumState, grid: &GridConfig, norm: Normalization) -> Vec<f64> {
    let scale = norm.value() * grid.delta_v_f64();
    (0..grid.nx_cells())
        .map(|j| {
            (0..grid.nv_cells())
                .map(|k| state.amplitude(grid.basis_index(j, k)).re)
                .sum::<f64>()
                * scale
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evolution {
    Restart,
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForceSource {
    None,
    Fixed(ForceField),
    /// Self-gravity of the extracted modes.
    SelfGravity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Number of extracted modes `S`.
    pub window: usize,
    pub evolution: Evolution,
    pub extraction: ExtractionMode,
    pub force: ForceSource,
    pub advection: AdvectionOptions,
}

/// Outcome of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `t = nT`.
    pub time: Rational,
    pub modes: FourierDensity,
}

/// Driver of the measurement loop.
#[derive(Debug, Clone)]
pub struct Algorithm1 {
    grid: GridConfig,
    schedule: EventSchedule,
    config: PipelineConfig,
    initial: QuantumState,
    norm: Normalization,
    total_mass: f64,
    state: QuantumState,
    counters: CflVelocityCounters,
    forces: Vec<ForceField>,
    initial_modes: FourierDensity,
    gates: GateCounter,
    next_epoch: usize,
    under_resolved: bool,
}

impl Algorithm1 {
    pub fn new(
        f0: &DistributionFunction,
        schedule: EventSchedule,
        config: PipelineConfig,
    ) -> Result<Self> {
        let grid = f0.grid().clone();
        let (initial, norm) = amplitude_encode(f0)?;
        let mut this = Self {
            counters: CflVelocityCounters::new(&grid),
            state: initial.clone(),
            initial_modes: FourierDensity::new(
                2,
                vec![Complex64::default(); 2],
                crate::extraction::Provenance::Exact,
                0.0,
                0.0,
            )?,
            total_mass: f0.total_mass(),
            grid,
            schedule,
            config,
            initial,
            norm,
            forces: Vec::new(),
            gates: GateCounter::default(),
            next_epoch: 0,
            under_resolved: false,
        };
        let pristine = this.initial.clone();
        this.initial_modes = this.extract(&pristine, u64::MAX)?;
        let first = this.force_from(&this.initial_modes)?;
        this.note_force(&first);
        this.forces.push(first);
        Ok(this)
    }

    fn extract(&mut self, state: &QuantumState, salt: u64) -> Result<FourierDensity> {
        let (modes, gates) = match self.config.extraction {
            ExtractionMode::Exact => {
                extract_modes_exact_counted(state, &self.grid, self.config.window, self.norm)?
            }
            ExtractionMode::Shots { shots, seed } => extract_modes_shots_counted(
                state,
                &self.grid,
                self.config.window,
                ShotSettings {
                    shots,
                    seed: seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    total_mass: self.total_mass,
                },
            )?,
        };
        self.gates.merge(&gates);
        Ok(modes)
    }

    fn force_from(&self, modes: &FourierDensity) -> Result<ForceField> {
        match &self.config.force {
            ForceSource::None => Ok(ForceField::zeros(&self.grid)),
            ForceSource::Fixed(f) => Ok(f.clone()),
            ForceSource::SelfGravity => force_from_modes(modes, &self.grid),
        }
    }

    fn note_force(&mut self, force: &ForceField) {
        if !self.under_resolved && !check_resolution(&self.grid, force) {
            self.under_resolved = true;
        }
    }

    fn evolve(
        &mut self,
        state: &mut QuantumState,
        counters: &mut CflVelocityCounters,
        epoch: usize,
    ) -> Result<()> {
        let events = self.schedule.epoch(epoch);
        run_events(
            state,
            events,
            counters,
            &self.forces[epoch],
            &self.grid,
            self.config.advection,
        )?;
        self.gates.merge(&state.take_counter());
        Ok(())
    }

    /// Runs the next epoch and returns its extracted modes.
    pub fn step(&mut self) -> Result<EpochRecord> {
        let n = self.next_epoch;
        if n > self.schedule.num_epochs() {
            return Err(Error::InvalidParameter(format!(
                "epoch {n} lies beyond the schedule horizon"
            )));
        }
        let mut state;
        let mut counters;
        match self.config.evolution {
            Evolution::Restart => {
                state = self.initial.clone();
                counters = CflVelocityCounters::new(&self.grid);
                for l in 0..=n {
                    self.evolve(&mut state, &mut counters, l)?;
                }
            }
            Evolution::Continue => {
                state = std::mem::replace(&mut self.state, QuantumState::zero(1));
                counters =
                    std::mem::replace(&mut self.counters, CflVelocityCounters::new(&self.grid));
                self.evolve(&mut state, &mut counters, n)?;
            }
        }
        let modes = self.extract(&state, n as u64)?;
        let next = self.force_from(&modes)?;
        self.note_force(&next);
        self.forces.push(next);
        self.state = state;
        self.counters = counters;
        self.next_epoch += 1;
        Ok(EpochRecord {
            epoch: n,
            time: self.schedule.characteristic_time() * n as i64,
            modes,
        })
    }

    /// State after the most recent epoch (`|f⁰⟩` before the first).
    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn counters(&self) -> &CflVelocityCounters {
        &self.counters
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn schedule(&self) -> &EventSchedule {
        &self.schedule
    }

    pub fn normalization(&self) -> Normalization {
        self.norm
    }

    /// Modes of the untouched initial state.
    pub fn initial_modes(&self) -> &FourierDensity {
        &self.initial_modes
    }

    /// Force history: entry `l` is applied during epoch `l`.
    pub fn forces(&self) -> &[ForceField] {
        &self.forces
    }

    /// All gates emitted so far, including every replay in restart mode.
    pub fn gates(&self) -> &GateCounter {
        &self.gates
    }

    pub fn next_epoch(&self) -> usize {
        self.next_epoch
    }

    /// True once any force violated the velocity resolution requirement.
    pub fn under_resolved(&self) -> bool {
        self.under_resolved
    }

    pub fn distribution(&self) -> Result<DistributionFunction> {
        decode_distribution(&self.state, &self.grid, self.norm)
    }

    pub fn density(&self) -> Vec<f64> {
        decode_density(&self.state, &self.grid, self.norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{GravityModel, Reservoir};
    use crate::schedule::build_schedule;
    use std::f64::consts::PI;

    fn jeans_like(n_x: u32, n_v: u32) -> DistributionFunction {
        let g = GridConfig::new(n_x, n_v, Rational::new(4, 1), 0.02).unwrap();
        let nx = g.nx_cells() as f64;
        DistributionFunction::from_fn(g.clone(), |j, k| {
            let v = g.velocity_f64(k);
            (-v * v / 0.5).exp() * (1.0 + 0.1 * (2.0 * PI * 2.0 * j as f64 / nx).cos())
        })
        .unwrap()
    }

    fn config(window: usize, evolution: Evolution) -> PipelineConfig {
        PipelineConfig {
            window,
            evolution,
            extraction: ExtractionMode::Exact,
            force: ForceSource::SelfGravity,
            advection: AdvectionOptions::default(),
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let f = jeans_like(3, 3);
        let (s, m) = amplitude_encode(&f).unwrap();
        let back = decode_distribution(&s, f.grid(), m).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let rho = decode_density(&s, f.grid(), m);
        for (a, b) in f.density().iter().zip(&rho) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn restart_and_continue_agree() {
        let f0 = jeans_like(4, 4);
        let sched = build_schedule(f0.grid(), 2).unwrap();
        let mut a = Algorithm1::new(&f0, sched.clone(), config(4, Evolution::Restart)).unwrap();
        let mut b = Algorithm1::new(&f0, sched.clone(), config(4, Evolution::Continue)).unwrap();
        for _ in 0..=sched.num_epochs() {
            let ra = a.step().unwrap();
            let rb = b.step().unwrap();
            assert_eq!(ra, rb);
            assert_eq!(a.state().amplitudes(), b.state().amplitudes());
        }
        assert!(a.step().is_err());
        // restart replays every earlier epoch
        let ca = a.gates().increments().circuits;
        let cb = b.gates().increments().circuits;
        assert!(ca > cb);
    }

    #[test]
    fn matches_the_classical_oracle() {
        for window in [2, 4, 16] {
            let f0 = jeans_like(4, 4);
            let sched = build_schedule(f0.grid(), 2).unwrap();
            let mut q =
                Algorithm1::new(&f0, sched.clone(), config(window, Evolution::Continue)).unwrap();
            let mut c = Reservoir::new(
                f0.clone(),
                GravityModel::SelfGravity {
                    window: Some(window),
                },
                true,
            )
            .unwrap();
            for _ in 0..=sched.num_epochs() {
                q.step().unwrap();
                c.step_epoch(&sched).unwrap();
                let fq = q.distribution().unwrap();
                let err = fq
                    .values()
                    .iter()
                    .zip(c.distribution().values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 1e-10, "S={window}: {err}");
            }
        }
    }

    #[test]
    fn epoch_zero_uses_the_initial_force() {
        let f0 = jeans_like(3, 3);
        let sched = build_schedule(f0.grid(), 1).unwrap();
        let q = Algorithm1::new(&f0, sched, config(8, Evolution::Continue)).unwrap();
        let direct = crate::gravity::force_full_density(&f0.density(), f0.grid()).unwrap();
        for (a, b) in q.forces()[0].values().iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
