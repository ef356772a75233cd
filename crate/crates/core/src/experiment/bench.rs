//! Benchmarks that do not evolve a distribution: tomography fidelity and
//! the increment-circuit gate bound.

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::schedule::EventSchedule;
use crate::statevector::{increment_mcx_bound, QuantumState, RegisterSlice};
use crate::tomography::{collect, haar_random_state, reconstruct, TomographyPlan};

use super::analysis::log_linear_slope;
use super::config::ExperimentConfig;
use super::{files, Artifacts, GateSweepSummary, RunSummary, TomographySummary};

/// Fidelity threshold counted in the tomography summary.
pub const FIDELITY_THRESHOLD: f64 = 0.99;

fn trial_seed(base: u64, trial: u64) -> u64 {
    base ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Reconstruction fidelity of a seeded Haar-random state.
pub fn tomography_trial(qubits: usize, shots: u64, seed: u64) -> Result<f64> {
    let state = haar_random_state(qubits, seed);
    let plan = TomographyPlan::new(qubits, shots)?;
    let counts = collect(&state, &plan, seed.rotate_left(17))?;
    Ok(reconstruct(&counts, &plan)?.fidelity(&state.amplitudes()))
}

pub(super) fn tomography_bench(
    config: &ExperimentConfig,
    artifacts: &mut Artifacts,
    summary: &mut RunSummary,
) -> Result<()> {
    let q = config.tomography_qubits;
    let mut trials = String::from("trial,fidelity\n");
    let mut fidelities = Vec::with_capacity(config.tomography_trials);
    for t in 0..config.tomography_trials {
        let f = tomography_trial(
            q,
            config.tomography_shots,
            trial_seed(config.rng_seed, t as u64),
        )?;
        trials.push_str(&format!("{t},{f}\n"));
        fidelities.push(f);
    }
    artifacts.put(files::TOMOGRAPHY_TRIALS, trials);

    let mut sweep = String::from("shots,mean_sqrt_infidelity\n");
    let mut errors = Vec::new();
    for (i, &shots) in config.tomography_sweep.iter().enumerate() {
        let mut total = 0.0;
        for t in 0..config.tomography_sweep_trials {
            let seed = trial_seed(config.rng_seed.wrapping_add(1 + i as u64), t as u64);
            total += (1.0 - tomography_trial(q, shots, seed)?).max(0.0).sqrt();
        }
        let mean = total / config.tomography_sweep_trials.max(1) as f64;
        sweep.push_str(&format!("{shots},{mean}\n"));
        errors.push(mean);
    }
    artifacts.put(files::TOMOGRAPHY_SWEEP, sweep);

    let points: Vec<(f64, f64)> = config
        .tomography_sweep
        .iter()
        .zip(&errors)
        .map(|(&s, &e)| ((s as f64).ln(), e))
        .collect();
    let above = fidelities
        .iter()
        .filter(|&&f| f >= FIDELITY_THRESHOLD)
        .count();
    summary.tomography = Some(TomographySummary {
        qubits: q,
        trials: fidelities.len(),
        shots: config.tomography_shots,
        min_fidelity: fidelities.iter().copied().fold(f64::INFINITY, f64::min),
        fraction_above_0_99: above as f64 / fidelities.len().max(1) as f64,
        sweep_shots: config.tomography_sweep.clone(),
        sweep_error: errors,
        error_slope: log_linear_slope(&points),
    });
    Ok(())
}

/// Applies `+p` to a state whose amplitudes are all distinct and checks the
/// result is the expected rotation. A gate sequence of multi-controlled NOTs
/// is a permutation, and a permutation is fixed by its action on such a
/// vector.
pub fn increment_is_correct(n: usize, p: i64) -> Result<(bool, u64)> {
    let dim = 1usize << n;
    let amps: Vec<Complex64> = (0..dim)
        .map(|i| Complex64::new(1.0 + i as f64, 0.0))
        .collect();
    let mut state = QuantumState::from_amplitudes(amps)?;
    let before = state.amplitudes();
    let reg = RegisterSlice::custom("r", 0, n);
    state.apply_increment(&reg, p)?;
    let after = state.amplitudes();
    let correct = (0..dim).all(|i| {
        let j = (i as i64 + p).rem_euclid(dim as i64) as usize;
        (after[j] - before[i]).norm() < 1e-12
    });
    Ok((correct, state.counter().increments().mcx_total))
}

/// Configuration-advection events in `(T, 2T]`, events in one cycle after
/// `t = 0`, and row shifts in one cycle after `t = 0`.
pub fn schedule_density(grid: &GridConfig) -> Result<(usize, usize, usize)> {
    let t = grid.characteristic_time();
    let schedule = EventSchedule::until(grid, grid.cycle().max(t * 2))?;
    let zero = Ratio::from_integer(0);
    let per_t = schedule
        .events()
        .iter()
        .filter(|e| e.time > t && e.time <= t * 2)
        .count();
    let cycle: Vec<_> = schedule
        .events()
        .iter()
        .filter(|e| e.time > zero && e.time <= grid.cycle())
        .collect();
    Ok((per_t, cycle.len(), cycle.iter().map(|e| e.rows.len()).sum()))
}

pub(super) fn gatecount_bench(
    config: &ExperimentConfig,
    artifacts: &mut Artifacts,
    summary: &mut RunSummary,
) -> Result<()> {
    let mut csv = String::from("n,p,mcx,bound,correct\n");
    let mut s = GateSweepSummary {
        max_qubits: config.sweep_max_qubits,
        circuits: 0,
        bound_violations: 0,
        worst_ratio: 0.0,
        all_correct: true,
    };
    for n in 1..=config.sweep_max_qubits {
        let limit = (1i64 << n) - 1;
        for p in (-limit..=limit).filter(|&p| p != 0) {
            let (correct, mcx) = increment_is_correct(n, p)?;
            let bound = increment_mcx_bound(n, p.unsigned_abs());
            csv.push_str(&format!("{n},{p},{mcx},{bound},{correct}\n"));
            s.circuits += 1;
            s.all_correct &= correct;
            if mcx > bound {
                s.bound_violations += 1;
            }
            s.worst_ratio = s.worst_ratio.max(mcx as f64 / bound as f64);
        }
    }
    artifacts.put(files::GATE_SWEEP, csv);

    let mut scaling = String::from(
        "n_x,n_v,events_per_characteristic_time,events_per_cycle,row_shifts_per_cycle\n",
    );
    for n_v in 2..=config.n_v.max(2) + 2 {
        let grid = GridConfig::new(config.n_x, n_v, Ratio::from_integer(1), 0.0)?;
        let (per_t, per_cycle, shifts) = schedule_density(&grid)?;
        scaling.push_str(&format!(
            "{},{n_v},{per_t},{per_cycle},{shifts}\n",
            config.n_x
        ));
    }
    artifacts.put(files::SCHEDULE_SCALING, scaling);

    let violations = s.bound_violations;
    let all_correct = s.all_correct;
    summary.gate_sweep = Some(s);
    if violations > 0 || !all_correct {
        return Err(Error::Physics(format!(
            "increment sweep: {violations} bound violations, all circuits correct: {all_correct}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_is_correct_and_bounded() {
        for n in 1..=5 {
            let limit = (1i64 << n) - 1;
            for p in (-limit..=limit).filter(|&p| p != 0) {
                let (ok, mcx) = increment_is_correct(n, p).unwrap();
                assert!(ok, "n={n} p={p}");
                assert!(mcx <= increment_mcx_bound(n, p.unsigned_abs()));
            }
        }
    }

    #[test]
    fn doubling_velocity_cells_doubles_events_per_characteristic_time() {
        for n_v in 2..=6 {
            let g = |n| GridConfig::new(4, n, Ratio::from_integer(1), 0.0).unwrap();
            let (a, _, shifts) = schedule_density(&g(n_v)).unwrap();
            let (b, _, _) = schedule_density(&g(n_v + 1)).unwrap();
            let ratio = b as f64 / a as f64;
            assert!((1.5..=2.5).contains(&ratio), "n_v={n_v}: {a} -> {b}");
            // row k travels |2k+1-N_v| cells per cycle
            let nv = 1i64 << n_v;
            let expected: i64 = (0..nv).map(|k| (2 * k + 1 - nv).abs()).sum();
            assert_eq!(shifts as i64, expected);
        }
    }

    #[test]
    fn noiseless_limit_tomography_is_accurate() {
        assert!(tomography_trial(2, 1_000_000, 3).unwrap() > 0.99);
    }
}
