//! Measured multi-controlled NOT cost against the asymptotic scaling forms.
//!
//! A multi-controlled NOT with `c` controls is charged `c`, so the measured
//! quantity is the summed control weight. Each form is evaluated per
//! executed epoch and accumulated, with one fitted constant per section.
//! `E` counts executed epochs.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::advection::{velocity_gain, ForceField};
use crate::grid::GridConfig;
use crate::pipeline::Evolution;

use super::config::ExperimentConfig;

/// Epochs whose measured/model ratio strays further than this from the
/// fitted constant are flagged.
pub const DEVIATION_FACTOR: f64 = 2.0;

/// Cumulative gate cost after an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochCost {
    pub epoch: usize,
    pub velocity_mcx: u64,
    pub velocity_weight: u64,
    pub configuration_mcx: u64,
    pub configuration_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub epoch: usize,
    /// Epoch evolutions executed so far, counting restarts.
    pub executions: u64,
    pub measured_mcx: u64,
    pub measured_weight: u64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionReport {
    pub section: String,
    pub model: String,
    /// Geometric mean of measured/model over epochs with non-zero cost.
    pub fit_constant: Option<f64>,
    pub max_deviation_factor: Option<f64>,
    pub flagged: Vec<usize>,
    pub rows: Vec<ComplexityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub evolution: String,
    pub epochs: usize,
    /// Largest `|F|` used by any epoch.
    pub force_scale: f64,
    /// Counter magnitude estimate `F_s N_v Δx / V²`.
    pub counter_estimate: f64,
    /// True when no velocity-space shift was ever emitted.
    pub velocity_gates_zero: bool,
    pub sections: Vec<SectionReport>,
}

/// Epoch evolutions executed once epoch `n` is done.
pub fn executions(evolution: Evolution, n: usize) -> u64 {
    let n = n as u64;
    match evolution {
        Evolution::Restart => (n + 1) * (n + 2) / 2,
        Evolution::Continue => n + 1,
    }
}

fn section(name: &str, model: &str, rows: Vec<ComplexityRow>) -> SectionReport {
    let ratios: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.measured_weight > 0 && r.model > 0.0)
        .map(|r| (r.epoch, r.measured_weight as f64 / r.model))
        .collect();
    let fit = (!ratios.is_empty())
        .then(|| (ratios.iter().map(|r| r.1.ln()).sum::<f64>() / ratios.len() as f64).exp());
    let mut flagged = Vec::new();
    let mut worst: Option<f64> = None;
    if let Some(c) = fit {
        for &(epoch, r) in &ratios {
            let dev = (r / c).max(c / r);
            worst = Some(worst.map_or(dev, |w| w.max(dev)));
            if dev > DEVIATION_FACTOR {
                flagged.push(epoch);
            }
        }
    }
    SectionReport {
        section: name.into(),
        model: model.into(),
        fit_constant: fit,
        max_deviation_factor: worst,
        flagged,
        rows,
    }
}

/// Expected velocity-advection weight of one execution of each epoch,
/// `n_v(n_x+n_v) Σ_j min(u_j, 1) log₂(2 + u_j)` with `u_j = |F_j| T/Δv` the
/// counter gain of cell `j`. For `u_j ≥ 1` this is the `log |D_j|` cost of
/// one increment; below 1 a shift fires in a fraction `u_j` of the epochs.
pub fn velocity_epoch_model(grid: &GridConfig, force: &ForceField) -> f64 {
    let (nx, nv) = (grid.n_x() as f64, grid.n_v() as f64);
    let gain = velocity_gain(grid);
    let shifts: f64 = force
        .values()
        .iter()
        .map(|f| {
            let u = f.abs() * gain;
            u.min(1.0) * (2.0 + u).log2()
        })
        .sum();
    nv * (nx + nv) * shifts
}

/// Tabulates cumulative costs per section against the scaling forms summed
/// over every executed epoch: [`velocity_epoch_model`] for velocity
/// advection and `N_v n_x(n_x+n_v)` per epoch for configuration advection.
/// Restart mode replays epochs `0..=n` for each `n`, continue mode runs each
/// once.
pub fn report_complexity(
    costs: &[EpochCost],
    config: &ExperimentConfig,
    grid: &GridConfig,
    forces: &[ForceField],
) -> ComplexityReport {
    let (nx, nv) = (grid.n_x() as f64, grid.n_v() as f64);
    let v = grid.v_max().to_f64().unwrap_or(f64::NAN);
    let force_scale = forces.iter().map(ForceField::max_abs).fold(0.0, f64::max);
    let counter_estimate = force_scale * grid.nv_cells() as f64 * grid.delta_x() / (v * v);
    let configuration_form = grid.nv_cells() as f64 * nx * (nx + nv);

    // per-epoch model, then one or two prefix sums depending on the mode
    let accumulate = |per_epoch: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut single = 0.0;
        let mut replayed = 0.0;
        costs
            .iter()
            .map(|c| {
                single += per_epoch(c.epoch);
                replayed += single;
                match config.evolution {
                    Evolution::Restart => replayed,
                    Evolution::Continue => single,
                }
            })
            .collect()
    };
    let velocity_model =
        accumulate(&|n| forces.get(n).map_or(0.0, |f| velocity_epoch_model(grid, f)));
    let configuration_model = accumulate(&|_| configuration_form);

    let rows = |weight: fn(&EpochCost) -> (u64, u64), model: &[f64]| -> Vec<ComplexityRow> {
        costs
            .iter()
            .zip(model)
            .map(|(c, &m)| {
                let (mcx, w) = weight(c);
                ComplexityRow {
                    epoch: c.epoch,
                    executions: executions(config.evolution, c.epoch),
                    measured_mcx: mcx,
                    measured_weight: w,
                    model: m,
                }
            })
            .collect()
    };
    let velocity = rows(|c| (c.velocity_mcx, c.velocity_weight), &velocity_model);
    let configuration = rows(
        |c| (c.configuration_mcx, c.configuration_weight),
        &configuration_model,
    );
    ComplexityReport {
        evolution: match config.evolution {
            Evolution::Restart => "restart".into(),
            Evolution::Continue => "continue".into(),
        },
        epochs: costs.len(),
        force_scale,
        counter_estimate,
        velocity_gates_zero: costs.last().is_none_or(|c| c.velocity_mcx == 0),
        sections: vec![
            section(
                "velocity_advection",
                "sum_epochs n_v*(n_x+n_v)*sum_j min(u_j,1)*log2(2+u_j)",
                velocity,
            ),
            section(
                "configuration_advection",
                "E*N_v*n_x*(n_x+n_v)",
                configuration,
            ),
        ],
    }
}
