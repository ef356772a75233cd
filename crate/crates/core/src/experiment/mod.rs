//! End-to-end experiments: the measurement loop, its classical oracle and
//! the linear-theory targets, written out as CSV and JSON artifacts.
//!
//! Every artifact is a pure function of the configuration and seed; nothing
//! depends on wall-clock time or hash iteration order.

pub mod analysis;
pub mod bench;
pub mod complexity;
pub mod config;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::advection::AdvectionOptions;
use crate::error::{Error, Result};
use crate::grid::{DistributionFunction, GridConfig, Rational};
use crate::oracle::{classical_modes, fourier_amplitude, GravityModel, Reservoir};
use crate::pipeline::{Algorithm1, ExtractionMode, ForceSource, PipelineConfig};
use crate::schedule::EventSchedule;
use crate::statevector::Section;
use crate::theory::{
    build_initial_condition, gravitational_constant_for, jeans_wavenumber, solve_dispersion,
    write_rates_csv, DispersionSolution, EquilibriumSpec,
};

pub use complexity::{report_complexity, ComplexityReport, EpochCost};
pub use config::{BoxRegion, ExperimentConfig, ExperimentKind, Horizon, ReadoutMode};

/// Growth fits use cycles `[0.5, 2]`.
pub const GROWTH_FIT_CYCLES: (f64, f64) = (0.5, 2.0);
/// Envelope-decay fits cover this many analytic damping times.
pub const DECAY_FIT_DAMPING_TIMES: f64 = 2.0;
/// Default Landau horizon in analytic damping times.
const LANDAU_HORIZON_DAMPING_TIMES: f64 = 2.5;
/// Largest tolerated quantum/oracle disagreement in exact mode.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;

/// Artifact file names.
pub mod files {
    pub const CONFIG: &str = "config.txt";
    pub const SUMMARY: &str = "summary.json";
    pub const MODES: &str = "modes.csv";
    pub const AMPLITUDES: &str = "amplitudes.csv";
    pub const POSTSELECT: &str = "postselect.csv";
    pub const GATE_COUNTS: &str = "gate_counts.json";
    pub const COMPLEXITY: &str = "complexity.json";
    pub const RATES: &str = "rates.csv";
    pub const FINAL_QUANTUM: &str = "snapshot_final_quantum.csv";
    pub const FINAL_ORACLE: &str = "snapshot_final_oracle.csv";
    pub const TOMOGRAPHY_TRIALS: &str = "tomography_trials.csv";
    pub const TOMOGRAPHY_SWEEP: &str = "tomography_sweep.csv";
    pub const GATE_SWEEP: &str = "gate_sweep.csv";
    pub const SCHEDULE_SCALING: &str = "schedule_scaling.csv";

    /// `snapshot_c{cycle}_{source}.csv` with `source` `quantum` or `oracle`.
    pub fn snapshot(cycle: usize, source: &str) -> String {
        format!("snapshot_c{cycle}_{source}.csv")
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GridSummary {
    pub n_x: u32,
    pub n_v: u32,
    pub v_max: String,
    pub g: f64,
    pub delta_v: f64,
    pub characteristic_time: f64,
    pub cycle: f64,
    pub epochs_per_cycle: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TheorySummary {
    pub k: f64,
    pub k_j: f64,
    pub k_over_kj: f64,
    pub regime: String,
    pub gamma: f64,
    pub residual: f64,
}

/// Fitted rate of `|A_m|` against linear theory.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Comparison {
    /// `growth` or `envelope_decay`.
    pub kind: String,
    pub mode: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub gamma_theory: f64,
    pub fitted_quantum: Option<f64>,
    pub fitted_oracle: Option<f64>,
    /// `fitted_quantum / gamma_theory`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PostselectionSummary {
    pub p_v_initial: f64,
    pub p_x_initial: f64,
    pub p_v_min: f64,
    pub p_v_max: f64,
    pub p_x_min: f64,
    pub p_x_max: f64,
    /// Largest `max(p/p₀, p₀/p)` over the run for either probability.
    pub worst_factor: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ShearSummary {
    pub snapshots_checked: usize,
    /// Every snapshot equals the initial rows rotated by the scheduled shift.
    pub exact_permutation: bool,
    pub multiset_invariant: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GateSummary {
    pub total: u64,
    pub velocity_mcx: u64,
    pub configuration_mcx: u64,
    pub extraction_mcx: u64,
    pub increment_circuits: u64,
    pub increment_bound_violations: u64,
    pub increment_worst_ratio: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TomographySummary {
    pub qubits: usize,
    pub trials: usize,
    pub shots: u64,
    pub min_fidelity: f64,
    pub fraction_above_0_99: f64,
    pub sweep_shots: Vec<u64>,
    /// Mean `√(1 - F)` per sweep point.
    pub sweep_error: Vec<f64>,
    /// Log-log slope of `√(1 - F)` against shots.
    pub error_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GateSweepSummary {
    pub max_qubits: usize,
    pub circuits: u64,
    pub bound_violations: u64,
    pub worst_ratio: f64,
    pub all_correct: bool,
}

/// Everything `summary.json` records.
#[derive(Debug, Clone, Serialize, PartialEq, Default)]
pub struct RunSummary {
    pub experiment: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs_completed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    /// `max |M·amplitude - f_oracle|` over every epoch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_max_deviation: Option<f64>,
    /// Largest disagreement of the extracted window with the oracle's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub postselection: Option<PostselectionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shear: Option<ShearSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gates: Option<GateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution_warning: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_sweep: Option<GateSweepSummary>,
}

/// Artifact bundle kept in memory and written in one go, so a failed run
/// still leaves whatever it produced.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn put(&mut self, name: impl Into<String>, content: String) {
        self.files.insert(name.into(), content);
    }

    fn append(&mut self, name: &str, line: &str) {
        let f = self.files.entry(name.to_string()).or_default();
        f.push_str(line);
        f.push('\n');
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

/// Outcome of [`run`]: the summary plus the artifacts, written to `out`.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub artifacts: Artifacts,
    pub out_dir: PathBuf,
}

/// Runs an experiment and writes its artifacts to `out_dir`. On failure the
/// partial artifacts and a summary with `status = "error"` are still
/// written before the error is returned.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let mut artifacts = Artifacts::default();
    artifacts.put(files::CONFIG, config.to_text());
    let mut summary = RunSummary {
        experiment: config.experiment.label().into(),
        status: "ok".into(),
        ..Default::default()
    };
    let result = match config.experiment {
        ExperimentKind::TomographyBench => {
            bench::tomography_bench(config, &mut artifacts, &mut summary)
        }
        ExperimentKind::GatecountBench => {
            bench::gatecount_bench(config, &mut artifacts, &mut summary)
        }
        _ => simulate(config, &mut artifacts, &mut summary),
    };
    if let Err(e) = &result {
        summary.status = "error".into();
        summary.error = Some(e.to_string());
    }
    artifacts.put(
        files::SUMMARY,
        serde_json::to_string_pretty(&summary)? + "\n",
    );
    artifacts.write_to(out_dir)?;
    result?;
    Ok(RunOutcome {
        summary,
        artifacts,
        out_dir: out_dir.to_path_buf(),
    })
}

fn rational_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Grid with `G` taken from the config or derived from `k/k_J`.
pub fn build_grid(config: &ExperimentConfig) -> Result<GridConfig> {
    let nx = 1usize << config.n_x;
    let g = match (config.experiment.is_gravitating(), config.g) {
        (_, Some(g)) => g,
        (true, None) => {
            let k = 2.0 * PI * config.wave_index as f64 / nx as f64;
            gravitational_constant_for(k, config.k_over_kj, config.rho_ref, config.sigma)?
        }
        (false, None) => 0.0,
    };
    GridConfig::new(config.n_x, config.n_v, config.v_max, g)
}

/// Initial distribution for a simulation experiment.
pub fn initial_condition(
    config: &ExperimentConfig,
    grid: &GridConfig,
) -> Result<DistributionFunction> {
    match config.experiment {
        ExperimentKind::FreeStream => {
            let b = config.box_region;
            DistributionFunction::from_fn(grid.clone(), |j, k| {
                if (b.j0..b.j1).contains(&j) && (b.k0..b.k1).contains(&k) {
                    1.0
                } else {
                    0.0
                }
            })
        }
        _ => {
            let spec = EquilibriumSpec::new(
                config.rho_ref,
                config.sigma,
                config.amplitude,
                config.wave_index,
            )?;
            build_initial_condition(&spec, grid)
        }
    }
}

fn theory_for(
    config: &ExperimentConfig,
    grid: &GridConfig,
) -> Result<Option<(TheorySummary, DispersionSolution)>> {
    if !config.experiment.is_gravitating() {
        return Ok(None);
    }
    let k = 2.0 * PI * config.wave_index as f64 / grid.nx_cells() as f64;
    let g = grid.gravitational_constant();
    let k_j = jeans_wavenumber(config.rho_ref, config.sigma, g)?;
    let sol = solve_dispersion(k / k_j, config.rho_ref, g)?;
    Ok(Some((
        TheorySummary {
            k,
            k_j,
            k_over_kj: k / k_j,
            regime: sol.regime.label().into(),
            gamma: sol.gamma,
            residual: sol.residual,
        },
        sol,
    )))
}

/// Event schedule covering the configured horizon.
pub fn schedule_for(
    config: &ExperimentConfig,
    grid: &GridConfig,
    gamma: Option<f64>,
) -> Result<EventSchedule> {
    let t = grid.characteristic_time();
    let horizon = match config.horizon {
        Horizon::Cycles(c) => c * grid.cycle(),
        Horizon::Epochs(n) => t * n as i64,
        Horizon::Auto => {
            let gamma = gamma.ok_or_else(|| {
                Error::InvalidParameter("automatic horizon needs a linear rate".into())
            })?;
            let epochs = (LANDAU_HORIZON_DAMPING_TIMES / gamma / rational_f64(t)).ceil() as i64;
            t * epochs.max(1)
        }
    };
    EventSchedule::until(grid, horizon)
}

fn fmt_row(fields: &[String]) -> String {
    fields.join(",")
}

/// Free-streaming exactness: every row is the initial row rotated by the
/// number of configuration shifts the schedule has applied to it.
fn sheared_initial(
    f0: &DistributionFunction,
    schedule: &EventSchedule,
    time: Rational,
) -> Result<DistributionFunction> {
    let grid = f0.grid();
    let nx = grid.nx_cells() as i64;
    let mut out = DistributionFunction::zeros(grid.clone());
    for k in 0..grid.nv_cells() {
        let shift = schedule.row_shift(grid, k, time)?;
        for j in 0..nx {
            let src = (j - shift).rem_euclid(nx) as usize;
            out.set(j as usize, k, f0.get(src, k));
        }
    }
    Ok(out)
}

fn sorted_values(f: &DistributionFunction) -> Vec<f64> {
    let mut v = f.values().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn write_snapshot(f: &DistributionFunction) -> Result<String> {
    let mut buf = Vec::new();
    f.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("snapshot CSV is ASCII"))
}

fn simulate(
    config: &ExperimentConfig,
    artifacts: &mut Artifacts,
    summary: &mut RunSummary,
) -> Result<()> {
    let grid = build_grid(config)?;
    let t_char = rational_f64(grid.characteristic_time());
    summary.grid = Some(GridSummary {
        n_x: grid.n_x(),
        n_v: grid.n_v(),
        v_max: grid.v_max().to_string(),
        g: grid.gravitational_constant(),
        delta_v: grid.delta_v_f64(),
        characteristic_time: t_char,
        cycle: rational_f64(grid.cycle()),
        epochs_per_cycle: grid.epochs_per_cycle(),
    });
    let theory = theory_for(config, &grid)?;
    if let Some((t, sol)) = &theory {
        summary.theory = Some(t.clone());
        let mut buf = Vec::new();
        write_rates_csv(std::slice::from_ref(sol), &mut buf)?;
        artifacts.put(files::RATES, String::from_utf8(buf).expect("ASCII"));
    }
    let f0 = initial_condition(config, &grid)?;
    let schedule = schedule_for(config, &grid, theory.as_ref().map(|t| t.1.gamma))?;

    let gravitating = config.experiment.is_gravitating();
    let pipeline_config = PipelineConfig {
        window: config.window,
        evolution: config.evolution,
        extraction: match config.mode {
            ReadoutMode::Exact => ExtractionMode::Exact,
            ReadoutMode::Shots => ExtractionMode::Shots {
                shots: config.shots,
                seed: config.rng_seed,
            },
        },
        force: if gravitating {
            ForceSource::SelfGravity
        } else {
            ForceSource::None
        },
        advection: AdvectionOptions {
            strict_wrap: config.strict_wrap,
        },
    };
    let oracle_gravity = if gravitating {
        GravityModel::SelfGravity {
            window: Some(config.window),
        }
    } else {
        GravityModel::None
    };

    let mut quantum = Algorithm1::new(&f0, schedule.clone(), pipeline_config)?;
    let mut oracle = Reservoir::new(f0.clone(), oracle_gravity, config.strict_wrap)?;

    let mut costs = Vec::new();
    let outcome = simulate_epochs(
        config,
        &f0,
        &schedule,
        (&mut quantum, &mut oracle),
        &mut costs,
        artifacts,
        summary,
    );

    let report = report_complexity(&costs, config, &grid, quantum.forces());
    artifacts.put(
        files::COMPLEXITY,
        serde_json::to_string_pretty(&report)? + "\n",
    );
    let gates = quantum.gates();
    artifacts.put(files::GATE_COUNTS, gate_counts_json(gates)? + "\n");
    summary.gates = Some(GateSummary {
        total: gates.total(),
        velocity_mcx: gates.mcx_in(Section::VelocityAdvection),
        configuration_mcx: gates.mcx_in(Section::ConfigurationAdvection),
        extraction_mcx: gates.mcx_in(Section::Extraction),
        increment_circuits: gates.increments().circuits,
        increment_bound_violations: gates.increments().bound_violations,
        increment_worst_ratio: gates.increments().worst_ratio,
    });
    summary.resolution_warning = Some(quantum.under_resolved());
    outcome?;
    if gates.increments().bound_violations > 0 {
        return Err(Error::Physics(format!(
            "{} increment circuits exceeded the multi-controlled NOT bound",
            gates.increments().bound_violations
        )));
    }
    Ok(())
}

fn simulate_epochs(
    config: &ExperimentConfig,
    f0: &DistributionFunction,
    schedule: &EventSchedule,
    (quantum, oracle): (&mut Algorithm1, &mut Reservoir),
    costs: &mut Vec<EpochCost>,
    artifacts: &mut Artifacts,
    summary: &mut RunSummary,
) -> Result<()> {
    let grid = f0.grid();
    let nx = grid.nx_cells();
    let per_cycle = grid.epochs_per_cycle();
    let t_char = rational_f64(grid.characteristic_time());
    let half = (nx / 2) as i64;
    let exact = config.mode == ReadoutMode::Exact;
    let m_fit = config.wave_index as i64;

    artifacts.put(files::MODES, "epoch,time,cycles,m,re,im\n".into());
    artifacts.put(
        files::AMPLITUDES,
        "epoch,time,cycles,m,quantum_re,quantum_im,oracle_re,oracle_im\n".into(),
    );
    artifacts.put(files::POSTSELECT, "epoch,time,cycles,p_v,p_x\n".into());
    artifacts.put(files::snapshot(0, "quantum"), write_snapshot(f0)?);
    artifacts.put(files::snapshot(0, "oracle"), write_snapshot(f0)?);

    let initial_sorted = sorted_values(f0);
    let mut shear = (0usize, true, true);
    let mut max_dev: f64 = 0.0;
    let mut window_dev: f64 = 0.0;
    let mut pv: Vec<f64> = Vec::new();
    let mut px: Vec<f64> = Vec::new();
    let mut series_q: Vec<(f64, f64)> = vec![(0.0, fourier_amplitude(&f0.density(), m_fit).norm())];
    let mut series_o = series_q.clone();

    let last = schedule.num_epochs();
    let mut completed = 0;
    for n in 0..=last {
        let record = quantum.step()?;
        oracle.step_epoch(schedule)?;
        completed = n + 1;
        summary.epochs_completed = Some(completed);
        let gates = quantum.gates();
        costs.push(EpochCost {
            epoch: n,
            velocity_mcx: gates.mcx_in(Section::VelocityAdvection),
            velocity_weight: gates.mcx_control_weight_in(Section::VelocityAdvection),
            configuration_mcx: gates.mcx_in(Section::ConfigurationAdvection),
            configuration_weight: gates.mcx_control_weight_in(Section::ConfigurationAdvection),
        });

        let time = t_char * n as f64;
        let cycles = n as f64 / per_cycle as f64;
        let stamp = [n.to_string(), time.to_string(), cycles.to_string()];

        for &(m, v) in record.modes.modes() {
            let mut row = stamp.to_vec();
            row.extend([m.to_string(), v.re.to_string(), v.im.to_string()]);
            artifacts.append(files::MODES, &fmt_row(&row));
        }
        let mut row = stamp.to_vec();
        row.extend([
            record.modes.p_v().to_string(),
            record.modes.p_x().to_string(),
        ]);
        artifacts.append(files::POSTSELECT, &fmt_row(&row));
        pv.push(record.modes.p_v());
        px.push(record.modes.p_x());

        let fq = quantum.distribution()?;
        let fo = oracle.distribution();
        let dev = fq
            .values()
            .iter()
            .zip(fo.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_dev = max_dev.max(dev);

        let rho_q = quantum.density();
        let rho_o = fo.density();
        for m in 0..=half {
            let (aq, ao) = (fourier_amplitude(&rho_q, m), fourier_amplitude(&rho_o, m));
            let mut row = stamp.to_vec();
            row.extend([
                m.to_string(),
                aq.re.to_string(),
                aq.im.to_string(),
                ao.re.to_string(),
                ao.im.to_string(),
            ]);
            artifacts.append(files::AMPLITUDES, &fmt_row(&row));
        }
        series_q.push((time, fourier_amplitude(&rho_q, m_fit).norm()));
        series_o.push((time, fourier_amplitude(&rho_o, m_fit).norm()));

        let classical = classical_modes(&rho_o, config.window)?;
        for (&(m, a), &(_, b)) in record.modes.modes().iter().zip(classical.modes()) {
            debug_assert_eq!(Some(b), classical.mode(m));
            window_dev = window_dev.max((a - b).norm());
        }

        if n > 0 && n % per_cycle == 0 {
            let c = n / per_cycle;
            artifacts.put(files::snapshot(c, "quantum"), write_snapshot(&fq)?);
            artifacts.put(files::snapshot(c, "oracle"), write_snapshot(fo)?);
            if config.experiment == ExperimentKind::FreeStream {
                let expected = sheared_initial(f0, schedule, record.time)?;
                shear.0 += 1;
                shear.1 &= expected.values() == fq.values();
                shear.2 &= sorted_values(&fq) == initial_sorted;
            }
        }
        if n == last {
            artifacts.put(files::FINAL_QUANTUM, write_snapshot(&fq)?);
            artifacts.put(files::FINAL_ORACLE, write_snapshot(fo)?);
        }
        summary.oracle_max_deviation = Some(max_dev);
        summary.window_max_deviation = Some(window_dev);
        if exact && (dev > EQUIVALENCE_TOLERANCE || window_dev > EQUIVALENCE_TOLERANCE) {
            return Err(Error::Physics(format!(
                "quantum and oracle disagree at epoch {n}: cells {dev:e}, window {window_dev:e}"
            )));
        }
    }
    summary.epochs_completed = Some(completed);

    let (p_v0, p_x0) = (pv[0], px[0]);
    let factor = |p: f64, p0: f64| {
        if p > 0.0 && p0 > 0.0 {
            (p / p0).max(p0 / p)
        } else {
            f64::INFINITY
        }
    };
    let fold = |v: &[f64], init: f64, f: fn(f64, f64) -> f64| v.iter().copied().fold(init, f);
    summary.postselection = Some(PostselectionSummary {
        p_v_initial: p_v0,
        p_x_initial: p_x0,
        p_v_min: fold(&pv, f64::INFINITY, f64::min),
        p_v_max: fold(&pv, 0.0, f64::max),
        p_x_min: fold(&px, f64::INFINITY, f64::min),
        p_x_max: fold(&px, 0.0, f64::max),
        worst_factor: pv
            .iter()
            .map(|&p| factor(p, p_v0))
            .chain(px.iter().map(|&p| factor(p, p_x0)))
            .fold(1.0, f64::max),
    });
    if config.experiment == ExperimentKind::FreeStream {
        summary.shear = Some(ShearSummary {
            snapshots_checked: shear.0,
            exact_permutation: shear.1,
            multiset_invariant: shear.2,
        });
    }
    if let Some(theory) = &summary.theory {
        let cycle = rational_f64(grid.cycle());
        summary.comparison = Some(if theory.regime == "growing" {
            let (t0, t1) = (GROWTH_FIT_CYCLES.0 * cycle, GROWTH_FIT_CYCLES.1 * cycle);
            let q = analysis::growth_rate(&series_q, t0, t1);
            Comparison {
                kind: "growth".into(),
                mode: config.wave_index,
                t_start: t0,
                t_end: t1,
                gamma_theory: theory.gamma,
                fitted_quantum: q,
                fitted_oracle: analysis::growth_rate(&series_o, t0, t1),
                ratio: q.map(|r| r / theory.gamma),
            }
        } else {
            let t1 = DECAY_FIT_DAMPING_TIMES / theory.gamma;
            let q = analysis::envelope_decay_rate(&series_q, t1);
            Comparison {
                kind: "envelope_decay".into(),
                mode: config.wave_index,
                t_start: 0.0,
                t_end: t1,
                gamma_theory: theory.gamma,
                fitted_quantum: q,
                fitted_oracle: analysis::envelope_decay_rate(&series_o, t1),
                ratio: q.map(|r| r / theory.gamma),
            }
        });
    }
    Ok(())
}

fn gate_counts_json(gates: &crate::statevector::GateCounter) -> Result<String> {
    #[derive(Serialize)]
    struct GateCounts<'a> {
        entries: Vec<crate::statevector::GateCountEntry>,
        by_section: BTreeMap<String, BTreeMap<&'a str, u64>>,
        increments: &'a crate::statevector::IncrementStats,
    }
    let mut by_section = BTreeMap::new();
    for section in [
        Section::VelocityAdvection,
        Section::ConfigurationAdvection,
        Section::Extraction,
        Section::Tomography,
        Section::Other,
    ] {
        let mut m = BTreeMap::new();
        m.insert("mcx", gates.mcx_in(section));
        m.insert("mcx_control_weight", gates.mcx_control_weight_in(section));
        by_section.insert(section.to_string(), m);
    }
    Ok(serde_json::to_string_pretty(&GateCounts {
        entries: gates.entries(),
        by_section,
        increments: gates.increments(),
    })?)
}

/// Reads a finished run directory and renders a short text report.
pub fn report(run_dir: &Path) -> Result<String> {
    let text = fs::read_to_string(run_dir.join(files::SUMMARY))?;
    let s: serde_json::Value = serde_json::from_str(&text)?;
    let mut out = String::new();
    let get = |k: &str| s.get(k).cloned().unwrap_or(serde_json::Value::Null);
    let _ = writeln!(
        out,
        "experiment: {}",
        get("experiment").as_str().unwrap_or("?")
    );
    let _ = writeln!(out, "status: {}", get("status").as_str().unwrap_or("?"));
    if let Some(e) = get("error").as_str() {
        let _ = writeln!(out, "error: {e}");
    }
    if let Some(n) = get("epochs_completed").as_u64() {
        let _ = writeln!(out, "epochs completed: {n}");
    }
    if let Some(d) = get("oracle_max_deviation").as_f64() {
        let _ = writeln!(out, "max |M·amplitude - f_oracle|: {d:e}");
    }
    if let Some(c) = get("comparison").as_object() {
        let _ = writeln!(
            out,
            "{} rate of |A_{}|: fitted {} vs theory {} (ratio {})",
            c.get("kind").and_then(|v| v.as_str()).unwrap_or("?"),
            c.get("mode").and_then(|v| v.as_u64()).unwrap_or(0),
            c.get("fitted_quantum")
                .map(|v| v.to_string())
                .unwrap_or_default(),
            c.get("gamma_theory")
                .map(|v| v.to_string())
                .unwrap_or_default(),
            c.get("ratio").map(|v| v.to_string()).unwrap_or_default(),
        );
    }
    if let Some(p) = get("postselection").as_object() {
        let _ = writeln!(
            out,
            "post-selection: p_v from {} to {}, p_x from {} to {}",
            p["p_v_min"], p["p_v_max"], p["p_x_min"], p["p_x_max"]
        );
    }
    if let Some(g) = get("gates").as_object() {
        let _ = writeln!(
            out,
            "gates: {} total, {} increment circuits, {} bound violations",
            g["total"], g["increment_circuits"], g["increment_bound_violations"]
        );
    }
    if let Ok(c) = fs::read_to_string(run_dir.join(files::COMPLEXITY)) {
        let c: serde_json::Value = serde_json::from_str(&c)?;
        if let Some(sections) = c.get("sections").and_then(|v| v.as_array()) {
            for sec in sections {
                let _ = writeln!(
                    out,
                    "complexity {}: constant {}, worst deviation x{}, flagged {}",
                    sec["section"],
                    sec["fit_constant"],
                    sec["max_deviation_factor"],
                    sec["flagged"]
                );
            }
        }
    }
    if let Some(t) = get("tomography").as_object() {
        let _ = writeln!(
            out,
            "tomography: fraction with F >= 0.99: {}, error slope {}",
            t["fraction_above_0_99"], t["error_slope"]
        );
    }
    if let Some(g) = get("gate_sweep").as_object() {
        let _ = writeln!(
            out,
            "increment sweep: {} circuits, {} bound violations, all correct {}",
            g["circuits"], g["bound_violations"], g["all_correct"]
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn derived_g_puts_the_wave_at_the_requested_jeans_ratio() {
        let c = parse("experiment = jeans\nk_over_kj = 0.8\n");
        let grid = build_grid(&c).unwrap();
        let (t, sol) = theory_for(&c, &grid).unwrap().unwrap();
        assert!((t.k_over_kj - 0.8).abs() < 1e-12);
        assert_eq!(sol.regime.label(), "growing");
        let free = build_grid(&parse("experiment = free-stream\n")).unwrap();
        assert_eq!(free.gravitational_constant(), 0.0);
    }

    #[test]
    fn horizons() {
        let c = parse("experiment = jeans\nn_x = 4\nn_v = 4\nepochs = 5\n");
        let grid = build_grid(&c).unwrap();
        assert_eq!(schedule_for(&c, &grid, None).unwrap().num_epochs(), 5);
        let c = parse("experiment = jeans\nn_x = 4\nn_v = 4\ncycles = 1/3\n");
        assert_eq!(schedule_for(&c, &grid, None).unwrap().num_epochs(), 5);
        let c = parse("experiment = landau\nn_x = 4\nn_v = 4\n");
        let t = rational_f64(grid.characteristic_time());
        let n = schedule_for(&c, &grid, Some(0.1)).unwrap().num_epochs();
        assert_eq!(n, (25.0 / t).ceil() as usize);
        assert!(schedule_for(&c, &grid, None).is_err());
    }

    #[test]
    fn shear_reference_matches_the_oracle() {
        let c = parse("experiment = free-stream\nn_x = 4\nn_v = 3\ncycles = 1\n");
        let grid = build_grid(&c).unwrap();
        let f0 = initial_condition(&c, &grid).unwrap();
        let schedule = schedule_for(&c, &grid, None).unwrap();
        let mut oracle = Reservoir::new(f0.clone(), GravityModel::None, true).unwrap();
        for _ in 0..=schedule.num_epochs() {
            oracle.step_epoch(&schedule).unwrap();
        }
        let expected = sheared_initial(&f0, &schedule, schedule.horizon()).unwrap();
        assert_eq!(expected.values(), oracle.distribution().values());
    }

    #[test]
    fn failed_runs_leave_a_summary() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse(
            "experiment = jeans\nn_x = 5\nn_v = 4\nsigma = 0.3\nk_over_kj = 0.2\ncycles = 3\n",
        );
        let err = run(&c, dir.path()).unwrap_err();
        assert!(err.is_physics(), "{err}");
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(files::SUMMARY)).unwrap())
                .unwrap();
        assert_eq!(summary["status"], "error");
        assert!(summary["epochs_completed"].as_u64().unwrap() > 0);
        assert!(report(dir.path()).unwrap().contains("status: error"));
    }
}
