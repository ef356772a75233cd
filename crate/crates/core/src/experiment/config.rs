//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown and repeated keys are
//! rejected with the offending line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::grid::{parse_rational, Rational};
use crate::pipeline::Evolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    FreeStream,
    Jeans,
    Landau,
    PostselectProb,
    TomographyBench,
    GatecountBench,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::FreeStream => "free-stream",
            ExperimentKind::Jeans => "jeans",
            ExperimentKind::Landau => "landau",
            ExperimentKind::PostselectProb => "postselect-prob",
            ExperimentKind::TomographyBench => "tomography-bench",
            ExperimentKind::GatecountBench => "gatecount-bench",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        [
            ExperimentKind::FreeStream,
            ExperimentKind::Jeans,
            ExperimentKind::Landau,
            ExperimentKind::PostselectProb,
            ExperimentKind::TomographyBench,
            ExperimentKind::GatecountBench,
        ]
        .into_iter()
        .find(|k| k.label() == text)
    }

    /// Self-gravitating perturbed-Maxwellian runs.
    pub fn is_gravitating(self) -> bool {
        matches!(
            self,
            ExperimentKind::Jeans | ExperimentKind::Landau | ExperimentKind::PostselectProb
        )
    }

    pub fn is_simulation(self) -> bool {
        self == ExperimentKind::FreeStream || self.is_gravitating()
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutMode {
    Exact,
    Shots,
}

/// Run length: whole or fractional cycles, or a number of characteristic
/// times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Cycles(Rational),
    Epochs(usize),
    /// Landau default: a fixed multiple of the analytic damping time.
    Auto,
}

/// Rectangle `j0 ≤ j < j1`, `k0 ≤ k < k1` set to 1 in the free-streaming
/// initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxRegion {
    pub j0: usize,
    pub j1: usize,
    pub k0: usize,
    pub k1: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_x: u32,
    pub n_v: u32,
    pub v_max: Rational,
    /// Explicit `G`; when absent it is derived from `k_over_kj`.
    pub g: Option<f64>,
    pub rho_ref: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub k_over_kj: f64,
    /// Integer `m` with `k = 2πm / N_x`.
    pub wave_index: usize,
    /// Number of extracted modes `S`.
    pub window: usize,
    pub horizon: Horizon,
    pub mode: ReadoutMode,
    pub shots: u64,
    pub rng_seed: u64,
    pub evolution: Evolution,
    pub strict_wrap: bool,
    pub box_region: BoxRegion,
    pub tomography_qubits: usize,
    pub tomography_trials: usize,
    pub tomography_shots: u64,
    pub tomography_sweep: Vec<u64>,
    pub tomography_sweep_trials: usize,
    pub sweep_max_qubits: usize,
    pub output: Option<PathBuf>,
}

/// Velocity dispersion used by the defaults, in units of `V`.
pub const DEFAULT_SIGMA: f64 = 2.0 / 19.0;

const KEYS: &[&str] = &[
    "experiment",
    "n_x",
    "n_v",
    "v_max",
    "g",
    "rho_ref",
    "sigma",
    "amplitude",
    "k_over_kj",
    "wave_index",
    "window",
    "cycles",
    "epochs",
    "mode",
    "shots",
    "rng_seed",
    "evolution",
    "strict_wrap",
    "box",
    "tomography_qubits",
    "tomography_trials",
    "tomography_shots",
    "tomography_sweep",
    "tomography_sweep_trials",
    "sweep_max_qubits",
    "output",
];

impl ExperimentConfig {
    /// Defaults for an experiment kind on the default `6 + 6` qubit grid.
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let (n_x, n_v) = (6, 6);
        Self {
            experiment,
            n_x,
            n_v,
            v_max: Rational::from_integer(1),
            g: None,
            rho_ref: 1.0,
            sigma: DEFAULT_SIGMA,
            amplitude: 0.1,
            k_over_kj: if experiment == ExperimentKind::Landau {
                1.5
            } else {
                0.5
            },
            wave_index: 2,
            window: 1 << n_x,
            horizon: if experiment == ExperimentKind::Landau {
                Horizon::Auto
            } else {
                Horizon::Cycles(Rational::from_integer(3))
            },
            mode: ReadoutMode::Exact,
            shots: 100_000,
            rng_seed: 0,
            evolution: Evolution::Restart,
            strict_wrap: true,
            box_region: default_box(n_x, n_v),
            tomography_qubits: 3,
            tomography_trials: 100,
            tomography_shots: 1_000_000,
            tomography_sweep: vec![1_000, 10_000, 100_000, 1_000_000],
            tomography_sweep_trials: 20,
            sweep_max_qubits: 8,
            output: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                });
            }
            if entries.insert(key, (line_no, value)).is_some() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        let (line, kind) = entries.get("experiment").copied().ok_or(Error::Config {
            line: 0,
            message: "missing required key `experiment`".into(),
        })?;
        let experiment = ExperimentKind::parse(kind).ok_or(Error::Config {
            line,
            message: format!("unknown experiment `{kind}`"),
        })?;
        let mut c = Self::defaults(experiment);
        let get = |k: &str| entries.get(k).copied();
        let fail = |line: usize, message: String| Error::Config { line, message };

        if let Some((l, v)) = get("n_x") {
            c.n_x = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("n_v") {
            c.n_v = parse_num(l, v)?;
        }
        c.window = 1 << c.n_x;
        c.box_region = default_box(c.n_x, c.n_v);
        if let Some((l, v)) = get("v_max") {
            c.v_max = parse_rational(v).map_err(|e| fail(l, e.to_string()))?;
        }
        if let Some((l, v)) = get("g") {
            c.g = Some(parse_num(l, v)?);
        }
        if let Some((l, v)) = get("rho_ref") {
            c.rho_ref = parse_real(l, v)?;
        }
        if let Some((l, v)) = get("sigma") {
            c.sigma = parse_real(l, v)?;
        }
        if let Some((l, v)) = get("amplitude") {
            c.amplitude = parse_real(l, v)?;
        }
        if let Some((l, v)) = get("k_over_kj") {
            if get("g").is_some() {
                return Err(fail(l, "give either `g` or `k_over_kj`, not both".into()));
            }
            c.k_over_kj = parse_real(l, v)?;
        }
        if let Some((l, v)) = get("wave_index") {
            c.wave_index = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("window") {
            c.window = parse_num(l, v)?;
        }
        match (get("cycles"), get("epochs")) {
            (Some((l, _)), Some(_)) => {
                return Err(fail(l, "give either `cycles` or `epochs`, not both".into()))
            }
            (Some((l, v)), None) => {
                let r = parse_rational(v).map_err(|e| fail(l, e.to_string()))?;
                if r <= Rational::zero() {
                    return Err(fail(l, "cycles must be positive".into()));
                }
                c.horizon = Horizon::Cycles(r);
            }
            (None, Some((l, v))) => c.horizon = Horizon::Epochs(parse_num(l, v)?),
            (None, None) => {}
        }
        if let Some((l, v)) = get("mode") {
            c.mode = match v {
                "exact" => ReadoutMode::Exact,
                "shots" => ReadoutMode::Shots,
                _ => {
                    return Err(fail(
                        l,
                        format!("mode must be `exact` or `shots`, got `{v}`"),
                    ))
                }
            };
        }
        if let Some((l, v)) = get("shots") {
            c.shots = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("rng_seed") {
            c.rng_seed = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("evolution") {
            c.evolution = match v {
                "restart" => Evolution::Restart,
                "continue" => Evolution::Continue,
                _ => {
                    return Err(fail(
                        l,
                        format!("evolution must be `restart` or `continue`, got `{v}`"),
                    ))
                }
            };
        }
        if let Some((l, v)) = get("strict_wrap") {
            c.strict_wrap = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("box") {
            let parts: Vec<usize> = v
                .split_whitespace()
                .map(|p| parse_num(l, p))
                .collect::<Result<_>>()?;
            let [j0, j1, k0, k1] = parts[..] else {
                return Err(fail(l, "box needs four integers `j0 j1 k0 k1`".into()));
            };
            c.box_region = BoxRegion { j0, j1, k0, k1 };
        }
        if let Some((l, v)) = get("tomography_qubits") {
            c.tomography_qubits = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("tomography_trials") {
            c.tomography_trials = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("tomography_shots") {
            c.tomography_shots = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("tomography_sweep") {
            c.tomography_sweep = v
                .split_whitespace()
                .map(|p| parse_num(l, p))
                .collect::<Result<_>>()?;
        }
        if let Some((l, v)) = get("tomography_sweep_trials") {
            c.tomography_sweep_trials = parse_num(l, v)?;
        }
        if let Some((l, v)) = get("sweep_max_qubits") {
            c.sweep_max_qubits = parse_num(l, v)?;
        }
        if let Some((_, v)) = get("output") {
            c.output = Some(PathBuf::from(v));
        }
        c.validate().map_err(|e| fail(0, e.to_string()))?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let nx = 1usize << self.n_x.min(30);
        if self.experiment.is_simulation() {
            if !self.window.is_power_of_two() || self.window < 2 || self.window > nx {
                return bad(format!(
                    "window S = {} must be a power of two in [2, {nx}]",
                    self.window
                ));
            }
            let b = self.box_region;
            let nv = 1usize << self.n_v.min(30);
            if self.experiment == ExperimentKind::FreeStream
                && (b.j0 >= b.j1 || b.j1 > nx || b.k0 >= b.k1 || b.k1 > nv)
            {
                return bad(format!("box {b:?} does not fit the {nx} x {nv} grid"));
            }
        }
        if !(self.sigma > 0.0
            && self.rho_ref > 0.0
            && self.amplitude >= 0.0
            && self.k_over_kj > 0.0)
        {
            return bad(
                "sigma, rho_ref, k_over_kj must be positive and amplitude non-negative".into(),
            );
        }
        if self.experiment.is_gravitating() && self.g.is_none() && self.k_over_kj == 1.0 {
            return bad("k_over_kj = 1 is marginal; no linear rate exists".into());
        }
        if self.mode == ReadoutMode::Shots && self.shots == 0 {
            return bad("shot mode needs shots > 0".into());
        }
        if self.tomography_sweep.is_empty() || self.tomography_sweep.contains(&0) {
            return bad("tomography_sweep needs positive shot counts".into());
        }
        if self.sweep_max_qubits == 0 || self.sweep_max_qubits > 16 {
            return bad("sweep_max_qubits must be in 1..=16".into());
        }
        Ok(())
    }

    /// Normalized `key = value` listing of every setting, in key order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("experiment", self.experiment.label().into());
        put("n_x", self.n_x.to_string());
        put("n_v", self.n_v.to_string());
        put("v_max", self.v_max.to_string());
        match self.g {
            Some(g) => put("g", g.to_string()),
            None => put("k_over_kj", self.k_over_kj.to_string()),
        }
        put("rho_ref", self.rho_ref.to_string());
        put("sigma", self.sigma.to_string());
        put("amplitude", self.amplitude.to_string());
        put("wave_index", self.wave_index.to_string());
        put("window", self.window.to_string());
        match self.horizon {
            Horizon::Cycles(c) => put("cycles", c.to_string()),
            Horizon::Epochs(n) => put("epochs", n.to_string()),
            Horizon::Auto => {}
        }
        put(
            "mode",
            match self.mode {
                ReadoutMode::Exact => "exact",
                ReadoutMode::Shots => "shots",
            }
            .into(),
        );
        put("shots", self.shots.to_string());
        put("rng_seed", self.rng_seed.to_string());
        put(
            "evolution",
            match self.evolution {
                Evolution::Restart => "restart",
                Evolution::Continue => "continue",
            }
            .into(),
        );
        put("strict_wrap", self.strict_wrap.to_string());
        let b = self.box_region;
        put("box", format!("{} {} {} {}", b.j0, b.j1, b.k0, b.k1));
        put("tomography_qubits", self.tomography_qubits.to_string());
        put("tomography_trials", self.tomography_trials.to_string());
        put("tomography_shots", self.tomography_shots.to_string());
        put(
            "tomography_sweep",
            self.tomography_sweep
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(" "),
        );
        put(
            "tomography_sweep_trials",
            self.tomography_sweep_trials.to_string(),
        );
        put("sweep_max_qubits", self.sweep_max_qubits.to_string());
        out
    }

    pub fn v_max_f64(&self) -> f64 {
        self.v_max.to_f64().unwrap_or(f64::NAN)
    }
}

fn default_box(n_x: u32, n_v: u32) -> BoxRegion {
    let (nx, nv) = (1usize << n_x.min(30), 1usize << n_v.min(30));
    BoxRegion {
        j0: nx / 4,
        j1: nx / 2,
        k0: nv / 4,
        k1: (3 * nv / 4).max(nv / 4 + 1),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config {
        line,
        message: format!("cannot parse {v:?}"),
    })
}

/// Decimal or `a/b`.
fn parse_real(line: usize, v: &str) -> Result<f64> {
    if v.contains('/') {
        let r = parse_rational(v).map_err(|e| Error::Config {
            line,
            message: e.to_string(),
        })?;
        return Ok(r.to_f64().unwrap_or(f64::NAN));
    }
    let x: f64 = parse_num(line, v)?;
    if !x.is_finite() {
        return Err(Error::Config {
            line,
            message: format!("{v:?} is not finite"),
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_jeans_setup() {
        let c = ExperimentConfig::parse("experiment = jeans\n").unwrap();
        assert_eq!((c.n_x, c.n_v), (6, 6));
        assert_eq!(c.amplitude, 0.1);
        assert_eq!(c.k_over_kj, 0.5);
        assert_eq!(c.window, 64);
        assert_eq!(c.horizon, Horizon::Cycles(Rational::from_integer(3)));
        assert_eq!(
            ExperimentConfig::parse("experiment = landau")
                .unwrap()
                .k_over_kj,
            1.5
        );
    }

    #[test]
    fn parses_every_key() {
        let text = "
            # comment
            experiment = free-stream
            n_x = 5
            n_v = 4   # trailing comment
            v_max = 3/2
            g = 0.25
            rho_ref = 2
            sigma = 1/8
            amplitude = 0.05
            wave_index = 1
            window = 8
            epochs = 12
            mode = shots
            shots = 500
            rng_seed = 7
            evolution = continue
            strict_wrap = false
            box = 1 3 2 5
            tomography_qubits = 2
            tomography_trials = 4
            tomography_shots = 100
            tomography_sweep = 10 100
            tomography_sweep_trials = 3
            sweep_max_qubits = 4
            output = out/dir
        ";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.experiment, ExperimentKind::FreeStream);
        assert_eq!(c.v_max, Rational::new(3, 2));
        assert_eq!(c.g, Some(0.25));
        assert_eq!(c.sigma, 0.125);
        assert_eq!(c.horizon, Horizon::Epochs(12));
        assert_eq!(c.mode, ReadoutMode::Shots);
        assert_eq!(c.evolution, Evolution::Continue);
        assert!(!c.strict_wrap);
        assert_eq!(
            c.box_region,
            BoxRegion {
                j0: 1,
                j1: 3,
                k0: 2,
                k1: 5
            }
        );
        assert_eq!(c.tomography_sweep, vec![10, 100]);
        assert_eq!(c.output, Some(PathBuf::from("out/dir")));
        // round trip through the normalized listing
        let again = ExperimentConfig::parse(&format!("{}output = out/dir\n", c.to_text())).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let err = |t: &str| ExperimentConfig::parse(t).unwrap_err();
        assert!(matches!(
            err("experiment = jeans\nspeed = 3\n"),
            Error::Config { line: 2, .. }
        ));
        assert!(matches!(
            err("experiment = jeans\nn_x = 5\nn_x = 6\n"),
            Error::Config { line: 3, .. }
        ));
        assert!(matches!(
            err("experiment = warp\n"),
            Error::Config { line: 1, .. }
        ));
        assert!(matches!(err("n_x = 5\n"), Error::Config { .. }));
        assert!(matches!(
            err("experiment = jeans\nn_x 5\n"),
            Error::Config { line: 2, .. }
        ));
        assert!(matches!(
            err("experiment = jeans\ng = 1\nk_over_kj = 0.5\n"),
            Error::Config { .. }
        ));
        assert!(matches!(
            err("experiment = jeans\ncycles = 1\nepochs = 3\n"),
            Error::Config { .. }
        ));
        assert!(matches!(
            err("experiment = jeans\nwindow = 3\n"),
            Error::Config { .. }
        ));
        assert!(matches!(
            err("experiment = jeans\nmode = noisy\n"),
            Error::Config { line: 2, .. }
        ));
        assert!(matches!(
            err("experiment = jeans\ncycles = 0\n"),
            Error::Config { .. }
        ));
    }

    #[test]
    fn window_follows_the_grid_unless_given() {
        let c = ExperimentConfig::parse("experiment = jeans\nn_x = 5\n").unwrap();
        assert_eq!(c.window, 32);
        let c = ExperimentConfig::parse("experiment = jeans\nn_x = 5\nwindow = 4\n").unwrap();
        assert_eq!(c.window, 4);
    }
}
