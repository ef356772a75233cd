//! Phase-space discretization and the classical distribution function.
//!
//! Position cells are unit width (`x_j = j`), velocity cells are centred at
//! `v_k = (2k + 1) V / N_v - V`, so the velocity grid is symmetric about zero
//! and never contains `v = 0`. The maximum velocity `V` is an exact rational
//! so that event times derived from it are exact as well.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational used for velocities and event times.
pub type Rational = Ratio<i64>;

pub(crate) fn to_f64(r: Rational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

/// Parses `"3"`, `"3/4"` or a finite decimal such as `"0.125"` into an exact
/// rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if frac_part.len() > 15 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let den = 10i64.pow(frac_part.len() as u32);
    let frac: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| bad())?
    };
    Ok(Rational::new(sign * (int * den + frac), den))
}

/// Phase-space grid: `N_x = 2^n_x` unit position cells and `N_v = 2^n_v`
/// velocity cells spanning `[-V, V]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    n_x: u32,
    n_v: u32,
    v_max: Rational,
    gravitational_constant: f64,
}

impl GridConfig {
    pub fn new(n_x: u32, n_v: u32, v_max: Rational, gravitational_constant: f64) -> Result<Self> {
        if n_x < 2 {
            return Err(Error::InvalidGrid(format!(
                "n_x = {n_x} must be at least 2"
            )));
        }
        if n_v < 1 {
            return Err(Error::InvalidGrid(format!(
                "n_v = {n_v} must be at least 1"
            )));
        }
        if n_x + n_v > 26 {
            return Err(Error::InvalidGrid(format!(
                "{} qubits exceeds the statevector limit of 26",
                n_x + n_v
            )));
        }
        if v_max <= Rational::zero() {
            return Err(Error::InvalidGrid(format!("V = {v_max} must be positive")));
        }
        if !gravitational_constant.is_finite() || gravitational_constant < 0.0 {
            return Err(Error::InvalidGrid(format!(
                "G = {gravitational_constant} must be finite and non-negative"
            )));
        }
        Ok(Self {
            n_x,
            n_v,
            v_max,
            gravitational_constant,
        })
    }

    pub fn n_x(&self) -> u32 {
        self.n_x
    }

    pub fn n_v(&self) -> u32 {
        self.n_v
    }

    pub fn num_qubits(&self) -> usize {
        (self.n_x + self.n_v) as usize
    }

    /// Number of position cells `N_x`.
    pub fn nx_cells(&self) -> usize {
        1 << self.n_x
    }

    /// Number of velocity cells `N_v`.
    pub fn nv_cells(&self) -> usize {
        1 << self.n_v
    }

    pub fn v_max(&self) -> Rational {
        self.v_max
    }

    pub fn gravitational_constant(&self) -> f64 {
        self.gravitational_constant
    }

    /// Position cell width. Always one.
    pub fn delta_x(&self) -> f64 {
        1.0
    }

    pub fn delta_v(&self) -> Rational {
        self.v_max * 2 / self.nv_cells() as i64
    }

    pub fn delta_v_f64(&self) -> f64 {
        to_f64(self.delta_v())
    }

    /// `v_k = (2k + 1) V / N_v - V`.
    pub fn velocity_of(&self, k: usize) -> Result<Rational> {
        let nv = self.nv_cells();
        if k >= nv {
            return Err(Error::IndexOutOfRange {
                index: k,
                limit: nv,
            });
        }
        Ok(self.v_max * (2 * k as i64 + 1) / nv as i64 - self.v_max)
    }

    pub fn velocity_f64(&self, k: usize) -> f64 {
        to_f64(self.velocity_of(k).expect("velocity index in range"))
    }

    /// `max_k |v_k| = V (N_v - 1) / N_v`.
    pub fn max_speed(&self) -> Rational {
        let nv = self.nv_cells() as i64;
        self.v_max * (nv - 1) / nv
    }

    /// Characteristic time `T = Δx / max|v_k|`: cadence of velocity advection
    /// and force refresh.
    pub fn characteristic_time(&self) -> Rational {
        Rational::from_integer(1) / self.max_speed()
    }

    /// One shear cycle, `2 Δx / Δv = N_v / V`.
    pub fn cycle(&self) -> Rational {
        Rational::from_integer(2) / self.delta_v()
    }

    /// Characteristic times per cycle, `N_v - 1`.
    pub fn epochs_per_cycle(&self) -> usize {
        self.nv_cells() - 1
    }

    /// Flat statevector index of cell `(j, k)`: `R_x` holds the high bits.
    pub fn basis_index(&self, j: usize, k: usize) -> usize {
        (j << self.n_v) | k
    }
}

/// Sampled phase-space density `f[k][j]`, stored row-major by velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFunction {
    grid: GridConfig,
    values: Vec<f64>,
}

/// Amplitude-encoding normalization `M = sqrt(Σ f²)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Normalization(f64);

impl Normalization {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl DistributionFunction {
    pub fn zeros(grid: GridConfig) -> Self {
        let n = grid.nx_cells() * grid.nv_cells();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `func(j, k)` on every cell.
    pub fn from_fn(grid: GridConfig, mut func: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut f = Self::zeros(grid);
        let (nx, nv) = (f.grid.nx_cells(), f.grid.nv_cells());
        for k in 0..nv {
            for j in 0..nx {
                f.values[k * nx + j] = func(j, k);
            }
        }
        f.validate()?;
        Ok(f)
    }

    /// Wraps a row-major (`k` outer, `j` inner) value vector.
    pub fn from_values(grid: GridConfig, values: Vec<f64>) -> Result<Self> {
        let expected = grid.nx_cells() * grid.nv_cells();
        if values.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        let f = Self { grid, values };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        if let Some(bad) = self.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "distribution values must be finite and non-negative, found {bad}"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[k * self.grid.nx_cells() + j]
    }

    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        let nx = self.grid.nx_cells();
        self.values[k * nx + j] = value;
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let nx = self.grid.nx_cells();
        &self.values[k * nx..(k + 1) * nx]
    }

    /// `ρ_j = Δv Σ_k f_{k;j}`.
    pub fn density(&self) -> Vec<f64> {
        let nx = self.grid.nx_cells();
        let dv = self.grid.delta_v_f64();
        let mut rho = vec![0.0; nx];
        for row in self.values.chunks_exact(nx) {
            for (r, f) in rho.iter_mut().zip(row) {
                *r += f;
            }
        }
        rho.iter_mut().for_each(|r| *r *= dv);
        rho
    }

    /// `Δx Δv Σ f`.
    pub fn total_mass(&self) -> f64 {
        self.grid.delta_x() * self.grid.delta_v_f64() * self.values.iter().sum::<f64>()
    }

    pub fn normalization(&self) -> Result<Normalization> {
        let m = self.values.iter().map(|f| f * f).sum::<f64>().sqrt();
        if m == 0.0 {
            return Err(Error::ZeroDistribution);
        }
        Ok(Normalization(m))
    }

    /// Writes `j,k,f` rows, `k` outer and `j` inner.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::from("j,k,f\n");
        let nx = self.grid.nx_cells();
        for k in 0..self.grid.nv_cells() {
            for j in 0..nx {
                writeln!(buf, "{j},{k},{:e}", self.values[k * nx + j]).expect("write to string");
            }
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(grid: GridConfig, input: R) -> Result<Self> {
        let mut f = Self::zeros(grid);
        let (nx, nv) = (f.grid.nx_cells(), f.grid.nv_cells());
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "j,k,f" => {}
            _ => return Err(Error::Parse("missing `j,k,f` header".into())),
        }
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("short row: {line:?}")))
                    .map(str::trim)
            };
            let j: usize = next()?.parse().map_err(|_| Error::Parse(line.clone()))?;
            let k: usize = next()?.parse().map_err(|_| Error::Parse(line.clone()))?;
            let v: f64 = next()?.parse().map_err(|_| Error::Parse(line.clone()))?;
            if j >= nx || k >= nv {
                return Err(Error::Parse(format!("cell ({j},{k}) outside grid")));
            }
            f.values[k * nx + j] = v;
            seen += 1;
        }
        if seen != nx * nv {
            return Err(Error::Parse(format!(
                "expected {} rows, read {seen}",
                nx * nv
            )));
        }
        f.validate()?;
        Ok(f)
    }
}
