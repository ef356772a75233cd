//! Pure-state tomography from four product measurement bases.
//!
//! The bases are the computational basis, `H` on every qubit, `S†` then `H`
//! on every qubit, and `S†` on even-indexed qubits followed by `H` on every
//! qubit. The state is reconstructed by maximizing the multinomial
//! log-likelihood over unit vectors.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::statevector::{sample_multinomial, QuantumState, Section};

const MAX_ITERATIONS: usize = 10_000;
const TOLERANCE: f64 = 1e-10;
const RANDOM_RESTARTS: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Basis {
    Computational,
    Hadamard,
    SdgHadamard,
    AlternatingSdgHadamard,
}

impl Basis {
    pub const ALL: [Basis; 4] = [
        Basis::Computational,
        Basis::Hadamard,
        Basis::SdgHadamard,
        Basis::AlternatingSdgHadamard,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Basis::Computational => "B1",
            Basis::Hadamard => "B2",
            Basis::SdgHadamard => "B3",
            Basis::AlternatingSdgHadamard => "B4",
        }
    }

    fn applies_sdg(self, qubit: usize) -> bool {
        match self {
            Basis::Computational | Basis::Hadamard => false,
            Basis::SdgHadamard => true,
            Basis::AlternatingSdgHadamard => qubit.is_multiple_of(2),
        }
    }

    fn applies_h(self) -> bool {
        self != Basis::Computational
    }

    /// Applies the basis-change circuit with the simulator's gates.
    pub fn rotate(self, state: &mut QuantumState) -> Result<()> {
        for q in 0..state.num_qubits() {
            if self.applies_sdg(q) {
                state.apply_sdg(q)?;
            }
        }
        if self.applies_h() {
            for q in 0..state.num_qubits() {
                state.apply_h(q)?;
            }
        }
        Ok(())
    }
}

/// Four bases with a fixed number of shots each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TomographyPlan {
    num_qubits: usize,
    shots: u64,
}

impl TomographyPlan {
    pub fn new(num_qubits: usize, shots: u64) -> Result<Self> {
        if num_qubits == 0 || num_qubits > 12 {
            return Err(Error::InvalidParameter(format!(
                "tomography supports 1 to 12 qubits, got {num_qubits}"
            )));
        }
        if shots == 0 {
            return Err(Error::InvalidParameter(
                "tomography needs at least one shot per basis".into(),
            ));
        }
        Ok(Self { num_qubits, shots })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }
}

/// Outcome histograms, one per basis in [`Basis::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomographyCounts {
    pub counts: [BTreeMap<usize, u64>; 4],
}

impl TomographyCounts {
    /// `basis,outcome,count`, zero counts omitted.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "basis,outcome,count")?;
        for (basis, counts) in Basis::ALL.iter().zip(&self.counts) {
            for (outcome, count) in counts {
                writeln!(out, "{},{outcome},{count}", basis.label())?;
            }
        }
        Ok(())
    }
}

/// Samples `plan.shots()` outcomes in each basis from copies of `state`.
pub fn collect(state: &QuantumState, plan: &TomographyPlan, seed: u64) -> Result<TomographyCounts> {
    if state.num_qubits() != plan.num_qubits {
        return Err(Error::InvalidParameter(format!(
            "plan is for {} qubits, state has {}",
            plan.num_qubits,
            state.num_qubits()
        )));
    }
    let mut counts: [BTreeMap<usize, u64>; 4] = Default::default();
    for (i, basis) in Basis::ALL.iter().enumerate() {
        let mut s = state.clone();
        s.set_section(Section::Tomography);
        basis.rotate(&mut s)?;
        counts[i] = s.sample_counts(plan.shots, seed.wrapping_mul(4).wrapping_add(i as u64));
    }
    Ok(TomographyCounts { counts })
}

/// Basis-rotated outcome probabilities of an exact state, for noiseless
/// reconstruction.
pub fn exact_probabilities(state: &QuantumState) -> Result<[Vec<f64>; 4]> {
    let mut out: [Vec<f64>; 4] = Default::default();
    for (i, basis) in Basis::ALL.iter().enumerate() {
        let mut s = state.clone();
        basis.rotate(&mut s)?;
        out[i] = s.probabilities();
    }
    Ok(out)
}

/// Maximum-likelihood unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateEstimate {
    amplitudes: Vec<Complex64>,
    log_likelihood: f64,
    iterations: usize,
}

impl PureStateEstimate {
    /// Unit-norm amplitudes, phase-fixed so the largest entry is real and
    /// non-negative.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Mean per-shot log-likelihood.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `|⟨other|self⟩|²`.
    pub fn fidelity(&self, other: &[Complex64]) -> f64 {
        fidelity(&self.amplitudes, other)
    }
}

/// `|⟨a|b⟩|² / (‖a‖² ‖b‖²)`.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let overlap: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    overlap.norm_sqr() / (na * nb)
}

/// Per-basis relative frequencies.
type Frequencies = [Vec<f64>; 4];

fn frequencies(counts: &TomographyCounts, dim: usize) -> Result<Frequencies> {
    let mut out: Frequencies = Default::default();
    for (i, c) in counts.counts.iter().enumerate() {
        let total: u64 = c.values().sum();
        if total == 0 {
            return Err(Error::InvalidParameter(format!(
                "basis {} has no shots",
                Basis::ALL[i].label()
            )));
        }
        let mut f = vec![0.0; dim];
        for (&o, &n) in c {
            if o >= dim {
                return Err(Error::IndexOutOfRange {
                    index: o,
                    limit: dim,
                });
            }
            f[o] = n as f64 / total as f64;
        }
        out[i] = f;
    }
    Ok(out)
}

fn h_layer(v: &mut [Complex64], n: usize) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for q in 0..n {
        let bit = 1 << (n - 1 - q);
        for i in 0..v.len() {
            if i & bit == 0 {
                let (a, b) = (v[i], v[i | bit]);
                v[i] = (a + b) * r;
                v[i | bit] = (a - b) * r;
            }
        }
    }
}

fn phase_layer(v: &mut [Complex64], n: usize, basis: Basis, conjugate: bool) {
    let phase = if conjugate {
        Complex64::i()
    } else {
        -Complex64::i()
    };
    for q in 0..n {
        if basis.applies_sdg(q) {
            let bit = 1 << (n - 1 - q);
            for (i, a) in v.iter_mut().enumerate() {
                if i & bit != 0 {
                    *a *= phase;
                }
            }
        }
    }
}

/// `U_b ψ`.
fn rotate_vec(psi: &[Complex64], n: usize, basis: Basis) -> Vec<Complex64> {
    let mut v = psi.to_vec();
    phase_layer(&mut v, n, basis, false);
    if basis.applies_h() {
        h_layer(&mut v, n);
    }
    v
}

/// `U_b† φ`.
fn unrotate_vec(phi: &mut [Complex64], n: usize, basis: Basis) {
    if basis.applies_h() {
        h_layer(phi, n);
    }
    phase_layer(phi, n, basis, true);
}

const PROB_FLOOR: f64 = 1e-300;

fn log_likelihood(psi: &[Complex64], n: usize, freqs: &Frequencies) -> f64 {
    Basis::ALL
        .iter()
        .zip(freqs)
        .map(|(&b, f)| {
            rotate_vec(psi, n, b)
                .iter()
                .zip(f)
                .filter(|(_, &fo)| fo > 0.0)
                .map(|(a, &fo)| fo * a.norm_sqr().max(PROB_FLOOR).ln())
                .sum::<f64>()
        })
        .sum()
}

/// `R ψ` with `R = Σ_b Σ_o (f_{b,o} / p_{b,o}) U_b†|o⟩⟨o|U_b`.
fn r_apply(psi: &[Complex64], n: usize, freqs: &Frequencies) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (&b, f) in Basis::ALL.iter().zip(freqs) {
        let mut phi = rotate_vec(psi, n, b);
        for (a, &fo) in phi.iter_mut().zip(f) {
            let p = a.norm_sqr().max(PROB_FLOOR);
            *a *= fo / p;
        }
        unrotate_vec(&mut phi, n, b);
        for (o, p) in out.iter_mut().zip(&phi) {
            *o += p;
        }
    }
    out
}

fn normalized(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

fn fix_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let lead = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_default();
    if lead.norm() > 0.0 {
        let phase = lead.conj() / lead.norm();
        v.iter_mut().for_each(|a| *a *= phase);
    }
    v
}

/// Ascent along `(R - 4)ψ` with an adaptive step; `α = 1/4` is the plain
/// `R ψ` fixed-point iteration. Returns `(ψ, log L, iterations, converged)`.
fn ascend(
    start: Vec<Complex64>,
    n: usize,
    freqs: &Frequencies,
) -> (Vec<Complex64>, f64, usize, f64) {
    let mut psi = normalized(start);
    let mut ll = log_likelihood(&psi, n, freqs);
    let mut alpha = 0.25;
    let mut gain = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let r = r_apply(&psi, n, freqs);
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<Complex64> = psi
                .iter()
                .zip(&r)
                .map(|(p, rp)| p + (rp - p * 4.0) * alpha)
                .collect();
            let trial = normalized(trial);
            let trial_ll = log_likelihood(&trial, n, freqs);
            if trial_ll >= ll {
                gain = trial_ll - ll;
                psi = trial;
                ll = trial_ll;
                alpha = (alpha * 1.5).min(16.0);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return (psi, ll, it, 0.0);
        }
        if gain < TOLERANCE {
            return (psi, ll, it, gain);
        }
    }
    (psi, ll, MAX_ITERATIONS, gain)
}

/// Maximum-likelihood reconstruction. Starts from the computational-basis
/// magnitudes with zero phases, plus a few seeded random starts; the best
/// likelihood wins.
pub fn reconstruct(counts: &TomographyCounts, plan: &TomographyPlan) -> Result<PureStateEstimate> {
    let freqs = frequencies(counts, plan.dim())?;
    reconstruct_from_frequencies(&freqs, plan.num_qubits)
}

/// Reconstruction from exact basis probabilities instead of counts.
pub fn reconstruct_from_probabilities(
    probs: &[Vec<f64>; 4],
    num_qubits: usize,
) -> Result<PureStateEstimate> {
    reconstruct_from_frequencies(probs, num_qubits)
}

fn reconstruct_from_frequencies(freqs: &Frequencies, n: usize) -> Result<PureStateEstimate> {
    let dim = 1usize << n;
    if freqs.iter().any(|f| f.len() != dim) {
        return Err(Error::InvalidParameter(format!(
            "expected {dim} outcomes per basis"
        )));
    }
    // the likelihood surface has local maxima; B1 magnitudes with random
    // phases and unstructured Gaussian vectors cover it well in practice
    let magnitudes: Vec<f64> = freqs[0].iter().map(|f| f.sqrt()).collect();
    let mut starts: Vec<Vec<Complex64>> =
        vec![magnitudes.iter().map(|&m| Complex64::new(m, 0.0)).collect()];
    let mut rng = ChaCha8Rng::seed_from_u64(0x7061_7468);
    for _ in 0..RANDOM_RESTARTS {
        starts.push(
            magnitudes
                .iter()
                .map(|&m| Complex64::from_polar(m, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect(),
        );
        starts.push(
            (0..dim)
                .map(|_| {
                    Complex64::new(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    )
                })
                .collect(),
        );
    }
    let mut best: Option<(Vec<Complex64>, f64, usize, f64)> = None;
    let mut total_iterations = 0;
    for start in starts {
        if start.iter().all(|a| a.norm_sqr() == 0.0) {
            continue;
        }
        let run = ascend(start, n, freqs);
        total_iterations += run.2;
        if best.as_ref().is_none_or(|b| run.1 > b.1) {
            best = Some(run);
        }
    }
    let (psi, ll, iterations, gain) = best.ok_or(Error::ZeroDistribution)?;
    if iterations >= MAX_ITERATIONS && gain >= TOLERANCE {
        return Err(Error::TomographyNonConvergence {
            iterations,
            last_gain: gain,
        });
    }
    log::debug!("tomography: log L = {ll}, {total_iterations} iterations over all starts");
    Ok(PureStateEstimate {
        amplitudes: fix_phase(psi),
        log_likelihood: ll / 4.0,
        iterations,
    })
}

/// Draws a histogram per basis from given probabilities (used when the
/// rotated distributions are already known).
pub fn sample_bases(probs: &[Vec<f64>; 4], shots: u64, seed: u64) -> TomographyCounts {
    let mut counts: [BTreeMap<usize, u64>; 4] = Default::default();
    for (i, p) in probs.iter().enumerate() {
        counts[i] = sample_multinomial(p, shots, seed.wrapping_mul(4).wrapping_add(i as u64));
    }
    TomographyCounts { counts }
}

/// Haar-distributed pure state: normalized i.i.d. complex Gaussians.
pub fn haar_random_state(num_qubits: usize, seed: u64) -> QuantumState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << num_qubits)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    QuantumState::from_amplitudes(amps).expect("Gaussian vector is non-zero almost surely")
}
