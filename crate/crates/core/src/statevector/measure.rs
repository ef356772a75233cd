//! Post-selection and shot sampling.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::QuantumState;
use crate::error::{Error, Result};

impl QuantumState {
    fn outcome_mask(&self, qubits: &[usize], outcome: &[bool]) -> Result<(usize, usize)> {
        if qubits.len() != outcome.len() {
            return Err(Error::InvalidParameter(format!(
                "{} qubits but {} outcome bits",
                qubits.len(),
                outcome.len()
            )));
        }
        let mut mask = 0usize;
        let mut value = 0usize;
        for (&q, &bit) in qubits.iter().zip(outcome) {
            self.check_qubit(q)?;
            let b = self.bit(q);
            if mask & b != 0 {
                return Err(Error::DuplicateQubit(q));
            }
            mask |= b;
            if bit {
                value |= b;
            }
        }
        Ok((mask, value))
    }

    /// Probability that measuring `qubits` yields `outcome`.
    pub fn outcome_probability(&self, qubits: &[usize], outcome: &[bool]) -> Result<f64> {
        let (mask, value) = self.outcome_mask(qubits, outcome)?;
        let frame = self.frame;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(p, _)| (p ^ frame) & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects onto `outcome` for `qubits`, renormalizes, and returns the
    /// probability of that outcome.
    pub fn postselect(&mut self, qubits: &[usize], outcome: &[bool]) -> Result<f64> {
        let (mask, value) = self.outcome_mask(qubits, outcome)?;
        let frame = self.frame;
        let mut prob = 0.0;
        for (p, a) in self.amps.iter_mut().enumerate() {
            if (p ^ frame) & mask == value {
                prob += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if prob <= f64::MIN_POSITIVE {
            return Err(Error::ImpossibleOutcome);
        }
        let scale = 1.0 / prob.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= scale);
        Ok(prob)
    }

    /// Measures every qubit `shots` times; keys are logical basis indices.
    pub fn sample_counts(&self, shots: u64, seed: u64) -> BTreeMap<usize, u64> {
        sample_multinomial(&self.probabilities(), shots, seed)
    }
}

/// Histogram of `shots` i.i.d. draws from `probs` (which need not be exactly
/// normalized). Drawn as a chain of conditional binomials, so the cost is
/// independent of `shots` and the result is fixed by `seed`.
pub fn sample_multinomial(probs: &[f64], shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining_mass: f64 = probs.iter().sum();
    let mut remaining = shots;
    let mut counts = BTreeMap::new();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let q = if remaining_mass > 0.0 {
            (p / remaining_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let last = i + 1 == probs.len();
        let n = if last && q > 0.0 {
            remaining
        } else if q == 0.0 {
            0
        } else if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("valid binomial")
                .sample(&mut rng)
        };
        if n > 0 {
            counts.insert(i, n);
        }
        remaining -= n;
        remaining_mass -= p;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_state;
    use super::*;

    #[test]
    fn postselect_examples() {
        let mut s = QuantumState::zero(2);
        let p = s.postselect(&[0], &[false]).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(s.argmax(), 0);

        // (|00⟩ + |10⟩)/√2
        let mut s = QuantumState::zero(2);
        s.apply_h(0).unwrap();
        let p = s.postselect(&[0], &[false]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((s.amplitude(0).re - 1.0).abs() < 1e-15);

        // Bell state
        let mut s = QuantumState::zero(2);
        s.apply_h(0).unwrap();
        s.apply_mcx(&[(0, true)], 1).unwrap();
        let p = s.postselect(&[0], &[true]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((s.amplitude(3).re - 1.0).abs() < 1e-15);

        assert!(matches!(
            s.postselect(&[0], &[false]),
            Err(Error::ImpossibleOutcome)
        ));
        assert!(matches!(
            s.postselect(&[1, 1], &[true, true]),
            Err(Error::DuplicateQubit(1))
        ));
    }

    #[test]
    fn postselect_respects_the_frame() {
        let mut s = QuantumState::zero(3);
        s.apply_x(1).unwrap();
        s.apply_h(2).unwrap();
        let p = s.postselect(&[1, 2], &[true, true]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(s.argmax(), 0b011);
    }

    #[test]
    fn basis_state_sampling() {
        let s = QuantumState::zero(1);
        let counts = s.sample_counts(100, 1);
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&0], 100);
    }

    #[test]
    fn uniform_sampling_within_five_sigma() {
        let mut s = QuantumState::zero(1);
        s.apply_h(0).unwrap();
        let shots = 1_000_000u64;
        let counts = s.sample_counts(shots, 42);
        let sigma = (shots as f64 * 0.25).sqrt();
        for o in 0..2 {
            let c = *counts.get(&o).unwrap_or(&0) as f64;
            assert!((c - 500_000.0).abs() < 5.0 * sigma, "outcome {o}: {c}");
        }
    }

    /// Dvoretzky–Kiefer–Wolfowitz band on the empirical CDF, failure rate 1e-6.
    #[test]
    fn sampling_within_dkw_band() {
        let s = random_state(3, 9);
        let probs = s.probabilities();
        let shots = 200_000u64;
        let counts = s.sample_counts(shots, 17);
        let eps = ((2.0 / 1e-6f64).ln() / (2.0 * shots as f64)).sqrt();
        let (mut cdf, mut emp) = (0.0, 0.0);
        for (i, p) in probs.iter().enumerate() {
            cdf += p;
            emp += *counts.get(&i).unwrap_or(&0) as f64 / shots as f64;
            assert!((cdf - emp).abs() <= eps, "i={i}: {cdf} vs {emp}");
        }
        assert_eq!(counts.values().sum::<u64>(), shots);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let s = random_state(4, 2);
        assert_eq!(s.sample_counts(1000, 5), s.sample_counts(1000, 5));
        assert_ne!(s.sample_counts(1000, 5), s.sample_counts(1000, 6));
    }
}
