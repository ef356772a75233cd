//! Instrumented statevector engine.
//!
//! **Qubit 0 is the most significant bit of the basis index.** With `R_x` on
//! qubits `0..n_x` and `R_v` on `n_x..n_x+n_v` the basis index of `|j⟩|k⟩` is
//! `j·N_v + k`, and circuit diagrams read top to bottom in qubit order.
//!
//! X gates are not applied to memory immediately. They accumulate in a
//! bit-flip frame: the amplitude of logical basis state `i` lives at
//! `amps[i ^ frame]`. Every other gate is written against that mapping, so the
//! frame is an exact representation change, not an approximation.

mod arith;
mod counter;
mod measure;
mod qft;
mod trace;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use counter::{
    increment_mcx_bound, GateCountEntry, GateCounter, GateKind, IncrementStats, Section,
};
pub use measure::sample_multinomial;
pub use trace::replay_trace;

/// Name of a contiguous register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegisterName {
    Position,
    Velocity,
    Custom(String),
}

/// Contiguous qubit range `start..start+len`; the first qubit is the
/// register's most significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterSlice {
    pub name: RegisterName,
    pub start: usize,
    pub len: usize,
}

impl RegisterSlice {
    pub fn new(name: RegisterName, start: usize, len: usize) -> Self {
        Self { name, start, len }
    }

    pub fn custom(name: &str, start: usize, len: usize) -> Self {
        Self::new(RegisterName::Custom(name.to_string()), start, len)
    }

    /// `R_x`: qubits `0..n_x`.
    pub fn position(n_x: usize) -> Self {
        Self::new(RegisterName::Position, 0, n_x)
    }

    /// `R_v`: qubits `n_x..n_x+n_v`.
    pub fn velocity(n_x: usize, n_v: usize) -> Self {
        Self::new(RegisterName::Velocity, n_x, n_v)
    }

    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    /// Qubit holding bit `b` (0 = least significant) of the register value.
    pub fn qubit_for_bit(&self, b: usize) -> usize {
        self.start + self.len - 1 - b
    }

    pub fn overlaps(&self, other: &RegisterSlice) -> bool {
        self.start < other.start + other.len && other.start < self.start + self.len
    }

    fn label(&self) -> String {
        match &self.name {
            RegisterName::Position => "R_x".into(),
            RegisterName::Velocity => "R_v".into(),
            RegisterName::Custom(s) => s.clone(),
        }
    }
}

/// Pure state of `n` qubits.
#[derive(Debug, Clone)]
pub struct QuantumState {
    num_qubits: usize,
    amps: Vec<Complex64>,
    frame: usize,
    counter: GateCounter,
    trace: Option<Vec<String>>,
}

impl QuantumState {
    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Self {
        assert!(num_qubits <= 30, "statevector too large");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self {
            num_qubits,
            amps,
            frame: 0,
            counter: GateCounter::default(),
            trace: None,
        }
    }

    /// Loads amplitudes directly (the amplitude-encoding stand-in). The vector
    /// is normalized; a zero vector is rejected.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::InvalidParameter(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroDistribution);
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
            frame: 0,
            counter: GateCounter::default(),
            trace: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Amplitude of logical basis state `i`.
    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.amps[i ^ self.frame]
    }

    /// All amplitudes in logical order.
    pub fn amplitudes(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.amplitude(i)).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.amplitude(i).norm_sqr())
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn counter(&self) -> &GateCounter {
        &self.counter
    }

    pub fn counter_mut(&mut self) -> &mut GateCounter {
        &mut self.counter
    }

    pub fn take_counter(&mut self) -> GateCounter {
        std::mem::take(&mut self.counter)
    }

    pub fn set_section(&mut self, section: Section) {
        self.counter.set_section(section);
    }

    /// Starts recording a `GATE;qubits;params` trace.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> Option<String> {
        self.trace.as_ref().map(|lines| {
            let mut s = lines.join("\n");
            if !s.is_empty() {
                s.push('\n');
            }
            s
        })
    }

    fn log(&mut self, gate: &str, qubits: &[usize], params: &str) {
        if let Some(lines) = &mut self.trace {
            let q = qubits
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",");
            lines.push(format!("{gate};{q};{params}"));
        }
    }

    /// Bit of the basis index that holds qubit `q`.
    #[inline]
    fn bit(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::IndexOutOfRange {
                index: q,
                limit: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_register(&self, reg: &RegisterSlice) -> Result<()> {
        if reg.len == 0 || reg.start + reg.len > self.num_qubits {
            return Err(Error::InvalidParameter(format!(
                "register {} ({}..{}) does not fit in {} qubits",
                reg.label(),
                reg.start,
                reg.start + reg.len,
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Writes the pending bit-flip frame into memory.
    #[cfg(test)]
    pub(crate) fn flush_frame(&mut self) {
        if self.frame == 0 {
            return;
        }
        let frame = self.frame;
        for p in 0..self.amps.len() {
            let q = p ^ frame;
            if p < q {
                self.amps.swap(p, q);
            }
        }
        self.frame = 0;
    }

    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        self.frame ^= self.bit(q);
        self.counter.record(GateKind::X);
        self.log("X", &[q], "");
        Ok(())
    }

    pub fn apply_h(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let bit = self.bit(q);
        let flipped = self.frame & bit != 0;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for base in 0..self.amps.len() {
            if base & bit != 0 {
                continue;
            }
            // physical pair (base, base|bit); the logical |0⟩ member depends on the frame
            let (i0, i1) = if flipped {
                (base | bit, base)
            } else {
                (base, base | bit)
            };
            let a0 = self.amps[i0];
            let a1 = self.amps[i1];
            self.amps[i0] = (a0 + a1) * s;
            self.amps[i1] = (a0 - a1) * s;
        }
        self.counter.record(GateKind::H);
        self.log("H", &[q], "");
        Ok(())
    }

    /// `S† = diag(1, -i)`.
    pub fn apply_sdg(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let bit = self.bit(q);
        let frame = self.frame;
        for (p, a) in self.amps.iter_mut().enumerate() {
            if (p ^ frame) & bit != 0 {
                *a = Complex64::new(a.im, -a.re);
            }
        }
        self.counter.record(GateKind::Sdg);
        self.log("SDG", &[q], "");
        Ok(())
    }

    /// `diag(1, 1, 1, e^{iθ})` on qubits `a`, `b`.
    pub fn apply_controlled_phase(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        let mask = self.bit(a) | self.bit(b);
        let frame = self.frame;
        let phase = Complex64::from_polar(1.0, theta);
        for (p, amp) in self.amps.iter_mut().enumerate() {
            if (p ^ frame) & mask == mask {
                *amp *= phase;
            }
        }
        self.counter.record(GateKind::ControlledPhase);
        self.log("CP", &[a, b], &format!("{theta}"));
        Ok(())
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        let (ba, bb) = (self.bit(a), self.bit(b));
        let swap_bits = |i: usize| {
            let (x, y) = (i & ba != 0, i & bb != 0);
            if x == y {
                i
            } else {
                i ^ ba ^ bb
            }
        };
        for p in 0..self.amps.len() {
            let q = swap_bits(p);
            if p < q {
                self.amps.swap(p, q);
            }
        }
        self.frame = swap_bits(self.frame);
        self.counter.record(GateKind::Swap);
        self.log("SWAP", &[a, b], "");
        Ok(())
    }

    /// Multi-controlled NOT. Each control is `(qubit, polarity)`: polarity
    /// `true` fires on `|1⟩`, `false` on `|0⟩`.
    pub fn apply_mcx(&mut self, controls: &[(usize, bool)], target: usize) -> Result<()> {
        self.check_qubit(target)?;
        let mut used = self.bit(target);
        let mut fixed_value = 0usize;
        for &(q, pol) in controls {
            self.check_qubit(q)?;
            let b = self.bit(q);
            if used & b != 0 {
                return Err(Error::DuplicateQubit(q));
            }
            used |= b;
            // logical polarity seen through the frame
            if pol != (self.frame & b != 0) {
                fixed_value |= b;
            }
        }
        self.counter.record(GateKind::Mcx(controls.len() as u32));
        if self.trace.is_some() {
            let mut qs: Vec<usize> = controls.iter().map(|c| c.0).collect();
            qs.push(target);
            let pols: String = controls
                .iter()
                .map(|c| if c.1 { '1' } else { '0' })
                .collect();
            self.log("MCX", &qs, &pols);
        }
        let tbit = self.bit(target);
        if controls.is_empty() {
            self.frame ^= tbit;
            return Ok(());
        }
        let free = (self.amps.len() - 1) & !used;
        let mut sub = 0usize;
        loop {
            let i = sub | fixed_value;
            self.amps.swap(i, i | tbit);
            sub = sub.wrapping_sub(free) & free;
            if sub == 0 {
                break;
            }
        }
        Ok(())
    }

    /// Basis-state index of the largest-magnitude amplitude; handy in tests.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_p = -1.0;
        for i in 0..self.dim() {
            let p = self.amplitude(i).norm_sqr();
            if p > best_p {
                best = i;
                best_p = p;
            }
        }
        best
    }

    /// Value of register `reg` within logical basis index `i`.
    pub fn register_value(&self, reg: &RegisterSlice, i: usize) -> usize {
        let shift = self.num_qubits - reg.start - reg.len;
        (i >> shift) & ((1 << reg.len) - 1)
    }

    /// Basis state `|i⟩`.
    pub fn basis(num_qubits: usize, i: usize) -> Self {
        let mut s = Self::zero(num_qubits);
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[i] = Complex64::new(1.0, 0.0);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_state(n: usize, seed: u64) -> QuantumState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1usize << n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        QuantumState::from_amplitudes(amps).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn x_and_h_on_zero() {
        let mut s = QuantumState::zero(1);
        s.apply_x(0).unwrap();
        assert_eq!(s.amplitude(1), Complex64::new(1.0, 0.0));
        let mut s = QuantumState::zero(1);
        s.apply_h(0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(0).re - r).abs() < 1e-15);
        assert!((s.amplitude(1).re - r).abs() < 1e-15);
        assert!(s.apply_h(1).is_err());
    }

    #[test]
    fn h_is_an_involution() {
        let mut s = random_state(4, 7);
        let before = s.amplitudes();
        s.apply_x(2).unwrap();
        s.apply_x(2).unwrap();
        for q in 0..4 {
            s.apply_h(q).unwrap();
            s.apply_h(q).unwrap();
        }
        assert!(max_diff(&before, &s.amplitudes()) <= 1e-14);
    }

    #[test]
    fn sdg_phases_one_component() {
        let mut s = QuantumState::zero(1);
        s.apply_h(0).unwrap();
        s.apply_sdg(0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(1) - Complex64::new(0.0, -r)).norm() < 1e-15);
    }

    #[test]
    fn cnot_examples() {
        // |10⟩ → |11⟩
        let mut s = QuantumState::basis(2, 0b10);
        s.apply_mcx(&[(0, true)], 1).unwrap();
        assert_eq!(s.argmax(), 0b11);
        // open control blocks
        let mut s = QuantumState::basis(2, 0b10);
        s.apply_mcx(&[(0, false)], 1).unwrap();
        assert_eq!(s.argmax(), 0b10);
        assert!(matches!(
            s.apply_mcx(&[(1, true)], 1),
            Err(Error::DuplicateQubit(1))
        ));
    }

    /// Dense 16×16 permutation matrix oracle for a Toffoli-3 on a uniform state.
    #[test]
    fn mcx_matches_dense_matrix() {
        let mut s = QuantumState::zero(4);
        for q in 0..4 {
            s.apply_h(q).unwrap();
        }
        // make it non-uniform so the check is not vacuous
        s.apply_sdg(3).unwrap();
        s.apply_controlled_phase(0, 2, 0.3).unwrap();
        let input = s.amplitudes();
        s.apply_mcx(&[(0, true), (1, true), (2, true)], 3).unwrap();
        let mut matrix = vec![vec![0.0f64; 16]; 16];
        #[allow(clippy::needless_range_loop)]
        for col in 0..16usize {
            let bits = |q: usize| (col >> (3 - q)) & 1;
            let row = if bits(0) == 1 && bits(1) == 1 && bits(2) == 1 {
                col ^ 1
            } else {
                col
            };
            matrix[row][col] = 1.0;
        }
        let expected: Vec<Complex64> = (0..16)
            .map(|r| (0..16).map(|c| input[c] * matrix[r][c]).sum())
            .collect();
        assert!(max_diff(&expected, &s.amplitudes()) == 0.0);
    }

    #[test]
    fn frame_is_transparent_to_every_gate() {
        // the same circuit with and without pending X gates flushed early
        let mut a = random_state(4, 11);
        let mut b = a.clone();
        for s in [&mut a, &mut b] {
            s.apply_x(1).unwrap();
            s.apply_x(3).unwrap();
        }
        b.flush_frame();
        for s in [&mut a, &mut b] {
            s.apply_h(1).unwrap();
            s.apply_sdg(3).unwrap();
            s.apply_controlled_phase(1, 3, 0.7).unwrap();
            s.apply_mcx(&[(1, true), (3, false)], 0).unwrap();
            s.apply_swap(0, 3).unwrap();
            s.apply_x(2).unwrap();
            s.apply_h(2).unwrap();
        }
        assert!(max_diff(&a.amplitudes(), &b.amplitudes()) < 1e-15);
    }

    proptest! {
        #[test]
        fn gates_preserve_norm(seed in 0u64..1000, ops in proptest::collection::vec(0u8..5, 1..40)) {
            let mut s = random_state(5, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            for op in ops {
                let q = rng.random_range(0..5);
                let r = (q + 1 + rng.random_range(0..4)) % 5;
                match op {
                    0 => s.apply_x(q).unwrap(),
                    1 => s.apply_h(q).unwrap(),
                    2 => s.apply_sdg(q).unwrap(),
                    3 => s.apply_controlled_phase(q, r, 1.1).unwrap(),
                    _ => s.apply_mcx(&[(r, true)], q).unwrap(),
                }
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-13);
            }
        }
    }
}
