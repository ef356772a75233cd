//! Register arithmetic built from X and multi-controlled NOT gates: the `MX`
//! conjugation layer and modular increment/decrement by an arbitrary integer.

use super::{QuantumState, RegisterSlice};
use crate::error::{Error, Result};

impl QuantumState {
    /// `MX(N)`: X on every register qubit whose bit of `N` is zero, turning a
    /// value-`N` control pattern into all ones. Self-inverse.
    pub fn apply_mx(&mut self, reg: &RegisterSlice, value: usize) -> Result<()> {
        self.check_register(reg)?;
        if value >> reg.len != 0 {
            return Err(Error::RegisterValue {
                value,
                bits: reg.len,
            });
        }
        for (i, q) in reg.qubits().enumerate() {
            if (value >> (reg.len - 1 - i)) & 1 == 0 {
                self.apply_x(q)?;
            }
        }
        Ok(())
    }

    /// `|i⟩ → |i + p mod 2^n⟩` on `reg`. Negative `p` uses the open-control
    /// decrement triangles.
    pub fn apply_increment(&mut self, reg: &RegisterSlice, p: i64) -> Result<()> {
        self.check_register(reg)?;
        self.shift_register(reg, p, &[])
    }

    /// Increment `target` by `p` only on basis states where `control` holds
    /// `control_value`: `MX(value)`, fully controlled increment, `MX(value)`.
    pub fn apply_controlled_increment(
        &mut self,
        control: &RegisterSlice,
        control_value: usize,
        target: &RegisterSlice,
        p: i64,
    ) -> Result<()> {
        self.check_register(control)?;
        self.check_register(target)?;
        if control.overlaps(target) {
            return Err(Error::OverlappingRegisters(control.label()));
        }
        if control_value >> control.len != 0 {
            return Err(Error::RegisterValue {
                value: control_value,
                bits: control.len,
            });
        }
        if reduced_shift(target.len, p) == 0 {
            return Ok(());
        }
        self.apply_mx(control, control_value)?;
        let controls: Vec<(usize, bool)> = control.qubits().map(|q| (q, true)).collect();
        self.shift_register(target, p, &controls)?;
        self.apply_mx(control, control_value)
    }

    fn shift_register(
        &mut self,
        reg: &RegisterSlice,
        p: i64,
        extra: &[(usize, bool)],
    ) -> Result<()> {
        let magnitude = reduced_shift(reg.len, p);
        if magnitude == 0 {
            return Ok(());
        }
        let polarity = p > 0;
        let mut mcx = 0u64;
        let mut controls: Vec<(usize, bool)> = Vec::with_capacity(reg.len + extra.len());
        for b in 0..reg.len {
            if (magnitude >> b) & 1 == 0 {
                continue;
            }
            // +/- 2^b is +/- 1 on the top (n - b) qubits
            let width = reg.len - b;
            for i in 0..width {
                controls.clear();
                controls.extend_from_slice(extra);
                controls.extend((i + 1..width).map(|c| (reg.start + c, polarity)));
                self.apply_mcx(&controls, reg.start + i)?;
                mcx += 1;
            }
        }
        self.counter.record_increment(reg.len, magnitude, mcx);
        Ok(())
    }
}

/// `|p| mod 2^n`.
fn reduced_shift(register_size: usize, p: i64) -> u64 {
    let mask = if register_size >= 64 {
        u64::MAX
    } else {
        (1u64 << register_size) - 1
    };
    p.unsigned_abs() & mask
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_state;
    use super::*;
    use crate::statevector::{GateKind, Section};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn rotated(input: &[Complex64], n: usize, p: i64) -> Vec<Complex64> {
        let size = 1i64 << n;
        let mut out = vec![Complex64::new(0.0, 0.0); input.len()];
        for (i, a) in input.iter().enumerate() {
            out[(i as i64 + p).rem_euclid(size) as usize] = *a;
        }
        out
    }

    #[test]
    fn mx_examples() {
        let reg = RegisterSlice::custom("r", 0, 3);
        let mut s = QuantumState::basis(3, 0b010);
        s.apply_mx(&reg, 7).unwrap();
        assert_eq!(s.argmax(), 0b010);
        s.apply_mx(&reg, 0).unwrap();
        assert_eq!(s.argmax(), 0b101);
        let mut s = QuantumState::basis(3, 0);
        s.apply_mx(&reg, 5).unwrap();
        assert_eq!(s.argmax(), 0b010, "only the middle qubit flips");
        assert_eq!(s.counter().get(Section::Other, GateKind::X), 1);
        assert!(s.apply_mx(&reg, 8).is_err());
    }

    #[test]
    fn increment_wraps() {
        let reg = RegisterSlice::custom("r", 0, 4);
        let mut s = QuantumState::basis(4, 15);
        s.apply_increment(&reg, 1).unwrap();
        assert_eq!(s.argmax(), 0);
    }

    #[test]
    fn increment_by_four_uses_the_shrunken_triangle() {
        let reg = RegisterSlice::custom("r", 0, 4);
        for i in 0..16 {
            let mut s = QuantumState::basis(4, i);
            s.enable_trace();
            s.apply_increment(&reg, 4).unwrap();
            assert_eq!(s.argmax(), (i + 4) % 16);
            assert_eq!(s.trace().unwrap(), "MCX;1,0;1\nMCX;1;\n");
        }
    }

    #[test]
    fn negative_shift_matches_rotation_oracle() {
        let reg = RegisterSlice::custom("r", 0, 5);
        let mut s = random_state(5, 3);
        let expected = rotated(&s.amplitudes(), 5, -7);
        s.apply_increment(&reg, -7).unwrap();
        assert_eq!(s.amplitudes(), expected);
    }

    #[test]
    fn exhaustive_permutation_table() {
        for n in 1..=6usize {
            let reg = RegisterSlice::custom("r", 0, n);
            let size = 1i64 << n;
            for p in -(size - 1)..size {
                for i in 0..size as usize {
                    let mut s = QuantumState::basis(n, i);
                    s.apply_increment(&reg, p).unwrap();
                    assert_eq!(
                        s.argmax() as i64,
                        (i as i64 + p).rem_euclid(size),
                        "n={n} p={p} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn mcx_count_bound_sweep() {
        for n in 1..=8usize {
            let reg = RegisterSlice::custom("r", 0, n);
            for p in 1..(1i64 << n) {
                for sign in [1, -1] {
                    let mut s = QuantumState::zero(n);
                    s.apply_increment(&reg, sign * p).unwrap();
                    let stats = s.counter().increments();
                    assert_eq!(stats.circuits, 1);
                    assert_eq!(stats.bound_violations, 0, "n={n} p={}", sign * p);
                }
            }
        }
    }

    #[test]
    fn controlled_increment_examples() {
        let rx = RegisterSlice::position(3);
        let rv = RegisterSlice::velocity(3, 2);
        let idx = |j: usize, k: usize| (j << 2) | k;
        let mut s = QuantumState::basis(5, idx(3, 2));
        s.apply_controlled_increment(&rx, 3, &rv, 1).unwrap();
        assert_eq!(s.argmax(), idx(3, 3));
        let mut s = QuantumState::basis(5, idx(2, 2));
        s.apply_controlled_increment(&rx, 3, &rv, 1).unwrap();
        assert_eq!(s.argmax(), idx(2, 2));
        assert!(s.apply_controlled_increment(&rx, 8, &rv, 1).is_err());
        assert!(s.apply_controlled_increment(&rx, 1, &rx, 1).is_err());
    }

    /// Block-diagonal permutation oracle on 2^8 amplitudes.
    #[test]
    fn controlled_increment_matches_block_permutation() {
        let rx = RegisterSlice::position(4);
        let rv = RegisterSlice::velocity(4, 4);
        for (value, p) in [(0usize, 3i64), (9, -5), (15, 1), (6, 12)] {
            let mut s = random_state(8, value as u64 + 100);
            let input = s.amplitudes();
            s.apply_controlled_increment(&rx, value, &rv, p).unwrap();
            let mut expected = input.clone();
            for k in 0..16i64 {
                let to = (k + p).rem_euclid(16) as usize;
                expected[(value << 4) | to] = input[(value << 4) | k as usize];
            }
            assert_eq!(s.amplitudes(), expected);
            // and velocity-controlled shifts of R_x, as in configuration advection
            let mut s = random_state(8, value as u64 + 200);
            let input = s.amplitudes();
            s.apply_controlled_increment(&rv, value, &rx, p).unwrap();
            let mut expected = input.clone();
            for j in 0..16i64 {
                let to = (j + p).rem_euclid(16) as usize;
                expected[(to << 4) | value] = input[((j as usize) << 4) | value];
            }
            assert_eq!(s.amplitudes(), expected);
        }
    }

    proptest! {
        #[test]
        fn increment_then_decrement_is_identity(n in 1usize..7, p in -200i64..200, seed in 0u64..50) {
            let reg = RegisterSlice::custom("r", 0, n);
            let mut s = random_state(n, seed);
            let before = s.amplitudes();
            s.apply_increment(&reg, p).unwrap();
            s.apply_increment(&reg, -p).unwrap();
            prop_assert_eq!(before, s.amplitudes());
        }

        #[test]
        fn mx_is_an_involution(value in 0usize..32, seed in 0u64..50) {
            let reg = RegisterSlice::custom("r", 1, 5);
            let mut s = random_state(6, seed);
            let before = s.amplitudes();
            s.apply_mx(&reg, value).unwrap();
            s.apply_mx(&reg, value).unwrap();
            prop_assert_eq!(before, s.amplitudes());
        }
    }
}
