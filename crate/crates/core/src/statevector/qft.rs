use std::f64::consts::PI;

use super::{QuantumState, RegisterSlice};
use crate::error::Result;

impl QuantumState {
    /// Quantum Fourier transform on `reg` with kernel `exp(+2πi·jk/N)/√N`.
    pub fn apply_qft(&mut self, reg: &RegisterSlice) -> Result<()> {
        self.check_register(reg)?;
        let m = reg.len;
        for i in 0..m {
            self.apply_h(reg.start + i)?;
            for j in i + 1..m {
                let theta = 2.0 * PI / (1u64 << (j - i + 1)) as f64;
                self.apply_controlled_phase(reg.start + j, reg.start + i, theta)?;
            }
        }
        for i in 0..m / 2 {
            self.apply_swap(reg.start + i, reg.start + m - 1 - i)?;
        }
        Ok(())
    }

    /// Exact inverse of [`apply_qft`](Self::apply_qft).
    pub fn apply_iqft(&mut self, reg: &RegisterSlice) -> Result<()> {
        self.check_register(reg)?;
        let m = reg.len;
        for i in (0..m / 2).rev() {
            self.apply_swap(reg.start + i, reg.start + m - 1 - i)?;
        }
        for i in (0..m).rev() {
            for j in (i + 1..m).rev() {
                let theta = -2.0 * PI / (1u64 << (j - i + 1)) as f64;
                self.apply_controlled_phase(reg.start + j, reg.start + i, theta)?;
            }
            self.apply_h(reg.start + i)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_state;
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn qft_of_zero_is_uniform() {
        let mut s = QuantumState::zero(4);
        s.apply_qft(&RegisterSlice::custom("r", 0, 4)).unwrap();
        for a in s.amplitudes() {
            assert!((a - Complex64::new(0.25, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn iqft_inverts_qft() {
        let reg = RegisterSlice::custom("r", 1, 4);
        let mut s = random_state(6, 5);
        let before = s.amplitudes();
        s.apply_qft(&reg).unwrap();
        s.apply_iqft(&reg).unwrap();
        let err = before
            .iter()
            .zip(s.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12);
    }

    /// Direct O(N²) DFT column oracle.
    #[test]
    fn qft_columns_match_dft() {
        let n = 5;
        let size = 1usize << n;
        let reg = RegisterSlice::custom("r", 0, n);
        for j in 0..size {
            let mut s = QuantumState::basis(n, j);
            s.apply_qft(&reg).unwrap();
            for k in 0..size {
                let expected = Complex64::from_polar(
                    1.0 / (size as f64).sqrt(),
                    2.0 * PI * (j * k) as f64 / size as f64,
                );
                assert!((s.amplitude(k) - expected).norm() < 1e-13, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn qft_on_a_subregister_leaves_the_rest_alone() {
        // |j⟩|k⟩ with the transform on the first register only
        let mut s = QuantumState::basis(5, (3 << 2) | 2);
        s.apply_qft(&RegisterSlice::position(3)).unwrap();
        for i in 0..32 {
            let a = s.amplitude(i);
            if i & 3 != 2 {
                assert_eq!(a.norm(), 0.0);
            } else {
                let k = i >> 2;
                let expected =
                    Complex64::from_polar(1.0 / 8f64.sqrt(), 2.0 * PI * (3 * k) as f64 / 8.0);
                assert!((a - expected).norm() < 1e-14);
            }
        }
    }
}
