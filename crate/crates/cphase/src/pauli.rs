//! The fixed two-qubit Pauli operator basis.

use nalgebra::{Matrix2, Matrix4};

use crate::states::C64;

/// Labels of the 16 two-qubit Paulis in the fixed order E_{4j+k} = P_j ⊗ P_k
/// with P ∈ (1, σx, σy, σz).
pub const PAULI_LABELS: [&str; 16] = [
    "II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ",
];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-qubit Pauli matrix, index 0 = 1, 1 = σx, 2 = σy, 3 = σz.
pub fn pauli_1q(i: usize) -> Matrix2<C64> {
    match i {
        0 => Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)),
        1 => Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        2 => Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        3 => Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
        _ => panic!("Pauli index {i} out of range"),
    }
}

/// The ordered two-qubit Pauli basis E_i = P_j ⊗ P_k, i = 4j + k.
///
/// Each operator is unitary and Hermitian with Tr(E_i E_j) = 4δ_ij.
#[derive(Debug, Clone)]
pub struct PauliBasis2Q {
    ops: Vec<Matrix4<C64>>,
}

impl Default for PauliBasis2Q {
    fn default() -> Self {
        Self::new()
    }
}

impl PauliBasis2Q {
    pub fn new() -> Self {
        let mut ops = Vec::with_capacity(16);
        for j in 0..4 {
            for k in 0..4 {
                ops.push(pauli_1q(j).kronecker(&pauli_1q(k)));
            }
        }
        Self { ops }
    }

    /// Operator E_i.
    pub fn operator(&self, i: usize) -> &Matrix4<C64> {
        &self.ops[i]
    }

    pub fn label(&self, i: usize) -> &'static str {
        PAULI_LABELS[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matrix4<C64>> {
        self.ops.iter()
    }

    /// Expansion coefficients of an operator: m = Σ_i coeff_i E_i with
    /// coeff_i = Tr(E_i m)/4.
    pub fn expand(&self, m: &Matrix4<C64>) -> [C64; 16] {
        let mut out = [C64::new(0.0, 0.0); 16];
        for (i, e) in self.ops.iter().enumerate() {
            out[i] = (e * m).trace() / C64::new(4.0, 0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn orthogonality_all_256_pairs() {
        let basis = PauliBasis2Q::new();
        for i in 0..16 {
            for j in 0..16 {
                let tr = (basis.operator(i) * basis.operator(j)).trace();
                let expected = if i == j { 4.0 } else { 0.0 };
                assert_abs_diff_eq!(tr.re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn operators_are_hermitian_and_unitary() {
        let basis = PauliBasis2Q::new();
        for e in basis.iter() {
            assert!((e - e.adjoint()).norm() < 1e-12);
            let prod = e * e.adjoint();
            assert!((prod - Matrix4::<C64>::identity()).norm() < 1e-12);
        }
    }

    #[test]
    fn expansion_reproduces_operator() {
        let basis = PauliBasis2Q::new();
        let m = basis.operator(5) * C64::new(0.3, 0.1) + basis.operator(12) * C64::new(-0.2, 0.4);
        let coeffs = basis.expand(&m);
        let mut rebuilt = Matrix4::<C64>::zeros();
        for (i, e) in basis.iter().enumerate() {
            rebuilt += e * coeffs[i];
        }
        assert!((rebuilt - m).norm() < 1e-12);
    }
}
