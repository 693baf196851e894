//! Two-qubit polarization states, fidelities and entanglement measures.
//!
//! Everything in this crate works in the fixed computational basis
//! (HH, HV, VH, VV), with the logical 0 encoded in horizontal (H) and the
//! logical 1 in vertical (V) polarization. Complex amplitudes are double
//! precision throughout; all comparisons use the explicit tolerances
//! documented per function.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Labels of the fixed two-qubit basis order.
pub const BASIS_ORDER: [&str; 4] = ["HH", "HV", "VH", "VV"];

/// Elementwise tolerance for Hermiticity checks on density matrices.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalue floor below which a reconstructed matrix is flagged as
/// non-physical. Informational only: no computation refuses to proceed on
/// a matrix that fails the flag.
pub const EPS_PHYS: f64 = 0.02;

/// Fidelity threshold above which a CHSH inequality is necessarily
/// violated: (2 + 3√2)/8 ≈ 0.7803.
pub fn chsh_threshold() -> f64 {
    (2.0 + 3.0 * std::f64::consts::SQRT_2) / 8.0
}

/// `true` iff a fidelity to a maximally entangled state guarantees a CHSH
/// violation. The threshold is strict: exactly 0.78 does not qualify.
pub fn chsh_fidelity_check(fidelity: f64) -> bool {
    fidelity > chsh_threshold()
}

/// A normalized single-qubit polarization state (α_H, α_V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitKet(Vector2<C64>);

impl SingleQubitKet {
    /// Builds a ket from two amplitudes, normalizing them. Errors when
    /// both amplitudes are (numerically) zero.
    pub fn new(alpha_h: C64, alpha_v: C64) -> Result<Self> {
        let v = Vector2::new(alpha_h, alpha_v);
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::InvalidInput(
                "single-qubit amplitudes have zero norm".into(),
            ));
        }
        Ok(Self(v / C64::new(n, 0.0)))
    }

    /// |H⟩ = (1, 0)
    pub fn h() -> Self {
        Self(Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)))
    }

    /// |V⟩ = (0, 1)
    pub fn v() -> Self {
        Self(Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0)))
    }

    /// |+⟩ = (|H⟩ + |V⟩)/√2
    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self(Vector2::new(C64::new(s, 0.0), C64::new(s, 0.0)))
    }

    /// |−⟩ = (|H⟩ − |V⟩)/√2
    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self(Vector2::new(C64::new(s, 0.0), C64::new(-s, 0.0)))
    }

    /// |L⟩ = (|H⟩ + i|V⟩)/√2
    pub fn left() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self(Vector2::new(C64::new(s, 0.0), C64::new(0.0, s)))
    }

    /// |R⟩ = (|H⟩ − i|V⟩)/√2
    pub fn right() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self(Vector2::new(C64::new(s, 0.0), C64::new(0.0, -s)))
    }

    pub fn amplitudes(&self) -> (C64, C64) {
        (self.0[0], self.0[1])
    }

    pub fn as_vector(&self) -> &Vector2<C64> {
        &self.0
    }

    /// Rank-1 projector |ψ⟩⟨ψ| on the single-qubit space.
    pub fn projector(&self) -> Matrix2<C64> {
        &self.0 * self.0.adjoint()
    }
}

/// A two-qubit pure state (c_HH, c_HV, c_VH, c_VV) in the fixed basis
/// order. States may be sub-normalized after gate action; the squared norm
/// is then the post-selection probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState2Q(Vector4<C64>);

impl PureState2Q {
    /// Builds a state from its four amplitudes. Errors when the norm
    /// exceeds 1 by more than 1e-12.
    pub fn new(c_hh: C64, c_hv: C64, c_vh: C64, c_vv: C64) -> Result<Self> {
        Self::from_vector(Vector4::new(c_hh, c_hv, c_vh, c_vv))
    }

    pub fn from_vector(v: Vector4<C64>) -> Result<Self> {
        let n = v.norm();
        if n > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "two-qubit state norm {n} exceeds 1"
            )));
        }
        Ok(Self(v))
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn as_vector(&self) -> &Vector4<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Squared norm: the post-selection probability of a sub-normalized
    /// state.
    pub fn probability(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Unit-norm copy. Errors on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-150 {
            return Err(Error::DegeneratePostSelection);
        }
        Ok(Self(self.0 / C64::new(n, 0.0)))
    }

    /// Density matrix |ψ⟩⟨ψ| (trace = squared norm).
    pub fn density(&self) -> DensityMatrix2Q {
        DensityMatrix2Q(&self.0 * self.0.adjoint())
    }
}

/// Tensor product of two single-qubit kets: c_xy = a_x · b_y in the fixed
/// basis order.
pub fn tensor(a: &SingleQubitKet, b: &SingleQubitKet) -> PureState2Q {
    let (ah, av) = a.amplitudes();
    let (bh, bv) = b.amplitudes();
    PureState2Q(Vector4::new(ah * bh, ah * bv, av * bh, av * bv))
}

/// A 4×4 Hermitian density matrix in the fixed basis order.
///
/// Instances are Hermitian to within [`HERMITICITY_TOL`] elementwise and
/// carry a real, positive trace: 1 for normalized states, in (0, 1] for
/// post-selected unnormalized states. Tomographic reconstructions may have
/// small negative eigenvalues; [`DensityMatrix2Q::is_physical`] reports
/// whether all eigenvalues are ≥ −[`EPS_PHYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix2Q(Matrix4<C64>);

impl DensityMatrix2Q {
    /// Validates Hermiticity (elementwise, 1e-10) and a real positive
    /// trace, then wraps the matrix.
    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        let dev = hermiticity_deviation(&m);
        if dev > HERMITICITY_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (max deviation {dev:.3e})"
            )));
        }
        let tr = m.trace();
        if tr.im.abs() > HERMITICITY_TOL {
            return Err(Error::InvalidInput(format!(
                "trace has imaginary part {:.3e}",
                tr.im
            )));
        }
        if tr.re <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "trace {} is not positive",
                tr.re
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is Hermitian by construction (e.g. AρA† or a
    /// symmetrized sum). Debug builds still verify the invariant.
    pub(crate) fn from_hermitian_unchecked(m: Matrix4<C64>) -> Self {
        debug_assert!(hermiticity_deviation(&m) <= 1e-9);
        Self(m)
    }

    /// Maximally mixed state 1/4.
    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * C64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    /// Real part of the trace (the imaginary part is bounded by the
    /// Hermiticity tolerance).
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
    }

    /// Trace-1 copy. Errors when the trace is numerically zero.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr < 1e-14 {
            return Err(Error::DegeneratePostSelection);
        }
        Ok(Self(self.0 / C64::new(tr, 0.0)))
    }

    /// Population ⟨i|ρ|i⟩ of basis state i (0 = HH … 3 = VV).
    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `true` iff all eigenvalues are ≥ −[`EPS_PHYS`]. Informational; the
    /// analysis pipeline never rejects a matrix on this flag.
    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -EPS_PHYS
    }
}

/// Max elementwise deviation |m − m†|.
pub(crate) fn hermiticity_deviation(m: &Matrix4<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Ascending eigenvalues of a Hermitian 4×4 matrix.
pub(crate) fn hermitian_eigenvalues(m: &Matrix4<C64>) -> [f64; 4] {
    let eig = SymmetricEigen::new(*m);
    let mut vals = [
        eig.eigenvalues[0],
        eig.eigenvalues[1],
        eig.eigenvalues[2],
        eig.eigenvalues[3],
    ];
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Hermitian square root of a positive semidefinite matrix; eigenvalues
/// below zero (tomographic noise) are clamped to zero.
fn sqrtm_psd(m: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = SymmetricEigen::new(*m);
    let mut d = Matrix4::zeros();
    for i in 0..4 {
        d[(i, i)] = C64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Overlap fidelity ⟨ψ|ρ|ψ⟩ of a normalized density matrix with a unit-norm
/// pure state.
///
/// Errors when |Tr ρ − 1| > 1e-6. The result is the real part; the
/// imaginary part is guaranteed < 1e-10 by Hermiticity.
pub fn fidelity_pure(rho: &DensityMatrix2Q, psi: &PureState2Q) -> Result<f64> {
    if (rho.trace() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "density matrix trace {} differs from 1",
            rho.trace()
        )));
    }
    let v = psi.as_vector();
    let val = (v.adjoint() * rho.matrix() * v)[(0, 0)];
    if val.im.abs() >= 1e-10 {
        return Err(Error::InvalidInput(format!(
            "fidelity has imaginary part {:.3e}",
            val.im
        )));
    }
    Ok(val.re)
}

/// Uhlmann fidelity F(ρ, σ) = (Tr √(√ρ σ √ρ))² between two normalized
/// density matrices. Reduces to ⟨ψ|σ|ψ⟩ when ρ = |ψ⟩⟨ψ|.
pub fn fidelity_mixed(rho: &DensityMatrix2Q, sigma: &DensityMatrix2Q) -> Result<f64> {
    for (name, m) in [("first", rho), ("second", sigma)] {
        if (m.trace() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "{name} argument trace {} differs from 1",
                m.trace()
            )));
        }
    }
    let s = sqrtm_psd(rho.matrix());
    let inner = &s * sigma.matrix() * s;
    let eigs = hermitian_eigenvalues(&inner);
    let root_sum: f64 = eigs.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).min(1.0))
}

/// Partial transpose over the second qubit. For two qubits the negativity
/// is independent of which side is transposed; this crate fixes the second.
pub fn partial_transpose_second(m: &Matrix4<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    // [(i,j),(k,l)] <- [(i,l),(k,j)]
                    out[(2 * i + j, 2 * k + l)] = m[(2 * i + l, 2 * k + j)];
                }
            }
        }
    }
    out
}

/// Logarithmic negativity log₂‖ρ^{T_B}‖₁, clamped below at 0.
///
/// Expects a normalized Hermitian matrix; a non-Hermitian input (possible
/// only through deserialized or hand-built matrices) is rejected.
pub fn log_negativity(rho: &DensityMatrix2Q) -> Result<f64> {
    let dev = hermiticity_deviation(rho.matrix());
    if dev > HERMITICITY_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (max deviation {dev:.3e})"
        )));
    }
    let pt = partial_transpose_second(rho.matrix());
    let trace_norm: f64 = hermitian_eigenvalues(&pt).iter().map(|l| l.abs()).sum();
    Ok(trace_norm.log2().max(0.0))
}
