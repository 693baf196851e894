//! Non-trace-preserving linear quantum process tomography.
//!
//! A process E is expanded over the two-qubit Pauli operators as
//! E(ρ) = Σ_ij χ_ij B_i ρ B_j† with B_i = E_i/2, the orthonormalized
//! Paulis (Tr B_i†B_j = δ_ij). Under this convention the ideal gate's χ is
//! the rank-1 projector onto its coefficient vector (1, 1, 1, −1)/3 over
//! {1⊗1, 1⊗σz, σz⊗1, σz⊗σz}, so its diagonal peaks equal the ideal success
//! probability 1/9 and Tr χ = 4/9.
//!
//! Because the gate's incoherent noise is input dependent, the channel is
//! not trace preserving: each input k succeeds with its own probability
//! p_k = Tr E(ρ_k). The probabilities enter the inversion through
//! E(ρ_k) = p_k ρ_out^k, with the overall scale fixed by p_HH = 1/9.

use nalgebra::{DMatrix, DVector, Matrix4, SMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::{apply_gate, GateConfig};
use crate::pauli::{PauliBasis2Q, PAULI_LABELS};
use crate::states::{tensor, C64, DensityMatrix2Q, PureState2Q, SingleQubitKet, EPS_PHYS};

/// Labels of the 16 tomographic input product states, in fixed order.
pub const QPT_INPUT_LABELS: [&str; 16] = [
    "HH", "HV", "H+", "H-", "VH", "VV", "V+", "VL", "+H", "+V", "++", "+L", "LH", "LV", "L+", "LL",
];

fn ket(label: char) -> SingleQubitKet {
    match label {
        'H' => SingleQubitKet::h(),
        'V' => SingleQubitKet::v(),
        '+' => SingleQubitKet::plus(),
        '-' => SingleQubitKet::minus(),
        'L' => SingleQubitKet::left(),
        'R' => SingleQubitKet::right(),
        _ => panic!("unknown ket label {label}"),
    }
}

/// The 16 tomographic input states. The list is informationally complete
/// (verified by the reconstructor's rank check) though not symmetric under
/// qubit exchange.
pub fn qpt_input_kets() -> [PureState2Q; 16] {
    QPT_INPUT_LABELS.map(|label| {
        let mut chars = label.chars();
        let a = ket(chars.next().expect("two-char label"));
        let b = ket(chars.next().expect("two-char label"));
        tensor(&a, &b)
    })
}

/// Normalized output states and success probabilities for the 16
/// tomographic inputs, rescaled so that p_HH = 1/9.
#[derive(Debug, Clone)]
pub struct ProcessData {
    pub probabilities: [f64; 16],
    pub outputs: Vec<DensityMatrix2Q>,
}

impl ProcessData {
    /// The unnormalized image p_k ρ_out^k of input k.
    pub fn scaled_output(&self, k: usize) -> Matrix4<C64> {
        self.outputs[k].matrix() * C64::new(self.probabilities[k], 0.0)
    }
}

/// Splits the raw (unnormalized) channel outputs into probabilities and
/// normalized states, then rescales every probability so that p_HH = 1/9.
///
/// Errors when any output trace is not positive.
pub fn extract_probabilities(raw_outputs: &[DensityMatrix2Q]) -> Result<ProcessData> {
    if raw_outputs.len() != 16 {
        return Err(Error::InvalidInput(format!(
            "expected 16 channel outputs, got {}",
            raw_outputs.len()
        )));
    }
    let mut probabilities = [0.0; 16];
    let mut outputs = Vec::with_capacity(16);
    for (k, out) in raw_outputs.iter().enumerate() {
        let p = out.trace();
        if p <= 1e-14 {
            return Err(Error::DegeneratePostSelection);
        }
        probabilities[k] = p;
        outputs.push(out.normalized()?);
    }
    let scale = (1.0 / 9.0) / probabilities[0];
    for p in &mut probabilities {
        *p *= scale;
    }
    Ok(ProcessData {
        probabilities,
        outputs,
    })
}

/// Runs a gate configuration over the 16 tomographic inputs and extracts
/// the process data exactly (no counting noise).
pub fn gate_process_data(cfg: &GateConfig) -> Result<ProcessData> {
    let raw: Vec<DensityMatrix2Q> = qpt_input_kets()
        .iter()
        .map(|psi| apply_gate(&psi.density(), cfg).0)
        .collect();
    extract_probabilities(&raw)
}

/// A full simulated process-tomography run with counting noise: the
/// per-input measurement campaigns, the state reconstructions, and the
/// assembled process data.
#[derive(Debug, Clone)]
pub struct NoisyQptRun {
    pub data: ProcessData,
    pub reconstructions: Vec<crate::tomo::StateReconstruction>,
    /// One campaign (nine count records) per tomographic input.
    pub campaigns: Vec<Vec<crate::counts::CountRecord>>,
}

/// Simulates the full counting experiment for the 16 tomographic inputs:
/// gate → Poissonian counts (`n_pairs` per setting) → efficiency
/// correction → state reconstruction. Success probabilities are estimated
/// from the Z⊗Z total rates and rescaled to p_HH = 1/9.
///
/// Per-record seeds are derived from `base_seed` through a ChaCha8 stream,
/// so distinct base seeds give statistically independent campaigns while
/// every run stays bit-exact reproducible.
pub fn noisy_gate_process_data(
    cfg: &GateConfig,
    eff: &crate::counts::DetectorEfficiencies,
    n_pairs: u64,
    base_seed: u64,
) -> Result<NoisyQptRun> {
    use rand::Rng;
    use rand::SeedableRng;

    let mut seeder = rand_chacha::ChaCha8Rng::seed_from_u64(base_seed);
    let settings = crate::tomo::standard_settings();
    let mut probabilities = [0.0f64; 16];
    let mut reconstructions = Vec::with_capacity(16);
    let mut campaigns = Vec::with_capacity(16);
    for (k, psi) in qpt_input_kets().iter().enumerate() {
        let (out, _) = apply_gate(&psi.density(), cfg);
        let mut records = Vec::with_capacity(settings.len());
        for setting in &settings {
            let seed = seeder.random::<u64>();
            records.push(crate::counts::simulate_counts(
                &out, *setting, eff, n_pairs, seed,
            )?);
        }
        let rates = crate::tomo::rates_from_records(&records)?;
        let zz_total: f64 = rates[0].rates.iter().sum();
        probabilities[k] = zz_total / n_pairs as f64;
        reconstructions.push(crate::tomo::reconstruct_state(&rates)?);
        campaigns.push(records);
    }
    if probabilities[0] <= 0.0 {
        return Err(Error::DegeneratePostSelection);
    }
    let scale = (1.0 / 9.0) / probabilities[0];
    for p in &mut probabilities {
        *p *= scale;
    }
    let data = ProcessData {
        probabilities,
        outputs: reconstructions.iter().map(|r| r.rho.clone()).collect(),
    };
    Ok(NoisyQptRun {
        data,
        reconstructions,
        campaigns,
    })
}

/// A 16×16 Hermitian process matrix over the Pauli-basis order of
/// [`PAULI_LABELS`]. Reconstructed instances may be non-physical (small
/// negative eigenvalues from counting noise).
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix(SMatrix<C64, 16, 16>);

impl ChiMatrix {
    /// Validates Hermiticity (elementwise, 1e-10) and wraps the matrix.
    pub fn new(m: SMatrix<C64, 16, 16>) -> Result<Self> {
        let mut dev: f64 = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if dev > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "process matrix is not Hermitian (max deviation {dev:.3e})"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_hermitian_unchecked(m: SMatrix<C64, 16, 16>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &SMatrix<C64, 16, 16> {
        &self.0
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Ascending eigenvalues (the matrix is Hermitian).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let dm = DMatrix::from_fn(16, 16, |i, j| self.0[(i, j)]);
        let mut vals: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `true` iff all eigenvalues are ≥ −0.02. Informational only.
    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -EPS_PHYS
    }

    /// Squared Frobenius distance Σ_ij |a_ij − b_ij|².
    pub fn frobenius_distance_sq(&self, other: &ChiMatrix) -> f64 {
        let mut sum = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                sum += (self.0[(i, j)] - other.0[(i, j)]).norm_sqr();
            }
        }
        sum
    }
}

/// The orthonormalized Pauli operators B_i = E_i/2.
fn orthonormal_paulis() -> Vec<Matrix4<C64>> {
    PauliBasis2Q::new()
        .iter()
        .map(|e| e * C64::new(0.5, 0.0))
        .collect()
}

/// Applies a χ matrix as a channel: Σ_ij χ_ij B_i ρ B_j†.
pub fn apply_chi(chi: &ChiMatrix, rho: &Matrix4<C64>) -> Matrix4<C64> {
    let basis = orthonormal_paulis();
    let pre: Vec<Matrix4<C64>> = basis.iter().map(|b| b * rho).collect();
    let mut out = Matrix4::<C64>::zeros();
    for j in 0..16 {
        let mut s = Matrix4::<C64>::zeros();
        for i in 0..16 {
            s += pre[i] * chi.entry(i, j);
        }
        out += s * basis[j].adjoint();
    }
    out
}

/// Precomputed linear-inversion operator for a fixed tomographic input
/// set. The 256×256 system couples all inputs and matrix entries at once;
/// factoring it once makes repeated reconstructions (model fits, seed
/// sweeps) cheap.
pub struct ChiReconstructor {
    qr: nalgebra::linalg::ColPivQR<C64, nalgebra::Dyn, nalgebra::Dyn>,
    inputs: Vec<DensityMatrix2Q>,
}

impl ChiReconstructor {
    /// Reconstructor for the standard 16 input states.
    pub fn new() -> Result<Self> {
        Self::with_inputs(&qpt_input_kets())
    }

    /// Reconstructor for a custom spanning set of 16 pure inputs.
    ///
    /// Errors when the inputs do not span the operator space.
    pub fn with_inputs(kets: &[PureState2Q; 16]) -> Result<Self> {
        let inputs: Vec<DensityMatrix2Q> = kets.iter().map(|k| k.density()).collect();
        let basis = orthonormal_paulis();

        // row (k, m, n): sum_ij chi_ij (B_i rho_k B_j†)[m,n] = (p_k rho_out^k)[m,n]
        let mut a = DMatrix::<C64>::zeros(256, 256);
        for (k, rho) in inputs.iter().enumerate() {
            let pre: Vec<Matrix4<C64>> = basis.iter().map(|b| b * rho.matrix()).collect();
            for (i, pre_i) in pre.iter().enumerate() {
                for (j, b_j) in basis.iter().enumerate() {
                    let block = pre_i * b_j.adjoint();
                    for m in 0..4 {
                        for n in 0..4 {
                            a[(16 * k + 4 * m + n, 16 * i + j)] = block[(m, n)];
                        }
                    }
                }
            }
        }

        let qr = a.col_piv_qr();
        let diag = qr.r().diagonal();
        let max_d = diag.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let min_d = diag.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if !(max_d > 0.0) || min_d < 1e-10 * max_d {
            return Err(Error::RankDeficientInputs);
        }
        Ok(Self { qr, inputs })
    }

    /// Solves the defining equation for χ on the given process data. The
    /// result is symmetrized (the exact solution is Hermitian; solver noise
    /// is at the 1e-12 level).
    pub fn reconstruct(&self, data: &ProcessData) -> Result<ChiMatrix> {
        let mut b = DVector::<C64>::zeros(256);
        for k in 0..16 {
            let target = data.scaled_output(k);
            for m in 0..4 {
                for n in 0..4 {
                    b[16 * k + 4 * m + n] = target[(m, n)];
                }
            }
        }
        let x = self.qr.solve(&b).ok_or(Error::RankDeficientInputs)?;
        let mut chi = SMatrix::<C64, 16, 16>::zeros();
        for i in 0..16 {
            for j in 0..16 {
                chi[(i, j)] = x[16 * i + j];
            }
        }
        let chi = (chi + chi.adjoint()) * C64::new(0.5, 0.0);
        Ok(ChiMatrix::from_hermitian_unchecked(chi))
    }

    /// Largest elementwise residual of the defining equation
    /// Σ χ_ij B_i ρ_k B_j† = p_k ρ_out^k over all inputs.
    pub fn defining_residual(&self, chi: &ChiMatrix, data: &ProcessData) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, rho) in self.inputs.iter().enumerate() {
            let lhs = apply_chi(chi, rho.matrix());
            let rhs = data.scaled_output(k);
            let dev = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            worst = worst.max(dev);
        }
        worst
    }
}

/// One-shot linear inversion with the standard input set.
pub fn reconstruct_chi(data: &ProcessData) -> Result<ChiMatrix> {
    ChiReconstructor::new()?.reconstruct(data)
}

/// The ideal gate's process matrix: the rank-1 projector v v† onto the
/// coefficient vector of diag(1, 1, 1, −1)/3 over the orthonormalized
/// Paulis. Four diagonal peaks of 1/9 in the σz sector, off-diagonal
/// entries ±1/9, trace 4/9.
pub fn ideal_chi() -> ChiMatrix {
    let m_ideal = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        C64::new(1.0 / 3.0, 0.0),
        C64::new(1.0 / 3.0, 0.0),
        C64::new(1.0 / 3.0, 0.0),
        C64::new(-1.0 / 3.0, 0.0),
    ));
    chi_of_operator(&m_ideal)
}

/// The rank-1 χ of a deterministic amplitude map A (χ = v v† with
/// v_i = Tr(B_i† A)).
pub fn chi_of_operator(a: &Matrix4<C64>) -> ChiMatrix {
    let coeffs = PauliBasis2Q::new().expand(a);
    let v: Vec<C64> = coeffs.iter().map(|c| c * C64::new(2.0, 0.0)).collect();
    let mut chi = SMatrix::<C64, 16, 16>::zeros();
    for i in 0..16 {
        for j in 0..16 {
            chi[(i, j)] = v[i] * v[j].conj();
        }
    }
    ChiMatrix::from_hermitian_unchecked(chi)
}

/// Process fidelity F_p = Tr(χ_a χ_b) / (Tr χ_a · Tr χ_b).
///
/// Scale invariant in each argument; errors when either trace vanishes.
pub fn process_fidelity(chi_a: &ChiMatrix, chi_b: &ChiMatrix) -> Result<f64> {
    let tr_a = chi_a.trace();
    let tr_b = chi_b.trace();
    if tr_a.abs() < 1e-12 || tr_b.abs() < 1e-12 {
        return Err(Error::InvalidInput(
            "process matrix has zero trace".into(),
        ));
    }
    let prod = (chi_a.matrix() * chi_b.matrix()).trace();
    if prod.im.abs() >= 1e-10 * prod.re.abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "process overlap has imaginary part {:.3e}",
            prod.im
        )));
    }
    Ok(prod.re / (tr_a * tr_b))
}

/// Summary row of the per-input success probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct ProbabilityRow {
    pub input: String,
    pub probability: f64,
}

impl ProcessData {
    pub fn probability_table(&self) -> Vec<ProbabilityRow> {
        QPT_INPUT_LABELS
            .iter()
            .zip(self.probabilities.iter())
            .map(|(label, p)| ProbabilityRow {
                input: (*label).to_string(),
                probability: *p,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// σz-sector Pauli indices: II, IZ, ZI, ZZ.
    const Z_SECTOR: [usize; 4] = [0, 3, 12, 15];

    #[test]
    fn input_list_matches_labels() {
        let kets = qpt_input_kets();
        assert_eq!(kets.len(), 16);
        assert_eq!(QPT_INPUT_LABELS[0], "HH");
        assert_eq!(QPT_INPUT_LABELS[7], "VL");
        // VL: first qubit V, second qubit L
        let a = kets[7].amplitudes();
        assert_abs_diff_eq!(a[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[2].norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn ideal_gate_probabilities_are_uniform() {
        let data = gate_process_data(&GateConfig::ideal()).unwrap();
        for (k, p) in data.probabilities.iter().enumerate() {
            assert_abs_diff_eq!(*p, 1.0 / 9.0, epsilon = 1e-14);
            assert!(data.outputs[k].is_normalized(1e-12));
        }
    }

    #[test]
    fn partial_quality_raises_vv_probability() {
        let q = 0.91;
        let data = gate_process_data(&GateConfig::ideal().with_quality(q)).unwrap();
        // oracle: p_VV / p_HH = 1 + 4(1 − Q')
        let expected_ratio = 1.0 + 4.0 * (1.0 - q);
        let ratio = data.probabilities[5] / data.probabilities[0];
        assert_abs_diff_eq!(ratio, expected_ratio, epsilon = 1e-12);
        assert!(data.probabilities[5] > data.probabilities[0]);
    }

    #[test]
    fn identity_process_probabilities_normalize_to_one_ninth() {
        let cfg = transparent_config();
        let data = gate_process_data(&cfg).unwrap();
        for p in data.probabilities {
            assert_abs_diff_eq!(p, 1.0 / 9.0, epsilon = 1e-14);
        }
    }

    fn transparent_config() -> GateConfig {
        let mut cfg = GateConfig::ideal();
        cfg.pdbs.mode_a.t_h = 1.0;
        cfg.pdbs.mode_a.t_v = 1.0;
        cfg.pdbs.mode_a.r_h = 0.0;
        cfg.pdbs.mode_a.r_v = 0.0;
        cfg.pdbs.mode_b = cfg.pdbs.mode_a;
        cfg.attenuators.a_h = 1.0;
        cfg.attenuators.a_v = 1.0;
        cfg.attenuators.b_h = 1.0;
        cfg.attenuators.b_v = 1.0;
        cfg
    }

    #[test]
    fn ideal_chi_structure() {
        let chi = ideal_chi();
        let mut nonzero = 0;
        for i in 0..16 {
            for j in 0..16 {
                let z = chi.entry(i, j);
                assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
                if z.norm() > 1e-15 {
                    nonzero += 1;
                    assert!(Z_SECTOR.contains(&i) && Z_SECTOR.contains(&j));
                    assert_abs_diff_eq!(z.re.abs(), 1.0 / 9.0, epsilon = 1e-15);
                    // sign pattern of (1, 1, 1, -1): negative iff exactly
                    // one index is the ZZ slot
                    let negatives = [i, j].iter().filter(|&&x| x == 15).count();
                    assert_eq!(z.re < 0.0, negatives == 1);
                }
            }
        }
        assert_eq!(nonzero, 16);
        assert_abs_diff_eq!(chi.trace(), 4.0 / 9.0, epsilon = 1e-15);
        // edge entry per Fig-4a-style structure
        assert_abs_diff_eq!(chi.entry(15, 0).re, -1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn ideal_chi_is_rank_one_psd() {
        let eigs = ideal_chi().eigenvalues();
        assert!(eigs[0] > -1e-12);
        let positive: Vec<&f64> = eigs.iter().filter(|l| **l > 1e-12).collect();
        assert_eq!(positive.len(), 1);
        assert_abs_diff_eq!(*positive[0], 4.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn reconstruct_ideal_gate_matches_reference() {
        let data = gate_process_data(&GateConfig::ideal()).unwrap();
        let chi = reconstruct_chi(&data).unwrap();
        let reference = ideal_chi();
        for i in 0..16 {
            for j in 0..16 {
                let dev = (chi.entry(i, j) - reference.entry(i, j)).norm();
                assert!(dev < 1e-9, "entry ({i},{j}) deviates by {dev:.2e}");
            }
        }
    }

    #[test]
    fn reconstruct_identity_process() {
        let data = gate_process_data(&transparent_config()).unwrap();
        let chi = reconstruct_chi(&data).unwrap();
        // single nonzero entry at (II, II); magnitude set by the p_HH = 1/9
        // rescale of an identity channel (coefficient 2 over B_II = E_II/2,
        // squared, divided by 9)
        for i in 0..16 {
            for j in 0..16 {
                let expected = if (i, j) == (0, 0) { 4.0 / 9.0 } else { 0.0 };
                assert_abs_diff_eq!(chi.entry(i, j).re, expected, epsilon = 1e-10);
                assert_abs_diff_eq!(chi.entry(i, j).im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn partial_quality_chi_matches_analytic_mixture() {
        // Oracle: the channel is linear in Q', so its chi is the same
        // mixture of the three deterministic-path chi matrices. p_HH stays
        // 1/9 for the ideal ratios, so no rescale enters.
        let q = 0.904;
        let reconstructor = ChiReconstructor::new().unwrap();
        let data = gate_process_data(&GateConfig::ideal().with_quality(q)).unwrap();
        let chi = reconstructor.reconstruct(&data).unwrap();

        let ops = crate::gate::build_operators(&GateConfig::ideal());
        let chi_coh = chi_of_operator(&ops.combined().map(|x| C64::new(x, 0.0)));
        let chi_tt = chi_of_operator(&ops.m_tt.map(|x| C64::new(x, 0.0)));
        let chi_rr = chi_of_operator(&ops.m_rr.map(|x| C64::new(x, 0.0)));
        for i in 0..16 {
            for j in 0..16 {
                let expected = chi_coh.entry(i, j) * C64::new(q, 0.0)
                    + (chi_tt.entry(i, j) + chi_rr.entry(i, j)) * C64::new(1.0 - q, 0.0);
                let dev = (chi.entry(i, j) - expected).norm();
                assert!(dev < 1e-10, "entry ({i},{j}) deviates by {dev:.2e}");
            }
        }

        // reduced coherence: off-diagonal entries coupling to the identity
        // component shrink in magnitude relative to the ideal gate
        let reference = ideal_chi();
        assert!(chi.entry(0, 3).re.abs() < reference.entry(0, 3).re.abs());
        assert!(chi.entry(0, 15).re.abs() < reference.entry(0, 15).re.abs());

        let res = reconstructor.defining_residual(&chi, &data);
        assert!(res < 1e-9, "residual {res:.2e}");
    }

    fn haar_unitary(rng: &mut impl Rng) -> Matrix4<C64> {
        let g = Matrix4::<C64>::from_fn(|_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let qr = g.qr();
        let q = qr.q();
        let r = qr.r();
        let mut phases = Matrix4::<C64>::zeros();
        for i in 0..4 {
            let d = r[(i, i)];
            phases[(i, i)] = if d.norm() > 0.0 {
                d / C64::new(d.norm(), 0.0)
            } else {
                C64::new(1.0, 0.0)
            };
        }
        q * phases
    }

    #[test]
    fn round_trip_over_quality_grid_and_random_unitaries() {
        let reconstructor = ChiReconstructor::new().unwrap();
        for q in [0.0, 0.5, 0.904, 1.0] {
            let data = gate_process_data(&GateConfig::ideal().with_quality(q)).unwrap();
            let chi = reconstructor.reconstruct(&data).unwrap();
            let res = reconstructor.defining_residual(&chi, &data);
            assert!(res < 1e-9, "quality {q}: residual {res:.2e}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..5 {
            let u = haar_unitary(&mut rng);
            let raw: Vec<DensityMatrix2Q> = qpt_input_kets()
                .iter()
                .map(|psi| {
                    let m = u * psi.density().matrix() * u.adjoint();
                    let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
                    DensityMatrix2Q::from_hermitian_unchecked(m)
                })
                .collect();
            let data = extract_probabilities(&raw).unwrap();
            let chi = reconstructor.reconstruct(&data).unwrap();
            let res = reconstructor.defining_residual(&chi, &data);
            assert!(res < 1e-9, "unitary {trial}: residual {res:.2e}");
            // the reconstructed chi matches the analytic rank-1 form, up to
            // the p_HH = 1/9 rescale of a trace-preserving channel
            let expected = chi_of_operator(&u);
            let scale = 1.0 / 9.0;
            for i in 0..16 {
                for j in 0..16 {
                    let dev = (chi.entry(i, j) - expected.entry(i, j) * C64::new(scale, 0.0))
                        .norm();
                    assert!(dev < 1e-9, "unitary {trial} entry ({i},{j}): {dev:.2e}");
                }
            }
        }
    }

    #[test]
    fn process_fidelity_examples() {
        let chi_th = ideal_chi();
        assert_abs_diff_eq!(
            process_fidelity(&chi_th, &chi_th).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let data = gate_process_data(&transparent_config()).unwrap();
        let chi_id = reconstruct_chi(&data).unwrap();
        assert_abs_diff_eq!(
            process_fidelity(&chi_th, &chi_id).unwrap(),
            0.25,
            epsilon = 1e-10
        );
    }

    #[test]
    fn process_fidelity_is_symmetric_and_scale_invariant() {
        let reconstructor = ChiReconstructor::new().unwrap();
        let chi_a = ideal_chi();
        let data = gate_process_data(&GateConfig::ideal().with_quality(0.8)).unwrap();
        let chi_b = reconstructor.reconstruct(&data).unwrap();
        let f_ab = process_fidelity(&chi_a, &chi_b).unwrap();
        let f_ba = process_fidelity(&chi_b, &chi_a).unwrap();
        assert_abs_diff_eq!(f_ab, f_ba, epsilon = 1e-12);

        for scale in [0.17, 3.4] {
            let scaled =
                ChiMatrix::from_hermitian_unchecked(chi_b.matrix() * C64::new(scale, 0.0));
            let f_scaled = process_fidelity(&chi_a, &scaled).unwrap();
            assert_abs_diff_eq!(f_ab, f_scaled, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_trace_is_rejected() {
        let chi_zero = ChiMatrix::from_hermitian_unchecked(SMatrix::zeros());
        assert!(process_fidelity(&ideal_chi(), &chi_zero).is_err());
    }

    #[test]
    fn quality_pipeline_process_fidelity_stays_in_band() {
        let data = gate_process_data(&GateConfig::ideal().with_quality(0.91)).unwrap();
        let chi = reconstruct_chi(&data).unwrap();
        let f_p = process_fidelity(&ideal_chi(), &chi).unwrap();
        assert!(
            (0.80..=1.0).contains(&f_p),
            "process fidelity {f_p} outside [0.80, 1.0]"
        );
    }

    #[test]
    fn degenerate_outputs_are_rejected() {
        let raw: Vec<DensityMatrix2Q> = (0..16)
            .map(|_| DensityMatrix2Q::maximally_mixed())
            .collect();
        let mut shrunk = raw.clone();
        shrunk[3] = DensityMatrix2Q::from_hermitian_unchecked(
            Matrix4::identity() * C64::new(1e-16, 0.0),
        );
        assert!(matches!(
            extract_probabilities(&shrunk),
            Err(Error::DegeneratePostSelection)
        ));
    }
}
