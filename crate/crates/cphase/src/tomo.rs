//! Linear two-qubit state tomography from corrected coincidence rates.
//!
//! The scheme measures all nine basis pairs Z/X/Y ⊗ Z/X/Y. Each setting
//! uses both output ports of both analyzers, so it yields four projector
//! rates at once (36 rates total). This overcomplete set estimates every
//! single-qubit marginal three times, which improves conditioning over
//! minimal 16-projector schemes.
//!
//! Reconstruction is plain linear inversion: ρ = (1/4) Σ ⟨E_i⟩ E_i with the
//! identity component fixed by normalization, so the output has unit trace
//! by construction but may carry small negative eigenvalues. No
//! physicality projection is applied; [`clip_physical`] exists for
//! downstream consumers that need a positive matrix.

use nalgebra::{Matrix4, SMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::counts::{correct_efficiencies, AnalyzerSetting, CountRecord, MeasBasis};
use crate::error::{Error, Result};
use crate::gate::ideal_cphase;
use crate::pauli::PauliBasis2Q;
use crate::states::{
    chsh_fidelity_check, fidelity_pure, log_negativity, C64, DensityMatrix2Q, PureState2Q,
    EPS_PHYS,
};

/// Number of analyzer settings in the standard scheme.
pub const SETTING_COUNT: usize = 9;

/// The nine standard analyzer settings in fixed order: arm a runs over
/// Z, X, Y (slow), arm b over Z, X, Y (fast).
pub fn standard_settings() -> [AnalyzerSetting; SETTING_COUNT] {
    let mut out = [AnalyzerSetting::new(MeasBasis::Z, MeasBasis::Z); SETTING_COUNT];
    for (ia, a) in MeasBasis::ALL.iter().enumerate() {
        for (ib, b) in MeasBasis::ALL.iter().enumerate() {
            out[3 * ia + ib] = AnalyzerSetting::new(*a, *b);
        }
    }
    out
}

/// Efficiency-corrected rates of one analyzer setting, with standard
/// errors, as consumed by the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettingRates {
    pub setting: AnalyzerSetting,
    pub rates: [f64; 4],
    pub errors: [f64; 4],
}

/// Noiseless forward model: the exact corrected rates a measurement of ρ
/// (possibly sub-normalized) would produce with `scale` incident pairs and
/// perfect detectors. Errors carry the Poisson √λ (floored at 1).
pub fn exact_rates(rho: &DensityMatrix2Q, scale: f64) -> Vec<SettingRates> {
    standard_settings()
        .iter()
        .map(|setting| {
            let projectors = setting.projector_pairs();
            let mut rates = [0.0; 4];
            let mut errors = [0.0; 4];
            for (slot, proj) in projectors.iter().enumerate() {
                let lambda = scale * (proj * rho.matrix()).trace().re.max(0.0);
                rates[slot] = lambda;
                errors[slot] = lambda.sqrt().max(1.0);
            }
            SettingRates {
                setting: *setting,
                rates,
                errors,
            }
        })
        .collect()
}

/// Applies the efficiency correction to a full campaign of count records.
pub fn rates_from_records(records: &[CountRecord]) -> Result<Vec<SettingRates>> {
    records
        .iter()
        .map(|rec| {
            let corr = correct_efficiencies(rec)?;
            Ok(SettingRates {
                setting: rec.setting,
                rates: corr.rates,
                errors: corr.errors,
            })
        })
        .collect()
}

/// A linearly reconstructed two-qubit state.
#[derive(Debug, Clone)]
pub struct StateReconstruction {
    /// Unit-trace Hermitian matrix; eigenvalues may be slightly negative.
    pub rho: DensityMatrix2Q,
    /// The 15 Bloch parameters ⟨E_1⟩ … ⟨E_15⟩ in Pauli-basis order.
    pub bloch: [f64; 15],
    /// Covariance of the Bloch parameters from linear error propagation.
    pub bloch_covariance: SMatrix<f64, 15, 15>,
    pub min_eigenvalue: f64,
    /// `true` iff all eigenvalues are ≥ −0.02. Informational only.
    pub physical: bool,
}

const BASIS_TO_PAULI: [usize; 3] = [3, 1, 2]; // Z, X, Y -> sigma index

const CORR_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
const MARG_A_SIGNS: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
const MARG_B_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

fn basis_index(b: MeasBasis) -> usize {
    match b {
        MeasBasis::Z => 0,
        MeasBasis::X => 1,
        MeasBasis::Y => 2,
    }
}

/// Reconstructs a density matrix from the 36 corrected rates of the
/// standard nine settings (any order; each setting exactly once).
///
/// Errors when a setting is missing or duplicated, or when any setting has
/// a non-positive total rate.
pub fn reconstruct_state(rates: &[SettingRates]) -> Result<StateReconstruction> {
    if rates.len() != SETTING_COUNT {
        return Err(Error::DegenerateInversion(format!(
            "expected {SETTING_COUNT} settings, got {}",
            rates.len()
        )));
    }
    let mut ordered: [Option<&SettingRates>; SETTING_COUNT] = [None; SETTING_COUNT];
    for sr in rates {
        let idx = 3 * basis_index(sr.setting.arm_a) + basis_index(sr.setting.arm_b);
        if ordered[idx].is_some() {
            return Err(Error::DegenerateInversion(format!(
                "duplicate setting {}⊗{}",
                sr.setting.arm_a, sr.setting.arm_b
            )));
        }
        ordered[idx] = Some(sr);
    }
    let ordered: Vec<&SettingRates> = ordered
        .into_iter()
        .map(|o| o.ok_or_else(|| Error::DegenerateInversion("missing setting".into())))
        .collect::<Result<_>>()?;

    let mut totals = [0.0f64; SETTING_COUNT];
    for (s, sr) in ordered.iter().enumerate() {
        totals[s] = sr.rates.iter().sum();
        if totals[s] <= 0.0 {
            return Err(Error::DegenerateInversion(format!(
                "setting {}⊗{} has total rate {}",
                sr.setting.arm_a, sr.setting.arm_b, totals[s]
            )));
        }
    }

    // Bloch vector: correlators directly, marginals averaged over the
    // three settings that measure them.
    let mut bloch = [0.0f64; 15];
    // Jacobian of the Bloch vector w.r.t. the 36 rates, for the covariance.
    let mut jac = SMatrix::<f64, 15, 36>::zeros();

    let combo =
        |sr: &SettingRates, signs: &[f64; 4], t: f64| -> f64 {
            signs
                .iter()
                .zip(sr.rates.iter())
                .map(|(s, r)| s * r)
                .sum::<f64>()
                / t
        };

    for (s, sr) in ordered.iter().enumerate() {
        let t = totals[s];
        let ia = s / 3;
        let ib = s % 3;
        let pj = BASIS_TO_PAULI[ia];
        let pk = BASIS_TO_PAULI[ib];

        let corr = combo(sr, &CORR_SIGNS, t);
        let marg_a = combo(sr, &MARG_A_SIGNS, t);
        let marg_b = combo(sr, &MARG_B_SIGNS, t);

        let w_corr = 4 * pj + pk - 1; // Bloch slot (Pauli index minus identity)
        let w_ma = 4 * pj - 1;
        let w_mb = pk - 1;

        bloch[w_corr] = corr;
        bloch[w_ma] += marg_a / 3.0;
        bloch[w_mb] += marg_b / 3.0;

        for slot in 0..4 {
            let col = 4 * s + slot;
            jac[(w_corr, col)] = (CORR_SIGNS[slot] - corr) / t;
            jac[(w_ma, col)] += (MARG_A_SIGNS[slot] - marg_a) / t / 3.0;
            jac[(w_mb, col)] += (MARG_B_SIGNS[slot] - marg_b) / t / 3.0;
        }
    }

    let mut sigma2 = SMatrix::<f64, 36, 36>::zeros();
    for (s, sr) in ordered.iter().enumerate() {
        for slot in 0..4 {
            let e = sr.errors[slot];
            sigma2[(4 * s + slot, 4 * s + slot)] = e * e;
        }
    }
    let covariance = jac * sigma2 * jac.transpose();

    let basis = PauliBasis2Q::new();
    let mut m = Matrix4::<C64>::identity();
    for (i, w) in bloch.iter().enumerate() {
        m += basis.operator(i + 1) * C64::new(*w, 0.0);
    }
    m *= C64::new(0.25, 0.0);
    let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let rho = DensityMatrix2Q::from_hermitian_unchecked(m);
    let min_eigenvalue = rho.min_eigenvalue();

    Ok(StateReconstruction {
        physical: min_eigenvalue >= -EPS_PHYS,
        min_eigenvalue,
        rho,
        bloch,
        bloch_covariance: covariance,
    })
}

/// Entanglement analysis of one reconstructed gate output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglingReport {
    /// Fidelity to the ideal gate output for the given input.
    pub fidelity: f64,
    pub log_negativity: f64,
    /// Fidelity above (2+3√2)/8, guaranteeing a CHSH violation.
    pub chsh_violated: bool,
    pub min_eigenvalue: f64,
    pub physical: bool,
}

/// Compares a reconstruction against the ideal gate output for a
/// unit-norm product (or arbitrary pure) input state.
pub fn analyze_entangling_run(
    input: &PureState2Q,
    rec: &StateReconstruction,
) -> Result<EntanglingReport> {
    let target = ideal_cphase(input);
    let fidelity = fidelity_pure(&rec.rho, &target)?;
    let neg = log_negativity(&rec.rho)?;
    Ok(EntanglingReport {
        fidelity,
        log_negativity: neg,
        chsh_violated: chsh_fidelity_check(fidelity),
        min_eigenvalue: rec.min_eigenvalue,
        physical: rec.physical,
    })
}

/// Monte Carlo error bars for the scalar functionals of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalErrors {
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub negativity_mean: f64,
    pub negativity_std: f64,
    pub resamples: usize,
}

/// Resamples the rates from their Gaussian (propagated-Poisson) errors and
/// recomputes fidelity and negativity per resample. The negativity is not
/// differentiable at eigenvalue crossings, so resampling is preferred over
/// linearized propagation.
pub fn resample_functionals(
    rates: &[SettingRates],
    input: &PureState2Q,
    n_resamples: usize,
    seed: u64,
) -> Result<FunctionalErrors> {
    if n_resamples < 2 {
        return Err(Error::InvalidInput(
            "at least two resamples are required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut fids = Vec::with_capacity(n_resamples);
    let mut negs = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        let perturbed: Vec<SettingRates> = rates
            .iter()
            .map(|sr| {
                let mut rates_p = sr.rates;
                for slot in 0..4 {
                    let draw: f64 = normal.sample(&mut rng);
                    rates_p[slot] = (sr.rates[slot] + draw * sr.errors[slot]).max(0.0);
                }
                SettingRates {
                    setting: sr.setting,
                    rates: rates_p,
                    errors: sr.errors,
                }
            })
            .collect();
        let rec = reconstruct_state(&perturbed)?;
        let report = analyze_entangling_run(input, &rec)?;
        fids.push(report.fidelity);
        negs.push(report.log_negativity);
    }
    let stats = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
        (mean, var.sqrt())
    };
    let (fidelity_mean, fidelity_std) = stats(&fids);
    let (negativity_mean, negativity_std) = stats(&negs);
    Ok(FunctionalErrors {
        fidelity_mean,
        fidelity_std,
        negativity_mean,
        negativity_std,
        resamples: n_resamples,
    })
}

/// Optional post-process: clips negative eigenvalues to zero and
/// renormalizes. Never used by the analysis pipeline; provided for
/// consumers that need a strictly positive matrix.
pub fn clip_physical(rho: &DensityMatrix2Q) -> DensityMatrix2Q {
    let eig = nalgebra::SymmetricEigen::new(*rho.matrix());
    let mut d = Matrix4::<C64>::zeros();
    for i in 0..4 {
        d[(i, i)] = C64::new(eig.eigenvalues[i].max(0.0), 0.0);
    }
    let m = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
    let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix2Q::from_hermitian_unchecked(m)
        .normalized()
        .expect("clipped matrix keeps positive trace")
}
