//! The post-selected C-Phase transformation for ideal and imperfect optics.
//!
//! The gate overlaps two photons at a polarization-dependent beam splitter
//! and post-selects on a coincidence between the two output modes. Two
//! amplitude paths survive the post-selection: both photons transmitted
//! (`M_tt`) or both reflected (`M_rr`). With partial interference quality
//! Q′ the two paths add coherently with probability Q′ and incoherently
//! otherwise.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{C64, DensityMatrix2Q, PureState2Q};

/// Transmission/reflection amplitudes of the overlap beam splitter for one
/// input mode, per polarization. Amplitudes are real and non-negative; the
/// physical i-phase on reflection is absorbed into the explicit minus signs
/// of `M_rr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdbsModeParams {
    pub t_h: f64,
    pub t_v: f64,
    pub r_h: f64,
    pub r_v: f64,
}

impl PdbsModeParams {
    fn validate(&self, mode: &str, lossless: bool) -> Result<()> {
        for (name, v) in [
            ("t_h", self.t_h),
            ("t_v", self.t_v),
            ("r_h", self.r_h),
            ("r_v", self.r_v),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "PDBS amplitude {name}^{mode} = {v} outside [0, 1]"
                )));
            }
        }
        if lossless {
            for (pol, t, r) in [("H", self.t_h, self.r_h), ("V", self.t_v, self.r_v)] {
                let s = t * t + r * r;
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "lossless violated for {pol} in mode {mode}: t^2 + r^2 = {s}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Overlap beam-splitter amplitudes for both input modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdbsParams {
    pub mode_a: PdbsModeParams,
    pub mode_b: PdbsModeParams,
}

impl PdbsParams {
    pub fn validate(&self, lossless: bool) -> Result<()> {
        self.mode_a.validate("a", lossless)?;
        self.mode_b.validate("b", lossless)
    }
}

/// Transmission amplitudes of the output-mode attenuation beam splitters,
/// per polarization, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuatorParams {
    pub a_h: f64,
    pub a_v: f64,
    pub b_h: f64,
    pub b_v: f64,
}

impl AttenuatorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_h", self.a_h),
            ("a_v", self.a_v),
            ("b_h", self.b_h),
            ("b_v", self.b_v),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "attenuator amplitude {name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Full description of one gate realization: beam-splitter and attenuator
/// amplitudes, the interference quality Q′ (probability that the two
/// photons interfere), and the coherence length setting the width of the
/// two-photon interference envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub pdbs: PdbsParams,
    pub attenuators: AttenuatorParams,
    /// Interference quality Q′ ∈ [0, 1].
    pub quality: f64,
    /// FWHM of the Gaussian interference envelope, in µm.
    pub coherence_length_um: f64,
}

impl GateConfig {
    /// Textbook parameters: vertical transmission 1/3 and reflection 2/3
    /// (in intensity) at the overlap beam splitter, perfect horizontal
    /// transmission, and the matching 1/3 horizontal attenuation in both
    /// output modes. Q′ = 1.
    pub fn ideal() -> Self {
        let t_v = (1.0f64 / 3.0).sqrt();
        let r_v = (2.0f64 / 3.0).sqrt();
        let att = (1.0f64 / 3.0).sqrt();
        let mode = PdbsModeParams {
            t_h: 1.0,
            t_v,
            r_h: 0.0,
            r_v,
        };
        Self {
            pdbs: PdbsParams {
                mode_a: mode,
                mode_b: mode,
            },
            attenuators: AttenuatorParams {
                a_h: att,
                a_v: 1.0,
                b_h: att,
                b_v: 1.0,
            },
            quality: 1.0,
            coherence_length_um: 150.0,
        }
    }

    /// Parameters of the measured device: joint splitting ratio
    /// (r_V^a r_V^b)/(t_V^a t_V^b) = 2.018 split symmetrically between the
    /// modes (only the product is physically constrained), attenuators
    /// rebalanced accordingly, and overlap quality Q′ = 0.91.
    pub fn paper_experimental() -> Self {
        let ratio = 2.018f64;
        // symmetric split: per mode r_v/t_v = sqrt(ratio), lossless
        let t_v = (1.0 / (1.0 + ratio)).sqrt();
        let r_v = (ratio / (1.0 + ratio)).sqrt();
        let mode = PdbsModeParams {
            t_h: 1.0,
            t_v,
            r_h: 0.0,
            r_v,
        };
        Self {
            pdbs: PdbsParams {
                mode_a: mode,
                mode_b: mode,
            },
            attenuators: AttenuatorParams {
                a_h: t_v,
                a_v: 1.0,
                b_h: t_v,
                b_v: 1.0,
            },
            quality: 0.91,
            coherence_length_um: 150.0,
        }
    }

    /// Copy with a different interference quality.
    pub fn with_quality(&self, quality: f64) -> Self {
        Self { quality, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        self.pdbs.validate(false)?;
        self.attenuators.validate()?;
        if !(0.0..=1.0).contains(&self.quality) {
            return Err(Error::InvalidInput(format!(
                "quality {} outside [0, 1]",
                self.quality
            )));
        }
        if !(self.coherence_length_um > 0.0) {
            return Err(Error::InvalidInput(format!(
                "coherence length {} must be positive",
                self.coherence_length_um
            )));
        }
        Ok(())
    }

    /// Gaussian envelope width σ such that the FWHM of the interference
    /// envelope equals the coherence length.
    pub fn envelope_sigma_um(&self) -> f64 {
        self.coherence_length_um / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }

    /// Effective interference quality at a relative delay: Q′ times the
    /// Gaussian envelope exp(−d²/(2σ²)).
    pub fn effective_quality(&self, delay_um: f64) -> f64 {
        let sigma = self.envelope_sigma_um();
        self.quality * (-delay_um * delay_um / (2.0 * sigma * sigma)).exp()
    }
}

/// Coefficient matrices of the two post-selected amplitude paths.
///
/// `m_tt` (both photons transmitted) is diagonal; `m_rr` (both reflected)
/// has at most four nonzero entries and reduces to a single VV element when
/// the horizontal reflection vanishes. The coincidence amplitude map is
/// their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOperators {
    pub m_tt: Matrix4<f64>,
    pub m_rr: Matrix4<f64>,
}

impl GateOperators {
    /// The post-selected amplitude map M = M_tt + M_rr.
    pub fn combined(&self) -> Matrix4<f64> {
        self.m_tt + self.m_rr
    }

    pub(crate) fn m_tt_c(&self) -> Matrix4<C64> {
        self.m_tt.map(|x| C64::new(x, 0.0))
    }

    pub(crate) fn m_rr_c(&self) -> Matrix4<C64> {
        self.m_rr.map(|x| C64::new(x, 0.0))
    }
}

/// The ideal C-Phase action: a π phase on the VV amplitude only.
pub fn ideal_cphase(psi: &PureState2Q) -> PureState2Q {
    let a = psi.amplitudes();
    PureState2Q::new(a[0], a[1], a[2], -a[3])
        .expect("phase flip preserves the norm")
}

/// Builds the transmitted-transmitted and reflected-reflected coefficient
/// matrices for arbitrary beam-splitter and attenuator amplitudes.
pub fn build_operators(cfg: &GateConfig) -> GateOperators {
    let a = &cfg.pdbs.mode_a;
    let b = &cfg.pdbs.mode_b;
    let att = &cfg.attenuators;

    let mut m_tt = Matrix4::zeros();
    m_tt[(0, 0)] = a.t_h * b.t_h * att.a_h * att.b_h;
    m_tt[(1, 1)] = a.t_h * b.t_v * att.a_h * att.b_v;
    m_tt[(2, 2)] = a.t_v * b.t_h * att.a_v * att.b_h;
    m_tt[(3, 3)] = a.t_v * b.t_v * att.a_v * att.b_v;

    let mut m_rr = Matrix4::zeros();
    m_rr[(0, 0)] = -a.r_h * b.r_h * att.a_h * att.b_h;
    m_rr[(1, 2)] = -a.r_v * b.r_h * att.a_h * att.b_v;
    m_rr[(2, 1)] = -a.r_h * b.r_v * att.a_v * att.b_h;
    m_rr[(3, 3)] = -a.r_v * b.r_v * att.a_v * att.b_v;

    GateOperators { m_tt, m_rr }
}

/// Result of one alignment condition: pass/fail at the requested tolerance
/// plus the raw residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentCheck {
    pub passed: bool,
    pub residual: f64,
}

impl AlignmentCheck {
    fn at(residual: f64, tol: f64) -> Self {
        Self {
            passed: residual.is_finite() && residual <= tol,
            residual,
        }
    }
}

/// The three conditions a correctly aligned gate satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentReport {
    /// (r_V^a r_V^b)/(t_V^a t_V^b) = 2; residual is the deviation of the
    /// joint ratio from 2 (infinite when t_V^a t_V^b = 0).
    pub splitting_ratio: AlignmentCheck,
    /// r_H^a = r_H^b = 0; residual is the larger reflection amplitude.
    pub h_reflection: AlignmentCheck,
    /// t_H a_H = t_V a_V per output mode; residual is the larger imbalance.
    pub attenuation_balance: AlignmentCheck,
}

impl AlignmentReport {
    pub fn all_passed(&self) -> bool {
        self.splitting_ratio.passed && self.h_reflection.passed && self.attenuation_balance.passed
    }
}

/// Checks the three alignment conditions to the given tolerance.
pub fn check_alignment(cfg: &GateConfig, tol: f64) -> AlignmentReport {
    let a = &cfg.pdbs.mode_a;
    let b = &cfg.pdbs.mode_b;
    let att = &cfg.attenuators;

    let tv_prod = a.t_v * b.t_v;
    let ratio_residual = if tv_prod == 0.0 {
        f64::INFINITY
    } else {
        ((a.r_v * b.r_v) / tv_prod - 2.0).abs()
    };

    let h_residual = a.r_h.abs().max(b.r_h.abs());

    let bal_a = (a.t_h * att.a_h - a.t_v * att.a_v).abs();
    let bal_b = (b.t_h * att.b_h - b.t_v * att.b_v).abs();

    AlignmentReport {
        splitting_ratio: AlignmentCheck::at(ratio_residual, tol),
        h_reflection: AlignmentCheck::at(h_residual, tol),
        attenuation_balance: AlignmentCheck::at(bal_a.max(bal_b), tol),
    }
}

fn sandwich(m: &Matrix4<C64>, rho: &Matrix4<C64>) -> Matrix4<C64> {
    m * rho * m.adjoint()
}

/// Applies the gate channel at an explicit effective quality, returning the
/// unnormalized output E(ρ) and the coincidence probability Tr E(ρ).
///
/// E(ρ) = Q (M_tt+M_rr) ρ (M_tt+M_rr)† + (1−Q) (M_tt ρ M_tt† + M_rr ρ M_rr†)
fn apply_with_quality(
    rho: &DensityMatrix2Q,
    ops: &GateOperators,
    q: f64,
) -> (DensityMatrix2Q, f64) {
    let m_tt = ops.m_tt_c();
    let m_rr = ops.m_rr_c();
    let m = m_tt + m_rr;
    let coherent = sandwich(&m, rho.matrix());
    let incoherent = sandwich(&m_tt, rho.matrix()) + sandwich(&m_rr, rho.matrix());
    let out = coherent * C64::new(q, 0.0) + incoherent * C64::new(1.0 - q, 0.0);
    // symmetrize away float drift; the map is Hermitian analytically
    let out = (out + out.adjoint()) * C64::new(0.5, 0.0);
    let p = out.trace().re;
    (DensityMatrix2Q::from_hermitian_unchecked(out), p)
}

/// Applies the gate channel to a normalized input, returning the
/// unnormalized post-selected output and the coincidence probability.
pub fn apply_gate(rho: &DensityMatrix2Q, cfg: &GateConfig) -> (DensityMatrix2Q, f64) {
    apply_with_quality(rho, &build_operators(cfg), cfg.quality)
}

/// The normalized post-selected output E(ρ)/Tr E(ρ).
///
/// Errors when the coincidence probability vanishes (possible only for
/// pathological configurations such as all-zero amplitudes).
pub fn apply_gate_normalized(rho: &DensityMatrix2Q, cfg: &GateConfig) -> Result<DensityMatrix2Q> {
    let (out, p) = apply_gate(rho, cfg);
    if p < 1e-14 {
        return Err(Error::DegeneratePostSelection);
    }
    out.normalized()
}

/// Coincidence probability for a pure input at an explicit effective
/// quality, as sampled along a delay scan.
pub fn coincidence_probability(cfg: &GateConfig, input: &PureState2Q, q_eff: f64) -> f64 {
    let rho = input
        .normalized()
        .expect("scan input must have nonzero norm")
        .density();
    apply_with_quality(&rho, &build_operators(cfg), q_eff).1
}

/// Two-photon interference scan: coincidence probability versus relative
/// delay, with the effective quality Q_eff(d) = Q′·exp(−d²/(2σ²)). Delays
/// must be finite.
pub fn hom_scan(cfg: &GateConfig, input: &PureState2Q, delays_um: &[f64]) -> Vec<f64> {
    let ops = build_operators(cfg);
    let rho = input
        .normalized()
        .expect("scan input must have nonzero norm")
        .density();
    delays_um
        .iter()
        .map(|&d| apply_with_quality(&rho, &ops, cfg.effective_quality(d)).1)
        .collect()
}

/// Dip visibility (c∞ − c0)/c∞. Errors when the large-delay rate is not
/// positive.
pub fn visibility(c0: f64, c_inf: f64) -> Result<f64> {
    if c_inf <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "large-delay rate {c_inf} must be positive"
        )));
    }
    Ok((c_inf - c0) / c_inf)
}

/// Overlap quality Q = V_exp/V_th. Errors when the theoretical visibility
/// is not positive.
pub fn overlap_quality(v_exp: f64, v_th: f64) -> Result<f64> {
    if v_th <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "theoretical visibility {v_th} must be positive"
        )));
    }
    Ok(v_exp / v_th)
}

/// Endpoint summary of an interference scan: the zero-delay and
/// large-delay coincidence probabilities, the visibilities at the
/// configured and at perfect quality, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomSummary {
    pub c0: f64,
    pub c_inf: f64,
    pub visibility: f64,
    pub visibility_theory: f64,
    pub overlap_quality: f64,
}

/// Computes the scan endpoints for an input state: c0 at zero delay (full
/// configured quality), c∞ in the distinguishable limit (quality 0), and
/// the theoretical c0 at perfect quality.
pub fn hom_summary(cfg: &GateConfig, input: &PureState2Q) -> Result<HomSummary> {
    let c0 = coincidence_probability(cfg, input, cfg.quality);
    let c0_perfect = coincidence_probability(cfg, input, 1.0);
    let c_inf = coincidence_probability(cfg, input, 0.0);
    let v = visibility(c0, c_inf)?;
    let v_th = visibility(c0_perfect, c_inf)?;
    let q = overlap_quality(v, v_th)?;
    Ok(HomSummary {
        c0,
        c_inf,
        visibility: v,
        visibility_theory: v_th,
        overlap_quality: q,
    })
}
