//! File formats: JSON payloads and plot-ready CSV.
//!
//! Complex numbers are serialized as two-element arrays [re, im], matrices
//! as row-major nested arrays, and every matrix-carrying file states its
//! `basis_order`. Payloads contain no timestamps, so re-running a
//! simulation with the same seed reproduces them byte for byte.

use nalgebra::{Matrix4, SMatrix};
use serde::{Deserialize, Serialize};

use crate::counts::CountRecord;
use crate::error::{Error, Result};
use crate::fit::{FitResult, ModelFidelities};
use crate::gate::{GateConfig, HomSummary};
use crate::pauli::PAULI_LABELS;
use crate::qpt::{ChiMatrix, ProcessData, QPT_INPUT_LABELS};
use crate::states::{C64, DensityMatrix2Q, BASIS_ORDER};
use crate::tomo::{EntanglingReport, FunctionalErrors};

/// Current schema version of the gate configuration file.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn basis_order_strings() -> Vec<String> {
    BASIS_ORDER.iter().map(|s| s.to_string()).collect()
}

/// Versioned gate-configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateConfigFile {
    pub schema_version: u32,
    pub gate: GateConfig,
}

impl GateConfigFile {
    pub fn new(gate: GateConfig) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            gate,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<GateConfig> {
        let file: GateConfigFile = serde_json::from_str(s)?;
        if file.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported config schema version {}",
                file.schema_version
            )));
        }
        file.gate.validate()?;
        Ok(file.gate)
    }
}

/// A density matrix with its basis convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub basis_order: Vec<String>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl DensityMatrixJson {
    pub fn from_density(rho: &DensityMatrix2Q) -> Self {
        let m = rho.matrix();
        Self {
            basis_order: basis_order_strings(),
            matrix: (0..4)
                .map(|i| (0..4).map(|j| pair(m[(i, j)])).collect())
                .collect(),
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix2Q> {
        if self.matrix.len() != 4 || self.matrix.iter().any(|r| r.len() != 4) {
            return Err(Error::InvalidInput("matrix is not 4×4".into()));
        }
        let m = Matrix4::from_fn(|i, j| unpair(self.matrix[i][j]));
        DensityMatrix2Q::new(m)
    }
}

/// A process matrix with its operator-basis labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiMatrixJson {
    pub pauli_labels: Vec<String>,
    pub basis_order: Vec<String>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl ChiMatrixJson {
    pub fn from_chi(chi: &ChiMatrix) -> Self {
        Self {
            pauli_labels: PAULI_LABELS.iter().map(|s| s.to_string()).collect(),
            basis_order: basis_order_strings(),
            matrix: (0..16)
                .map(|i| (0..16).map(|j| pair(chi.entry(i, j))).collect())
                .collect(),
        }
    }

    pub fn to_chi(&self) -> Result<ChiMatrix> {
        if self.matrix.len() != 16 || self.matrix.iter().any(|r| r.len() != 16) {
            return Err(Error::InvalidInput("matrix is not 16×16".into()));
        }
        let m = SMatrix::<C64, 16, 16>::from_fn(|i, j| unpair(self.matrix[i][j]));
        ChiMatrix::new(m)
    }
}

/// State-reconstruction report: the matrix plus the derived scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionReportJson {
    pub input: String,
    pub basis_order: Vec<String>,
    pub rho: Vec<Vec<[f64; 2]>>,
    pub min_eigenvalue: f64,
    pub physical: bool,
    pub fidelity: f64,
    pub log_negativity: f64,
    pub chsh_violated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negativity_err: Option<f64>,
    pub resamples: usize,
}

impl ReconstructionReportJson {
    pub fn new(
        input_label: &str,
        rho: &DensityMatrix2Q,
        report: &EntanglingReport,
        errors: Option<&FunctionalErrors>,
    ) -> Self {
        Self {
            input: input_label.to_string(),
            basis_order: basis_order_strings(),
            rho: DensityMatrixJson::from_density(rho).matrix,
            min_eigenvalue: report.min_eigenvalue,
            physical: report.physical,
            fidelity: report.fidelity,
            log_negativity: report.log_negativity,
            chsh_violated: report.chsh_violated,
            fidelity_err: errors.map(|e| e.fidelity_std),
            negativity_err: errors.map(|e| e.negativity_std),
            resamples: errors.map(|e| e.resamples).unwrap_or(0),
        }
    }
}

/// Interference-scan summary with the reference values of the measured
/// device for side-by-side comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomSummaryJson {
    pub input: String,
    pub c0: f64,
    pub c_inf: f64,
    pub visibility: f64,
    pub visibility_theory: f64,
    pub overlap_quality: f64,
}

impl HomSummaryJson {
    pub fn new(input_label: &str, summary: &HomSummary) -> Self {
        Self {
            input: input_label.to_string(),
            c0: summary.c0,
            c_inf: summary.c_inf,
            visibility: summary.visibility,
            visibility_theory: summary.visibility_theory,
            overlap_quality: summary.overlap_quality,
        }
    }
}

/// Process-tomography summary.
#[derive(Debug, Clone, Serialize)]
pub struct QptSummaryJson {
    pub process_fidelity_vs_ideal: f64,
    pub chi_trace: f64,
    pub chi_min_eigenvalue: f64,
    pub chi_physical: bool,
    pub probabilities: Vec<ProbabilityEntry>,
    /// Reference values of the measured device, for comparison only: its
    /// process fidelity includes apparatus imperfections beyond the
    /// interference-quality model.
    pub reference: ReferenceValues,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbabilityEntry {
    pub input: String,
    pub probability: f64,
}

/// Headline numbers of the measured device this toolkit models.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceValues {
    pub process_fidelity: f64,
    pub fidelity_l_plus: f64,
    pub min_output_fidelity: f64,
    pub log_negativity_l_plus: f64,
    pub overlap_quality: f64,
    pub fitted_quality: f64,
    pub model_fidelity_mean: f64,
}

impl Default for ReferenceValues {
    fn default() -> Self {
        Self {
            process_fidelity: 0.818,
            fidelity_l_plus: 0.878,
            min_output_fidelity: 0.805,
            log_negativity_l_plus: 0.75,
            overlap_quality: 0.910,
            fitted_quality: 0.904,
            model_fidelity_mean: 0.966,
        }
    }
}

impl QptSummaryJson {
    pub fn new(f_p: f64, chi: &ChiMatrix, data: &ProcessData) -> Self {
        let min_eig = chi.min_eigenvalue();
        Self {
            process_fidelity_vs_ideal: f_p,
            chi_trace: chi.trace(),
            chi_min_eigenvalue: min_eig,
            chi_physical: chi.is_physical(),
            probabilities: QPT_INPUT_LABELS
                .iter()
                .zip(data.probabilities.iter())
                .map(|(label, p)| ProbabilityEntry {
                    input: (*label).to_string(),
                    probability: *p,
                })
                .collect(),
            reference: ReferenceValues::default(),
        }
    }
}

/// Fit report: the result plus the per-input model fidelities.
#[derive(Debug, Clone, Serialize)]
pub struct FitReportJson {
    pub fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_fidelities: Option<ModelFidelitiesJson>,
    pub reference: ReferenceValues,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelFidelitiesJson {
    pub per_input: Vec<ProbabilityEntry>,
    pub mean: f64,
    pub std_dev: f64,
}

impl ModelFidelitiesJson {
    pub fn new(fids: &ModelFidelities) -> Self {
        Self {
            per_input: QPT_INPUT_LABELS
                .iter()
                .zip(fids.per_input.iter())
                .map(|(label, f)| ProbabilityEntry {
                    input: (*label).to_string(),
                    probability: *f,
                })
                .collect(),
            mean: fids.mean,
            std_dev: fids.std_dev,
        }
    }
}

/// CSV of an interference scan: `delay_um,coincidence_probability`.
pub fn hom_scan_csv(delays_um: &[f64], probabilities: &[f64]) -> String {
    let mut out = String::from("delay_um,coincidence_probability\n");
    for (d, p) in delays_um.iter().zip(probabilities.iter()) {
        out.push_str(&format!("{d},{p}\n"));
    }
    out
}

/// CSV of a 4×4 density matrix: `row,col,real,imag` with basis labels.
pub fn density_matrix_csv(rho: &DensityMatrix2Q) -> String {
    let mut out = String::from("row,col,real,imag\n");
    let m = rho.matrix();
    for i in 0..4 {
        for j in 0..4 {
            out.push_str(&format!(
                "{},{},{},{}\n",
                BASIS_ORDER[i],
                BASIS_ORDER[j],
                m[(i, j)].re,
                m[(i, j)].im
            ));
        }
    }
    out
}

/// CSV of a 16×16 process matrix: `row,col,real,imag` with Pauli labels.
pub fn chi_matrix_csv(chi: &ChiMatrix) -> String {
    let mut out = String::from("row,col,real,imag\n");
    for i in 0..16 {
        for j in 0..16 {
            let z = chi.entry(i, j);
            out.push_str(&format!(
                "{},{},{},{}\n",
                PAULI_LABELS[i], PAULI_LABELS[j], z.re, z.im
            ));
        }
    }
    out
}

/// CSV of the per-input success probabilities: `input,probability`.
pub fn probability_table_csv(data: &ProcessData) -> String {
    let mut out = String::from("input,probability\n");
    for (label, p) in QPT_INPUT_LABELS.iter().zip(data.probabilities.iter()) {
        out.push_str(&format!("{label},{p}\n"));
    }
    out
}

/// One campaign record per line:
/// `setting_a,setting_b,n_hh,n_hv,n_vh,n_vv,eta_ah,eta_av,eta_bh,eta_bv,seed`.
pub fn campaign_csv(records: &[CountRecord]) -> String {
    let mut out =
        String::from("setting_a,setting_b,n_hh,n_hv,n_vh,n_vv,eta_ah,eta_av,eta_bh,eta_bv,seed\n");
    for rec in records {
        let eff = &rec.efficiencies;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            rec.setting.arm_a,
            rec.setting.arm_b,
            rec.counts[0],
            rec.counts[1],
            rec.counts[2],
            rec.counts[3],
            eff.a_h,
            eff.a_v,
            eff.b_h,
            eff.b_v,
            rec.seed
        ));
    }
    out
}

/// JSON-lines campaign: one [`CountRecord`] per line.
pub fn campaign_jsonl(records: &[CountRecord]) -> Result<String> {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a JSON-lines campaign.
pub fn campaign_from_jsonl(s: &str) -> Result<Vec<CountRecord>> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{simulate_counts, AnalyzerSetting, DetectorEfficiencies, MeasBasis};
    use crate::gate::apply_gate;
    use crate::qpt::{gate_process_data, ideal_chi, reconstruct_chi};
    use crate::states::{tensor, SingleQubitKet};

    #[test]
    fn config_file_round_trip() {
        let cfg = GateConfig::paper_experimental();
        let json = GateConfigFile::new(cfg).to_json().unwrap();
        assert!(json.contains("\"schema_version\": 1"));
        let back = GateConfigFile::from_json(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_file_rejects_unknown_version() {
        let cfg = GateConfig::ideal();
        let mut file = GateConfigFile::new(cfg);
        file.schema_version = 99;
        let json = serde_json::to_string(&file).unwrap();
        assert!(GateConfigFile::from_json(&json).is_err());
    }

    #[test]
    fn density_matrix_json_round_trip() {
        let input = tensor(&SingleQubitKet::left(), &SingleQubitKet::plus());
        let (rho, _) = apply_gate(&input.density(), &GateConfig::ideal().with_quality(0.9));
        let rho = rho.normalized().unwrap();
        let json = DensityMatrixJson::from_density(&rho);
        assert_eq!(json.basis_order, vec!["HH", "HV", "VH", "VV"]);
        let back = json.to_density().unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn chi_json_round_trip_preserves_entries() {
        let chi = ideal_chi();
        let json = ChiMatrixJson::from_chi(&chi);
        assert_eq!(json.pauli_labels.len(), 16);
        assert_eq!(json.pauli_labels[0], "II");
        assert_eq!(json.pauli_labels[15], "ZZ");
        let back = json.to_chi().unwrap();
        assert_eq!(back.matrix(), chi.matrix());
    }

    #[test]
    fn serialized_chi_parses_back_through_text() {
        let data = gate_process_data(&GateConfig::ideal().with_quality(0.91)).unwrap();
        let chi = reconstruct_chi(&data).unwrap();
        let text = serde_json::to_string_pretty(&ChiMatrixJson::from_chi(&chi)).unwrap();
        let parsed: ChiMatrixJson = serde_json::from_str(&text).unwrap();
        let back = parsed.to_chi().unwrap();
        assert!(chi.frobenius_distance_sq(&back) < 1e-24);
    }

    #[test]
    fn campaign_formats_round_trip() {
        let rho = tensor(&SingleQubitKet::plus(), &SingleQubitKet::left()).density();
        let eff = DetectorEfficiencies::new(0.9, 0.85, 0.8, 0.95).unwrap();
        let records: Vec<_> = crate::tomo::standard_settings()
            .iter()
            .enumerate()
            .map(|(i, s)| simulate_counts(&rho, *s, &eff, 500, i as u64).unwrap())
            .collect();

        let jsonl = campaign_jsonl(&records).unwrap();
        let back = campaign_from_jsonl(&jsonl).unwrap();
        assert_eq!(back, records);

        let csv = campaign_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "setting_a,setting_b,n_hh,n_hv,n_vh,n_vv,eta_ah,eta_av,eta_bh,eta_bv,seed"
        );
        assert_eq!(csv.lines().count(), 10);
        let first = lines.next().unwrap();
        assert!(first.starts_with("Z,Z,"));
    }

    #[test]
    fn hom_csv_shape() {
        let csv = hom_scan_csv(&[-100.0, 0.0, 100.0], &[0.5, 0.1, 0.5]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "delay_um,coincidence_probability");
        assert_eq!(lines[1], "-100,0.5");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn chi_csv_has_labelled_rows() {
        let csv = chi_matrix_csv(&ideal_chi());
        assert_eq!(csv.lines().count(), 257);
        assert!(csv.contains("ZZ,II,-0.1111111111111111,0"));
    }

    #[test]
    fn setting_rates_order_yields_zz_first() {
        let s = AnalyzerSetting::new(MeasBasis::Z, MeasBasis::Z);
        assert_eq!(format!("{}", s.arm_a), "Z");
    }
}
