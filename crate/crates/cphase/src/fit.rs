//! Least-squares fit of the partial-interference model (optionally with
//! depolarization) to a reconstructed process matrix.
//!
//! The model family holds the beam-splitter amplitudes fixed at their
//! preset values — following the simplifying assumptions t_V^a = t_V^b and
//! r_H^a = r_H^b = 0 — and frees only the interference quality Q′ (and,
//! for the two-parameter variant, a depolarization weight d applied to the
//! post-selected output). The objective is the squared Frobenius norm
//! Σ_ij |χ_mod,ij − χ_exp,ij|², minimized by bounded derivative-free
//! search: golden-section in one dimension, a projected Nelder–Mead
//! simplex in two.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::{apply_gate, GateConfig};
use crate::qpt::{
    extract_probabilities, qpt_input_kets, ChiMatrix, ChiReconstructor, ProcessData,
};
use crate::states::{fidelity_mixed, C64, DensityMatrix2Q};

/// Per-coordinate parameter tolerance of the fit.
pub const FIT_TOLERANCE: f64 = 1e-6;
/// Iteration cap of the fit optimizers.
pub const FIT_ITERATION_CAP: usize = 500;

/// Which parameters the model frees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelVariant {
    /// Free Q′ only.
    QualityOnly,
    /// Free Q′ and a depolarization weight d; the gate output is mixed
    /// with d · Tr(ρ) · 1/4 after post-selection.
    QualityDepolarization,
}

/// The model family: a variant plus the fixed gate-configuration skeleton
/// whose splitting ratios are held during the fit.
#[derive(Debug, Clone, Copy)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub skeleton: GateConfig,
}

impl ModelSpec {
    /// Quality-only model over the ideal splitting ratios.
    pub fn quality_only() -> Self {
        Self {
            variant: ModelVariant::QualityOnly,
            skeleton: GateConfig::ideal(),
        }
    }

    /// Quality + depolarization model over the ideal splitting ratios.
    pub fn quality_depolarization() -> Self {
        Self {
            variant: ModelVariant::QualityDepolarization,
            skeleton: GateConfig::ideal(),
        }
    }

    /// Same variant over custom (e.g. measured) splitting ratios, for
    /// sensitivity analysis.
    pub fn with_skeleton(variant: ModelVariant, skeleton: GateConfig) -> Self {
        Self { variant, skeleton }
    }
}

/// A point in model-parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub quality: f64,
    /// Depolarization weight; 0 for the quality-only variant.
    pub depolarization: f64,
}

impl ModelParams {
    pub fn quality(q: f64) -> Self {
        Self {
            quality: q,
            depolarization: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quality", self.quality),
            ("depolarization", self.depolarization),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "model parameter {name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Forward-simulates the model channel over the 16 tomographic inputs.
pub fn model_process_data(spec: &ModelSpec, params: &ModelParams) -> Result<ProcessData> {
    params.validate()?;
    let cfg = spec.skeleton.with_quality(params.quality);
    let d = match spec.variant {
        ModelVariant::QualityOnly => 0.0,
        ModelVariant::QualityDepolarization => params.depolarization,
    };
    let raw: Vec<DensityMatrix2Q> = qpt_input_kets()
        .iter()
        .map(|psi| {
            let (out, p) = apply_gate(&psi.density(), &cfg);
            if d == 0.0 {
                out
            } else {
                let m = out.matrix() * C64::new(1.0 - d, 0.0)
                    + nalgebra::Matrix4::<C64>::identity() * C64::new(d * p / 4.0, 0.0);
                DensityMatrix2Q::from_hermitian_unchecked(m)
            }
        })
        .collect();
    extract_probabilities(&raw)
}

/// The model's process matrix at the given parameters, reusing a prebuilt
/// inversion operator.
pub fn chi_from_model_with(
    reconstructor: &ChiReconstructor,
    spec: &ModelSpec,
    params: &ModelParams,
) -> Result<ChiMatrix> {
    reconstructor.reconstruct(&model_process_data(spec, params)?)
}

/// The model's process matrix at the given parameters.
pub fn chi_from_model(spec: &ModelSpec, params: &ModelParams) -> Result<ChiMatrix> {
    chi_from_model_with(&ChiReconstructor::new()?, spec, params)
}

/// Outcome of a model fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub variant: ModelVariant,
    pub params: ModelParams,
    /// Σ_ij |χ_mod,ij − χ_exp,ij|² at the fitted parameters.
    pub residual: f64,
    pub objective_evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Per-coordinate parameter tolerance used.
    pub tolerance: f64,
    pub iteration_cap: usize,
}

struct ScalarMinimum {
    x: f64,
    fx: f64,
    evaluations: usize,
    iterations: usize,
    converged: bool,
}

/// Golden-section search on [lo, hi]; converges linearly to the bracket
/// tolerance, which is all the smooth single-minimum objective needs.
fn golden_section(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    xtol: f64,
    iteration_cap: usize,
) -> Result<ScalarMinimum> {
    let invphi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < iteration_cap {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
        if b - a < xtol {
            converged = true;
            break;
        }
    }
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    Ok(ScalarMinimum {
        x,
        fx,
        evaluations,
        iterations,
        converged,
    })
}

struct SimplexMinimum {
    x: [f64; 2],
    fx: f64,
    evaluations: usize,
    iterations: usize,
    converged: bool,
}

fn clamp01(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]
}

/// Nelder–Mead on the unit square, with candidate points projected back
/// into bounds. Terminates when the simplex spread per coordinate drops
/// below the tolerance.
fn nelder_mead_2d(
    mut f: impl FnMut([f64; 2]) -> Result<f64>,
    start: [f64; 2],
    steps: [f64; 2],
    xtol: f64,
    iteration_cap: usize,
) -> Result<SimplexMinimum> {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut evaluations = 0;

    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for vertex in [
        start,
        [start[0] + steps[0], start[1]],
        [start[0], start[1] + steps[1]],
    ] {
        let p = clamp01(vertex);
        let fp = f(p)?;
        evaluations += 1;
        simplex.push((p, fp));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < iteration_cap {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let spread = (0..2)
            .map(|c| {
                let vals: Vec<f64> = simplex.iter().map(|(p, _)| p[c]).collect();
                vals.iter().cloned().fold(f64::MIN, f64::max)
                    - vals.iter().cloned().fold(f64::MAX, f64::min)
            })
            .fold(0.0f64, f64::max);
        if spread < xtol {
            converged = true;
            break;
        }

        let best = simplex[0];
        let second = simplex[1];
        let worst = simplex[2];
        let centroid = [
            (best.0[0] + second.0[0]) / 2.0,
            (best.0[1] + second.0[1]) / 2.0,
        ];

        let reflect = |t: f64| {
            clamp01([
                centroid[0] + t * (centroid[0] - worst.0[0]),
                centroid[1] + t * (centroid[1] - worst.0[1]),
            ])
        };

        let xr = reflect(ALPHA);
        let fr = f(xr)?;
        evaluations += 1;

        if fr < best.1 {
            let xe = reflect(GAMMA);
            let fe = f(xe)?;
            evaluations += 1;
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < second.1 {
            simplex[2] = (xr, fr);
        } else {
            let xc = if fr < worst.1 {
                reflect(RHO)
            } else {
                reflect(-RHO)
            };
            let fc_ = f(xc)?;
            evaluations += 1;
            if fc_ < worst.1.min(fr) {
                simplex[2] = (xc, fc_);
            } else {
                // shrink toward the best vertex
                for k in 1..3 {
                    let p = clamp01([
                        best.0[0] + SIGMA * (simplex[k].0[0] - best.0[0]),
                        best.0[1] + SIGMA * (simplex[k].0[1] - best.0[1]),
                    ]);
                    let fp = f(p)?;
                    evaluations += 1;
                    simplex[k] = (p, fp);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(SimplexMinimum {
        x: simplex[0].0,
        fx: simplex[0].1,
        evaluations,
        iterations,
        converged,
    })
}

/// Fits the model to an experimental process matrix by minimizing the
/// Frobenius residual over the free parameters.
///
/// On hitting the iteration cap the convergence error carries the best
/// point found so far.
pub fn fit_quality(chi_exp: &ChiMatrix, spec: &ModelSpec) -> Result<FitResult> {
    let reconstructor = ChiReconstructor::new()?;

    match spec.variant {
        ModelVariant::QualityOnly => {
            let mut objective = |q: f64| -> Result<f64> {
                let chi = chi_from_model_with(&reconstructor, spec, &ModelParams::quality(q))?;
                Ok(chi.frobenius_distance_sq(chi_exp))
            };
            // bracket one decade below the parameter tolerance so the
            // returned minimum meets it with margin
            let min = golden_section(&mut objective, 0.0, 1.0, FIT_TOLERANCE / 10.0, FIT_ITERATION_CAP)?;
            let result = FitResult {
                variant: spec.variant,
                params: ModelParams::quality(min.x),
                residual: min.fx,
                objective_evaluations: min.evaluations,
                iterations: min.iterations,
                converged: min.converged,
                tolerance: FIT_TOLERANCE,
                iteration_cap: FIT_ITERATION_CAP,
            };
            if !min.converged {
                return Err(Error::Convergence {
                    iterations: min.iterations,
                    residual: min.fx,
                    best: Box::new(result),
                });
            }
            Ok(result)
        }
        ModelVariant::QualityDepolarization => {
            let mut objective = |p: [f64; 2]| -> Result<f64> {
                let params = ModelParams {
                    quality: p[0],
                    depolarization: p[1],
                };
                let chi = chi_from_model_with(&reconstructor, spec, &params)?;
                Ok(chi.frobenius_distance_sq(chi_exp))
            };
            let min = nelder_mead_2d(
                &mut objective,
                [0.9, 0.05],
                [0.05, 0.05],
                FIT_TOLERANCE,
                FIT_ITERATION_CAP,
            )?;
            let result = FitResult {
                variant: spec.variant,
                params: ModelParams {
                    quality: min.x[0],
                    depolarization: min.x[1],
                },
                residual: min.fx,
                objective_evaluations: min.evaluations,
                iterations: min.iterations,
                converged: min.converged,
                tolerance: FIT_TOLERANCE,
                iteration_cap: FIT_ITERATION_CAP,
            };
            if !min.converged {
                return Err(Error::Convergence {
                    iterations: min.iterations,
                    residual: min.fx,
                    best: Box::new(result),
                });
            }
            Ok(result)
        }
    }
}

/// Per-input fidelities between model predictions and measured outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ModelFidelities {
    /// Uhlmann fidelity per tomographic input, in input order.
    pub per_input: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

/// Compares model outputs against measured normalized outputs with the
/// mixed-state (Uhlmann) fidelity, which reduces to ⟨ψ|ρ|ψ⟩ for pure model
/// outputs.
pub fn model_output_fidelities(
    spec: &ModelSpec,
    params: &ModelParams,
    measured: &ProcessData,
) -> Result<ModelFidelities> {
    let model = model_process_data(spec, params)?;
    let mut per_input = Vec::with_capacity(16);
    for k in 0..16 {
        per_input.push(fidelity_mixed(&model.outputs[k], &measured.outputs[k])?);
    }
    let mean = per_input.iter().sum::<f64>() / per_input.len() as f64;
    let var = per_input
        .iter()
        .map(|f| (f - mean) * (f - mean))
        .sum::<f64>()
        / (per_input.len() - 1) as f64;
    Ok(ModelFidelities {
        per_input,
        mean,
        std_dev: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::qpt::{ideal_chi, reconstruct_chi};

    #[test]
    fn model_at_unit_quality_is_ideal_chi() {
        let chi = chi_from_model(&ModelSpec::quality_only(), &ModelParams::quality(1.0)).unwrap();
        let reference = ideal_chi();
        for i in 0..16 {
            for j in 0..16 {
                assert!((chi.entry(i, j) - reference.entry(i, j)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn model_at_zero_quality_is_incoherent_mixture() {
        // oracle: chi of M_tt rho M_tt† + M_rr rho M_rr† assembled from the
        // two deterministic paths
        let chi = chi_from_model(&ModelSpec::quality_only(), &ModelParams::quality(0.0)).unwrap();
        let ops = crate::gate::build_operators(&GateConfig::ideal());
        let chi_tt = crate::qpt::chi_of_operator(&ops.m_tt.map(|x| C64::new(x, 0.0)));
        let chi_rr = crate::qpt::chi_of_operator(&ops.m_rr.map(|x| C64::new(x, 0.0)));
        for i in 0..16 {
            for j in 0..16 {
                let expected = chi_tt.entry(i, j) + chi_rr.entry(i, j);
                assert!((chi.entry(i, j) - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn round_trip_recovers_quality() {
        let spec = ModelSpec::quality_only();
        let chi_exp = chi_from_model(&spec, &ModelParams::quality(0.904)).unwrap();
        let fit = fit_quality(&chi_exp, &spec).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.params.quality, 0.904, epsilon = 1e-6);
        assert!(fit.residual < 1e-12, "residual {:.2e}", fit.residual);
    }

    #[test]
    fn ideal_chi_fits_to_unit_quality() {
        let spec = ModelSpec::quality_only();
        let fit = fit_quality(&ideal_chi(), &spec).unwrap();
        assert_abs_diff_eq!(fit.params.quality, 1.0, epsilon = 1e-6);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn objective_vanishes_exactly_on_the_model_grid() {
        let spec = ModelSpec::quality_only();
        let reconstructor = ChiReconstructor::new().unwrap();
        let mut fitted = Vec::new();
        let mut off_diag = Vec::new();
        for i in 0..=10 {
            let q = i as f64 / 10.0;
            let chi_exp =
                chi_from_model_with(&reconstructor, &spec, &ModelParams::quality(q)).unwrap();
            let fit = fit_quality(&chi_exp, &spec).unwrap();
            assert!(
                (fit.params.quality - q).abs() < 1e-6,
                "grid point {q}: fitted {}",
                fit.params.quality
            );
            assert!(fit.residual < 1e-12, "grid point {q}: residual {:.2e}", fit.residual);
            fitted.push(fit.params.quality);
            // coherence-sensitive entry: II x ZZ
            off_diag.push(chi_exp.entry(0, 15).re.abs());
        }
        // fitted quality is monotone in the coherent off-diagonal magnitude
        // within the model family (entries run (1-2q)/9: |.| dips at q=0.5)
        for w in fitted.windows(2) {
            assert!(w[1] > w[0]);
        }
        for i in 6..10 {
            assert!(off_diag[i + 1] > off_diag[i]);
        }
    }

    #[test]
    fn depolarization_variant_reproduces_quality_only_on_model_data() {
        let spec1 = ModelSpec::quality_only();
        let spec2 = ModelSpec::quality_depolarization();
        let chi_exp = chi_from_model(&spec1, &ModelParams::quality(0.904)).unwrap();
        let fit1 = fit_quality(&chi_exp, &spec1).unwrap();
        let fit2 = fit_quality(&chi_exp, &spec2).unwrap();
        assert!(
            fit2.params.depolarization < 1e-4,
            "white-noise weight {} not negligible",
            fit2.params.depolarization
        );
        assert!((fit1.params.quality - fit2.params.quality).abs() < 1e-4);
    }

    #[test]
    fn depolarization_is_recovered_when_present() {
        let spec = ModelSpec::quality_depolarization();
        let truth = ModelParams {
            quality: 0.93,
            depolarization: 0.07,
        };
        let chi_exp = chi_from_model(&spec, &truth).unwrap();
        let fit = fit_quality(&chi_exp, &spec).unwrap();
        assert!((fit.params.quality - truth.quality).abs() < 1e-4);
        assert!((fit.params.depolarization - truth.depolarization).abs() < 1e-4);
    }

    #[test]
    fn model_fidelities_are_one_against_the_source() {
        let spec = ModelSpec::quality_only();
        let params = ModelParams::quality(0.91);
        let measured = model_process_data(&spec, &params).unwrap();
        let fids = model_output_fidelities(&spec, &params, &measured).unwrap();
        for f in &fids.per_input {
            assert!((f - 1.0).abs() < 1e-9);
        }
        assert_abs_diff_eq!(fids.mean, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn close_models_have_high_cross_fidelity() {
        let spec = ModelSpec::quality_only();
        let measured = model_process_data(&spec, &ModelParams::quality(0.91)).unwrap();
        let fids =
            model_output_fidelities(&spec, &ModelParams::quality(0.904), &measured).unwrap();
        assert!(fids.mean > 0.999, "mean fidelity {}", fids.mean);
    }

    #[test]
    fn objective_unchanged_by_symmetrization() {
        let spec = ModelSpec::quality_only();
        let reconstructor = ChiReconstructor::new().unwrap();
        let a = chi_from_model_with(&reconstructor, &spec, &ModelParams::quality(0.7)).unwrap();
        let b = chi_from_model_with(&reconstructor, &spec, &ModelParams::quality(0.9)).unwrap();
        let sym = |m: &ChiMatrix| {
            ChiMatrix::from_hermitian_unchecked(
                (m.matrix() + m.matrix().adjoint()) * C64::new(0.5, 0.0),
            )
        };
        let d1 = a.frobenius_distance_sq(&b);
        let d2 = sym(&a).frobenius_distance_sq(&sym(&b));
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-15);
    }

    #[test]
    fn out_of_bounds_params_are_rejected() {
        let spec = ModelSpec::quality_only();
        assert!(chi_from_model(&spec, &ModelParams::quality(1.2)).is_err());
        assert!(chi_from_model(
            &spec,
            &ModelParams {
                quality: 0.5,
                depolarization: -0.1
            }
        )
        .is_err());
    }

    #[test]
    fn noisy_pipeline_fit_lands_near_true_quality() {
        // one representative seed; the acceptance suite sweeps 50
        use crate::counts::DetectorEfficiencies;
        use crate::qpt::noisy_gate_process_data;

        let true_q = 0.91;
        let cfg = GateConfig::ideal().with_quality(true_q);
        let eff = DetectorEfficiencies::uniform(1.0).unwrap();
        let run = noisy_gate_process_data(&cfg, &eff, 4000, 7).unwrap();
        let chi = reconstruct_chi(&run.data).unwrap();
        let fit = fit_quality(&chi, &ModelSpec::quality_only()).unwrap();
        assert!(
            (fit.params.quality - true_q).abs() < 0.02,
            "fitted {} vs true {true_q}",
            fit.params.quality
        );
    }
}
