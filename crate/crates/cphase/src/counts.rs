//! Photon-counting simulation: Poissonian coincidence statistics and
//! detector-efficiency correction.
//!
//! Each output arm is analyzed by a half- and a quarter-wave plate followed
//! by a polarizing beam splitter with one detector per port, so every
//! analyzer setting yields four coincidence counts at once. Counts are
//! drawn from independent Poisson distributions with a named, seedable
//! generator (ChaCha8) so that records are reproducible across platforms.

use nalgebra::Matrix4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{C64, DensityMatrix2Q, SingleQubitKet};

/// Name of the counting RNG recorded in every [`CountRecord`].
pub const COUNT_RNG: &str = "chacha8";

/// Projection basis of one analyzer arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasBasis {
    /// {H, V}
    Z,
    /// {+, −}
    X,
    /// {L, R}
    Y,
}

impl MeasBasis {
    pub const ALL: [MeasBasis; 3] = [MeasBasis::Z, MeasBasis::X, MeasBasis::Y];

    /// The orthogonal projector pair of this basis. The first projector is
    /// the one whose photon exits the analyzer's H port (H, +, L), the
    /// second exits the V port (V, −, R).
    pub fn projector_kets(&self) -> (SingleQubitKet, SingleQubitKet) {
        match self {
            MeasBasis::Z => (SingleQubitKet::h(), SingleQubitKet::v()),
            MeasBasis::X => (SingleQubitKet::plus(), SingleQubitKet::minus()),
            MeasBasis::Y => (SingleQubitKet::left(), SingleQubitKet::right()),
        }
    }

    /// Wave-plate angles (HWP, QWP) in degrees that rotate this basis onto
    /// the analyzer's H/V ports: HWP at 22.5° selects X, QWP at 45° selects
    /// Y. Documentation only; all computations use the projectors.
    pub fn waveplate_angles_deg(&self) -> (f64, f64) {
        match self {
            MeasBasis::Z => (0.0, 0.0),
            MeasBasis::X => (22.5, 0.0),
            MeasBasis::Y => (0.0, 45.0),
        }
    }

    pub fn outcome_labels(&self) -> (&'static str, &'static str) {
        match self {
            MeasBasis::Z => ("H", "V"),
            MeasBasis::X => ("+", "-"),
            MeasBasis::Y => ("L", "R"),
        }
    }
}

impl std::fmt::Display for MeasBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MeasBasis::Z => "Z",
            MeasBasis::X => "X",
            MeasBasis::Y => "Y",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for MeasBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(MeasBasis::Z),
            "X" | "x" => Ok(MeasBasis::X),
            "Y" | "y" => Ok(MeasBasis::Y),
            other => Err(Error::InvalidInput(format!("unknown basis {other:?}"))),
        }
    }
}

/// One analyzer setting: a projection basis per arm. The four projector
/// pairs are ordered (first⊗first, first⊗second, second⊗first,
/// second⊗second), e.g. (HH, HV, VH, VV) for Z⊗Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub arm_a: MeasBasis,
    pub arm_b: MeasBasis,
}

impl AnalyzerSetting {
    pub fn new(arm_a: MeasBasis, arm_b: MeasBasis) -> Self {
        Self { arm_a, arm_b }
    }

    /// The four two-photon projectors in pair order.
    pub fn projector_pairs(&self) -> [Matrix4<C64>; 4] {
        let (a1, a2) = self.arm_a.projector_kets();
        let (b1, b2) = self.arm_b.projector_kets();
        let pa = [a1.projector(), a2.projector()];
        let pb = [b1.projector(), b2.projector()];
        [
            pa[0].kronecker(&pb[0]),
            pa[0].kronecker(&pb[1]),
            pa[1].kronecker(&pb[0]),
            pa[1].kronecker(&pb[1]),
        ]
    }

    /// Detector ports (arm a, arm b) for a pair slot: the first projector
    /// of each arm maps to that arm's H port.
    pub fn ports(slot: usize) -> (Port, Port) {
        match slot {
            0 => (Port::H, Port::H),
            1 => (Port::H, Port::V),
            2 => (Port::V, Port::H),
            3 => (Port::V, Port::V),
            _ => panic!("pair slot {slot} out of range"),
        }
    }
}

/// Analyzer output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    H,
    V,
}

/// Efficiencies of the four coincidence detectors, each in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorEfficiencies {
    pub a_h: f64,
    pub a_v: f64,
    pub b_h: f64,
    pub b_v: f64,
}

impl DetectorEfficiencies {
    pub fn uniform(eta: f64) -> Result<Self> {
        Self::new(eta, eta, eta, eta)
    }

    pub fn new(a_h: f64, a_v: f64, b_h: f64, b_v: f64) -> Result<Self> {
        let eff = Self { a_h, a_v, b_h, b_v };
        eff.validate()?;
        Ok(eff)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_h", self.a_h),
            ("a_v", self.a_v),
            ("b_h", self.b_h),
            ("b_v", self.b_v),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "detector efficiency {name} = {v} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Product of the two detector efficiencies seeing a pair slot.
    pub fn pair_product(&self, slot: usize) -> f64 {
        let (pa, pb) = AnalyzerSetting::ports(slot);
        let ea = match pa {
            Port::H => self.a_h,
            Port::V => self.a_v,
        };
        let eb = match pb {
            Port::H => self.b_h,
            Port::V => self.b_v,
        };
        ea * eb
    }
}

/// Raw coincidence counts for one analyzer setting, with the metadata
/// needed to undo detector efficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: AnalyzerSetting,
    /// Counts in pair order (first⊗first, first⊗second, second⊗first,
    /// second⊗second).
    pub counts: [u64; 4],
    /// Expected number of photon pairs entering the analyzers.
    pub expected_pairs: u64,
    pub efficiencies: DetectorEfficiencies,
    pub seed: u64,
    /// Name of the generator that produced the counts.
    pub rng: String,
}

/// Draws the four coincidence counts of one analyzer setting.
///
/// The expected count of pair slot s is λ_s = N · Tr(ρ P_a⊗P_b) · η_a η_b,
/// where ρ may be sub-normalized (its trace is then the post-selection
/// probability). Counts are independent Poisson draws; the record is
/// bit-exact reproducible from (inputs, seed).
pub fn simulate_counts(
    rho: &DensityMatrix2Q,
    setting: AnalyzerSetting,
    eff: &DetectorEfficiencies,
    expected_pairs: u64,
    seed: u64,
) -> Result<CountRecord> {
    if expected_pairs == 0 {
        return Err(Error::InvalidInput(
            "expected pair count must be positive".into(),
        ));
    }
    eff.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let projectors = setting.projector_pairs();
    let mut counts = [0u64; 4];
    for (slot, proj) in projectors.iter().enumerate() {
        let prob = (proj * rho.matrix()).trace().re.max(0.0);
        let lambda = expected_pairs as f64 * prob * eff.pair_product(slot);
        counts[slot] = if lambda > 0.0 {
            let poisson = Poisson::new(lambda)
                .map_err(|e| Error::InvalidInput(format!("Poisson rate {lambda}: {e}")))?;
            poisson.sample(&mut rng) as u64
        } else {
            0
        };
    }
    Ok(CountRecord {
        setting,
        counts,
        expected_pairs,
        efficiencies: *eff,
        seed,
        rng: COUNT_RNG.to_string(),
    })
}

/// Efficiency-corrected rates with first-order Poisson standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedRates {
    pub rates: [f64; 4],
    pub errors: [f64; 4],
}

/// Undoes detector efficiencies: rate = n/(η_a η_b) with standard error
/// √n/(η_a η_b). Zero counts get the √1 error floor so that downstream
/// weights stay finite.
pub fn correct_efficiencies(rec: &CountRecord) -> Result<CorrectedRates> {
    rec.efficiencies.validate()?;
    let mut rates = [0.0; 4];
    let mut errors = [0.0; 4];
    for slot in 0..4 {
        let eta = rec.efficiencies.pair_product(slot);
        let n = rec.counts[slot] as f64;
        rates[slot] = n / eta;
        errors[slot] = n.sqrt().max(1.0) / eta;
    }
    Ok(CorrectedRates { rates, errors })
}
