//! Scenario configuration.
//!
//! A config is a TOML document. Every table rejects unknown keys, and every key has a
//! default, so an empty file describes the reference one-dimensional scenario.

use std::path::{Path, PathBuf};

use landau_core::dispersion::{PenroseRegion, ScanOptions};
use landau_core::foundations::{InitialDataFamily, ModeAmplitude, Model, PhysicalParams, Profile, Wavevector};
use landau_core::kernels::maxwellian_normalization;
use landau_core::kinetic::{FreeStreaming, KineticSettings, XiGrid};
use landau_core::verify::{Criterion, CrossValidation, VerifySettings};
use landau_core::volterra::TimeGrid;
use landau_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Seed for randomized probe placement.
    pub seed: u64,
    pub output: OutputSection,
    pub params: ParamsSection,
    pub family: FamilySection,
    pub time: TimeSection,
    pub xi: XiSection,
    pub penrose: PenroseSection,
    pub evolve: EvolveSection,
    pub analysis: AnalysisSection,
    pub verify: VerifySection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Run directory; `--out` takes precedence.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub d: usize,
    pub model: Model,
    pub epsilon: f64,
    pub e0: f64,
    pub ell: f64,
    pub n: u32,
    /// Maxwellian normalization in the kernels; defaults to `(2π)^{-d/2}`.
    pub c_m: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            d: 1,
            model: Model::LinearBoltzmann,
            epsilon: 0.05,
            e0: 1.0,
            ell: 1.0,
            n: 4,
            c_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSection {
    /// Polynomial coefficients as real numbers, ascending order.
    GaussianHermite { poly: Vec<f64>, c: f64 },
    FiniteSobolevTail { n_decl: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub k: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySection {
    pub profile: ProfileSection,
    pub modes: Vec<ModeSection>,
}

impl Default for FamilySection {
    fn default() -> Self {
        FamilySection {
            profile: ProfileSection::GaussianHermite { poly: vec![1.0], c: 0.5 },
            modes: vec![ModeSection {
                k: vec![1],
                re: 1.0,
                im: 0.0,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    pub dt: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { t_end: 40.0, dt: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XiSection {
    pub dxi: f64,
    pub extent: f64,
    pub probes: Vec<f64>,
    /// Extra probes drawn uniformly from `[0, extent/2]` with the config seed.
    pub random_probes: usize,
}

impl Default for XiSection {
    fn default() -> Self {
        XiSection {
            dxi: 0.05,
            extent: 60.0,
            probes: vec![0.5, 1.0, 2.0, 4.0],
            random_probes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenroseSection {
    /// Empty selects `params.model`.
    pub models: Vec<Model>,
    pub epsilons: Vec<f64>,
    pub lambda_max: f64,
    pub zeta_max: f64,
    pub k_max: u32,
    pub lambda_step: f64,
    pub kappa_target: f64,
    /// Modes drawn as margin maps.
    pub map_modes: Vec<Vec<i64>>,
    pub map_resolution: [usize; 2],
}

impl Default for PenroseSection {
    fn default() -> Self {
        let r = PenroseRegion::default();
        let s = ScanOptions::default();
        PenroseSection {
            models: Vec::new(),
            epsilons: vec![0.0, 0.02, 0.05, 0.1],
            lambda_max: r.lambda_max,
            zeta_max: r.zeta_max,
            k_max: r.k_max,
            lambda_step: s.lambda_step,
            kappa_target: s.kappa_target,
            map_modes: vec![vec![1]],
            map_resolution: [81, 41],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Volterra,
    Kinetic,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub solver: Solver,
    pub free_streaming: FreeStreaming,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            solver: Solver::Both,
            free_streaming: FreeStreaming::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub fit_window: [f64; 2],
    /// Power of `⟨t⟩` in the envelope weight.
    pub weight_power: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            fit_window: [5.0, 40.0],
            weight_power: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Criterion numbers 1 to 10.
    pub criteria: Vec<u32>,
    pub crossval: CrossValidation,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            criteria: (1..=10).collect(),
            crossval: CrossValidation::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, so formatting and key order do not matter.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canon))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.physical()?;
        self.family()?;
        let c_m = self.c_m();
        if !(c_m >= 0.0 && c_m.is_finite()) {
            return Err(invalid(format!("params.c_m = {c_m} must be finite and >= 0")));
        }
        for m in &self.family.modes {
            if m.k.len() != p.d {
                return Err(invalid(format!("mode {:?} does not have dimension d = {}", m.k, p.d)));
            }
        }
        self.time_grid()?;
        let [t0, t1] = self.analysis.fit_window;
        if !(0.0 <= t0 && t0 < t1) {
            return Err(invalid(format!("analysis.fit_window [{t0}, {t1}] is empty")));
        }
        if !(self.analysis.weight_power >= 0.0) {
            return Err(invalid("analysis.weight_power must be >= 0"));
        }
        XiGrid::new(self.xi.dxi, self.xi.extent).map_err(|e| invalid(format!("xi: {e}")))?;
        for &x in &self.xi.probes {
            if !(x.abs() <= self.xi.extent) {
                return Err(invalid(format!("probe ξ = {x} lies outside the ξ grid")));
            }
        }
        self.region().validate().map_err(|e| invalid(format!("penrose: {e}")))?;
        if !(self.penrose.lambda_step > 0.0) {
            return Err(invalid("penrose.lambda_step must be > 0"));
        }
        for &e in &self.penrose.epsilons {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(invalid(format!("penrose epsilon {e} must be finite and >= 0")));
            }
        }
        for k in &self.penrose.map_modes {
            let w = Wavevector::new(k).map_err(|e| invalid(format!("penrose.map_modes: {e}")))?;
            if w.dim() != p.d || w.is_zero() || w.norm() > self.penrose.k_max as f64 {
                return Err(invalid(format!("penrose map mode {k:?} outside 0 < |k| <= k_max in d = {}", p.d)));
            }
        }
        if self.penrose.map_resolution.iter().any(|&n| n < 2) {
            return Err(invalid("penrose.map_resolution entries must be >= 2"));
        }
        for &c in &self.verify.criteria {
            if Criterion::from_number(c).is_none() {
                return Err(invalid(format!("unknown criterion {c}, expected 1 to 10")));
            }
        }
        let cv = &self.verify.crossval;
        if !(cv.dt > 0.0 && cv.dxi > 0.0 && cv.xi_extent > cv.dxi && cv.t_end > cv.dt) {
            return Err(invalid("verify.crossval grid is empty"));
        }
        Ok(())
    }

    pub fn physical(&self) -> Result<PhysicalParams, CliError> {
        let s = &self.params;
        PhysicalParams::new(s.d, s.model, s.epsilon, s.e0, s.ell, s.n).map_err(|e| invalid(format!("params: {e}")))
    }

    pub fn c_m(&self) -> f64 {
        self.params.c_m.unwrap_or_else(|| maxwellian_normalization(self.params.d))
    }

    pub fn family(&self) -> Result<InitialDataFamily, CliError> {
        let profile = match &self.family.profile {
            ProfileSection::GaussianHermite { poly, c } => Profile::GaussianHermite {
                poly: poly.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
                c: *c,
            },
            ProfileSection::FiniteSobolevTail { n_decl } => Profile::FiniteSobolevTail { n_decl: *n_decl },
        };
        let modes = self
            .family
            .modes
            .iter()
            .map(|m| {
                Ok(ModeAmplitude {
                    k: Wavevector::new(&m.k)?,
                    amplitude: Complex64::new(m.re, m.im),
                })
            })
            .collect::<landau_core::Result<Vec<_>>>()
            .map_err(|e| invalid(format!("family: {e}")))?;
        InitialDataFamily::new(profile, modes).map_err(|e| invalid(format!("family: {e}")))
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::with_step(self.time.t_end, self.time.dt).map_err(|e| invalid(format!("time: {e}")))
    }

    pub fn region(&self) -> PenroseRegion {
        PenroseRegion {
            lambda_max: self.penrose.lambda_max,
            zeta_max: self.penrose.zeta_max,
            k_max: self.penrose.k_max,
        }
    }

    pub fn scan(&self) -> ScanOptions {
        ScanOptions {
            lambda_step: self.penrose.lambda_step,
            kappa_target: self.penrose.kappa_target,
            ..ScanOptions::default()
        }
    }

    pub fn penrose_models(&self) -> Vec<Model> {
        if self.penrose.models.is_empty() {
            vec![self.params.model]
        } else {
            self.penrose.models.clone()
        }
    }

    /// Configured probes followed by the seeded random ones.
    pub fn probes(&self) -> Vec<f64> {
        let mut out = self.xi.probes.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.xi.random_probes {
            out.push(rng.gen_range(0.0..=0.5 * self.xi.extent));
        }
        out
    }

    pub fn kinetic(&self) -> KineticSettings {
        let mut s = KineticSettings::new(self.time.dt, self.time.t_end, self.xi.dxi, self.xi.extent);
        s.c_m = self.c_m();
        s.free_streaming = self.evolve.free_streaming;
        s.probes = self.probes();
        s
    }

    pub fn criteria(&self) -> Vec<Criterion> {
        self.verify.criteria.iter().filter_map(|&c| Criterion::from_number(c)).collect()
    }

    pub fn verify_settings(&self) -> VerifySettings {
        VerifySettings {
            c_m: self.c_m(),
            region: self.region(),
            scan: self.scan(),
            crossval: self.verify.crossval,
        }
    }
}
