//! Experiment configuration (TOML). Every block except `experiment` is optional; unknown keys are
//! rejected with the path to the offending key.

use ebl_core::direct::StabilityRule;
use ebl_core::eos::EosModel;
use ebl_core::ground_state::{build_recipe_initial, GroundState, Poly};
use ebl_core::wkb::{LayerSetup, ProfileConfig, SweepGrid};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GroundState,
    Layer,
    Assemble,
    ResidualSweep,
    Norms,
    Stability,
    All,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::GroundState => "ground-state",
            Experiment::Layer => "layer",
            Experiment::Assemble => "assemble",
            Experiment::ResidualSweep => "residual-sweep",
            Experiment::Norms => "norms",
            Experiment::Stability => "stability",
            Experiment::All => "all",
        }
    }
}

fn eps_range(a: i32, b: i32) -> Vec<f64> {
    (a..=b).map(|k| 2f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Truncation order of the expansion used by `layer` and `assemble`.
    #[serde(default = "one")]
    pub order: usize,
    #[serde(default)]
    pub eos: EosBlock,
    #[serde(default)]
    pub ground_state: GroundStateBlock,
    #[serde(default)]
    pub layer: LayerSetup,
    #[serde(default)]
    pub profiles: ProfileConfig,
    #[serde(default)]
    pub assemble: AssembleBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub norms: NormsBlock,
    #[serde(default)]
    pub stability: StabilityBlock,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosBlock {
    pub gamma: f64,
}

impl Default for EosBlock {
    fn default() -> Self {
        EosBlock { gamma: 1.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundKindName {
    Shear,
    Accelerated,
    Recipe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateBlock {
    pub kind: GroundKindName,
    pub p0: f64,
    pub s0: f64,
    pub period: f64,
    /// Wall acceleration for `accelerated`.
    pub accel: f64,
    /// Coefficients (constant first) of a_init and F for `recipe`.
    pub recipe_a: Vec<f64>,
    pub recipe_f: Vec<f64>,
    pub recipe_width: f64,
}

impl Default for GroundStateBlock {
    fn default() -> Self {
        GroundStateBlock { kind: GroundKindName::Shear, p0: 1.0, s0: 0.0, period: TAU, accel: 1.0, recipe_a: vec![0.0, 0.0, 1.0], recipe_f: vec![0.0, 1.0], recipe_width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleBlock {
    pub eps: f64,
}

impl Default for AssembleBlock {
    fn default() -> Self {
        AssembleBlock { eps: 0.0625 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub order: usize,
    pub eps: Vec<f64>,
    pub refinement_check: bool,
    pub grid: SweepGrid,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock { order: 0, eps: eps_range(3, 7), refinement_check: true, grid: SweepGrid::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsBlock {
    pub eps: Vec<f64>,
    pub m: usize,
    pub lambda: f64,
    pub horizon: f64,
    /// Strip height and dx2 = eps / refine for the layer family.
    pub height: f64,
    pub refine: f64,
    pub nt: usize,
    pub n1: usize,
    /// Resolutions of the Moser and Gagliardo-Nirenberg test families.
    pub levels: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// eps of the single-member norm report.
    pub report_eps: f64,
    pub report_m: usize,
}

impl Default for NormsBlock {
    fn default() -> Self {
        NormsBlock {
            eps: eps_range(2, 7),
            m: 8,
            lambda: 8.0,
            horizon: 1.0,
            height: 3.0,
            refine: 8.0,
            nt: 17,
            n1: 17,
            levels: vec![32, 64],
            lambdas: vec![1.0, 2.0, 4.0],
            report_eps: 0.0625,
            report_m: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityBlock {
    pub order: usize,
    /// x1 resolution of the profiles and the direct solve.
    pub n1: usize,
    pub eps: Vec<f64>,
    pub refinement_check: bool,
    pub rule: StabilityRule,
    pub sod_n1: usize,
    pub shear_steps: usize,
}

impl Default for StabilityBlock {
    fn default() -> Self {
        StabilityBlock { order: 1, n1: 64, eps: eps_range(3, 6), refinement_check: true, rule: StabilityRule::default(), sod_n1: 400, shear_steps: 50 }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn check(ok: bool, key: &str, msg: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(format!("{key}: {msg}")))
    }
}

fn eps_list(v: &[f64], key: &str, min_len: usize) -> Result<(), ConfigError> {
    check(v.len() >= min_len, key, &format!("needs at least {min_len} values"))?;
    check(v.iter().all(|&e| e > 0.0 && e <= 1.0), key, "values must lie in (0, 1]")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let de = toml::Deserializer::new(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.message().to_string();
            if path == "." || path.is_empty() {
                ConfigError(msg)
            } else {
                ConfigError(format!("{path}: {msg}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        ExperimentConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.eos.gamma > 1.0, "eos.gamma", "must exceed 1")?;
        check(self.order <= 1, "order", "only 0 and 1 are supported")?;
        check(self.sweep.order <= 1, "sweep.order", "only 0 and 1 are supported")?;
        check(self.stability.order <= 1, "stability.order", "only 0 and 1 are supported")?;
        check(self.ground_state.period > 0.0, "ground_state.period", "must be positive")?;
        check(self.ground_state.p0 > 0.0, "ground_state.p0", "must be positive")?;
        eps_list(&self.sweep.eps, "sweep.eps", 3)?;
        eps_list(&self.norms.eps, "norms.eps", 2)?;
        eps_list(&self.stability.eps, "stability.eps", 2)?;
        check(self.assemble.eps > 0.0 && self.assemble.eps <= 1.0, "assemble.eps", "must lie in (0, 1]")?;
        check(self.norms.report_eps > 0.0 && self.norms.report_eps <= 1.0, "norms.report_eps", "must lie in (0, 1]")?;
        check(!self.norms.levels.is_empty() && !self.norms.lambdas.is_empty(), "norms.levels", "levels and lambdas must be nonempty")?;
        check(self.stability.n1 >= 8 && self.stability.n1.is_multiple_of(4), "stability.n1", "must be a multiple of 4, at least 8")?;
        Ok(())
    }

    /// Halves resolutions for smoke runs. The nt and n1 of the embedding family stay put since
    /// the weighted norms need at least m + 3 nodes per axis.
    pub fn quick(&mut self) {
        let p = &mut self.profiles;
        p.n1 = (p.n1 / 2).max(16);
        p.n2 = (p.n2 / 2).max(4);
        p.intervals = (p.intervals / 2).max(48);
        self.sweep.grid.refine = (self.sweep.grid.refine / 2.0).max(8.0);
        let n = &mut self.norms;
        n.refine = (n.refine / 2.0).max(4.0);
        n.levels = n.levels.iter().map(|&l| (l / 2).max(8)).collect();
        let s = &mut self.stability;
        s.n1 = (s.n1 / 2).max(16);
        s.sod_n1 = (s.sod_n1 / 2).max(50);
    }

    pub fn eos(&self) -> ebl_core::Result<EosModel> {
        EosModel::new(self.eos.gamma)
    }

    pub fn ground_state(&self) -> ebl_core::Result<GroundState> {
        let g = &self.ground_state;
        Ok(match g.kind {
            GroundKindName::Shear => GroundState::shear(g.p0, g.s0, g.period),
            GroundKindName::Accelerated => GroundState::accelerated(g.accel, g.p0, g.s0, g.period),
            GroundKindName::Recipe => {
                let h = build_recipe_initial(Poly::new(g.recipe_a.clone()), Poly::new(g.recipe_f.clone()))?;
                GroundState::from_initial(h, g.p0, g.s0, g.period, g.recipe_width)
            }
        })
    }
}
