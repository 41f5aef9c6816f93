//! TOML experiment configuration. Every section is optional; missing keys take
//! the defaults of the bundled sin/Gevrey-2 fixture and unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ultrajet::fncore::{default_x_grid, WeightFunction};
use ultrajet::jets::{CompactSet, JetPreset};
use ultrajet::seqcore::WeightSequence;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("invalid value for {key}: {message}")]
    Value { key: &'static str, message: String },
}

fn bad(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { key, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Power { alpha: f64 },
    PowerUnnormalized { alpha: f64 },
    LogPower { a: f64, b: f64 },
    GevreyDual { s: f64 },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Power { alpha: 0.5 }
    }
}

impl WeightSpec {
    pub fn build(&self) -> ultrajet::Result<WeightFunction> {
        match *self {
            WeightSpec::Power { alpha } => WeightFunction::power(alpha),
            WeightSpec::PowerUnnormalized { alpha } => WeightFunction::power_unnormalized(alpha),
            WeightSpec::LogPower { a, b } => WeightFunction::log_power(a, b),
            WeightSpec::GevreyDual { s } => WeightFunction::gevrey_dual(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    /// `M_k = k!^{1+s}`
    Gevrey { s: f64, k_max: usize },
    /// `mu_k = k^p`
    PowerQuotients { p: f64, k_max: usize },
    /// Explicit quotients starting with `mu_0 = 1`.
    Quotients { mu: Vec<f64> },
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec::Gevrey { s: 1.0, k_max: 4104 }
    }
}

impl SequenceSpec {
    /// Power-type presets carry their exact quotient tail; tables rely on the
    /// fitted one.
    pub fn build(&self) -> ultrajet::Result<WeightSequence> {
        match self {
            SequenceSpec::Gevrey { s, k_max } => with_power_tail(WeightSequence::gevrey(*s, *k_max)?, 1.0 + s),
            SequenceSpec::PowerQuotients { p, k_max } => {
                let mu: Vec<f64> = (0..=*k_max).map(|k| (k.max(1) as f64).powf(*p)).collect();
                with_power_tail(WeightSequence::from_mu(format!("k^{p}"), &mu)?, *p)
            }
            SequenceSpec::Quotients { mu } => WeightSequence::from_mu("table", mu),
        }
    }

    pub fn fitted_tail(&self) -> bool {
        matches!(self, SequenceSpec::Quotients { .. })
    }
}

fn with_power_tail(seq: WeightSequence, p: f64) -> ultrajet::Result<WeightSequence> {
    if p > 1.0 {
        let k = seq.k_max();
        seq.with_tail_remainder(power_tail_sum(p, k))
    } else {
        Ok(seq)
    }
}

/// `sum_{j > k} j^-p` for `p > 1` by Euler-Maclaurin from `k + 1`; the
/// first dropped term is `p(p+1)(p+2)(p+3)(p+4) (k+1)^{-p-5} / 30240`.
pub fn power_tail_sum(p: f64, k: usize) -> f64 {
    let a = (k + 1) as f64;
    a.powf(1.0 - p) / (p - 1.0) + 0.5 * a.powf(-p) + p * a.powf(-p - 1.0) / 12.0
        - p * (p + 1.0) * (p + 2.0) * a.powf(-p - 3.0) / 720.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixSpec {
    pub x_grid: Vec<f64>,
    pub k_max: usize,
    /// Base row of the index chain.
    pub x: f64,
}

impl Default for MatrixSpec {
    fn default() -> Self {
        MatrixSpec { x_grid: default_x_grid(), k_max: 128, x: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Points { points: Vec<Vec<f64>> },
    Interval { lo: f64, hi: f64, n: usize },
    Box { lo: [f64; 2], hi: [f64; 2], n: usize },
}

impl Default for SetSpec {
    fn default() -> Self {
        SetSpec::Points { points: vec![vec![-1.0], vec![1.0]] }
    }
}

impl SetSpec {
    pub fn build(&self) -> ultrajet::Result<CompactSet> {
        match self {
            SetSpec::Points { points } => CompactSet::new(points.clone()),
            SetSpec::Interval { lo, hi, n } => CompactSet::sampled_interval(*lo, *hi, *n),
            SetSpec::Box { lo, hi, n } => CompactSet::sampled_box(*lo, *hi, *n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JetSpec {
    pub function: JetPreset,
    pub a_max: usize,
    /// Scale of the certificate; the extension uses `L = guard * rho`.
    pub rho: f64,
    pub cert_order: usize,
}

impl Default for JetSpec {
    fn default() -> Self {
        JetSpec { function: JetPreset::sin(1.0, 0.0), a_max: 8192, rho: 1.0 / 128.0, cert_order: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubesSpec {
    pub box_lo: Vec<f64>,
    pub box_side: f64,
    pub depth: u32,
    pub min_feature: Option<f64>,
    pub samples_per_cube: usize,
}

impl Default for CubesSpec {
    fn default() -> Self {
        CubesSpec { box_lo: vec![-2.0], box_side: 4.0, depth: 18, min_feature: None, samples_per_cube: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PouSpec {
    /// Bump radii follow `M_k = k!^{1 + bump_s}`.
    pub bump_s: f64,
    pub delta: Option<f64>,
    pub order_cap: usize,
    /// Total grid points for the sum-to-one check.
    pub check_points: usize,
}

impl Default for PouSpec {
    fn default() -> Self {
        PouSpec { bump_s: 0.05, delta: None, order_cap: 8, check_points: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtendSpec {
    pub mode: Mode,
    pub guard: f64,
    pub orders: usize,
    pub approach_scales: Vec<f64>,
    pub samples_per_scale: usize,
    pub growth_orders: usize,
    pub growth_grid: usize,
    pub fd_points: usize,
    pub fd_orders: usize,
    /// Points per axis of the exported evaluation grid.
    pub eval_points: usize,
    pub cutoff: bool,
    pub cutoff_r0: f64,
}

impl Default for ExtendSpec {
    fn default() -> Self {
        ExtendSpec {
            mode: Mode::Single,
            guard: 64.0,
            orders: 4,
            approach_scales: (3..=10).map(|i| 2f64.powi(-i)).collect(),
            samples_per_scale: 64,
            growth_orders: 8,
            growth_grid: 2001,
            fd_points: 100,
            fd_orders: 4,
            eval_points: 801,
            cutoff: false,
            cutoff_r0: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Seed for every sampled point set.
    pub seed: u64,
    pub weight: WeightSpec,
    /// Candidate heir; defaults to `weight`.
    pub sigma: Option<WeightSpec>,
    pub sequence: SequenceSpec,
    pub matrix: MatrixSpec,
    pub set: SetSpec,
    pub jet: JetSpec,
    pub cubes: CubesSpec,
    pub pou: PouSpec,
    pub extend: ExtendSpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 7,
            weight: WeightSpec::default(),
            sigma: None,
            sequence: SequenceSpec::default(),
            matrix: MatrixSpec::default(),
            set: SetSpec::default(),
            jet: JetSpec::default(),
            cubes: CubesSpec::default(),
            pou: PouSpec::default(),
            extend: ExtendSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(cfg.schema_version));
        }
        if cfg.sigma.is_none() {
            cfg.sigma = Some(cfg.weight.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let dim = match &self.set {
            SetSpec::Points { points } => points.first().map_or(0, Vec::len),
            SetSpec::Interval { .. } => 1,
            SetSpec::Box { .. } => 2,
        };
        if !(1..=2).contains(&dim) {
            return Err(bad("set", "points must be one- or two-dimensional"));
        }
        if self.cubes.box_lo.len() != dim {
            return Err(bad("cubes.box_lo", format!("needs {dim} coordinates")));
        }
        if !(self.cubes.box_side > 0.0) {
            return Err(bad("cubes.box_side", "must be positive"));
        }
        if self.cubes.depth > 40 {
            return Err(bad("cubes.depth", "at most 40"));
        }
        if self.pou.order_cap + 4 > ultrajet::pou::MAX_STAGES {
            return Err(bad("pou.order_cap", format!("at most {}", ultrajet::pou::MAX_STAGES - 4)));
        }
        let cap = self.pou.order_cap;
        for (key, v) in [
            ("extend.orders", self.extend.orders),
            ("extend.growth_orders", self.extend.growth_orders),
            ("extend.fd_orders", self.extend.fd_orders),
        ] {
            if v > cap {
                return Err(bad(key, format!("{v} exceeds pou.order_cap = {cap}")));
            }
        }
        if !(self.jet.rho > 0.0) || !(self.extend.guard > 0.0) {
            return Err(bad("jet.rho / extend.guard", "must be positive"));
        }
        if self.extend.approach_scales.iter().any(|d| !(*d > 0.0)) {
            return Err(bad("extend.approach_scales", "must be positive"));
        }
        if self.extend.growth_grid < 2 || self.extend.eval_points < 2 {
            return Err(bad("extend.growth_grid / extend.eval_points", "need at least 2 points"));
        }
        if self.jet.cert_order > self.jet.a_max {
            return Err(bad("jet.cert_order", "exceeds jet.a_max"));
        }
        Ok(())
    }
}
