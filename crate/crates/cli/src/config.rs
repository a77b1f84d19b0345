use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aniso_taylor::{ExponentProfile, ModelSpec, TaylorModel};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA: &str = "aniso-taylor.config";
pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub version: u32,
    pub model: ModelSpec,
    pub profile: ProfileConfig,
    pub targets: Targets,
    #[serde(default)]
    pub verification: Verification,
    #[serde(default)]
    pub output: Outputs,
    #[serde(default = "default_max_cells")]
    pub max_cells: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    /// `"inf"` or a number `>= 1`.
    pub p: serde_json::Value,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    pub eps: Vec<f64>,
    pub m: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verification {
    pub samples_per_cell: usize,
    pub seed: u64,
    /// Degree up to which `||(rho^{-nu})_{nu != 0}||_q` is enumerated.
    pub truncation_degree: u32,
}

impl Default for Verification {
    fn default() -> Self {
        Verification {
            samples_per_cell: 10_000,
            seed: 0,
            truncation_degree: 30,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

fn default_max_cells() -> u64 {
    aniso_taylor::surrogate::DEFAULT_MAX_CELLS
}

/// Command-line values that replace config fields when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub p: Option<String>,
    pub q: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub m: Option<Vec<u64>>,
    pub samples_per_cell: Option<usize>,
    pub seed: Option<u64>,
    pub truncation_degree: Option<u32>,
    pub max_cells: Option<u64>,
    pub library: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

/// Config with its model and profile already validated.
pub struct Resolved {
    pub config: RunConfig,
    pub model: TaylorModel,
    pub profile: ExponentProfile,
}

pub fn parse_p(v: &serde_json::Value) -> Result<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().context("p is not a finite number"),
        serde_json::Value::String(s) if matches!(s.as_str(), "inf" | "infinity") => {
            Ok(f64::INFINITY)
        }
        other => bail!("p must be a number or \"inf\", got {other}"),
    }
}

fn p_value(text: &str) -> Result<serde_json::Value> {
    if matches!(text, "inf" | "infinity") {
        return Ok(serde_json::Value::String("inf".into()));
    }
    let p: f64 = text.parse().with_context(|| format!("invalid p {text:?}"))?;
    Ok(serde_json::json!(p))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if config.schema != CONFIG_SCHEMA || config.version != CONFIG_VERSION {
            bail!(
                "config {} has schema {:?} version {}, expected {CONFIG_SCHEMA:?} version {CONFIG_VERSION}",
                path.display(),
                config.schema,
                config.version
            );
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(p) = &o.p {
            self.profile.p = p_value(p)?;
        }
        if let Some(q) = o.q {
            self.profile.q = q;
        }
        if let Some(eps) = &o.eps {
            self.targets.eps = eps.clone();
        }
        if let Some(m) = &o.m {
            self.targets.m = m.clone();
        }
        if let Some(s) = o.samples_per_cell {
            self.verification.samples_per_cell = s;
        }
        if let Some(s) = o.seed {
            self.verification.seed = s;
        }
        if let Some(d) = o.truncation_degree {
            self.verification.truncation_degree = d;
        }
        if let Some(n) = o.max_cells {
            self.max_cells = n;
        }
        if o.library.is_some() {
            self.output.library = o.library.clone();
        }
        if o.report.is_some() {
            self.output.report = o.report.clone();
        }
        if o.table.is_some() {
            self.output.table = o.table.clone();
        }
        Ok(())
    }

    /// Checks every precondition before any work starts.
    pub fn resolve(self) -> Result<Resolved> {
        let model = TaylorModel::from_spec(self.model.clone())?;
        let profile = ExponentProfile::new(parse_p(&self.profile.p)?, self.profile.q)?;
        if self.targets.eps.is_empty() || self.targets.m.is_empty() {
            bail!("targets need at least one eps and one m");
        }
        if let Some(e) = self.targets.eps.iter().find(|e| !(**e > 0.0)) {
            bail!("hypothesis violated: eps > 0 violated (eps = {e})");
        }
        if self.verification.samples_per_cell == 0 {
            bail!("samples_per_cell must be positive");
        }
        Ok(Resolved {
            config: self,
            model,
            profile,
        })
    }
}
