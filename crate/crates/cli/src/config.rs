//! Experiment configuration: a TOML file (JSON accepted as an alternative)
//! describing the data source, the methods to run, and tuning settings.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use subsel::simgen::{spiky_strong, spiky_weak, CovarianceKind, CovarianceSpec, SimConfig};

/// Top-level experiment description. Either `sim` (synthetic campaigns) or
/// `input` (a CSV on disk) supplies the data, depending on the subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub sim: Option<SimTable>,
    #[serde(default)]
    pub input: Option<InputTable>,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    /// Master seed; every random stream in a run is derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub diagnose: Option<DiagnoseTable>,
}

fn default_replicates() -> usize {
    1
}

fn default_cv_folds() -> usize {
    10
}

impl ExperimentConfig {
    /// Checks the invariants needed to run methods: at least one replicate
    /// and at least one method.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        if self.methods.is_empty() {
            bail!("config must list at least one method");
        }
        for (i, m) in self.methods.iter().enumerate() {
            m.validate()
                .with_context(|| format!("method {} ({})", i, m.kind_name()))?;
        }
        Ok(())
    }
}

/// Synthetic-data description. Mirrors the generator's configuration but
/// lets the covariance be named by preset and inherits the master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTable {
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
    pub beta_min: f64,
    /// Optional sample-size override; the default is ceil(2 s ln p).
    #[serde(default)]
    pub n: Option<usize>,
    /// Covariance: a preset name or an explicit variant table.
    #[serde(default)]
    pub cov: Option<CovInput>,
}

/// Covariance input: either a preset name (`"identity"`, `"spiky_strong"`,
/// `"spiky_weak"`) or an explicit `{ variant = ..., ... }` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovInput {
    Preset(String),
    Explicit(CovarianceKind),
}

impl SimTable {
    /// Builds the generator configuration under the given master seed.
    pub fn resolve(&self, seed: u64) -> Result<SimConfig> {
        let cov = match &self.cov {
            None => CovarianceSpec::identity(self.p),
            Some(CovInput::Explicit(kind)) => CovarianceSpec {
                p: self.p,
                kind: kind.clone(),
            },
            Some(CovInput::Preset(name)) => match name.as_str() {
                "identity" => CovarianceSpec::identity(self.p),
                "spiky_strong" => spiky_strong(self.p),
                "spiky_weak" => spiky_weak(self.p),
                other => bail!(
                    "unknown covariance preset '{other}'; expected identity, spiky_strong, \
                     spiky_weak, or an explicit {{ variant = ... }} table"
                ),
            },
        };
        let config = SimConfig {
            p: self.p,
            s: self.s,
            sigma: self.sigma,
            beta_min: self.beta_min,
            n_override: self.n,
            cov,
            seed,
        };
        config.validate()?;
        Ok(config)
    }
}

/// CSV data source: path plus the name of the response column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputTable {
    pub path: PathBuf,
    pub response: String,
}

/// One method to run. `kind` selects the algorithm; the remaining keys are
/// its tuning constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    /// Iterative hard thresholding with projection size `pi`, expansion
    /// size `l`, and reported model size `s_hat`.
    Iht { pi: usize, l: usize, s_hat: usize },
    /// IHT screening followed by exhaustive search on its support.
    TwoStage { pi: usize, l: usize, s_hat: usize },
    /// Exhaustive best-subset search at a fixed model size.
    Bss { s_hat: usize },
    /// Marginal screening keeping the top `k` correlations.
    Sis { k: usize },
    /// L1-penalized least squares along a lambda grid.
    Lasso,
    /// Folded-concave (SCAD) penalized least squares.
    Scad {
        #[serde(default = "default_scad_a")]
        a: f64,
    },
}

fn default_scad_a() -> f64 {
    subsel::comparators::PenaltySpec::DEFAULT_A
}

impl MethodSpec {
    /// Short machine name used for output files and the CSV method column.
    pub fn kind_name(&self) -> &'static str {
        match self {
            MethodSpec::Iht { .. } => "iht",
            MethodSpec::TwoStage { .. } => "two_stage",
            MethodSpec::Bss { .. } => "bss",
            MethodSpec::Sis { .. } => "sis",
            MethodSpec::Lasso => "lasso",
            MethodSpec::Scad { .. } => "scad",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodSpec::Iht { pi, l, s_hat } | MethodSpec::TwoStage { pi, l, s_hat } => {
                if *pi == 0 || *l == 0 || *s_hat == 0 {
                    bail!("pi, l, and s_hat must all be positive");
                }
            }
            MethodSpec::Bss { s_hat } => {
                if *s_hat == 0 {
                    bail!("s_hat must be positive");
                }
            }
            MethodSpec::Sis { k } => {
                if *k == 0 {
                    bail!("k must be positive");
                }
            }
            MethodSpec::Lasso => {}
            MethodSpec::Scad { a } => {
                subsel::comparators::PenaltySpec::Scad { a: *a }.validate()?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Iht { pi, l, s_hat } => write!(f, "iht(pi={pi}, l={l}, s_hat={s_hat})"),
            MethodSpec::TwoStage { pi, l, s_hat } => {
                write!(f, "two_stage(pi={pi}, l={l}, s_hat={s_hat})")
            }
            MethodSpec::Bss { s_hat } => write!(f, "bss(s_hat={s_hat})"),
            MethodSpec::Sis { k } => write!(f, "sis(k={k})"),
            MethodSpec::Lasso => write!(f, "lasso"),
            MethodSpec::Scad { a } => write!(f, "scad(a={a})"),
        }
    }
}

/// Settings for the `diagnose` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnoseTable {
    /// Candidate model size for the separation margin; defaults to the
    /// true support size.
    #[serde(default)]
    pub s_hat: Option<usize>,
    /// Missed-fraction grid for the separation margin.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Noise-tail constant in the coefficient-floor threshold.
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Slack constant in the coefficient-floor threshold.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Projection size for the restricted condition number; defaults to
    /// min(2 s, p).
    #[serde(default)]
    pub pi: Option<usize>,
    /// Expansion size for the restricted condition number; defaults to s.
    #[serde(default)]
    pub l: Option<usize>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_xi() -> f64 {
    2.0
}

fn default_eta() -> f64 {
    0.5
}

impl Default for DiagnoseTable {
    fn default() -> Self {
        DiagnoseTable {
            s_hat: None,
            deltas: default_deltas(),
            xi: default_xi(),
            eta: default_eta(),
            pi: None,
            l: None,
        }
    }
}

/// Reads a config file. Files ending in `.json` are parsed as JSON; anything
/// else is tried as TOML first, then JSON.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("could not read config file {}", path.display()))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        return serde_json::from_str(&text)
            .with_context(|| format!("could not parse {} as JSON", path.display()));
    }
    match toml::from_str(&text) {
        Ok(cfg) => Ok(cfg),
        Err(toml_err) => serde_json::from_str(&text).map_err(|json_err| {
            anyhow::anyhow!(
                "could not parse {} as TOML ({toml_err}) or as JSON ({json_err})",
                path.display()
            )
        }),
    }
}
