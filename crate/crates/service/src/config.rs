use std::path::{Path, PathBuf};

use corrlearn::{GenConfig, PlannerConfig};
use serde::{Deserialize, Serialize};

/// Service settings, read from a TOML file and overridable by flags.
///
/// ```toml
/// port = 8080
/// trace_dir = "traces"
///
/// [planner]
/// horizon = 40
/// smooth_mu = 0.5
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Directory served at `/` for the browser bundle.
    pub static_dir: Option<PathBuf>,
    /// Finished sessions write `<id>.jsonl` here.
    pub trace_dir: Option<PathBuf>,
    pub planner: PlannerConfig,
    pub generation: GenerationConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            static_dir: None,
            trace_dir: None,
            planner: PlannerConfig::default(),
            generation: GenerationConfig::default(),
        }
    }
}

/// Random environment settings for seed-based sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub workspace: [f64; 2],
    pub radius: f64,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub max_rejections: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let g = GenConfig::default();
        Self {
            workspace: g.workspace,
            radius: g.radius,
            start: g.start,
            goal: g.goal,
            max_rejections: g.max_rejections,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.planner.validate()?;
        Ok(())
    }

    pub fn gen_config(&self) -> GenConfig {
        let g = &self.generation;
        GenConfig {
            workspace: g.workspace,
            radius: g.radius,
            start: g.start.clone(),
            goal: g.goal.clone(),
            max_rejections: g.max_rejections,
            planner: self.planner.clone(),
        }
    }
}
