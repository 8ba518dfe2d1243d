//! Run configuration: a TOML key-value file overridden by flags.

use std::path::Path;

use bspf::bench::RmaeVariant;
use bspf::inference::{Resampling, SamplerConfig};
use bspf::process::CutMode;
use serde::{Deserialize, Serialize};

use crate::cli::TrainArgs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub sampler: SamplerConfig,
    /// Label column by name or zero-based index; last column when unset.
    pub label_col: Option<String>,
    pub rmae_variant: RmaeVariant,
    pub folds: usize,
    pub runs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sampler: SamplerConfig::default(),
            label_col: None,
            rmae_variant: RmaeVariant::SqrtMae,
            folds: 5,
            runs: 10,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text).map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Parses a TOML table of keys; unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let known = serde_json::to_value(RunConfig::default()).map_err(|e| e.to_string())?;
        let known = known.as_object().expect("config serializes to an object");
        let unknown: Vec<&str> = table.keys().map(String::as_str).filter(|k| !known.contains_key(*k)).collect();
        if !unknown.is_empty() {
            return Err(format!("unknown keys: {}", unknown.join(", ")));
        }
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// File (if any) first, then every flag that was given.
    pub fn resolve(args: &TrainArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        let s = &mut cfg.sampler;
        if let Some(v) = args.trees {
            s.trees = v;
        }
        if let Some(v) = args.budget {
            s.budget = v;
        }
        if let Some(v) = args.particles {
            s.particles = v;
        }
        if let Some(v) = args.segments {
            s.segments = v;
        }
        if let Some(v) = args.iters {
            s.iterations = v;
        }
        if args.burnin.is_some() {
            s.burnin = args.burnin;
        }
        if let Some(v) = args.seed {
            s.seed = v;
        }
        if let Some(v) = args.mode {
            s.mode = v.into();
        }
        if let Some(v) = &args.resampling {
            s.resampling = v.parse::<Resampling>()?;
        }
        if let Some(v) = &args.label_col {
            cfg.label_col = Some(v.clone());
        }
        if let Some(v) = args.rmae_variant {
            cfg.rmae_variant = v.into();
        }
        if let Some(v) = args.folds {
            cfg.folds = v;
        }
        if let Some(v) = args.runs {
            cfg.runs = v;
        }
        cfg.sampler.validate()?;
        Ok(cfg)
    }

    pub fn label_column(&self) -> bspf::bench::LabelColumn {
        match &self.label_col {
            Some(s) => s.parse().expect("label column parsing is infallible"),
            None => Default::default(),
        }
    }
}

impl From<crate::cli::ModeArg> for CutMode {
    fn from(m: crate::cli::ModeArg) -> Self {
        match m {
            crate::cli::ModeArg::Bsp => CutMode::Bsp,
            crate::cli::ModeArg::Axis => CutMode::AxisAligned,
        }
    }
}

impl From<crate::cli::RmaeArg> for RmaeVariant {
    fn from(v: crate::cli::RmaeArg) -> Self {
        match v {
            crate::cli::RmaeArg::SqrtMae => RmaeVariant::SqrtMae,
            crate::cli::RmaeArg::Mae => RmaeVariant::Mae,
        }
    }
}
