use std::path::{Path, PathBuf};

use carleson_kit::contour::ContourConstants;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Flags shared by every subcommand; they override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON input document
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// grid depth (dyadic depth, grid layers or refinement level, per command)
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG figure path
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// Path of the input document, relative to the config file.
    #[serde(default, skip_serializing)]
    pub input: Option<PathBuf>,
    /// Inline input document, used when no path is given.
    #[serde(default, skip_serializing)]
    pub data: Option<serde_json::Value>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub depth: Option<u32>,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub svg: Option<PathBuf>,
    pub constants: Option<ContourConstants>,
    pub cv_half_delta: Option<f64>,
    pub delta: Option<f64>,
    pub section_size: Option<usize>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Merge a config file (if any) with command-line flags.
    pub fn resolve(command: &str, flags: &Flags) -> CliResult<Self> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let mut cfg: RunConfig = read_json(path)?;
                let base = path.parent().unwrap_or(Path::new("."));
                for p in [&mut cfg.input, &mut cfg.out, &mut cfg.svg]
                    .into_iter()
                    .flatten()
                {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(c) = &cfg.command {
            if c != command {
                return Err(CliError::Parameter(format!(
                    "config is for `{c}`, not `{command}`"
                )));
            }
        }
        cfg.command = Some(command.to_string());
        macro_rules! take {
            ($($f:ident),*) => {$(
                if flags.$f.is_some() {
                    cfg.$f = flags.$f.clone();
                }
            )*};
        }
        take!(input, epsilon, alpha, depth, seed, out, svg);
        if cfg.input.is_some() {
            cfg.data = None;
        }
        Ok(cfg)
    }

    pub fn document<T: serde::de::DeserializeOwned>(&self) -> CliResult<T> {
        match (&self.input, &self.data) {
            (Some(path), _) => read_json(path),
            (None, Some(v)) => {
                serde_json::from_value(v.clone()).map_err(|e| CliError::Parse(e.to_string()))
            }
            (None, None) => Err(CliError::Parameter(
                "no input: pass --input or set `data` in the config".into(),
            )),
        }
    }

    pub fn epsilon_or(&self, default: f64) -> CliResult<f64> {
        let e = self.epsilon.unwrap_or(default);
        if e > 0.0 && e < 1.0 {
            Ok(e)
        } else {
            Err(CliError::Parameter(format!(
                "epsilon = {e} must lie in (0, 1)"
            )))
        }
    }

    pub fn alpha_or(&self, default: f64) -> CliResult<f64> {
        let a = self.alpha.unwrap_or(default);
        if a > 0.0 && a < 0.1 {
            Ok(a)
        } else {
            Err(CliError::Parameter(format!(
                "alpha = {a} must lie in (0, 0.1)"
            )))
        }
    }

    pub fn depth_in(&self, default: u32, max: u32) -> CliResult<u32> {
        let d = self.depth.unwrap_or(default);
        if d <= max {
            Ok(d)
        } else {
            Err(CliError::Parameter(format!("depth = {d} exceeds {max}")))
        }
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| {
            CliError::Parameter("this command is randomized and needs --seed".into())
        })
    }
}
