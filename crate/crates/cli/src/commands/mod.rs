mod carleson;
mod construct;
mod contour;
mod embedding;
mod sequence;
mod system;
mod weight;

use carleson_kit::model_space::{MatrixEntry, MatrixFunction};
use serde::Deserialize;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::Report;

pub const COMMANDS: [&str; 7] = [
    "sequence",
    "carleson",
    "contour",
    "embedding",
    "system",
    "construct",
    "weight",
];

/// A finished run: the report and, for figure-producing commands, an SVG.
pub struct Outcome {
    pub report: Report,
    pub svg: Option<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, svg: None }
    }
}

pub fn run(command: &str, cfg: &RunConfig) -> CliResult<Outcome> {
    match command {
        "sequence" => sequence::run(cfg).map(Into::into),
        "carleson" => carleson::run(cfg).map(Into::into),
        "contour" => contour::run(cfg),
        "embedding" => embedding::run(cfg).map(Into::into),
        "system" => system::run(cfg).map(Into::into),
        "construct" => construct::run(cfg),
        "weight" => weight::run(cfg).map(Into::into),
        other => unreachable!("unknown command {other}"),
    }
}

/// A matrix function as written in input documents.
#[derive(Debug, Clone, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    /// row-major
    pub entries: Vec<MatrixEntry>,
}

impl MatrixSpec {
    pub fn build(&self) -> CliResult<MatrixFunction> {
        Ok(MatrixFunction::new(
            self.rows,
            self.cols,
            self.entries.clone(),
        )?)
    }
}
