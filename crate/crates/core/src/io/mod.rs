//! Job files, exporters and the command-line front end.

mod cli;
mod export;

pub use cli::run_cli;
pub use export::{export_json, export_obj, export_svg};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driver::RunConfig;
use crate::keypoints::{BoundingBox, BoxError};
use crate::poly::{CurveSystem, SystemError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Input(String),
    #[error("{what} requires {expected}, got {got} variables")]
    Dimension { what: &'static str, expected: &'static str, got: usize },
    #[error("projection index {index} out of range for {nvars} variables")]
    Projection { index: usize, nvars: usize },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("malformed job file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A curve-tracing job: the system, its variables, the box and the run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub system: Vec<String>,
    pub variables: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub config: RunConfig,
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let job: JobSpec = serde_json::from_str(text)?;
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<(), IoError> {
        if self.variables.len() < 2 {
            return Err(IoError::Input("at least two variables are required".into()));
        }
        if self.system.len() + 1 != self.variables.len() {
            return Err(IoError::Input(format!(
                "{} variables need {} polynomials, got {}",
                self.variables.len(),
                self.variables.len() - 1,
                self.system.len()
            )));
        }
        if self.bounds.len() != self.variables.len() {
            return Err(IoError::Input(format!(
                "box has {} intervals for {} variables",
                self.bounds.len(),
                self.variables.len()
            )));
        }
        Ok(())
    }

    pub fn curve_system(&self) -> Result<CurveSystem, IoError> {
        let vars: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        Ok(CurveSystem::parse(&self.system, &vars)?)
    }

    pub fn bounding_box(&self) -> Result<BoundingBox, IoError> {
        Ok(BoundingBox::new(self.bounds.iter().map(|b| b[0]).collect(), self.bounds.iter().map(|b| b[1]).collect())?)
    }
}

/// Parses `"lo,hi;lo,hi;..."`.
pub fn parse_box(text: &str) -> Result<Vec<[f64; 2]>, IoError> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(IoError::Input(format!("box interval {pair:?} is not lo,hi")));
            }
            let lo: f64 = parts[0].parse().map_err(|_| IoError::Input(format!("bad number {:?}", parts[0])))?;
            let hi: f64 = parts[1].parse().map_err(|_| IoError::Input(format!("bad number {:?}", parts[1])))?;
            Ok([lo, hi])
        })
        .collect()
}
