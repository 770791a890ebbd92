//! Runs every config matching a glob, concurrently.
//!
//! Each run writes into `<output_dir>/<config file stem>` so that configs
//! sharing an `output_dir` cannot overwrite each other.

use std::collections::HashMap;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::load_config;
use crate::run::{run, RunError, RunResult};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("bad pattern: {0}")]
    Pattern(#[from] glob::PatternError),
    #[error("{0}")]
    Glob(#[from] glob::GlobError),
    #[error("no config matches `{0}`")]
    NoMatch(String),
    #[error("{first} and {second} would both write to {dir}")]
    OutputClash { first: PathBuf, second: PathBuf, dir: PathBuf },
}

pub struct SweepOutcome {
    pub config: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub result: Result<RunResult, RunError>,
}

pub fn sweep(pattern: &str) -> Result<Vec<SweepOutcome>, SweepError> {
    let mut paths = Vec::new();
    for entry in glob::glob(pattern)? {
        paths.push(entry?);
    }
    if paths.is_empty() {
        return Err(SweepError::NoMatch(pattern.to_string()));
    }
    paths.sort();

    let mut seen: HashMap<PathBuf, PathBuf> = HashMap::new();
    let mut jobs = Vec::with_capacity(paths.len());
    for path in paths {
        match load_config(&path) {
            Ok(mut cfg) => {
                let stem = path.file_stem().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("run"));
                cfg.output_dir = cfg.output_dir.join(stem);
                if let Some(first) = seen.insert(cfg.output_dir.clone(), path.clone()) {
                    return Err(SweepError::OutputClash { first, second: path, dir: cfg.output_dir });
                }
                jobs.push((path, Ok(cfg)));
            }
            Err(e) => jobs.push((path, Err(RunError::from(e)))),
        }
    }

    Ok(jobs
        .into_par_iter()
        .map(|(config, cfg)| match cfg {
            Ok(cfg) => SweepOutcome { config, output_dir: Some(cfg.output_dir.clone()), result: run(&cfg) },
            Err(e) => SweepOutcome { config, output_dir: None, result: Err(e) },
        })
        .collect())
}
