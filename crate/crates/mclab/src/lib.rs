//! Seeded Monte Carlo experiments that check matrix concentration bounds
//! and the randomized algorithms built on them.
//!
//! [`run`] validates an [`ExperimentConfig`], runs its trials on
//! independent per-trial streams and returns an [`ExperimentReport`] whose
//! verdicts can be recomputed from the recorded numbers. Identical configs
//! give byte-identical reports regardless of thread count.

pub mod error;
pub mod experiments;
pub mod params;
pub mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

pub use error::{HarnessError, Result};
pub use experiments::{find, list_experiments, Experiment};
pub use report::{ExperimentReport, Status};

use experiments::Ctx;
use params::Params;
use report::{ConfigEcho, ReportBody, REPORT_VERSION};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Raw `--name value` pairs, validated against the experiment schema.
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    /// `None` uses the experiment's default.
    pub trials: Option<u64>,
    pub out_path: Option<PathBuf>,
    pub format: Format,
    /// Record wall-clock seconds; off by default so reports stay reproducible.
    pub with_timing: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            ..Self::default()
        }
    }

    pub fn param(mut self, name: &str, value: impl ToString) -> Self {
        self.params.insert(name.into(), value.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn trials(mut self, trials: u64) -> Self {
        self.trials = Some(trials);
        self
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let exp = find(&config.experiment)
        .ok_or_else(|| HarnessError::UnknownExperiment(config.experiment.clone()))?;
    let params = Params::resolve(exp.params, &config.params)?;
    let trials = config.trials.unwrap_or(exp.default_trials);
    if trials == 0 {
        return Err(HarnessError::BadParams("trials must be positive".into()));
    }
    let ctx = Ctx {
        params: params.clone(),
        seed: config.seed,
        trials,
    };
    let start = Instant::now();
    let mut body = ReportBody::default();
    (exp.run)(&ctx, &mut body)?;
    Ok(ExperimentReport {
        spec_version: REPORT_VERSION,
        config: ConfigEcho {
            experiment: exp.name.into(),
            params,
            seed: config.seed,
            trials,
        },
        anchor: exp.anchor.into(),
        body,
        wall_clock_seconds: config.with_timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Serializes `report` in `format` to `config.out_path`, or stdout when unset.
pub fn write_report(report: &ExperimentReport, config: &ExperimentConfig) -> Result<()> {
    let mut buf = Vec::new();
    match config.format {
        Format::Json => buf.extend_from_slice(report.to_json()?.as_bytes()),
        Format::Csv => report.write_csv(&mut buf)?,
    }
    match &config.out_path {
        Some(path) => std::fs::write(path, buf)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&buf)?;
        }
    }
    Ok(())
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harness.md")]
mod book_harness {}
