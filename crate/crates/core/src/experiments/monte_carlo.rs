use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ground_state::{classify_discrete, ground_state, strip_solve_options, Classification};
use super::stats::{wilson_interval, Interval, Z95};
use super::ExperimentError;
use crate::assembly::{SigmaAssignment, SigmaProfile, SigmaSpec};
use crate::geometry::StripSpec;
use crate::randomness::{derive_stream, AtomConfiguration};

/// Inputs of one Monte-Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub nu: f64,
    pub d: f64,
    pub sigma: SigmaSpec<f64>,
    pub n: usize,
    pub master_seed: u64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub tau: f64,
}

impl McParams {
    pub fn spec(&self) -> Result<StripSpec<f64>, ExperimentError> {
        Ok(StripSpec::new(self.d, self.l, self.m)?)
    }

    /// Sampling stops past `L + d`.
    pub fn horizon(&self) -> f64 {
        self.l + self.d
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(ExperimentError::InvalidInput(format!("nu = {} must be positive", self.nu)));
        }
        if self.n == 0 {
            return Err(ExperimentError::InvalidInput("need at least one sample".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(ExperimentError::InvalidInput(format!("tau = {} must be nonnegative", self.tau)));
        }
        self.sigma.0.validate()?;
        self.spec()?;
        Ok(())
    }
}

/// Outcome of one sample. Solver failures become `UNDECIDED` with the
/// error message kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub index: u64,
    pub stream_seed: u64,
    pub atoms: Vec<f64>,
    pub snapped_atoms: Vec<f64>,
    #[serde(rename = "E0")]
    pub e0: Option<f64>,
    pub error_bar: Option<f64>,
    pub residual: Option<f64>,
    pub class: Classification,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFrequency {
    pub class: Classification,
    pub count: usize,
    pub p_hat: f64,
    pub ci: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub frequencies: Vec<ClassFrequency>,
}

impl McSummary {
    pub fn of(&self, class: Classification) -> &ClassFrequency {
        self.frequencies.iter().find(|f| f.class == class).expect("all classes present")
    }
}

pub fn run_sample(params: &McParams, index: u64) -> McSample {
    let config = AtomConfiguration::sample(params.nu, params.horizon(), params.master_seed, index);
    let sigma = SigmaAssignment::Uniform(params.sigma.0.clone());
    let solved = params
        .spec()
        .and_then(|spec| ground_state(&spec, &config.atoms, &sigma, &strip_solve_options(1)));
    let stream_seed = derive_stream(params.master_seed, index);
    match solved {
        Ok(gs) => McSample {
            index,
            stream_seed,
            atoms: config.atoms,
            snapped_atoms: gs.snapped_atoms,
            e0: Some(gs.e0),
            error_bar: Some(gs.error_bar),
            residual: Some(gs.spectrum.residuals[0]),
            class: classify_discrete(gs.e0, gs.error_bar, params.d, params.tau),
            failure: None,
        },
        Err(e) => McSample {
            index,
            stream_seed,
            atoms: config.atoms,
            snapped_atoms: vec![],
            e0: None,
            error_bar: None,
            residual: None,
            class: Classification::Undecided,
            failure: Some(e.to_string()),
        },
    }
}

pub fn summarize(samples: &[McSample]) -> McSummary {
    let n = samples.len();
    let frequencies = Classification::ALL
        .iter()
        .map(|&class| {
            let count = samples.iter().filter(|s| s.class == class).count();
            ClassFrequency { class, count, p_hat: count as f64 / n as f64, ci: wilson_interval(count, n, Z95) }
        })
        .collect();
    McSummary { n, frequencies }
}

/// Runs `params.n` samples on `jobs` worker threads. Results land in slots
/// indexed by sample, so the output does not depend on `jobs`.
pub fn mc_probability(params: &McParams, jobs: usize) -> Result<(Vec<McSample>, McSummary), ExperimentError> {
    params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::InvalidInput(format!("thread pool: {e}")))?;
    let samples: Vec<McSample> = pool.install(|| {
        (0..params.n as u64).into_par_iter().map(|i| run_sample(params, i)).collect()
    });
    let summary = summarize(&samples);
    Ok((samples, summary))
}

pub fn constant_sigma(value: f64) -> SigmaSpec<f64> {
    SigmaSpec(SigmaProfile::constant(value))
}
