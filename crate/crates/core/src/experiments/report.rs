//! Versioned JSON-lines records and the summary CSV.
//!
//! Every line is one [`ExperimentReport`]: a `schema` string, an
//! `experiment` discriminator, the complete `inputs`, and the outputs.
//! Rerunning a record's inputs reproduces its outputs bit for bit; the only
//! field excluded from that promise is the optional `wall_clock_s`.

use serde::{Deserialize, Serialize};

use super::appendix::{check_prop_a1, check_prop_a2, mu_table, MuTable, PropositionCheck};
use super::convergence::{convergence_study, ConvergenceStudy};
use super::ground_state::{classify_discrete, ground_state, strip_solve_options, Classification};
use super::monte_carlo::{mc_probability, run_sample, McParams, McSample, McSummary};
use super::threshold::{estimate_gamma, verify_destruction_config, DestructionCheck, ThresholdEstimate};
use super::ExperimentError;
use crate::assembly::{SigmaAssignment, SigmaSpec};
use crate::eigensolve::Method;
use crate::geometry::StripSpec;
use crate::randomness::AtomConfiguration;

pub const SCHEMA: &str = "molspec.report/1";

/// `f64` that may be infinite; infinities travel as the strings `"inf"`
/// and `"-inf"`.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("not a number: {t:?}"))),
        }
    }
}

/// One coupling for all atoms, or one per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaInput {
    Uniform(SigmaSpec<f64>),
    PerAtom(Vec<SigmaSpec<f64>>),
}

impl SigmaInput {
    pub fn assignment(&self) -> SigmaAssignment<f64> {
        match self {
            SigmaInput::Uniform(s) => SigmaAssignment::Uniform(s.0.clone()),
            SigmaInput::PerAtom(list) => SigmaAssignment::PerAtom(list.iter().map(|s| s.0.clone()).collect()),
        }
    }

    fn label(&self) -> String {
        match self {
            SigmaInput::Uniform(s) => s.0.to_string(),
            SigmaInput::PerAtom(list) => list.iter().map(|s| s.0.to_string()).collect::<Vec<_>>().join(";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleInputs {
    pub nu: f64,
    pub horizon: f64,
    pub master_seed: u64,
    pub stream_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveInputs {
    pub d: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub atoms: Vec<f64>,
    pub sigma: SigmaInput,
    pub count: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    #[serde(rename = "E0")]
    pub e0: f64,
    pub error_bar: f64,
    pub class: Classification,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub method: Method,
    pub iterations: usize,
    pub n_dof: usize,
    pub snapped_atoms: Vec<f64>,
    pub snap_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeInputs {
    pub d: f64,
    pub atoms: Vec<f64>,
    pub sigma: SigmaInput,
    #[serde(rename = "L_list")]
    pub l_list: Vec<f64>,
    #[serde(rename = "M_list")]
    pub m_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaInputs {
    pub d: f64,
    pub eta: f64,
    pub delta: f64,
    pub points: usize,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DestructionInputs {
    pub d: f64,
    pub a_k: f64,
    pub gamma: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub tau: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixInputs {
    pub trials: usize,
    pub seed: u64,
    pub d: f64,
    pub eta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixOutput {
    pub a1: PropositionCheck,
    pub a2: PropositionCheck,
    pub mu_table: MuTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Record {
    Sample { inputs: SampleInputs, configuration: AtomConfiguration },
    Solve { inputs: SolveInputs, output: SolveOutput },
    McSample { inputs: McParams, sample: McSample },
    McSummary { inputs: McParams, summary: McSummary },
    Converge { inputs: ConvergeInputs, output: ConvergenceStudy },
    Gamma { inputs: GammaInputs, output: ThresholdEstimate },
    Destruction { inputs: DestructionInputs, output: DestructionCheck },
    Appendix { inputs: AppendixInputs, output: AppendixOutput },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    #[serde(flatten)]
    pub record: Record,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_clock_s: Option<f64>,
}

impl ExperimentReport {
    pub fn new(record: Record) -> Self {
        ExperimentReport { schema: SCHEMA.to_string(), record, wall_clock_s: None }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn from_json_line(line: &str) -> Result<Self, ExperimentError> {
        let report: ExperimentReport =
            serde_json::from_str(line).map_err(|e| ExperimentError::InvalidInput(format!("bad report line: {e}")))?;
        if report.schema != SCHEMA {
            return Err(ExperimentError::InvalidInput(format!(
                "unsupported schema {:?} (expected {SCHEMA:?})",
                report.schema
            )));
        }
        Ok(report)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.record.csv_rows()
    }
}

/// One line of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub d: Option<f64>,
    pub nu: Option<f64>,
    pub sigma: Option<String>,
    #[serde(rename = "E0")]
    pub e0: Option<f64>,
    pub class: Option<Classification>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub seed: Option<u64>,
}

impl CsvRow {
    fn new(experiment: &str) -> Self {
        CsvRow {
            experiment: experiment.to_string(),
            d: None,
            nu: None,
            sigma: None,
            e0: None,
            class: None,
            ci_lo: None,
            ci_hi: None,
            seed: None,
        }
    }
}

impl Record {
    pub fn name(&self) -> &'static str {
        match self {
            Record::Sample { .. } => "sample",
            Record::Solve { .. } => "solve",
            Record::McSample { .. } => "mc_sample",
            Record::McSummary { .. } => "mc_summary",
            Record::Converge { .. } => "converge",
            Record::Gamma { .. } => "gamma",
            Record::Destruction { .. } => "destruction",
            Record::Appendix { .. } => "appendix",
        }
    }

    /// Rows for the summary CSV. `converge` reports the extrapolated
    /// energy with `E ± error_bar` as its interval; `gamma` reports the
    /// final bisection bracket; `appendix` has no row.
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut row = CsvRow::new(self.name());
        match self {
            Record::Sample { configuration, .. } => {
                row.nu = Some(configuration.nu);
                row.seed = Some(configuration.master_seed);
                vec![row]
            }
            Record::Solve { inputs, output } => {
                row.d = Some(inputs.d);
                row.sigma = Some(inputs.sigma.label());
                row.e0 = Some(output.e0);
                row.class = Some(output.class);
                vec![row]
            }
            Record::McSample { inputs, sample } => {
                row.d = Some(inputs.d);
                row.nu = Some(inputs.nu);
                row.sigma = Some(inputs.sigma.0.to_string());
                row.e0 = sample.e0;
                row.class = Some(sample.class);
                row.seed = Some(sample.stream_seed);
                vec![row]
            }
            Record::McSummary { inputs, summary } => summary
                .frequencies
                .iter()
                .map(|f| CsvRow {
                    d: Some(inputs.d),
                    nu: Some(inputs.nu),
                    sigma: Some(inputs.sigma.0.to_string()),
                    class: Some(f.class),
                    ci_lo: Some(f.ci.lo),
                    ci_hi: Some(f.ci.hi),
                    seed: Some(inputs.master_seed),
                    ..CsvRow::new(self.name())
                })
                .collect(),
            Record::Converge { inputs, output } => {
                row.d = Some(inputs.d);
                row.sigma = Some(inputs.sigma.label());
                row.e0 = Some(output.extrapolated);
                row.ci_lo = Some(output.extrapolated - output.error_bar);
                row.ci_hi = Some(output.extrapolated + output.error_bar);
                vec![row]
            }
            Record::Gamma { output, .. } => {
                row.d = Some(output.d);
                row.ci_lo = Some(output.gamma_lo);
                row.ci_hi = Some(output.gamma_hat);
                vec![row]
            }
            Record::Destruction { inputs, output } => {
                row.d = Some(inputs.d);
                row.sigma = Some(inputs.gamma.to_string());
                row.e0 = Some(output.e0);
                row.class = Some(output.class);
                vec![row]
            }
            Record::Appendix { .. } => vec![],
        }
    }
}

pub fn run_solve(inputs: &SolveInputs) -> Result<Record, ExperimentError> {
    let spec = StripSpec::new(inputs.d, inputs.l, inputs.m)?;
    let gs = ground_state(&spec, &inputs.atoms, &inputs.sigma.assignment(), &strip_solve_options(inputs.count))?;
    let output = SolveOutput {
        e0: gs.e0,
        error_bar: gs.error_bar,
        class: classify_discrete(gs.e0, gs.error_bar, inputs.d, inputs.tau),
        eigenvalues: gs.spectrum.eigenvalues.clone(),
        residuals: gs.spectrum.residuals.clone(),
        method: gs.spectrum.method,
        iterations: gs.spectrum.iterations,
        n_dof: gs.spectrum.n_dof,
        snapped_atoms: gs.snapped_atoms,
        snap_error: gs.snap_error,
    };
    Ok(Record::Solve { inputs: inputs.clone(), output })
}

pub fn run_sample_record(inputs: &SampleInputs) -> Result<Record, ExperimentError> {
    if !(inputs.nu > 0.0) || !(inputs.horizon > 0.0) {
        return Err(ExperimentError::InvalidInput("need nu > 0 and horizon > 0".into()));
    }
    let configuration = AtomConfiguration::sample(inputs.nu, inputs.horizon, inputs.master_seed, inputs.stream_index);
    Ok(Record::Sample { inputs: inputs.clone(), configuration })
}

/// All per-sample records followed by the summary record.
pub fn run_mc(params: &McParams, jobs: usize) -> Result<Vec<Record>, ExperimentError> {
    let (samples, summary) = mc_probability(params, jobs)?;
    let mut out: Vec<Record> = samples
        .into_iter()
        .map(|sample| Record::McSample { inputs: params.clone(), sample })
        .collect();
    out.push(Record::McSummary { inputs: params.clone(), summary });
    Ok(out)
}

pub fn run_converge(inputs: &ConvergeInputs) -> Result<Record, ExperimentError> {
    let output = convergence_study(inputs.d, &inputs.atoms, &inputs.sigma.assignment(), &inputs.l_list, &inputs.m_list)?;
    Ok(Record::Converge { inputs: inputs.clone(), output })
}

pub fn run_gamma(inputs: &GammaInputs) -> Result<Record, ExperimentError> {
    let output = estimate_gamma(inputs.d, inputs.eta, inputs.delta, inputs.points, inputs.cells)?;
    Ok(Record::Gamma { inputs: inputs.clone(), output })
}

pub fn run_destruction(inputs: &DestructionInputs) -> Result<Record, ExperimentError> {
    let output = verify_destruction_config(inputs.d, inputs.a_k, inputs.gamma, inputs.l, inputs.m, inputs.tau, inputs.cells)?;
    Ok(Record::Destruction { inputs: inputs.clone(), output })
}

pub fn run_appendix(inputs: &AppendixInputs) -> Result<Record, ExperimentError> {
    let output = AppendixOutput {
        a1: check_prop_a1(inputs.trials, inputs.seed)?,
        a2: check_prop_a2(inputs.trials, inputs.seed)?,
        mu_table: mu_table(inputs.d, inputs.eta, inputs.delta),
    };
    Ok(Record::Appendix { inputs: inputs.clone(), output })
}

/// Reruns a record from its inputs alone.
pub fn rerun(record: &Record, jobs: usize) -> Result<Record, ExperimentError> {
    match record {
        Record::Sample { inputs, .. } => run_sample_record(inputs),
        Record::Solve { inputs, .. } => run_solve(inputs),
        Record::McSample { inputs, sample } => {
            inputs.validate()?;
            Ok(Record::McSample { inputs: inputs.clone(), sample: run_sample(inputs, sample.index) })
        }
        Record::McSummary { inputs, .. } => {
            let (_, summary) = mc_probability(inputs, jobs)?;
            Ok(Record::McSummary { inputs: inputs.clone(), summary })
        }
        Record::Converge { inputs, .. } => run_converge(inputs),
        Record::Gamma { inputs, .. } => run_gamma(inputs),
        Record::Destruction { inputs, .. } => run_destruction(inputs),
        Record::Appendix { inputs, .. } => run_appendix(inputs),
    }
}

/// Reruns `report` and checks that the outputs match exactly.
pub fn replay(report: &ExperimentReport, jobs: usize) -> Result<ExperimentReport, ExperimentError> {
    let fresh = ExperimentReport::new(rerun(&report.record, jobs)?);
    let before = serde_json::to_string(&report.record).expect("reports serialize");
    let after = serde_json::to_string(&fresh.record).expect("reports serialize");
    if before != after {
        return Err(ExperimentError::ReplayMismatch(format!("{} record differs after rerun", report.record.name())));
    }
    Ok(fresh)
}

/// Writes the summary CSV for `reports`.
pub fn write_csv<W: std::io::Write>(reports: &[ExperimentReport], out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    let mut wrote = false;
    for row in reports.iter().flat_map(|r| r.csv_rows()) {
        writer.serialize(row)?;
        wrote = true;
    }
    if !wrote {
        writer.write_record(["experiment", "d", "nu", "sigma", "E0", "class", "ci_lo", "ci_hi", "seed"])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_record_roundtrips() {
        let rec = run_sample_record(&SampleInputs { nu: 1.0, horizon: 7.0, master_seed: 42, stream_index: 3 }).unwrap();
        let report = ExperimentReport::new(rec);
        let line = report.to_json_line();
        assert!(line.starts_with("{\"schema\":\"molspec.report/1\",\"experiment\":\"sample\""));
        let back = ExperimentReport::from_json_line(&line).unwrap();
        assert_eq!(back, report);
        assert_eq!(replay(&back, 1).unwrap(), report);
    }

    #[test]
    fn rejects_foreign_schema() {
        let line = r#"{"schema":"other/9","experiment":"sample"}"#;
        assert!(ExperimentReport::from_json_line(line).is_err());
    }

    #[test]
    fn infinite_values_survive_json() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct W {
            #[serde(with = "extended_f64")]
            x: f64,
        }
        let text = serde_json::to_string(&W { x: f64::INFINITY }).unwrap();
        assert_eq!(text, r#"{"x":"inf"}"#);
        assert_eq!(serde_json::from_str::<W>(&text).unwrap(), W { x: f64::INFINITY });
    }

    #[test]
    fn sigma_input_forms() {
        let u: SigmaInput = serde_json::from_str("1e4").unwrap();
        assert_eq!(u.label(), "10000");
        let p: SigmaInput = serde_json::from_str(r#"["inf", 3]"#).unwrap();
        assert_eq!(p.label(), "inf;3");
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"["inf","3"]"#);
    }
}
