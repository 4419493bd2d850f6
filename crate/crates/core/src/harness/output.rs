//! Result rows and their CSV/JSON serialisation.
//!
//! Column order of the CSV is fixed by [`COLUMNS`]; mean rows carry the average
//! over successful trials of each numeric column and `n_ok`, the number of
//! trials averaged.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Experiment, Scheme, SimConfig, SweepVariable};
use crate::audit::Constraint;
use crate::error::{EmsError, Result};
use crate::metrics::RunReport;

pub const COLUMNS: [&str; 22] = [
    "experiment",
    "sweep_variable",
    "sweep_value",
    "kind",
    "trial",
    "seed",
    "scheme",
    "n_ok",
    "ec_mj",
    "er",
    "d2d_ratio",
    "t_serial",
    "slots_used",
    "pairings",
    "d2d_links",
    "training_time_s",
    "training_energy_j",
    "clamped_links",
    "shortfall_bits",
    "audit_pass",
    "failed_constraint",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Trial,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    pub kind: RowKind,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub scheme: Scheme,
    pub n_ok: Option<usize>,
    pub ec_mj: Option<f64>,
    pub er: Option<f64>,
    pub d2d_ratio: Option<f64>,
    pub t_serial: Option<f64>,
    pub slots_used: Option<f64>,
    pub pairings: Option<f64>,
    pub d2d_links: Option<f64>,
    pub training_time_s: Option<f64>,
    pub training_energy_j: Option<f64>,
    pub clamped_links: Option<f64>,
    pub shortfall_bits: Option<f64>,
    pub audit_pass: Option<bool>,
    pub failed_constraint: Option<Constraint>,
    pub error: Option<String>,
}

impl Row {
    fn blank(exp: &Experiment, value: f64, kind: RowKind, scheme: Scheme) -> Self {
        Row {
            experiment: exp.name.clone(),
            sweep_variable: exp.sweep_variable,
            sweep_value: value,
            kind,
            trial: None,
            seed: None,
            scheme,
            n_ok: None,
            ec_mj: None,
            er: None,
            d2d_ratio: None,
            t_serial: None,
            slots_used: None,
            pairings: None,
            d2d_links: None,
            training_time_s: None,
            training_energy_j: None,
            clamped_links: None,
            shortfall_bits: None,
            audit_pass: None,
            failed_constraint: None,
            error: None,
        }
    }

    pub fn trial(exp: &Experiment, value: f64, trial: usize, seed: u64, scheme: Scheme, outcome: &Result<RunReport>) -> Self {
        let mut r = Row::blank(exp, value, RowKind::Trial, scheme);
        r.trial = Some(trial);
        r.seed = Some(seed);
        match outcome {
            Ok(rep) => {
                r.ec_mj = Some(rep.ec_mj);
                r.er = rep.er;
                r.d2d_ratio = Some(rep.d2d_ratio);
                r.t_serial = Some(rep.t_serial as f64);
                r.slots_used = Some(rep.slots_used as f64);
                r.pairings = Some(rep.pairings as f64);
                r.d2d_links = Some(rep.d2d_links as f64);
                r.training_time_s = Some(rep.training_time_s);
                r.training_energy_j = Some(rep.training_energy_j);
                r.clamped_links = Some(rep.clamped_links as f64);
                r.shortfall_bits = Some(rep.shortfall_bits);
                r.audit_pass = Some(rep.audit.passed());
            }
            Err(e) => {
                r.audit_pass = Some(false);
                if let EmsError::ConstraintViolated { constraint, .. } = e {
                    r.failed_constraint = Some(*constraint);
                }
                r.error = Some(e.to_string());
            }
        }
        r
    }

    pub fn mean(exp: &Experiment, value: f64, scheme: Scheme, ok: &[&Row]) -> Self {
        let mut r = Row::blank(exp, value, RowKind::Mean, scheme);
        r.n_ok = Some(ok.len());
        let avg = |f: fn(&Row) -> Option<f64>| -> Option<f64> {
            let vals: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        r.ec_mj = avg(|r| r.ec_mj);
        r.er = avg(|r| r.er);
        r.d2d_ratio = avg(|r| r.d2d_ratio);
        r.t_serial = avg(|r| r.t_serial);
        r.slots_used = avg(|r| r.slots_used);
        r.pairings = avg(|r| r.pairings);
        r.d2d_links = avg(|r| r.d2d_links);
        r.training_time_s = avg(|r| r.training_time_s);
        r.training_energy_j = avg(|r| r.training_energy_j);
        r.clamped_links = avg(|r| r.clamped_links);
        r.shortfall_bits = avg(|r| r.shortfall_bits);
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: SimConfig,
    pub rows: Vec<Row>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a SimConfig,
    columns: &'a [&'a str],
    trial_rows: usize,
    failed_trials: usize,
    trial_seeds: Vec<u64>,
}

impl ExperimentResult {
    pub fn trial_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.kind == RowKind::Trial)
    }

    pub fn mean_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.kind == RowKind::Mean)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.trial_rows().filter(|r| r.error.is_some())
    }

    pub fn mean(&self, scheme: Scheme, value: f64) -> Option<&Row> {
        self.mean_rows().find(|r| r.scheme == scheme && r.sweep_value == value)
    }

    /// Successful trial rows of one scheme at one point, in trial order.
    pub fn trials(&self, scheme: Scheme, value: f64) -> impl Iterator<Item = &Row> {
        self.trial_rows()
            .filter(move |r| r.scheme == scheme && r.sweep_value == value && r.error.is_none())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| EmsError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| EmsError::Io(e.to_string()))
    }

    pub fn from_csv_str(s: &str) -> Result<Vec<Row>> {
        let mut rd = csv::Reader::from_reader(s.as_bytes());
        rd.deserialize().map(|r| r.map_err(EmsError::from)).collect()
    }

    /// Writes `<name>.csv` and `<name>.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = &self.config.experiment.name;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.to_csv_string()?)?;
        let sidecar = Sidecar {
            config: &self.config,
            columns: &COLUMNS,
            trial_rows: self.trial_rows().count(),
            failed_trials: self.failures().count(),
            trial_seeds: self.config.experiment.trial_seeds(),
        };
        std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
        Ok((csv_path, json_path))
    }
}
