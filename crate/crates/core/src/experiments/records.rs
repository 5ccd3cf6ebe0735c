//! Result rows, their CSV form and the run summary.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{MetricReport, MetricSource};

/// One row of an experiment CSV. Columns a preset does not use stay empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub root_seed: u64,
    pub preset: String,
    pub task: usize,
    pub instance: usize,
    pub instance_label: String,
    pub n: usize,
    pub l: usize,
    pub p: usize,
    pub distance: usize,
    pub initial: String,
    pub method: String,
    pub seed: u64,
    pub shots: usize,
    pub max_estimations: usize,
    pub estimations: usize,
    pub function_accesses: u64,
    pub best_estimate: Option<f64>,
    pub exact_expectation: Option<f64>,
    pub metric_source: Option<String>,
    pub metric_shots: Option<usize>,
    pub alpha_mean: Option<f64>,
    pub alpha_mean_5: Option<f64>,
    pub alpha_mean_20: Option<f64>,
    pub alpha_mean_100: Option<f64>,
    pub alpha_min: Option<f64>,
    pub p_min: Option<f64>,
    pub p_gm: Option<f64>,
    pub p_ps: Option<f64>,
    pub valleys: Option<usize>,
    pub mean_abs_gradient: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub success: Option<bool>,
    pub initial_is_optimal: Option<bool>,
}

impl ResultRecord {
    pub fn set_report(&mut self, r: &MetricReport) {
        self.alpha_mean = Some(r.alpha_mean);
        self.alpha_mean_5 = Some(r.alpha_mean_5);
        self.alpha_mean_20 = Some(r.alpha_mean_20);
        self.alpha_mean_100 = Some(r.alpha_mean_100);
        self.alpha_min = Some(r.alpha_min);
        self.p_min = Some(r.p_min);
        self.p_gm = Some(r.p_gm);
        match r.source {
            MetricSource::ExactStatevector => {
                self.metric_source = Some("exact".into());
                self.metric_shots = None;
            }
            MetricSource::Sampled { shots } => {
                self.metric_source = Some("sampled".into());
                self.metric_shots = Some(shots);
            }
        }
    }

    /// The metric columns as a report, if all are present.
    pub fn report(&self) -> Option<MetricReport> {
        let source = match self.metric_source.as_deref()? {
            "exact" => MetricSource::ExactStatevector,
            "sampled" => MetricSource::Sampled {
                shots: self.metric_shots?,
            },
            _ => return None,
        };
        Some(MetricReport {
            alpha_mean: self.alpha_mean?,
            alpha_mean_5: self.alpha_mean_5?,
            alpha_mean_20: self.alpha_mean_20?,
            alpha_mean_100: self.alpha_mean_100?,
            alpha_min: self.alpha_min?,
            p_min: self.p_min?,
            p_gm: self.p_gm?,
            source,
        })
    }
}

pub fn write_records<W: Write>(out: W, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(record_header())?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<ResultRecord>> {
    read_records(std::fs::File::open(path)?)
}

/// Column names in order, so an empty run still gets a header.
pub fn record_header() -> Vec<&'static str> {
    vec![
        "config_hash",
        "root_seed",
        "preset",
        "task",
        "instance",
        "instance_label",
        "n",
        "l",
        "p",
        "distance",
        "initial",
        "method",
        "seed",
        "shots",
        "max_estimations",
        "estimations",
        "function_accesses",
        "best_estimate",
        "exact_expectation",
        "metric_source",
        "metric_shots",
        "alpha_mean",
        "alpha_mean_5",
        "alpha_mean_20",
        "alpha_mean_100",
        "alpha_min",
        "p_min",
        "p_gm",
        "p_ps",
        "valleys",
        "mean_abs_gradient",
        "x",
        "y",
        "success",
        "initial_is_optimal",
    ]
}

/// One point of a scanned landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub task: usize,
    pub instance: usize,
    pub n: usize,
    pub l: usize,
    pub p: usize,
    pub distance: usize,
    pub target: String,
    pub x: f64,
    pub expectation: f64,
    pub alpha: f64,
}

pub fn write_landscape<W: Write>(out: W, points: &[LandscapePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if points.is_empty() {
        w.write_record(["task", "instance", "n", "l", "p", "distance", "target", "x", "expectation", "alpha"])?;
    }
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// JSON summary written next to the CSV. Timestamps and wall times live
/// here only, so the CSV stays byte-identical across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub preset: String,
    pub config_hash: String,
    pub root_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub workers: usize,
    pub tasks: usize,
    pub records: usize,
    /// Shots spent on optimisation, counted at the objective.
    pub function_accesses_total: u64,
    pub task_wall_seconds: Vec<f64>,
    pub findings: serde_json::Value,
}
