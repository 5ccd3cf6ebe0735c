//! Reproducible experiment drivers: config in, CSV and JSON summary out.
//!
//! A run is fully determined by its config and root seed. Tasks run on a
//! worker pool (`DGMVP_WORKERS`, default all cores) and are written back in
//! planning order, so the CSV payload does not depend on scheduling.

pub mod config;
pub mod plot;
pub mod presets;
pub mod records;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub use config::{derive_seed, ExperimentConfig, FinalMode, InstanceSource, Preset, ScanConfig, ScanParam, ScanTarget};
pub use plot::{emit_plot_data, percentile, scaling_sweeps, FigureId, ScalingSweep};
pub use presets::{build_instances, plan_tasks, run_task, Context, Landscape, Task, TaskKind, TaskOutput};
pub use records::{read_records, read_records_file, write_records, LandscapePoint, ResultRecord, RunSummary};

use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::pauli::identities::{verify_identities, verify_three_qubit_bridges, verify_two_qubit_bridges};

pub const WORKERS_ENV: &str = "DGMVP_WORKERS";

/// Worker count from `DGMVP_WORKERS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Applies `f` to every item on `workers` threads; results keep input order.
/// Every item runs even if some fail.
pub fn parallel_map<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<(U, f64)>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<(U, f64)>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.max(1).min(items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let t = Instant::now();
                let out = f(&items[i]);
                let secs = t.elapsed().as_secs_f64();
                slots.lock().expect("collector lock")[i] = Some((out, secs));
            });
        }
    });
    slots
        .into_inner()
        .expect("collector lock")
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}

/// Everything a run produced, before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub landscape: Vec<LandscapePoint>,
    pub summary: RunSummary,
}

/// Runs `config` under `root_seed` and writes `<preset>.csv`,
/// `summary.json` and `config.json` into `out_dir` (plus `landscape.csv`
/// and `traces/` where applicable). Records finished before an error are
/// still written.
pub fn run_preset(config: &ExperimentConfig, root_seed: u64, out_dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.json"), serde_json::to_string_pretty(config)?)?;
    let (output, traces, err) = execute(config, root_seed, worker_count());
    let csv_path = out_dir.join(format!("{}.csv", config.preset.name()));
    write_records(BufWriter::new(File::create(&csv_path)?), &output.records)?;
    if config.preset == Preset::LandscapeScan {
        records::write_landscape(BufWriter::new(File::create(out_dir.join("landscape.csv"))?), &output.landscape)?;
    }
    if !traces.is_empty() {
        let dir = out_dir.join("traces");
        std::fs::create_dir_all(&dir)?;
        for (name, result) in &traces {
            result.write_trace_csv(BufWriter::new(File::create(dir.join(format!("{name}.csv")))?))?;
        }
    }
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&output.summary)?)?;
    match err {
        Some(e) => Err(e),
        None => Ok(output.summary),
    }
}

/// Runs without touching the filesystem.
pub fn run_in_memory(config: &ExperimentConfig, root_seed: u64, workers: usize) -> Result<RunOutput> {
    let (output, _, err) = execute(config, root_seed, workers);
    match err {
        Some(e) => Err(e),
        None => Ok(output),
    }
}

type Traces = Vec<(String, crate::optimizers::OptResult)>;

fn execute(config: &ExperimentConfig, root_seed: u64, workers: usize) -> (RunOutput, Traces, Option<Error>) {
    let started = chrono::Utc::now().to_rfc3339();
    let hash = config.hash();
    let mut summary = RunSummary {
        schema_version: config::SCHEMA_VERSION,
        preset: config.preset.name().into(),
        config_hash: hash.clone(),
        root_seed,
        started_at: started,
        finished_at: String::new(),
        workers,
        tasks: 0,
        records: 0,
        function_accesses_total: 0,
        task_wall_seconds: Vec::new(),
        findings: json!({}),
    };
    let mut output = RunOutput {
        records: Vec::new(),
        landscape: Vec::new(),
        summary: summary.clone(),
    };
    let mut traces = Vec::new();
    let mut first_err = None;

    if config.preset == Preset::IdentityVerification {
        match identity_records(config, root_seed, &hash) {
            Ok(recs) => output.records = recs,
            Err(e) => first_err = Some(e),
        }
    } else {
        let instances = match build_instances(config, root_seed) {
            Ok(i) => i,
            Err(e) => {
                summary.finished_at = chrono::Utc::now().to_rfc3339();
                output.summary = summary;
                return (output, traces, Some(e));
            }
        };
        let tasks = plan_tasks(config);
        summary.tasks = tasks.len();
        let mut ctx = Context {
            config,
            root_seed,
            hash: hash.clone(),
            instances,
            landscapes: BTreeMap::new(),
            shots_spent: AtomicU64::new(0),
        };
        let (scans, rest): (Vec<Task>, Vec<Task>) = tasks.into_iter().partition(|t| t.is_scan());
        let mut results = Vec::new();
        let scan_results = parallel_map(&scans, workers, |t| run_task(t, &ctx));
        for (task, (res, secs)) in scans.iter().zip(scan_results) {
            if let Ok(out) = &res {
                if let (TaskKind::Scan { p, distance, target }, Some(land)) = (&task.kind, &out.landscape_summary) {
                    ctx.landscapes
                        .insert(((task.n, task.l, task.instance), *p, *distance, *target), land.clone());
                }
            }
            results.push((res, secs));
        }
        results.extend(parallel_map(&rest, workers, |t| run_task(t, &ctx)));
        for (res, secs) in results {
            summary.task_wall_seconds.push(secs);
            match res {
                Ok(out) => {
                    output.records.extend(out.records);
                    output.landscape.extend(out.landscape);
                    traces.extend(out.traces);
                }
                Err(e) => {
                    log::error!("task failed: {e}");
                    first_err.get_or_insert(e);
                }
            }
        }
        summary.function_accesses_total = ctx.shots_spent.load(Ordering::Relaxed);
    }
    summary.records = output.records.len();
    summary.findings = findings(config, &output.records);
    summary.finished_at = chrono::Utc::now().to_rfc3339();
    output.summary = summary;
    (output, traces, first_err)
}

fn identity_records(config: &ExperimentConfig, root_seed: u64, hash: &str) -> Result<Vec<ResultRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(root_seed, &[0x1d]));
    let betas: Vec<f64> = (0..config.identity_angles).map(|_| rng.random_range(0.0..TAU)).collect();
    let base = ResultRecord {
        config_hash: hash.to_string(),
        root_seed,
        preset: config.preset.name().into(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for check in verify_identities(&betas) {
        out.push(ResultRecord {
            task: out.len(),
            method: check.name,
            y: Some(check.max_error),
            success: Some(check.pass),
            ..base.clone()
        });
    }
    let mut bridges: BTreeMap<String, (f64, bool)> = BTreeMap::new();
    for report in [verify_two_qubit_bridges(&betas)?, verify_three_qubit_bridges(&betas)?] {
        for c in report.checks {
            let e = bridges.entry(c.pattern).or_insert((0.0, true));
            e.0 = e.0.max(c.max_coefficient_error.max(c.residual));
            e.1 &= c.pass;
        }
    }
    for (name, (err, pass)) in bridges {
        out.push(ResultRecord {
            task: out.len(),
            method: format!("bridge:{name}"),
            y: Some(err),
            success: Some(pass),
            ..base.clone()
        });
    }
    Ok(out)
}

/// Preset-level conclusions for the JSON summary.
fn findings(config: &ExperimentConfig, records: &[ResultRecord]) -> serde_json::Value {
    match config.preset {
        Preset::IdentityVerification => {
            let failed: Vec<&str> = records
                .iter()
                .filter(|r| r.success != Some(true))
                .map(|r| r.method.as_str())
                .collect();
            json!({ "all_pass": failed.is_empty(), "failed": failed, "checked": records.len() })
        }
        Preset::LandscapeScan => {
            let mut rates: BTreeMap<String, (usize, usize)> = BTreeMap::new();
            for r in records.iter().filter(|r| r.success.is_some()) {
                let e = rates.entry(format!("{}@{}", r.method, r.shots)).or_default();
                e.0 += r.success.unwrap_or(false) as usize;
                e.1 += 1;
            }
            let rates: BTreeMap<String, f64> =
                rates.into_iter().map(|(k, (s, t))| (k, s as f64 / t as f64)).collect();
            json!({ "success_rate": rates })
        }
        Preset::ScalingStudy => {
            let sweeps = scaling_sweeps(records);
            json!({ "sweeps": sweeps })
        }
        _ => json!({}),
    }
}

/// Re-runs the task behind `record` and returns its metric report.
/// Noiseless and noisy records alike reproduce exactly.
pub fn replay(config: &ExperimentConfig, record: &ResultRecord) -> Result<MetricReport> {
    if record.config_hash != config.hash() {
        log::warn!(
            "record hash {} differs from config hash {}; replaying anyway",
            record.config_hash,
            config.hash()
        );
    }
    let tasks = plan_tasks(config);
    let task = tasks
        .iter()
        .find(|t| t.index == record.task)
        .ok_or_else(|| Error::Config(format!("task {} not in plan", record.task)))?;
    if task.is_scan() || matches!(task.kind, TaskKind::Trial { .. }) {
        return Err(Error::Config("scan and trial records carry no metric report".into()));
    }
    let instances = build_instances(config, record.root_seed)?;
    let ctx = Context {
        config,
        root_seed: record.root_seed,
        hash: config.hash(),
        instances,
        landscapes: BTreeMap::new(),
        shots_spent: AtomicU64::new(0),
    };
    let out = run_task(task, &ctx)?;
    out.records
        .iter()
        .find(|r| r.p == record.p && r.method == record.method)
        .and_then(|r| r.report())
        .ok_or_else(|| Error::Config("replayed task produced no matching report".into()))
}
