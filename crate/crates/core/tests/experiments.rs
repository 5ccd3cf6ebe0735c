use std::collections::BTreeMap;

use dgmvp::circuits::InitialStateKind;
use dgmvp::experiments::{
    derive_seed, emit_plot_data, percentile, plan_tasks, read_records, replay, run_in_memory, run_preset,
    write_records, ExperimentConfig, FigureId, InstanceSource, Preset, ResultRecord,
};
use dgmvp::optimizers::{CobylaParams, DaParams, InnerOptimizer, LayerwiseDriver, ShotBudget};
use dgmvp::Error;

fn small_optimize() -> ExperimentConfig {
    let mut c = ExperimentConfig::preset_default(Preset::LayerwiseComparison);
    c.instances = InstanceSource::Synthetic { count: 2, factors: 2 };
    c.n = vec![2];
    c.l = vec![2];
    c.p = vec![1, 2];
    c.seeds = 2;
    c.drivers = vec![LayerwiseDriver::Frozen, LayerwiseDriver::Fixed];
    c.budget = ShotBudget {
        shots_per_estimate: 16,
        max_estimations: 40,
        final_shots: 1024,
    };
    c
}

fn small_noise() -> ExperimentConfig {
    let mut c = ExperimentConfig::preset_default(Preset::NoiseStudy);
    c.p = vec![1, 2];
    c.seeds = 2;
    c.shots_grid = vec![32];
    c.budget = ShotBudget {
        shots_per_estimate: 32,
        max_estimations: 10,
        final_shots: 256,
    };
    c
}

fn csv_bytes(records: &[ResultRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records(&mut buf, records).unwrap();
    buf
}

/// Linear-interpolation quantile, written independently of the crate's.
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q;
    let i = h as usize;
    if i + 1 >= v.len() {
        v[i]
    } else {
        v[i] + (h - i as f64) * (v[i + 1] - v[i])
    }
}

#[test]
fn same_seed_same_csv() {
    let c = small_optimize();
    let a = run_in_memory(&c, 42, 1).unwrap();
    let b = run_in_memory(&c, 42, 2).unwrap();
    assert!(!a.records.is_empty());
    assert_eq!(csv_bytes(&a.records), csv_bytes(&b.records));
    let other = run_in_memory(&c, 43, 1).unwrap();
    assert_ne!(csv_bytes(&a.records), csv_bytes(&other.records));
}

#[test]
fn files_are_byte_identical_across_reruns() {
    let c = small_noise();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_preset(&c, 5, d1.path()).unwrap();
    run_preset(&c, 5, d2.path()).unwrap();
    let name = "noise-study.csv";
    let first = std::fs::read(d1.path().join(name)).unwrap();
    assert_eq!(first, std::fs::read(d2.path().join(name)).unwrap());
    assert_eq!(
        std::fs::read(d1.path().join("config.json")).unwrap(),
        std::fs::read(d2.path().join("config.json")).unwrap()
    );
    assert!(d1.path().join("summary.json").exists());
    let back = read_records(first.as_slice()).unwrap();
    assert_eq!(back.len(), 8);
}

#[test]
fn hash_ignores_the_seed() {
    let c = small_optimize();
    let a = run_in_memory(&c, 1, 1).unwrap();
    let b = run_in_memory(&c, 2, 1).unwrap();
    assert!(a.records.iter().chain(&b.records).all(|r| r.config_hash == c.hash()));
    assert_ne!(a.records[0].seed, b.records[0].seed);

    let mut changed = c.clone();
    changed.seeds = 3;
    assert_ne!(changed.hash(), c.hash());
    assert_eq!(c.hash().len(), 16);
}

#[test]
fn optimisation_records_replay_exactly() {
    let c = small_optimize();
    let out = run_in_memory(&c, 9, 1).unwrap();
    for rec in &out.records {
        assert_eq!(replay(&c, rec).unwrap(), rec.report().unwrap());
    }
}

#[test]
fn noisy_records_replay_exactly() {
    let c = small_noise();
    let out = run_in_memory(&c, 11, 1).unwrap();
    for rec in out.records.iter().filter(|r| r.report().is_some()) {
        assert_eq!(replay(&c, rec).unwrap(), rec.report().unwrap());
    }
}

#[test]
fn spent_shots_match_the_records() {
    let c = small_optimize();
    let out = run_in_memory(&c, 3, 1).unwrap();
    // Growing drivers report cumulative counts per depth; keep the last.
    let mut per_run: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    for r in &out.records {
        let e = per_run.entry((r.task, r.seed)).or_default();
        *e = (*e).max(r.function_accesses);
    }
    assert_eq!(per_run.values().sum::<u64>(), out.summary.function_accesses_total);

    let noise = small_noise();
    let out = run_in_memory(&noise, 3, 1).unwrap();
    let total: u64 = out.records.iter().map(|r| r.function_accesses).sum();
    assert_eq!(total, out.summary.function_accesses_total);
    assert!(out.records.iter().all(|r| r.function_accesses == (r.estimations * r.shots) as u64));
}

#[test]
fn plan_is_complete_and_ordered() {
    let c = small_optimize();
    let tasks = plan_tasks(&c);
    // instances x drivers x seeds
    assert_eq!(tasks.len(), 2 * 2 * 2);
    assert!(tasks.iter().enumerate().all(|(i, t)| t.index == i));
    let seeds: Vec<u64> = tasks.iter().map(|t| t.seed(0)).collect();
    assert_eq!(seeds[0], seeds[2], "drivers share seeds at the same grid point");

    let noise = plan_tasks(&small_noise());
    assert_eq!(noise.len(), 2 * 2 * 2);
}

#[test]
fn empty_results_give_header_only_files() {
    for (fig, header) in [
        (FigureId::Fig7, "p,method,alpha_mean_mean,alpha_min_median,p80"),
        (FigureId::Fig10, "n,l,b_nl,initial,runs,mean_p_gm,mean_inv_p_gm"),
    ] {
        let mut buf = Vec::new();
        emit_plot_data(&[], fig, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), header);
    }
    assert!(matches!("fig99".parse::<FigureId>(), Err(Error::UnknownFigure(_))));
}

#[test]
fn fig7_bands_match_direct_quantiles() {
    let c = small_optimize();
    let out = run_in_memory(&c, 21, 1).unwrap();
    let mut buf = Vec::new();
    emit_plot_data(&out.records, FigureId::Fig7, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let mut rows = 0;
    for row in rd.records() {
        let row = row.unwrap();
        let p: usize = row[0].parse().unwrap();
        let method = &row[1];
        let group: Vec<&ResultRecord> = out.records.iter().filter(|r| r.p == p && r.method == method).collect();
        let am: Vec<f64> = group.iter().map(|r| r.alpha_mean.unwrap()).collect();
        let amin: Vec<f64> = group.iter().map(|r| r.alpha_min.unwrap()).collect();
        let mean = am.iter().sum::<f64>() / am.len() as f64;
        assert!((row[2].parse::<f64>().unwrap() - mean).abs() < 1e-12);
        assert!((row[3].parse::<f64>().unwrap() - quantile(&amin, 0.5)).abs() < 1e-12);
        assert!((row[4].parse::<f64>().unwrap() - quantile(&am, 0.8)).abs() < 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 4);
}

#[test]
fn percentile_examples() {
    assert_eq!(percentile(&[3.0, 1.0, 2.0], 50.0), 2.0);
    assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 50.0), 2.5);
    assert_eq!(percentile(&[5.0], 80.0), 5.0);
    assert!(percentile(&[], 50.0).is_nan());
    let v = [0.3, 9.1, 4.4, 2.0, 7.7, 1.2];
    for q in [0.0, 20.0, 33.0, 80.0, 100.0] {
        assert!((percentile(&v, q) - quantile(&v, q / 100.0)).abs() < 1e-12);
    }
}

#[test]
fn json_overlay_and_validation() {
    let c = ExperimentConfig::from_json_str(r#"{"preset": "scaling-study", "n": [2, 3], "seeds": 2}"#).unwrap();
    assert_eq!(c.n, vec![2, 3]);
    assert_eq!(c.seeds, 2);
    assert_eq!(c.l, ExperimentConfig::preset_default(Preset::ScalingStudy).l);
    assert_eq!(c.initial_states, vec![InitialStateKind::Maxbias, InitialStateKind::WarmStarted]);

    let cobyla = ExperimentConfig::from_json_str(
        r#"{"preset": "optimizer-comparison", "optimizers": [{"kind": "cobyla", "rho_begin": 0.5}]}"#,
    )
    .unwrap();
    assert_eq!(
        cobyla.optimizers,
        vec![InnerOptimizer::Cobyla(CobylaParams {
            rho_begin: 0.5,
            ..Default::default()
        })]
    );
    assert_ne!(cobyla.optimizers[0], InnerOptimizer::DualAnnealing(DaParams::default()));

    for bad in [
        r#"{"n": [2]}"#,
        r#"{"preset": "scaling-study", "n": []}"#,
        r#"{"preset": "scaling-study", "seeds": 0}"#,
        r#"{"preset": "scaling-study", "distance": [2], "n": [2, 3]}"#,
        r#"{"preset": "scaling-study", "n": [5], "l": [4]}"#,
        r#"{"preset": "scaling-study", "schema_version": 9}"#,
        r#"{"preset": "scaling-study", "colour": "blue"}"#,
        r#"{"preset": "scaling-study", "instances": {"source": "prices", "path": "/nope.csv", "count": 1}}"#,
    ] {
        assert!(ExperimentConfig::from_json_str(bad).is_err(), "{bad}");
    }
    assert!(matches!(
        ExperimentConfig::from_json_str(r#"{"preset": "scaling-study", "n": [5], "l": [4]}"#),
        Err(Error::GuardExceeded { qubits: 20, limit: 16 })
    ));
}

#[test]
fn every_preset_default_validates() {
    for p in Preset::ALL {
        let c = ExperimentConfig::preset_default(p);
        c.validate().unwrap();
        assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.hash(), c.hash());
    }
}

#[test]
fn price_file_instances() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/prices.csv");
    let json = format!(
        r#"{{"preset": "initial-state-comparison", "n": [2], "l": [2], "p": [1], "seeds": 1,
            "initial_states": ["maxbias", "warm_started"],
            "budget": {{"max_estimations": 20}},
            "instances": {{"source": "prices", "path": "{path}", "count": 2}}}}"#
    );
    let c = ExperimentConfig::from_json_str(&json).unwrap();
    let out = run_in_memory(&c, 4, 1).unwrap();
    assert_eq!(out.records.len(), 4);
    assert!(out.records.iter().all(|r| !r.instance_label.is_empty()));
    let labels: Vec<&str> = out.records.iter().map(|r| r.instance_label.as_str()).collect();
    assert_eq!(labels[0], labels[1]);
}

#[test]
fn derived_seeds_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for root in 0..4u64 {
        for a in 0..5u64 {
            for b in 0..5u64 {
                assert!(seen.insert(derive_seed(root, &[a, b])));
            }
        }
    }
    assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
    assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
}

#[test]
fn identity_preset_reports_every_check() {
    let c = ExperimentConfig::preset_default(Preset::IdentityVerification);
    let out = run_in_memory(&c, 0, 1).unwrap();
    assert!(out.records.len() > 30);
    assert!(out.records.iter().all(|r| r.success == Some(true)), "{:?}", out.summary.findings);
    assert_eq!(out.summary.findings["all_pass"], true);
}
