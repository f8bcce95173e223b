use proptest::prelude::*;

use phlab_harness::output::{export_report, read_details, read_records, revalidate, write_run};
use phlab_harness::{run, run_sweep, Experiment, ExperimentConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips_through_toml(
        seed in 0..=i64::MAX as u64,
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        q in proptest::option::of(2u32..9),
        depths in prop::collection::vec(1usize..5000, 1..6),
        delta in 1e-4f64..0.2,
        step in 1e-5f64..1e-2,
        point in proptest::option::of([0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0]),
        grid in prop::collection::vec(-0.1f64..0.1, 0..4),
        id in "[a-z0-9/=.,-]{0,12}",
    ) {
        let mut c = ExperimentConfig { seed, id, ..Default::default() };
        c.map.a = a;
        c.map.b = b;
        if let Some(q) = q {
            c.map.family = "zq-variant".into();
            c.map.q = Some(q);
        }
        c.knobs.depths = depths;
        c.knobs.delta = delta;
        c.knobs.step = step;
        c.knobs.point = point;
        c.sweep.a = grid.clone();
        c.sweep.b = grid;
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap(), "generated").unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }
}

#[test]
fn seeds_beyond_toml_integers_are_rejected() {
    let c = ExperimentConfig { seed: u64::MAX, ..Default::default() };
    assert!(c.validate().is_err());
    assert!(c.to_toml().is_err());
}

fn small_disintegration() -> ExperimentConfig {
    let mut c = ExperimentConfig { id: "small".into(), ..Default::default() };
    c.map.a = 0.01;
    c.map.b = 0.01;
    c.knobs.points = 2;
    c.knobs.depths = vec![100, 200];
    c.knobs.stride = 20;
    c
}

#[test]
fn detail_artifacts_reparse_and_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = vec![run(Experiment::Disintegrate, &small_disintegration()).unwrap()];
    let paths = write_run(dir.path(), "d", &mut out).unwrap();
    // records, detail, summary, long and phase files
    assert_eq!(paths.len(), 5);
    let records = read_records(&dir.path().join("d.records.jsonl")).unwrap();
    // wall-clock time is not serialized
    let expect = phlab_harness::ResultRecord { wall_clock_s: 0.0, ..out[0].record.clone() };
    assert_eq!(records, vec![expect]);
    let details = read_details(&dir.path().join("d.detail.jsonl"), 1).unwrap();
    assert_eq!(details[0].iter().filter(|r| r.get("report").is_some()).count(), 4);
    assert!(revalidate(&records[0], &details[0]).is_empty());

    let mut broken = details[0].clone();
    let row = broken.iter_mut().find(|r| r.get("report").is_some()).unwrap();
    row["report"]["clusters"][0]["mass"] = serde_json::json!(0.5);
    let problems = revalidate(&records[0], &broken);
    assert_eq!(problems.len(), 1);
    assert!(problems[0].contains("masses sum to"), "{problems:?}");
}

#[test]
fn export_refuses_mixed_experiments_and_handles_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_disintegration();
    c.knobs.points = 1;
    c.knobs.iterations = 2000;
    let a = run(Experiment::Lyapunov, &c).unwrap();
    let b = run(Experiment::Verify, &c).unwrap();
    let err = export_report(dir.path(), "mixed", &[a.record, b.record], &[a.detail, b.detail]).unwrap_err();
    assert!(err.to_string().contains("mix"));

    let files = export_report(dir.path(), "empty", &[], &[]).unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        assert_eq!(std::fs::read_to_string(f).unwrap().lines().count(), 1);
    }
}

#[test]
fn sweep_output_does_not_depend_on_thread_count() {
    let mut c = ExperimentConfig { id: "threads".into(), ..Default::default() };
    c.sweep.experiment = "lyapunov".into();
    c.sweep.a = vec![0.0, 0.01];
    c.sweep.b = vec![0.01, 0.03];
    c.knobs.points = 5;
    c.knobs.iterations = 5000;
    let mut seen = Vec::new();
    for threads in [1, 3, 8] {
        c.threads = threads;
        let dir = tempfile::tempdir().unwrap();
        let mut out = run_sweep(&c).unwrap();
        write_run(dir.path(), "s", &mut out).unwrap();
        let bytes: Vec<Vec<u8>> =
            ["s.records.jsonl", "s.detail.jsonl"].iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect();
        seen.push(bytes);
    }
    assert!(seen.iter().all(|s| s == &seen[0]));
    assert!(!seen[0][0].is_empty());
}
