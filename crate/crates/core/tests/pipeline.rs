use std::io::Cursor;

use cgalr::connectome::{build_probe_set, correlation_connectome};
use cgalr::harness::{self, DatasetSource, ExperimentConfig};
use cgalr::metrics::{epoch_distance, DistanceKind};
use cgalr::schedules::SchedulePolicy;
use cgalr::trainer::{split, two_moons, Mlp, MlpSpec, SgdConfig, Trainer};

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::image();
    c.apply_text("epochs = 6\nschedule = cg_alr,cosine,dog\ndistance = top,hk\nseeds = 0,1\neta_star = 0.05\nsamples = 200\nhidden = 12,12\nprobe_P = 48\n")
        .unwrap();
    c
}

#[test]
fn matrix_results_do_not_depend_on_thread_count() {
    let cfg = small();
    let a = harness::run_matrix(&cfg, 1).unwrap();
    let b = harness::run_matrix(&cfg, 5).unwrap();
    assert_eq!(a.len(), 8);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.meta, y.meta);
        let strip = |r: &harness::EpochRow| (r.epoch, r.train_loss, r.val_loss, r.val_acc, r.test_acc, r.control, r.rates.clone());
        assert_eq!(x.rows.iter().map(strip).collect::<Vec<_>>(), y.rows.iter().map(strip).collect::<Vec<_>>());
    }
}

#[test]
fn csv_dataset_matches_generated_one() {
    let data = two_moons(90, 0.1, 3).unwrap();
    let mut text = String::from("x,y,label\n");
    for (row, label) in data.features.rows().into_iter().zip(&data.labels) {
        text.push_str(&format!("{},{},{}\n", row[0], row[1], label));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moons.csv");
    std::fs::write(&path, text).unwrap();
    let mut cfg = small();
    cfg.dataset = DatasetSource::Csv(path);
    let loaded = cfg.load_dataset().unwrap();
    assert_eq!(loaded.features, data.features);
    assert_eq!(loaded.labels, data.labels);
}

#[test]
fn checkpoint_round_trip_and_zero_self_distance() {
    let data = split(&two_moons(150, 0.2, 0).unwrap(), 0).unwrap();
    let spec = MlpSpec::new(vec![2, 8, 8, 2]);
    let sgd = SgdConfig { momentum: 0.0, weight_decay: 5e-4, batch_size: 16, seed: 9 };
    let mut t = Trainer::new(spec, sgd, data.clone()).unwrap();
    let mut source = SchedulePolicy::Constant.rate_source(0.05).unwrap();
    t.train_epoch(source.as_mut()).unwrap();

    let mut buf = Vec::new();
    t.model().write_checkpoint(&mut buf).unwrap();
    let restored = Mlp::read_checkpoint(Cursor::new(buf)).unwrap();
    assert_eq!(restored.flat_params(), t.model().flat_params());

    let probe = build_probe_set(&data.train.labels, 40, 1).unwrap();
    let before = correlation_connectome(&t.capture_activations(&probe).unwrap());
    let kind = DistanceKind::Bottleneck;
    let s0 = kind.summarize(&before);
    assert_eq!(epoch_distance(&kind, None, &s0).unwrap(), 0.0);
    assert_eq!(epoch_distance(&kind, Some(&s0), &s0).unwrap(), 0.0);
}

#[test]
fn summary_reports_every_method() {
    let cfg = small();
    let out = harness::run_experiment(&cfg, None).unwrap();
    let mut methods: Vec<&str> = out.summary.rows.iter().map(|r| r.method.as_str()).collect();
    methods.dedup();
    assert_eq!(methods, ["cg_alr-top", "cg_alr-hk", "cosine", "dog"]);
    assert!(out.runs.iter().all(|r| r.all_finite()));
    assert!(out.summary.red.iter().all(|r| r.method.starts_with("cg_alr")));
}
