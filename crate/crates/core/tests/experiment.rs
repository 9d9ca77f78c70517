mod common;

use common::small_heat_config;
use parareal_core::experiment::{compute, ExperimentConfig};
use parareal_core::{preset, run_experiment};

#[test]
fn csv_has_one_row_per_iteration() {
    let c = small_heat_config(4, 100.0);
    let r = compute(&c).unwrap();
    let csv = r.csv().unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,defect");
    assert_eq!(lines.len(), c.max_iter + 2);
    for (k, line) in lines[1..].iter().enumerate() {
        let (idx, val) = line.split_once(',').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), k);
        let d: f64 = val.parse().unwrap();
        assert!(d >= 0.0 && d.is_finite());
        assert_eq!(d, r.defects()[k]);
    }
}

#[test]
fn csv_is_identical_across_worker_counts() {
    let mut c = small_heat_config(6, 10000.0);
    c.nu = "erf".into();
    c.alpha = 10.0;
    c.workers = 1;
    let one = compute(&c).unwrap().csv().unwrap();
    c.workers = 8;
    let eight = compute(&c).unwrap().csv().unwrap();
    assert_eq!(one, eight);
}

#[test]
fn sigma_adds_bound_column_and_metadata() {
    let mut c = small_heat_config(4, 1.0);
    c.estimate_sigma = true;
    let r = compute(&c).unwrap();
    let sigma = r.sigma.unwrap();
    assert!(sigma.converged);
    let csv = r.csv().unwrap();
    assert!(csv.starts_with("k,defect,bound\n"));
    let meta = r.metadata();
    assert!(meta.contains(&format!("sigma_max = {:?}", sigma.sigma)));
    for key in ["w = 0.2", "delta_a = 1.0", "slices = 4", "h_min = ", "dofs = ", "config_json = "] {
        assert!(meta.contains(key), "missing {key}");
    }
}

#[test]
fn writes_csv_and_metadata_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_heat_config(3, 100.0);
    c.output = dir.path().join("nested");
    let (r, csv, meta) = run_experiment(&c).unwrap();
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), r.csv().unwrap());
    assert!(meta.file_name().unwrap().to_str().unwrap().ends_with(".meta.txt"));
    let json_line = std::fs::read_to_string(&meta)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix("config_json = ").map(str::to_owned))
        .unwrap();
    let back: ExperimentConfig = serde_json::from_str(&json_line).unwrap();
    assert_eq!(back, c);
}

#[test]
fn config_file_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let c = small_heat_config(4, 100.0);
    std::fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    assert_eq!(ExperimentConfig::from_json_file(&path).unwrap(), c);

    let mut bad = c.clone();
    bad.coarse_dt = 0.03;
    assert!(compute(&bad).is_err());
    let mut bad = c.clone();
    bad.nu = "sine".into();
    assert!(compute(&bad).is_err());
    let mut bad = c;
    bad.estimate_sigma = true;
    bad.nu = "cosine".into();
    assert!(compute(&bad).is_err());
    assert!(ExperimentConfig::from_json_file(&dir.path().join("missing.json")).is_err());
}

#[test]
fn presets_are_complete_and_valid() {
    assert_eq!(preset("fig1").unwrap().len(), 6);
    assert_eq!(preset("fig2").unwrap().len(), 6);
    assert_eq!(preset("fig3").unwrap().len(), 2);
    assert!(preset("fig4").is_err());
    for name in ["fig1", "fig2", "fig3"] {
        for c in preset(name).unwrap() {
            c.validate().unwrap();
            assert_eq!(c.preset.as_deref(), Some(name));
        }
    }
}
