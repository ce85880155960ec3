mod common;

use std::fs;

use common::{dpshare, quick_config, write_cardio};
use dpshare_bench::compare::compare_pair;
use dpshare_bench::report::{CellOutcome, RunMode};
use dpshare_bench::{cmd_report, cmd_run, cmd_simulate, Placement, RunConfig};
use dpshare_core::classifiers::ClassifierKind;
use dpshare_core::evaluation::{MetricPoint, TestOutcome};

#[test]
fn missing_dataset_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().to_str().unwrap();
    let out = dpshare(&["run", "--data-dir", data, "--datasets", "heart-disease", "--out-dir", data]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not found"), "{err}");
}

#[test]
fn unknown_config_field_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "seeds = [0]\nnot_a_field = 1\n").unwrap();
    let out = dpshare(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = dpshare(&["run", "--placement", "everywhere"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_is_complete_and_gaps_recompute_from_cells() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 150, 1);
    let cfg = quick_config(dir.path(), &dir.path().join("out"));
    let report = cmd_run(cfg).unwrap();
    assert_eq!(report.cells.len(), 5 * 3 * 3);
    assert!(dir.path().join("out/report.json").is_file());
    assert!(dir.path().join("out/gaps.csv").is_file());

    let mean = |c: ClassifierKind, p: Placement| {
        let pts: Vec<MetricPoint> = report
            .cells
            .iter()
            .filter(|x| x.classifier == c && x.placement == p)
            .filter_map(|x| x.point())
            .collect();
        let n = pts.len() as f64;
        pts.iter().fold(MetricPoint::default(), |acc, q| MetricPoint {
            ca: acc.ca + q.ca / n,
            p: acc.p + q.p / n,
            r: acc.r + q.r / n,
            fs: acc.fs + q.fs / n,
        })
    };
    assert_eq!(report.gaps.len(), 2);
    for table in &report.gaps {
        assert_eq!(table.rows.len(), 5);
        for row in &table.rows {
            let want = mean(row.classifier, table.minuend).minus(&mean(row.classifier, table.subtrahend));
            let got = row.gap.unwrap();
            for (a, b) in [(got.ca, want.ca), (got.p, want.p), (got.r, want.r), (got.fs, want.fs)] {
                assert!((a - b).abs() < 1e-12, "{}: {a} vs {b}", table.name);
            }
        }
    }
    assert_eq!(report.wilcoxon.len(), 2);
    assert!(report.wilcoxon.iter().all(|t| t.cells.len() == 4));
}

#[test]
fn disabled_noise_makes_ppmd_identical_to_clean() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 120, 2);
    let mut cfg = quick_config(dir.path(), &dir.path().join("out"));
    cfg.noise.enabled = false;
    cfg.placements = vec![Placement::Clean, Placement::Ppmd];
    let report = cmd_run(cfg).unwrap();
    let of = |p: Placement| {
        report.cells.iter().filter(|c| c.placement == p).map(|c| c.outcome.clone()).collect::<Vec<_>>()
    };
    assert_eq!(of(Placement::Clean), of(Placement::Ppmd));
    for t in &report.wilcoxon {
        assert!(t.cells.iter().all(|c| matches!(c.outcome, TestOutcome::Undefined { .. })));
    }
}

#[test]
fn divergence_becomes_a_failed_cell() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 100, 3);
    let mut cfg = quick_config(dir.path(), &dir.path().join("out"));
    cfg.hyperparameters.ann.learning_rate = 1e200;
    cfg.placements = vec![Placement::Clean];
    let report = cmd_run(cfg).unwrap();
    assert_eq!(report.cells.len(), 5 * 3);
    for c in &report.cells {
        match (&c.outcome, c.classifier) {
            (CellOutcome::Failed { error }, ClassifierKind::Ann) => assert!(error.contains("diverged"), "{error}"),
            (CellOutcome::Ok { .. }, k) => assert_ne!(k, ClassifierKind::Ann),
            (o, k) => panic!("{k}: {o:?}"),
        }
    }
    let ann = report.aggregates.iter().find(|a| a.classifier == ClassifierKind::Ann).unwrap();
    assert_eq!((ann.n_ok, ann.n_failed, ann.mean), (0, 3, None));
}

#[test]
fn snapshot_is_fully_resolved() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 80, 4);
    let mut cfg = quick_config(dir.path(), &dir.path().join("out"));
    cfg.classifiers = vec![ClassifierKind::Nb];
    cmd_run(cfg).unwrap();
    let text = fs::read_to_string(dir.path().join("out/config.json")).unwrap();
    let snap: RunConfig = serde_json::from_str(&text).unwrap();
    let d = &snap.datasets[0];
    assert_eq!(d.name.as_deref(), Some("cardio"));
    assert!(d.header.is_some() && d.missing_markers.is_some() && d.partition.is_some());
    assert!(snap.data_dir.is_some());
    let mut again = snap.clone();
    again.resolve().unwrap();
    assert_eq!(again, snap);
    // every knob appears explicitly
    for key in ["\"noise\"", "\"hyperparameters\"", "\"split_fraction\": \"9/10\"", "\"averaging\"", "\"alpha\""] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn one_owner_protocol_equals_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 120, 5);
    let direct = cmd_run(quick_config(dir.path(), &dir.path().join("direct"))).unwrap();
    let mut cfg = quick_config(dir.path(), &dir.path().join("sim"));
    cfg.owners = 1;
    let sim = cmd_simulate(cfg).unwrap();
    assert_eq!(sim.cells, direct.cells);
    assert_eq!(sim.aggregates, direct.aggregates);
    assert_eq!(sim.gaps, direct.gaps);
    assert_eq!(sim.wilcoxon, direct.wilcoxon);
}

#[test]
fn three_owner_traces_are_clean_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 150, 6);
    let run = |name: &str| {
        let mut cfg = quick_config(dir.path(), &dir.path().join(name));
        cfg.classifiers = vec![ClassifierKind::Svm, ClassifierKind::Nb];
        cmd_simulate(cfg).unwrap()
    };
    let a = run("a");
    let b = run("b");
    let RunMode::Protocol { owners, runs, .. } = &a.mode else { panic!("direct mode") };
    assert_eq!(*owners, 3);
    assert_eq!(runs.len(), 3 * 3);
    for r in runs {
        let leak = r.leakage.as_ref().unwrap();
        // clean uploads are raw by design; every noised placement must scan clean
        assert_eq!(leak.is_clean(), r.placement != Placement::Clean, "{r:?}");
        let ta = fs::read(dir.path().join("a").join(&r.trace)).unwrap();
        let tb = fs::read(dir.path().join("b").join(&r.trace)).unwrap();
        assert!(!ta.is_empty());
        assert_eq!(ta, tb);
    }
    assert_eq!(a.cells, b.cells);
}

#[test]
fn self_comparison_has_zero_gaps_and_undefined_tests() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 100, 7);
    cmd_run(quick_config(dir.path(), &dir.path().join("out"))).unwrap();
    let report = dir.path().join("out/report.json");
    let summary = cmd_report(&[report.clone(), report], None, &dir.path().join("cmp")).unwrap();
    let pair = &summary.comparisons[0];
    assert_eq!(pair.placements.len(), 3);
    for p in &pair.placements {
        assert!(p.gaps.rows.iter().all(|r| r.gap == Some(MetricPoint::default())));
        assert!(p.wilcoxon.iter().all(|c| matches!(c.outcome, TestOutcome::Undefined { .. })));
    }
    assert!(dir.path().join("cmp/comparison_wilcoxon.csv").is_file());
}

#[test]
fn clean_against_ppmd_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 120, 8);
    let data = dir.path().to_str().unwrap().to_owned();
    let cfg_path = dir.path().join("run.json");
    let cfg = quick_config(dir.path(), &dir.path().join("unused"));
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    for p in ["clean", "ppmd"] {
        let out_dir = format!("{data}/{p}");
        let out = dpshare(&["run", "--config", cfg_path.to_str().unwrap(), "--placement", p, "--out-dir", &out_dir]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (c, p) = (format!("{data}/clean/report.json"), format!("{data}/ppmd/report.json"));
    let out = dpshare(&["report", &c, &p, "--out-dir", &format!("{data}/cmp")]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("cmp/comparison.json")).unwrap();
    let summary: dpshare_bench::compare::ComparisonSummary = serde_json::from_str(&text).unwrap();
    let pc = &summary.comparisons[0].placements[0];
    assert_eq!((pc.a_placement, pc.b_placement), (Placement::Clean, Placement::Ppmd));
    assert_eq!(pc.gaps.rows.len(), 5);
    for r in &pc.gaps.rows {
        let g = r.gap.unwrap();
        assert!([g.ca, g.p, g.r, g.fs].iter().all(|v| v.is_finite()));
    }

    // a full report cannot be paired with a single-placement one
    let full = dir.path().join("full");
    let mut cfg = quick_config(dir.path(), &full);
    cfg.classifiers = vec![ClassifierKind::Nb];
    cmd_run(cfg).unwrap();
    let out = dpshare(&["report", &c, full.join("report.json").to_str().unwrap(), "--out-dir", &data]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn five_same_signed_gaps_give_p_0043() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 100, 9);
    let mut cfg = quick_config(dir.path(), &dir.path().join("out"));
    cfg.placements = vec![Placement::Clean];
    let a = cmd_run(cfg).unwrap();
    let mut b = a.clone();
    for (i, agg) in b.aggregates.iter_mut().enumerate() {
        let m = agg.mean.as_mut().unwrap();
        m.ca -= 0.01 * (i + 1) as f64;
    }
    let pair = compare_pair(("a", &a), ("b", &b), 0.05).unwrap();
    let ca = pair.placements[0].wilcoxon.iter().find(|c| c.metric.to_string() == "CA").unwrap();
    let TestOutcome::Tested(r) = &ca.outcome else { panic!("undefined") };
    assert_eq!(r.n_effective, 5);
    assert!((r.p_value - 0.043).abs() < 1e-3, "{}", r.p_value);
}

#[test]
fn partition_and_noise_commands_write_owner_side_files() {
    let dir = tempfile::tempdir().unwrap();
    write_cardio(dir.path(), 60, 10);
    let cfg_path = dir.path().join("run.json");
    let cfg = quick_config(dir.path(), &dir.path().join("out"));
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dpshare(&["partition", "--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let part = dir.path().join("out/partition/cardio");
    let sensitive = fs::read_to_string(part.join("sensitive.csv")).unwrap();
    assert!(sensitive.starts_with("age,sex\n"));
    assert_eq!(sensitive.lines().count(), 61);
    let manifest = dpshare_core::dataset::Manifest::load(part.join("manifest.json")).unwrap();
    assert!(manifest.partition.is_some());

    let out = dpshare(&["noise", "--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success());
    let noise = dir.path().join("out/noise/cardio");
    let log = fs::read_to_string(noise.join("noise_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 61);
    assert!(noise.join("sanitized.csv").is_file());

    let out = dpshare(&["inspect", "--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("cardio: 60 rows"));
}
