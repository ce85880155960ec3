#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpshare_bench::{DatasetConfig, RunConfig};
use dpshare_core::partition::PartitionSpec;
use dpshare_core::rng;
use rand::Rng;

/// A small cardiology-shaped table with a text `sex` column.
pub fn write_cardio(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut s = rng::stream(seed);
    let mut text = String::from("age,sex,bp,chol,hr,target\n");
    for _ in 0..n {
        let y = s.random_range(0..2u32);
        let shift = y as f64;
        let _ = writeln!(
            text,
            "{},{},{:.1},{:.1},{:.1},{}",
            s.random_range(29..78),
            if s.random::<bool>() { "M" } else { "F" },
            120.0 + 10.0 * shift + s.random_range(-15.0..15.0),
            230.0 + 20.0 * shift + s.random_range(-40.0..40.0),
            160.0 - 20.0 * shift + s.random_range(-20.0..20.0),
            y
        );
    }
    let path = dir.join("cardio.csv");
    fs::write(&path, text).unwrap();
    path
}

pub fn cardio_dataset() -> DatasetConfig {
    DatasetConfig {
        path: Some("cardio.csv".into()),
        label: Some("target".into()),
        partition: Some(PartitionSpec::Column { sensitive_columns: vec!["age".into(), "sex".into()] }),
        ..Default::default()
    }
}

/// Three seeds, a smaller forest and fewer epochs so a grid takes seconds.
pub fn quick_config(data_dir: &Path, out_dir: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        datasets: vec![cardio_dataset()],
        data_dir: Some(data_dir.to_path_buf()),
        seeds: vec![0, 1, 2],
        out_dir: out_dir.to_path_buf(),
        ..RunConfig::default()
    };
    cfg.hyperparameters.rf.n_trees = 20;
    cfg.hyperparameters.ann.epochs = 50;
    cfg
}

pub fn dpshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpshare"))
        .args(args)
        .env_remove("DPSHARE_DATA_DIR")
        .output()
        .expect("binary runs")
}
