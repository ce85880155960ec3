use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dpshare_core::dataset::{Dataset, Schema};
use dpshare_core::partition::{partition, View};
use dpshare_core::privacy::privatize;

use crate::compare::{compare_reports, ComparisonSummary};
use crate::config::{Placement, RunConfig};
use crate::error::{BenchError, Result};
use crate::grid::{self, noise_seed, placement_setup};
use crate::report::{BenchReport, DatasetSummary, RunMode};

/// Runs the whole grid through the direct pipeline and writes the report
/// to the configured output directory.
pub fn cmd_run(mut cfg: RunConfig) -> Result<BenchReport> {
    cfg.resolve()?;
    let data = grid::load_all(&cfg)?;
    let cells = grid::run_direct(&cfg, &data);
    let report = BenchReport::assemble(&cfg, &data, cells, RunMode::Direct)?;
    report.write(&cfg.out_dir)?;
    Ok(report)
}

/// Runs the grid through the owner/CSP protocol with `cfg.owners` owners.
/// Traces go to `out_dir/traces`.
pub fn cmd_simulate(mut cfg: RunConfig) -> Result<BenchReport> {
    cfg.resolve()?;
    let data = grid::load_all(&cfg)?;
    let (cells, runs) = grid::run_protocol(&cfg, &data, cfg.owners, &cfg.out_dir)?;
    let mode = RunMode::Protocol { owners: cfg.owners, schedule: cfg.schedule, runs };
    let report = BenchReport::assemble(&cfg, &data, cells, mode)?;
    report.write(&cfg.out_dir)?;
    Ok(report)
}

pub fn cmd_report(paths: &[PathBuf], alpha: Option<f64>, out_dir: &Path) -> Result<ComparisonSummary> {
    let reports = paths
        .iter()
        .map(|p| Ok((p.display().to_string(), BenchReport::load(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let alpha = alpha.or_else(|| reports.first().map(|(_, r)| r.config.alpha)).unwrap_or(0.05);
    let summary = compare_reports(&reports, alpha)?;
    summary.write(out_dir)?;
    Ok(summary)
}

fn write_view(path: &Path, view: &View<f64>, schema: &Schema) -> Result<()> {
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let label = schema.label();
    let mut header = view.columns.clone();
    if view.labels.is_some() {
        header.push(label.name.clone());
    }
    w.write_record(&header)?;
    for (i, row) in view.rows.iter().enumerate() {
        let mut out: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = &view.labels {
            out.push(label.levels[labels[i]].clone());
        }
        w.write_record(&out)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))?;
    Ok(())
}

fn write_dataset(path: &Path, ds: &Dataset<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    Ok(ds.write_csv(BufWriter::new(file))?)
}

/// Writes each dataset's sensitive and non-sensitive parts plus a manifest
/// that records how to put them back together.
pub fn cmd_partition(mut cfg: RunConfig) -> Result<Vec<PathBuf>> {
    cfg.resolve()?;
    let data = grid::load_all(&cfg)?;
    let mut dirs = Vec::new();
    for ds in &data {
        let dir = cfg.out_dir.join("partition").join(ds.name());
        fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
        let pd = partition(ds.data(), &ds.config.partition_spec())?;
        write_view(&dir.join("sensitive.csv"), &pd.sensitive, ds.data().schema())?;
        write_view(&dir.join("non_sensitive.csv"), &pd.non_sensitive, ds.data().schema())?;
        let mut manifest = ds.loaded.manifest.clone();
        manifest.partition = Some(pd.record());
        manifest.save(dir.join("manifest.json"))?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Sanitizes each dataset as a single owner would for the first seed of the
/// grid and writes the upload plus the owner-side noise log.
pub fn cmd_noise(mut cfg: RunConfig) -> Result<Vec<PathBuf>> {
    cfg.resolve()?;
    let data = grid::load_all(&cfg)?;
    let seed = cfg.seeds[0];
    let mut dirs = Vec::new();
    for ds in &data {
        let dir = cfg.out_dir.join("noise").join(ds.name());
        fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
        let (spec, noise) = placement_setup(&cfg, &ds.config, ds.data(), Placement::Ppmd);
        let pd = partition(ds.data(), &spec)?;
        let s = privatize(&pd, &noise, noise_seed(&cfg, ds.name(), seed, 0))?;
        write_dataset(&dir.join("sanitized.csv"), &s.data)?;
        let path = dir.join("noise_log.csv");
        let file = File::create(&path).map_err(|e| BenchError::io(&path, e))?;
        s.noise_log.write_csv(BufWriter::new(file))?;
        let mut manifest = ds.loaded.manifest.clone();
        manifest.partition = Some(pd.record());
        manifest.save(dir.join("manifest.json"))?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Resolved config snapshot followed by a summary of every dataset that
/// could be loaded.
pub fn inspect_config(mut cfg: RunConfig) -> Result<String> {
    cfg.resolve()?;
    let mut out = cfg.to_json()? + "\n";
    let dir = cfg.data_dir();
    for d in &cfg.datasets {
        match d.load(&dir) {
            Ok(loaded) => {
                let ds = grid::LoadedDataset { config: d.clone(), loaded };
                let s = DatasetSummary::of(&ds);
                let _ = writeln!(
                    out,
                    "{}: {} rows, {} features, {} classes {:?}, {} imputed cells",
                    s.name, s.rows, s.features, s.classes, s.class_counts, s.imputed_cells
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{}: {e}", d.name());
            }
        }
    }
    Ok(out)
}

/// Mean accuracy table of a saved report.
pub fn inspect_report(path: &Path) -> Result<String> {
    let r = BenchReport::load(path)?;
    let failed = r.cells.iter().filter(|c| c.point().is_none()).count();
    let mut out = format!("{} cells ({} failed)\n", r.cells.len(), failed);
    let _ = writeln!(out, "{:<24} {:<5} {:<6} {:>8} {:>8} {:>8} {:>8}", "dataset", "model", "place", "CA", "P", "R", "FS");
    for a in &r.aggregates {
        match a.mean {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "{:<24} {:<5} {:<6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                    a.dataset, a.classifier.as_str(), a.placement.as_str(), m.ca, m.p, m.r, m.fs
                );
            }
            None => {
                let _ = writeln!(out, "{:<24} {:<5} {:<6} (no successful cells)", a.dataset, a.classifier.as_str(), a.placement.as_str());
            }
        }
    }
    for t in &r.gaps {
        let _ = writeln!(out, "\n{}", t.name);
        for row in &t.rows {
            if let Some(g) = row.gap {
                let _ = writeln!(out, "{:<24} {:<5} CA {:+.4}", row.dataset, row.classifier.as_str(), g.ca);
            }
        }
    }
    Ok(out)
}
