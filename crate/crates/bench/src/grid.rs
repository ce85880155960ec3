//! Cell coordinates, per-cell seeds and the two ways of executing a grid:
//! directly through the pipeline, or through the owner/CSP protocol.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use dpshare_core::classifiers::ClassifierKind;
use dpshare_core::dataset::{Dataset, Loaded};
use dpshare_core::partition::{partition, PartitionSpec};
use dpshare_core::pipeline::{self, TrainSpec};
use dpshare_core::privacy::{privatize, NoiseConfig};
use dpshare_core::protocol::{LeakageReport, OwnerState, Simulation};
use dpshare_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetConfig, Placement, RunConfig};
use crate::error::{BenchError, Result};
use crate::report::{Cell, CellOutcome};

pub struct LoadedDataset {
    pub config: DatasetConfig,
    pub loaded: Loaded<f64>,
}

impl LoadedDataset {
    pub fn name(&self) -> &str {
        self.config.name()
    }

    pub fn data(&self) -> &Dataset<f64> {
        &self.loaded.dataset
    }
}

/// Loads every dataset of a resolved config, failing on the first one missing.
pub fn load_all(cfg: &RunConfig) -> Result<Vec<LoadedDataset>> {
    let dir = cfg.data_dir();
    cfg.datasets
        .iter()
        .map(|d| Ok(LoadedDataset { config: d.clone(), loaded: d.load(&dir)? }))
        .collect()
}

fn dataset_key(name: &str) -> u64 {
    let bytes: Vec<u64> = name.bytes().map(u64::from).collect();
    derive_seed(0, &bytes)
}

fn classifier_index(kind: ClassifierKind) -> u64 {
    ClassifierKind::ALL.iter().position(|k| *k == kind).unwrap_or(0) as u64
}

/// Shared by every classifier and placement of a replicate, so cells differ
/// only in what is being compared.
pub fn split_seed(cfg: &RunConfig, dataset: &str, seed: u64) -> u64 {
    derive_seed(cfg.master_seed, &[dataset_key(dataset), seed, 0])
}

/// Noise stream of one owner. A direct run is owner 0.
pub fn noise_seed(cfg: &RunConfig, dataset: &str, seed: u64, owner: usize) -> u64 {
    derive_seed(cfg.master_seed, &[dataset_key(dataset), seed, 1, cfg.noise.seed, owner as u64])
}

pub fn model_seed(cfg: &RunConfig, dataset: &str, seed: u64, kind: ClassifierKind) -> u64 {
    derive_seed(cfg.master_seed, &[dataset_key(dataset), seed, 2, classifier_index(kind)])
}

pub fn train_spec(cfg: &RunConfig, dataset: &str, seed: u64, kind: ClassifierKind) -> TrainSpec {
    TrainSpec {
        classifier: kind,
        config: cfg.hyperparameters.clone(),
        fraction: cfg.split_fraction,
        stratified: cfg.stratified,
        split_seed: split_seed(cfg, dataset, seed),
        model_seed: model_seed(cfg, dataset, seed, kind),
    }
}

/// Partition and noise settings of a placement.
pub fn placement_setup(
    cfg: &RunConfig,
    ds: &DatasetConfig,
    data: &Dataset<f64>,
    placement: Placement,
) -> (PartitionSpec, NoiseConfig) {
    match placement {
        Placement::Clean => (ds.partition_spec(), NoiseConfig { enabled: false, ..cfg.noise.clone() }),
        Placement::Ppmd => (ds.partition_spec(), cfg.noise.clone()),
        Placement::All => (
            PartitionSpec::Column { sensitive_columns: data.schema().feature_names() },
            cfg.noise.clone(),
        ),
    }
}

/// What a single owner holding the whole table would upload.
pub fn sanitized(cfg: &RunConfig, ds: &LoadedDataset, placement: Placement, seed: u64) -> Result<Dataset<f64>> {
    let (spec, noise) = placement_setup(cfg, &ds.config, ds.data(), placement);
    let pd = partition(ds.data(), &spec)?;
    Ok(privatize(&pd, &noise, noise_seed(cfg, ds.name(), seed, 0))?.data)
}

#[derive(Debug, Clone, Copy)]
struct Coord {
    dataset: usize,
    classifier: ClassifierKind,
    placement: Placement,
    seed: u64,
}

/// Canonical cell order: dataset, classifier, placement, seed.
fn coords(cfg: &RunConfig) -> Vec<Coord> {
    let mut out = Vec::new();
    for dataset in 0..cfg.datasets.len() {
        for &classifier in &cfg.classifiers {
            for &placement in &cfg.placements {
                for &seed in &cfg.seeds {
                    out.push(Coord { dataset, classifier, placement, seed });
                }
            }
        }
    }
    out
}

fn cell(ds: &LoadedDataset, c: &Coord, outcome: CellOutcome) -> Cell {
    Cell { dataset: ds.name().to_owned(), classifier: c.classifier, placement: c.placement, seed: c.seed, outcome }
}

fn outcome(r: dpshare_core::Result<dpshare_core::evaluation::MetricsReport>) -> CellOutcome {
    match r {
        Ok(metrics) => CellOutcome::Ok { metrics },
        Err(e) => CellOutcome::Failed { error: e.to_string() },
    }
}

/// Every cell through the plain pipeline. Training failures become failed
/// cells; nothing is dropped.
pub fn run_direct(cfg: &RunConfig, data: &[LoadedDataset]) -> Vec<Cell> {
    coords(cfg)
        .par_iter()
        .map(|c| {
            let ds = &data[c.dataset];
            let averaging = cfg.averaging.resolve(ds.data().n_classes());
            let result = sanitized(cfg, ds, c.placement, c.seed).and_then(|noisy| {
                let spec = train_spec(cfg, ds.name(), c.seed, c.classifier);
                let fitted = pipeline::fit(&noisy, &spec)?;
                Ok(pipeline::score(&noisy, &fitted, averaging)?)
            });
            let o = match result {
                Ok(m) => CellOutcome::Ok { metrics: m },
                Err(e) => CellOutcome::Failed { error: e.to_string() },
            };
            cell(ds, c, o)
        })
        .collect()
}

/// One protocol execution: the owners of a (dataset, placement, seed) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub dataset: String,
    pub placement: Placement,
    pub seed: u64,
    pub owners: usize,
    /// Trace file, relative to the output directory.
    pub trace: String,
    pub leakage: Option<LeakageReport>,
    pub error: Option<String>,
}

/// Row ranges dealt to `owners` owners in contiguous, near-equal blocks.
pub fn shards(n: usize, owners: usize) -> Vec<Vec<usize>> {
    (0..owners).map(|i| (i * n / owners..(i + 1) * n / owners).collect()).collect()
}

pub fn build_owners(
    cfg: &RunConfig,
    ds: &LoadedDataset,
    placement: Placement,
    seed: u64,
    owners: usize,
) -> Vec<OwnerState<f64>> {
    let (spec, noise) = placement_setup(cfg, &ds.config, ds.data(), placement);
    shards(ds.data().len(), owners)
        .into_iter()
        .enumerate()
        .map(|(i, rows)| {
            let noise = noise.clone().with_seed(noise_seed(cfg, ds.name(), seed, i));
            OwnerState::new(i, ds.data().subset(&rows), spec.clone(), noise)
        })
        .collect()
}

struct Group {
    dataset: usize,
    placement: Placement,
    seed: u64,
}

/// Every cell through the protocol with `owners` owners. Traces are written
/// under `out_dir/traces`.
pub fn run_protocol(
    cfg: &RunConfig,
    data: &[LoadedDataset],
    owners: usize,
    out_dir: &Path,
) -> Result<(Vec<Cell>, Vec<ProtocolRun>)> {
    let trace_dir = out_dir.join("traces");
    fs::create_dir_all(&trace_dir).map_err(|e| BenchError::io(&trace_dir, e))?;
    let mut groups = Vec::new();
    for dataset in 0..data.len() {
        for &placement in &cfg.placements {
            for &seed in &cfg.seeds {
                groups.push(Group { dataset, placement, seed });
            }
        }
    }
    let results: Vec<Result<(Vec<Cell>, ProtocolRun)>> = groups
        .par_iter()
        .map(|g| {
            let ds = &data[g.dataset];
            let averaging = cfg.averaging.resolve(ds.data().n_classes());
            let rel = format!("traces/{}-{}-{}.jsonl", ds.name(), g.placement, g.seed);
            let mut run = ProtocolRun {
                dataset: ds.name().to_owned(),
                placement: g.placement,
                seed: g.seed,
                owners,
                trace: rel.clone(),
                leakage: None,
                error: None,
            };
            let coord = |classifier| Coord { dataset: g.dataset, classifier, placement: g.placement, seed: g.seed };
            let mut cells = Vec::new();
            let sim = Simulation::new(build_owners(cfg, ds, g.placement, g.seed, owners), cfg.schedule)
                .and_then(|mut sim| sim.upload_round().map(|_| sim));
            match sim {
                Ok(mut sim) => {
                    for &kind in &cfg.classifiers {
                        let spec = train_spec(cfg, ds.name(), g.seed, kind);
                        let r = sim.train(&spec).and_then(|_| sim.csp.evaluate(averaging));
                        cells.push(cell(ds, &coord(kind), outcome(r)));
                    }
                    run.leakage = Some(sim.leakage_scan());
                    let path = out_dir.join(&rel);
                    let file = File::create(&path).map_err(|e| BenchError::io(&path, e))?;
                    sim.trace().write_jsonl(BufWriter::new(file))?;
                }
                Err(e) => {
                    run.error = Some(e.to_string());
                    for &kind in &cfg.classifiers {
                        cells.push(cell(ds, &coord(kind), CellOutcome::Failed { error: e.to_string() }));
                    }
                }
            }
            Ok((cells, run))
        })
        .collect();

    let mut cells = Vec::new();
    let mut runs = Vec::new();
    for r in results {
        let (c, run) = r?;
        cells.extend(c);
        runs.push(run);
    }
    // back to the canonical order used by direct runs
    let rank = |c: &Cell| {
        (
            cfg.datasets.iter().position(|d| d.name() == c.dataset),
            cfg.classifiers.iter().position(|k| *k == c.classifier),
            cfg.placements.iter().position(|p| *p == c.placement),
            cfg.seeds.iter().position(|s| *s == c.seed),
        )
    };
    cells.sort_by_key(rank);
    Ok((cells, runs))
}
