use std::fs;
use std::path::Path;

use dpshare_core::classifiers::ClassifierKind;
use dpshare_core::evaluation::{compare_grids, ComparisonCell, MetricGrid, MetricPoint, MetricsReport, TestOutcome};
use dpshare_core::partition::PartitionSpec;
use dpshare_core::protocol::Schedule;
use serde::{Deserialize, Serialize};

use crate::config::{Placement, RunConfig};
use crate::error::{BenchError, Result};
use crate::grid::{LoadedDataset, ProtocolRun};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok { metrics: MetricsReport },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub placement: Placement,
    pub seed: u64,
    pub outcome: CellOutcome,
}

impl Cell {
    pub fn point(&self) -> Option<MetricPoint> {
        match &self.outcome {
            CellOutcome::Ok { metrics } => Some(metrics.into()),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub source: Option<String>,
    pub sha256: String,
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
    pub label_levels: Vec<String>,
    pub class_counts: Vec<usize>,
    pub imputed_cells: usize,
    pub partition: PartitionSpec,
}

impl DatasetSummary {
    pub fn of(ds: &LoadedDataset) -> Self {
        let data = ds.data();
        let m = &ds.loaded.manifest;
        DatasetSummary {
            name: ds.name().to_owned(),
            source: m.source.clone(),
            sha256: m.source_sha256.clone(),
            rows: data.len(),
            features: data.n_features(),
            classes: data.n_classes(),
            label_levels: data.schema().label().levels.clone(),
            class_counts: data.class_counts(),
            imputed_cells: m.imputations.iter().map(|i| i.filled).sum(),
            partition: ds.config.partition_spec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementInfo {
    pub placement: Placement,
    pub description: String,
}

/// Mean and sample standard deviation over the successful seeds of one
/// (dataset, classifier, placement).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub placement: Placement,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean: Option<MetricPoint>,
    pub std: Option<MetricPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub dataset: String,
    pub classifier: ClassifierKind,
    /// Minuend mean minus subtrahend mean; absent when either has no
    /// successful cell.
    pub gap: Option<MetricPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub name: String,
    pub minuend: Placement,
    pub subtrahend: Placement,
    pub rows: Vec<GapRow>,
}

/// Signed-rank tests pairing two placements classifier by classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonTable {
    pub name: String,
    pub a: Placement,
    pub b: Placement,
    pub cells: Vec<ComparisonCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunMode {
    Direct,
    Protocol { owners: usize, schedule: Schedule, runs: Vec<ProtocolRun> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub mode: RunMode,
    pub config: RunConfig,
    pub placements: Vec<PlacementInfo>,
    pub datasets: Vec<DatasetSummary>,
    pub cells: Vec<Cell>,
    pub aggregates: Vec<Aggregate>,
    pub gaps: Vec<GapTable>,
    pub wilcoxon: Vec<WilcoxonTable>,
}

const PAIRS: [(Placement, Placement); 2] = [(Placement::Clean, Placement::Ppmd), (Placement::Ppmd, Placement::All)];

fn sample_std(points: &[MetricPoint], mean: &MetricPoint) -> MetricPoint {
    if points.len() < 2 {
        return MetricPoint::default();
    }
    let k = (points.len() - 1) as f64;
    let sd = |f: fn(&MetricPoint) -> f64| {
        let m = f(mean);
        (points.iter().map(|p| (f(p) - m).powi(2)).sum::<f64>() / k).sqrt()
    };
    MetricPoint { ca: sd(|p| p.ca), p: sd(|p| p.p), r: sd(|p| p.r), fs: sd(|p| p.fs) }
}

pub fn aggregate(cfg: &RunConfig, cells: &[Cell]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for d in &cfg.datasets {
        for &classifier in &cfg.classifiers {
            for &placement in &cfg.placements {
                let group: Vec<&Cell> = cells
                    .iter()
                    .filter(|c| c.dataset == d.name() && c.classifier == classifier && c.placement == placement)
                    .collect();
                let points: Vec<MetricPoint> = group.iter().filter_map(|c| c.point()).collect();
                let mean = MetricPoint::mean(&points);
                let std = mean.as_ref().map(|m| sample_std(&points, m));
                out.push(Aggregate {
                    dataset: d.name().to_owned(),
                    classifier,
                    placement,
                    n_ok: points.len(),
                    n_failed: group.len() - points.len(),
                    mean,
                    std,
                });
            }
        }
    }
    out
}

fn mean_of(aggs: &[Aggregate], dataset: &str, classifier: ClassifierKind, placement: Placement) -> Option<MetricPoint> {
    aggs.iter()
        .find(|a| a.dataset == dataset && a.classifier == classifier && a.placement == placement)
        .and_then(|a| a.mean)
}

fn gap_tables(cfg: &RunConfig, aggs: &[Aggregate]) -> Vec<GapTable> {
    PAIRS
        .iter()
        .filter(|(a, b)| cfg.placements.contains(a) && cfg.placements.contains(b))
        .map(|&(a, b)| {
            let mut rows = Vec::new();
            for d in &cfg.datasets {
                for &c in &cfg.classifiers {
                    let gap = match (mean_of(aggs, d.name(), c, a), mean_of(aggs, d.name(), c, b)) {
                        (Some(x), Some(y)) => Some(x.minus(&y)),
                        _ => None,
                    };
                    rows.push(GapRow { dataset: d.name().to_owned(), classifier: c, gap });
                }
            }
            GapTable { name: format!("{a}_minus_{b}"), minuend: a, subtrahend: b, rows }
        })
        .collect()
}

/// Grids of means for two placements, restricted to keys both define.
pub fn paired_grids(
    a: impl Fn(&str, ClassifierKind) -> Option<MetricPoint>,
    b: impl Fn(&str, ClassifierKind) -> Option<MetricPoint>,
    keys: &[(String, ClassifierKind)],
) -> (MetricGrid, MetricGrid) {
    let mut ga = MetricGrid::new();
    let mut gb = MetricGrid::new();
    for (d, c) in keys {
        if let (Some(x), Some(y)) = (a(d, *c), b(d, *c)) {
            ga.insert((d.clone(), c.to_string()), x);
            gb.insert((d.clone(), c.to_string()), y);
        }
    }
    (ga, gb)
}

fn wilcoxon_tables(cfg: &RunConfig, aggs: &[Aggregate]) -> Result<Vec<WilcoxonTable>> {
    let keys: Vec<(String, ClassifierKind)> = cfg
        .datasets
        .iter()
        .flat_map(|d| cfg.classifiers.iter().map(move |c| (d.name().to_owned(), *c)))
        .collect();
    let mut out = Vec::new();
    for &(a, b) in PAIRS.iter().filter(|(a, b)| cfg.placements.contains(a) && cfg.placements.contains(b)) {
        let (ga, gb) = paired_grids(|d, c| mean_of(aggs, d, c, a), |d, c| mean_of(aggs, d, c, b), &keys);
        out.push(WilcoxonTable { name: format!("{a}_vs_{b}"), a, b, cells: compare_grids(&ga, &gb, cfg.alpha)? });
    }
    Ok(out)
}

impl BenchReport {
    pub fn assemble(cfg: &RunConfig, data: &[LoadedDataset], cells: Vec<Cell>, mode: RunMode) -> Result<Self> {
        let aggregates = aggregate(cfg, &cells);
        Ok(BenchReport {
            format_version: REPORT_VERSION,
            mode,
            config: cfg.clone(),
            placements: cfg
                .placements
                .iter()
                .map(|&p| PlacementInfo { placement: p, description: p.description().to_owned() })
                .collect(),
            datasets: data.iter().map(DatasetSummary::of).collect(),
            gaps: gap_tables(cfg, &aggregates),
            wilcoxon: wilcoxon_tables(cfg, &aggregates)?,
            aggregates,
            cells,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let report: BenchReport = serde_json::from_str(&text)?;
        if report.format_version != REPORT_VERSION {
            return Err(BenchError::Input(format!(
                "{}: report format {} is not supported",
                path.display(),
                report.format_version
            )));
        }
        Ok(report)
    }

    /// `report.json`, `config.json` and the derived CSV tables.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
        write_file(&out_dir.join("report.json"), self.to_json()?)?;
        write_file(&out_dir.join("config.json"), self.config.to_json()? + "\n")?;
        write_file(&out_dir.join("cells.csv"), self.cells_csv()?)?;
        write_file(&out_dir.join("aggregates.csv"), self.aggregates_csv()?)?;
        write_file(&out_dir.join("gaps.csv"), gaps_csv(&self.gaps)?)?;
        let tables: Vec<(String, String, &[ComparisonCell])> = self
            .wilcoxon
            .iter()
            .map(|t| (t.a.to_string(), t.b.to_string(), t.cells.as_slice()))
            .collect();
        write_file(&out_dir.join("wilcoxon.csv"), wilcoxon_csv(&tables)?)?;
        Ok(())
    }

    fn cells_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "classifier", "placement", "seed", "status", "ca", "p", "r", "fs", "error"])?;
        for c in &self.cells {
            let mut row = vec![c.dataset.clone(), c.classifier.to_string(), c.placement.to_string(), c.seed.to_string()];
            match &c.outcome {
                CellOutcome::Ok { metrics } => {
                    row.push("ok".into());
                    row.extend(point_fields(Some(&metrics.into())));
                    row.push(String::new());
                }
                CellOutcome::Failed { error } => {
                    row.push("failed".into());
                    row.extend(point_fields(None));
                    row.push(error.clone());
                }
            }
            w.write_record(&row)?;
        }
        finish(w)
    }

    fn aggregates_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset", "classifier", "placement", "n_ok", "n_failed", "ca", "p", "r", "fs", "ca_std", "p_std",
            "r_std", "fs_std",
        ])?;
        for a in &self.aggregates {
            let mut row = vec![
                a.dataset.clone(),
                a.classifier.to_string(),
                a.placement.to_string(),
                a.n_ok.to_string(),
                a.n_failed.to_string(),
            ];
            row.extend(point_fields(a.mean.as_ref()));
            row.extend(point_fields(a.std.as_ref()));
            w.write_record(&row)?;
        }
        finish(w)
    }
}

fn write_file(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

fn point_fields(p: Option<&MetricPoint>) -> [String; 4] {
    match p {
        Some(p) => [p.ca, p.p, p.r, p.fs].map(|v| v.to_string()),
        None => Default::default(),
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| BenchError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Input(e.to_string()))
}

pub(crate) fn gaps_csv(tables: &[GapTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["table", "dataset", "classifier", "ca", "p", "r", "fs"])?;
    for t in tables {
        for r in &t.rows {
            let mut row = vec![t.name.clone(), r.dataset.clone(), r.classifier.to_string()];
            row.extend(point_fields(r.gap.as_ref()));
            w.write_record(&row)?;
        }
    }
    finish(w)
}

/// One row per test; `tables` holds (first, second, cells).
pub(crate) fn wilcoxon_csv(tables: &[(String, String, &[ComparisonCell])]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "a", "b", "dataset", "metric", "status", "n", "statistic", "z", "p_value", "exact_p_value", "reject",
        "reason",
    ])?;
    for (a, b, cells) in tables {
        for c in *cells {
            let mut row = vec![a.clone(), b.clone(), c.dataset.clone(), c.metric.to_string()];
            match &c.outcome {
                TestOutcome::Tested(r) => row.extend([
                    "tested".to_string(),
                    r.n_effective.to_string(),
                    r.statistic.to_string(),
                    r.z.to_string(),
                    r.p_value.to_string(),
                    r.exact_p_value.map(|p| p.to_string()).unwrap_or_default(),
                    r.reject.to_string(),
                    String::new(),
                ]),
                TestOutcome::Undefined { reason } => {
                    row.extend(["undefined".to_string()]);
                    row.extend(std::iter::repeat_n(String::new(), 6));
                    row.push(reason.clone());
                }
            }
            w.write_record(&row)?;
        }
    }
    finish(w)
}
