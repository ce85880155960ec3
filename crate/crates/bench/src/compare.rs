//! Cross-report comparison: gap and signed-rank tables between saved runs.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use dpshare_core::classifiers::ClassifierKind;
use dpshare_core::evaluation::{compare_grids, ComparisonCell, MetricPoint};
use dpshare_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::config::Placement;
use crate::error::{BenchError, Result};
use crate::report::{gaps_csv, paired_grids, wilcoxon_csv, BenchReport, GapRow, GapTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementComparison {
    pub a_placement: Placement,
    pub b_placement: Placement,
    /// First report's mean minus the second's.
    pub gaps: GapTable,
    pub wilcoxon: Vec<ComparisonCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: String,
    pub b: String,
    pub placements: Vec<PlacementComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub alpha: f64,
    pub inputs: Vec<String>,
    pub comparisons: Vec<PairComparison>,
}

/// Matching placements pair with each other; two single-placement reports
/// pair their only placements (e.g. a clean run against a noised one).
fn placement_pairs(a: &BenchReport, b: &BenchReport) -> Result<Vec<(Placement, Placement)>> {
    let pa: BTreeSet<Placement> = a.config.placements.iter().copied().collect();
    let pb: BTreeSet<Placement> = b.config.placements.iter().copied().collect();
    if pa == pb {
        Ok(a.config.placements.iter().map(|&p| (p, p)).collect())
    } else if pa.len() == 1 && pb.len() == 1 {
        Ok(vec![(a.config.placements[0], b.config.placements[0])])
    } else {
        Err(CoreError::GridMismatch(format!(
            "placements [{}] and [{}] cannot be paired",
            a.config.placements.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", "),
            b.config.placements.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ")
        ))
        .into())
    }
}

fn means(r: &BenchReport, placement: Placement) -> Vec<((String, ClassifierKind), MetricPoint)> {
    r.aggregates
        .iter()
        .filter(|a| a.placement == placement)
        .filter_map(|a| a.mean.map(|m| ((a.dataset.clone(), a.classifier), m)))
        .collect()
}

fn lookup(v: &[((String, ClassifierKind), MetricPoint)], d: &str, c: ClassifierKind) -> Option<MetricPoint> {
    v.iter().find(|((x, y), _)| x == d && *y == c).map(|(_, m)| *m)
}

pub fn compare_pair(a: (&str, &BenchReport), b: (&str, &BenchReport), alpha: f64) -> Result<PairComparison> {
    let mut placements = Vec::new();
    for (pa, pb) in placement_pairs(a.1, b.1)? {
        let ma = means(a.1, pa);
        let mb = means(b.1, pb);
        let ka: BTreeSet<_> = ma.iter().map(|(k, _)| k.clone()).collect();
        let kb: BTreeSet<_> = mb.iter().map(|(k, _)| k.clone()).collect();
        if ka != kb || ka.is_empty() {
            return Err(CoreError::GridMismatch(format!(
                "{} ({pa}) and {} ({pb}) do not cover the same (dataset, classifier) cells",
                a.0, b.0
            ))
            .into());
        }
        let keys: Vec<_> = ma.iter().map(|(k, _)| k.clone()).collect();
        let rows = keys
            .iter()
            .map(|(d, c)| GapRow {
                dataset: d.clone(),
                classifier: *c,
                gap: Some(lookup(&ma, d, *c).unwrap_or_default().minus(&lookup(&mb, d, *c).unwrap_or_default())),
            })
            .collect();
        let (ga, gb) = paired_grids(|d, c| lookup(&ma, d, c), |d, c| lookup(&mb, d, c), &keys);
        placements.push(PlacementComparison {
            a_placement: pa,
            b_placement: pb,
            gaps: GapTable { name: format!("{pa}_minus_{pb}"), minuend: pa, subtrahend: pb, rows },
            wilcoxon: compare_grids(&ga, &gb, alpha)?,
        });
    }
    Ok(PairComparison { a: a.0.to_owned(), b: b.0.to_owned(), placements })
}

/// Compares the first report against each of the others.
pub fn compare_reports(reports: &[(String, BenchReport)], alpha: f64) -> Result<ComparisonSummary> {
    if reports.len() < 2 {
        return Err(BenchError::Input("`report` needs at least two reports".into()));
    }
    let (first, rest) = reports.split_first().expect("non-empty");
    let comparisons = rest
        .iter()
        .map(|(name, r)| compare_pair((&first.0, &first.1), (name, r), alpha))
        .collect::<Result<_>>()?;
    Ok(ComparisonSummary { alpha, inputs: reports.iter().map(|(n, _)| n.clone()).collect(), comparisons })
}

impl ComparisonSummary {
    /// `comparison.json`, `comparison_gaps.csv` and `comparison_wilcoxon.csv`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
        let json = serde_json::to_string_pretty(self)? + "\n";
        let path = out_dir.join("comparison.json");
        fs::write(&path, json).map_err(|e| BenchError::io(&path, e))?;

        let mut gaps = Vec::new();
        let mut tests = Vec::new();
        for pair in &self.comparisons {
            for p in &pair.placements {
                let mut t = p.gaps.clone();
                t.name = format!("{}:{} - {}:{}", pair.a, p.a_placement, pair.b, p.b_placement);
                gaps.push(t);
                tests.push((format!("{}:{}", pair.a, p.a_placement), format!("{}:{}", pair.b, p.b_placement), p.wilcoxon.as_slice()));
            }
        }
        let path = out_dir.join("comparison_gaps.csv");
        fs::write(&path, gaps_csv(&gaps)?).map_err(|e| BenchError::io(&path, e))?;
        let path = out_dir.join("comparison_wilcoxon.csv");
        fs::write(&path, wilcoxon_csv(&tests)?).map_err(|e| BenchError::io(&path, e))?;
        Ok(())
    }
}
