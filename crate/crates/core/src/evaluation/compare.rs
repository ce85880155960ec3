use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::metrics::{Metric, MetricsReport};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::error::{Error, Result};

/// The four summary metrics of one grid cell (or a mean over seeds).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricPoint {
    pub ca: f64,
    pub p: f64,
    pub r: f64,
    pub fs: f64,
}

impl MetricPoint {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Ca => self.ca,
            Metric::P => self.p,
            Metric::R => self.r,
            Metric::Fs => self.fs,
        }
    }

    pub fn mean<'a>(points: impl IntoIterator<Item = &'a MetricPoint>) -> Option<MetricPoint> {
        let mut n = 0usize;
        let mut sum = MetricPoint::default();
        for p in points {
            n += 1;
            sum.ca += p.ca;
            sum.p += p.p;
            sum.r += p.r;
            sum.fs += p.fs;
        }
        (n > 0).then(|| {
            let k = n as f64;
            MetricPoint { ca: sum.ca / k, p: sum.p / k, r: sum.r / k, fs: sum.fs / k }
        })
    }

    pub fn minus(&self, other: &MetricPoint) -> MetricPoint {
        MetricPoint { ca: self.ca - other.ca, p: self.p - other.p, r: self.r - other.r, fs: self.fs - other.fs }
    }
}

impl From<&MetricsReport> for MetricPoint {
    fn from(m: &MetricsReport) -> Self {
        MetricPoint { ca: m.accuracy, p: m.precision, r: m.recall, fs: m.f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TestOutcome {
    Tested(WilcoxonResult),
    Undefined { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub dataset: String,
    pub metric: Metric,
    /// Classifiers paired in the test, in order.
    pub classifiers: Vec<String>,
    pub outcome: TestOutcome,
}

/// `(dataset, classifier)` → metrics.
pub type MetricGrid = BTreeMap<(String, String), MetricPoint>;

/// One signed-rank test per (dataset, metric), pairing the two grids'
/// values classifier by classifier. Tests that cannot be computed (for
/// instance identical inputs) are reported as undefined cells.
pub fn compare_grids(a: &MetricGrid, b: &MetricGrid, alpha: f64) -> Result<Vec<ComparisonCell>> {
    let ka: BTreeSet<_> = a.keys().collect();
    let kb: BTreeSet<_> = b.keys().collect();
    if ka != kb {
        let only_a: Vec<_> = ka.difference(&kb).map(|(d, c)| format!("{d}/{c}")).collect();
        let only_b: Vec<_> = kb.difference(&ka).map(|(d, c)| format!("{d}/{c}")).collect();
        return Err(Error::GridMismatch(format!(
            "cells only in the first: [{}]; only in the second: [{}]",
            only_a.join(", "),
            only_b.join(", ")
        )));
    }
    let datasets: BTreeSet<&String> = a.keys().map(|(d, _)| d).collect();
    let mut cells = Vec::new();
    for ds in datasets {
        let keys: Vec<&(String, String)> = a.keys().filter(|(d, _)| d == ds).collect();
        for metric in Metric::ALL {
            let x: Vec<f64> = keys.iter().map(|k| a[*k].get(metric)).collect();
            let y: Vec<f64> = keys.iter().map(|k| b[*k].get(metric)).collect();
            let outcome = match wilcoxon_signed_rank(&x, &y, alpha) {
                Ok(r) => TestOutcome::Tested(r),
                Err(Error::UndefinedTest(reason)) => TestOutcome::Undefined { reason },
                Err(e) => return Err(e),
            };
            cells.push(ComparisonCell {
                dataset: ds.clone(),
                metric,
                classifiers: keys.iter().map(|(_, c)| c.clone()).collect(),
                outcome,
            });
        }
    }
    Ok(cells)
}
