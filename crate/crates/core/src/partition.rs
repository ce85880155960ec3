//! Sensitive / non-sensitive partitioning.
//!
//! Two modes are supported:
//!
//! * **column**: a projection. The named feature columns form the sensitive
//!   part; every other feature plus the label forms the non-sensitive part.
//!   Row `i` of both parts comes from row `i` of the source.
//! * **row**: `floor(n / k)` distinct records are drawn without replacement
//!   by a seeded stream and form the sensitive part; the remaining records
//!   form the non-sensitive part.
//!
//! Either way the [`Provenance`] is enough to rebuild the source exactly.

use std::collections::HashSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Record, Schema};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PartitionSpec {
    Column { sensitive_columns: Vec<String> },
    Row { k: usize, seed: u64 },
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec::Column { sensitive_columns: Vec::new() }
    }
}

/// A rectangular slice of a dataset. `labels` is present when the label
/// column belongs to this part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct View<T> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<T>>,
    pub labels: Option<Vec<usize>>,
}

impl<T: Scalar> View<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn same_shape(&self, other: &View<T>) -> bool {
        self.columns == other.columns
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.len() == b.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Provenance {
    /// Feature indices (record `values` positions) held by each part.
    Column { sensitive: Vec<usize>, non_sensitive: Vec<usize>, rows: usize },
    /// Source row indices held by each part, in view order.
    Row { sensitive: Vec<usize>, non_sensitive: Vec<usize> },
}

/// What a manifest records about a partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub spec: PartitionSpec,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PartitionedDataset<T> {
    pub sensitive: View<T>,
    pub non_sensitive: View<T>,
    pub spec: PartitionSpec,
    pub provenance: Provenance,
    name: String,
    schema: Schema,
}

pub fn partition<T: Scalar>(ds: &Dataset<T>, spec: &PartitionSpec) -> Result<PartitionedDataset<T>> {
    match spec {
        PartitionSpec::Column { sensitive_columns } => partition_columns(ds, sensitive_columns),
        PartitionSpec::Row { k, seed } => partition_rows(ds, *k, *seed),
    }
}

pub fn partition_columns<T: Scalar, S: AsRef<str>>(
    ds: &Dataset<T>,
    sensitive_columns: &[S],
) -> Result<PartitionedDataset<T>> {
    if sensitive_columns.is_empty() {
        return Err(Error::Partition("no sensitive columns given".into()));
    }
    let schema = ds.schema();
    let mut chosen = HashSet::new();
    for name in sensitive_columns {
        let name = name.as_ref();
        if schema.label().name == name {
            return Err(Error::Partition(format!("label column `{name}` cannot be sensitive")));
        }
        let idx = schema
            .feature_index(name)
            .ok_or_else(|| Error::Partition(format!("unknown column `{name}`")))?;
        if !chosen.insert(idx) {
            return Err(Error::Partition(format!("column `{name}` listed twice")));
        }
    }
    let (sensitive, non_sensitive): (Vec<usize>, Vec<usize>) =
        (0..ds.n_features()).partition(|i| chosen.contains(i));

    let names = schema.feature_names();
    let project = |cols: &[usize]| -> Vec<Vec<T>> {
        ds.records().iter().map(|r| cols.iter().map(|&c| r.values[c]).collect()).collect()
    };
    let spec = PartitionSpec::Column {
        sensitive_columns: sensitive_columns.iter().map(|s| s.as_ref().to_owned()).collect(),
    };
    Ok(PartitionedDataset {
        sensitive: View {
            columns: sensitive.iter().map(|&c| names[c].clone()).collect(),
            rows: project(&sensitive),
            labels: None,
        },
        non_sensitive: View {
            columns: non_sensitive.iter().map(|&c| names[c].clone()).collect(),
            rows: project(&non_sensitive),
            labels: Some(ds.labels()),
        },
        spec,
        provenance: Provenance::Column { sensitive, non_sensitive, rows: ds.len() },
        name: ds.name.clone(),
        schema: schema.clone(),
    })
}

pub fn partition_rows<T: Scalar>(ds: &Dataset<T>, k: usize, seed: u64) -> Result<PartitionedDataset<T>> {
    let n = ds.len();
    if k == 0 || k > n {
        return Err(Error::Partition(format!("k = {k} must lie in 1..={n}")));
    }
    let picked = n / k;
    let mut sensitive = index::sample(&mut rng::stream(seed), n, picked).into_vec();
    sensitive.sort_unstable();
    let chosen: HashSet<usize> = sensitive.iter().copied().collect();
    let non_sensitive: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();

    let columns = ds.schema().feature_names();
    let view = |idx: &[usize]| {
        let (rows, labels) = ds.select(idx);
        View { columns: columns.clone(), rows, labels: Some(labels) }
    };
    Ok(PartitionedDataset {
        sensitive: view(&sensitive),
        non_sensitive: view(&non_sensitive),
        spec: PartitionSpec::Row { k, seed },
        provenance: Provenance::Row { sensitive, non_sensitive },
        name: ds.name.clone(),
        schema: ds.schema().clone(),
    })
}

pub fn recombine<T: Scalar>(pd: &PartitionedDataset<T>) -> Result<Dataset<T>> {
    pd.recombine()
}

impl<T: Scalar> PartitionedDataset<T> {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn record(&self) -> PartitionRecord {
        PartitionRecord { spec: self.spec.clone(), provenance: self.provenance.clone() }
    }

    pub fn recombine(&self) -> Result<Dataset<T>> {
        self.recombine_with(&self.sensitive)
    }

    /// Rebuilds the full dataset in source order, taking the sensitive cells
    /// from `sensitive` (e.g. a perturbed copy) instead of the stored part.
    pub fn recombine_with(&self, sensitive: &View<T>) -> Result<Dataset<T>> {
        if !sensitive.same_shape(&self.sensitive) {
            return Err(Error::Integrity("sensitive part does not match the partition shape".into()));
        }
        let ns = &self.non_sensitive;
        let width = self.schema.n_features();
        let records = match &self.provenance {
            Provenance::Column { sensitive: s_cols, non_sensitive: ns_cols, rows } => {
                check_permutation(s_cols.iter().chain(ns_cols), width, "feature")?;
                let labels = ns
                    .labels
                    .as_ref()
                    .ok_or_else(|| Error::Integrity("non-sensitive part has no labels".into()))?;
                if sensitive.len() != *rows || ns.len() != *rows || labels.len() != *rows {
                    return Err(Error::Integrity("parts are not row-aligned".into()));
                }
                if sensitive.rows.iter().any(|r| r.len() != s_cols.len())
                    || ns.rows.iter().any(|r| r.len() != ns_cols.len())
                {
                    return Err(Error::Integrity("row width does not match provenance".into()));
                }
                (0..*rows)
                    .map(|i| {
                        let mut values = vec![T::zero(); width];
                        for (v, &c) in sensitive.rows[i].iter().zip(s_cols) {
                            values[c] = *v;
                        }
                        for (v, &c) in ns.rows[i].iter().zip(ns_cols) {
                            values[c] = *v;
                        }
                        Record::new(values, labels[i])
                    })
                    .collect()
            }
            Provenance::Row { sensitive: s_rows, non_sensitive: ns_rows } => {
                let n = s_rows.len() + ns_rows.len();
                check_permutation(s_rows.iter().chain(ns_rows), n, "row")?;
                let mut slots: Vec<Option<Record<T>>> = vec![None; n];
                for (part, idx) in [(sensitive, s_rows), (ns, ns_rows)] {
                    let labels = part
                        .labels
                        .as_ref()
                        .ok_or_else(|| Error::Integrity("row part has no labels".into()))?;
                    if part.len() != idx.len() || labels.len() != idx.len() {
                        return Err(Error::Integrity("row part size does not match provenance".into()));
                    }
                    for ((row, &label), &i) in part.rows.iter().zip(labels).zip(idx) {
                        if row.len() != width {
                            return Err(Error::Integrity("row width does not match schema".into()));
                        }
                        slots[i] = Some(Record::new(row.clone(), label));
                    }
                }
                slots.into_iter().map(|r| r.expect("permutation covers every row")).collect()
            }
        };
        Dataset::new(self.name.clone(), self.schema.clone(), records)
            .map_err(|e| Error::Integrity(e.to_string()))
    }

    /// Source `(row, feature)` of cell `(i, j)` of the sensitive part.
    pub fn locate_sensitive(&self, i: usize, j: usize) -> (usize, usize) {
        match &self.provenance {
            Provenance::Column { sensitive, .. } => (i, sensitive[j]),
            Provenance::Row { sensitive, .. } => (sensitive[i], j),
        }
    }
}

fn check_permutation<'a>(indices: impl Iterator<Item = &'a usize>, n: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; n];
    let mut count = 0;
    for &i in indices {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Integrity(format!("{what} index {i} is out of range or repeated")));
        }
        count += 1;
    }
    if count != n {
        return Err(Error::Integrity(format!("{what} indices cover {count} of {n}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Attribute;

    /// The six listed rows of the worked liver-patient example.
    fn patients() -> Dataset<f64> {
        let schema = Schema::new(vec![
            Attribute::numeric("Age"),
            Attribute::categorical("Gender", ["Male", "Female"]),
            Attribute::numeric("TB"),
            Attribute::numeric("DB"),
            Attribute::numeric("ALG"),
            Attribute::label("Disease", ["1", "0"]),
        ])
        .unwrap();
        let rows = [
            ([65.0, 0.0, 0.7, 0.1, 3.3], 0),
            ([62.0, 1.0, 10.9, 5.5, 0.2], 1),
            ([68.0, 1.0, 7.3, 4.1, 3.3], 0),
            ([58.0, 0.0, 3.9, 2.0, 0.4], 0),
            ([72.0, 1.0, 3.2, 3.7, 3.4], 1),
            ([46.0, 0.0, 6.4, 1.0, 2.2], 0),
        ];
        let records = rows.iter().map(|(v, l)| Record::new(v.to_vec(), *l)).collect();
        Dataset::new("patients", schema, records).unwrap()
    }

    #[test]
    fn age_and_gender_split_off() {
        let pd = partition_columns(&patients(), &["Age", "Gender"]).unwrap();
        assert_eq!(pd.sensitive.columns, vec!["Age", "Gender"]);
        assert_eq!(pd.non_sensitive.columns, vec!["TB", "DB", "ALG"]);
        assert_eq!(pd.sensitive.rows[0], vec![65.0, 0.0]);
        assert_eq!(pd.non_sensitive.rows[1], vec![10.9, 5.5, 0.2]);
        assert!(pd.sensitive.labels.is_none());
        assert_eq!(pd.non_sensitive.labels.as_ref().unwrap(), &vec![0, 1, 0, 0, 1, 0]);
        assert_eq!(pd.recombine().unwrap(), patients());
    }

    #[test]
    fn all_features_sensitive_leaves_only_the_label() {
        let ds = patients();
        let pd = partition_columns(&ds, &ds.schema().feature_names()).unwrap();
        assert!(pd.non_sensitive.columns.is_empty());
        assert_eq!(pd.non_sensitive.labels.as_ref().unwrap().len(), 6);
        assert_eq!(pd.recombine().unwrap(), ds);
    }

    #[test]
    fn column_mode_errors() {
        let ds = patients();
        assert!(matches!(partition_columns(&ds, &["Disease"]), Err(Error::Partition(_))));
        assert!(matches!(partition_columns(&ds, &["Height"]), Err(Error::Partition(_))));
        assert!(matches!(partition_columns::<f64, &str>(&ds, &[]), Err(Error::Partition(_))));
        assert!(matches!(partition_columns(&ds, &["Age", "Age"]), Err(Error::Partition(_))));
    }

    fn sized(n: usize) -> Dataset<f64> {
        let schema = Schema::new(vec![Attribute::numeric("x"), Attribute::label("y", ["a", "b"])]).unwrap();
        Dataset::new("n", schema, (0..n).map(|i| Record::new(vec![i as f64], i % 2)).collect()).unwrap()
    }

    #[test]
    fn row_mode_sizes() {
        let pd = partition_rows(&sized(50), 10, 3).unwrap();
        assert_eq!((pd.sensitive.len(), pd.non_sensitive.len()), (5, 45));
        let pd = partition_rows(&sized(303), 1, 3).unwrap();
        assert_eq!((pd.sensitive.len(), pd.non_sensitive.len()), (303, 0));
        assert_eq!(pd.recombine().unwrap(), sized(303));
    }

    #[test]
    fn row_mode_selection_is_reproducible_and_distinct() {
        let ds = sized(100);
        let pick = |seed| match partition_rows(&ds, 7, seed).unwrap().provenance {
            Provenance::Row { sensitive, .. } => sensitive,
            _ => unreachable!(),
        };
        let a = pick(11);
        assert_eq!(a.len(), 14);
        assert_eq!(a, pick(11));
        let distinct: HashSet<_> = a.iter().collect();
        assert_eq!(distinct.len(), 14);
    }

    #[test]
    fn row_mode_errors() {
        assert!(matches!(partition_rows(&sized(5), 0, 0), Err(Error::Partition(_))));
        assert!(matches!(partition_rows(&sized(5), 6, 0), Err(Error::Partition(_))));
    }

    #[test]
    fn misaligned_parts_are_an_integrity_error() {
        let mut pd = partition_columns(&patients(), &["Age"]).unwrap();
        pd.non_sensitive.rows.pop();
        assert!(matches!(pd.recombine(), Err(Error::Integrity(_))));

        let mut pd = partition_rows(&sized(20), 4, 1).unwrap();
        if let Provenance::Row { sensitive, .. } = &mut pd.provenance {
            sensitive[0] = sensitive[1];
        }
        assert!(matches!(pd.recombine(), Err(Error::Integrity(_))));

        let pd = partition_columns(&patients(), &["Age"]).unwrap();
        let mut wrong = pd.sensitive.clone();
        wrong.rows[0].push(1.0);
        assert!(matches!(pd.recombine_with(&wrong), Err(Error::Integrity(_))));
    }

    #[test]
    fn locate_maps_back_to_source_cells() {
        let ds = patients();
        let pd = partition_columns(&ds, &["Gender"]).unwrap();
        assert_eq!(pd.locate_sensitive(4, 0), (4, 1));
        let pd = partition_rows(&ds, 2, 8).unwrap();
        for i in 0..pd.sensitive.len() {
            let (r, c) = pd.locate_sensitive(i, 2);
            assert_eq!(pd.sensitive.rows[i][2], ds.records()[r].values[c]);
        }
    }
}
