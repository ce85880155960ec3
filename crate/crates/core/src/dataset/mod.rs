//! Schema-tagged tabular data with numeric-encoded features and a class label.

mod encode;
mod ingest;
mod manifest;
mod split;

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use encode::{decode_categorical, encode_categorical, CategoricalEncoder};
pub use ingest::{
    impute_columns, load_csv, read_csv, ColumnRef, HeaderMode, Imputation, LoadOptions, Loaded,
};
pub use manifest::{Manifest, MANIFEST_VERSION};
pub use split::{split, split_stratified, Fraction, SplitIndices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Numeric,
    Categorical,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    /// Ordered levels; code `i` decodes to `levels[i]`. Empty for numeric attributes.
    #[serde(default)]
    pub levels: Vec<String>,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute { name: name.into(), kind: AttributeKind::Numeric, levels: Vec::new() }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn label<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Label,
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }
}

/// Ordered attribute list. Exactly one attribute is the label; it may sit at
/// any position, and feature order is schema order with the label skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let labels = attributes.iter().filter(|a| a.kind == AttributeKind::Label).count();
        if labels != 1 {
            return Err(Error::Schema(format!("expected exactly one label attribute, found {labels}")));
        }
        let mut seen = HashSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute name `{}`", a.name)));
            }
            match a.kind {
                AttributeKind::Numeric if !a.levels.is_empty() => {
                    return Err(Error::Schema(format!("numeric attribute `{}` has levels", a.name)));
                }
                AttributeKind::Categorical | AttributeKind::Label if a.levels.is_empty() => {
                    return Err(Error::Schema(format!("attribute `{}` has no levels", a.name)));
                }
                _ => {}
            }
        }
        Ok(Schema { attributes })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn width(&self) -> usize {
        self.attributes.len()
    }

    pub fn n_features(&self) -> usize {
        self.attributes.len() - 1
    }

    pub fn label_position(&self) -> usize {
        self.attributes
            .iter()
            .position(|a| a.kind == AttributeKind::Label)
            .expect("validated schema has a label")
    }

    pub fn label(&self) -> &Attribute {
        &self.attributes[self.label_position()]
    }

    pub fn n_classes(&self) -> usize {
        self.label().levels.len()
    }

    pub fn features(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes.iter().filter(|a| a.kind != AttributeKind::Label)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features().map(|a| a.name.clone()).collect()
    }

    /// Position of a feature within a record's `values`.
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features().position(|a| a.name == name)
    }

    /// Schema-order position of each feature, used when writing full-width rows.
    fn feature_positions(&self) -> Vec<usize> {
        let label = self.label_position();
        (0..self.width()).filter(|&i| i != label).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Record<T> {
    pub values: Vec<T>,
    pub label: usize,
}

impl<T: Scalar> Record<T> {
    pub fn new(values: Vec<T>, label: usize) -> Self {
        Record { values, label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dataset<T> {
    pub name: String,
    schema: Schema,
    records: Vec<Record<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(name: impl Into<String>, schema: Schema, records: Vec<Record<T>>) -> Result<Self> {
        let width = schema.n_features();
        let n_classes = schema.n_classes();
        for (i, r) in records.iter().enumerate() {
            if r.values.len() != width {
                return Err(Error::Schema(format!(
                    "record {i} has {} values, schema has {width} features",
                    r.values.len()
                )));
            }
            if r.label >= n_classes {
                return Err(Error::LabelOutOfRange { label: r.label, n_classes });
            }
        }
        Ok(Dataset { name: name.into(), schema, records })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[Record<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.n_features()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.records.iter().map(|r| r.values.clone()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn column(&self, feature: usize) -> Vec<T> {
        self.records.iter().map(|r| r.values[feature]).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> (Vec<Vec<T>>, Vec<usize>) {
        indices
            .iter()
            .map(|&i| (self.records[i].values.clone(), self.records[i].label))
            .unzip()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset<T> {
        Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Row-wise concatenation; schemas must match exactly.
    pub fn concat<'a>(name: impl Into<String>, parts: impl IntoIterator<Item = &'a Dataset<T>>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::SchemaIncompatible("nothing to concatenate".into()))?;
        let mut records = first.records.clone();
        for part in iter {
            if part.schema != first.schema {
                return Err(Error::SchemaIncompatible(format!(
                    "`{}` and `{}` have different schemas",
                    first.name, part.name
                )));
            }
            records.extend(part.records.iter().cloned());
        }
        Ok(Dataset { name: name.into(), schema: first.schema.clone(), records })
    }

    /// Writes the dataset as CSV in schema column order, with a header row.
    /// Categorical and label cells are written as their level text when the
    /// code is integral and in range, otherwise as the raw number.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.schema.attributes.iter().map(|a| a.name.as_str()))?;
        let positions = self.schema.feature_positions();
        let label_pos = self.schema.label_position();
        let mut row = vec![String::new(); self.schema.width()];
        for r in &self.records {
            for (v, &pos) in r.values.iter().zip(&positions) {
                let attr = &self.schema.attributes[pos];
                row[pos] = format_cell(attr, *v);
            }
            row[label_pos] = self.schema.attributes[label_pos].levels[r.label].clone();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Ingestion(e.to_string()))
    }

    /// Number of rows per class; classes are disjoint and together cover the dataset.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }
}

fn format_cell<T: Scalar>(attr: &Attribute, v: T) -> String {
    if attr.kind == AttributeKind::Categorical && v.fract().is_zero() && v >= T::zero() {
        if let Some(level) = v.to_usize().and_then(|i| attr.levels.get(i)) {
            return level.clone();
        }
    }
    format!("{v}")
}
