use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encode::CategoricalEncoder;
use super::manifest::{Manifest, MANIFEST_VERSION};
use super::{Attribute, AttributeKind, Dataset, Record, Schema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRef {
    Name(String),
    Index(usize),
    Last,
}

impl ColumnRef {
    /// `last`, a zero-based index, or a column name.
    pub fn parse(s: &str) -> Self {
        if s == "last" {
            ColumnRef::Last
        } else if let Ok(i) = s.parse() {
            ColumnRef::Index(i)
        } else {
            ColumnRef::Name(s.to_owned())
        }
    }

    fn resolve(&self, names: &[String]) -> Result<usize> {
        match self {
            ColumnRef::Name(n) => names
                .iter()
                .position(|c| c == n)
                .ok_or_else(|| Error::Schema(format!("unknown label column `{n}`"))),
            ColumnRef::Index(i) if *i < names.len() => Ok(*i),
            ColumnRef::Index(i) => Err(Error::Schema(format!(
                "label column index {i} is out of range for {} columns",
                names.len()
            ))),
            ColumnRef::Last => Ok(names.len() - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderMode {
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadOptions {
    pub label: ColumnRef,
    #[serde(default)]
    pub header: HeaderMode,
    /// Column names for header-less files.
    #[serde(default)]
    pub column_names: Option<Vec<String>>,
    /// Fixes column kinds and level orders; unseen levels become errors.
    #[serde(default)]
    pub schema_hint: Option<Schema>,
    /// Frozen label level order (class `i` is `label_levels[i]`).
    #[serde(default)]
    pub label_levels: Option<Vec<String>>,
    /// Collapses the label to two classes: listed values become class 1.
    #[serde(default)]
    pub positive_labels: Option<Vec<String>>,
    #[serde(default = "default_missing_markers")]
    pub missing_markers: Vec<String>,
    #[serde(default)]
    pub name: Option<String>,
}

fn default_missing_markers() -> Vec<String> {
    vec!["?".into(), String::new()]
}

impl LoadOptions {
    pub fn new(label: ColumnRef) -> Self {
        LoadOptions {
            label,
            header: HeaderMode::Auto,
            column_names: None,
            schema_hint: None,
            label_levels: None,
            positive_labels: None,
            missing_markers: default_missing_markers(),
            name: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputation {
    pub column: String,
    /// Encoded fill value (mean for numeric columns, modal code for categoricals).
    pub value: f64,
    pub filled: usize,
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub dataset: Dataset<T>,
    pub manifest: Manifest,
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Loaded<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let name = opts.name.clone().unwrap_or_else(|| {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    let mut loaded = read_csv(&bytes, opts, &name)?;
    loaded.manifest.source = Some(path.display().to_string());
    Ok(loaded)
}

/// Parses CSV bytes; see [`load_csv`].
pub fn read_csv<T: Scalar>(bytes: &[u8], opts: &LoadOptions, name: &str) -> Result<Loaded<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(rows.len() + 1);
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    if rows.is_empty() {
        return Err(Error::Ingestion("no rows".into()));
    }
    let width = rows[0].1.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
        return Err(Error::Parse {
            row: *line,
            message: format!("expected {width} columns, found {}", r.len()),
        });
    }

    let is_missing = |cell: &str| opts.missing_markers.iter().any(|m| m == cell);
    let is_number = |cell: &str| cell.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false);

    let header = match opts.header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => detect_header(&rows, &is_missing, &is_number),
    };
    let names: Vec<String> = if header {
        rows.remove(0).1
    } else if let Some(names) = &opts.column_names {
        names.clone()
    } else if let Some(hint) = &opts.schema_hint {
        hint.attributes().iter().map(|a| a.name.clone()).collect()
    } else {
        (0..width).map(|i| format!("c{i}")).collect()
    };
    if names.len() != width {
        return Err(Error::Schema(format!("{} column names for {width} columns", names.len())));
    }
    if rows.is_empty() {
        return Err(Error::Ingestion("header row but no data".into()));
    }
    let label_col = match &opts.schema_hint {
        Some(hint) => {
            if hint.width() != width {
                return Err(Error::Schema(format!(
                    "schema hint has {} attributes, file has {width} columns",
                    hint.width()
                )));
            }
            let pos = hint.label_position();
            let requested = opts.label.resolve(&names)?;
            if requested != pos {
                return Err(Error::Schema(format!(
                    "label column {requested} disagrees with the schema hint's label {pos}"
                )));
            }
            pos
        }
        None => opts.label.resolve(&names)?,
    };

    let mut kinds = Vec::with_capacity(width);
    let mut encoders: Vec<Option<CategoricalEncoder>> = Vec::with_capacity(width);
    for col in 0..width {
        if col == label_col {
            kinds.push(AttributeKind::Label);
            encoders.push(None);
            continue;
        }
        match &opts.schema_hint {
            Some(hint) => {
                let attr = &hint.attributes()[col];
                kinds.push(attr.kind);
                encoders.push(match attr.kind {
                    AttributeKind::Categorical => Some(CategoricalEncoder::with_levels(&attr.levels)?),
                    _ => None,
                });
            }
            None => {
                let numeric = rows
                    .iter()
                    .map(|(_, r)| r[col].as_str())
                    .filter(|c| !is_missing(c))
                    .all(is_number);
                if numeric {
                    kinds.push(AttributeKind::Numeric);
                    encoders.push(None);
                } else {
                    kinds.push(AttributeKind::Categorical);
                    encoders.push(Some(CategoricalEncoder::new()));
                }
            }
        }
    }

    let label_levels = opts
        .label_levels
        .clone()
        .or_else(|| opts.schema_hint.as_ref().map(|h| h.label().levels.clone()));
    let mut label_encoder = match (&opts.positive_labels, &label_levels) {
        (Some(_), _) => None,
        (None, Some(levels)) => Some(CategoricalEncoder::with_levels(levels)?),
        (None, None) => Some(CategoricalEncoder::new()),
    };

    let features: Vec<usize> = (0..width).filter(|&c| c != label_col).collect();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(rows.len()); features.len()];
    let mut labels = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        let raw_label = row[label_col].as_str();
        if is_missing(raw_label) {
            return Err(Error::Ingestion(format!("missing label at row {line}")));
        }
        let label = match (&opts.positive_labels, label_encoder.as_mut()) {
            (Some(pos), _) => usize::from(pos.iter().any(|p| p == raw_label)),
            (None, Some(enc)) => enc.encode(raw_label).map_err(|e| Error::Parse {
                row: *line,
                message: e.to_string(),
            })?,
            (None, None) => unreachable!("label encoder exists without positive labels"),
        };
        labels.push(label);
        for (f, &col) in features.iter().enumerate() {
            let cell = row[col].as_str();
            let value = if is_missing(cell) {
                None
            } else {
                Some(match encoders[col].as_mut() {
                    Some(enc) => enc.encode(cell).map_err(|e| Error::Parse {
                        row: *line,
                        message: format!("column `{}`: {e}", names[col]),
                    })? as f64,
                    None => cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        Error::Parse {
                            row: *line,
                            message: format!("column `{}`: `{cell}` is not a number", names[col]),
                        }
                    })?,
                })
            };
            columns[f].push(value);
        }
    }

    let feature_kinds: Vec<AttributeKind> = features.iter().map(|&c| kinds[c]).collect();
    let feature_names: Vec<String> = features.iter().map(|&c| names[c].clone()).collect();
    let imputations = impute_columns(&mut columns, &feature_kinds)
        .map_err(|(f, e)| match e {
            Error::Ingestion(m) => Error::Ingestion(format!("column `{}`: {m}", feature_names[f])),
            other => other,
        })?
        .into_iter()
        .map(|(f, value, filled)| Imputation { column: feature_names[f].clone(), value, filled })
        .collect();

    let label_levels = match (&opts.positive_labels, label_encoder) {
        (Some(pos), _) => vec![format!("not({})", pos.join("|")), pos.join("|")],
        (None, Some(enc)) => enc.into_levels(),
        (None, None) => unreachable!(),
    };
    let attributes = (0..width)
        .map(|c| Attribute {
            name: names[c].clone(),
            kind: kinds[c],
            levels: match kinds[c] {
                AttributeKind::Label => label_levels.clone(),
                AttributeKind::Categorical => encoders[c].as_ref().map(|e| e.levels().to_vec()).unwrap_or_default(),
                AttributeKind::Numeric => Vec::new(),
            },
        })
        .collect();
    let schema = Schema::new(attributes)?;

    let records = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let values = columns.iter().map(|c| T::of(c[i].expect("imputed"))).collect();
            Record::new(values, label)
        })
        .collect();
    let dataset = Dataset::new(name, schema.clone(), records)?;

    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        name: name.to_owned(),
        source: None,
        source_sha256: hex::encode(Sha256::digest(bytes)),
        rows: dataset.len(),
        header,
        schema,
        imputations,
        partition: None,
    };
    Ok(Loaded { dataset, manifest })
}

fn detect_header(
    rows: &[(usize, Vec<String>)],
    is_missing: &dyn Fn(&str) -> bool,
    is_number: &dyn Fn(&str) -> bool,
) -> bool {
    let first = &rows[0].1;
    if rows.len() < 2 || first.iter().any(|c| is_missing(c) || is_number(c)) {
        return false;
    }
    (0..first.len()).any(|col| {
        let mut cells = rows[1..].iter().map(|(_, r)| r[col].as_str()).filter(|c| !is_missing(c)).peekable();
        cells.peek().is_some() && cells.all(is_number)
    })
}

/// `(column, fill value, cells filled)`.
pub type Fill = (usize, f64, usize);

/// Fills `None` cells in place: column mean for numeric columns, modal code
/// (lowest code on ties) for categorical ones. Returns `(column, value,
/// filled)` for every column that had gaps; a second call is a no-op.
pub fn impute_columns(
    columns: &mut [Vec<Option<f64>>],
    kinds: &[AttributeKind],
) -> std::result::Result<Vec<Fill>, (usize, Error)> {
    let mut out = Vec::new();
    for (f, (col, kind)) in columns.iter_mut().zip(kinds).enumerate() {
        let missing = col.iter().filter(|v| v.is_none()).count();
        if missing == 0 {
            continue;
        }
        if missing == col.len() {
            return Err((f, Error::Ingestion("every value is missing".into())));
        }
        let fill = match kind {
            AttributeKind::Categorical => {
                let mut counts: HashMap<u64, (usize, f64)> = HashMap::new();
                for v in col.iter().flatten() {
                    counts.entry(v.to_bits()).or_insert((0, *v)).0 += 1;
                }
                counts
                    .into_values()
                    .max_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)))
                    .map(|(_, v)| v)
                    .expect("column has values")
            }
            _ => {
                let (sum, n) = col.iter().flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                sum / n as f64
            }
        };
        for v in col.iter_mut().filter(|v| v.is_none()) {
            *v = Some(fill);
        }
        out.push((f, fill, missing));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, opts: &LoadOptions) -> Result<Loaded<f64>> {
        read_csv(text.as_bytes(), opts, "t")
    }

    #[test]
    fn single_row_with_label_column() {
        let l = read("1.0,2.0,A\n", &LoadOptions::new(ColumnRef::Index(2))).unwrap();
        assert_eq!(l.dataset.len(), 1);
        assert_eq!(l.dataset.records()[0].values, vec![1.0, 2.0]);
        assert_eq!(l.dataset.records()[0].label, 0);
        assert!(!l.manifest.header);
    }

    #[test]
    fn header_is_detected_and_names_resolve() {
        let text = "age,gender,disease\n65,Male,1\n62,Female,0\n";
        let l = read(text, &LoadOptions::new(ColumnRef::Name("disease".into()))).unwrap();
        assert!(l.manifest.header);
        let s = l.dataset.schema();
        assert_eq!(s.feature_names(), vec!["age", "gender"]);
        assert_eq!(s.attributes()[1].kind, AttributeKind::Categorical);
        assert_eq!(s.attributes()[1].levels, vec!["Male", "Female"]);
        assert_eq!(s.label().levels, vec!["1", "0"]);
        assert_eq!(l.dataset.rows(), vec![vec![65.0, 0.0], vec![62.0, 1.0]]);
    }

    #[test]
    fn ragged_rows_report_the_row_number() {
        let err = read("1,2,a\n3,4\n", &LoadOptions::new(ColumnRef::Last)).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_label_column() {
        let err = read("a,b\n1,x\n", &LoadOptions::new(ColumnRef::Name("y".into()))).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        let err = read("1,x\n", &LoadOptions::new(ColumnRef::Index(5))).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn all_missing_column_is_rejected() {
        let err = read("?,1,a\n,2,b\n", &LoadOptions::new(ColumnRef::Last)).unwrap_err();
        assert!(matches!(err, Error::Ingestion(_)), "{err}");
    }

    #[test]
    fn missing_cells_take_mean_or_mode() {
        let text = "1,x,a\n?,y,a\n5,?,b\n3,y,b\n";
        let l = read(text, &LoadOptions::new(ColumnRef::Last)).unwrap();
        // mean of 1, 5, 3 and the mode of x, y, y (code 1)
        assert_eq!(l.dataset.rows()[1][0], 3.0);
        assert_eq!(l.dataset.rows()[2][1], 1.0);
        assert_eq!(l.manifest.imputations.len(), 2);
        assert_eq!(l.manifest.imputations[0].filled, 1);
    }

    #[test]
    fn mode_ties_pick_the_lowest_code() {
        let mut cols = vec![vec![Some(1.0), Some(0.0), None]];
        let out = impute_columns(&mut cols, &[AttributeKind::Categorical]).unwrap();
        assert_eq!(out, vec![(0, 0.0, 1)]);
    }

    #[test]
    fn imputation_is_idempotent() {
        let mut cols = vec![vec![Some(2.0), None, Some(4.0)], vec![None, Some(1.0), Some(1.0)]];
        let kinds = [AttributeKind::Numeric, AttributeKind::Categorical];
        impute_columns(&mut cols, &kinds).unwrap();
        let once = cols.clone();
        assert!(impute_columns(&mut cols, &kinds).unwrap().is_empty());
        assert_eq!(cols, once);
    }

    #[test]
    fn missing_label_is_an_ingestion_error() {
        assert!(matches!(read("1,?\n", &LoadOptions::new(ColumnRef::Last)), Err(Error::Ingestion(_))));
    }

    #[test]
    fn positive_labels_binarize() {
        let mut opts = LoadOptions::new(ColumnRef::Last);
        opts.positive_labels = Some(vec!["2".into(), "3".into()]);
        let l = read("1,0\n2,3\n3,2\n4,1\n", &opts).unwrap();
        assert_eq!(l.dataset.labels(), vec![0, 1, 1, 0]);
        assert_eq!(l.dataset.n_classes(), 2);
    }

    #[test]
    fn schema_hint_freezes_levels() {
        let hint = Schema::new(vec![
            Attribute::categorical("g", ["F", "M"]),
            Attribute::label("y", ["no", "yes"]),
        ])
        .unwrap();
        let mut opts = LoadOptions::new(ColumnRef::Last);
        opts.schema_hint = Some(hint);
        let l = read("M,yes\nF,no\n", &opts).unwrap();
        assert_eq!(l.dataset.rows(), vec![vec![1.0], vec![0.0]]);
        assert_eq!(l.dataset.labels(), vec![1, 0]);
        assert!(matches!(read("X,yes\n", &opts), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn checksum_identifies_the_source_bytes() {
        let a = read("1,a\n", &LoadOptions::new(ColumnRef::Last)).unwrap();
        let b = read("2,a\n", &LoadOptions::new(ColumnRef::Last)).unwrap();
        assert_eq!(a.manifest.source_sha256.len(), 64);
        assert_ne!(a.manifest.source_sha256, b.manifest.source_sha256);
    }
}
