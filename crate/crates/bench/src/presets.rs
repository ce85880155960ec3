//! Built-in descriptions of the UCI tables the harness knows how to read.
//!
//! The files themselves are not shipped; point `data_dir` (or
//! `DPSHARE_DATA_DIR`) at a directory holding the original downloads.

use std::fmt;
use std::str::FromStr;

use dpshare_core::dataset::HeaderMode;
use dpshare_core::partition::PartitionSpec;
use serde::{Deserialize, Serialize};

use crate::config::DatasetConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    HeartDisease,
    Arrhythmia,
    Hepatitis,
    IndianLiverPatient,
    Framingham,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::HeartDisease,
        Preset::Arrhythmia,
        Preset::Hepatitis,
        Preset::IndianLiverPatient,
        Preset::Framingham,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::HeartDisease => "heart-disease",
            Preset::Arrhythmia => "arrhythmia",
            Preset::Hepatitis => "hepatitis",
            Preset::IndianLiverPatient => "indian-liver-patient",
            Preset::Framingham => "framingham",
        }
    }

    /// File name of the original download.
    pub fn file(self) -> &'static str {
        match self {
            Preset::HeartDisease => "processed.cleveland.data",
            Preset::Arrhythmia => "arrhythmia.data",
            Preset::Hepatitis => "hepatitis.data",
            Preset::IndianLiverPatient => "Indian Liver Patient Dataset (ILPD).csv",
            Preset::Framingham => "framingham.csv",
        }
    }

    fn column_names(self) -> Option<Vec<String>> {
        let names: Vec<String> = match self {
            Preset::HeartDisease => [
                "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak", "slope",
                "ca", "thal", "num",
            ]
            .map(String::from)
            .to_vec(),
            Preset::Arrhythmia => {
                let mut v: Vec<String> = ["age", "sex", "height", "weight"].map(String::from).to_vec();
                v.extend((4..279).map(|i| format!("f{i}")));
                v.push("class".into());
                v
            }
            Preset::Hepatitis => [
                "class", "age", "sex", "steroid", "antivirals", "fatigue", "malaise", "anorexia", "liver_big",
                "liver_firm", "spleen_palpable", "spiders", "ascites", "varices", "bilirubin", "alk_phosphate",
                "sgot", "albumin", "protime", "histology",
            ]
            .map(String::from)
            .to_vec(),
            Preset::IndianLiverPatient => [
                "age", "gender", "tb", "db", "alkphos", "sgpt", "sgot", "tp", "alb", "ag_ratio", "selector",
            ]
            .map(String::from)
            .to_vec(),
            Preset::Framingham => return None,
        };
        Some(names)
    }

    fn label(self) -> &'static str {
        match self {
            Preset::HeartDisease => "num",
            Preset::Arrhythmia => "class",
            Preset::Hepatitis => "class",
            Preset::IndianLiverPatient => "selector",
            Preset::Framingham => "TenYearCHD",
        }
    }

    fn sensitive(self) -> [&'static str; 2] {
        match self {
            Preset::IndianLiverPatient => ["age", "gender"],
            Preset::Framingham => ["age", "male"],
            _ => ["age", "sex"],
        }
    }

    /// Fills every field of `cfg` the user left unset.
    pub fn apply(self, cfg: &mut DatasetConfig) {
        cfg.name.get_or_insert_with(|| self.as_str().to_owned());
        cfg.path.get_or_insert_with(|| self.file().into());
        cfg.label.get_or_insert_with(|| self.label().to_owned());
        cfg.header.get_or_insert(if self == Preset::Framingham { HeaderMode::Present } else { HeaderMode::Absent });
        if cfg.column_names.is_none() {
            cfg.column_names = self.column_names();
        }
        match self {
            Preset::HeartDisease if cfg.positive_labels.is_none() => {
                // 0 is absence of disease, 1-4 are grades of presence
                cfg.positive_labels = Some(["1", "2", "3", "4"].map(String::from).to_vec());
            }
            Preset::Hepatitis if cfg.label_levels.is_none() => {
                cfg.label_levels = Some(vec!["1".into(), "2".into()]);
            }
            Preset::IndianLiverPatient if cfg.label_levels.is_none() => {
                // 1 marks a liver patient
                cfg.label_levels = Some(vec!["2".into(), "1".into()]);
            }
            Preset::Framingham if cfg.label_levels.is_none() => {
                cfg.label_levels = Some(vec!["0".into(), "1".into()]);
            }
            _ => {}
        }
        cfg.missing_markers
            .get_or_insert_with(|| ["?", "", "NA"].map(String::from).to_vec());
        cfg.partition.get_or_insert_with(|| PartitionSpec::Column {
            sensitive_columns: self.sensitive().map(String::from).to_vec(),
        });
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .or(match s.as_str() {
                "heart" | "cleveland" => Some(Preset::HeartDisease),
                "ilpd" | "liver" => Some(Preset::IndianLiverPatient),
                _ => None,
            })
            .ok_or_else(|| format!("unknown dataset preset `{s}`"))
    }
}
