use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label encoder with first-appearance level order.
///
/// While not frozen, unseen values extend the level list; once frozen they
/// are rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalEncoder {
    levels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    frozen: bool,
}

impl CategoricalEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_levels<S: AsRef<str>>(levels: &[S]) -> Result<Self> {
        let mut enc = Self::new();
        for l in levels {
            let l = l.as_ref();
            if enc.index.contains_key(l) {
                return Err(Error::Encoding(format!("duplicate level `{l}`")));
            }
            enc.push(l);
        }
        enc.frozen = true;
        Ok(enc)
    }

    fn push(&mut self, level: &str) -> usize {
        let code = self.levels.len();
        self.levels.push(level.to_owned());
        self.index.insert(level.to_owned(), code);
        code
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<String> {
        self.levels
    }

    pub fn encode(&mut self, value: &str) -> Result<usize> {
        if let Some(&code) = self.index.get(value) {
            return Ok(code);
        }
        if self.frozen {
            return Err(Error::Encoding(format!("unseen level `{value}`")));
        }
        Ok(self.push(value))
    }

    pub fn decode(&self, code: usize) -> Result<&str> {
        self.levels
            .get(code)
            .map(String::as_str)
            .ok_or_else(|| Error::Encoding(format!("code {code} has no level")))
    }
}

/// Encodes a text column to codes `0..L`. With `levels` the mapping is
/// frozen to that order; otherwise levels follow first appearance.
pub fn encode_categorical<S: AsRef<str>>(
    column: &[S],
    levels: Option<&[String]>,
) -> Result<(Vec<usize>, Vec<String>)> {
    if column.is_empty() {
        return Err(Error::Encoding("cannot encode an empty column".into()));
    }
    let mut enc = match levels {
        Some(l) => CategoricalEncoder::with_levels(l)?,
        None => CategoricalEncoder::new(),
    };
    let codes = column.iter().map(|v| enc.encode(v.as_ref())).collect::<Result<Vec<_>>>()?;
    Ok((codes, enc.into_levels()))
}

pub fn decode_categorical(codes: &[usize], levels: &[String]) -> Result<Vec<String>> {
    codes
        .iter()
        .map(|&c| {
            levels
                .get(c)
                .cloned()
                .ok_or_else(|| Error::Encoding(format!("code {c} has no level")))
        })
        .collect()
}
