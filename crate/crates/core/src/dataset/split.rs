use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Exact training fraction, written as `"9/10"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction(pub Ratio<u64>);

impl Fraction {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 || numer == 0 || numer >= denom {
            return Err(Error::Split(format!("fraction {numer}/{denom} must lie strictly between 0 and 1")));
        }
        Ok(Fraction(Ratio::new(numer, denom)))
    }

    /// `floor(fraction * n)`, computed exactly.
    pub fn floor_of(&self, n: usize) -> usize {
        ((*self.0.numer() as u128 * n as u128) / *self.0.denom() as u128) as usize
    }
}

impl Default for Fraction {
    fn default() -> Self {
        Fraction(Ratio::new(9, 10))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| Error::Split(format!("`{s}` is not of the form n/d")))?;
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| Error::Split(format!("`{s}`: {e}")));
        Fraction::new(parse(n)?, parse(d)?)
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub fraction: Fraction,
    pub stratified: bool,
}

/// Seeded shuffle of all row indices, then a prefix of `floor(fraction * n)`
/// rows for training and the rest for testing.
pub fn split<T: Scalar>(ds: &Dataset<T>, fraction: Fraction, seed: u64) -> Result<SplitIndices> {
    let n = ds.len();
    let n_train = fraction.floor_of(n);
    if n_train == 0 || n_train == n {
        return Err(Error::Split(format!(
            "fraction {fraction} of {n} rows leaves an empty train or test set"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed));
    let test = order.split_off(n_train);
    Ok(SplitIndices { train: order, test, seed, fraction, stratified: false })
}

/// Like [`split`] but applies the fraction within each class, so every class
/// keeps its share in both parts. Train size may differ from `floor(f * n)`.
pub fn split_stratified<T: Scalar>(ds: &Dataset<T>, fraction: Fraction, seed: u64) -> Result<SplitIndices> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, r) in ds.records().iter().enumerate() {
        by_class[r.label].push(i);
    }
    let mut stream = rng::stream(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut members in by_class {
        members.shuffle(&mut stream);
        let k = fraction.floor_of(members.len());
        test.extend(members.split_off(k));
        train.extend(members);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Split(format!(
            "stratified fraction {fraction} of {} rows leaves an empty train or test set",
            ds.len()
        )));
    }
    Ok(SplitIndices { train, test, seed, fraction, stratified: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, Record, Schema};
    use proptest::prelude::*;

    fn dataset(n: usize) -> Dataset<f64> {
        let schema = Schema::new(vec![Attribute::numeric("x"), Attribute::label("y", ["a", "b"])]).unwrap();
        let records = (0..n).map(|i| Record::new(vec![i as f64], i % 2)).collect();
        Dataset::new("d", schema, records).unwrap()
    }

    #[test]
    fn nine_tenths_sizes() {
        for (n, train, test) in [(303, 272, 31), (583, 524, 59), (452, 406, 46), (155, 139, 16)] {
            let s = split(&dataset(n), Fraction::default(), 1).unwrap();
            assert_eq!((s.train.len(), s.test.len()), (train, test), "n = {n}");
        }
    }

    #[test]
    fn same_seed_same_indices() {
        let ds = dataset(10);
        assert_eq!(split(&ds, Fraction::default(), 5).unwrap(), split(&ds, Fraction::default(), 5).unwrap());
    }

    #[test]
    fn empty_side_is_an_error() {
        assert!(matches!(split(&dataset(1), Fraction::default(), 0), Err(Error::Split(_))));
        assert!(matches!(split(&dataset(5), Fraction::new(1, 10).unwrap(), 0), Err(Error::Split(_))));
        let s = split(&dataset(5), Fraction::default(), 0).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (4, 1));
    }

    #[test]
    fn fraction_parsing() {
        assert_eq!("9/10".parse::<Fraction>().unwrap(), Fraction::default());
        assert!("1/1".parse::<Fraction>().is_err());
        assert!("0/3".parse::<Fraction>().is_err());
        assert!("abc".parse::<Fraction>().is_err());
        assert_eq!(serde_json::to_string(&Fraction::default()).unwrap(), "\"9/10\"");
    }

    #[test]
    fn stratified_keeps_every_class_in_both_parts() {
        let s = split_stratified(&dataset(40), Fraction::new(3, 4).unwrap(), 9).unwrap();
        assert_eq!(s.train.len(), 30);
        let ds = dataset(40);
        assert!(s.test.iter().any(|&i| ds.records()[i].label == 0));
        assert!(s.test.iter().any(|&i| ds.records()[i].label == 1));
    }

    proptest! {
        #[test]
        fn split_partitions_all_indices(n in 2usize..300, seed: u64, num in 1u64..9) {
            let ds = dataset(n);
            let f = Fraction::new(num, 10).unwrap();
            if let Ok(s) = split(&ds, f, seed) {
                prop_assert_eq!(s.train.len(), f.floor_of(n));
                let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
