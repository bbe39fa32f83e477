//! Labeled design-variant datasets: CSV I/O, the train/test split and the
//! synthetic oracle generator.

mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{input_names, FeatureVector, SCHEMA_VERSION, SLOT_COUNT};

pub use synthetic::{ground_truth, synthetic_generate, DEVICES, SWEEP_FREQS_MHZ};

const KEY_COLUMNS: [&str; 3] = ["design", "variant", "device"];
const LABEL_COLUMNS: [&str; 3] = ["cp_ns", "latency_cycles", "luts"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header does not match the dataset schema: {0}")]
    SchemaMismatch(String),
    #[error("row {row}: duplicate key ({design}, {variant}, {device})")]
    DuplicateKey {
        row: usize,
        design: String,
        variant: String,
        device: String,
    },
    #[error("row {row}: bad value {value:?} in column `{column}`: {message}")]
    BadValue {
        row: usize,
        column: String,
        value: String,
        message: String,
    },
    #[error("need more than {needed} records, have {available}")]
    InsufficientData { needed: usize, available: usize },
}

/// Post-route quality-of-results labels. Any may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Labels {
    pub cp_ns: Option<f64>,
    pub latency_cycles: Option<u64>,
    pub luts: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignRecord {
    pub design: String,
    pub variant: String,
    pub device: String,
    pub features: FeatureVector,
    pub labels: Labels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema_version: u32,
    pub records: Vec<DesignRecord>,
}

impl Default for Dataset {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            records: Vec::new(),
        }
    }
}

/// Dataset CSV header.
pub fn csv_header() -> Vec<&'static str> {
    let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
    header.extend(input_names());
    header.extend(LABEL_COLUMNS);
    header
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl Dataset {
    pub fn new(records: Vec<DesignRecord>) -> Result<Self, DatasetError> {
        let mut seen = BTreeSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert((&r.design, &r.variant, &r.device)) {
                return Err(DatasetError::DuplicateKey {
                    row: i + 1,
                    design: r.design.clone(),
                    variant: r.variant.clone(),
                    device: r.device.clone(),
                });
            }
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct design names in first-seen order.
    pub fn designs(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.records
            .iter()
            .map(|r| r.design.as_str())
            .filter(|d| seen.insert(*d))
            .collect()
    }

    pub fn for_design(&self, design: &str) -> Dataset {
        Dataset {
            schema_version: self.schema_version,
            records: self.records.iter().filter(|r| r.design == design).cloned().collect(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(csv_header()).expect("in-memory write");
        for r in &self.records {
            let mut row: Vec<String> = vec![r.design.clone(), r.variant.clone(), r.device.clone()];
            row.extend(r.features.as_input().iter().map(f64::to_string));
            row.push(fmt_opt(r.labels.cp_ns));
            row.push(fmt_opt(r.labels.latency_cycles));
            row.push(fmt_opt(r.labels.luts));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 output")
    }

    pub fn from_csv_str(text: &str) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        let expected = csv_header();
        if header.len() != expected.len() || header.iter().zip(&expected).any(|(a, b)| a != *b) {
            let first_bad = header
                .iter()
                .zip(&expected)
                .position(|(a, b)| a != *b)
                .unwrap_or(header.len().min(expected.len()));
            return Err(DatasetError::SchemaMismatch(format!(
                "expected {} columns, found {}; first difference at column {}",
                expected.len(),
                header.len(),
                first_bad + 1
            )));
        }
        let mut records = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let bad = |column: usize, message: &str| DatasetError::BadValue {
                row: line,
                column: expected[column].to_string(),
                value: row[column].to_string(),
                message: message.to_string(),
            };
            let number = |column: usize| -> Result<f64, DatasetError> {
                row[column].parse::<f64>().map_err(|e| bad(column, &e.to_string()))
            };
            let mut slots = Vec::with_capacity(SLOT_COUNT);
            for c in 3..3 + SLOT_COUNT {
                slots.push(number(c)?);
            }
            let freq_col = 3 + SLOT_COUNT;
            let freq = number(freq_col)?;
            let features = FeatureVector::from_slots(slots, freq).map_err(|e| bad(freq_col, &e.to_string()))?;

            let cp_col = freq_col + 1;
            let cp_ns = match &row[cp_col] {
                "" => None,
                _ => {
                    let v = number(cp_col)?;
                    if !(v.is_finite() && v > 0.0) {
                        return Err(bad(cp_col, "clock period must be positive"));
                    }
                    Some(v)
                }
            };
            let count = |column: usize| -> Result<Option<u64>, DatasetError> {
                match &row[column] {
                    "" => Ok(None),
                    s => s.parse::<u64>().map(Some).map_err(|e| bad(column, &e.to_string())),
                }
            };
            let labels = Labels {
                cp_ns,
                latency_cycles: count(cp_col + 1)?,
                luts: count(cp_col + 2)?,
            };
            if labels == Labels::default() {
                return Err(bad(cp_col, "row has no labels"));
            }
            records.push(DesignRecord {
                design: row[0].to_string(),
                variant: row[1].to_string(),
                device: row[2].to_string(),
                features,
                labels,
            });
        }
        Self::new(records)
    }

    pub fn load_csv(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&text)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub warnings: Vec<String>,
}

fn feature_key(r: &DesignRecord) -> Vec<u64> {
    r.features.as_input().iter().map(|v| v.to_bits()).collect()
}

/// Seeded shuffle into train/test. Records whose feature vector (frequency
/// included) occurs more than once all go to train; unique records then fill
/// train up to `train_count` and the remainder is test.
pub fn split(dataset: &Dataset, train_count: usize, seed: u64) -> Result<Split, DatasetError> {
    if train_count >= dataset.len() {
        return Err(DatasetError::InsufficientData {
            needed: train_count,
            available: dataset.len(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut multiplicity: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    for r in &dataset.records {
        *multiplicity.entry(feature_key(r)).or_default() += 1;
    }
    let duplicated = |i: usize| multiplicity[&feature_key(&dataset.records[i])] > 1;

    let mut train: Vec<usize> = order.iter().copied().filter(|&i| duplicated(i)).collect();
    let mut test = Vec::new();
    for i in order.into_iter().filter(|&i| !duplicated(i)) {
        if train.len() < train_count {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    let mut warnings = Vec::new();
    if train.len() > train_count {
        warnings.push(format!(
            "{} duplicated records forced into train (requested {train_count})",
            train.len()
        ));
    }
    if test.is_empty() {
        warnings.push("test set is empty after duplicate containment".to_string());
    }
    let pick = |idx: Vec<usize>| Dataset {
        schema_version: dataset.schema_version,
        records: idx.into_iter().map(|i| dataset.records[i].clone()).collect(),
    };
    Ok(Split {
        train: pick(train),
        test: pick(test),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(variant: usize, x: f64) -> DesignRecord {
        let mut slots = vec![0.0; SLOT_COUNT];
        slots[0] = x;
        DesignRecord {
            design: "d".into(),
            variant: format!("v{variant}"),
            device: "zynq7000".into(),
            features: FeatureVector::from_slots(slots, 100.0).unwrap(),
            labels: Labels {
                cp_ns: Some(1.0 + x / 7.0),
                latency_cycles: if variant % 3 == 0 { None } else { Some(variant as u64 + 2) },
                luts: Some(10),
            },
        }
    }

    fn dataset(n: usize) -> Dataset {
        Dataset::new((0..n).map(|i| record(i, i as f64 * 0.1)).collect()).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let ds = dataset(20);
        let text = ds.to_csv_string();
        let back = Dataset::from_csv_str(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.records[0].labels.latency_cycles, None);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn header_shape() {
        let h = csv_header();
        assert_eq!(h.len(), 3 + 70 + 3);
        assert_eq!(h[72], "target_freq_mhz");
        assert_eq!(h[75], "luts");
    }

    #[test]
    fn rejects_wrong_header() {
        let text = dataset(2).to_csv_string().replacen("design", "name", 1);
        assert!(matches!(Dataset::from_csv_str(&text), Err(DatasetError::SchemaMismatch(_))));
    }

    #[test]
    fn rejects_duplicate_key() {
        let mut text = dataset(2).to_csv_string();
        let row = text.lines().nth(1).unwrap().to_string();
        text.push_str(&row);
        text.push('\n');
        assert!(matches!(
            Dataset::from_csv_str(&text),
            Err(DatasetError::DuplicateKey { row: 3, .. })
        ));
    }

    #[test]
    fn bad_value_reports_row() {
        let text = dataset(3).to_csv_string().replacen(",zynq7000,0.1,", ",zynq7000,x,", 1);
        match Dataset::from_csv_str(&text) {
            Err(DatasetError::BadValue { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "src_max_unroll_factor");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = dataset(400);
        let a = split(&ds, 120, 7).unwrap();
        assert_eq!((a.train.len(), a.test.len()), (120, 280));
        assert!(a.warnings.is_empty());
        assert_eq!(split(&ds, 120, 7).unwrap(), a);
        assert_ne!(split(&ds, 120, 8).unwrap().train, a.train);
    }

    #[test]
    fn identical_records_all_go_to_train() {
        let ds = Dataset::new((0..10).map(|i| record(i, 1.0)).collect()).unwrap();
        let s = split(&ds, 3, 1).unwrap();
        assert_eq!(s.train.len(), 10);
        assert!(s.test.is_empty());
        assert!(s.warnings.iter().any(|w| w.contains("empty")));
    }

    #[test]
    fn train_count_must_leave_a_test_row() {
        assert!(matches!(
            split(&dataset(5), 5, 0),
            Err(DatasetError::InsufficientData { .. })
        ));
    }
}
