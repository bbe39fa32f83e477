//! The fixed model-input vector and design-level extraction.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    build_callgraph, build_cdfg, callgraph_features, cdfg_features, count_fcus,
    CallGraphFeatures, CdfgFeatures, GraphError, CALLGRAPH_SLOT_COUNT, CALLGRAPH_SLOT_NAMES,
    CDFG_SLOT_COUNT, CDFG_SLOT_NAMES,
};
use crate::ir::{ir_features, parse_module, IrError, IrFeatures, IR_SLOT_COUNT, IR_SLOT_NAMES};
use crate::model::{ModelKind, TrainedModel};
use crate::source::{
    scan_source, SourceError, SourceFeatures, Warning, SOURCE_SLOT_COUNT, SOURCE_SLOT_NAMES,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Schema slots, excluding the frequency input.
pub const SLOT_COUNT: usize = SOURCE_SLOT_COUNT + IR_SLOT_COUNT + CDFG_SLOT_COUNT + CALLGRAPH_SLOT_COUNT;

/// Model input width: the schema slots plus target frequency.
pub const INPUT_WIDTH: usize = SLOT_COUNT + 1;

pub const FREQ_SLOT_NAME: &str = "target_freq_mhz";

/// The four feature families, in vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    HlsCode,
    Ir,
    Cdfg,
    CallGraph,
}

impl FeatureSource {
    pub const ALL: [FeatureSource; 4] = [Self::HlsCode, Self::Ir, Self::Cdfg, Self::CallGraph];

    pub fn name(self) -> &'static str {
        match self {
            Self::HlsCode => "hls_code",
            Self::Ir => "ir",
            Self::Cdfg => "cdfg",
            Self::CallGraph => "callgraph",
        }
    }

    /// Half-open slot range of the family.
    pub fn slot_range(self) -> std::ops::Range<usize> {
        let ir = SOURCE_SLOT_COUNT;
        let cdfg = ir + IR_SLOT_COUNT;
        let cg = cdfg + CDFG_SLOT_COUNT;
        match self {
            Self::HlsCode => 0..ir,
            Self::Ir => ir..cdfg,
            Self::Cdfg => cdfg..cg,
            Self::CallGraph => cg..SLOT_COUNT,
        }
    }

    pub fn slot_names(self) -> &'static [&'static str] {
        match self {
            Self::HlsCode => &SOURCE_SLOT_NAMES,
            Self::Ir => &IR_SLOT_NAMES,
            Self::Cdfg => &CDFG_SLOT_NAMES,
            Self::CallGraph => &CALLGRAPH_SLOT_NAMES,
        }
    }
}

/// All 69 schema slot names in vector order.
pub fn slot_names() -> Vec<&'static str> {
    FeatureSource::ALL
        .iter()
        .flat_map(|s| s.slot_names().iter().copied())
        .collect()
}

/// Slot names followed by the frequency input.
pub fn input_names() -> Vec<&'static str> {
    let mut names = slot_names();
    names.push(FREQ_SLOT_NAME);
    names
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("feature `{slot}` is not finite ({value})")]
    NonFiniteFeature { slot: String, value: f64 },
    #[error("target frequency must be positive, got {0} MHz")]
    BadFrequency(f64),
    #[error("expected {expected} feature slots, got {found}")]
    SlotCount { expected: usize, found: usize },
    #[error("feature csv row {row}: {message}")]
    BadCsv { row: usize, message: String },
    #[error("importance is undefined for {0} models")]
    UnsupportedModelKind(ModelKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_version: u32,
    pub slots: Vec<f64>,
    pub target_freq_mhz: f64,
}

impl FeatureVector {
    /// Validates raw slots against the schema.
    pub fn from_slots(slots: Vec<f64>, target_freq_mhz: f64) -> Result<Self, FeatureError> {
        if slots.len() != SLOT_COUNT {
            return Err(FeatureError::SlotCount {
                expected: SLOT_COUNT,
                found: slots.len(),
            });
        }
        if let Some((i, &v)) = slots.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(FeatureError::NonFiniteFeature {
                slot: slot_names()[i].to_string(),
                value: v,
            });
        }
        if !(target_freq_mhz.is_finite() && target_freq_mhz > 0.0) {
            return Err(FeatureError::BadFrequency(target_freq_mhz));
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            slots,
            target_freq_mhz,
        })
    }

    /// The 70-wide model input.
    pub fn as_input(&self) -> Vec<f64> {
        let mut x = self.slots.clone();
        x.push(self.target_freq_mhz);
        x
    }

    pub fn with_frequency(&self, target_freq_mhz: f64) -> Self {
        Self {
            target_freq_mhz,
            ..self.clone()
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        if name == FREQ_SLOT_NAME {
            return Some(self.target_freq_mhz);
        }
        slot_names().iter().position(|n| *n == name).map(|i| self.slots[i])
    }

    pub fn family(&self, source: FeatureSource) -> &[f64] {
        &self.slots[source.slot_range()]
    }
}

/// Feature CSV: one header of input names, one row per vector.
pub fn features_to_csv(vectors: &[FeatureVector]) -> String {
    let mut out = input_names().join(",");
    out.push('\n');
    for v in vectors {
        let cells: Vec<String> = v.as_input().iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn features_from_csv(text: &str) -> Result<Vec<FeatureVector>, FeatureError> {
    let bad = |row: usize, message: String| FeatureError::BadCsv { row, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let expected = input_names().join(",");
    match lines.next() {
        Some((_, h)) if h.trim_end() == expected => {}
        Some((i, _)) => return Err(bad(i + 1, "header does not match the feature schema".into())),
        None => return Err(bad(1, "missing header".into())),
    }
    lines
        .map(|(i, line)| {
            let cells = line
                .trim_end()
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| bad(i + 1, format!("{c:?}: {e}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            if cells.len() != INPUT_WIDTH {
                return Err(bad(i + 1, format!("expected {INPUT_WIDTH} cells, found {}", cells.len())));
            }
            let (slots, freq) = cells.split_at(SLOT_COUNT);
            FeatureVector::from_slots(slots.to_vec(), freq[0]).map_err(|e| bad(i + 1, e.to_string()))
        })
        .collect()
}

pub fn assemble(
    src: &SourceFeatures,
    ir: &IrFeatures,
    cdfg: &CdfgFeatures,
    cg: &CallGraphFeatures,
    target_freq_mhz: f64,
) -> Result<FeatureVector, FeatureError> {
    let mut slots = Vec::with_capacity(SLOT_COUNT);
    slots.extend(src.to_slots());
    slots.extend(ir.slots());
    slots.extend(cdfg.to_slots());
    slots.extend(cg.to_slots());
    FeatureVector::from_slots(slots, target_freq_mhz)
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Features of one design plus any scanner warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: FeatureVector,
    pub warnings: Vec<Warning>,
}

/// Full pipeline for one design variant. IR, CDFG and callgraph features are
/// taken from the `top` function. Without source text the source family is
/// zero and a warning is recorded.
pub fn extract_design(
    source_text: Option<&str>,
    ir_text: &str,
    top: &str,
    target_freq_mhz: f64,
) -> Result<Extraction, ExtractError> {
    let (src, mut warnings) = match source_text {
        Some(text) => {
            let scan = scan_source(text)?;
            (scan.features, scan.warnings)
        }
        None => (
            SourceFeatures::default(),
            vec![Warning {
                line: 0,
                message: "no source file given; source features set to 0".into(),
            }],
        ),
    };
    let module = parse_module(ir_text)?;
    let callgraph = build_callgraph(&module);
    let cg = callgraph_features(&callgraph, top)?;
    let function = module
        .function(top)
        .ok_or_else(|| GraphError::UnknownTop { name: top.to_string() })?;
    let ir = ir_features(function)?;
    let cdfg = cdfg_features(&build_cdfg(function)?, count_fcus(function));
    let features = assemble(&src, &ir, &cdfg, &cg, target_freq_mhz)?;
    warnings.sort_by_key(|w| w.line);
    Ok(Extraction { features, warnings })
}

/// Gain-based importances rescaled so the largest is 100.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    /// Every model input including the frequency slot, in input order.
    pub per_slot: Vec<(String, f64)>,
    /// The four families followed by `frequency`.
    pub per_source: Vec<(String, f64)>,
}

impl ImportanceReport {
    pub fn from_raw(raw: &[f64]) -> Self {
        let max = raw.iter().copied().fold(0.0, f64::max);
        let scaled: Vec<f64> = raw
            .iter()
            .map(|&v| if max > 0.0 { 100.0 * v / max } else { 0.0 })
            .collect();
        let per_slot = input_names()
            .into_iter()
            .zip(&scaled)
            .map(|(n, &v)| (n.to_string(), v))
            .collect();
        let mut per_source: Vec<(String, f64)> = FeatureSource::ALL
            .iter()
            .map(|s| (s.name().to_string(), scaled[s.slot_range()].iter().sum()))
            .collect();
        per_source.push(("frequency".to_string(), scaled[SLOT_COUNT]));
        Self {
            per_slot,
            per_source,
        }
    }

    pub fn source(&self, name: &str) -> Option<f64> {
        self.per_source.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Two CSV sections separated by a blank line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot,importance\n");
        for (n, v) in &self.per_slot {
            let _ = writeln!(out, "{n},{v}");
        }
        out.push_str("\nsource,importance\n");
        for (n, v) in &self.per_source {
            let _ = writeln!(out, "{n},{v}");
        }
        out
    }
}

pub fn importance_report(model: &TrainedModel) -> Result<ImportanceReport, FeatureError> {
    let raw = model
        .split_gains()
        .ok_or(FeatureError::UnsupportedModelKind(model.kind))?;
    Ok(ImportanceReport::from_raw(&raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_vector(freq: f64) -> FeatureVector {
        assemble(
            &SourceFeatures::default(),
            &IrFeatures::default(),
            &CdfgFeatures::default(),
            &CallGraphFeatures::default(),
            freq,
        )
        .unwrap()
    }

    #[test]
    fn slot_totals() {
        assert_eq!(SLOT_COUNT, 69);
        assert_eq!(INPUT_WIDTH, 70);
        let names = slot_names();
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), 69);
    }

    #[test]
    fn zeros_plus_frequency() {
        let v = zero_vector(100.0);
        let mut expected = vec![0.0; 69];
        expected.push(100.0);
        assert_eq!(v.as_input(), expected);
    }

    #[test]
    fn frequency_only_touches_last_slot() {
        let a = zero_vector(100.0).as_input();
        let b = zero_vector(250.0).as_input();
        let differing: Vec<usize> = (0..70).filter(|&i| a[i] != b[i]).collect();
        assert_eq!(differing, [69]);
    }

    #[test]
    fn family_layout() {
        let mut src = SourceFeatures::default();
        src.total_loop_count = 3.0;
        let cg = CallGraphFeatures {
            child_count: 2.0,
            ..Default::default()
        };
        let v = assemble(&src, &IrFeatures::default(), &CdfgFeatures::default(), &cg, 1.0).unwrap();
        assert_eq!(v.slots[12], 3.0);
        assert_eq!(v.slots[63], 2.0);
        assert_eq!(v.get("cg_child_count"), Some(2.0));
        assert_eq!(v.family(FeatureSource::Cdfg).len(), 6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cdfg = CdfgFeatures {
            avg_degree: f64::NAN,
            ..Default::default()
        };
        let err = assemble(&SourceFeatures::default(), &IrFeatures::default(), &cdfg, &CallGraphFeatures::default(), 100.0)
            .unwrap_err();
        assert!(matches!(err, FeatureError::NonFiniteFeature { ref slot, .. } if slot == "cdfg_avg_degree"));
        assert_eq!(
            FeatureVector::from_slots(vec![0.0; 69], 0.0),
            Err(FeatureError::BadFrequency(0.0))
        );
    }

    #[test]
    fn feature_csv_round_trip() {
        let mut a = zero_vector(125.0);
        a.slots[4] = 0.1 + 0.2;
        let vs = vec![a, zero_vector(500.0)];
        let text = features_to_csv(&vs);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 70);
        assert_eq!(features_from_csv(&text).unwrap(), vs);
        assert!(features_from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn single_feature_importance() {
        let mut raw = vec![0.0; 70];
        raw[30] = 4.2;
        let r = ImportanceReport::from_raw(&raw);
        assert_eq!(r.per_slot[30].1, 100.0);
        assert!(r.per_slot.iter().enumerate().all(|(i, (_, v))| i == 30 || *v == 0.0));
        assert_eq!(r.source("ir"), Some(100.0));
    }

    #[test]
    fn importance_csv_has_two_sections() {
        let r = ImportanceReport::from_raw(&[1.0; 70]);
        let csv = r.to_csv();
        let sections: Vec<&str> = csv.split("\n\n").collect();
        assert_eq!(sections.len(), 2);
        assert_eq!(sections[0].lines().count(), 71);
        assert_eq!(sections[1].lines().count(), 6);
    }
}
