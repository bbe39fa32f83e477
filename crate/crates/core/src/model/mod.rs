//! Per-target regressors: gradient-boosted trees, random forest and a
//! multilayer perceptron, plus the versioned model file.

mod boost;
mod forest;
mod mlp;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Labels};
use crate::features::{input_names, FeatureVector, INPUT_WIDTH, SCHEMA_VERSION};

pub use boost::GradientBoost;
pub use forest::RandomForest;
pub use mlp::{Layer, Network, Perceptron, TrainParams};
pub use tree::{Node, Tree, TreeParams};

pub const MODEL_FORMAT: &str = "hlsqor-model";
pub const MODEL_VERSION: u32 = 1;

/// Minimum labeled rows needed to train.
pub const MIN_TRAIN_ROWS: usize = 10;

pub const CP_FLOOR_NS: f64 = 0.1;

pub type Hyperparams = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "gbt")]
    GradientBoost,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "mlp")]
    Perceptron,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [Self::GradientBoost, Self::RandomForest, Self::Perceptron];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GradientBoost => "gbt",
            Self::RandomForest => "rf",
            Self::Perceptron => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown model kind `{s}` (expected gbt, rf or mlp)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "cp")]
    ClockPeriod,
    #[serde(rename = "latency")]
    Latency,
    #[serde(rename = "lut")]
    Luts,
}

impl Target {
    pub const ALL: [Target; 3] = [Self::ClockPeriod, Self::Latency, Self::Luts];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClockPeriod => "cp",
            Self::Latency => "latency",
            Self::Luts => "lut",
        }
    }

    pub fn label(self, labels: &Labels) -> Option<f64> {
        match self {
            Self::ClockPeriod => labels.cp_ns,
            Self::Latency => labels.latency_cycles.map(|v| v as f64),
            Self::Luts => labels.luts.map(|v| v as f64),
        }
    }

    /// Counts span orders of magnitude and are fitted in log1p space.
    fn log_scaled(self) -> bool {
        !matches!(self, Self::ClockPeriod)
    }

    fn encode(self, y: f64) -> f64 {
        if self.log_scaled() {
            y.ln_1p()
        } else {
            y
        }
    }

    fn decode(self, raw: f64) -> f64 {
        let y = if self.log_scaled() { raw.exp_m1() } else { raw };
        let floor = if self == Self::ClockPeriod { CP_FLOOR_NS } else { 0.0 };
        if y.is_finite() {
            y.max(floor)
        } else if y > 0.0 {
            f64::MAX
        } else {
            floor
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown target `{s}` (expected cp, latency or lut)"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{target} needs at least {needed} labeled rows, found {found}")]
    InsufficientData { target: Target, needed: usize, found: usize },
    #[error("hyperparameter `{key}` = {value} is invalid; allowed: {allowed}")]
    BadHyperparam { key: String, value: f64, allowed: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

/// (default, min, max, integral) per hyperparameter.
fn hyperparam_spec(kind: ModelKind) -> &'static [(&'static str, f64, f64, f64, bool)] {
    match kind {
        ModelKind::GradientBoost => &[
            ("n_trees", 200.0, 1.0, 100_000.0, true),
            ("max_depth", 4.0, 1.0, 64.0, true),
            ("learning_rate", 0.1, 1e-6, 1.0, false),
            ("min_samples_leaf", 2.0, 1.0, 1e9, true),
        ],
        ModelKind::RandomForest => &[
            ("n_trees", 200.0, 1.0, 100_000.0, true),
            ("max_depth", 12.0, 1.0, 1e9, true),
            ("min_samples_leaf", 1.0, 1.0, 1e9, true),
            // 0 selects floor(sqrt(width))
            ("max_features", 0.0, 0.0, INPUT_WIDTH as f64, true),
            ("bootstrap", 1.0, 0.0, 1.0, true),
        ],
        ModelKind::Perceptron => &[
            ("hidden1", 64.0, 1.0, 4096.0, true),
            ("hidden2", 32.0, 0.0, 4096.0, true),
            ("epochs", 500.0, 1.0, 1e6, true),
            ("learning_rate", 1e-3, 1e-9, 1.0, false),
            ("batch_size", 32.0, 1.0, 1e6, true),
        ],
    }
}

pub fn default_hyperparams(kind: ModelKind) -> Hyperparams {
    hyperparam_spec(kind)
        .iter()
        .map(|(k, d, ..)| (k.to_string(), *d))
        .collect()
}

/// Overlays `overrides` on the defaults and range-checks every key.
pub fn resolve_hyperparams(kind: ModelKind, overrides: &Hyperparams) -> Result<Hyperparams, ModelError> {
    let spec = hyperparam_spec(kind);
    let mut hp = default_hyperparams(kind);
    for (key, &value) in overrides {
        let Some(&(_, _, lo, hi, integral)) = spec.iter().find(|s| s.0 == key) else {
            let known: Vec<&str> = spec.iter().map(|s| s.0).collect();
            return Err(ModelError::BadHyperparam {
                key: key.clone(),
                value,
                allowed: format!("keys for {kind}: {}", known.join(", ")),
            });
        };
        if !(value >= lo && value <= hi) || (integral && value.fract() != 0.0) {
            let kind_word = if integral { "integer" } else { "number" };
            return Err(ModelError::BadHyperparam {
                key: key.clone(),
                value,
                allowed: format!("{kind_word} in [{lo}, {hi}]"),
            });
        }
        hp.insert(key.clone(), value);
    }
    Ok(hp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    GradientBoost(GradientBoost),
    RandomForest(RandomForest),
    Perceptron(Perceptron),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub target: Target,
    pub hyperparams: Hyperparams,
    pub schema_version: u32,
    pub training_seed: u64,
    pub feature_names: Vec<String>,
    pub params: ModelParams,
}

/// Inputs and encoded targets of the rows carrying `target`.
pub fn training_rows(dataset: &Dataset, target: Target) -> (Vec<Vec<f64>>, Vec<f64>) {
    dataset
        .records
        .iter()
        .filter_map(|r| target.label(&r.labels).map(|y| (r.features.as_input(), target.encode(y))))
        .unzip()
}

pub fn train(
    kind: ModelKind,
    dataset: &Dataset,
    target: Target,
    hyperparams: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel, ModelError> {
    let hp = resolve_hyperparams(kind, hyperparams)?;
    let (x, y) = training_rows(dataset, target);
    if y.len() < MIN_TRAIN_ROWS {
        return Err(ModelError::InsufficientData {
            target,
            needed: MIN_TRAIN_ROWS,
            found: y.len(),
        });
    }
    let int = |k: &str| hp[k] as usize;
    let params = match kind {
        ModelKind::GradientBoost => ModelParams::GradientBoost(GradientBoost::fit(
            &x,
            &y,
            int("n_trees"),
            hp["learning_rate"],
            TreeParams {
                max_depth: int("max_depth"),
                min_samples_leaf: int("min_samples_leaf"),
                max_features: None,
            },
        )),
        ModelKind::RandomForest => {
            let max_features = match int("max_features") {
                0 => (INPUT_WIDTH as f64).sqrt().floor() as usize,
                k => k,
            };
            ModelParams::RandomForest(RandomForest::fit(
                &x,
                &y,
                int("n_trees"),
                hp["bootstrap"] != 0.0,
                TreeParams {
                    max_depth: int("max_depth"),
                    min_samples_leaf: int("min_samples_leaf"),
                    max_features: Some(max_features),
                },
                seed,
            ))
        }
        ModelKind::Perceptron => ModelParams::Perceptron(Perceptron::fit(
            &x,
            &y,
            &[int("hidden1"), int("hidden2")],
            TrainParams {
                epochs: int("epochs"),
                batch_size: int("batch_size"),
                learning_rate: hp["learning_rate"],
            },
            seed,
        )),
    };
    Ok(TrainedModel {
        kind,
        target,
        hyperparams: hp,
        schema_version: SCHEMA_VERSION,
        training_seed: seed,
        feature_names: input_names().into_iter().map(String::from).collect(),
        params,
    })
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format: &'static str,
    version: u32,
    model: &'a TrainedModel,
}

#[derive(Deserialize)]
struct ModelFile {
    model: TrainedModel,
}

impl TrainedModel {
    /// Regression output in label units, clamped at the target's floor.
    pub fn predict(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        if x.schema_version != self.schema_version {
            return Err(ModelError::SchemaMismatch(format!(
                "features use schema {} but the model expects {}",
                x.schema_version, self.schema_version
            )));
        }
        Ok(self.predict_input(&x.as_input()))
    }

    /// Same as [`Self::predict`] on a raw input row.
    pub fn predict_input(&self, x: &[f64]) -> f64 {
        let raw = match &self.params {
            ModelParams::GradientBoost(m) => m.predict(x),
            ModelParams::RandomForest(m) => m.predict(x),
            ModelParams::Perceptron(m) => m.predict(x),
        };
        self.target.decode(raw)
    }

    /// Summed split gains per input, for tree ensembles.
    pub fn split_gains(&self) -> Option<Vec<f64>> {
        let trees = match &self.params {
            ModelParams::GradientBoost(m) => &m.trees,
            ModelParams::RandomForest(m) => &m.trees,
            ModelParams::Perceptron(_) => return None,
        };
        let mut gains = vec![0.0; self.feature_names.len()];
        for t in trees {
            t.add_gains(&mut gains);
        }
        Some(gains)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFileRef {
            format: MODEL_FORMAT,
            version: MODEL_VERSION,
            model: self,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("models serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ModelError::CorruptModel(e.to_string()))?;
        if value.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
            return Err(ModelError::CorruptModel(format!("missing `format: {MODEL_FORMAT}` tag")));
        }
        match value.get("version") {
            Some(v) if v.as_u64() == Some(MODEL_VERSION as u64) => {}
            Some(v) => {
                return Err(ModelError::VersionMismatch {
                    found: v.to_string(),
                    expected: MODEL_VERSION,
                })
            }
            None => return Err(ModelError::CorruptModel("missing version".into())),
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| ModelError::CorruptModel(e.to_string()))?;
        file.model.validate()?;
        Ok(file.model)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let expected = input_names();
        if self.schema_version != SCHEMA_VERSION || self.feature_names.len() != expected.len()
            || self.feature_names.iter().zip(&expected).any(|(a, b)| a != b)
        {
            return Err(ModelError::SchemaMismatch(format!(
                "model was trained on schema {} with {} inputs; this build uses schema {SCHEMA_VERSION} with {} inputs",
                self.schema_version,
                self.feature_names.len(),
                expected.len()
            )));
        }
        let corrupt = |m: &str| Err(ModelError::CorruptModel(m.to_string()));
        let trees = match &self.params {
            ModelParams::GradientBoost(m) => &m.trees,
            ModelParams::RandomForest(m) if m.trees.is_empty() => return corrupt("forest without trees"),
            ModelParams::RandomForest(m) => &m.trees,
            ModelParams::Perceptron(p) => {
                let sizes_ok = !p.network.layers.is_empty()
                    && p.network.layers[0].inputs == INPUT_WIDTH
                    && p.network.layers.last().is_some_and(|l| l.outputs == 1)
                    && p.network.layers.windows(2).all(|w| w[0].outputs == w[1].inputs)
                    && p.network.layers.iter().all(|l| {
                        l.weights.len() == l.inputs * l.outputs && l.biases.len() == l.outputs
                    })
                    && p.x_mean.len() == INPUT_WIDTH
                    && p.x_scale.len() == INPUT_WIDTH;
                return if sizes_ok { Ok(()) } else { corrupt("inconsistent layer shapes") };
            }
        };
        for t in trees {
            if !t.is_well_formed() || t.max_feature().is_some_and(|f| f >= INPUT_WIDTH) {
                return corrupt("malformed tree");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DesignRecord;

    fn dataset(n: usize, label: impl Fn(usize) -> f64) -> Dataset {
        let records = (0..n)
            .map(|i| {
                let mut slots = vec![0.0; crate::features::SLOT_COUNT];
                slots[0] = i as f64;
                slots[5] = (i % 3) as f64;
                DesignRecord {
                    design: "d".into(),
                    variant: format!("v{i}"),
                    device: "zynq7000".into(),
                    features: FeatureVector::from_slots(slots, 100.0).unwrap(),
                    labels: Labels {
                        cp_ns: Some(label(i)),
                        latency_cycles: Some(label(i).round() as u64 + 1),
                        luts: None,
                    },
                }
            })
            .collect();
        Dataset::new(records).unwrap()
    }

    fn quick(kind: ModelKind) -> Hyperparams {
        let pairs: &[(&str, f64)] = match kind {
            ModelKind::GradientBoost | ModelKind::RandomForest => &[("n_trees", 10.0)],
            ModelKind::Perceptron => &[("epochs", 20.0), ("hidden1", 8.0), ("hidden2", 4.0)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn constant_labels_fit_exactly() {
        let ds = dataset(20, |_| 3.25);
        for kind in ModelKind::ALL {
            let m = train(kind, &ds, Target::ClockPeriod, &quick(kind), 1).unwrap();
            for r in &ds.records {
                assert_eq!(m.predict(&r.features).unwrap(), 3.25, "{kind}");
            }
        }
    }

    #[test]
    fn missing_labels_are_skipped() {
        let ds = dataset(20, |i| i as f64 + 1.0);
        assert_eq!(
            train(ModelKind::GradientBoost, &ds, Target::Luts, &Hyperparams::new(), 0),
            Err(ModelError::InsufficientData {
                target: Target::Luts,
                needed: 10,
                found: 0
            })
        );
    }

    #[test]
    fn hyperparams_are_checked() {
        let bad: Hyperparams = [("max_depth".to_string(), 0.0)].into();
        assert!(matches!(
            train(ModelKind::GradientBoost, &dataset(20, |_| 1.0), Target::ClockPeriod, &bad, 0),
            Err(ModelError::BadHyperparam { ref key, .. }) if key == "max_depth"
        ));
        let unknown: Hyperparams = [("depth".to_string(), 3.0)].into();
        assert!(resolve_hyperparams(ModelKind::RandomForest, &unknown).is_err());
        assert_eq!(default_hyperparams(ModelKind::Perceptron)["epochs"], 500.0);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let ds = dataset(30, |i| 1.0 + (i as f64).sqrt());
        for kind in ModelKind::ALL {
            let m = train(kind, &ds, Target::Latency, &quick(kind), 3).unwrap();
            let text = m.to_json();
            let back = TrainedModel::from_json(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_json(), text);
            assert!(matches!(
                TrainedModel::from_json(&text[..text.len() / 2]),
                Err(ModelError::CorruptModel(_))
            ));
            let future = text.replacen("\"version\": 1", "\"version\": 2", 1);
            assert!(matches!(
                TrainedModel::from_json(&future),
                Err(ModelError::VersionMismatch { .. })
            ));
        }
    }

    #[test]
    fn schema_mismatch_on_predict() {
        let ds = dataset(12, |i| i as f64 + 1.0);
        let m = train(ModelKind::GradientBoost, &ds, Target::ClockPeriod, &quick(ModelKind::GradientBoost), 0).unwrap();
        let mut fv = ds.records[0].features.clone();
        fv.schema_version = 2;
        assert!(matches!(m.predict(&fv), Err(ModelError::SchemaMismatch(_))));
    }

    #[test]
    fn perceptron_has_no_gains() {
        let ds = dataset(12, |i| i as f64 + 1.0);
        let m = train(ModelKind::Perceptron, &ds, Target::ClockPeriod, &quick(ModelKind::Perceptron), 0).unwrap();
        assert!(m.split_gains().is_none());
    }

    #[test]
    fn names_parse() {
        assert_eq!("gbt".parse::<ModelKind>(), Ok(ModelKind::GradientBoost));
        assert_eq!("lut".parse::<Target>(), Ok(Target::Luts));
        assert!("clk".parse::<Target>().is_err());
    }
}
