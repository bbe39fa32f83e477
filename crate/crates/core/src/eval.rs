//! Error metrics, held-out evaluation, learning curves, model comparison and
//! the frequency sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{split, Dataset, DatasetError, SWEEP_FREQS_MHZ};
use crate::features::FeatureVector;
use crate::model::{train, Hyperparams, ModelError, ModelKind, Target, TrainedModel};

/// Share of each design's variants used for training in the comparison
/// protocol (120 of 400).
pub const COMPARISON_TRAIN_SHARE: f64 = 0.3;

/// Share of the data held out for learning curves.
pub const CURVE_HOLDOUT_SHARE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("actual value at index {index} is zero")]
    ZeroActual { index: usize },
    #[error("{actual} actual values but {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("no values to score")]
    Empty,
    #[error("R^2 is undefined: actual values are all equal or fewer than two")]
    DegenerateActual,
    #[error("training fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<(), EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    check_lengths(actual, predicted)?;
    let mut sum = 0.0;
    for (index, (y, p)) in actual.iter().zip(predicted).enumerate() {
        if *y == 0.0 {
            return Err(EvalError::ZeroActual { index });
        }
        sum += ((y - p) / y).abs();
    }
    Ok(sum / actual.len() as f64 * 100.0)
}

pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    check_lengths(actual, predicted)?;
    if actual.len() < 2 {
        return Err(EvalError::DegenerateActual);
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::DegenerateActual);
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Actual/predicted pairs of the rows that carry the model's target.
pub fn predictions(model: &TrainedModel, data: &Dataset) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let labeled: Vec<_> = data
        .records
        .iter()
        .filter_map(|r| model.target.label(&r.labels).map(|y| (y, &r.features)))
        .collect();
    let predicted = labeled
        .par_iter()
        .map(|(_, x)| model.predict(x))
        .collect::<Result<Vec<f64>, ModelError>>()?;
    Ok((labeled.into_iter().map(|(y, _)| y).collect(), predicted))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetScore {
    pub target: Target,
    pub kind: ModelKind,
    /// `None` when no test row carries the label.
    pub mape: Option<f64>,
    pub r_squared: Option<f64>,
    pub rows_evaluated: usize,
    pub rows_skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub test_size: usize,
    pub per_target: Vec<TargetScore>,
    /// design -> MAPE per model, in model order.
    pub per_design: BTreeMap<String, Vec<Option<f64>>>,
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

fn align(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn to_csv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join(",") + "\n").collect()
}

impl EvalReport {
    pub fn mape(&self, target: Target) -> Option<f64> {
        self.per_target.iter().find(|s| s.target == target).and_then(|s| s.mape)
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![["model", "target", "mape_pct", "r_squared", "evaluated", "skipped"]
            .map(String::from)
            .to_vec()];
        for s in &self.per_target {
            rows.push(vec![
                s.kind.to_string(),
                s.target.to_string(),
                fmt_cell(s.mape),
                fmt_cell(s.r_squared),
                s.rows_evaluated.to_string(),
                s.rows_skipped.to_string(),
            ]);
        }
        rows
    }

    fn design_rows(&self) -> Vec<Vec<String>> {
        let mut header = vec!["design".to_string()];
        header.extend(self.per_target.iter().map(|s| format!("{}_{}", s.kind, s.target)));
        let mut rows = vec![header];
        for (design, cells) in &self.per_design {
            let mut row = vec![design.clone()];
            row.extend(cells.iter().map(|c| fmt_cell(*c)));
            rows.push(row);
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", to_csv(&self.rows()), to_csv(&self.design_rows()))
    }

    pub fn to_table(&self) -> String {
        format!("{}\n{}", align(&self.rows()), align(&self.design_rows()))
    }
}

pub fn evaluate(models: &[TrainedModel], test: &Dataset) -> Result<EvalReport, EvalError> {
    let mut per_target = Vec::new();
    for m in models {
        let (actual, predicted) = predictions(m, test)?;
        let (score, r2) = if actual.is_empty() {
            (None, None)
        } else {
            (Some(mape(&actual, &predicted)?), r_squared(&actual, &predicted).ok())
        };
        per_target.push(TargetScore {
            target: m.target,
            kind: m.kind,
            mape: score,
            r_squared: r2,
            rows_evaluated: actual.len(),
            rows_skipped: test.len() - actual.len(),
        });
    }
    let mut per_design = BTreeMap::new();
    for design in test.designs() {
        let subset = test.for_design(design);
        let mut cells = Vec::new();
        for m in models {
            let (a, p) = predictions(m, &subset)?;
            cells.push(if a.is_empty() { None } else { Some(mape(&a, &p)?) });
        }
        per_design.insert(design.to_string(), cells);
    }
    Ok(EvalReport {
        test_size: test.len(),
        per_target,
        per_design,
    })
}

/// R² on a fixed 25% hold-out for models trained on nested prefixes of the
/// remaining shuffled pool. Each fraction is relative to that pool.
pub fn learning_curve(
    dataset: &Dataset,
    kind: ModelKind,
    target: Target,
    fractions: &[f64],
    hyperparams: &Hyperparams,
    seed: u64,
) -> Result<Vec<(f64, f64)>, EvalError> {
    if let Some(&f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(EvalError::BadFraction(f));
    }
    let holdout = (dataset.len() as f64 * CURVE_HOLDOUT_SHARE).round() as usize;
    if holdout < 2 {
        return Err(EvalError::InsufficientData(format!(
            "{} records leave no usable hold-out set",
            dataset.len()
        )));
    }
    let parts = split(dataset, dataset.len() - holdout, seed)?;
    let pool = parts.train.records;
    fractions
        .iter()
        .map(|&f| {
            let take = ((f * pool.len() as f64).ceil() as usize).clamp(1, pool.len());
            let subset = Dataset {
                schema_version: dataset.schema_version,
                records: pool[..take].to_vec(),
            };
            let model = train(kind, &subset, target, hyperparams, seed)?;
            let (a, p) = predictions(&model, &parts.test)?;
            Ok((f, r_squared(&a, &p)?))
        })
        .collect()
}

pub fn learning_curve_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("fraction,r_squared\n");
    for (f, r) in points {
        let _ = writeln!(out, "{f},{r}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// `gbt`, `rf`, `mlp`, `mean` (train-mean baseline) or `hls`.
    pub model: String,
    /// MAPE per requested target; `None` prints as NA.
    pub mape: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub targets: Vec<Target>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn get(&self, model: &str, target: Target) -> Option<f64> {
        let col = self.targets.iter().position(|t| *t == target)?;
        self.rows.iter().find(|r| r.model == model)?.mape[col]
    }

    /// Adds the HLS tool's own estimate error as a final `hls` row.
    pub fn set_baseline_estimate(&mut self, mape: Vec<Option<f64>>) {
        self.rows.retain(|r| r.model != "hls");
        self.rows.push(ComparisonRow {
            model: "hls".to_string(),
            mape,
        });
    }

    fn cells(&self) -> Vec<Vec<String>> {
        let mut header = vec!["model".to_string()];
        header.extend(self.targets.iter().map(|t| t.to_string()));
        let mut rows = vec![header];
        for r in &self.rows {
            let mut row = vec![r.model.clone()];
            row.extend(r.mape.iter().map(|v| fmt_cell(*v)));
            rows.push(row);
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        to_csv(&self.cells())
    }

    pub fn to_table(&self) -> String {
        align(&self.cells())
    }
}

/// Per design: train on 30% of the variants, test on the rest, for every
/// model kind and target; MAPEs are averaged over designs. A `mean` row scores
/// predicting the training-label mean.
pub fn model_comparison(
    dataset: &Dataset,
    targets: &[Target],
    hyperparams: &BTreeMap<ModelKind, Hyperparams>,
    seed: u64,
) -> Result<ComparisonTable, EvalError> {
    let names: Vec<String> = ModelKind::ALL
        .iter()
        .map(|k| k.to_string())
        .chain(["mean".to_string()])
        .collect();
    // (row, target) -> per-design MAPEs
    let mut scores: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); targets.len()]; names.len()];
    let empty = Hyperparams::new();
    for design in dataset.designs() {
        let data = dataset.for_design(design);
        let train_count = (data.len() as f64 * COMPARISON_TRAIN_SHARE).round() as usize;
        let parts = split(&data, train_count, seed)?;
        for (t, &target) in targets.iter().enumerate() {
            let labeled = parts.train.records.iter().filter(|r| target.label(&r.labels).is_some()).count();
            let testable = parts.test.records.iter().filter(|r| target.label(&r.labels).is_some()).count();
            if labeled == 0 || testable == 0 {
                continue;
            }
            for (k, &kind) in ModelKind::ALL.iter().enumerate() {
                let hp = hyperparams.get(&kind).unwrap_or(&empty);
                let model = train(kind, &parts.train, target, hp, seed)?;
                let (a, p) = predictions(&model, &parts.test)?;
                scores[k][t].push(mape(&a, &p)?);
            }
            let train_labels: Vec<f64> =
                parts.train.records.iter().filter_map(|r| target.label(&r.labels)).collect();
            let mean = train_labels.iter().sum::<f64>() / train_labels.len() as f64;
            let actual: Vec<f64> = parts.test.records.iter().filter_map(|r| target.label(&r.labels)).collect();
            scores[names.len() - 1][t].push(mape(&actual, &vec![mean; actual.len()])?);
        }
    }
    let rows = names
        .into_iter()
        .zip(scores)
        .map(|(model, per_target)| ComparisonRow {
            model,
            mape: per_target
                .into_iter()
                .map(|v| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
                .collect(),
        })
        .collect();
    Ok(ComparisonTable {
        targets: targets.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub target_freq_mhz: f64,
    pub cp_ns: Option<f64>,
    pub latency_cycles: Option<f64>,
    pub luts: Option<f64>,
}

pub fn default_sweep_freqs() -> Vec<f64> {
    SWEEP_FREQS_MHZ.to_vec()
}

/// Predicts every target at each frequency with all other inputs held fixed.
/// The first model given for a target is used; absent targets stay `None`.
pub fn frequency_sweep(
    models: &[TrainedModel],
    base: &FeatureVector,
    freqs_mhz: &[f64],
) -> Result<Vec<SweepRow>, EvalError> {
    if let Some(m) = models.iter().find(|m| m.schema_version != models[0].schema_version) {
        return Err(ModelError::SchemaMismatch(format!(
            "sweep models disagree on schema ({} vs {})",
            models[0].schema_version, m.schema_version
        ))
        .into());
    }
    let pick = |t: Target| models.iter().find(|m| m.target == t);
    freqs_mhz
        .iter()
        .map(|&f| {
            let x = base.with_frequency(f);
            let run = |t: Target| pick(t).map(|m| m.predict(&x)).transpose();
            Ok(SweepRow {
                target_freq_mhz: f,
                cp_ns: run(Target::ClockPeriod)?,
                latency_cycles: run(Target::Latency)?,
                luts: run(Target::Luts)?,
            })
        })
        .collect()
}

fn sweep_cells(rows: &[SweepRow]) -> Vec<Vec<String>> {
    let mut out = vec![["target_freq_mhz", "cp_predicted_ns", "latency_predicted_cycles", "luts_predicted"]
        .map(String::from)
        .to_vec()];
    for r in rows {
        out.push(vec![
            r.target_freq_mhz.to_string(),
            fmt_cell(r.cp_ns),
            r.latency_cycles.map_or("NA".into(), |v| format!("{:.0}", v)),
            r.luts.map_or("NA".into(), |v| format!("{:.0}", v)),
        ]);
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    to_csv(&sweep_cells(rows))
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    align(&sweep_cells(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mape_cases() {
        assert_eq!(mape(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert!((mape(&[100.0], &[110.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(mape(&[0.0], &[1.0]), Err(EvalError::ZeroActual { index: 0 })));
        assert!(matches!(mape(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(mape(&[], &[]), Err(EvalError::Empty)));
    }

    #[test]
    fn r_squared_cases() {
        let a = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(r_squared(&a, &a).unwrap(), 1.0);
        assert!(r_squared(&a, &[3.5; 4]).unwrap().abs() < 1e-12);
        assert!(r_squared(&a, &[7.0, 4.0, 2.0, 1.0]).unwrap() < 0.0);
        assert!(matches!(r_squared(&[2.0, 2.0], &[1.0, 3.0]), Err(EvalError::DegenerateActual)));
    }

    #[test]
    fn fixed_width_table() {
        let t = align(&[vec!["a".into(), "bbb".into()], vec!["cc".into(), "d".into()]]);
        assert_eq!(t, " a  bbb\ncc    d\n");
    }

    #[test]
    fn baseline_estimate_row() {
        let mut t = ComparisonTable {
            targets: Target::ALL.to_vec(),
            rows: vec![],
        };
        t.set_baseline_estimate(vec![Some(12.0), None, Some(30.0)]);
        assert_eq!(t.to_csv(), "model,cp,latency,lut\nhls,12.0000,NA,30.0000\n");
    }
}
