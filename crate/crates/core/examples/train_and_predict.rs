//! Trains one gradient-boosted model per target, saves and reloads it, and
//! reports test MAPE against the train-mean baseline.

use std::collections::BTreeMap;

use hlsqor::dataset::{split, synthetic_generate};
use hlsqor::eval::{mape, predictions};
use hlsqor::model::{train, ModelKind, Target, TrainedModel};

fn main() {
    let data = synthetic_generate(400, 7, 0.05);
    let parts = split(&data, 120, 7).expect("split");
    for target in Target::ALL {
        let model = train(ModelKind::GradientBoost, &parts.train, target, &BTreeMap::new(), 7).expect("train");
        let reloaded = TrainedModel::from_json(&model.to_json()).expect("reload");
        let (actual, predicted) = predictions(&reloaded, &parts.test).expect("predict");
        let train_labels: Vec<f64> = parts.train.records.iter().filter_map(|r| target.label(&r.labels)).collect();
        let mean = train_labels.iter().sum::<f64>() / train_labels.len() as f64;
        let baseline = vec![mean; actual.len()];
        println!(
            "{:<8} model {:>6.2}%  baseline {:>6.2}%",
            target.as_str(),
            mape(&actual, &predicted).unwrap(),
            mape(&actual, &baseline).unwrap()
        );
    }
}
