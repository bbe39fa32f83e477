//! Ranks the feature families by accumulated split gain for each target.

use std::collections::BTreeMap;

use hlsqor::dataset::synthetic_generate;
use hlsqor::features::importance_report;
use hlsqor::model::{train, ModelKind, Target};

fn main() {
    let data = synthetic_generate(300, 3, 0.05);
    for target in Target::ALL {
        let model = train(ModelKind::GradientBoost, &data, target, &BTreeMap::new(), 3).expect("train");
        let report = importance_report(&model).expect("importance");
        let mut families = report.per_source.clone();
        families.sort_by(|a, b| b.1.total_cmp(&a.1));
        let line: Vec<String> = families.iter().map(|(name, v)| format!("{name}={v:.1}")).collect();
        println!("{:<8} {}", target.as_str(), line.join(" "));
    }
}
